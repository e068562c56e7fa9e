# core/domain/tensor.py
"""
Diferenciación automática en modo reverso sobre tensores densos float64.

Cada operación diferenciable calcula su salida con NumPy y, si hay una
`ComputationTape` activa y alguna entrada participa del grafo, registra la
función de retropropagación en la cinta. `backward` recorre la cinta en el orden
inverso exacto de registro y deposita los gradientes en las hojas con
`requires_grad=True`.

Sin cinta activa las operaciones no registran nada (modo evaluación).
"""
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from core.shared.exceptions import (
    ContractViolationException,
    DimensionError,
    IndiceFueraDeRangoError,
    ValorNoFinitoError,
)

_estado_local = threading.local()


class Tensor:
    """
    Arreglo denso float64 con gradiente opcional.

    `data` nunca es compartido con el llamador: el constructor siempre copia.
    """
    __slots__ = ("data", "requires_grad", "grad", "_registro")

    def __init__(self, data, requires_grad: bool = False):
        datos = np.array(data, dtype=np.float64)
        if not np.all(np.isfinite(datos)):
            raise ValorNoFinitoError("No se puede construir un Tensor con NaN/Inf.")
        self.data = datos
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._registro: Optional["RegistroOperacion"] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def es_hoja(self) -> bool:
        return self._registro is None

    def item(self) -> float:
        if self.size != 1:
            raise ContractViolationException(f"item() requiere un escalar; forma {self.shape}.")
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, otro: "Tensor") -> "Tensor":
        return add(self, otro)

    def __mul__(self, otro: "Tensor") -> "Tensor":
        return multiply(self, otro)

    def __matmul__(self, otro: "Tensor") -> "Tensor":
        return matmul(self, otro)


@dataclass
class RegistroOperacion:
    op: str
    salida: Tensor
    entradas: Tuple[Tensor, ...]
    retro: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]
    cinta: "ComputationTape"
    indice: int


class ComputationTape:
    """
    Lista ordenada de operaciones registradas. Se usa como context manager:

        with ComputationTape():
            loss = lm_loss(params, tokens)
            backward(loss)

    Es por hilo: dos evaluaciones en hilos distintos no comparten cinta.
    """

    def __init__(self):
        self.registros: List[RegistroOperacion] = []

    def registrar(self, op: str, salida: Tensor, entradas: Tuple[Tensor, ...], retro) -> None:
        registro = RegistroOperacion(op, salida, entradas, retro, self, len(self.registros))
        self.registros.append(registro)
        salida._registro = registro

    def __len__(self) -> int:
        return len(self.registros)

    def __enter__(self) -> "ComputationTape":
        _pila_cintas().append(self)
        return self

    def __exit__(self, *exc) -> bool:
        _pila_cintas().pop()
        return False


def _pila_cintas() -> List[Optional[ComputationTape]]:
    pila = getattr(_estado_local, "pila", None)
    if pila is None:
        pila = []
        _estado_local.pila = pila
    return pila


def cinta_activa() -> Optional[ComputationTape]:
    pila = _pila_cintas()
    return pila[-1] if pila else None


@contextmanager
def sin_cinta():
    """Suspende el registro: las operaciones dentro del bloque no entran en ninguna cinta."""
    pila = _pila_cintas()
    pila.append(None)
    try:
        yield
    finally:
        pila.pop()


def _rastreado(t: Tensor) -> bool:
    return t.requires_grad or t._registro is not None


def _resultado(op: str, datos: np.ndarray, entradas: Tuple[Tensor, ...], retro) -> Tensor:
    if not np.all(np.isfinite(datos)):
        raise ValorNoFinitoError(f"La operación '{op}' produjo valores no finitos.")
    salida = Tensor.__new__(Tensor)
    salida.data = datos
    salida.requires_grad = False
    salida.grad = None
    salida._registro = None
    cinta = cinta_activa()
    if cinta is not None and any(_rastreado(t) for t in entradas):
        cinta.registrar(op, salida, entradas, retro)
    return salida


def _exigir_2d(op: str, *tensores: Tensor) -> None:
    for t in tensores:
        if t.data.ndim != 2:
            raise DimensionError(f"{op}: se esperaba una matriz, forma {t.shape}.")


def _exigir_misma_forma(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: formas incompatibles {a.shape} y {b.shape}.")


# =============================================================================
# OPERACIONES
# =============================================================================

def matmul(a: Tensor, b: Tensor) -> Tensor:
    _exigir_2d("matmul", a, b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: dimensiones internas no coinciden {a.shape} x {b.shape}.")
    A, B = a.data, b.data

    def retro(g):
        return g @ B.T, A.T @ g

    return _resultado("matmul", A @ B, (a, b), retro)


def add(a: Tensor, b: Tensor) -> Tensor:
    _exigir_misma_forma("add", a, b)

    def retro(g):
        return g, g

    return _resultado("add", a.data + b.data, (a, b), retro)


def multiply(a: Tensor, b: Tensor) -> Tensor:
    _exigir_misma_forma("multiply", a, b)
    A, B = a.data, b.data

    def retro(g):
        return g * B, g * A

    return _resultado("multiply", A * B, (a, b), retro)


def scale(a: Tensor, factor: float) -> Tensor:
    """Producto por una constante (no diferenciable respecto al factor)."""
    factor = float(factor)

    def retro(g):
        return (g * factor,)

    return _resultado("scale", a.data * factor, (a,), retro)


def silu(a: Tensor) -> Tensor:
    x = a.data
    # tanh evita el overflow de exp(-x) para x muy negativos
    sig = 0.5 * (1.0 + np.tanh(0.5 * x))

    def retro(g):
        return (g * sig * (1.0 + x * (1.0 - sig)),)

    return _resultado("silu", x * sig, (a,), retro)


def rms_normalize(x: Tensor, escala: Tensor, eps: float = 1e-6) -> Tensor:
    """RMSNorm por filas: x / sqrt(mean(x^2) + eps) * escala."""
    _exigir_2d("rms_normalize", x)
    if escala.shape != (x.shape[1],):
        raise DimensionError(f"rms_normalize: escala {escala.shape} no encaja con {x.shape}.")
    X, s = x.data, escala.data
    r = np.sqrt(np.mean(X * X, axis=1, keepdims=True) + eps)
    n = X / r

    def retro(g):
        dn = g * s
        dx = (dn - n * np.mean(dn * n, axis=1, keepdims=True)) / r
        return dx, np.sum(g * n, axis=0)

    return _resultado("rms_normalize", n * s, (x, escala), retro)


def softmax_rows(x: Tensor, causal: bool = False) -> Tensor:
    """
    Softmax por filas. Con `causal=True` la entrada (i, j) con j > i recibe
    probabilidad cero exacta.
    """
    _exigir_2d("softmax_rows", x)
    X = x.data
    if causal:
        filas, columnas = X.shape
        mascara = np.triu(np.ones((filas, columnas), dtype=bool), k=1)
        maximo = np.max(np.where(mascara, -np.inf, X), axis=1, keepdims=True)
        e = np.where(mascara, 0.0, np.exp(np.where(mascara, 0.0, X - maximo)))
    else:
        e = np.exp(X - np.max(X, axis=1, keepdims=True))
    y = e / np.sum(e, axis=1, keepdims=True)

    def retro(g):
        return (y * (g - np.sum(g * y, axis=1, keepdims=True)),)

    return _resultado("softmax_rows", y, (x,), retro)


def embedding_gather(tabla: Tensor, ids: Sequence[int]) -> Tensor:
    _exigir_2d("embedding_gather", tabla)
    indices = np.asarray(list(ids), dtype=np.int64)
    if indices.ndim != 1 or indices.size == 0:
        raise DimensionError("embedding_gather: se requiere al menos un id.")
    fuera = indices[(indices < 0) | (indices >= tabla.shape[0])]
    if fuera.size:
        raise IndiceFueraDeRangoError(
            f"embedding_gather: ids {fuera.tolist()} fuera de [0, {tabla.shape[0]})."
        )
    forma = tabla.shape

    def retro(g):
        acumulado = np.zeros(forma, dtype=np.float64)
        np.add.at(acumulado, indices, g)
        return (acumulado,)

    return _resultado("embedding_gather", tabla.data[indices], (tabla,), retro)


def transpose(a: Tensor) -> Tensor:
    _exigir_2d("transpose", a)

    def retro(g):
        return (g.T.copy(),)

    return _resultado("transpose", a.data.T.copy(), (a,), retro)


def reshape(a: Tensor, forma: Sequence[int]) -> Tensor:
    forma = tuple(int(n) for n in forma)
    if int(np.prod(forma)) != a.size:
        raise DimensionError(f"reshape: {a.shape} no puede pasar a {forma}.")
    original = a.shape

    def retro(g):
        return (g.reshape(original).copy(),)

    return _resultado("reshape", a.data.reshape(forma).copy(), (a,), retro)


def concat_rows(tensores: Sequence[Tensor]) -> Tensor:
    tensores = tuple(tensores)
    _exigir_2d("concat_rows", *tensores)
    columnas = {t.shape[1] for t in tensores}
    if len(columnas) != 1:
        raise DimensionError(f"concat_rows: columnas distintas {[t.shape for t in tensores]}.")
    cortes = np.cumsum([t.shape[0] for t in tensores])[:-1]

    def retro(g):
        return tuple(parte.copy() for parte in np.split(g, cortes, axis=0))

    return _resultado("concat_rows", np.concatenate([t.data for t in tensores], axis=0), tensores, retro)


def concat_cols(tensores: Sequence[Tensor]) -> Tensor:
    tensores = tuple(tensores)
    _exigir_2d("concat_cols", *tensores)
    filas = {t.shape[0] for t in tensores}
    if len(filas) != 1:
        raise DimensionError(f"concat_cols: filas distintas {[t.shape for t in tensores]}.")
    cortes = np.cumsum([t.shape[1] for t in tensores])[:-1]

    def retro(g):
        return tuple(parte.copy() for parte in np.split(g, cortes, axis=1))

    return _resultado("concat_cols", np.concatenate([t.data for t in tensores], axis=1), tensores, retro)


def slice_rows(a: Tensor, inicio: int, fin: int) -> Tensor:
    _exigir_2d("slice_rows", a)
    if not 0 <= inicio < fin <= a.shape[0]:
        raise DimensionError(f"slice_rows: rango [{inicio}, {fin}) inválido para {a.shape}.")
    forma = a.shape

    def retro(g):
        completo = np.zeros(forma, dtype=np.float64)
        completo[inicio:fin] = g
        return (completo,)

    return _resultado("slice_rows", a.data[inicio:fin].copy(), (a,), retro)


def slice_cols(a: Tensor, inicio: int, fin: int) -> Tensor:
    _exigir_2d("slice_cols", a)
    if not 0 <= inicio < fin <= a.shape[1]:
        raise DimensionError(f"slice_cols: rango [{inicio}, {fin}) inválido para {a.shape}.")
    forma = a.shape

    def retro(g):
        completo = np.zeros(forma, dtype=np.float64)
        completo[:, inicio:fin] = g
        return (completo,)

    return _resultado("slice_cols", a.data[:, inicio:fin].copy(), (a,), retro)


def cross_entropy_from_logits(logits: Tensor, targets: Sequence[int]) -> Tensor:
    """
    Media por posición de -log softmax(logits)[target].
    Gradiente: (softmax(logits) - onehot(targets)) / L.
    """
    _exigir_2d("cross_entropy_from_logits", logits)
    objetivos = np.asarray(list(targets), dtype=np.int64)
    L, V = logits.shape
    if L < 1 or objetivos.shape != (L,):
        raise DimensionError(
            f"cross_entropy_from_logits: {objetivos.shape[0]} objetivos para logits {logits.shape}."
        )
    fuera = objetivos[(objetivos < 0) | (objetivos >= V)]
    if fuera.size:
        raise IndiceFueraDeRangoError(f"cross_entropy: objetivos {fuera.tolist()} fuera de [0, {V}).")

    X = logits.data
    maximo = np.max(X, axis=1, keepdims=True)
    lse = maximo + np.log(np.sum(np.exp(X - maximo), axis=1, keepdims=True))
    filas = np.arange(L)
    nll = lse[:, 0] - X[filas, objetivos]

    def retro(g):
        p = np.exp(X - lse)
        p[filas, objetivos] -= 1.0
        return (p * (g / L),)

    return _resultado("cross_entropy", np.array(np.mean(nll)), (logits,), retro)


# =============================================================================
# RETROPROPAGACIÓN
# =============================================================================

def backward(loss: Tensor) -> None:
    """
    Propaga d(loss)/d(hoja) a todas las hojas con requires_grad. Los gradientes
    se acumulan sobre `grad` existente hasta que el llamador los limpie.
    """
    if loss.size != 1:
        raise ContractViolationException(f"backward requiere una pérdida escalar; forma {loss.shape}.")
    registro_final = loss._registro
    if registro_final is None:
        raise ContractViolationException("La pérdida no está registrada en ninguna cinta.")

    registros = registro_final.cinta.registros[: registro_final.indice + 1]
    grads = {id(loss): np.ones_like(loss.data)}
    hojas = {}

    for registro in reversed(registros):
        g = grads.pop(id(registro.salida), None)
        if g is None:
            continue
        parciales = registro.retro(g)
        for entrada, parcial in zip(registro.entradas, parciales):
            if parcial is None or not _rastreado(entrada):
                continue
            if entrada.es_hoja:
                hojas[id(entrada)] = entrada
            previo = grads.get(id(entrada))
            grads[id(entrada)] = parcial if previo is None else previo + parcial

    for clave, hoja in hojas.items():
        g = grads[clave]
        hoja.grad = g.copy() if hoja.grad is None else hoja.grad + g
