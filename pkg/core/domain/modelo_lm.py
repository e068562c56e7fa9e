# core/domain/modelo_lm.py
"""
Modelo de lenguaje decoder-only estilo LLaMA, de tamaño de escritorio.

Arquitectura: embeddings de token + posiciones aprendidas, H bloques pre-norm
(RMSNorm -> atención causal multi-cabeza -> residual, RMSNorm -> MLP con
silu(gate) * up -> down -> residual), RMSNorm final y cabeza de salida atada a
`token_embedding`.

Solo las siete matrices por capa de `TipoComponente` son "componentes": las
posiciones, las normas y la cabeza atada nunca participan en importancia ni fusión.
"""
import hashlib
import math
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from core.domain.tensor import (
    Tensor,
    add,
    concat_cols,
    cross_entropy_from_logits,
    embedding_gather,
    matmul,
    multiply,
    rms_normalize,
    scale,
    silu,
    sin_cinta,
    slice_cols,
    slice_rows,
    softmax_rows,
    transpose,
)
from core.shared.enums import TipoComponente
from core.shared.exceptions import (
    ArquitecturaIncompatibleError,
    ConfiguracionError,
    ContractViolationException,
    DimensionError,
    EdicionDegeneradaError,
    GradienteFaltanteError,
    LongitudExcedidaError,
)

TOKEN_EMBEDDING = "token_embedding"
POSITION_EMBEDDING = "position_embedding"
FINAL_NORM = "final_norm"


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int = 512
    dim: int = 64
    n_layers: int = 2
    n_heads: int = 4
    mlp_hidden: int = 128
    max_seq_len: int = 256
    seed: int = 0

    def __post_init__(self):
        for campo in ("vocab_size", "dim", "n_layers", "n_heads", "mlp_hidden", "max_seq_len"):
            valor = getattr(self, campo)
            if not isinstance(valor, int) or valor < 1:
                raise ConfiguracionError(f"ModelConfig.{campo} debe ser un entero positivo (recibido {valor!r}).")
        if self.dim % self.n_heads != 0:
            raise ConfiguracionError(f"dim={self.dim} no es divisible por n_heads={self.n_heads}.")
        if self.max_seq_len < 2:
            raise ConfiguracionError("max_seq_len debe ser >= 2.")

    @property
    def head_dim(self) -> int:
        return self.dim // self.n_heads

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, datos: dict) -> "ModelConfig":
        return cls(**{k: int(v) for k, v in datos.items()})


@dataclass(frozen=True)
class ComponentId:
    layer: int
    kind: TipoComponente

    @property
    def nombre(self) -> str:
        return f"layers.{self.layer}.{self.kind.value}"

    @property
    def clave_orden(self) -> Tuple[int, int]:
        return (self.layer, self.kind.orden)

    def __lt__(self, otro: "ComponentId") -> bool:
        return self.clave_orden < otro.clave_orden

    def __str__(self) -> str:
        return self.nombre


def component_ids(config: ModelConfig) -> List[ComponentId]:
    """Enumeración estable: capa mayor, tipo en el orden de `TipoComponente`."""
    return [ComponentId(capa, tipo) for capa in range(config.n_layers) for tipo in TipoComponente]


def formas_parametros(config: ModelConfig) -> Dict[str, Tuple[int, ...]]:
    d, m = config.dim, config.mlp_hidden
    formas: Dict[str, Tuple[int, ...]] = {
        TOKEN_EMBEDDING: (config.vocab_size, d),
        POSITION_EMBEDDING: (config.max_seq_len, d),
    }
    forma_componente = {
        TipoComponente.ATTN_Q: (d, d),
        TipoComponente.ATTN_K: (d, d),
        TipoComponente.ATTN_V: (d, d),
        TipoComponente.ATTN_O: (d, d),
        TipoComponente.MLP_GATE: (d, m),
        TipoComponente.MLP_UP: (d, m),
        TipoComponente.MLP_DOWN: (m, d),
    }
    for capa in range(config.n_layers):
        formas[f"layers.{capa}.attn_norm"] = (d,)
        formas[f"layers.{capa}.mlp_norm"] = (d,)
        for tipo in TipoComponente:
            formas[ComponentId(capa, tipo).nombre] = forma_componente[tipo]
    formas[FINAL_NORM] = (d,)
    return formas


class ModelParams:
    """
    Conjunto completo de parámetros, direccionable por nombre o por ComponentId.
    """

    def __init__(self, config: ModelConfig, tensores: Dict[str, Tensor]):
        formas = formas_parametros(config)
        if set(tensores) != set(formas):
            faltan = sorted(set(formas) - set(tensores))
            sobran = sorted(set(tensores) - set(formas))
            raise ArquitecturaIncompatibleError(f"Parámetros inválidos. Faltan: {faltan}. Sobran: {sobran}.")
        for nombre, forma in formas.items():
            if tensores[nombre].shape != forma:
                raise DimensionError(f"{nombre}: forma {tensores[nombre].shape}, se esperaba {forma}.")
        self.config = config
        self.tensores: Dict[str, Tensor] = {nombre: tensores[nombre] for nombre in formas}

    # --- Acceso ---

    def __getitem__(self, nombre: str) -> Tensor:
        return self.tensores[nombre]

    def nombres(self) -> List[str]:
        return list(self.tensores)

    def component_ids(self) -> List[ComponentId]:
        return component_ids(self.config)

    def component(self, cid: ComponentId) -> Tensor:
        if not 0 <= cid.layer < self.config.n_layers:
            raise ContractViolationException(f"Capa {cid.layer} fuera de [0, {self.config.n_layers}).")
        return self.tensores[cid.nombre]

    @property
    def token_embedding(self) -> Tensor:
        return self.tensores[TOKEN_EMBEDDING]

    def parameter_count(self) -> int:
        return sum(t.size for t in self.tensores.values())

    # --- Copias y gradientes ---

    def deep_clone(self) -> "ModelParams":
        return ModelParams(
            self.config,
            {n: Tensor(t.data, requires_grad=t.requires_grad) for n, t in self.tensores.items()},
        )

    def set_requires_grad(self, valor: bool = True) -> None:
        for t in self.tensores.values():
            t.requires_grad = valor

    def zero_grad(self) -> None:
        for t in self.tensores.values():
            t.zero_grad()

    def grads(self) -> Dict[str, np.ndarray]:
        """Gradientes por nombre; un parámetro sin gradiente aporta ceros."""
        return {
            n: (t.grad if t.grad is not None else np.zeros_like(t.data))
            for n, t in self.tensores.items()
        }

    def component_grads(self) -> Dict[ComponentId, np.ndarray]:
        resultado = {}
        for cid in self.component_ids():
            grad = self.component(cid).grad
            if grad is None:
                raise GradienteFaltanteError(f"Sin gradiente para {cid.nombre}.")
            resultado[cid] = grad.copy()
        return resultado

    # --- Identidad ---

    def misma_arquitectura(self, otro: "ModelParams") -> bool:
        return formas_parametros(self.config) == formas_parametros(otro.config)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for nombre, t in self.tensores.items():
            h.update(nombre.encode("utf-8"))
            h.update(str(t.shape).encode("utf-8"))
            h.update(np.ascontiguousarray(t.data).tobytes())
        return h.hexdigest()

    def to_arrays(self) -> Dict[str, np.ndarray]:
        return {n: t.data.copy() for n, t in self.tensores.items()}

    @classmethod
    def from_arrays(cls, config: ModelConfig, arreglos: Dict[str, np.ndarray]) -> "ModelParams":
        return cls(config, {n: Tensor(a) for n, a in arreglos.items()})


# =============================================================================
# CONSTRUCCIÓN
# =============================================================================

def init_model(config: ModelConfig) -> ModelParams:
    """
    Inicialización uniforme escalada, determinista por `config.seed`.
    Matrices: U(-1/sqrt(fan_in), 1/sqrt(fan_in)). Embeddings: U(-0.5/sqrt(d), 0.5/sqrt(d)).
    Normas: unos.
    """
    rng = np.random.default_rng(config.seed)
    tensores = {}
    for nombre, forma in formas_parametros(config).items():
        if len(forma) == 1:
            datos = np.ones(forma)
        elif nombre in (TOKEN_EMBEDDING, POSITION_EMBEDDING):
            limite = 0.5 / math.sqrt(config.dim)
            datos = rng.uniform(-limite, limite, size=forma)
        else:
            limite = 1.0 / math.sqrt(forma[0])
            datos = rng.uniform(-limite, limite, size=forma)
        tensores[nombre] = Tensor(datos, requires_grad=True)
    return ModelParams(config, tensores)


# =============================================================================
# FORWARD
# =============================================================================

def embed(params: ModelParams, tokens: Sequence[int]) -> Tensor:
    return embedding_gather(params.token_embedding, tokens)


def _atencion(params: ModelParams, capa: int, x: Tensor) -> Tensor:
    cfg = params.config
    comp = lambda tipo: params.component(ComponentId(capa, tipo))
    q = matmul(x, comp(TipoComponente.ATTN_Q))
    k = matmul(x, comp(TipoComponente.ATTN_K))
    v = matmul(x, comp(TipoComponente.ATTN_V))

    dh = cfg.head_dim
    factor = 1.0 / math.sqrt(dh)
    cabezas = []
    for cabeza in range(cfg.n_heads):
        i, j = cabeza * dh, (cabeza + 1) * dh
        qh, kh, vh = slice_cols(q, i, j), slice_cols(k, i, j), slice_cols(v, i, j)
        pesos = softmax_rows(scale(matmul(qh, transpose(kh)), factor), causal=True)
        cabezas.append(matmul(pesos, vh))
    return matmul(concat_cols(cabezas), comp(TipoComponente.ATTN_O))


def _mlp(params: ModelParams, capa: int, x: Tensor) -> Tensor:
    comp = lambda tipo: params.component(ComponentId(capa, tipo))
    compuerta = silu(matmul(x, comp(TipoComponente.MLP_GATE)))
    arriba = matmul(x, comp(TipoComponente.MLP_UP))
    return matmul(multiply(compuerta, arriba), comp(TipoComponente.MLP_DOWN))


def forward_from_embeddings(params: ModelParams, E: Tensor) -> Tensor:
    """Logits [L x V] a partir de una matriz de embeddings [L x d] (posiblemente perturbada)."""
    cfg = params.config
    if E.data.ndim != 2 or E.shape[1] != cfg.dim:
        raise DimensionError(f"Embeddings {E.shape} incompatibles con dim={cfg.dim}.")
    L = E.shape[0]
    if L > cfg.max_seq_len:
        raise LongitudExcedidaError(f"Secuencia de {L} tokens supera max_seq_len={cfg.max_seq_len}.")

    h = add(E, embedding_gather(params[POSITION_EMBEDDING], range(L)))
    for capa in range(cfg.n_layers):
        h = add(h, _atencion(params, capa, rms_normalize(h, params[f"layers.{capa}.attn_norm"])))
        h = add(h, _mlp(params, capa, rms_normalize(h, params[f"layers.{capa}.mlp_norm"])))
    n = rms_normalize(h, params[FINAL_NORM])
    return matmul(n, transpose(params.token_embedding))


def lm_loss(params: ModelParams, tokens: Sequence[int], E_override: Optional[Tensor] = None) -> Tensor:
    """
    Entropía cruzada media de siguiente token. Con `E_override` la pasada usa
    esos embeddings en lugar de embed(tokens).
    """
    tokens = list(tokens)
    if len(tokens) < 2:
        raise EdicionDegeneradaError("Se requieren al menos 2 tokens para una pérdida de siguiente token.")
    E = E_override if E_override is not None else embed(params, tokens)
    if E.shape[0] != len(tokens):
        raise DimensionError(f"E_override con {E.shape[0]} filas para {len(tokens)} tokens.")
    logits = forward_from_embeddings(params, slice_rows(E, 0, len(tokens) - 1))
    return cross_entropy_from_logits(logits, tokens[1:])


def generate_greedy(
    params: ModelParams,
    prompt: Sequence[int],
    max_new: int,
    eos_id: Optional[int] = None,
) -> List[int]:
    """
    Decodificación argmax determinista. Empates: el id más bajo (np.argmax).
    Si el contexto excede max_seq_len se conservan los últimos tokens.
    """
    ids = list(prompt)
    if not ids:
        raise ContractViolationException("generate_greedy requiere un prompt no vacío.")
    nuevos: List[int] = []
    with sin_cinta():
        for _ in range(max(0, int(max_new))):
            contexto = ids[-params.config.max_seq_len:]
            logits = forward_from_embeddings(params, embed(params, contexto))
            siguiente = int(np.argmax(logits.data[-1]))
            if eos_id is not None and siguiente == eos_id:
                break
            nuevos.append(siguiente)
            ids.append(siguiente)
    return nuevos


def iterar_componentes(params: ModelParams) -> Iterable[Tuple[ComponentId, Tensor]]:
    for cid in params.component_ids():
        yield cid, params.component(cid)
