# core/domain/fusion.py
"""
Fusión de parámetros guiada por conocimiento.

1. Importancia por componente: |<theta_c, dL/dtheta_c>| (término de primer orden
   de Taylor), promediada sobre los pasos del optimizador de la edición actual.
2. Selección del top-k% de componentes.
3. Combinación convexa beta*theta0 + gamma*theta_prev + eta*theta_cur sobre los
   componentes seleccionados; todo lo demás se toma de theta_cur.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Sequence, Set

import numpy as np

from core.domain.modelo_lm import ComponentId, ModelParams, lm_loss
from core.domain.tensor import Tensor, sin_cinta
from core.shared.exceptions import (
    ArquitecturaIncompatibleError,
    ConfiguracionError,
    DimensionError,
    GradienteFaltanteError,
    SumaCoeficientesError,
)

TOLERANCIA_SUMA = 1e-12


@dataclass(frozen=True)
class FusionCoefficients:
    beta: float = 0.2
    gamma: float = 0.3
    eta: float = 0.5
    k_percent: float = 20.0

    def __post_init__(self):
        for nombre in ("beta", "gamma", "eta"):
            valor = getattr(self, nombre)
            if not 0.0 <= valor <= 1.0:
                raise ConfiguracionError(f"fusion.{nombre}={valor} fuera de [0, 1].")
        if not 0.0 <= self.k_percent <= 100.0:
            raise ConfiguracionError(f"fusion.k={self.k_percent} fuera de [0, 100].")
        suma = self.beta + self.gamma + self.eta
        if abs(suma - 1.0) > TOLERANCIA_SUMA:
            raise SumaCoeficientesError(f"beta + gamma + eta = {suma!r}, debe ser 1.")


@dataclass(frozen=True)
class ImportanceLedger:
    """Sumas acumuladas por componente; `scores()` devuelve la media corrida."""
    component_ids: tuple
    sumas: Mapping[ComponentId, float] = field(default_factory=dict)
    step_count: int = 0

    @classmethod
    def vacio(cls, ids: Iterable[ComponentId]) -> "ImportanceLedger":
        ids = tuple(sorted(ids))
        return cls(ids, {cid: 0.0 for cid in ids}, 0)

    def scores(self) -> Dict[ComponentId, float]:
        if self.step_count == 0:
            return {cid: 0.0 for cid in self.component_ids}
        return {cid: self.sumas[cid] / self.step_count for cid in self.component_ids}

    def __len__(self) -> int:
        return len(self.component_ids)


def component_importance(theta_c: np.ndarray, grad_c: np.ndarray) -> float:
    theta_c = np.asarray(theta_c, dtype=np.float64)
    grad_c = np.asarray(grad_c, dtype=np.float64)
    if theta_c.shape != grad_c.shape:
        raise DimensionError(f"component_importance: theta {theta_c.shape} vs grad {grad_c.shape}.")
    return abs(float(np.sum(theta_c * grad_c)))


def accumulate_importance(
    ledger: ImportanceLedger,
    params: ModelParams,
    grads: Mapping[ComponentId, np.ndarray],
) -> ImportanceLedger:
    faltantes = [cid.nombre for cid in ledger.component_ids if cid not in grads]
    if faltantes:
        raise GradienteFaltanteError(f"Faltan gradientes para: {', '.join(faltantes)}.")
    sumas = {
        cid: ledger.sumas[cid] + component_importance(params.component(cid).data, grads[cid])
        for cid in ledger.component_ids
    }
    return ImportanceLedger(ledger.component_ids, sumas, ledger.step_count + 1)


def registrar_puntajes(ledger: ImportanceLedger, puntajes: Mapping[ComponentId, float]) -> ImportanceLedger:
    """Suma un paso con puntajes ya calculados (modo exacto)."""
    sumas = {cid: ledger.sumas[cid] + float(puntajes[cid]) for cid in ledger.component_ids}
    return ImportanceLedger(ledger.component_ids, sumas, ledger.step_count + 1)


def exact_component_importance(params: ModelParams, tokens: Sequence[int]) -> Dict[ComponentId, float]:
    """|L(theta) - L(theta | theta_c = 0)| para cada componente. Una pasada por componente."""
    copia = params.deep_clone()
    with sin_cinta():
        base = lm_loss(copia, tokens).item()
        puntajes = {}
        for cid in copia.component_ids():
            original = copia.tensores[cid.nombre]
            copia.tensores[cid.nombre] = Tensor(np.zeros_like(original.data))
            puntajes[cid] = abs(base - lm_loss(copia, tokens).item())
            copia.tensores[cid.nombre] = original
    return puntajes


def cantidad_seleccion(k_percent: float, n: int) -> int:
    """ceil(k * n / 100) en aritmética exacta."""
    return min(n, math.ceil(Fraction(k_percent) * n / 100))


def select_top_k(ledger: ImportanceLedger, k_percent: float) -> Set[ComponentId]:
    if not 0.0 <= k_percent <= 100.0:
        raise ConfiguracionError(f"k={k_percent} fuera de [0, 100].")
    return set(ranking(ledger)[: cantidad_seleccion(k_percent, len(ledger))])


def ranking(ledger: ImportanceLedger) -> List[ComponentId]:
    """Mayor puntaje primero; empates por (capa, tipo) ascendente."""
    puntajes = ledger.scores()
    return sorted(ledger.component_ids, key=lambda cid: (-puntajes[cid], cid.clave_orden))


def fuse_parameters(
    theta0: ModelParams,
    theta_prev: ModelParams,
    theta_cur: ModelParams,
    selected: Iterable[ComponentId],
    c: FusionCoefficients,
) -> ModelParams:
    suma = c.beta + c.gamma + c.eta
    if abs(suma - 1.0) > TOLERANCIA_SUMA:
        raise SumaCoeficientesError(f"beta + gamma + eta = {suma!r}, debe ser 1.")
    if not (theta0.misma_arquitectura(theta_cur) and theta_prev.misma_arquitectura(theta_cur)):
        raise ArquitecturaIncompatibleError("Los tres modelos a fusionar deben compartir arquitectura.")

    fusionado = theta_cur.deep_clone()
    for cid in selected:
        a = theta0.component(cid).data
        b = theta_prev.component(cid).data
        x = theta_cur.component(cid).data
        mezcla = c.beta * a + c.gamma * b + c.eta * x
        # la combinación convexa se mantiene dentro de [min, max] de las fuentes elemento a elemento
        bajo = np.minimum(np.minimum(a, b), x)
        alto = np.maximum(np.maximum(a, b), x)
        fusionado.tensores[cid.nombre] = Tensor(np.clip(mezcla, bajo, alto), requires_grad=True)
    return fusionado
