# core/domain/perturbacion.py
"""
Perturbación latente de embeddings: ruido uniforme acotado sumado a cada
elemento de la matriz de embeddings durante el entrenamiento de una edición.
Nunca se aplica en evaluación ni generación.
"""
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from core.domain.tensor import Tensor, add, reshape
from core.shared.exceptions import ConfiguracionError, ContractViolationException


@dataclass(frozen=True)
class NoiseConfig:
    alpha: float = 5.0
    rng_seed: int = 0
    resample_each_step: bool = True

    def __post_init__(self):
        if not math.isfinite(self.alpha) or self.alpha < 0:
            raise ConfiguracionError(f"noise.alpha debe ser finito y >= 0 (recibido {self.alpha}).")


def noise_bound(L: int, d: int, alpha: float) -> float:
    """b = alpha / (sqrt(L) * d)."""
    if L < 1 or d < 1:
        raise ContractViolationException(f"noise_bound requiere L, d >= 1 (L={L}, d={d}).")
    return alpha / (math.sqrt(L) * d)


def sample_noise(forma: Tuple[int, int], cfg: NoiseConfig, rng: np.random.Generator) -> np.ndarray:
    L, d = forma
    b = noise_bound(L, d, cfg.alpha)
    ruido = rng.uniform(-b, b, size=forma)
    # uniform muestrea en [-b, b); el recorte garantiza el intervalo cerrado ante redondeos
    return np.clip(ruido, -b, b)


def perturb_embeddings(
    E: Tensor,
    cfg: NoiseConfig,
    rng: np.random.Generator,
    ruido: Optional[np.ndarray] = None,
) -> Tensor:
    """
    E~ = E + eps, eps ~ U[-b, b] elemento a elemento. Con alpha = 0 devuelve una
    copia exacta de E sin consumir el generador. `ruido` permite reutilizar una
    muestra fija cuando resample_each_step es falso.
    """
    if cfg.alpha == 0:
        return reshape(E, E.shape)
    if ruido is None:
        ruido = sample_noise(E.shape, cfg, rng)
    elif ruido.shape != E.shape:
        # la muestra fija se tomó para otra longitud (edición truncada distinta)
        ruido = sample_noise(E.shape, cfg, rng)
    return add(E, Tensor(ruido))
