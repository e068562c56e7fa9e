# core/domain/metricas.py
"""
BLEU a nivel de oración.

Convenciones fijas:
- tokens por espacios en blanco, en minúsculas;
- orden máximo 4, limitado a la longitud de la referencia (bleu(x, x) = 1);
- un conteo recortado nulo se sustituye por EPSILON / total de n-gramas del candidato;
- penalización por brevedad estándar; candidato vacío -> 0.
"""
import math
from collections import Counter
from typing import List, Sequence, Tuple

from core.shared.exceptions import DatosInvalidosError

ORDEN_MAXIMO = 4
EPSILON = 1e-9


def tokens_bleu(texto: str) -> List[str]:
    return texto.lower().split()


def _ngramas(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def precision_modificada(candidato: Sequence[str], referencia: Sequence[str], n: int) -> Tuple[int, int]:
    """(conteo recortado, total de n-gramas del candidato)."""
    cand = _ngramas(candidato, n)
    ref = _ngramas(referencia, n)
    recortado = sum(min(c, ref[g]) for g, c in cand.items())
    return recortado, sum(cand.values())


def brevity_penalty(longitud_candidato: int, longitud_referencia: int) -> float:
    if longitud_candidato == 0:
        return 0.0
    if longitud_candidato > longitud_referencia:
        return 1.0
    return math.exp(1.0 - longitud_referencia / longitud_candidato)


def bleu(candidate: str, reference: str) -> float:
    ref = tokens_bleu(reference)
    if not ref:
        raise DatosInvalidosError("bleu: la referencia no puede estar vacía.")
    cand = tokens_bleu(candidate)
    if not cand:
        return 0.0

    orden = min(ORDEN_MAXIMO, len(ref))
    log_precisiones = 0.0
    for n in range(1, orden + 1):
        recortado, total = precision_modificada(cand, ref, n)
        if recortado == 0:
            p = EPSILON / max(total, 1)
        else:
            p = recortado / total
        log_precisiones += math.log(p)

    valor = brevity_penalty(len(cand), len(ref)) * math.exp(log_precisiones / orden)
    return min(1.0, max(0.0, valor))
