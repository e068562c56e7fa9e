# core/services/evaluacion.py
"""
Evaluación multi-rango: BLEU sobre respuestas generadas de forma codiciosa y
perplejidad por token de la respuesta de referencia (teacher forcing).
"""
import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.domain.edicion import EditInstance, RankedQuery
from core.domain.metricas import bleu
from core.domain.modelo_lm import ModelParams, embed, forward_from_embeddings, generate_greedy
from core.domain.reportes import EvalReport
from core.domain.tensor import sin_cinta
from core.domain.tokenizer import Tokenizer, normalize, tokenize
from core.shared.enums import ModoEvaluacion, RangoConsulta
from core.shared.exceptions import ConfiguracionError, DatosInvalidosError, LongitudExcedidaError

logger = logging.getLogger(__name__)

Generador = Callable[..., List[int]]


def ids_respuesta(answer: str, tokenizer: Tokenizer) -> List[int]:
    """La respuesta continúa a la pregunta tras un espacio."""
    ids = tokenizer.encode(" " + normalize(answer))
    if not normalize(answer):
        raise DatosInvalidosError("La respuesta de referencia está vacía.")
    return ids


def ppl_from_ids(params: ModelParams, query_ids: Sequence[int], answer_ids: Sequence[int]) -> float:
    """exp(media de -log p(respuesta_i | pregunta, respuesta_<i))."""
    query_ids, answer_ids = list(query_ids), list(answer_ids)
    if not answer_ids:
        raise DatosInvalidosError("La respuesta debe tener al menos un token.")
    if not query_ids:
        raise DatosInvalidosError("La pregunta debe tener al menos un token.")
    maximo = params.config.max_seq_len
    if len(query_ids) + len(answer_ids) > maximo:
        disponible = maximo - len(answer_ids)
        if disponible < 1:
            raise LongitudExcedidaError(f"Respuesta de {len(answer_ids)} tokens no cabe en max_seq_len={maximo}.")
        logger.warning(f"Pregunta de {len(query_ids)} tokens truncada por la izquierda a {disponible}.")
        query_ids = query_ids[-disponible:]

    secuencia = query_ids + answer_ids
    with sin_cinta():
        logits = forward_from_embeddings(params, embed(params, secuencia[:-1])).data
    posiciones = np.arange(len(query_ids) - 1, len(secuencia) - 1)
    filas = logits[posiciones]
    maximos = filas.max(axis=1, keepdims=True)
    lse = maximos[:, 0] + np.log(np.exp(filas - maximos).sum(axis=1))
    nll = lse - filas[np.arange(len(answer_ids)), answer_ids]
    return float(math.exp(float(np.mean(nll))))


def per_token_ppl(params: ModelParams, query: str, answer: str, tokenizer: Tokenizer) -> float:
    return ppl_from_ids(params, tokenize(query, tokenizer), ids_respuesta(answer, tokenizer))


def recortar_en(texto: str, stop_text: Optional[str]) -> str:
    if stop_text and stop_text in texto:
        return texto[: texto.index(stop_text)]
    return texto


class EvaluadorMultiRango:
    """
    Puntúa consultas por rango sobre una instantánea inmutable de parámetros.
    `generador` permite sustituir la decodificación (p. ej. un eco en tests).
    """

    def __init__(
        self,
        tokenizer: Tokenizer,
        max_new: int = 32,
        stop_text: Optional[str] = ".",
        generador: Generador = generate_greedy,
    ):
        self.tokenizer = tokenizer
        self.max_new = max_new
        self.stop_text = stop_text
        self.generador = generador

    def responder(self, params: ModelParams, question: str) -> str:
        prompt = tokenize(question, self.tokenizer)
        limite = params.config.max_seq_len - 1
        if len(prompt) > limite:
            logger.warning(f"Prompt de {len(prompt)} tokens truncado por la izquierda a {limite}.")
            prompt = prompt[-limite:]
        ids = self.generador(params, prompt, self.max_new, eos_id=self.tokenizer.eos_id)
        return recortar_en(self.tokenizer.decode(ids), self.stop_text).strip()

    def puntuar(self, params: ModelParams, query: RankedQuery) -> Tuple[float, float]:
        candidato = self.responder(params, query.question)
        return (
            bleu(candidato, query.answer),
            per_token_ppl(params, query.question, query.answer, self.tokenizer),
        )

    def _reporte(
        self,
        params: ModelParams,
        consultas: Sequence[RankedQuery],
        modo: ModoEvaluacion,
        step: int,
        n_instancias: int,
    ) -> EvalReport:
        bleus: Dict[RangoConsulta, List[float]] = {r: [] for r in RangoConsulta}
        ppls: Dict[RangoConsulta, List[float]] = {r: [] for r in RangoConsulta}
        for consulta in consultas:
            b, p = self.puntuar(params, consulta)
            bleus[consulta.rank].append(b)
            ppls[consulta.rank].append(p)
        return EvalReport(
            mode=modo,
            step=step,
            bleu={r: float(np.mean(v)) for r, v in bleus.items()},
            ppl={r: float(np.mean(v)) for r, v in ppls.items()},
            n_instancias=n_instancias,
        )

    def evaluate_efficacy(self, params: ModelParams, inst: EditInstance, step: int = 0) -> EvalReport:
        return self._reporte(params, inst.queries, ModoEvaluacion.EFFICACY, step, 1)

    def evaluate_specificity(
        self,
        params: ModelParams,
        history: Sequence[EditInstance],
        coeff: float,
        rng: np.random.Generator,
        step: int = 0,
    ) -> EvalReport:
        consultas, n = muestrear_historial(history, coeff, rng)
        return self._reporte(params, consultas, ModoEvaluacion.SPECIFICITY, step, n)


def muestrear_historial(
    history: Sequence[EditInstance],
    coeff: float,
    rng: np.random.Generator,
) -> Tuple[List[RankedQuery], int]:
    """
    ceil(coeff * |history|) instancias sin reemplazo (en orden de historial) y,
    de cada una, una consulta por rango.
    """
    if not history:
        raise DatosInvalidosError("La especificidad requiere un historial no vacío.")
    if not 0 < coeff <= 1:
        raise ConfiguracionError(f"eval.coeff={coeff} fuera de (0, 1].")
    n = len(history)
    m = min(n, max(1, math.ceil(coeff * n)))
    elegidas = sorted(rng.choice(n, size=m, replace=False).tolist())
    consultas = []
    for i in elegidas:
        for rango in RangoConsulta:
            opciones = history[i].queries_por_rango(rango)
            consultas.append(opciones[int(rng.integers(len(opciones)))])
    return consultas, m
