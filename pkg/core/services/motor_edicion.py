# core/services/motor_edicion.py
"""
Motor de edición continua.

Por cada instancia del flujo:
  1. ajuste fino sobre una copia de theta_prev con la pérdida de siguiente token
     del texto de edición, perturbando los embeddings (salvo ablación);
  2. acumulación de importancia por componente durante esos pasos;
  3. fusión de theta0, theta_prev y el modelo recién ajustado;
  4. theta_prev <- resultado fusionado, t <- t + 1.

El flujo es estrictamente secuencial. Una divergencia deja el estado intacto.
"""
import copy
import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.domain.edicion import EditInstance
from core.domain.fusion import (
    FusionCoefficients,
    ImportanceLedger,
    accumulate_importance,
    exact_component_importance,
    fuse_parameters,
    ranking,
    registrar_puntajes,
    select_top_k,
)
from core.domain.modelo_lm import ModelParams, embed, lm_loss
from core.domain.perturbacion import NoiseConfig, perturb_embeddings, sample_noise
from core.domain.reportes import EvalReport, StepLog
from core.domain.tensor import ComputationTape, backward
from core.domain.tokenizer import Tokenizer, tokenize
from core.shared.enums import (
    CalendarioImportancia,
    ModoImportancia,
    PasadaImportancia,
    PoliticaDivergencia,
    TipoOptimizador,
)
from core.shared.exceptions import (
    BaseExcepcionDeNegocio,
    ConfiguracionError,
    DivergenciaError,
    EdicionDegeneradaError,
)

logger = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class EditRunConfig:
    epochs_per_edit: int = 30
    learning_rate: float = 1e-3
    optimizer: TipoOptimizador = TipoOptimizador.ADAM
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    fusion: FusionCoefficients = field(default_factory=FusionCoefficients)
    disable_lpa: bool = False
    disable_kpf: bool = False
    dpf_mode: bool = False
    pre_editing: bool = False
    importance_mode: ModoImportancia = ModoImportancia.TAYLOR
    importance_schedule: CalendarioImportancia = CalendarioImportancia.RUNNING_MEAN
    importance_pass: PasadaImportancia = PasadaImportancia.PERTURBED
    on_divergence: PoliticaDivergencia = PoliticaDivergencia.ABORT

    def __post_init__(self):
        if self.epochs_per_edit < 1:
            raise ConfiguracionError("engine.epochs_per_edit debe ser >= 1.")
        if not self.learning_rate > 0:
            raise ConfiguracionError("engine.lr debe ser positivo.")

    @property
    def usa_importancia(self) -> bool:
        return not (self.disable_kpf or self.dpf_mode or self.pre_editing)


@dataclass
class EstadoOptimizador:
    """Momentos de Adam por nombre de parámetro; se reinicia en cada edición."""
    paso: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


@dataclass(frozen=True)
class EditState:
    theta0: ModelParams
    theta_prev: ModelParams
    theta_live: ModelParams
    t: int
    rng: np.random.Generator
    rng_eval: np.random.Generator
    optimizer_state: EstadoOptimizador = field(default_factory=EstadoOptimizador)
    historial: Tuple[EditInstance, ...] = ()


def estado_inicial(theta0: ModelParams, run_seed: int) -> EditState:
    """theta0 queda congelado: el estado guarda copias independientes."""
    base = theta0.deep_clone()
    semillas = np.random.SeedSequence(run_seed).spawn(2)
    return EditState(
        theta0=base,
        theta_prev=base.deep_clone(),
        theta_live=base.deep_clone(),
        t=0,
        rng=np.random.default_rng(semillas[0]),
        rng_eval=np.random.default_rng(semillas[1]),
    )


# =============================================================================
# OPTIMIZADOR
# =============================================================================

def optimizer_step(
    params: ModelParams,
    grads: Dict[str, np.ndarray],
    opt_state: EstadoOptimizador,
    cfg: EditRunConfig,
) -> None:
    """Actualización en sitio. Adam con corrección de sesgo o SGD simple."""
    for nombre, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise DivergenciaError(f"Gradiente no finito en {nombre}.")

    lr = cfg.learning_rate
    if cfg.optimizer is TipoOptimizador.SGD:
        for nombre, g in grads.items():
            params[nombre].data -= lr * g
        return

    opt_state.paso += 1
    correccion1 = 1.0 - ADAM_BETA1 ** opt_state.paso
    correccion2 = 1.0 - ADAM_BETA2 ** opt_state.paso
    for nombre, g in grads.items():
        m = opt_state.m.get(nombre)
        v = opt_state.v.get(nombre)
        m = (1 - ADAM_BETA1) * g if m is None else ADAM_BETA1 * m + (1 - ADAM_BETA1) * g
        v = (1 - ADAM_BETA2) * g * g if v is None else ADAM_BETA2 * v + (1 - ADAM_BETA2) * g * g
        opt_state.m[nombre], opt_state.v[nombre] = m, v
        params[nombre].data -= lr * (m / correccion1) / (np.sqrt(v / correccion2) + ADAM_EPS)

    for nombre in grads:
        if not np.all(np.isfinite(params[nombre].data)):
            raise DivergenciaError(f"Parámetro {nombre} no finito tras el paso del optimizador.")


# =============================================================================
# UNA EDICIÓN
# =============================================================================

def tokens_de_edicion(inst: EditInstance, tokenizer: Tokenizer, max_seq_len: int) -> Tuple[List[int], bool]:
    tokens = tokenize(inst.edit_text, tokenizer)
    truncado = len(tokens) > max_seq_len
    if truncado:
        logger.warning(
            f"Edición {inst.id}: {len(tokens)} tokens exceden max_seq_len={max_seq_len}; se trunca."
        )
        tokens = tokens[:max_seq_len]
    if len(tokens) < 2:
        raise EdicionDegeneradaError(f"Edición {inst.id}: menos de 2 tokens.")
    return tokens, truncado


def _puntajes_del_paso(
    live: ModelParams,
    tokens: Sequence[int],
    cfg: EditRunConfig,
    ledger: ImportanceLedger,
) -> ImportanceLedger:
    if cfg.importance_mode is ModoImportancia.EXACT:
        return registrar_puntajes(ledger, exact_component_importance(live, tokens))
    if cfg.importance_pass is PasadaImportancia.CLEAN:
        limpio = live.deep_clone()
        limpio.zero_grad()
        with ComputationTape():
            backward(lm_loss(limpio, tokens))
        return accumulate_importance(ledger, limpio, limpio.component_grads())
    return accumulate_importance(ledger, live, live.component_grads())


def apply_edit(
    state: EditState,
    inst: EditInstance,
    cfg: EditRunConfig,
    tokenizer: Tokenizer,
) -> Tuple[EditState, StepLog]:
    inicio = time.perf_counter()
    paso = state.t + 1
    tokens, truncado = tokens_de_edicion(inst, tokenizer, state.theta_prev.config.max_seq_len)

    if cfg.pre_editing:
        log = StepLog(paso, inst.id, [], [], {}, 0, truncado, seconds=time.perf_counter() - inicio)
        return replace(state, t=paso, historial=state.historial + (inst,)), log

    rng = copy.deepcopy(state.rng)
    live = state.theta_prev.deep_clone()
    live.set_requires_grad(True)
    opt = EstadoOptimizador()
    ledger = ImportanceLedger.vacio(live.component_ids())
    ruido_fijo: Optional[np.ndarray] = None
    losses: List[float] = []
    losses_suma: List[float] = []
    n_objetivos = len(tokens) - 1

    try:
        for epoca in range(cfg.epochs_per_edit):
            live.zero_grad()
            with ComputationTape():
                E = embed(live, tokens)
                if not cfg.disable_lpa:
                    if not cfg.noise.resample_each_step and cfg.noise.alpha > 0 and ruido_fijo is None:
                        ruido_fijo = sample_noise(E.shape, cfg.noise, rng)
                    E = perturb_embeddings(E, cfg.noise, rng, ruido_fijo)
                loss = lm_loss(live, tokens, E_override=E)
                backward(loss)
            losses.append(loss.item())
            losses_suma.append(loss.item() * n_objetivos)

            ultimo = epoca == cfg.epochs_per_edit - 1
            if cfg.usa_importancia and (
                cfg.importance_schedule is CalendarioImportancia.RUNNING_MEAN or ultimo
            ):
                ledger = _puntajes_del_paso(live, tokens, cfg, ledger)

            optimizer_step(live, live.grads(), opt, cfg)
    except DivergenciaError as e:
        raise DivergenciaError(f"Edición {inst.id} divergió en la época {len(losses) + 1}: {e}") from e

    if cfg.disable_kpf:
        seleccion = []
        fusionado = live
    else:
        seleccion = live.component_ids() if cfg.dpf_mode else select_top_k(ledger, cfg.fusion.k_percent)
        fusionado = fuse_parameters(state.theta0, state.theta_prev, live, seleccion, cfg.fusion)

    puntajes = ledger.scores() if cfg.usa_importancia else {}
    log = StepLog(
        step=paso,
        instance_id=inst.id,
        losses=losses,
        losses_suma=losses_suma,
        selected=[cid.nombre for cid in sorted(seleccion)],
        scores={cid.nombre: puntajes[cid] for cid in ranking(ledger)} if puntajes else {},
        epochs=cfg.epochs_per_edit,
        truncated=truncado,
        seconds=time.perf_counter() - inicio,
    )
    logger.info(
        f"Paso {paso} ({inst.id}): loss {losses[0]:.4f} -> {losses[-1]:.4f}; "
        f"componentes fusionados: {len(log.selected)}"
    )
    nuevo = replace(
        state,
        theta_prev=fusionado,
        theta_live=live,
        t=paso,
        rng=rng,
        optimizer_state=opt,
        historial=state.historial + (inst,),
    )
    return nuevo, log


# =============================================================================
# FLUJO COMPLETO
# =============================================================================

AlCompletarPaso = Callable[[EditState, StepLog, List[EvalReport]], None]


def run_stream(
    state: EditState,
    stream: Sequence[EditInstance],
    cfg: EditRunConfig,
    tokenizer: Tokenizer,
    eval_every: int,
    evaluador=None,
    eval_coeff: float = 0.1,
    al_completar_paso: Optional[AlCompletarPaso] = None,
) -> Tuple[EditState, List[EvalReport]]:
    """
    Aplica las ediciones en orden. Cada `eval_every` pasos evalúa eficacia sobre
    la instancia recién editada y especificidad sobre las anteriores, siempre
    con el modelo ya fusionado.
    """
    if not stream:
        raise ConfiguracionError("El flujo de ediciones está vacío.")
    if eval_every < 1:
        raise ConfiguracionError("eval.every debe ser >= 1.")

    reportes: List[EvalReport] = []
    for inst in stream:
        paso = state.t + 1
        try:
            state, log = apply_edit(state, inst, cfg, tokenizer)
        except DivergenciaError as e:
            if cfg.on_divergence is not PoliticaDivergencia.SKIP:
                e.args = (f"Paso {paso}: {e}",)
                raise
            logger.warning(f"Paso {paso} ({inst.id}) omitido por divergencia: {e}")
            log = StepLog(paso, inst.id, [], [], {}, cfg.epochs_per_edit, skipped=True, error=str(e))
            state = replace(state, t=paso)
        except BaseExcepcionDeNegocio as e:
            e.args = (f"Paso {paso}: {e}",)
            raise

        del_paso: List[EvalReport] = []
        if evaluador is not None and state.t % eval_every == 0:
            del_paso = evaluar_paso(state, inst, evaluador, eval_coeff, incluir_eficacia=not log.skipped)
            reportes.extend(del_paso)
        if al_completar_paso is not None:
            al_completar_paso(state, log, del_paso)
    return state, reportes


def evaluar_paso(
    state: EditState,
    inst: EditInstance,
    evaluador,
    coeff: float,
    incluir_eficacia: bool = True,
) -> List[EvalReport]:
    reportes = []
    if incluir_eficacia:
        eficacia = evaluador.evaluate_efficacy(state.theta_prev, inst, step=state.t)
        reportes.append(eficacia)
        logger.info(f"Paso {state.t}: eficacia BLEU={eficacia.bleu_average:.4f} PPL={eficacia.ppl_average:.4f}")
    previas = list(state.historial)
    if previas and previas[-1] is inst:
        previas.pop()
    if previas:
        especificidad = evaluador.evaluate_specificity(
            state.theta_prev, previas, coeff, state.rng_eval, step=state.t
        )
        reportes.append(especificidad)
        logger.info(
            f"Paso {state.t}: especificidad BLEU={especificidad.bleu_average:.4f} "
            f"PPL={especificidad.ppl_average:.4f}"
        )
    return reportes
