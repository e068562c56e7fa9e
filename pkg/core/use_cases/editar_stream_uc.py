# core/use_cases/editar_stream_uc.py
import logging
import os
from typing import Any, Dict, List, Sequence

import numpy as np

from core.domain.edicion import EditInstance
from core.domain.reportes import EvalReport, RunManifest, StepLog, hash_canonico
from core.interfaces.repositories import (
    EstadoPersistido,
    ICheckpointRepository,
    ICorpusRepository,
    IReporteRepository,
    ITokenizerRepository,
)
from core.services.evaluacion import EvaluadorMultiRango
from core.services.motor_edicion import EditState, estado_inicial, run_stream
from core.shared.enums import ModoEvaluacion, RangoConsulta
from core.shared.exceptions import ConfiguracionError, DatosInvalidosError, VocabularioIncompatibleError
from core.use_cases.dtos import EditarStreamDTO, ResultadoEdicion, RunConfig, config_efectiva, motor_para_metodo

logger = logging.getLogger(__name__)


def resumen_modo(reportes: Sequence[EvalReport]) -> Dict[str, Any]:
    """Media sobre pasos de cada rango y del promedio por paso."""
    if not reportes:
        return {}
    bleu = {r.value: float(np.mean([rep.bleu[r] for rep in reportes])) for r in RangoConsulta}
    ppl = {r.value: float(np.mean([rep.ppl[r] for rep in reportes])) for r in RangoConsulta}
    return {
        "n_steps": len(reportes),
        "bleu": bleu,
        "ppl": ppl,
        "bleu_average": float(np.mean([rep.bleu_average for rep in reportes])),
        "ppl_average": float(np.mean([rep.ppl_average for rep in reportes])),
        "final": reportes[-1].to_dict(),
    }


def construir_summary(
    manifest: RunManifest,
    reportes: Sequence[EvalReport],
    logs: Sequence[StepLog],
    checkpoints: Sequence[int],
) -> Dict[str, Any]:
    por_modo = {
        modo: [r for r in reportes if r.mode is modo] for modo in ModoEvaluacion
    }
    en_t = {}
    for T in checkpoints:
        fila = {}
        for modo, lista in por_modo.items():
            del_paso = [r for r in lista if r.step == T]
            if del_paso:
                fila[f"{modo.value}_bleu"] = del_paso[-1].bleu_average
                fila[f"{modo.value}_ppl"] = del_paso[-1].ppl_average
        if fila:
            en_t[str(T)] = fila
    return {
        "manifest_hash": manifest.manifest_hash,
        "method": manifest.method,
        "steps": len(logs),
        "skipped_steps": [log.step for log in logs if log.skipped],
        "truncated_steps": [log.step for log in logs if log.truncated],
        "efficacy": resumen_modo(por_modo[ModoEvaluacion.EFFICACY]),
        "specificity": resumen_modo(por_modo[ModoEvaluacion.SPECIFICITY]),
        "at_edit_counts": en_t,
    }


class EditarStreamUseCase:
    """
    Caso de Uso: Edición continua de un flujo de instancias.
    Carga checkpoint, tokenizer y corpus; aplica el método elegido y persiste
    steps.csv, step_logs.jsonl, ledger.csv, summary.json, manifest.json y el
    estado de reanudación cada `engine.checkpoint_every` pasos.
    """

    def __init__(
        self,
        checkpoint_repo: ICheckpointRepository,
        corpus_repo: ICorpusRepository,
        tokenizer_repo: ITokenizerRepository,
        reporte_repo: IReporteRepository,
    ):
        self.checkpoint_repo = checkpoint_repo
        self.corpus_repo = corpus_repo
        self.tokenizer_repo = tokenizer_repo
        self.reporte_repo = reporte_repo

    # =================================================================
    # 1. ESTADO
    # =================================================================
    def _persistir_estado(self, directorio: str, estado: EditState) -> None:
        self.checkpoint_repo.guardar_estado(directorio, EstadoPersistido(
            theta0=estado.theta0,
            theta_prev=estado.theta_prev,
            t=estado.t,
            rng_state=estado.rng.bit_generator.state,
            rng_eval_state=estado.rng_eval.bit_generator.state,
            historial_ids=[inst.id for inst in estado.historial],
        ))

    def _restaurar_estado(self, persistido: EstadoPersistido, corpus: Sequence[EditInstance]) -> EditState:
        por_id = {inst.id: inst for inst in corpus}
        faltantes = [i for i in persistido.historial_ids if i not in por_id]
        if faltantes:
            raise DatosInvalidosError(f"El estado guardado referencia instancias ausentes del corpus: {faltantes[:5]}.")
        rng = np.random.default_rng()
        rng.bit_generator.state = persistido.rng_state
        rng_eval = np.random.default_rng()
        rng_eval.bit_generator.state = persistido.rng_eval_state
        theta_prev = persistido.theta_prev
        theta_prev.set_requires_grad(True)
        return EditState(
            theta0=persistido.theta0,
            theta_prev=theta_prev,
            theta_live=theta_prev.deep_clone(),
            t=persistido.t,
            rng=rng,
            rng_eval=rng_eval,
            historial=tuple(por_id[i] for i in persistido.historial_ids),
        )

    # =================================================================
    # 2. EJECUCIÓN
    # =================================================================
    def ejecutar(self, cfg: RunConfig, dto: EditarStreamDTO) -> ResultadoEdicion:
        # 1. Artefactos de entrada
        params = self.checkpoint_repo.cargar(dto.checkpoint_path)
        tokenizer = self.tokenizer_repo.cargar(dto.tokenizer_path)
        if tokenizer.vocab_size != params.config.vocab_size:
            raise VocabularioIncompatibleError(
                f"Tokenizer con V={tokenizer.vocab_size} incompatible con checkpoint V={params.config.vocab_size}."
            )
        corpus = self.corpus_repo.cargar(dto.corpus_path)
        # El hash cubre el corpus completo: reanudar con otro --limit conserva el manifest.
        corpus_hash = hash_canonico([inst.to_dict() for inst in corpus])
        if dto.limit:
            corpus = corpus[: dto.limit]
        if not corpus:
            raise DatosInvalidosError(f"El corpus {dto.corpus_path} no tiene instancias.")

        # 2. Método -> ablaciones y manifest
        motor = motor_para_metodo(cfg.engine, dto.method, dto.disable_lpa, dto.disable_kpf)
        manifest = RunManifest(
            config=config_efectiva(cfg, motor),
            seeds=cfg.seeds.to_dict(),
            corpus_hash=corpus_hash,
            checkpoint_hash=params.fingerprint(),
            method=dto.method.value,
            output_paths={"run_dir": dto.run_dir},
        )
        hash_run = manifest.manifest_hash

        # 3. Estado inicial o reanudado
        reportes: List[EvalReport] = []
        logs: List[StepLog] = []
        estado = None
        if dto.resume:
            previo = self.reporte_repo.cargar_manifest(dto.run_dir)
            if previo.manifest_hash != hash_run:
                raise ConfiguracionError(
                    f"No se puede reanudar {dto.run_dir}: la configuración efectiva cambió "
                    f"({previo.manifest_hash[:12]} vs {hash_run[:12]})."
                )
            persistido = self.checkpoint_repo.cargar_estado(dto.run_dir)
            if persistido is not None:
                estado = self._restaurar_estado(persistido, corpus)
                reportes = [r for r in self.reporte_repo.cargar_reportes(dto.run_dir) if r.step <= estado.t]
                logs = [log for log in self.reporte_repo.cargar_logs(dto.run_dir) if log.step <= estado.t]
                logger.info(f"Reanudando {dto.run_dir} desde t={estado.t}.")
        if estado is None:
            estado = estado_inicial(params, cfg.seeds.run)
        self.reporte_repo.guardar_manifest(dto.run_dir, manifest)

        # 4. Flujo
        evaluador = EvaluadorMultiRango(tokenizer, cfg.eval.max_new, cfg.eval.stop_text)
        pendientes = corpus[estado.t:]

        def al_completar_paso(nuevo: EditState, log: StepLog, del_paso: List[EvalReport]) -> None:
            logs.append(log)
            reportes.extend(del_paso)
            if cfg.checkpoint_every and nuevo.t % cfg.checkpoint_every == 0:
                self._persistir_estado(dto.run_dir, nuevo)
                self.reporte_repo.guardar_reportes(dto.run_dir, hash_run, reportes)
                self.reporte_repo.guardar_logs(dto.run_dir, hash_run, logs)

        logger.info(
            f"Edición {dto.method.value}: {len(pendientes)} instancias pendientes "
            f"(lpa={'off' if motor.disable_lpa else 'on'}, kpf={'off' if motor.disable_kpf else 'on'}, "
            f"dpf={motor.dpf_mode})."
        )
        if pendientes:
            estado, _ = run_stream(
                estado, pendientes, motor, tokenizer, cfg.eval.every,
                evaluador=evaluador, eval_coeff=cfg.eval.coeff, al_completar_paso=al_completar_paso,
            )

        # 5. Artefactos finales
        self.reporte_repo.guardar_reportes(dto.run_dir, hash_run, reportes)
        self.reporte_repo.guardar_logs(dto.run_dir, hash_run, logs)
        self._persistir_estado(dto.run_dir, estado)
        ruta_final = self.checkpoint_repo.guardar(os.path.join(dto.run_dir, "final.npz"), estado.theta_prev)
        summary = construir_summary(manifest, reportes, logs, cfg.eval.checkpoints)
        self.reporte_repo.guardar_summary(dto.run_dir, summary)

        return ResultadoEdicion(
            run_dir=dto.run_dir,
            manifest_hash=hash_run,
            pasos=estado.t,
            summary=summary,
            archivos=[ruta_final],
        )
