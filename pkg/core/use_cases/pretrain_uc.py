# core/use_cases/pretrain_uc.py
import logging
import os
from dataclasses import replace
from typing import Any, Dict, List

import numpy as np

from core.domain.modelo_lm import ModelParams, init_model, lm_loss
from core.domain.reportes import RunManifest, hash_canonico
from core.domain.tensor import ComputationTape, backward, sin_cinta
from core.domain.tokenizer import build_tokenizer, tokenize
from core.interfaces.repositories import (
    ICheckpointRepository,
    ICorpusRepository,
    IReporteRepository,
    ITokenizerRepository,
)
from core.services.corpus_sintetico import synth_corpus, textos_verdaderos
from core.services.motor_edicion import EditRunConfig, EstadoOptimizador, optimizer_step
from core.shared.exceptions import DatosInvalidosError
from core.use_cases.dtos import PretrainDTO, RunConfig

logger = logging.getLogger(__name__)


def perdida_media(params: ModelParams, secuencias: List[List[int]]) -> float:
    with sin_cinta():
        return float(np.mean([lm_loss(params, s).item() for s in secuencias]))


class PretrainUseCase:
    """
    Caso de Uso: Preentrenar el modelo base.
    Entrena sobre los textos VERDADEROS del corpus (nunca los contrafácticos)
    hasta la pérdida objetivo o el tope de pasos, y deja en `output_dir`:
    corpus.jsonl, tokenizer.json, base.npz, manifest.json y summary.json.
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

    def ejecutar(self, cfg: RunConfig, dto: PretrainDTO) -> Dict[str, Any]:
        # 1. Corpus: archivo explícito o sintético
        ruta_corpus = dto.corpus_path or cfg.corpus.path
        if ruta_corpus:
            corpus = self.corpus_repo.cargar(ruta_corpus)
        else:
            corpus = synth_corpus(cfg.seeds.corpus, cfg.corpus.n_instances)
        textos = textos_verdaderos(corpus)
        if not textos:
            raise DatosInvalidosError("El corpus no contiene textos verdaderos (metadata.true_text) para preentrenar.")

        # 2. Tokenizer
        tokenizer = build_tokenizer(
            textos + [inst.edit_text for inst in corpus], cfg.tokenizer.mode, cfg.tokenizer.vocab_size
        )
        model_cfg = cfg.model
        if model_cfg.vocab_size != tokenizer.vocab_size:
            logger.info(f"vocab_size del modelo ajustado a {tokenizer.vocab_size} (tokenizer {tokenizer.mode.value}).")
            model_cfg = replace(model_cfg, vocab_size=tokenizer.vocab_size)

        maximo = model_cfg.max_seq_len
        secuencias = [tokenize(t, tokenizer)[:maximo] for t in textos]

        # 3. Entrenamiento
        params = init_model(model_cfg)
        perdida_inicial = perdida_media(params, secuencias)
        logger.info(f"Preentrenamiento: {len(secuencias)} textos, pérdida inicial {perdida_inicial:.4f}.")

        rng = np.random.default_rng(cfg.seeds.model)
        opt_cfg = EditRunConfig(learning_rate=cfg.pretrain.learning_rate, optimizer=cfg.engine.optimizer)
        opt = EstadoOptimizador()
        media_movil = None
        pasos = 0
        for pasos in range(1, cfg.pretrain.max_steps + 1):
            tokens = secuencias[int(rng.integers(len(secuencias)))]
            params.zero_grad()
            with ComputationTape():
                loss = lm_loss(params, tokens)
                backward(loss)
            optimizer_step(params, params.grads(), opt, opt_cfg)
            valor = loss.item()
            media_movil = valor if media_movil is None else 0.9 * media_movil + 0.1 * valor
            if pasos >= len(secuencias) and media_movil < cfg.pretrain.target_loss:
                logger.info(f"Pérdida objetivo alcanzada en el paso {pasos}.")
                break

        perdida_final = perdida_media(params, secuencias)
        logger.info(f"Preentrenamiento terminado: {pasos} pasos, pérdida {perdida_inicial:.4f} -> {perdida_final:.4f}.")

        # 4. Persistencia
        os.makedirs(dto.output_dir, exist_ok=True)
        ruta_corpus_salida = self.corpus_repo.guardar(os.path.join(dto.output_dir, "corpus.jsonl"), corpus)
        ruta_tokenizer = self.tokenizer_repo.guardar(os.path.join(dto.output_dir, "tokenizer.json"), tokenizer)
        ruta_checkpoint = self.checkpoint_repo.guardar(os.path.join(dto.output_dir, "base.npz"), params)

        manifest = RunManifest(
            config=cfg.crudo,
            seeds=cfg.seeds.to_dict(),
            corpus_hash=hash_canonico([inst.to_dict() for inst in corpus]),
            checkpoint_hash=params.fingerprint(),
            method="pretrain",
            output_paths={
                "checkpoint": ruta_checkpoint,
                "tokenizer": ruta_tokenizer,
                "corpus": ruta_corpus_salida,
            },
        )
        summary = {
            "manifest_hash": manifest.manifest_hash,
            "checkpoint_hash": manifest.checkpoint_hash,
            "initial_loss": perdida_inicial,
            "final_loss": perdida_final,
            "steps": pasos,
            "vocab_size": tokenizer.vocab_size,
            "parameter_count": params.parameter_count(),
            "n_texts": len(textos),
        }
        self.reporte_repo.guardar_manifest(dto.output_dir, manifest)
        self.reporte_repo.guardar_summary(dto.output_dir, summary)
        return {**summary, **manifest.output_paths}
