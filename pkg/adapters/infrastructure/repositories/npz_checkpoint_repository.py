# adapters/infrastructure/repositories/npz_checkpoint_repository.py

import json
import logging
import os
from typing import Dict, Optional

import numpy as np

from core.domain.modelo_lm import ModelConfig, ModelParams
from core.interfaces.repositories import EstadoPersistido, ICheckpointRepository
from core.shared.exceptions import CheckpointNoEncontradoError, ConfiguracionError

logger = logging.getLogger(__name__)

FORMATO = "evoedit-checkpoint"
VERSION = 1
CLAVE_HEADER = "__header__"


class NpzCheckpointRepository(ICheckpointRepository):
    """
    Checkpoints en formato NumPy .npz: un arreglo por parámetro más una entrada
    `__header__` con el JSON {format, version, config}.
    """

    # =================================================================
    # 1. MAPEO (ARCHIVO <-> DOMINIO)
    # =================================================================
    def _header(self, config: ModelConfig, **extra) -> np.ndarray:
        datos = {"format": FORMATO, "version": VERSION, "config": config.to_dict(), **extra}
        return np.array(json.dumps(datos, sort_keys=True))

    def _leer_header(self, archivo, ruta: str) -> dict:
        if CLAVE_HEADER not in archivo.files:
            raise ConfiguracionError(f"{ruta} no es un checkpoint (falta {CLAVE_HEADER}).")
        header = json.loads(str(archivo[CLAVE_HEADER]))
        if header.get("format") != FORMATO or header.get("version") != VERSION:
            raise ConfiguracionError(
                f"{ruta}: formato {header.get('format')} v{header.get('version')} no soportado."
            )
        return header

    @staticmethod
    def _ruta_npz(ruta: str) -> str:
        return ruta if ruta.endswith(".npz") else f"{ruta}.npz"

    # =================================================================
    # 2. CHECKPOINTS
    # =================================================================
    def guardar(self, ruta: str, params: ModelParams) -> str:
        ruta = self._ruta_npz(ruta)
        os.makedirs(os.path.dirname(os.path.abspath(ruta)), exist_ok=True)
        np.savez(ruta, **{CLAVE_HEADER: self._header(params.config)}, **params.to_arrays())
        logger.info(f"Checkpoint escrito en {ruta} ({params.parameter_count()} parámetros).")
        return ruta

    def cargar(self, ruta: str) -> ModelParams:
        ruta = self._ruta_npz(ruta)
        if not os.path.isfile(ruta):
            raise CheckpointNoEncontradoError(f"El checkpoint {ruta} no existe.")
        with np.load(ruta, allow_pickle=False) as archivo:
            header = self._leer_header(archivo, ruta)
            config = ModelConfig.from_dict(header["config"])
            arreglos = {n: archivo[n] for n in archivo.files if n != CLAVE_HEADER}
        params = ModelParams.from_arrays(config, arreglos)
        params.set_requires_grad(True)
        return params

    # =================================================================
    # 3. ESTADO DE REANUDACIÓN
    # =================================================================
    def guardar_estado(self, directorio: str, estado: EstadoPersistido) -> None:
        carpeta = os.path.join(directorio, "state")
        os.makedirs(carpeta, exist_ok=True)
        arreglos: Dict[str, np.ndarray] = {CLAVE_HEADER: self._header(estado.theta0.config)}
        for prefijo, params in (("theta0", estado.theta0), ("theta_prev", estado.theta_prev)):
            for nombre, datos in params.to_arrays().items():
                arreglos[f"{prefijo}/{nombre}"] = datos
        np.savez(os.path.join(carpeta, "estado.npz"), **arreglos)

        meta = {
            "t": estado.t,
            "rng_state": estado.rng_state,
            "rng_eval_state": estado.rng_eval_state,
            "historial_ids": estado.historial_ids,
        }
        with open(os.path.join(carpeta, "estado.json"), "w", encoding="utf-8") as f:
            json.dump(meta, f, sort_keys=True, indent=2)
        logger.info(f"Estado de la corrida guardado en {carpeta} (t={estado.t}).")

    def cargar_estado(self, directorio: str) -> Optional[EstadoPersistido]:
        carpeta = os.path.join(directorio, "state")
        ruta_npz = os.path.join(carpeta, "estado.npz")
        ruta_json = os.path.join(carpeta, "estado.json")
        if not (os.path.isfile(ruta_npz) and os.path.isfile(ruta_json)):
            return None

        with np.load(ruta_npz, allow_pickle=False) as archivo:
            header = self._leer_header(archivo, ruta_npz)
            config = ModelConfig.from_dict(header["config"])
            grupos: Dict[str, Dict[str, np.ndarray]] = {"theta0": {}, "theta_prev": {}}
            for clave in archivo.files:
                if clave == CLAVE_HEADER:
                    continue
                prefijo, nombre = clave.split("/", 1)
                grupos[prefijo][nombre] = archivo[clave]
        with open(ruta_json, encoding="utf-8") as f:
            meta = json.load(f)

        return EstadoPersistido(
            theta0=ModelParams.from_arrays(config, grupos["theta0"]),
            theta_prev=ModelParams.from_arrays(config, grupos["theta_prev"]),
            t=int(meta["t"]),
            rng_state=meta["rng_state"],
            rng_eval_state=meta["rng_eval_state"],
            historial_ids=list(meta.get("historial_ids", [])),
        )
