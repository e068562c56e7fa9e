# adapters/infrastructure/services/run_config_service.py

import copy
import logging
import os
from typing import Any, Dict, Optional

import yaml
from django.conf import settings
from jsonschema import Draft202012Validator

from core.interfaces.services import IRunConfigService
from core.shared.exceptions import ConfiguracionError
from core.use_cases.dtos import RunConfig

logger = logging.getLogger(__name__)

_ENTERO_POSITIVO = {"type": "integer", "minimum": 1}
_NUMERO_UNITARIO = {"type": "number", "minimum": 0, "maximum": 1}


def _seccion(propiedades: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "type": "object",
        "additionalProperties": False,
        "required": list(propiedades),
        "properties": propiedades,
    }


ESQUEMA_RUN_CONFIG = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "model": _seccion({
            "vocab_size": _ENTERO_POSITIVO,
            "dim": _ENTERO_POSITIVO,
            "n_layers": _ENTERO_POSITIVO,
            "n_heads": _ENTERO_POSITIVO,
            "mlp_hidden": _ENTERO_POSITIVO,
            "max_seq_len": {"type": "integer", "minimum": 2},
        }),
        "tokenizer": _seccion({
            "mode": {"enum": ["byte", "bpe"]},
            "vocab_size": {"type": "integer", "minimum": 259},
        }),
        "corpus": _seccion({
            "n_instances": _ENTERO_POSITIVO,
            "path": {"type": ["string", "null"]},
        }),
        "pretrain": _seccion({
            "max_steps": {"type": "integer", "minimum": 0},
            "target_loss": {"type": "number", "minimum": 0},
            "learning_rate": {"type": "number", "exclusiveMinimum": 0},
        }),
        "noise": _seccion({
            "alpha": {"type": "number", "minimum": 0},
            "resample_each_step": {"type": "boolean"},
        }),
        "fusion": _seccion({
            "beta": _NUMERO_UNITARIO,
            "gamma": _NUMERO_UNITARIO,
            "eta": _NUMERO_UNITARIO,
            "k": {"type": "number", "minimum": 0, "maximum": 100},
            "importance_mode": {"enum": ["taylor", "exact"]},
            "importance_schedule": {"enum": ["running_mean", "final_step"]},
            "importance_pass": {"enum": ["perturbed", "clean"]},
        }),
        "engine": _seccion({
            "epochs_per_edit": _ENTERO_POSITIVO,
            "lr": {"type": "number", "exclusiveMinimum": 0},
            "optimizer": {"enum": ["adam", "sgd"]},
            "on_divergence": {"enum": ["abort", "skip"]},
            "checkpoint_every": {"type": "integer", "minimum": 0},
        }),
        "eval": _seccion({
            "every": _ENTERO_POSITIVO,
            "coeff": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "max_new": {"type": "integer", "minimum": 0},
            "stop_text": {"type": ["string", "null"]},
            "checkpoints": {"type": "array", "items": _ENTERO_POSITIVO},
        }),
        "seeds": _seccion({
            "model": {"type": "integer"},
            "corpus": {"type": "integer"},
            "run": {"type": "integer"},
        }),
    },
}


def deep_merge(base: Dict[str, Any], encima: Dict[str, Any]) -> Dict[str, Any]:
    """Fusión recursiva: los valores de `encima` ganan; las listas se reemplazan."""
    resultado = copy.deepcopy(base)
    for clave, valor in encima.items():
        if isinstance(valor, dict) and isinstance(resultado.get(clave), dict):
            resultado[clave] = deep_merge(resultado[clave], valor)
        else:
            resultado[clave] = copy.deepcopy(valor)
    return resultado


class YamlRunConfigService(IRunConfigService):
    """
    Carga la configuración de corrida: YAML -> fusión con EVOEDIT_DEFAULTS ->
    validación JSON Schema -> RunConfig.
    """

    def __init__(self, defaults: Optional[Dict[str, Any]] = None):
        self.defaults = defaults if defaults is not None else settings.EVOEDIT_DEFAULTS
        self.validador = Draft202012Validator(ESQUEMA_RUN_CONFIG)

    def cargar(self, ruta: Optional[str] = None) -> RunConfig:
        datos: Dict[str, Any] = {}
        if ruta:
            if not os.path.isfile(ruta):
                raise ConfiguracionError(f"El archivo de configuración {ruta} no existe.")
            with open(ruta, encoding="utf-8") as f:
                try:
                    datos = yaml.safe_load(f) or {}
                except yaml.YAMLError as e:
                    raise ConfiguracionError(f"{ruta}: YAML inválido ({e}).") from e
            if not isinstance(datos, dict):
                raise ConfiguracionError(f"{ruta}: la raíz del YAML debe ser un mapeo.")
        return self.desde_dict(datos)

    def desde_dict(self, datos: Dict[str, Any]) -> RunConfig:
        efectiva = deep_merge(self.defaults, datos)
        errores = sorted(self.validador.iter_errors(efectiva), key=lambda e: list(e.path))
        if errores:
            detalle = "; ".join(f"{'.'.join(map(str, e.path)) or '<raíz>'}: {e.message}" for e in errores)
            raise ConfiguracionError(f"Configuración inválida: {detalle}")
        try:
            cfg = RunConfig.from_dict(efectiva)
        except (TypeError, ValueError) as e:
            raise ConfiguracionError(f"Configuración inválida: {e}") from e
        logger.debug(f"Configuración efectiva: {efectiva}")
        return cfg
