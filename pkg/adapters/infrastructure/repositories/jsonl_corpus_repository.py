# adapters/infrastructure/repositories/jsonl_corpus_repository.py

import json
import logging
import os
from typing import List, Sequence

from jsonschema import Draft202012Validator

from core.domain.edicion import EditInstance
from core.interfaces.repositories import ICorpusRepository
from core.shared.enums import RangoConsulta
from core.shared.exceptions import CorpusParseError, DatosInvalidosError, EntityNotFoundException

logger = logging.getLogger(__name__)

ESQUEMA_INSTANCIA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["id", "edit_text", "queries"],
    "properties": {
        "id": {"type": "string", "minLength": 1},
        "edit_text": {"type": "string", "minLength": 1},
        "queries": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["rank", "question", "answer"],
                "properties": {
                    "rank": {"enum": [r.value for r in RangoConsulta]},
                    "question": {"type": "string", "minLength": 1},
                    "answer": {"type": "string", "minLength": 1},
                },
            },
            # Al menos una consulta por rango
            "allOf": [
                {"contains": {"type": "object", "properties": {"rank": {"const": r.value}}, "required": ["rank"]}}
                for r in RangoConsulta
            ],
        },
        "metadata": {
            "type": "object",
            "properties": {
                "domain": {"type": "string"},
                "true_text": {"type": "string"},
                "fact": {"type": "object"},
            },
        },
    },
}


class JsonlCorpusRepository(ICorpusRepository):
    """
    Corpus JSONL: una EditInstance por línea. Se validan todas las líneas y los
    errores se reportan juntos con su número de línea.
    """

    def __init__(self):
        self.validador = Draft202012Validator(ESQUEMA_INSTANCIA)

    def cargar(self, ruta: str) -> List[EditInstance]:
        if not os.path.isfile(ruta):
            raise EntityNotFoundException(f"El corpus {ruta} no existe.")

        instancias: List[EditInstance] = []
        errores, lineas, ids = [], [], []
        with open(ruta, encoding="utf-8") as f:
            for numero, linea in enumerate(f, start=1):
                if not linea.strip():
                    continue
                try:
                    datos = json.loads(linea)
                except json.JSONDecodeError as e:
                    errores.append(f"línea {numero}: JSON inválido ({e.msg})")
                    lineas.append(numero)
                    continue

                id_linea = datos.get("id") if isinstance(datos, dict) else None
                problemas = sorted(self.validador.iter_errors(datos), key=lambda e: list(e.path))
                if problemas:
                    detalle = "; ".join(
                        f"{'/'.join(map(str, p.path)) or '<raíz>'}: {p.message}" for p in problemas
                    )
                    errores.append(f"línea {numero} (id={id_linea}): {detalle}")
                    lineas.append(numero)
                    ids.append(id_linea)
                    continue
                try:
                    instancias.append(EditInstance.from_dict(datos))
                except DatosInvalidosError as e:
                    errores.append(f"línea {numero} (id={id_linea}): {e}")
                    lineas.append(numero)
                    ids.append(id_linea)

        if errores:
            raise CorpusParseError(f"{ruta}: " + " | ".join(errores), lineas=lineas, ids=ids)
        logger.info(f"Corpus {ruta}: {len(instancias)} instancias.")
        return instancias

    def guardar(self, ruta: str, instancias: Sequence[EditInstance]) -> str:
        os.makedirs(os.path.dirname(os.path.abspath(ruta)), exist_ok=True)
        with open(ruta, "w", encoding="utf-8", newline="\n") as f:
            for inst in instancias:
                f.write(json.dumps(inst.to_dict(), sort_keys=True, ensure_ascii=False) + "\n")
        return ruta
