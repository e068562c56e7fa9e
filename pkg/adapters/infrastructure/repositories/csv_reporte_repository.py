# adapters/infrastructure/repositories/csv_reporte_repository.py

import csv
import json
import logging
import os
from collections import OrderedDict
from typing import Any, Dict, List, Sequence

from core.domain.reportes import EvalReport, RunManifest, StepLog
from core.interfaces.repositories import IReporteRepository
from core.shared.enums import ModoEvaluacion, RangoConsulta
from core.shared.exceptions import DatosInvalidosError, RunNoEncontradoError

logger = logging.getLogger(__name__)

ARCHIVO_MANIFEST = "manifest.json"
ARCHIVO_STEPS = "steps.csv"
ARCHIVO_LOGS = "step_logs.jsonl"
ARCHIVO_LEDGER = "ledger.csv"
ARCHIVO_TIEMPOS = "timings.csv"
ARCHIVO_SUMMARY = "summary.json"

COLUMNAS_STEPS = ["manifest_hash", "step", "mode", "rank", "bleu", "ppl"]
COLUMNAS_LEDGER = ["manifest_hash", "step", "component", "layer", "kind", "score", "selected"]
COLUMNAS_TIEMPOS = ["manifest_hash", "step", "seconds"]


def celda(valor: Any) -> str:
    """Los flotantes se escriben con repr para no perder precisión."""
    if isinstance(valor, float):
        return repr(valor)
    if valor is None:
        return ""
    return str(valor)


class CsvReporteRepository(IReporteRepository):
    """
    Artefactos de una corrida como CSV/JSON planos dentro del directorio de la corrida.
    Ningún artefacto incluye marcas de tiempo; la duración de cada paso va
    aparte en timings.csv, el único archivo que cambia entre corridas idénticas.
    """

    # =================================================================
    # 1. UTILIDADES
    # =================================================================
    def _escribir_csv(self, ruta: str, columnas: Sequence[str], filas: Sequence[Sequence[Any]]) -> str:
        os.makedirs(os.path.dirname(os.path.abspath(ruta)), exist_ok=True)
        with open(ruta, "w", encoding="utf-8", newline="") as f:
            escritor = csv.writer(f, lineterminator="\n")
            escritor.writerow(columnas)
            for fila in filas:
                escritor.writerow([celda(v) for v in fila])
        return ruta

    def _escribir_json(self, ruta: str, datos: Any) -> None:
        os.makedirs(os.path.dirname(os.path.abspath(ruta)), exist_ok=True)
        with open(ruta, "w", encoding="utf-8") as f:
            json.dump(datos, f, sort_keys=True, indent=2, ensure_ascii=False)
            f.write("\n")

    def _leer_json(self, ruta: str) -> Any:
        with open(ruta, encoding="utf-8") as f:
            return json.load(f)

    # =================================================================
    # 2. MANIFEST Y SUMMARY
    # =================================================================
    def guardar_manifest(self, directorio: str, manifest: RunManifest) -> None:
        self._escribir_json(os.path.join(directorio, ARCHIVO_MANIFEST), manifest.to_dict())

    def cargar_manifest(self, directorio: str) -> RunManifest:
        ruta = os.path.join(directorio, ARCHIVO_MANIFEST)
        if not os.path.isfile(ruta):
            raise RunNoEncontradoError(f"No hay una corrida en {directorio} (falta {ARCHIVO_MANIFEST}).")
        return RunManifest.from_dict(self._leer_json(ruta))

    def guardar_summary(self, directorio: str, summary: Dict[str, Any]) -> None:
        self._escribir_json(os.path.join(directorio, ARCHIVO_SUMMARY), summary)

    def cargar_summary(self, directorio: str) -> Dict[str, Any]:
        ruta = os.path.join(directorio, ARCHIVO_SUMMARY)
        if not os.path.isfile(ruta):
            raise RunNoEncontradoError(f"La corrida {directorio} no tiene {ARCHIVO_SUMMARY}.")
        return self._leer_json(ruta)

    # =================================================================
    # 3. MÉTRICAS POR PASO
    # =================================================================
    def guardar_reportes(self, directorio: str, manifest_hash: str, reportes: Sequence[EvalReport]) -> None:
        filas = [
            [manifest_hash, f["step"], f["mode"], f["rank"], f["bleu"], f["ppl"]]
            for reporte in reportes
            for f in reporte.filas()
        ]
        self._escribir_csv(os.path.join(directorio, ARCHIVO_STEPS), COLUMNAS_STEPS, filas)

    def cargar_reportes(self, directorio: str) -> List[EvalReport]:
        ruta = os.path.join(directorio, ARCHIVO_STEPS)
        if not os.path.isfile(ruta):
            return []
        agrupados: "OrderedDict[tuple, Dict[str, Dict[RangoConsulta, float]]]" = OrderedDict()
        with open(ruta, encoding="utf-8", newline="") as f:
            for fila in csv.DictReader(f):
                if fila["rank"] == "average":
                    continue
                try:
                    clave = (int(fila["step"]), fila["mode"])
                    grupo = agrupados.setdefault(clave, {"bleu": {}, "ppl": {}})
                    rango = RangoConsulta(fila["rank"])
                    grupo["bleu"][rango] = float(fila["bleu"])
                    grupo["ppl"][rango] = float(fila["ppl"])
                except (KeyError, ValueError) as e:
                    raise DatosInvalidosError(f"{ruta}: fila inválida {fila} ({e}).") from e
        return [
            EvalReport(ModoEvaluacion(modo), paso, grupo["bleu"], grupo["ppl"])
            for (paso, modo), grupo in agrupados.items()
        ]

    # =================================================================
    # 4. LOGS Y LEDGER DE IMPORTANCIA
    # =================================================================
    def guardar_logs(self, directorio: str, manifest_hash: str, logs: Sequence[StepLog]) -> None:
        ruta_logs = os.path.join(directorio, ARCHIVO_LOGS)
        os.makedirs(directorio, exist_ok=True)
        with open(ruta_logs, "w", encoding="utf-8", newline="\n") as f:
            for log in logs:
                datos = log.to_dict()
                datos.pop("seconds")
                f.write(json.dumps(datos, sort_keys=True) + "\n")
        self._escribir_csv(
            os.path.join(directorio, ARCHIVO_TIEMPOS),
            COLUMNAS_TIEMPOS,
            [[manifest_hash, log.step, log.seconds] for log in logs],
        )

        filas = []
        for log in logs:
            seleccionados = set(log.selected)
            nombres = list(log.scores) or list(log.selected)
            for nombre in nombres:
                _, capa, tipo = nombre.split(".", 2)
                filas.append([
                    manifest_hash, log.step, nombre, int(capa), tipo,
                    log.scores.get(nombre), int(nombre in seleccionados),
                ])
        self._escribir_csv(os.path.join(directorio, ARCHIVO_LEDGER), COLUMNAS_LEDGER, filas)

    def cargar_logs(self, directorio: str) -> List[StepLog]:
        ruta = os.path.join(directorio, ARCHIVO_LOGS)
        if not os.path.isfile(ruta):
            return []
        with open(ruta, encoding="utf-8") as f:
            logs = [StepLog.from_dict(json.loads(linea)) for linea in f if linea.strip()]
        ruta_tiempos = os.path.join(directorio, ARCHIVO_TIEMPOS)
        if os.path.isfile(ruta_tiempos):
            with open(ruta_tiempos, encoding="utf-8") as f:
                tiempos = {int(fila["step"]): float(fila["seconds"]) for fila in csv.DictReader(f)}
            for log in logs:
                log.seconds = tiempos.get(log.step, 0.0)
        return logs

    # =================================================================
    # 5. DESCUBRIMIENTO Y TABLAS
    # =================================================================
    def listar_runs(self, raiz: str) -> List[str]:
        if not os.path.isdir(raiz):
            raise RunNoEncontradoError(f"El directorio {raiz} no existe.")
        encontrados = []
        for actual, carpetas, archivos in os.walk(raiz):
            carpetas.sort()
            if ARCHIVO_MANIFEST in archivos:
                encontrados.append(actual)
        return sorted(encontrados)

    def guardar_tabla(self, ruta: str, columnas: Sequence[str], filas: Sequence[Sequence[Any]]) -> str:
        self._escribir_csv(ruta, columnas, filas)
        logger.info(f"Tabla escrita en {ruta} ({len(filas)} filas).")
        return ruta
