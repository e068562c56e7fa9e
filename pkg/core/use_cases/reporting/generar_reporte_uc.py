# core/use_cases/reporting/generar_reporte_uc.py
import logging
import os
from collections import Counter
from typing import Any, Dict, List, Sequence, Tuple

from core.domain.reportes import EvalReport, hash_canonico
from core.interfaces.repositories import IReporteRepository
from core.shared.enums import ModoEvaluacion, RangoConsulta
from core.shared.exceptions import RunNoEncontradoError

logger = logging.getLogger(__name__)


class GenerarReporteUseCase:
    """
    Caso de Uso: Reporte de corridas.
    Lee corridas terminadas (solo lectura) y genera:
      - rank_matrix.csv / rank_matrix_ppl.csv: filas (step, mode), columnas <corrida>:<rango>;
      - retention.csv: BLEU y PPL de especificidad (ediciones previas) por paso;
      - summary.json: corridas fuente con su manifest_hash y el hash combinado.
    Cada bloque de columnas de una corrida arranca con `<corrida>:manifest_hash`.
    """

    def __init__(self, reporte_repo: IReporteRepository):
        self.reporte_repo = reporte_repo

    def _cargar_corridas(self, raices: Sequence[str]) -> List[Tuple[str, str, List[EvalReport]]]:
        directorios: List[str] = []
        for raiz in raices:
            directorios.extend(self.reporte_repo.listar_runs(raiz))
        if not directorios:
            raise RunNoEncontradoError(f"No se encontraron corridas en {', '.join(raices)}.")

        manifests = [(d, self.reporte_repo.cargar_manifest(d)) for d in directorios]
        repetidos = Counter(m.method for _, m in manifests)
        corridas = []
        for directorio, manifest in manifests:
            etiqueta = manifest.method or os.path.basename(directorio)
            if repetidos[manifest.method] > 1:
                etiqueta = f"{etiqueta}@{os.path.basename(os.path.normpath(directorio))}"
            reportes = self.reporte_repo.cargar_reportes(directorio)
            if not reportes:
                logger.warning(f"La corrida {directorio} no tiene métricas; se omite.")
                continue
            corridas.append((etiqueta, manifest.manifest_hash, reportes))
        if not corridas:
            raise RunNoEncontradoError("Ninguna corrida encontrada tiene steps.csv con métricas.")
        return corridas

    def _matriz(self, corridas, metrica: str) -> Tuple[List[str], List[List[Any]]]:
        columnas = ["step", "mode"]
        for etiqueta, _, _ in corridas:
            columnas += [f"{etiqueta}:manifest_hash"] + [f"{etiqueta}:{r.value}" for r in RangoConsulta]
        indice: Dict[Tuple[int, str], Dict[str, EvalReport]] = {}
        for etiqueta, _, reportes in corridas:
            for rep in reportes:
                indice.setdefault((rep.step, rep.mode.value), {})[etiqueta] = rep
        filas = []
        for (paso, modo) in sorted(indice):
            fila: List[Any] = [paso, modo]
            for etiqueta, manifest_hash, _ in corridas:
                rep = indice[(paso, modo)].get(etiqueta)
                fila.append(manifest_hash)
                for r in RangoConsulta:
                    fila.append(getattr(rep, metrica)[r] if rep else None)
            filas.append(fila)
        return columnas, filas

    def _retencion(self, corridas) -> Tuple[List[str], List[List[Any]]]:
        columnas = ["step"]
        for etiqueta, _, _ in corridas:
            columnas += [f"{etiqueta}:manifest_hash", f"{etiqueta}:bleu", f"{etiqueta}:ppl"]
        por_paso: Dict[int, Dict[str, EvalReport]] = {}
        for etiqueta, _, reportes in corridas:
            for rep in reportes:
                if rep.mode is ModoEvaluacion.SPECIFICITY:
                    por_paso.setdefault(rep.step, {})[etiqueta] = rep
        filas = []
        for paso in sorted(por_paso):
            fila: List[Any] = [paso]
            for etiqueta, manifest_hash, _ in corridas:
                rep = por_paso[paso].get(etiqueta)
                fila += [manifest_hash] + ([rep.bleu_average, rep.ppl_average] if rep else [None, None])
            filas.append(fila)
        return columnas, filas

    def ejecutar(self, raices: Sequence[str], output_dir: str) -> Dict[str, Any]:
        corridas = self._cargar_corridas(raices)
        archivos = {}
        for nombre, metrica in (("rank_matrix.csv", "bleu"), ("rank_matrix_ppl.csv", "ppl")):
            columnas, filas = self._matriz(corridas, metrica)
            archivos[nombre] = self.reporte_repo.guardar_tabla(os.path.join(output_dir, nombre), columnas, filas)
        columnas, filas = self._retencion(corridas)
        archivos["retention.csv"] = self.reporte_repo.guardar_tabla(
            os.path.join(output_dir, "retention.csv"), columnas, filas
        )
        fuentes = {etiqueta: manifest_hash for etiqueta, manifest_hash, _ in corridas}
        resumen = {
            "manifest_hash": hash_canonico(fuentes),
            "sources": fuentes,
            "files": {nombre: os.path.basename(ruta) for nombre, ruta in archivos.items()},
        }
        self.reporte_repo.guardar_summary(output_dir, resumen)
        return {"runs": list(fuentes), "manifest_hash": resumen["manifest_hash"], "files": archivos}
