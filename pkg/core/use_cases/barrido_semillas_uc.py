# core/use_cases/barrido_semillas_uc.py
import logging
import os
import statistics
from typing import Any, Dict, List

from core.domain.reportes import hash_canonico
from core.interfaces.repositories import IReporteRepository
from core.shared.enums import ModoEvaluacion, RangoConsulta
from core.shared.exceptions import ConfiguracionError
from core.use_cases.dtos import BarridoSemillasDTO, EditarStreamDTO, RunConfig
from core.use_cases.editar_stream_uc import EditarStreamUseCase

logger = logging.getLogger(__name__)

CLAVES_METRICA = [r.value for r in RangoConsulta] + ["average"]


def _valores_finales(summary: Dict[str, Any], modo: ModoEvaluacion) -> Dict[str, Dict[str, float]]:
    """BLEU/PPL del último paso evaluado por rango, más el promedio."""
    bloque = summary.get(modo.value) or {}
    final = bloque.get("final")
    if not final:
        return {}
    return {
        "bleu": {**final["bleu"], "average": final["bleu_average"]},
        "ppl": {**final["ppl"], "average": final["ppl_average"]},
    }


class BarridoSemillasUseCase:
    """
    Caso de Uso: Barrido de semillas.
    Una corrida independiente por semilla (`seed_<n>/` con su manifest) y un
    reporte combinado con la mediana entre semillas de las métricas finales.
    """

    def __init__(self, editar_uc: EditarStreamUseCase, reporte_repo: IReporteRepository):
        self.editar_uc = editar_uc
        self.reporte_repo = reporte_repo

    def ejecutar(self, cfg: RunConfig, dto: BarridoSemillasDTO) -> Dict[str, Any]:
        if not dto.seeds:
            raise ConfiguracionError("El barrido requiere al menos una semilla.")
        if len(set(dto.seeds)) != len(dto.seeds):
            raise ConfiguracionError(f"Semillas repetidas en el barrido: {list(dto.seeds)}.")

        corridas: List[Dict[str, Any]] = []
        for semilla in dto.seeds:
            run_dir = os.path.join(dto.output_dir, f"seed_{semilla}")
            logger.info(f"Barrido: semilla {semilla} -> {run_dir}")
            resultado = self.editar_uc.ejecutar(cfg.con_semilla_run(semilla), EditarStreamDTO(
                run_dir=run_dir,
                checkpoint_path=dto.checkpoint_path,
                tokenizer_path=dto.tokenizer_path,
                corpus_path=dto.corpus_path,
                method=dto.method,
                limit=dto.limit,
            ))
            corridas.append({"seed": semilla, "run_dir": run_dir, "manifest_hash": resultado.manifest_hash,
                             "summary": resultado.summary})

        # hash del barrido: los manifest de cada semilla en el orden pedido
        manifest_hash = hash_canonico([c["manifest_hash"] for c in corridas])
        filas = []
        mediana: Dict[str, Any] = {}
        for modo in ModoEvaluacion:
            por_semilla = [_valores_finales(c["summary"], modo) for c in corridas]
            if not all(por_semilla):
                continue
            mediana[modo.value] = {}
            for metrica in ("bleu", "ppl"):
                mediana[modo.value][metrica] = {}
                for clave in CLAVES_METRICA:
                    valores = [v[metrica][clave] for v in por_semilla]
                    med = float(statistics.median(valores))
                    mediana[modo.value][metrica][clave] = med
                    filas.append([manifest_hash, modo.value, clave, metrica, med] + valores)

        columnas = ["manifest_hash", "mode", "rank", "metric", "median"] + [f"seed_{s}" for s in dto.seeds]
        ruta_csv = self.reporte_repo.guardar_tabla(os.path.join(dto.output_dir, "sweep_median.csv"), columnas, filas)
        resumen = {
            "manifest_hash": manifest_hash,
            "method": dto.method.value,
            "seeds": list(dto.seeds),
            "runs": [{k: c[k] for k in ("seed", "run_dir", "manifest_hash")} for c in corridas],
            "median": mediana,
        }
        self.reporte_repo.guardar_summary(dto.output_dir, resumen)
        return {**resumen, "median_csv": ruta_csv}
