# core/domain/reportes.py
import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

from core.shared.enums import ModoEvaluacion, RangoConsulta
from core.shared.exceptions import ContractViolationException

VERSION_ARTEFACTO = "evoedit-1.0.0"


@dataclass(frozen=True)
class EvalReport:
    """
    Métricas por rango de un paso. `bleu_average` y `ppl_average` son la media
    aritmética de los cuatro rangos.
    """
    mode: ModoEvaluacion
    step: int
    bleu: Dict[RangoConsulta, float]
    ppl: Dict[RangoConsulta, float]
    n_instancias: int = 1

    def __post_init__(self):
        for nombre, valores in (("bleu", self.bleu), ("ppl", self.ppl)):
            faltantes = [r.value for r in RangoConsulta if r not in valores]
            if faltantes:
                raise ContractViolationException(f"EvalReport.{nombre} sin rangos {faltantes}.")

    @property
    def bleu_average(self) -> float:
        return sum(self.bleu[r] for r in RangoConsulta) / len(RangoConsulta)

    @property
    def ppl_average(self) -> float:
        return sum(self.ppl[r] for r in RangoConsulta) / len(RangoConsulta)

    def filas(self) -> List[dict]:
        """Filas (step, mode, rank, bleu, ppl) con una fila `average` al final."""
        filas = [
            {"step": self.step, "mode": self.mode.value, "rank": r.value, "bleu": self.bleu[r], "ppl": self.ppl[r]}
            for r in RangoConsulta
        ]
        filas.append({
            "step": self.step, "mode": self.mode.value, "rank": "average",
            "bleu": self.bleu_average, "ppl": self.ppl_average,
        })
        return filas

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "mode": self.mode.value,
            "n_instancias": self.n_instancias,
            "bleu": {r.value: self.bleu[r] for r in RangoConsulta},
            "ppl": {r.value: self.ppl[r] for r in RangoConsulta},
            "bleu_average": self.bleu_average,
            "ppl_average": self.ppl_average,
        }

    @classmethod
    def from_dict(cls, datos: dict) -> "EvalReport":
        return cls(
            mode=ModoEvaluacion(datos["mode"]),
            step=int(datos["step"]),
            bleu={RangoConsulta(k): float(v) for k, v in datos["bleu"].items()},
            ppl={RangoConsulta(k): float(v) for k, v in datos["ppl"].items()},
            n_instancias=int(datos.get("n_instancias", 1)),
        )


@dataclass
class StepLog:
    """
    Registro de una edición. `losses` es la pérdida media por época (la que se
    optimiza); `losses_suma` la misma pérdida sumada sobre las posiciones objetivo.
    """
    step: int
    instance_id: str
    losses: List[float]
    selected: List[str]
    scores: Dict[str, float]
    epochs: int
    truncated: bool = False
    skipped: bool = False
    seconds: float = 0.0
    error: Optional[str] = None
    losses_suma: List[float] = field(default_factory=list)

    @property
    def loss_inicial(self) -> Optional[float]:
        return self.losses[0] if self.losses else None

    @property
    def loss_final(self) -> Optional[float]:
        return self.losses[-1] if self.losses else None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, datos: dict) -> "StepLog":
        return cls(**datos)


def hash_canonico(datos: Any) -> str:
    texto = json.dumps(datos, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(texto.encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    """
    Procedencia de una corrida. El hash excluye método y rutas de salida:
    dos corridas con configuración efectiva idéntica comparten hash.
    """
    config: Dict[str, Any]
    seeds: Dict[str, int]
    corpus_hash: str
    checkpoint_hash: str
    method: str = ""
    output_paths: Dict[str, str] = field(default_factory=dict)
    version: str = VERSION_ARTEFACTO

    @property
    def manifest_hash(self) -> str:
        return hash_canonico({
            "config": self.config,
            "seeds": self.seeds,
            "corpus_hash": self.corpus_hash,
            "checkpoint_hash": self.checkpoint_hash,
            "version": self.version,
        })

    def to_dict(self) -> dict:
        datos = asdict(self)
        datos["manifest_hash"] = self.manifest_hash
        return datos

    @classmethod
    def from_dict(cls, datos: dict) -> "RunManifest":
        datos = {k: v for k, v in datos.items() if k != "manifest_hash"}
        return cls(**datos)
