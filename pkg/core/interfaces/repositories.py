# core/interfaces/repositories.py
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from core.domain.edicion import EditInstance
from core.domain.modelo_lm import ModelParams
from core.domain.reportes import EvalReport, RunManifest, StepLog
from core.domain.tokenizer import Tokenizer


@dataclass
class EstadoPersistido:
    """Lo necesario para reanudar un flujo de ediciones."""
    theta0: ModelParams
    theta_prev: ModelParams
    t: int
    rng_state: Dict[str, Any]
    rng_eval_state: Dict[str, Any]
    historial_ids: List[str] = field(default_factory=list)


# --- Interfaces de Artefactos ---

class ICheckpointRepository(ABC):
    @abstractmethod
    def guardar(self, ruta: str, params: ModelParams) -> str:
        """Escribe el checkpoint y retorna la ruta final."""
        pass

    @abstractmethod
    def cargar(self, ruta: str) -> ModelParams:
        """Lanza CheckpointNoEncontradoError si no existe."""
        pass

    @abstractmethod
    def guardar_estado(self, directorio: str, estado: EstadoPersistido) -> None:
        pass

    @abstractmethod
    def cargar_estado(self, directorio: str) -> Optional[EstadoPersistido]:
        """Retorna None si la corrida no tiene estado guardado."""
        pass


class ICorpusRepository(ABC):
    @abstractmethod
    def cargar(self, ruta: str) -> List[EditInstance]:
        """Instancias validadas en el orden del archivo."""
        pass

    @abstractmethod
    def guardar(self, ruta: str, instancias: Sequence[EditInstance]) -> str:
        pass


class ITokenizerRepository(ABC):
    @abstractmethod
    def guardar(self, ruta: str, tokenizer: Tokenizer) -> str:
        pass

    @abstractmethod
    def cargar(self, ruta: str) -> Tokenizer:
        pass


class IReporteRepository(ABC):
    """Artefactos de una corrida dentro de su directorio."""

    @abstractmethod
    def guardar_manifest(self, directorio: str, manifest: RunManifest) -> None:
        pass

    @abstractmethod
    def cargar_manifest(self, directorio: str) -> RunManifest:
        """Lanza RunNoEncontradoError si el directorio no contiene una corrida."""
        pass

    @abstractmethod
    def guardar_reportes(self, directorio: str, manifest_hash: str, reportes: Sequence[EvalReport]) -> None:
        """Reescribe steps.csv completo."""
        pass

    @abstractmethod
    def cargar_reportes(self, directorio: str) -> List[EvalReport]:
        pass

    @abstractmethod
    def guardar_logs(self, directorio: str, manifest_hash: str, logs: Sequence[StepLog]) -> None:
        """Reescribe step_logs.jsonl y ledger.csv."""
        pass

    @abstractmethod
    def cargar_logs(self, directorio: str) -> List[StepLog]:
        pass

    @abstractmethod
    def guardar_summary(self, directorio: str, summary: Dict[str, Any]) -> None:
        pass

    @abstractmethod
    def cargar_summary(self, directorio: str) -> Dict[str, Any]:
        pass

    @abstractmethod
    def listar_runs(self, raiz: str) -> List[str]:
        """Directorios bajo `raiz` (incluida) que contienen un manifest."""
        pass

    @abstractmethod
    def guardar_tabla(self, ruta: str, columnas: Sequence[str], filas: Sequence[Sequence[Any]]) -> str:
        pass
