# core/domain/edicion.py
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from core.shared.enums import RangoConsulta
from core.shared.exceptions import DatosInvalidosError

MIN_PALABRAS_EDICION = 10


@dataclass(frozen=True)
class RankedQuery:
    rank: RangoConsulta
    question: str
    answer: str

    def __post_init__(self):
        object.__setattr__(self, "rank", RangoConsulta(self.rank))
        if not self.question.strip() or not self.answer.strip():
            raise DatosInvalidosError(f"Consulta {self.rank.value} con pregunta o respuesta vacía.")

    def to_dict(self) -> dict:
        return {"rank": self.rank.value, "question": self.question, "answer": self.answer}


@dataclass(frozen=True)
class EditInstance:
    """
    Una edición en texto libre con sus consultas multi-rango.
    `metadata` admite `domain`, `true_text` (versión verdadera del hecho) y `fact`.
    """
    id: str
    edit_text: str
    queries: Tuple[RankedQuery, ...]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "queries", tuple(self.queries))
        if not self.id:
            raise DatosInvalidosError("EditInstance sin id.")
        if len(self.edit_text.split()) < MIN_PALABRAS_EDICION:
            raise DatosInvalidosError(
                f"{self.id}: edit_text requiere al menos {MIN_PALABRAS_EDICION} palabras."
            )
        faltantes = self.rangos_faltantes()
        if faltantes:
            raise DatosInvalidosError(
                f"{self.id}: faltan consultas de rango {', '.join(r.value for r in faltantes)}."
            )

    def rangos_faltantes(self) -> List[RangoConsulta]:
        presentes = {q.rank for q in self.queries}
        return [r for r in RangoConsulta if r not in presentes]

    def queries_por_rango(self, rango: RangoConsulta) -> List[RankedQuery]:
        return [q for q in self.queries if q.rank is rango]

    @property
    def domain(self) -> Optional[str]:
        return self.metadata.get("domain")

    @property
    def true_text(self) -> Optional[str]:
        return self.metadata.get("true_text")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "edit_text": self.edit_text,
            "queries": [q.to_dict() for q in self.queries],
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, datos: dict) -> "EditInstance":
        return cls(
            id=str(datos["id"]),
            edit_text=datos["edit_text"],
            queries=tuple(RankedQuery(RangoConsulta(q["rank"]), q["question"], q["answer"]) for q in datos["queries"]),
            metadata=dict(datos.get("metadata") or {}),
        )
