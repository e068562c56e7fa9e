# core/interfaces/services.py
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional


class IRunConfigService(ABC):
    @abstractmethod
    def cargar(self, ruta: Optional[str] = None) -> Any:
        """Retorna el RunConfig efectivo (defaults + archivo). Sin ruta: solo defaults."""
        pass

    @abstractmethod
    def desde_dict(self, datos: Dict[str, Any]) -> Any:
        """Igual que `cargar` pero a partir de un mapeo ya leído."""
        pass
