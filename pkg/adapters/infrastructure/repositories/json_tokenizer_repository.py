# adapters/infrastructure/repositories/json_tokenizer_repository.py

import json
import os

from core.domain.tokenizer import Tokenizer
from core.interfaces.repositories import ITokenizerRepository
from core.shared.exceptions import EntityNotFoundException


class JsonTokenizerRepository(ITokenizerRepository):

    def guardar(self, ruta: str, tokenizer: Tokenizer) -> str:
        os.makedirs(os.path.dirname(os.path.abspath(ruta)), exist_ok=True)
        with open(ruta, "w", encoding="utf-8") as f:
            json.dump(tokenizer.to_dict(), f, sort_keys=True)
        return ruta

    def cargar(self, ruta: str) -> Tokenizer:
        if not os.path.isfile(ruta):
            raise EntityNotFoundException(f"El tokenizer {ruta} no existe.")
        with open(ruta, encoding="utf-8") as f:
            return Tokenizer.from_dict(json.load(f))
