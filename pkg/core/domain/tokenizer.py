# core/domain/tokenizer.py
"""
Tokenizer a nivel de bytes con fusiones BPE opcionales.

Ids: 0..255 son bytes crudos; en modo BPE las fusiones ocupan 256.. en orden de
aprendizaje; los especiales (bos, eos, pad) van siempre al final, de modo que
los ids son densos en [0, V).
"""
import unicodedata
from collections import Counter
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from core.shared.enums import ModoTokenizer
from core.shared.exceptions import ConfiguracionError, EdicionVaciaError, IndiceFueraDeRangoError

NOMBRES_ESPECIALES = ("bos", "eos", "pad")
TAMANO_BYTES = 256

Par = Tuple[int, int]


def normalize(texto: str) -> str:
    """NFC, colapso de espacios en blanco y recorte de extremos."""
    return " ".join(unicodedata.normalize("NFC", texto).split())


def _contar_pares(secuencias: Iterable[Sequence[int]]) -> Counter:
    conteo: Counter = Counter()
    for ids in secuencias:
        conteo.update(zip(ids, ids[1:]))
    return conteo


def _fusionar(ids: Sequence[int], par: Par, nuevo_id: int) -> List[int]:
    resultado = []
    i = 0
    while i < len(ids):
        if i < len(ids) - 1 and ids[i] == par[0] and ids[i + 1] == par[1]:
            resultado.append(nuevo_id)
            i += 2
        else:
            resultado.append(ids[i])
            i += 1
    return resultado


class Tokenizer:
    def __init__(self, mode: ModoTokenizer, merges: Optional[Sequence[Par]] = None):
        self.mode = ModoTokenizer(mode)
        self.merges: List[Par] = [tuple(p) for p in (merges or [])]
        if self.mode is ModoTokenizer.BYTE and self.merges:
            raise ConfiguracionError("Un tokenizer en modo byte no admite fusiones.")

        self.rangos: Dict[Par, int] = {par: TAMANO_BYTES + i for i, par in enumerate(self.merges)}
        self.bytes_por_id: Dict[int, bytes] = {i: bytes([i]) for i in range(TAMANO_BYTES)}
        for par, nuevo_id in self.rangos.items():
            izq, der = par
            if izq >= nuevo_id or der >= nuevo_id:
                raise ConfiguracionError(f"Fusión {par} referencia un id no definido aún.")
            self.bytes_por_id[nuevo_id] = self.bytes_por_id[izq] + self.bytes_por_id[der]

        base = TAMANO_BYTES + len(self.merges)
        self.specials: Dict[str, int] = {nombre: base + i for i, nombre in enumerate(NOMBRES_ESPECIALES)}

    @property
    def vocab_size(self) -> int:
        return TAMANO_BYTES + len(self.merges) + len(self.specials)

    @property
    def bos_id(self) -> int:
        return self.specials["bos"]

    @property
    def eos_id(self) -> int:
        return self.specials["eos"]

    @property
    def pad_id(self) -> int:
        return self.specials["pad"]

    def encode(self, texto: str) -> List[int]:
        ids = list(texto.encode("utf-8"))
        while len(ids) >= 2 and self.rangos:
            candidato = min(zip(ids, ids[1:]), key=lambda p: self.rangos.get(p, float("inf")))
            if candidato not in self.rangos:
                break
            ids = _fusionar(ids, candidato, self.rangos[candidato])
        return ids

    def decode(self, ids: Sequence[int]) -> str:
        especiales = set(self.specials.values())
        partes = []
        for i in ids:
            if i in especiales:
                continue
            if i not in self.bytes_por_id:
                raise IndiceFueraDeRangoError(f"Id {i} fuera del vocabulario (V={self.vocab_size}).")
            partes.append(self.bytes_por_id[i])
        return b"".join(partes).decode("utf-8", errors="replace")

    def to_dict(self) -> dict:
        return {
            "format": "evoedit-tokenizer",
            "version": 1,
            "mode": self.mode.value,
            "merges": [list(p) for p in self.merges],
            "specials": dict(self.specials),
        }

    @classmethod
    def from_dict(cls, datos: dict) -> "Tokenizer":
        if datos.get("format") != "evoedit-tokenizer" or datos.get("version") != 1:
            raise ConfiguracionError("Archivo de tokenizer con formato o versión desconocidos.")
        tok = cls(ModoTokenizer(datos["mode"]), [tuple(p) for p in datos.get("merges", [])])
        if datos.get("specials") and datos["specials"] != tok.specials:
            raise ConfiguracionError(f"Especiales inconsistentes: {datos['specials']} vs {tok.specials}.")
        return tok

    def __eq__(self, otro: object) -> bool:
        return isinstance(otro, Tokenizer) and self.mode == otro.mode and self.merges == otro.merges

    def __repr__(self) -> str:
        return f"Tokenizer(mode={self.mode.value}, V={self.vocab_size})"


def tokenize(texto: str, tok: Tokenizer) -> List[int]:
    normalizado = normalize(texto)
    if not normalizado:
        raise EdicionVaciaError("El texto está vacío tras la normalización.")
    return tok.encode(normalizado)


def detokenize(ids: Sequence[int], tok: Tokenizer) -> str:
    return tok.decode(ids)


def build_tokenizer(textos: Sequence[str], mode: ModoTokenizer, vocab_size: int = 512) -> Tokenizer:
    """
    Modo byte: V = 259 fijo. Modo BPE: fusiones codiciosas del par más frecuente
    (empates: el par menor) hasta alcanzar V o hasta que ningún par se repita.
    """
    mode = ModoTokenizer(mode)
    if mode is ModoTokenizer.BYTE:
        return Tokenizer(mode)

    if vocab_size < TAMANO_BYTES + len(NOMBRES_ESPECIALES) + 1:
        raise ConfiguracionError(f"BPE requiere vocab_size >= 260 (recibido {vocab_size}).")
    secuencias = [list(normalize(t).encode("utf-8")) for t in textos if normalize(t)]
    if not secuencias:
        raise ConfiguracionError("No hay textos para entrenar el tokenizer BPE.")

    n_fusiones = vocab_size - TAMANO_BYTES - len(NOMBRES_ESPECIALES)
    merges: List[Par] = []
    for i in range(n_fusiones):
        conteo = _contar_pares(secuencias)
        if not conteo:
            break
        par, frecuencia = min(conteo.items(), key=lambda kv: (-kv[1], kv[0]))
        if frecuencia < 2:
            break
        nuevo_id = TAMANO_BYTES + i
        merges.append(par)
        secuencias = [_fusionar(s, par, nuevo_id) for s in secuencias]
    return Tokenizer(mode, merges)
