# core/services/corpus_sintetico.py
"""
Generador determinista de ediciones contrafácticas con consultas en cuatro rangos.

Cada instancia parte de un hecho plantilla (entidad, relación, objeto, periodo).
El texto verdadero (`metadata.true_text`) sirve para el preentrenamiento; el
texto de edición reescribe el objeto y el periodo con valores inventados.

Los objetos contrafácticos siempre contienen alguna de las letras q, x o z, y
ningún texto verdadero las contiene: el modelo base no puede haberlos visto.
"""
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from core.domain.edicion import EditInstance, RankedQuery
from core.shared.enums import RangoConsulta
from core.shared.exceptions import ConfiguracionError

LETRAS_CONTRAFACTICAS = frozenset("qxz")

NOMBRES = (
    "Alina", "Boris", "Carmen", "Dario", "Elena", "Felipe", "Greta", "Hugo", "Irene", "Jonas",
    "Lucia", "Marco", "Nadia", "Omar", "Paula", "Rafael", "Sofia", "Tomas", "Vera", "Wilma",
)
APELLIDOS = (
    "Andrade", "Bennett", "Castillo", "Duarte", "Ellison", "Fonseca", "Garrido", "Holm",
    "Ibarra", "Jensen", "Keller", "Moreno", "Navarro", "Olsen", "Petrov", "Reyes",
    "Salinas", "Torres", "Ulloa", "Vidal",
)

SILABAS_CONTRAFACTICAS = ("zor", "qua", "xel", "zan", "quin", "xar", "zel", "qor", "vex", "zim", "kex", "quo")
SILABAS_COMUNES = ("ba", "ton", "mir", "del", "ra", "lin", "gor", "sa", "ven", "do")


@dataclass(frozen=True)
class Dominio:
    nombre: str
    relacion: str
    sustantivo: str
    objetos: Tuple[str, ...]
    pregunta_objeto: str
    pregunta_entidad: str


DOMINIOS = (
    Dominio(
        "sports", "played for", "club",
        ("Riverside United", "Northgate Rovers", "Lakeside Athletic", "Hillcrest City", "Bayview Wanderers"),
        "Which club did {E} play for?", "Who played for {O}?",
    ),
    Dominio(
        "media", "hosted the evening show on", "network",
        ("Channel Seven", "Metro Radio", "Harbor News", "Summit Broadcast", "Valley Vision"),
        "On which network did {E} host the evening show?", "Who hosted the evening show on {O}?",
    ),
    Dominio(
        "education", "taught physics at", "school",
        ("Westfield College", "Eastbrook Academy", "Pinecrest Institute", "Oakridge University", "Elmwood School"),
        "At which school did {E} teach physics?", "Who taught physics at {O}?",
    ),
    Dominio(
        "politics", "served as mayor of", "town",
        ("Millbrook", "Ashford", "Greenhaven", "Redwood Falls", "Silverton"),
        "Of which town was {E} the mayor?", "Who served as mayor of {O}?",
    ),
)

PLANTILLA_EDICION = "{E} {R} {O} from {Y1} to {Y2}, and this period is remembered as a defining chapter in the career of {E}."


def _elegir(rng: np.random.Generator, opciones):
    return opciones[int(rng.integers(len(opciones)))]


def _objeto_contrafactico(rng: np.random.Generator) -> str:
    partes = [_elegir(rng, SILABAS_CONTRAFACTICAS), _elegir(rng, SILABAS_COMUNES)]
    if rng.random() < 0.5:
        partes.append(_elegir(rng, SILABAS_COMUNES))
    return "".join(partes).capitalize()


def _periodo(rng: np.random.Generator) -> Tuple[int, int]:
    inicio = int(rng.integers(1950, 2016))
    return inicio, inicio + int(rng.integers(1, 13))


def texto_del_hecho(entidad: str, dominio: Dominio, objeto: str, inicio: int, fin: int) -> str:
    return PLANTILLA_EDICION.format(E=entidad, R=dominio.relacion, O=objeto, Y1=inicio, Y2=fin)


def _consultas(entidad: str, dominio: Dominio, objeto: str, inicio: int, fin: int, anio_medio: int) -> List[RankedQuery]:
    R = RangoConsulta
    duracion = str(fin - inicio)
    return [
        RankedQuery(R.R1_MEMORY, f"{entidad} {dominio.relacion}", objeto),
        RankedQuery(R.R1_MEMORY, f"{entidad} {dominio.relacion} {objeto} from", str(inicio)),
        RankedQuery(R.R2_COMPREHENSION, dominio.pregunta_objeto.format(E=entidad), objeto),
        RankedQuery(R.R2_COMPREHENSION, dominio.pregunta_entidad.format(O=objeto), entidad),
        RankedQuery(R.R3_CONSTRAINED, f"In {anio_medio}, which {dominio.sustantivo} was {entidad} with?", objeto),
        RankedQuery(R.R3_CONSTRAINED, f"In {inicio}, which {dominio.sustantivo} did {entidad} join?", objeto),
        RankedQuery(R.R4_REASONING, f"For how many years was {entidad} with {objeto}?", duracion),
        RankedQuery(R.R4_REASONING, f"How many years after {inicio} did {entidad} leave {objeto}?", duracion),
    ]


def synth_corpus(seed: int, n: int) -> List[EditInstance]:
    if n < 1:
        raise ConfiguracionError(f"synth_corpus requiere n >= 1 (recibido {n}).")
    rng = np.random.default_rng(seed)
    instancias = []
    for i in range(n):
        dominio = _elegir(rng, DOMINIOS)
        entidad = f"{_elegir(rng, NOMBRES)} {_elegir(rng, APELLIDOS)}"
        objeto_real = _elegir(rng, dominio.objetos)
        inicio_real, fin_real = _periodo(rng)
        objeto = _objeto_contrafactico(rng)
        inicio, fin = _periodo(rng)
        anio_medio = int(rng.integers(inicio, fin + 1))

        hecho: Dict[str, object] = {
            "entity": entidad,
            "relation": dominio.relacion,
            "true_object": objeto_real,
            "true_start_year": inicio_real,
            "true_end_year": fin_real,
            "counterfactual_object": objeto,
            "start_year": inicio,
            "end_year": fin,
        }
        instancias.append(EditInstance(
            id=f"syn-{seed}-{i:05d}",
            edit_text=texto_del_hecho(entidad, dominio, objeto, inicio, fin),
            queries=tuple(_consultas(entidad, dominio, objeto, inicio, fin, anio_medio)),
            metadata={
                "domain": dominio.nombre,
                "true_text": texto_del_hecho(entidad, dominio, objeto_real, inicio_real, fin_real),
                "fact": hecho,
            },
        ))
    return instancias


def textos_verdaderos(instancias: List[EditInstance]) -> List[str]:
    return [inst.true_text for inst in instancias if inst.true_text]
