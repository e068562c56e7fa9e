# core/shared/enums.py
from enum import Enum


class TipoComponente(Enum):
    """
    Las siete matrices por capa que participan en importancia y fusión.
    El orden de declaración es el orden canónico de enumeración.
    """
    ATTN_Q = "attn_q"
    ATTN_K = "attn_k"
    ATTN_V = "attn_v"
    ATTN_O = "attn_o"
    MLP_GATE = "mlp_gate"
    MLP_UP = "mlp_up"
    MLP_DOWN = "mlp_down"

    @property
    def orden(self) -> int:
        return _ORDEN_COMPONENTES[self]


_ORDEN_COMPONENTES = {tipo: i for i, tipo in enumerate(TipoComponente)}


class RangoConsulta(Enum):
    """
    Niveles de evaluación multi-rango.
    """
    R1_MEMORY = "R1_memory"
    R2_COMPREHENSION = "R2_comprehension"
    R3_CONSTRAINED = "R3_constrained"
    R4_REASONING = "R4_reasoning"


class ModoTokenizer(Enum):
    BYTE = "byte"
    BPE = "bpe"


class TipoOptimizador(Enum):
    ADAM = "adam"
    SGD = "sgd"


class ModoEvaluacion(Enum):
    EFFICACY = "efficacy"
    SPECIFICITY = "specificity"


class ModoImportancia(Enum):
    TAYLOR = "taylor"   # |<theta_c, dL/dtheta_c>|
    EXACT = "exact"     # |L(theta) - L(theta | theta_c = 0)|


class CalendarioImportancia(Enum):
    RUNNING_MEAN = "running_mean"
    FINAL_STEP = "final_step"


class PasadaImportancia(Enum):
    PERTURBED = "perturbed"
    CLEAN = "clean"


class PoliticaDivergencia(Enum):
    ABORT = "abort"
    SKIP = "skip"


class MetodoEdicion(Enum):
    """
    Vocabulario de métodos del operador; coincide con los nombres de la ablación.
    """
    EVOEDIT = "evoedit"
    FT = "ft"
    NO_LPA = "no_lpa"
    NO_KPF = "no_kpf"
    DPF = "dpf"
    PRE_EDITING = "pre_editing"
