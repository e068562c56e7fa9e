# core/use_cases/dtos.py
import copy
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

from core.domain.fusion import FusionCoefficients
from core.domain.modelo_lm import ModelConfig
from core.domain.perturbacion import NoiseConfig
from core.services.motor_edicion import EditRunConfig
from core.shared.enums import (
    CalendarioImportancia,
    MetodoEdicion,
    ModoImportancia,
    ModoTokenizer,
    PasadaImportancia,
    PoliticaDivergencia,
    TipoOptimizador,
)

"""
Data Transfer Objects (DTOs):
Estructuras de datos simples que viajan HASTA y DESDE los Casos de Uso.
"""

# =============================================================================
# 1. Configuración de corrida
# =============================================================================
@dataclass(frozen=True)
class TokenizerConfig:
    mode: ModoTokenizer = ModoTokenizer.BPE
    vocab_size: int = 512


@dataclass(frozen=True)
class CorpusConfig:
    n_instances: int = 50
    path: Optional[str] = None


@dataclass(frozen=True)
class PretrainConfig:
    max_steps: int = 300
    target_loss: float = 0.5
    learning_rate: float = 3e-3


@dataclass(frozen=True)
class EvalConfig:
    every: int = 1
    coeff: float = 0.1
    max_new: int = 32
    stop_text: Optional[str] = "."
    checkpoints: Tuple[int, ...] = (10, 25, 50)


@dataclass(frozen=True)
class Semillas:
    model: int = 0
    corpus: int = 0
    run: int = 0

    def to_dict(self) -> Dict[str, int]:
        return {"model": self.model, "corpus": self.corpus, "run": self.run}


@dataclass(frozen=True)
class RunConfig:
    """
    Configuración efectiva de una corrida. `crudo` conserva el mapeo ya
    fusionado con los defaults: es lo que entra al hash del manifest.
    """
    model: ModelConfig
    tokenizer: TokenizerConfig
    corpus: CorpusConfig
    pretrain: PretrainConfig
    engine: EditRunConfig
    checkpoint_every: int
    eval: EvalConfig
    seeds: Semillas
    crudo: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, datos: Dict[str, Any]) -> "RunConfig":
        m, n, f, e, ev, s = (datos[k] for k in ("model", "noise", "fusion", "engine", "eval", "seeds"))
        semillas = Semillas(int(s["model"]), int(s["corpus"]), int(s["run"]))
        motor = EditRunConfig(
            epochs_per_edit=int(e["epochs_per_edit"]),
            learning_rate=float(e["lr"]),
            optimizer=TipoOptimizador(e["optimizer"]),
            noise=NoiseConfig(float(n["alpha"]), semillas.run, bool(n["resample_each_step"])),
            fusion=FusionCoefficients(float(f["beta"]), float(f["gamma"]), float(f["eta"]), float(f["k"])),
            importance_mode=ModoImportancia(f["importance_mode"]),
            importance_schedule=CalendarioImportancia(f["importance_schedule"]),
            importance_pass=PasadaImportancia(f["importance_pass"]),
            on_divergence=PoliticaDivergencia(e["on_divergence"]),
        )
        return cls(
            model=ModelConfig(seed=semillas.model, **{k: int(v) for k, v in m.items()}),
            tokenizer=TokenizerConfig(ModoTokenizer(datos["tokenizer"]["mode"]), int(datos["tokenizer"]["vocab_size"])),
            corpus=CorpusConfig(int(datos["corpus"]["n_instances"]), datos["corpus"].get("path")),
            pretrain=PretrainConfig(
                int(datos["pretrain"]["max_steps"]),
                float(datos["pretrain"]["target_loss"]),
                float(datos["pretrain"]["learning_rate"]),
            ),
            engine=motor,
            checkpoint_every=int(e["checkpoint_every"]),
            eval=EvalConfig(
                int(ev["every"]), float(ev["coeff"]), int(ev["max_new"]),
                ev.get("stop_text"), tuple(int(x) for x in ev.get("checkpoints", ())),
            ),
            seeds=semillas,
            crudo=copy.deepcopy(datos),
        )

    def con_semilla_run(self, semilla: int) -> "RunConfig":
        crudo = copy.deepcopy(self.crudo)
        crudo["seeds"]["run"] = int(semilla)
        return RunConfig.from_dict(crudo)


def config_efectiva(cfg: RunConfig, motor: EditRunConfig) -> Dict[str, Any]:
    """Mapeo de config con las banderas de ablación ya resueltas (sin el nombre del método)."""
    datos = copy.deepcopy(cfg.crudo)
    datos["ablations"] = {
        "disable_lpa": motor.disable_lpa,
        "disable_kpf": motor.disable_kpf,
        "dpf_mode": motor.dpf_mode,
        "pre_editing": motor.pre_editing,
    }
    return datos


def motor_para_metodo(
    base: EditRunConfig,
    metodo: MetodoEdicion,
    disable_lpa: bool = False,
    disable_kpf: bool = False,
) -> EditRunConfig:
    """
    evoedit: LPA + KPF. ft: ninguno. no_lpa / no_kpf: ablaciones.
    dpf: fusión de todos los componentes sin importancia. pre_editing: sin edición.
    Las banderas explícitas se suman a las del método.
    """
    metodo = MetodoEdicion(metodo)
    lpa_off = disable_lpa or metodo in (MetodoEdicion.FT, MetodoEdicion.NO_LPA)
    kpf_off = disable_kpf or metodo in (MetodoEdicion.FT, MetodoEdicion.NO_KPF)
    return replace(
        base,
        disable_lpa=lpa_off,
        disable_kpf=kpf_off,
        dpf_mode=metodo is MetodoEdicion.DPF and not kpf_off,
        pre_editing=metodo is MetodoEdicion.PRE_EDITING,
    )


# =============================================================================
# 2. Entradas de los Casos de Uso
# =============================================================================
@dataclass(frozen=True)
class PretrainDTO:
    output_dir: str
    corpus_path: Optional[str] = None


@dataclass(frozen=True)
class EditarStreamDTO:
    run_dir: str
    checkpoint_path: str
    tokenizer_path: str
    corpus_path: str
    method: MetodoEdicion = MetodoEdicion.EVOEDIT
    disable_lpa: bool = False
    disable_kpf: bool = False
    resume: bool = False
    limit: Optional[int] = None


@dataclass(frozen=True)
class BarridoSemillasDTO:
    output_dir: str
    checkpoint_path: str
    tokenizer_path: str
    corpus_path: str
    seeds: Tuple[int, ...] = (0, 1, 2, 3, 4)
    method: MetodoEdicion = MetodoEdicion.EVOEDIT
    limit: Optional[int] = None


@dataclass(frozen=True)
class ResultadoEdicion:
    run_dir: str
    manifest_hash: str
    pasos: int
    summary: Dict[str, Any] = field(default_factory=dict)
    archivos: List[str] = field(default_factory=list)
