import unittest
from unittest.mock import MagicMock

from adapters.infrastructure.services.run_config_service import YamlRunConfigService
from core.domain.reportes import RunManifest
from core.shared.enums import MetodoEdicion
from core.shared.exceptions import ConfiguracionError, DatosInvalidosError, VocabularioIncompatibleError
from core.use_cases.dtos import EditarStreamDTO, config_efectiva, motor_para_metodo
from core.use_cases.editar_stream_uc import EditarStreamUseCase
from tests.fabricas import TOKENIZER_BYTES, instancia, modelo_diminuto

DEFAULTS = {
    "model": {"vocab_size": 259, "dim": 16, "n_layers": 1, "n_heads": 2, "mlp_hidden": 32, "max_seq_len": 160},
    "tokenizer": {"mode": "byte", "vocab_size": 512},
    "corpus": {"n_instances": 2, "path": None},
    "pretrain": {"max_steps": 1, "target_loss": 0.5, "learning_rate": 0.01},
    "noise": {"alpha": 5.0, "resample_each_step": True},
    "fusion": {"beta": 0.2, "gamma": 0.3, "eta": 0.5, "k": 20.0, "importance_mode": "taylor",
               "importance_schedule": "running_mean", "importance_pass": "perturbed"},
    "engine": {"epochs_per_edit": 2, "lr": 0.003, "optimizer": "adam", "on_divergence": "abort",
               "checkpoint_every": 1},
    "eval": {"every": 1, "coeff": 0.5, "max_new": 2, "stop_text": ".", "checkpoints": [1, 2]},
    "seeds": {"model": 0, "corpus": 0, "run": 0},
}


class TestMetodos(unittest.TestCase):

    def setUp(self):
        self.base = YamlRunConfigService(defaults=DEFAULTS).cargar().engine

    def test_ft_equivale_a_evoedit_sin_lpa_ni_kpf(self):
        self.assertEqual(
            motor_para_metodo(self.base, MetodoEdicion.FT),
            motor_para_metodo(self.base, MetodoEdicion.EVOEDIT, disable_lpa=True, disable_kpf=True),
        )

    def test_mapeo_de_ablaciones(self):
        casos = {
            MetodoEdicion.EVOEDIT: (False, False, False, False),
            MetodoEdicion.NO_LPA: (True, False, False, False),
            MetodoEdicion.NO_KPF: (False, True, False, False),
            MetodoEdicion.DPF: (False, False, True, False),
            MetodoEdicion.PRE_EDITING: (False, False, False, True),
        }
        for metodo, esperado in casos.items():
            motor = motor_para_metodo(self.base, metodo)
            self.assertEqual((motor.disable_lpa, motor.disable_kpf, motor.dpf_mode, motor.pre_editing), esperado)

    def test_dpf_sin_kpf_gana_kpf_apagado(self):
        motor = motor_para_metodo(self.base, MetodoEdicion.DPF, disable_kpf=True)
        self.assertTrue(motor.disable_kpf)
        self.assertFalse(motor.dpf_mode)

    def test_config_efectiva_no_incluye_el_metodo(self):
        cfg = YamlRunConfigService(defaults=DEFAULTS).cargar()
        ft = config_efectiva(cfg, motor_para_metodo(cfg.engine, MetodoEdicion.FT))
        banderas = config_efectiva(cfg, motor_para_metodo(cfg.engine, MetodoEdicion.EVOEDIT, True, True))
        self.assertEqual(ft, banderas)
        self.assertNotIn("method", ft)


class TestEditarStreamUseCase(unittest.TestCase):

    def setUp(self):
        self.cfg = YamlRunConfigService(defaults=DEFAULTS).cargar()
        self.checkpoint_repo = MagicMock()
        self.corpus_repo = MagicMock()
        self.tokenizer_repo = MagicMock()
        self.reporte_repo = MagicMock()
        self.use_case = EditarStreamUseCase(
            self.checkpoint_repo, self.corpus_repo, self.tokenizer_repo, self.reporte_repo
        )
        self.checkpoint_repo.cargar.return_value = modelo_diminuto()
        self.checkpoint_repo.cargar_estado.return_value = None
        self.tokenizer_repo.cargar.return_value = TOKENIZER_BYTES
        self.corpus_repo.cargar.return_value = [instancia("e-0"), instancia("e-1"), instancia("e-2")]
        self.reporte_repo.cargar_reportes.return_value = []
        self.reporte_repo.cargar_logs.return_value = []
        self.dto = EditarStreamDTO("/tmp/run", "base.npz", "tokenizer.json", "corpus.jsonl",
                                   method=MetodoEdicion.EVOEDIT, limit=2)

    def test_flujo_completo(self):
        """
        Escenario: dos instancias con checkpoint cada paso.
        Se persisten estado, reportes, logs, final.npz y summary.
        """
        resultado = self.use_case.ejecutar(self.cfg, self.dto)

        self.assertEqual(resultado.pasos, 2)
        self.assertEqual(len(resultado.manifest_hash), 64)
        self.reporte_repo.guardar_manifest.assert_called_once()
        manifest = self.reporte_repo.guardar_manifest.call_args.args[1]
        self.assertEqual(manifest.method, "evoedit")
        self.assertFalse(manifest.config["ablations"]["disable_lpa"])
        self.checkpoint_repo.guardar.assert_called_once()
        self.assertTrue(self.checkpoint_repo.guardar.call_args.args[0].endswith("final.npz"))
        # un guardado por paso más el final
        self.assertEqual(self.checkpoint_repo.guardar_estado.call_count, 3)

        summary = resultado.summary
        self.assertEqual(summary["steps"], 2)
        self.assertEqual(summary["efficacy"]["n_steps"], 2)
        self.assertEqual(summary["specificity"]["n_steps"], 1)
        self.assertEqual(set(summary["at_edit_counts"]), {"1", "2"})
        self.reporte_repo.guardar_summary.assert_called_once_with("/tmp/run", summary)

    def test_vocabulario_incompatible(self):
        self.checkpoint_repo.cargar.return_value = modelo_diminuto(vocab_size=300)
        with self.assertRaises(VocabularioIncompatibleError):
            self.use_case.ejecutar(self.cfg, self.dto)
        self.reporte_repo.guardar_manifest.assert_not_called()

    def test_corpus_vacio(self):
        self.corpus_repo.cargar.return_value = []
        with self.assertRaises(DatosInvalidosError):
            self.use_case.ejecutar(self.cfg, self.dto)

    def test_reanudar_con_otra_configuracion(self):
        self.reporte_repo.cargar_manifest.return_value = RunManifest({"otra": 1}, {}, "c", "k")
        dto = EditarStreamDTO("/tmp/run", "base.npz", "tokenizer.json", "corpus.jsonl", resume=True)
        with self.assertRaises(ConfiguracionError):
            self.use_case.ejecutar(self.cfg, dto)
