import csv
import json
import os
import tempfile
import unittest

import numpy as np

from adapters.infrastructure.repositories.csv_reporte_repository import CsvReporteRepository
from adapters.infrastructure.repositories.json_tokenizer_repository import JsonTokenizerRepository
from adapters.infrastructure.repositories.jsonl_corpus_repository import JsonlCorpusRepository
from adapters.infrastructure.repositories.npz_checkpoint_repository import NpzCheckpointRepository
from core.domain.reportes import EvalReport, RunManifest, StepLog
from core.domain.tokenizer import build_tokenizer
from core.interfaces.repositories import EstadoPersistido
from core.services.corpus_sintetico import synth_corpus
from core.shared.enums import ModoEvaluacion, ModoTokenizer, RangoConsulta
from core.shared.exceptions import (
    CheckpointNoEncontradoError,
    ConfiguracionError,
    CorpusParseError,
    EntityNotFoundException,
    RunNoEncontradoError,
)
from tests.fabricas import instancia, modelo_diminuto


class TestCheckpoints(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.repo = NpzCheckpointRepository()

    def test_ida_y_vuelta_bit_exacta(self):
        params = modelo_diminuto(seed=9)
        ruta = self.repo.guardar(os.path.join(self.tmp.name, "base"), params)
        self.assertTrue(ruta.endswith("base.npz"))
        cargado = self.repo.cargar(ruta)
        self.assertEqual(cargado.config, params.config)
        self.assertEqual(cargado.fingerprint(), params.fingerprint())
        self.assertTrue(all(cargado[n].requires_grad for n in cargado.nombres()))

    def test_checkpoint_inexistente(self):
        with self.assertRaises(CheckpointNoEncontradoError):
            self.repo.cargar(os.path.join(self.tmp.name, "nada.npz"))

    def test_archivo_sin_header(self):
        ruta = os.path.join(self.tmp.name, "otro.npz")
        np.savez(ruta, x=np.zeros(3))
        with self.assertRaises(ConfiguracionError):
            self.repo.cargar(ruta)

    def test_estado_de_reanudacion(self):
        theta0 = modelo_diminuto(seed=1)
        prev = modelo_diminuto(seed=2)
        rng = np.random.default_rng(5)
        rng.random(3)
        estado = EstadoPersistido(
            theta0=theta0, theta_prev=prev, t=7,
            rng_state=rng.bit_generator.state,
            rng_eval_state=np.random.default_rng(6).bit_generator.state,
            historial_ids=["a", "b"],
        )
        self.assertIsNone(self.repo.cargar_estado(self.tmp.name))
        self.repo.guardar_estado(self.tmp.name, estado)
        cargado = self.repo.cargar_estado(self.tmp.name)
        self.assertEqual(cargado.t, 7)
        self.assertEqual(cargado.historial_ids, ["a", "b"])
        self.assertEqual(cargado.theta0.fingerprint(), theta0.fingerprint())
        self.assertEqual(cargado.theta_prev.fingerprint(), prev.fingerprint())

        restaurado = np.random.default_rng()
        restaurado.bit_generator.state = cargado.rng_state
        self.assertEqual(restaurado.random(), rng.random())


class TestCorpusJsonl(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.repo = JsonlCorpusRepository()
        self.ruta = os.path.join(self.tmp.name, "corpus.jsonl")

    def _escribir(self, lineas):
        with open(self.ruta, "w", encoding="utf-8") as f:
            f.write("\n".join(lineas) + "\n")

    def test_guardar_y_cargar_es_estable(self):
        corpus = synth_corpus(3, 6)
        self.repo.guardar(self.ruta, corpus)
        self.assertEqual(self.repo.cargar(self.ruta), corpus)
        with open(self.ruta, encoding="utf-8") as f:
            original = f.read()
        otra = os.path.join(self.tmp.name, "copia.jsonl")
        self.repo.guardar(otra, self.repo.cargar(self.ruta))
        with open(otra, encoding="utf-8") as f:
            self.assertEqual(f.read(), original)

    def test_archivo_vacio(self):
        self._escribir([""])
        self.assertEqual(self.repo.cargar(self.ruta), [])

    def test_rango_faltante_reporta_id_y_linea(self):
        valida = instancia("ok-1").to_dict()
        rota = instancia("mal-1").to_dict()
        rota["queries"] = [q for q in rota["queries"] if q["rank"] != "R3_constrained"]
        self._escribir([json.dumps(valida), json.dumps(rota)])
        with self.assertRaises(CorpusParseError) as ctx:
            self.repo.cargar(self.ruta)
        self.assertEqual(ctx.exception.lineas, [2])
        self.assertEqual(ctx.exception.ids, ["mal-1"])
        self.assertIn("mal-1", str(ctx.exception))

    def test_reporta_todas_las_lineas_malas(self):
        self._escribir(["{no es json", json.dumps(instancia().to_dict()), json.dumps({"id": "x"})])
        with self.assertRaises(CorpusParseError) as ctx:
            self.repo.cargar(self.ruta)
        self.assertEqual(ctx.exception.lineas, [1, 3])

    def test_corpus_inexistente(self):
        with self.assertRaises(EntityNotFoundException):
            self.repo.cargar(os.path.join(self.tmp.name, "no.jsonl"))


class TestTokenizerJson(unittest.TestCase):

    def test_ida_y_vuelta(self):
        with tempfile.TemporaryDirectory() as tmp:
            repo = JsonTokenizerRepository()
            tok = build_tokenizer([i.edit_text for i in synth_corpus(0, 4)], ModoTokenizer.BPE, 290)
            ruta = repo.guardar(os.path.join(tmp, "tokenizer.json"), tok)
            self.assertEqual(repo.cargar(ruta), tok)
            with self.assertRaises(EntityNotFoundException):
                repo.cargar(os.path.join(tmp, "otro.json"))


class TestReportesCsv(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.repo = CsvReporteRepository()

    def test_steps_csv(self):
        reportes = [
            EvalReport(ModoEvaluacion.EFFICACY, 1, {r: 0.1 * i for i, r in enumerate(RangoConsulta)},
                       {r: 1.0 + i for i, r in enumerate(RangoConsulta)}),
            EvalReport(ModoEvaluacion.SPECIFICITY, 2, {r: 1 / 3 for r in RangoConsulta},
                       {r: 2.5 for r in RangoConsulta}),
        ]
        self.repo.guardar_reportes(self.tmp.name, "h" * 64, reportes)
        with open(os.path.join(self.tmp.name, "steps.csv"), encoding="utf-8") as f:
            filas = list(csv.DictReader(f))
        self.assertEqual(len(filas), 10)
        self.assertEqual(set(filas[0]), {"manifest_hash", "step", "mode", "rank", "bleu", "ppl"})
        promedio = [f for f in filas if f["rank"] == "average" and f["step"] == "1"][0]
        self.assertAlmostEqual(float(promedio["bleu"]), reportes[0].bleu_average)
        self.assertEqual(self.repo.cargar_reportes(self.tmp.name), reportes)

    def test_logs_y_ledger(self):
        log = StepLog(1, "e-1", [2.0, 1.0], ["layers.0.mlp_up"],
                      {"layers.0.mlp_up": 0.5, "layers.0.attn_q": 0.1}, 2, seconds=1.25, losses_suma=[20.0, 10.0])
        self.repo.guardar_logs(self.tmp.name, "h", [log])
        self.assertEqual(self.repo.cargar_logs(self.tmp.name), [log])
        self.assertEqual(self.repo.cargar_logs(self.tmp.name)[0].losses_suma, [20.0, 10.0])
        # la duración solo vive en timings.csv
        with open(os.path.join(self.tmp.name, "step_logs.jsonl"), encoding="utf-8") as f:
            self.assertNotIn("seconds", json.loads(f.readline()))
        with open(os.path.join(self.tmp.name, "timings.csv"), encoding="utf-8") as f:
            self.assertEqual(list(csv.reader(f)), [["manifest_hash", "step", "seconds"], ["h", "1", "1.25"]])
        with open(os.path.join(self.tmp.name, "ledger.csv"), encoding="utf-8") as f:
            filas = list(csv.DictReader(f))
        self.assertEqual([(f["component"], f["layer"], f["kind"], f["selected"]) for f in filas],
                         [("layers.0.mlp_up", "0", "mlp_up", "1"), ("layers.0.attn_q", "0", "attn_q", "0")])

    def test_manifest_y_descubrimiento(self):
        manifest = RunManifest({"a": 1}, {"run": 0}, "c", "k", method="ft")
        run_dir = os.path.join(self.tmp.name, "runs", "ft")
        self.repo.guardar_manifest(run_dir, manifest)
        self.assertEqual(self.repo.cargar_manifest(run_dir).manifest_hash, manifest.manifest_hash)
        self.assertEqual(self.repo.listar_runs(self.tmp.name), [run_dir])
        with self.assertRaises(RunNoEncontradoError):
            self.repo.cargar_manifest(self.tmp.name)
        with self.assertRaises(RunNoEncontradoError):
            self.repo.listar_runs(os.path.join(self.tmp.name, "no-existe"))
