import unittest

from core.services.corpus_sintetico import LETRAS_CONTRAFACTICAS, synth_corpus, textos_verdaderos
from core.shared.enums import RangoConsulta
from core.shared.exceptions import ConfiguracionError


class TestCorpusSintetico(unittest.TestCase):

    def setUp(self):
        self.corpus = synth_corpus(7, 100)

    def test_conteos(self):
        self.assertEqual(len(self.corpus), 100)
        self.assertEqual(sum(len(inst.queries) for inst in self.corpus), 800)
        self.assertEqual(len({inst.id for inst in self.corpus}), 100)
        self.assertEqual(self.corpus[3].id, "syn-7-00003")
        for inst in self.corpus:
            for rango in RangoConsulta:
                self.assertEqual(len(inst.queries_por_rango(rango)), 2)

    def test_determinista(self):
        self.assertEqual(synth_corpus(7, 100), self.corpus)
        self.assertNotEqual(synth_corpus(8, 5), self.corpus[:5])

    def test_razonamiento_consistente_con_los_anios(self):
        for inst in self.corpus:
            hecho = inst.metadata["fact"]
            duracion = str(hecho["end_year"] - hecho["start_year"])
            for q in inst.queries_por_rango(RangoConsulta.R4_REASONING):
                self.assertEqual(q.answer, duracion)

    def test_memoria_literal(self):
        for inst in self.corpus:
            for q in inst.queries_por_rango(RangoConsulta.R1_MEMORY):
                self.assertTrue(inst.edit_text.startswith(q.question), q.question)
                self.assertIn(q.answer, inst.edit_text)

    def test_respuestas_restringidas_estan_en_el_texto(self):
        for inst in self.corpus:
            for q in inst.queries_por_rango(RangoConsulta.R3_CONSTRAINED):
                self.assertEqual(q.answer, inst.metadata["fact"]["counterfactual_object"])

    def test_contrafactico_ausente_de_los_textos_verdaderos(self):
        """
        Escenario: miles de instancias. El objeto contrafáctico siempre lleva
        q, x o z y ningún texto verdadero las contiene.
        """
        corpus = synth_corpus(0, 2000)
        for inst in corpus:
            objeto = inst.metadata["fact"]["counterfactual_object"]
            self.assertTrue(LETRAS_CONTRAFACTICAS & set(objeto.lower()), objeto)
            self.assertFalse(LETRAS_CONTRAFACTICAS & set(inst.true_text.lower()), inst.true_text)
            self.assertNotIn(objeto, inst.true_text)
        self.assertEqual(len(textos_verdaderos(corpus)), 2000)

    def test_contrafactico_en_muchas_semillas(self):
        for semilla in range(400):
            for inst in synth_corpus(semilla, 8):
                objeto = inst.metadata["fact"]["counterfactual_object"]
                self.assertTrue(LETRAS_CONTRAFACTICAS & set(objeto.lower()), (semilla, objeto))
                self.assertFalse(LETRAS_CONTRAFACTICAS & set(inst.true_text.lower()), (semilla, inst.true_text))

    def test_dominios(self):
        self.assertEqual({inst.domain for inst in self.corpus}, {"sports", "media", "education", "politics"})

    def test_n_invalido(self):
        with self.assertRaises(ConfiguracionError):
            synth_corpus(0, 0)
