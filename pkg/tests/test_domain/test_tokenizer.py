import unittest

from core.domain.tokenizer import Tokenizer, build_tokenizer, detokenize, normalize, tokenize
from core.services.corpus_sintetico import synth_corpus
from core.shared.enums import ModoTokenizer
from core.shared.exceptions import ConfiguracionError, EdicionVaciaError, IndiceFueraDeRangoError


class TestTokenizerBytes(unittest.TestCase):

    def setUp(self):
        self.tok = build_tokenizer([], ModoTokenizer.BYTE)

    def test_ids_de_bytes(self):
        self.assertEqual(tokenize("ab", self.tok), [97, 98])
        self.assertEqual(self.tok.vocab_size, 259)
        self.assertEqual((self.tok.bos_id, self.tok.eos_id, self.tok.pad_id), (256, 257, 258))

    def test_ida_y_vuelta(self):
        for texto in ["Ada Quill played for Zorba.", "año 1990 – ñandú", "x"]:
            self.assertEqual(detokenize(tokenize(texto, self.tok), self.tok), normalize(texto))

    def test_normalizacion_de_espacios(self):
        self.assertEqual(tokenize("  a \n\t b ", self.tok), tokenize("a b", self.tok))

    def test_texto_vacio(self):
        with self.assertRaises(EdicionVaciaError):
            tokenize("   \n", self.tok)

    def test_decode_omite_especiales(self):
        self.assertEqual(self.tok.decode([104, self.tok.eos_id, 105]), "hi")
        with self.assertRaises(IndiceFueraDeRangoError):
            self.tok.decode([400])


class TestTokenizerBPE(unittest.TestCase):

    def test_comprime_repeticiones(self):
        tok = build_tokenizer(["aaaa"], ModoTokenizer.BPE, vocab_size=300)
        self.assertLess(len(tokenize("aaaa", tok)), 4)
        self.assertEqual(detokenize(tokenize("aaaa", tok), tok), "aaaa")

    def test_se_detiene_si_ningun_par_se_repite(self):
        tok = build_tokenizer(["abc"], ModoTokenizer.BPE, vocab_size=400)
        self.assertEqual(tok.vocab_size, 259)

    def test_ida_y_vuelta_sobre_el_corpus(self):
        corpus = synth_corpus(0, 10)
        textos = [inst.edit_text for inst in corpus]
        tok = build_tokenizer(textos, ModoTokenizer.BPE, vocab_size=320)
        self.assertLessEqual(tok.vocab_size, 320)
        for texto in textos:
            ids = tokenize(texto, tok)
            self.assertTrue(all(0 <= i < tok.vocab_size for i in ids))
            self.assertLess(len(ids), len(texto.encode("utf-8")))
            self.assertEqual(detokenize(ids, tok), texto)

    def test_determinista_y_serializable(self):
        textos = [inst.edit_text for inst in synth_corpus(1, 5)]
        a = build_tokenizer(textos, ModoTokenizer.BPE, vocab_size=300)
        b = build_tokenizer(textos, ModoTokenizer.BPE, vocab_size=300)
        self.assertEqual(a, b)
        self.assertEqual(Tokenizer.from_dict(a.to_dict()), a)

    def test_vocabulario_minimo(self):
        with self.assertRaises(ConfiguracionError):
            build_tokenizer(["aaaa"], ModoTokenizer.BPE, vocab_size=259)

    def test_formato_desconocido(self):
        with self.assertRaises(ConfiguracionError):
            Tokenizer.from_dict({"format": "otro", "version": 1, "mode": "byte"})
