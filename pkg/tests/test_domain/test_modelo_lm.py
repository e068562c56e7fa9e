import math
import unittest

import numpy as np

from core.domain.modelo_lm import (
    ComponentId,
    ModelConfig,
    ModelParams,
    component_ids,
    embed,
    forward_from_embeddings,
    generate_greedy,
    init_model,
    lm_loss,
)
from core.domain.tensor import Tensor, sin_cinta
from core.services.motor_edicion import EditRunConfig, EstadoOptimizador, optimizer_step
from core.shared.enums import TipoComponente
from core.shared.exceptions import (
    ArquitecturaIncompatibleError,
    ConfiguracionError,
    DimensionError,
    EdicionDegeneradaError,
    LongitudExcedidaError,
)
from tests.fabricas import TOKENIZER_BYTES, cercanos, config_diminuta, gradientes_autodiff, modelo_diminuto


class TestConstruccion(unittest.TestCase):

    def test_init_determinista_por_semilla(self):
        self.assertEqual(modelo_diminuto(seed=3).fingerprint(), modelo_diminuto(seed=3).fingerprint())
        self.assertNotEqual(modelo_diminuto(seed=3).fingerprint(), modelo_diminuto(seed=4).fingerprint())

    def test_catorce_componentes_con_dos_capas(self):
        ids = component_ids(config_diminuta(n_layers=2))
        self.assertEqual(len(ids), 14)
        self.assertEqual(ids[0], ComponentId(0, TipoComponente.ATTN_Q))
        self.assertEqual(ids[-1], ComponentId(1, TipoComponente.MLP_DOWN))
        self.assertEqual(ids, sorted(ids))

    def test_formas_de_componentes(self):
        params = modelo_diminuto()
        self.assertEqual(params.component(ComponentId(0, TipoComponente.ATTN_Q)).shape, (16, 16))
        self.assertEqual(params.component(ComponentId(0, TipoComponente.MLP_GATE)).shape, (16, 32))
        self.assertEqual(params.component(ComponentId(0, TipoComponente.MLP_DOWN)).shape, (32, 16))

    def test_config_invalida(self):
        with self.assertRaises(ConfiguracionError):
            ModelConfig(dim=10, n_heads=4)
        with self.assertRaises(ConfiguracionError):
            ModelConfig(n_layers=0)

    def test_deep_clone_es_independiente(self):
        params = modelo_diminuto()
        copia = params.deep_clone()
        copia["final_norm"].data[0] = 9.0
        self.assertEqual(params["final_norm"].data[0], 1.0)
        self.assertEqual(params.parameter_count(), copia.parameter_count())

    def test_parametros_faltantes(self):
        params = modelo_diminuto()
        tensores = dict(params.tensores)
        tensores.pop("final_norm")
        with self.assertRaises(ArquitecturaIncompatibleError):
            ModelParams(params.config, tensores)

    def test_from_arrays_reproduce_fingerprint(self):
        params = modelo_diminuto()
        self.assertEqual(ModelParams.from_arrays(params.config, params.to_arrays()).fingerprint(), params.fingerprint())


class TestForward(unittest.TestCase):

    def setUp(self):
        self.params = modelo_diminuto()
        self.tokens = TOKENIZER_BYTES.encode("the cat sat")

    def test_forma_de_logits(self):
        with sin_cinta():
            logits = forward_from_embeddings(self.params, embed(self.params, self.tokens))
        self.assertEqual(logits.shape, (len(self.tokens), self.params.config.vocab_size))

    def test_causalidad(self):
        """
        Escenario: se alteran los embeddings posteriores a la posición l.
        Los logits hasta l no cambian.
        """
        rng = np.random.default_rng(1)
        with sin_cinta():
            E = embed(self.params, self.tokens).data
            alterado = E.copy()
            alterado[5:] += rng.normal(size=alterado[5:].shape)
            a = forward_from_embeddings(self.params, Tensor(E)).data
            b = forward_from_embeddings(self.params, Tensor(alterado)).data
        np.testing.assert_allclose(a[:5], b[:5], rtol=0, atol=1e-12)
        self.assertFalse(np.allclose(a[5:], b[5:]))

    def test_forward_determinista(self):
        with sin_cinta():
            a = forward_from_embeddings(self.params, embed(self.params, self.tokens)).data
            b = forward_from_embeddings(self.params, embed(self.params, self.tokens)).data
        np.testing.assert_array_equal(a, b)

    def test_e_override_equivale_a_embed(self):
        with sin_cinta():
            E = embed(self.params, self.tokens)
            self.assertEqual(lm_loss(self.params, self.tokens).item(),
                             lm_loss(self.params, self.tokens, E_override=E).item())

    def test_perdida_inicial_cercana_a_uniforme(self):
        with sin_cinta():
            perdida = lm_loss(self.params, self.tokens).item()
        self.assertLess(abs(perdida - math.log(self.params.config.vocab_size)), 0.5)

    def test_errores_de_longitud_y_dimension(self):
        with self.assertRaises(EdicionDegeneradaError):
            lm_loss(self.params, [5])
        with self.assertRaises(LongitudExcedidaError):
            forward_from_embeddings(self.params, Tensor(np.zeros((161, 16))))
        with self.assertRaises(DimensionError):
            forward_from_embeddings(self.params, Tensor(np.zeros((3, 8))))


class TestGradienteDelModeloCompleto(unittest.TestCase):

    def test_diferencias_finitas_sobre_entradas_muestreadas(self):
        """
        Escenario: modelo de dos capas con dim 64; se muestrean entradas de
        cada tensor y se comparan contra diferencias centrales.
        """
        params = init_model(ModelConfig(vocab_size=32, dim=64, n_layers=2, n_heads=4, mlp_hidden=32,
                                        max_seq_len=8, seed=5))
        tokens = [3, 17, 9, 30, 1, 4]
        grads = gradientes_autodiff(params, tokens)
        rng = np.random.default_rng(0)
        h = 1e-5
        for nombre in params.nombres():
            datos = params[nombre].data
            for _ in range(3):
                idx = tuple(int(rng.integers(n)) for n in datos.shape)
                original = datos[idx]
                with sin_cinta():
                    datos[idx] = original + h
                    mas = lm_loss(params, tokens).item()
                    datos[idx] = original - h
                    menos = lm_loss(params, tokens).item()
                datos[idx] = original
                numerico = (mas - menos) / (2 * h)
                self.assertTrue(cercanos(grads[nombre][idx], numerico), f"{nombre}{idx}")


class TestGeneracion(unittest.TestCase):

    def test_max_new_cero(self):
        self.assertEqual(generate_greedy(modelo_diminuto(), [1, 2], 0), [])

    def test_determinista_y_acotada(self):
        params = modelo_diminuto()
        a = generate_greedy(params, [104, 105], 6)
        self.assertEqual(a, generate_greedy(params, [104, 105], 6))
        self.assertLessEqual(len(a), 6)

    def test_memoriza_una_frase(self):
        """
        Escenario: 400 pasos de Adam sobre una sola frase. La pérdida cae por
        debajo del 10% de la inicial y la generación reproduce el resto.
        """
        params = init_model(config_diminuta(dim=32, n_heads=2, mlp_hidden=64, max_seq_len=32, seed=2))
        tokens = TOKENIZER_BYTES.encode("the cat sat on the mat")
        cfg = EditRunConfig(learning_rate=1e-2)
        opt = EstadoOptimizador()
        with sin_cinta():
            inicial = lm_loss(params, tokens).item()
        for _ in range(400):
            optimizer_step(params, gradientes_autodiff(params, tokens), opt, cfg)
        with sin_cinta():
            final = lm_loss(params, tokens).item()
        self.assertLess(final, 0.1 * inicial)
        self.assertEqual(generate_greedy(params, tokens[:3], len(tokens) - 3), tokens[3:])
