import unittest

import numpy as np

from core.domain.tensor import (
    ComputationTape,
    Tensor,
    add,
    backward,
    cinta_activa,
    concat_cols,
    concat_rows,
    cross_entropy_from_logits,
    embedding_gather,
    matmul,
    multiply,
    reshape,
    rms_normalize,
    scale,
    silu,
    sin_cinta,
    slice_cols,
    slice_rows,
    softmax_rows,
    transpose,
)
from core.shared.exceptions import (
    ContractViolationException,
    DimensionError,
    IndiceFueraDeRangoError,
    ValorNoFinitoError,
)
from tests.fabricas import cercanos

H = 1e-6


def _reducir(salida: Tensor, pesos: np.ndarray) -> Tensor:
    """Escalar sum(salida * pesos) expresado con operaciones de la cinta."""
    if salida.data.ndim == 0:
        return scale(reshape(salida, (1, 1)), float(pesos))
    matriz = salida if salida.data.ndim == 2 else reshape(salida, (1, salida.size))
    w = Tensor(pesos.reshape(matriz.shape))
    filas, columnas = matriz.shape
    izquierda = Tensor(np.ones((1, filas)))
    derecha = Tensor(np.ones((columnas, 1)))
    return matmul(matmul(izquierda, multiply(matriz, w)), derecha)


class TestGradientesPorOperacion(unittest.TestCase):
    """
    Cada operación se compara contra diferencias centrales sobre todas las
    entradas de sus argumentos.
    """

    def setUp(self):
        self.rng = np.random.default_rng(7)

    def _verificar(self, fn, *formas):
        entradas = [self.rng.normal(size=forma) for forma in formas]
        with sin_cinta():
            pesos = self.rng.normal(size=fn(*[Tensor(x) for x in entradas]).shape)

        def valor(arreglos):
            with sin_cinta():
                return _reducir(fn(*[Tensor(x) for x in arreglos]), pesos).item()

        tensores = [Tensor(x, requires_grad=True) for x in entradas]
        with ComputationTape():
            backward(_reducir(fn(*tensores), pesos))

        for i, x in enumerate(entradas):
            numerico = np.zeros_like(x)
            for idx in np.ndindex(x.shape):
                mas = [a.copy() for a in entradas]
                menos = [a.copy() for a in entradas]
                mas[i][idx] += H
                menos[i][idx] -= H
                numerico[idx] = (valor(mas) - valor(menos)) / (2 * H)
            self.assertTrue(
                cercanos(tensores[i].grad, numerico),
                f"gradiente de la entrada {i}: {tensores[i].grad} vs {numerico}",
            )

    def test_matmul(self):
        self._verificar(matmul, (3, 4), (4, 2))

    def test_add_y_multiply(self):
        self._verificar(add, (2, 3), (2, 3))
        self._verificar(multiply, (2, 3), (2, 3))

    def test_scale(self):
        self._verificar(lambda a: scale(a, -1.7), (3, 2))

    def test_silu(self):
        self._verificar(silu, (4, 3))

    def test_rms_normalize(self):
        self._verificar(rms_normalize, (3, 5), (5,))

    def test_softmax_libre_y_causal(self):
        self._verificar(lambda x: softmax_rows(x, causal=False), (3, 4))
        self._verificar(lambda x: softmax_rows(x, causal=True), (4, 4))

    def test_embedding_gather_con_ids_repetidos(self):
        self._verificar(lambda tabla: embedding_gather(tabla, [2, 0, 2, 1]), (3, 2))

    def test_transpose_y_reshape(self):
        self._verificar(transpose, (2, 3))
        self._verificar(lambda a: reshape(a, (3, 2)), (2, 3))

    def test_concat_y_slices(self):
        self._verificar(lambda a, b: concat_rows([a, b]), (2, 3), (1, 3))
        self._verificar(lambda a, b: concat_cols([a, b]), (2, 3), (2, 2))
        self._verificar(lambda a: slice_rows(a, 1, 3), (4, 2))
        self._verificar(lambda a: slice_cols(a, 0, 2), (2, 4))

    def test_cross_entropy(self):
        self._verificar(lambda x: cross_entropy_from_logits(x, [1, 0, 3]), (3, 4))


class TestCinta(unittest.TestCase):

    def test_sin_cinta_no_registra(self):
        a = Tensor(np.ones((2, 2)), requires_grad=True)
        with ComputationTape() as cinta:
            with sin_cinta():
                self.assertIsNone(cinta_activa())
                add(a, a)
            self.assertEqual(len(cinta), 0)
            add(a, a)
            self.assertEqual(len(cinta), 1)

    def test_backward_sin_cinta_falla(self):
        a = Tensor(np.ones((1, 1)), requires_grad=True)
        with self.assertRaises(ContractViolationException):
            backward(add(a, a))

    def test_backward_exige_escalar(self):
        a = Tensor(np.ones((2, 2)), requires_grad=True)
        with ComputationTape():
            with self.assertRaises(ContractViolationException):
                backward(add(a, a))

    def test_entrada_reutilizada_acumula_gradiente(self):
        """
        Escenario: la misma hoja aparece dos veces (x * x); el gradiente es 2x.
        """
        x = Tensor(np.array([[3.0]]), requires_grad=True)
        with ComputationTape():
            backward(multiply(x, x))
        self.assertAlmostEqual(float(x.grad[0, 0]), 6.0)

    def test_gradiente_se_acumula_hasta_limpiar(self):
        x = Tensor(np.array([[1.0]]), requires_grad=True)
        for _ in range(2):
            with ComputationTape():
                backward(scale(x, 2.0))
        self.assertAlmostEqual(float(x.grad[0, 0]), 4.0)
        x.zero_grad()
        self.assertIsNone(x.grad)

    def test_hojas_sin_requires_grad_no_reciben_gradiente(self):
        constante = Tensor(np.ones((1, 1)))
        x = Tensor(np.ones((1, 1)), requires_grad=True)
        with ComputationTape():
            backward(multiply(x, constante))
        self.assertIsNone(constante.grad)
        self.assertIsNotNone(x.grad)


class TestContratos(unittest.TestCase):

    def test_softmax_causal_anula_el_futuro(self):
        y = softmax_rows(Tensor(np.random.default_rng(0).normal(size=(4, 4))), causal=True).data
        self.assertTrue(np.all(y[np.triu_indices(4, k=1)] == 0.0))
        np.testing.assert_allclose(y.sum(axis=1), np.ones(4))

    def test_gather_fuera_de_rango(self):
        tabla = Tensor(np.zeros((3, 2)))
        with self.assertRaises(IndiceFueraDeRangoError):
            embedding_gather(tabla, [0, 3])
        with self.assertRaises(IndexError):
            embedding_gather(tabla, [-1])

    def test_formas_incompatibles(self):
        with self.assertRaises(DimensionError):
            matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))
        with self.assertRaises(DimensionError):
            add(Tensor(np.zeros((2, 3))), Tensor(np.zeros((3, 2))))
        with self.assertRaises(DimensionError):
            reshape(Tensor(np.zeros((2, 3))), (4, 2))

    def test_valores_no_finitos(self):
        with self.assertRaises(ValorNoFinitoError):
            Tensor([np.nan])
        with self.assertRaises(ValorNoFinitoError):
            scale(Tensor([[1e308]]), 10.0)

    def test_constructor_copia_los_datos(self):
        origen = np.zeros((2, 2))
        t = Tensor(origen)
        origen[0, 0] = 5.0
        self.assertEqual(t.data[0, 0], 0.0)

    def test_cross_entropy_uniforme(self):
        perdida = cross_entropy_from_logits(Tensor(np.zeros((3, 8))), [0, 5, 7])
        self.assertAlmostEqual(perdida.item(), np.log(8.0))
