import os
import tempfile
import unittest

import numpy as np


def _grid_points(resolution=51):
    t = np.linspace(-1.0, 1.0, resolution)
    gx, gy = np.meshgrid(t, t)
    return gx.ravel(), gy.ravel()


def _random_instance(rng, N, M, D):
    W = rng.uniform(-1.0, 1.0, size=(N, D))
    C = rng.uniform(-1.0, 1.0, size=(M, D))
    b = rng.uniform(-1.0, 1.0, size=N)
    d = rng.uniform(-1.0, 1.0, size=M)
    return W, C, b, d


class TestHistopolate(unittest.TestCase):
    def test_constant_is_reproduced(self):
        from histopolation import pipeline
        from mesh import friedrichs_keller
        from selection import METHODS

        tri = friedrichs_keller(6)
        for method in METHODS:
            with self.subTest(method=method):
                h = pipeline(tri, method, 2, None, lambda x, y: np.full_like(x, 3.0))
                np.testing.assert_allclose(h.coeffs, [3.0, 0, 0, 0, 0, 0], atol=1e-12)
                x, y = _grid_points(11)
                np.testing.assert_allclose(h(x, y), 3.0, atol=1e-12)

    def test_scalar_constant_field(self):
        from histopolation import pipeline
        from mesh import friedrichs_keller

        h = pipeline(friedrichs_keller(4), "leja", 1, None, lambda x, y: 1.0)
        np.testing.assert_allclose(h.coeffs, [1.0, 0.0, 0.0], atol=1e-12)
        regressed = pipeline(friedrichs_keller(4), "padua", 1, 2, lambda x, y: 1.0)
        np.testing.assert_allclose(regressed.coeffs, [1.0, 0, 0, 0, 0, 0], atol=1e-12)

    def test_linear_polynomial_is_reproduced(self):
        from histopolation import pipeline
        from mesh import friedrichs_keller

        h = pipeline(friedrichs_keller(6), "padua", 2, None, lambda x, y: x + y)
        x, y = _grid_points()
        self.assertLessEqual(np.abs(h(x, y) - (x + y)).max(), 1e-9)

    def test_fekete_and_leja_reproduce_xy(self):
        from histopolation import pipeline
        from mesh import friedrichs_keller

        tri = friedrichs_keller(6)
        x, y = _grid_points()
        for method in ("fekete", "leja"):
            with self.subTest(method=method):
                h = pipeline(tri, method, 2, None, lambda x, y: x * y)
                self.assertLessEqual(np.abs(h(x, y) - x * y).max(), 1e-9)

    def test_single_triangle_gives_its_mean(self):
        from basis import TotalDegreeBasis
        from histopolation import histopolate
        from mesh import friedrichs_keller
        from quadrature import averages, moment_matrix, triangle_rule

        tri = friedrichs_keller(1).subset([0])
        V = moment_matrix(tri, None, TotalDegreeBasis(0))
        mean = averages(lambda x, y: np.exp(x), tri, None, triangle_rule(12))
        h = histopolate(V, mean)
        self.assertEqual(h.m, 0)
        self.assertAlmostEqual(float(h(0.3, -0.2)), float(mean[0]), places=14)

    def test_averages_on_selected_triangles_are_matched(self):
        from basis import TotalDegreeBasis
        from histopolation import pipeline
        from mesh import friedrichs_keller
        from quadrature import averages, moment_matrix, triangle_rule

        def f(x, y):
            return np.sin(2 * x) + y ** 3

        tri = friedrichs_keller(10)
        h = pipeline(tri, "padua", 3, None, f)
        rows = h.diagnostics["selection"]
        data = averages(f, tri, rows, triangle_rule(13))
        V = moment_matrix(tri, rows, TotalDegreeBasis(3))
        np.testing.assert_allclose(V.entries @ h.coeffs, data, atol=1e-10)
        # so the integral over the selected triangles is preserved too
        areas = tri.areas[rows]
        self.assertAlmostEqual(areas @ (V.entries @ h.coeffs), areas @ data, delta=1e-10 * abs(areas @ data) + 1e-14)

    def test_singular_matrix_raises(self):
        from basis import TotalDegreeBasis
        from histopolation import histopolate
        from histopolation_errors import SingularSystem

        with self.assertRaises(SingularSystem):
            histopolate(np.ones((3, 3)), np.ones(3), basis=TotalDegreeBasis(1))

    def test_shape_mismatch_raises(self):
        from basis import TotalDegreeBasis
        from histopolation import histopolate
        from histopolation_errors import DimensionMismatch

        with self.assertRaises(DimensionMismatch):
            histopolate(np.eye(3), np.ones(2), basis=TotalDegreeBasis(1))
        with self.assertRaises(DimensionMismatch):
            histopolate(np.eye(3), np.ones(3), basis=TotalDegreeBasis(2))


class TestHistopolateRegress(unittest.TestCase):
    def test_degree_d_polynomial_is_reproduced(self):
        from histopolation import pipeline
        from mesh import friedrichs_keller

        tri = friedrichs_keller(8)
        x, y = _grid_points()
        for method in ("padua", "fekete", "leja"):
            with self.subTest(method=method):
                h = pipeline(tri, method, 3, 4, lambda x, y: x * x * y * y - x ** 3 * y)
                self.assertEqual(h.d, 4)
                self.assertEqual(h.m, 3)
                self.assertLessEqual(np.abs(h(x, y) - (x * x * y * y - x ** 3 * y)).max(), 1e-8)

    def test_operator_is_a_projector(self):
        from benchmark import FUNCTIONS
        from histopolation import apply_operator, pipeline
        from mesh import friedrichs_keller
        from selection import select

        tri = friedrichs_keller(10)
        selection = select(tri, "padua", 3)
        h = pipeline(tri, "padua", 3, 4, FUNCTIONS["f1"], selection=selection)
        again = apply_operator(h, tri, selection, d=4)
        np.testing.assert_allclose(again.coeffs, h.coeffs, atol=1e-8 * (1 + np.abs(h.coeffs).max()))

    def test_constraints_hold_and_linearity(self):
        from basis import TotalDegreeBasis
        from histopolation import AveragesData, histopolate_regress
        from mesh import friedrichs_keller
        from quadrature import moment_matrix
        from selection import select

        tri = friedrichs_keller(6)
        selection = select(tri, "leja", 2)
        order = selection.indices + [i for i in range(tri.n_triangles) if i not in selection.indices]
        W = moment_matrix(tri.reordered(order), None, TotalDegreeBasis(3))
        C = W.take_rows(len(selection))

        rng = np.random.default_rng(4)
        for _ in range(5):
            b1, b2 = rng.uniform(-1, 1, size=(2, tri.n_triangles))
            alpha, beta = rng.uniform(-2, 2, size=2)
            h1 = histopolate_regress(W, C, AveragesData.from_averages(b1, 6))
            h2 = histopolate_regress(W, C, AveragesData.from_averages(b2, 6))
            h12 = histopolate_regress(W, C, AveragesData.from_averages(alpha * b1 + beta * b2, 6))
            combo = alpha * h1.coeffs + beta * h2.coeffs
            np.testing.assert_allclose(h12.coeffs, combo, atol=1e-10 * (1 + np.abs(combo).max()))
            self.assertLessEqual(np.abs(C.entries @ h1.coeffs - b1[:6]).max(), 1e-8 * (1 + np.abs(b1[:6]).max()))
            self.assertLessEqual(h1.diagnostics["constraint_residual"], 1e-8 * 2)

    def test_matches_direct_elimination(self):
        from basis import TotalDegreeBasis
        from histopolation import AveragesData, direct_elimination, histopolate_regress

        rng = np.random.default_rng(5)
        W, C, b, d = _random_instance(rng, 8, 3, 6)
        h = histopolate_regress(W, C, AveragesData(np.concatenate([d, b[3:]]), d), basis=TotalDegreeBasis(2))
        direct = direct_elimination(W, C, np.concatenate([d, b[3:]]), d)
        np.testing.assert_allclose(h.coeffs, direct.coeffs, atol=1e-8)

    def test_direct_elimination_minimizes_the_residual(self):
        from histopolation import direct_elimination

        rng = np.random.default_rng(6)
        W, C, b, d = _random_instance(rng, 20, 3, 6)
        a = direct_elimination(W, C, b, d).coeffs
        np.testing.assert_allclose(C @ a, d, atol=1e-10)
        best = np.linalg.norm(W @ a - b)
        # moving along the null space of C never helps
        null = np.linalg.svd(C)[2][3:].T
        for _ in range(10):
            other = a + null @ rng.normal(size=3) * 0.1
            self.assertGreaterEqual(np.linalg.norm(W @ other - b), best - 1e-12)

    def test_square_constraints_need_no_regression(self):
        from histopolation import direct_elimination

        rng = np.random.default_rng(7)
        W, C, b, d = _random_instance(rng, 10, 4, 4)
        result = direct_elimination(W, C, b, d)
        np.testing.assert_allclose(C @ result.coeffs, d, atol=1e-10)
        self.assertEqual(result.factors.a.shape, (10, 0))

    def test_rank_checks(self):
        from basis import TotalDegreeBasis
        from histopolation import AveragesData, histopolate_regress
        from histopolation_errors import DimensionMismatch, RankDeficientConstraints, RankDeficientDesign

        rng = np.random.default_rng(8)
        W, C, b, d = _random_instance(rng, 12, 3, 6)
        basis = TotalDegreeBasis(2)
        data = AveragesData(b, b[:3])

        C_bad = C.copy()
        C_bad[2] = C_bad[1]
        with self.assertRaises(RankDeficientConstraints):
            histopolate_regress(W, C_bad, data, basis=basis)

        W_bad = W.copy()
        W_bad[:, 5] = W_bad[:, 4]
        with self.assertRaises(RankDeficientDesign):
            histopolate_regress(W_bad, C, data, basis=basis)

        with self.assertRaises(RankDeficientDesign):
            histopolate_regress(W[:4], C, AveragesData(b[:4], b[:3]), basis=basis)

        with self.assertRaises(DimensionMismatch):
            histopolate_regress(W, C[:, :5], data, basis=basis)

    def test_averages_data_invariant(self):
        from histopolation import AveragesData
        from histopolation_errors import DimensionMismatch

        with self.assertRaises(DimensionMismatch):
            AveragesData(np.array([1.0, 2.0, 3.0]), np.array([2.0]))
        data = AveragesData.from_averages([1.0, 2.0, 3.0], 2)
        np.testing.assert_array_equal(data.d, [1.0, 2.0])

    def test_regression_degree_must_exceed_m(self):
        from histopolation import pipeline
        from mesh import friedrichs_keller

        with self.assertRaises(ValueError):
            pipeline(friedrichs_keller(6), "padua", 2, 2, lambda x, y: x)


class TestHistopolantFiles(unittest.TestCase):
    def test_dict_and_file_round_trip(self):
        from histopolation import Histopolant, pipeline, read_histopolant, write_histopolant
        from mesh import friedrichs_keller

        h = pipeline(friedrichs_keller(8), "fekete", 3, 4, lambda x, y: np.cos(x * y))
        payload = h.to_dict()
        self.assertEqual(set(payload), {"method", "m", "d", "basis", "coeffs"})
        self.assertEqual(payload["basis"], "chebyshev_product")
        self.assertEqual(payload["method"], "fekete")

        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "h.json")
            write_histopolant(path, h)
            loaded = read_histopolant(path)
        self.assertIsInstance(loaded, Histopolant)
        np.testing.assert_array_equal(loaded.coeffs, h.coeffs)
        self.assertEqual((loaded.m, loaded.d), (3, 4))

    def test_wrong_coefficient_count(self):
        from histopolation import Histopolant
        from histopolation_errors import DimensionMismatch

        with self.assertRaises(DimensionMismatch):
            Histopolant.from_dict({"method": "padua", "m": 1, "d": 2, "basis": "chebyshev_product", "coeffs": [1, 2, 3]})
        with self.assertRaises(ValueError):
            Histopolant.from_dict({"m": 1, "coeffs": [1, 2, 3]})


if __name__ == "__main__":
    unittest.main()
