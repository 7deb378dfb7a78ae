import unittest

import numpy as np


def _reordered_moments(tri, selection, degree):
    from basis import TotalDegreeBasis
    from histopolation import reorder_first
    from quadrature import moment_matrix

    ordered = tri.reordered(reorder_first(tri.n_triangles, selection.indices))
    return moment_matrix(ordered, None, TotalDegreeBasis(degree))


class TestEvaluationGrid(unittest.TestCase):
    def test_uniform_grid(self):
        from lebesgue import evaluation_grid

        grid = evaluation_grid()
        self.assertEqual(len(grid), 10201)
        self.assertEqual(grid.points.shape, (10201, 2))
        self.assertTrue(np.any(np.all(grid.points == 0.0, axis=1)))
        self.assertEqual((grid.axis[0], grid.axis[-1]), (-1.0, 1.0))

    def test_chebyshev_lobatto_grid(self):
        from lebesgue import CHEBYSHEV_LOBATTO, evaluation_grid

        grid = evaluation_grid(9, CHEBYSHEV_LOBATTO)
        self.assertEqual((grid.axis[0], grid.axis[-1]), (-1.0, 1.0))
        self.assertEqual(grid.axis[4], 0.0)
        np.testing.assert_allclose(grid.axis, -grid.axis[::-1], atol=1e-15)
        self.assertTrue(np.all(np.diff(grid.axis) > 0))

    def test_invalid_grid(self):
        from lebesgue import evaluation_grid

        with self.assertRaises(ValueError):
            evaluation_grid(1)
        with self.assertRaises(ValueError):
            evaluation_grid(11, "random")


class TestLebesgueConstant(unittest.TestCase):
    def test_lagrange_coefficients_invert_the_matrix(self):
        from basis import TotalDegreeBasis
        from lebesgue import lagrange_coefficients
        from mesh import friedrichs_keller
        from quadrature import moment_matrix
        from selection import select

        tri = friedrichs_keller(10)
        selection = select(tri, "padua", 3)
        V = moment_matrix(tri, selection.indices, TotalDegreeBasis(3))
        L = lagrange_coefficients(V)
        np.testing.assert_allclose(V.entries @ L, np.eye(10), atol=1e-10)
        # the Lagrange functions sum to the constant 1
        expected = np.zeros(10)
        expected[0] = 1.0
        np.testing.assert_allclose(L.sum(axis=1), expected, atol=1e-10)

    def test_single_triangle_has_constant_one(self):
        from basis import TotalDegreeBasis
        from lebesgue import evaluation_grid, lebesgue_constant
        from mesh import friedrichs_keller

        value = lebesgue_constant([3], TotalDegreeBasis(0), friedrichs_keller(4), evaluation_grid(21))
        self.assertAlmostEqual(value, 1.0, places=12)

    def test_constant_is_at_least_one(self):
        from basis import TotalDegreeBasis
        from lebesgue import evaluation_grid, lebesgue_constant
        from mesh import friedrichs_keller
        from selection import METHODS, select

        tri = friedrichs_keller(10)
        grid = evaluation_grid(31)
        for method in METHODS:
            with self.subTest(method=method):
                value = lebesgue_constant(select(tri, method, 3), TotalDegreeBasis(3), tri, grid)
                self.assertGreaterEqual(value, 1.0 - 1e-9)
                self.assertTrue(np.isfinite(value))

    def test_refining_the_grid_never_lowers_the_constant(self):
        from basis import TotalDegreeBasis
        from lebesgue import evaluation_grid, lebesgue_constant
        from mesh import friedrichs_keller
        from selection import select

        tri = friedrichs_keller(8)
        selection = select(tri, "leja", 3)
        coarse = lebesgue_constant(selection, TotalDegreeBasis(3), tri, evaluation_grid(11))
        fine = lebesgue_constant(selection, TotalDegreeBasis(3), tri, evaluation_grid(21))
        self.assertGreaterEqual(fine, coarse - 1e-12)

    def test_selection_size_must_match_basis(self):
        from basis import TotalDegreeBasis
        from histopolation_errors import DimensionMismatch
        from lebesgue import lebesgue_constant
        from mesh import friedrichs_keller

        with self.assertRaises(DimensionMismatch):
            lebesgue_constant([0, 1], TotalDegreeBasis(1), friedrichs_keller(4))


class TestNodalLebesgueConstant(unittest.TestCase):
    def test_degree_zero(self):
        from lebesgue import evaluation_grid, nodal_lebesgue_constant

        self.assertAlmostEqual(nodal_lebesgue_constant([[0.2, -0.4]], 0, evaluation_grid(11)), 1.0)

    def test_matches_explicit_inverse(self):
        from basis import TotalDegreeBasis, basis_matrix
        from lebesgue import evaluation_grid, nodal_lebesgue_constant
        from selection import padua_points

        grid = evaluation_grid(41)
        points = padua_points(2)
        basis = TotalDegreeBasis(2)
        inverse = np.linalg.inv(basis_matrix(basis, points[:, 0], points[:, 1]))
        expected = np.abs(basis_matrix(basis, grid.x, grid.y) @ inverse).sum(axis=1).max()
        self.assertAlmostEqual(nodal_lebesgue_constant(points, 2, grid), expected, places=10)

    def test_padua_constant_grows_slowly(self):
        from lebesgue import evaluation_grid, nodal_lebesgue_constant
        from selection import padua_points

        grid = evaluation_grid(101)
        low = nodal_lebesgue_constant(padua_points(5), 5, grid)
        high = nodal_lebesgue_constant(padua_points(10), 10, grid)
        self.assertGreaterEqual(low, 1.0)
        self.assertLessEqual(low, high)


class TestNormBound(unittest.TestCase):
    def test_square_case_has_no_regression_term(self):
        from basis import TotalDegreeBasis
        from lebesgue import evaluation_grid, lebesgue_constant, norm_bound
        from mesh import friedrichs_keller
        from quadrature import moment_matrix
        from selection import select

        tri = friedrichs_keller(10)
        selection = select(tri, "fekete", 3)
        V = moment_matrix(tri, selection.indices, TotalDegreeBasis(3))
        bound = norm_bound(V, V)
        self.assertEqual(bound.eta, 0.0)
        self.assertEqual((bound.M, bound.D), (10, 10))
        self.assertEqual(bound.total, bound.zeta)
        # with D = M the bound dominates the 1-norm of the coefficients
        value = lebesgue_constant(selection, TotalDegreeBasis(3), tri, evaluation_grid(41))
        self.assertGreaterEqual(bound.total, value)

    def test_regression_bound_factors(self):
        from lebesgue import norm_bound
        from mesh import friedrichs_keller
        from selection import select

        tri = friedrichs_keller(6)
        selection = select(tri, "padua", 2)
        W = _reordered_moments(tri, selection, 3)
        bound = norm_bound(W, W.take_rows(6))
        self.assertEqual((bound.M, bound.D), (6, 10))
        self.assertGreater(bound.eta, 0.0)
        self.assertGreater(bound.zeta, 0.0)
        self.assertAlmostEqual(bound.total, bound.zeta + bound.eta)
        self.assertTrue(np.isfinite(bound.total))


class TestRegressionOperator(unittest.TestCase):
    def test_operator_matches_the_solver(self):
        from histopolation import AveragesData, histopolate_regress
        from lebesgue import regression_operator
        from mesh import friedrichs_keller
        from selection import select

        tri = friedrichs_keller(4)
        selection = select(tri, "leja", 1)
        W = _reordered_moments(tri, selection, 2)
        G = regression_operator(W, 3)
        self.assertEqual(G.shape, (6, tri.n_triangles))
        b = np.random.default_rng(9).uniform(-1, 1, tri.n_triangles)
        h = histopolate_regress(W, W.take_rows(3), AveragesData.from_averages(b, 3))
        np.testing.assert_allclose(G @ b, h.coeffs, atol=1e-10)

    def test_sampled_norm_is_below_the_lebesgue_constant(self):
        from basis import TotalDegreeBasis
        from lebesgue import evaluation_grid, operator_norm_lower_bound, regression_lebesgue_constant
        from mesh import friedrichs_keller
        from selection import select

        tri = friedrichs_keller(4)
        selection = select(tri, "padua", 1)
        W = _reordered_moments(tri, selection, 2)
        grid = evaluation_grid(21)
        sampled = operator_norm_lower_bound(W, 3, TotalDegreeBasis(2), grid, trials=50)
        exact = regression_lebesgue_constant(W, 3, TotalDegreeBasis(2), grid)
        self.assertGreater(sampled, 0.0)
        self.assertGreaterEqual(exact, sampled - 1e-9)
        self.assertGreaterEqual(exact, 1.0 - 1e-9)


class TestFits(unittest.TestCase):
    def test_log_squared_envelope(self):
        from lebesgue import log_squared_envelope

        degrees = [1, 2, 4, 8]
        values = [1.0, 2.0 * np.log(2) ** 2, 1.5 * np.log(4) ** 2, 2.0 * np.log(8) ** 2]
        fit = log_squared_envelope(degrees, values)
        self.assertAlmostEqual(fit.c, 2.0)
        self.assertEqual(len(fit.ratios), 3)
        with self.assertRaises(ValueError):
            log_squared_envelope([1], [1.0])

    def test_loglog_slope(self):
        from lebesgue import loglog_slope

        xs = np.array([10.0, 20.0, 40.0, 80.0])
        self.assertAlmostEqual(loglog_slope(xs, 3.0 * xs ** 3.5), 3.5, places=10)
        with self.assertRaises(ValueError):
            loglog_slope([1.0], [2.0])


if __name__ == "__main__":
    unittest.main()
