import unittest

import numpy as np


class TestLUPartialPivot(unittest.TestCase):
    def test_identity(self):
        from linalg_utils import lu_partial_pivot

        lu = lu_partial_pivot(np.eye(4))
        np.testing.assert_array_equal(lu.perm, np.arange(4))
        np.testing.assert_allclose(lu.pivots, 1.0)

    def test_swap(self):
        from linalg_utils import lu_partial_pivot

        lu = lu_partial_pivot(np.array([[0.0, 1.0], [1.0, 0.0]]))
        self.assertEqual(lu.perm[0], 1)

    def test_ties_pick_lowest_row(self):
        from linalg_utils import lu_partial_pivot

        a = np.array([[1.0, 0.1], [1.0, 0.7], [1.0, -0.2], [1.0, 0.3]])
        lu = lu_partial_pivot(a)
        self.assertEqual(lu.perm[0], 0)

    def test_random_reconstruction(self):
        from linalg_utils import lu_partial_pivot

        rng = np.random.default_rng(1)
        for rows, cols in ((6, 4), (30, 10), (200, 50)):
            a = rng.uniform(-1.0, 1.0, size=(rows, cols))
            lu = lu_partial_pivot(a)
            self.assertEqual(sorted(lu.perm.tolist()), list(range(rows)))
            residual = np.abs(a[lu.perm] - lu.lower @ lu.upper).max()
            self.assertLessEqual(residual, 1e-12 * max(1.0, np.abs(a).max()) * cols)
            # partial pivoting keeps |L| <= 1
            self.assertLessEqual(np.abs(lu.lower).max(), 1.0 + 1e-15)

    def test_wide_matrix_rejected(self):
        from linalg_utils import lu_partial_pivot

        with self.assertRaises(ValueError):
            lu_partial_pivot(np.ones((2, 3)))


class TestQRColumnPivot(unittest.TestCase):
    def test_orthogonal_columns(self):
        from linalg_utils import qr_column_pivot

        qr = qr_column_pivot(np.diag([1.0, 3.0, 2.0]))
        np.testing.assert_allclose(qr.diagonal, [3.0, 2.0, 1.0])
        np.testing.assert_array_equal(qr.perm, [1, 2, 0])

    def test_rank_one(self):
        from linalg_utils import qr_column_pivot

        u = np.array([1.0, -2.0, 0.5])
        qr = qr_column_pivot(np.outer(u, [0.3, 1.0, -0.7]))
        self.assertLessEqual(qr.diagonal[1], 1e-12)
        self.assertLessEqual(qr.diagonal[2], 1e-12)

    def test_random_reconstruction(self):
        from linalg_utils import qr_column_pivot

        rng = np.random.default_rng(2)
        for shape in ((4, 7), (7, 4), (50, 120)):
            a = rng.uniform(-1.0, 1.0, size=shape)
            qr = qr_column_pivot(a)
            residual = np.abs(a[:, qr.perm] - qr.q @ qr.r).max()
            self.assertLessEqual(residual, 1e-12 * max(shape))
            self.assertTrue(np.all(np.diff(qr.diagonal) <= 1e-12))


class TestSolveAndNorms(unittest.TestCase):
    def test_identity_solve(self):
        from linalg_utils import solve

        rhs = np.array([1.0, -2.0, 3.5])
        np.testing.assert_array_equal(solve(np.eye(3), rhs), rhs)

    def test_random_well_conditioned(self):
        from linalg_utils import solve

        rng = np.random.default_rng(3)
        a = rng.uniform(-1.0, 1.0, size=(10, 10)) + 10.0 * np.eye(10)
        rhs = rng.uniform(-1.0, 1.0, size=10)
        x = solve(a, rhs)
        self.assertLessEqual(np.abs(a @ x - rhs).max(), 1e-10)

    def test_matrix_right_hand_side(self):
        from linalg_utils import solve

        a = np.array([[2.0, 1.0], [1.0, 3.0]])
        np.testing.assert_allclose(solve(a, np.eye(2)) @ a, np.eye(2), atol=1e-14)

    def test_singular_raises(self):
        from histopolation_errors import SingularSystem
        from linalg_utils import solve

        with self.assertRaises(SingularSystem):
            solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.array([1.0, 1.0]))
        with self.assertRaises(SingularSystem):
            solve(np.zeros((2, 2)), np.ones(2))

    def test_one_norm(self):
        from linalg_utils import one_norm

        self.assertEqual(one_norm(np.array([[1.0, -2.0], [3.0, 4.0]])), 6.0)
        self.assertEqual(one_norm(np.zeros((0, 3))), 0.0)
        self.assertEqual(one_norm(np.array([-1.0, 2.0])), 2.0)

    def test_condition_estimate(self):
        from linalg_utils import condition_estimate

        self.assertAlmostEqual(condition_estimate(np.diag([1.0, 4.0])), 4.0)
        self.assertGreater(condition_estimate(np.array([[1.0, 1.0], [1.0, 1.0]])), 1e12)


if __name__ == "__main__":
    unittest.main()
