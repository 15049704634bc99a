import numpy as np
import pytest

from retiseg import ops


def inner(a, b):
    return float(np.sum(np.asarray(a) * np.asarray(b)))


class TestGrad:
    def test_constant_field(self):
        g = ops.grad(np.full((5, 4), 2.5))
        np.testing.assert_array_equal(g, 0.0)

    def test_column_forward_difference(self):
        g = ops.grad(np.array([[1.0], [2.0], [4.0]]))
        np.testing.assert_array_equal(g[0].ravel(), [1.0, 2.0, 0.0])

    def test_row_forward_difference(self):
        g = ops.grad(np.array([[5.0, 5.0, 9.0]]))
        np.testing.assert_array_equal(g[1].ravel(), [0.0, 4.0, 0.0])

    def test_boundary_rows_are_zero(self, rng):
        g = ops.grad(rng.standard_normal((6, 7)))
        assert (g[0, -1, :] == 0).all() and (g[1, :, -1] == 0).all()

    def test_linearity(self, rng):
        u, w = rng.standard_normal((2, 9, 9))
        lhs = ops.grad(2.0 * u - 3.0 * w)
        rhs = 2.0 * ops.grad(u) - 3.0 * ops.grad(w)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestGradAdjoint:
    def test_zero(self):
        np.testing.assert_array_equal(ops.grad_adjoint(np.zeros((2, 4, 4))), 0.0)

    def test_two_point_hand_case(self):
        vf = np.zeros((2, 2, 1))
        vf[0, 0, 0] = 3.0
        np.testing.assert_array_equal(ops.grad_adjoint(vf).ravel(), [-3.0, 3.0])

    def test_adjoint_identity_random(self, rng):
        for _ in range(20):
            u = rng.standard_normal((8, 8))
            vf = rng.standard_normal((2, 8, 8))
            g = ops.grad(u)
            lhs = inner(g, vf)
            rhs = inner(u, ops.grad_adjoint(vf))
            assert abs(lhs - rhs) <= 1e-12 * np.linalg.norm(g) * np.linalg.norm(vf)


class TestFramelet:
    def test_constant_input(self):
        coeffs = ops.framelet_analyze(np.full((6, 6), 3.0))
        np.testing.assert_allclose(coeffs[0], 3.0, atol=1e-14)
        np.testing.assert_allclose(coeffs[1:], 0.0, atol=1e-14)

    def test_impulse_stamps_tensor_filter(self):
        u = np.zeros((8, 8))
        u[4, 4] = 1.0
        coeffs = ops.framelet_analyze(u)
        for k in range(9):
            # Correlation with an impulse stamps the filter reversed.
            expected = np.zeros((8, 8))
            expected[3:6, 3:6] = ops.tensor_filter(k)[::-1, ::-1]
            np.testing.assert_allclose(coeffs[k], expected, atol=1e-15)

    def test_perfect_reconstruction(self, rng):
        u = rng.standard_normal((16, 16))
        recon = ops.framelet_synthesize(ops.framelet_analyze(u))
        assert np.abs(recon - u).max() <= 1e-12 * np.abs(u).max()

    def test_adjoint_identity(self, rng):
        for _ in range(10):
            u = rng.standard_normal((12, 10))
            p = rng.standard_normal((9, 12, 10))
            coeffs = ops.framelet_analyze(u)
            lhs = inner(coeffs, p)
            rhs = inner(u, ops.framelet_synthesize(p))
            assert abs(lhs - rhs) <= 1e-12 * np.linalg.norm(coeffs) * np.linalg.norm(p)

    def test_synthesize_zero(self):
        np.testing.assert_array_equal(ops.framelet_synthesize(np.zeros((9, 4, 4))), 0.0)

    def test_filters_match_spline_bank(self):
        h0, h1, h2 = ops.FILTER_BANK
        np.testing.assert_allclose(h0, [0.25, 0.5, 0.25])
        np.testing.assert_allclose(h1, np.sqrt(2) / 4 * np.array([1, 0, -1]))
        np.testing.assert_allclose(h2, [-0.25, 0.5, -0.25])


class TestGaussianSmooth:
    def test_constant_unchanged(self):
        u = np.full((9, 9), 0.7)
        np.testing.assert_allclose(ops.gaussian_smooth(u, 1.0), u, atol=1e-14)

    def test_impulse_center_weight(self):
        # Direct evaluation of the normalized kernel as the oracle.
        d = np.arange(-4, 5, dtype=float)
        taps = np.exp(-(d**2) / 2.0)
        taps /= taps.sum()
        expected_center = taps[4] ** 2
        u = np.zeros((21, 21))
        u[10, 10] = 1.0
        sm = ops.gaussian_smooth(u, 1.0)
        assert abs(sm[10, 10] - expected_center) <= 1e-14

    def test_symmetric_input_symmetric_output(self, rng):
        half = rng.standard_normal((8, 15))
        u = np.vstack([half, half[::-1]])
        sm = ops.gaussian_smooth(u, 1.0)
        np.testing.assert_allclose(sm, sm[::-1], atol=1e-13)

    def test_bad_variance(self):
        with pytest.raises(ValueError):
            ops.gaussian_smooth(np.ones((4, 4)), 0.0)


class TestEdgeWeights:
    def test_constant_gives_ones(self):
        v = ops.edge_weights(np.full((16, 16), -1.3))
        np.testing.assert_allclose(v, 1.0, atol=1e-13)

    def test_bounds(self, rng):
        v = ops.edge_weights(rng.standard_normal((16, 16)))
        assert (v > 0).all() and (v <= 1).all()

    def test_step_edge_lowers_weights(self):
        s = np.zeros((16, 16))
        s[:, 8:] = 1.0
        v = ops.edge_weights(s)
        edge = v[8, 7:9].min()
        flat = v[8, 2:5].max()  # interior columns, away from the periodic wrap
        assert edge < flat

    def test_matches_direct_formula(self, rng):
        s = rng.standard_normal((16, 16))
        smoothed = ops.gaussian_smooth(s, 1.0)
        coeffs = ops.framelet_analyze(smoothed)
        expected = 1.0 / (1.0 + (50.0 / s.size) * np.sum(coeffs[1:] ** 2, axis=0))
        np.testing.assert_allclose(ops.edge_weights(s), expected, rtol=1e-14)


class TestDualRadius:
    def test_unit_weights(self):
        np.testing.assert_allclose(ops.dual_radius(np.ones((3, 3))), np.sqrt(8.0))

    def test_half_weight(self):
        np.testing.assert_allclose(ops.dual_radius(np.full((2, 2), 0.5)), np.sqrt(2.0))

    def test_monotone_in_weights(self, rng):
        v = np.sort(rng.uniform(0.1, 1.0, size=20))
        radius = ops.dual_radius(v)
        assert (np.diff(radius) >= 0).all()


class TestOperatorNorm:
    def test_identity(self):
        est = ops.operator_norm_estimate(lambda x: x, lambda y: y, 50, iterations=50)
        assert abs(est - 1.0) <= 1e-10

    def test_grad_norm_bounds(self):
        apply, adj, dim = ops.grad_operator((64, 64))
        est = ops.operator_norm_estimate(apply, adj, dim, iterations=200, seed=0)
        assert 2.8 <= est <= np.sqrt(8.0)

    def test_coupled_norm_bound(self):
        apply, adj, dim = ops.coupled_operator((64, 64), "tf")
        est = ops.operator_norm_estimate(apply, adj, dim, iterations=200, seed=0)
        assert est <= 3.0 + 1e-9

    def test_bounds_hold_on_small_grids(self):
        for n in (4, 8, 16):
            apply, adj, dim = ops.grad_operator((n, n))
            assert ops.operator_norm_estimate(apply, adj, dim) <= np.sqrt(8.0)
            apply, adj, dim = ops.coupled_operator((n, n), "tf")
            assert ops.operator_norm_estimate(apply, adj, dim) <= 3.0 + 1e-9

    def test_rejects_non_adjoint_pair(self):
        with pytest.raises(ValueError, match="adjoint"):
            ops.operator_norm_estimate(lambda x: 2 * x, lambda y: 3 * y, 10)
