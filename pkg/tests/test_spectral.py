import numpy as np
import pytest

from curveprob.curves import Covariate, Curve, Grid
from curveprob.errors import DegenerateInputError, StructureError
from curveprob.spectral import (
    CovarianceOperator,
    SpectralPair,
    eigendecompose,
    empirical_covariance,
    empirical_cross_covariance,
    reconstruct,
    truncation_pve,
    truncation_threshold,
)


def scalar_cov(*rows):
    return Covariate((), tuple(rows))


class TestCovarianceOperator:
    def test_rejects_asymmetric(self):
        with pytest.raises(StructureError):
            CovarianceOperator(np.array([[1.0, 0.5], [0.2, 1.0]]))

    def test_rejects_negative_diagonal(self):
        with pytest.raises(StructureError):
            CovarianceOperator(np.array([[-1.0, 0.0], [0.0, 1.0]]))


class TestEmpiricalCovariance:
    def test_opposite_pair_centered(self):
        g = Grid(20)
        e = Curve(g, np.sin(np.pi * g.points))
        op = empirical_covariance([e, Curve(g, -e.values)], center=True)
        coords = e.values * g.quad_weights_sqrt()
        np.testing.assert_allclose(op.matrix, np.outer(coords, coords), atol=1e-14)

    def test_single_element_centered_is_zero(self):
        g = Grid(10)
        op = empirical_covariance([Curve.constant(g, 3.0)], center=True)
        np.testing.assert_allclose(op.matrix, 0.0, atol=1e-15)

    def test_basis_vectors_uncentered(self):
        op = empirical_covariance([scalar_cov(1.0, 0.0), scalar_cov(0.0, 1.0)], center=False)
        np.testing.assert_allclose(op.matrix, np.diag([0.5, 0.5]))

    def test_empty_sample_raises(self):
        with pytest.raises(Exception):
            empirical_covariance([])


class TestCrossCovariance:
    def test_zero_responses(self):
        g = Grid(10)
        ys = [Curve.constant(g, 0.0)] * 3
        xs = [scalar_cov(1.0), scalar_cov(2.0), scalar_cov(3.0)]
        np.testing.assert_allclose(empirical_cross_covariance(ys, xs), 0.0)

    def test_single_pair_outer_product(self):
        g = Grid(10)
        y = Curve(g, g.points.copy())
        x = scalar_cov(2.0, -1.0)
        got = empirical_cross_covariance([y], [x])
        want = np.outer(y.values * g.quad_weights_sqrt(), [2.0, -1.0])
        np.testing.assert_allclose(got, want)

    def test_recovers_operator_under_identity_design(self):
        # oracle: with (1/n) sum x x^T = I, the cross-covariance of y = R x
        # is exactly the matrix R
        g = Grid(15)
        rng = np.random.default_rng(1)
        p = 4
        target = rng.normal(size=(g.size, p))
        xs, ys = [], []
        scale = np.sqrt(p)  # n = p rescaled basis vectors give identity covariance
        sw = g.quad_weights_sqrt()
        for k in range(p):
            coords = np.zeros(p)
            coords[k] = scale
            xs.append(scalar_cov(*coords))
            ys.append(Curve(g, (target @ coords) / sw))
        got = empirical_cross_covariance(ys, xs)
        np.testing.assert_allclose(got, target, atol=1e-12)

    def test_length_mismatch(self):
        g = Grid(10)
        with pytest.raises(Exception):
            empirical_cross_covariance([Curve.constant(g, 0.0)], [])


class TestEigendecompose:
    def test_closed_form_2x2(self):
        pair = eigendecompose(CovarianceOperator(np.array([[2.0, 1.0], [1.0, 2.0]])))
        np.testing.assert_allclose(pair.eigenvalues, [3.0, 1.0])

    def test_identity(self):
        pair = eigendecompose(CovarianceOperator(np.eye(3)))
        np.testing.assert_allclose(pair.eigenvalues, 1.0)
        np.testing.assert_allclose(pair.eigenvectors.T @ pair.eigenvectors, np.eye(3), atol=1e-12)

    def test_rank_one(self):
        e = np.array([0.0, 2.0, 0.0])
        pair = eigendecompose(CovarianceOperator(np.outer(e, e)))
        assert pair.eigenvalues[0] == pytest.approx(4.0)
        np.testing.assert_allclose(pair.eigenvalues[1:], 0.0, atol=1e-12)

    def test_reconstruction_on_random_psd(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            a = rng.normal(size=(8, 8))
            op = CovarianceOperator(a @ a.T)
            pair = eigendecompose(op)
            err = np.max(np.abs(reconstruct(pair) - op.matrix))
            assert err <= 1e-8 * (1 + pair.eigenvalues[0])

    def test_sign_convention(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(6, 6))
        pair = eigendecompose(CovarianceOperator(a @ a.T))
        for j in range(6):
            v = pair.eigenvectors[:, j]
            assert v[np.argmax(np.abs(v))] > 0

    def test_rejects_clearly_non_psd(self):
        with pytest.raises(StructureError):
            eigendecompose(CovarianceOperator(np.array([[0.0, 1.0], [1.0, 0.0]])))

    def test_rank_bounded_spectra(self):
        # rank-r input: at most r eigenvalues above 1e-10 * top
        rng = np.random.default_rng(9)
        for r in (1, 2, 3):
            a = rng.normal(size=(10, r))
            pair = eigendecompose(CovarianceOperator(a @ a.T))
            above = np.count_nonzero(pair.eigenvalues > 1e-10 * pair.eigenvalues[0])
            assert above <= r


class TestTruncationThreshold:
    def test_plain_case(self):
        pair = SpectralPair(np.array([1.0, 0.1, 0.001]), np.eye(3))
        assert truncation_threshold(pair, 100.0) == 2

    def test_mn_one_keeps_top_plateau(self):
        pair = SpectralPair(np.array([2.0, 2.0, 1.0]), np.eye(3))
        assert truncation_threshold(pair, 1.0) == 2

    def test_tie_at_threshold_is_kept(self):
        pair = SpectralPair(np.array([4.0, 3.0, 2.0, 1.0]), np.eye(4))
        assert truncation_threshold(pair, 2.0) == 3

    def test_absolute_variant(self):
        pair = SpectralPair(np.array([4.0, 3.0, 2.0, 1.0]), np.eye(4))
        assert truncation_threshold(pair, 2.0, relative=False) == 4
        small = SpectralPair(np.array([0.4, 0.3, 0.2, 0.1]), np.eye(4))
        assert truncation_threshold(small, 4.0, relative=False) == 2

    def test_zero_spectrum_is_degenerate(self):
        with pytest.raises(DegenerateInputError):
            truncation_threshold(SpectralPair(np.zeros(3), np.eye(3)), 10.0)

    def test_nondecreasing_in_mn(self):
        rng = np.random.default_rng(4)
        lam = np.sort(rng.uniform(0, 1, size=12))[::-1]
        pair = SpectralPair(lam, np.eye(12))
        counts = [truncation_threshold(pair, m) for m in (1, 2, 5, 10, 100, 1e6)]
        assert all(a <= b for a, b in zip(counts, counts[1:]))

    def test_capped_at_rank(self):
        pair = SpectralPair(np.array([1.0, 0.5, 0.0, 0.0]), np.eye(4))
        assert truncation_threshold(pair, 1e12) == 2


class TestTruncationPve:
    def test_examples(self):
        pair = SpectralPair(np.array([4.0, 3.0, 2.0, 1.0]), np.eye(4))
        assert truncation_pve(pair, 0.69) == 2
        assert truncation_pve(pair, 0.71) == 3
        assert truncation_pve(pair, 1e-9) == 1

    def test_zero_mass_is_degenerate(self):
        with pytest.raises(DegenerateInputError):
            truncation_pve(SpectralPair(np.zeros(2), np.eye(2)), 0.5)

    def test_nondecreasing_in_v(self):
        rng = np.random.default_rng(6)
        lam = np.sort(rng.uniform(0, 1, size=9))[::-1]
        pair = SpectralPair(lam, np.eye(9))
        counts = [truncation_pve(pair, v) for v in np.linspace(0.05, 0.999, 30)]
        assert all(a <= b for a, b in zip(counts, counts[1:]))
