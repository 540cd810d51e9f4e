"""Tests for the principal component decomposition of functional samples."""

import numpy as np
import pytest

from fflqr.fdata import FunctionalSample, inner_product, make_uniform_grid
from fflqr.fpca import fpc_decompose, project_scores, reconstruct


def smooth_sample(rng, n, grid, n_harmonics=6, decay=0.6):
    """Random curves built from decaying Fourier harmonics."""
    t = grid.points
    vals = np.zeros((n, grid.size))
    for k in range(1, n_harmonics + 1):
        amp = decay ** k
        vals += amp * rng.normal(size=(n, 1)) * np.sin(np.pi * k * t)
        vals += amp * rng.normal(size=(n, 1)) * np.cos(np.pi * k * t)
    return FunctionalSample(vals, grid)


class TestDecompose:
    def test_eigenfunctions_orthonormal(self):
        rng = np.random.default_rng(0)
        g = make_uniform_grid(60, 0.0, 1.0)
        basis, _ = fpc_decompose(smooth_sample(rng, 40, g), 5)
        gram = (basis.eigenfunctions * g.weights) @ basis.eigenfunctions.T
        np.testing.assert_allclose(gram, np.eye(5), atol=1e-10)

    def test_score_variance_matches_eigenvalues(self):
        rng = np.random.default_rng(1)
        g = make_uniform_grid(50, 0.0, 1.0)
        sample = smooth_sample(rng, 80, g)
        basis, scores = fpc_decompose(sample, 4)
        # variance convention divides by n, matching the covariance estimate
        var = np.mean(scores ** 2, axis=0) - np.mean(scores, axis=0) ** 2
        np.testing.assert_allclose(var, basis.eigenvalues, rtol=1e-8)

    def test_eigenvalues_sorted_nonnegative(self):
        rng = np.random.default_rng(2)
        g = make_uniform_grid(30, 0.0, 1.0)
        basis, _ = fpc_decompose(smooth_sample(rng, 25, g), 6)
        assert np.all(np.diff(basis.eigenvalues) <= 0)
        assert np.all(basis.eigenvalues >= 0)

    def test_mercer_trace(self):
        rng = np.random.default_rng(3)
        g = make_uniform_grid(40, 0.0, 1.0)
        sample = smooth_sample(rng, 35, g)
        k = min(sample.n - 1, g.size)
        basis, _ = fpc_decompose(sample, k)
        centered = sample.values - sample.values.mean(axis=0)
        pointwise_var = np.mean(centered ** 2, axis=0)
        trace = float(np.sum(pointwise_var * g.weights))
        assert np.sum(basis.eigenvalues) == pytest.approx(trace, rel=1e-8)

    def test_sign_convention(self):
        rng = np.random.default_rng(4)
        g = make_uniform_grid(30, 0.0, 1.0)
        basis, _ = fpc_decompose(smooth_sample(rng, 20, g), 3)
        for row in basis.eigenfunctions:
            assert row[np.argmax(np.abs(row))] > 0

    def test_too_many_components_raise(self):
        rng = np.random.default_rng(5)
        g = make_uniform_grid(20, 0.0, 1.0)
        sample = smooth_sample(rng, 8, g)
        with pytest.raises(ValueError, match="n_components"):
            fpc_decompose(sample, 8)

    def test_too_few_curves_raise(self):
        g = make_uniform_grid(10, 0.0, 1.0)
        sample = FunctionalSample(np.ones((1, 10)), g)
        with pytest.raises(ValueError, match="two curves"):
            fpc_decompose(sample, 1)

    def test_rank_deficient_flag(self):
        # two distinct curves repeated: covariance rank is 1
        g = make_uniform_grid(12, 0.0, 1.0)
        a = np.sin(np.pi * g.points)
        b = np.cos(np.pi * g.points)
        vals = np.vstack([a, b, a, b, a, b])
        basis, _ = fpc_decompose(FunctionalSample(vals, g), 3)
        assert basis.rank_deficient
        assert basis.eigenvalues[-1] == 0.0


class TestReconstruct:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_error_nonincreasing_in_k(self, seed):
        rng = np.random.default_rng(seed)
        g = make_uniform_grid(40, 0.0, 1.0)
        sample = smooth_sample(rng, 30, g)
        errs = []
        for k in range(1, 8):
            basis, scores = fpc_decompose(sample, k)
            recon = reconstruct(basis, scores)
            resid = sample.values - recon.values
            errs.append(np.mean([inner_product(r, r, g) for r in resid]))
        assert all(e1 >= e2 - 1e-12 for e1, e2 in zip(errs, errs[1:]))

    def test_exact_rank_round_trip(self):
        # curves spanned by 3 functions reconstruct exactly from 3 components
        rng = np.random.default_rng(6)
        g = make_uniform_grid(25, 0.0, 1.0)
        t = g.points
        span = np.vstack([np.sin(np.pi * t), np.cos(np.pi * t), t ** 2])
        coefs = rng.normal(size=(12, 3))
        sample = FunctionalSample(coefs @ span, g)
        basis, scores = fpc_decompose(sample, 3)
        recon = reconstruct(basis, scores)
        np.testing.assert_allclose(recon.values, sample.values, atol=1e-10)

    def test_single_score_row(self):
        rng = np.random.default_rng(7)
        g = make_uniform_grid(15, 0.0, 1.0)
        basis, scores = fpc_decompose(smooth_sample(rng, 10, g), 2)
        one = reconstruct(basis, scores[:1])
        assert one.n == 1


class TestProjectScores:
    def test_round_trip_on_training_sample(self):
        rng = np.random.default_rng(8)
        g = make_uniform_grid(35, 0.0, 1.0)
        sample = smooth_sample(rng, 22, g)
        basis, scores = fpc_decompose(sample, 4)
        np.testing.assert_allclose(project_scores(basis, sample), scores, atol=1e-10)

    def test_uses_stored_mean(self):
        rng = np.random.default_rng(9)
        g = make_uniform_grid(20, 0.0, 1.0)
        sample = smooth_sample(rng, 15, g)
        basis, _ = fpc_decompose(sample, 2)
        shifted = FunctionalSample(sample.values + 5.0, g)
        base = project_scores(basis, sample)
        moved = project_scores(basis, shifted)
        offset = (basis.eigenfunctions * g.weights) @ np.full(g.size, 5.0)
        np.testing.assert_allclose(moved - base, np.tile(offset, (15, 1)), atol=1e-10)

    def test_grid_mismatch_raises(self):
        rng = np.random.default_rng(10)
        g = make_uniform_grid(20, 0.0, 1.0)
        other = make_uniform_grid(21, 0.0, 1.0)
        basis, _ = fpc_decompose(smooth_sample(rng, 10, g), 2)
        with pytest.raises(ValueError, match="grid"):
            project_scores(basis, smooth_sample(rng, 5, other))
