"""
Tests for Jacobian-norm estimators and the conditioning penalties.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from src.assets.rng import RngStream
from src.condition.alignment import AlignmentNet
from src.errors import DegenerateInputError, InvalidInputError
from src.regularize.jacobian import (
    ProbeSpec,
    check_frobenius_bound,
    exact_frob_sq,
    fd_frob_sq,
    fd_samples,
    hutchinson_frob_sq,
    hutchinson_samples,
    spectral_norm,
)
from src.regularize.penalties import RegWeights, cosine_similarity, edit_loss, r_jac, r_norm


def _linear_map(dim: int = 8, seed: int = 0) -> np.ndarray:
    A, _ = RngStream(seed).derive("map").normal((dim, dim), 1.0 / np.sqrt(dim))
    return A


def _with_singular_values(values, seed: int = 0) -> np.ndarray:
    n = len(values)
    a, _ = RngStream(seed).derive("u").normal((n, n))
    b, _ = RngStream(seed).derive("v").normal((n, n))
    U, _ = np.linalg.qr(a)
    V, _ = np.linalg.qr(b)
    return U @ np.diag(values) @ V.T


class TestEstimators:
    """Tests for the probe-based Frobenius estimators."""

    def test_exact_frobenius(self):
        assert exact_frob_sq([[1.0, 2.0], [0.0, -2.0]]) == 9.0

    def test_hutchinson_is_close(self):
        A = _linear_map()
        probes = ProbeSpec(n_probes=4000, rng=RngStream(1))
        estimate = hutchinson_frob_sq(lambda v: v @ A.T, 8, probes, batched=True)
        assert estimate == pytest.approx(exact_frob_sq(A), rel=0.15)

    @pytest.mark.slow
    def test_hutchinson_converges(self):
        A = _linear_map()
        probes = ProbeSpec(n_probes=100000, rng=RngStream(2))
        estimate = hutchinson_frob_sq(lambda v: v @ A.T, 8, probes, batched=True)
        assert abs(estimate - exact_frob_sq(A)) / exact_frob_sq(A) < 0.02

    @pytest.mark.slow
    def test_finite_difference_converges(self):
        A = _linear_map()
        x, _ = RngStream(3).normal(8)
        probes = ProbeSpec(sigma=0.1, n_probes=100000, rng=RngStream(4))
        estimate = fd_frob_sq(lambda p: p @ A.T, x, probes, batched=True)
        assert abs(estimate - exact_frob_sq(A)) / exact_frob_sq(A) < 0.02

    def test_finite_difference_bias_is_quadratic_in_sigma(self):
        """On x**2 the bias is 3 * dim * sigma**2, so halving sigma divides it by four."""
        x = np.full(8, 0.5)
        biases = []
        for sigma in (0.2, 0.1, 0.05):
            probes = ProbeSpec(sigma=sigma, n_probes=100000, rng=RngStream(3))
            fd = fd_samples(np.square, x, probes, batched=True)
            exact = hutchinson_samples(lambda v: 2.0 * x * v, x.size, probes, batched=True)
            biases.append(float(np.mean(fd - exact)))
        assert biases[0] == pytest.approx(3 * 8 * 0.2**2, rel=0.1)
        for coarse, fine in zip(biases, biases[1:]):
            assert 2.5 <= coarse / fine <= 6.0

    def test_linear_map_estimators_agree(self):
        """For a linear map both estimators see the same probes and give the same samples."""
        A = _linear_map()
        x, _ = RngStream(5).normal(8)
        probes = ProbeSpec(sigma=0.1, n_probes=64, rng=RngStream(6))
        exact = hutchinson_samples(lambda v: A @ v, 8, probes)
        fd = fd_samples(lambda p: A @ p, x, probes)
        np.testing.assert_allclose(fd, exact, rtol=1e-8)

    def test_batched_matches_loop(self):
        A = _linear_map()
        probes = ProbeSpec(n_probes=10, rng=RngStream(7))
        loop = hutchinson_samples(lambda v: A @ v, 8, probes)
        batched = hutchinson_samples(lambda v: v @ A.T, 8, probes, batched=True)
        np.testing.assert_allclose(batched, loop, rtol=1e-12)

    def test_same_stream_same_estimate(self):
        A = _linear_map()
        first = hutchinson_frob_sq(lambda v: A @ v, 8, ProbeSpec(n_probes=5, rng=RngStream(8)))
        second = hutchinson_frob_sq(lambda v: A @ v, 8, ProbeSpec(n_probes=5, rng=RngStream(8)))
        assert first == second

    @pytest.mark.parametrize("kwargs", [{"sigma": 0.0}, {"sigma": -1.0}, {"n_probes": 0}])
    def test_invalid_probe_spec(self, kwargs):
        with pytest.raises(InvalidInputError):
            ProbeSpec(**kwargs)


class TestSpectralNorm:
    """Tests for power iteration and the product bound."""

    def test_known_singular_values(self):
        J = _with_singular_values([3.0, 1.0, 0.5, 0.1])
        assert spectral_norm(J) == pytest.approx(3.0, rel=1e-9)

    def test_matches_svd(self):
        J, _ = RngStream(9).normal((6, 5))
        assert spectral_norm(J, iters=1000) == pytest.approx(np.linalg.norm(J, 2), rel=1e-6)

    def test_zero_matrix(self):
        assert spectral_norm(np.zeros((3, 3))) == 0.0

    def test_too_few_iterations(self):
        with pytest.raises(InvalidInputError):
            spectral_norm(np.eye(2), iters=10)

    def test_frobenius_bound_holds(self):
        for k in range(200):
            rng = RngStream(k).derive("bound")
            m, n, p = 2 + k % 5, 2 + (k // 5) % 4, 1 + k % 3
            A, rng = rng.normal((m, n))
            B, _ = rng.normal((n, p))
            bound = check_frobenius_bound(A, B)
            assert bound.holds, f"pair {k}: {bound.lhs} > {bound.rhs}"

    def test_bound_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            check_frobenius_bound(np.eye(2), np.eye(3))


class TestPenalties:
    """Tests for the sensitivity, norm and editing penalties."""

    def test_zero_alignment_has_no_sensitivity(self):
        net = AlignmentNet.create(4, 3, RngStream(0), width=8, blocks=1)
        w, _ = RngStream(1).normal(4)
        r, _ = RngStream(2).normal(3)
        assert r_jac(lambda e: net.forward(w, e), r, ProbeSpec(n_probes=4)) == 0.0

    def test_trained_alignment_has_sensitivity(self):
        net = AlignmentNet.create(4, 3, RngStream(0), width=8, blocks=1, output_scale=1.0)
        w, _ = RngStream(1).normal(4)
        r, _ = RngStream(2).normal(3)
        assert r_jac(lambda e: net.forward(w, e), r, ProbeSpec(n_probes=4)) > 0.0

    def test_r_norm(self):
        assert r_norm([3.0, 4.0], [0.0, 5.0]) == 0.0
        assert r_norm([1.0, 0.0], [0.0, 3.0]) == pytest.approx(4.0)

    def test_r_norm_dims(self):
        with pytest.raises(InvalidInputError):
            r_norm([1.0, 2.0], [1.0])

    def test_cosine(self):
        assert cosine_similarity([1.0, 2.0], [2.0, 4.0]) == pytest.approx(1.0)
        assert cosine_similarity([1.0, 0.0], [-3.0, 0.0]) == pytest.approx(-1.0)
        assert cosine_similarity([1.0, 0.0], [0.0, 2.0]) == pytest.approx(0.0)

    def test_cosine_zero_vector(self):
        with pytest.raises(DegenerateInputError):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])

    def test_edit_loss_aligned_edit(self):
        w = np.array([3.0, 4.0])
        w_t = np.array([0.0, 6.0])
        loss = edit_loss([1.0, 1.0], [2.0, 2.0], w_t, w, eta=10.0)
        assert loss == pytest.approx(10.0 * 1.0)

    def test_edit_loss_rejects_zero_change(self):
        with pytest.raises(DegenerateInputError):
            edit_loss([0.0, 0.0], [1.0, 0.0], [1.0], [1.0])

    def test_weights_validated(self):
        with pytest.raises(ValidationError):
            RegWeights(alpha=1.5)
        with pytest.raises(ValidationError):
            RegWeights(lambda_jacobian=0.1)
        assert RegWeights().eta == 10.0
