import numpy as np
import pytest

from conftest import random_spectrum
from jtvsp.exceptions import InputError
from jtvsp.joint import joint_basis, joint_filter_apply, vec
from jtvsp.psd import estimate_tpsd
from jtvsp.stationarity import (
    JwssModel,
    empirical_jpsd,
    filter_psd_transform,
    jwss_diagnostic,
    marginal_tpsd,
    marginal_vpsd,
    synthesize_jwss,
    white_noise,
)
from jtvsp.temporal import TimeBasis, iterated_sine_window


def smooth_jpsd(spec, t):
    w = 2 * np.pi * np.arange(t) / t
    return np.outer(1 / (1 + spec.eigenvalues), 1 / (1 + 2 - 2 * np.cos(w)))


def dense_covariance(spec, h):
    u_j = joint_basis(spec, h.shape[1])
    return u_j @ np.diag(vec(h)) @ u_j.conj().T


class TestSynthesis:
    def test_zero_jpsd_gives_mean(self):
        s = random_spectrum(3)
        model = JwssModel(np.zeros((3, 4)), s, TimeBasis(4), mean_coefficient=1.5)
        for x in synthesize_jwss(model, 3, seed=1):
            np.testing.assert_array_equal(x, np.full((3, 4), 1.5))

    @pytest.mark.parametrize("noise", ["gaussian", "uniform", "rademacher"])
    def test_flat_jpsd_unit_variance(self, noise):
        s = random_spectrum(4)
        model = JwssModel(np.ones((4, 8)), s, TimeBasis(8))
        x = np.stack(synthesize_jwss(model, 4000, seed=2, noise=noise))
        np.testing.assert_allclose(x.var(axis=0), 1.0, atol=0.15)

    def test_monte_carlo_matches_prescribed(self):
        s = random_spectrum(8, seed=3)
        rng = np.random.default_rng(0)
        f = rng.uniform(0.5, 2.0, (8, 16))
        f = 0.5 * (f + f[:, (-np.arange(16)) % 16])
        model = JwssModel(f**2, s, TimeBasis(16))
        est = empirical_jpsd(synthesize_jwss(model, 10_000, seed=4), s)
        assert np.max(np.abs(est - f**2) / f**2) < 0.1

    def test_streams_are_independent_of_batching(self):
        model = JwssModel(np.ones((3, 4)), random_spectrum(3), TimeBasis(4))
        batch = synthesize_jwss(model, 5, seed=9)
        np.testing.assert_array_equal(batch[3], synthesize_jwss(model, 1, seed=9, start=3)[0])

    def test_negative_jpsd_rejected(self):
        with pytest.raises(InputError):
            JwssModel(-np.ones((3, 4)), random_spectrum(3), TimeBasis(4))

    def test_unknown_noise(self):
        with pytest.raises(InputError):
            white_noise(np.random.default_rng(0), (2, 2), "cauchy")


class TestEmpiricalJpsd:
    def test_identical_samples(self):
        x = np.random.default_rng(0).standard_normal((3, 4))
        np.testing.assert_allclose(empirical_jpsd([x, x, x], random_spectrum(3)), 0, atol=1e-24)

    def test_white_noise_is_flat(self):
        s = random_spectrum(4, seed=5)
        rng = np.random.default_rng(6)
        est = empirical_jpsd(rng.standard_normal((10_000, 4, 8)), s)
        assert np.max(np.abs(est - 1)) < 0.1

    def test_needs_two_samples(self):
        with pytest.raises(InputError):
            empirical_jpsd(np.ones((1, 2, 2)), random_spectrum(2))


class TestDiagnostic:
    def test_jwss_samples_pass(self):
        s = random_spectrum(4, seed=7)
        model = JwssModel(smooth_jpsd(s, 8), s, TimeBasis(8))
        report = jwss_diagnostic(synthesize_jwss(model, 10_000, seed=8), s)
        assert report.offdiag_ratio < 0.15
        assert report.verdict and report.time_verdict and report.vertex_verdict

    def test_non_constant_mean_detected(self):
        s = random_spectrum(4, seed=7)
        model = JwssModel(smooth_jpsd(s, 8), s, TimeBasis(8))
        ramp = np.outer(np.arange(4.0), np.ones(8))
        samples = [x + 10 * ramp for x in synthesize_jwss(model, 2000, seed=1)]
        report = jwss_diagnostic(samples, s)
        assert report.mean_nullspace_residual > 0
        assert not report.verdict and not report.vertex_verdict
        assert report.time_verdict

    def test_time_varying_variance_detected(self):
        s = random_spectrum(4, seed=7)
        rng = np.random.default_rng(3)
        scale = np.linspace(0.2, 3.0, 8)
        report = jwss_diagnostic(rng.standard_normal((5000, 4, 8)) * scale, s)
        assert not report.verdict and not report.time_verdict

    def test_repeated_sample(self):
        x = np.ones((3, 4))
        report = jwss_diagnostic([x, x], random_spectrum(3))
        assert report.offdiag_ratio == 0.0

    def test_size_limit(self):
        with pytest.raises(InputError):
            jwss_diagnostic(np.zeros((2, 65, 64)), random_spectrum(65))


class TestFilteredModel:
    def test_trivial_filters(self):
        h = np.random.default_rng(0).uniform(0, 1, (3, 4))
        np.testing.assert_array_equal(filter_psd_transform(np.ones((3, 4)), h), h)
        np.testing.assert_array_equal(filter_psd_transform(np.zeros((3, 4)), h), 0)

    def test_dense_covariance_algebra(self):
        s = random_spectrum(3, seed=10)
        rng = np.random.default_rng(11)
        h = rng.uniform(0.1, 1.0, (3, 4))
        h = 0.5 * (h + h[:, (-np.arange(4)) % 4])
        f = rng.uniform(-1.0, 1.0, (3, 4))
        f = 0.5 * (f + f[:, (-np.arange(4)) % 4])
        u_j = joint_basis(s, 4)
        f_op = u_j @ np.diag(vec(f)) @ u_j.conj().T
        out = f_op @ dense_covariance(s, h) @ f_op.conj().T
        spectral = u_j.conj().T @ out @ u_j
        np.testing.assert_allclose(np.diag(spectral).real, vec(filter_psd_transform(f, h)), atol=1e-12)
        assert np.linalg.norm(spectral - np.diag(np.diag(spectral))) < 1e-10

    def test_filtered_mean(self):
        s = random_spectrum(3)
        f = np.full((3, 4), 0.5)
        f[0, 0] = 2.0
        m = JwssModel(np.ones((3, 4)), s, TimeBasis(4), 1.5).filtered(f)
        assert m.mean_coefficient == 3.0
        x = joint_filter_apply(f, np.full((3, 4), 1.5), s)
        np.testing.assert_allclose(x, m.mean, atol=1e-12)


class TestMarginals:
    def test_flat(self):
        s = random_spectrum(5)
        m = JwssModel(np.full((5, 6), 2.5), s, TimeBasis(6))
        np.testing.assert_allclose(marginal_tpsd(m, 3), 2.5, rtol=1e-12)
        np.testing.assert_allclose(marginal_vpsd(m, 0), 2.5, rtol=1e-12)

    def test_single_mode(self):
        s = random_spectrum(4, seed=2)
        h = np.zeros((4, 6))
        h[2, 1] = 1.0
        m = JwssModel(h, s, TimeBasis(6))
        expected = np.zeros(6)
        expected[1] = s.eigenvectors[3, 2] ** 2
        np.testing.assert_allclose(marginal_tpsd(m, 3), expected, atol=1e-15)

    def test_dense_blocks(self):
        # vertex blocks are circulant, time blocks are diagonal in the graph basis
        s = random_spectrum(3, seed=12)
        h = smooth_jpsd(s, 5)
        m = JwssModel(h, s, TimeBasis(5))
        cov = dense_covariance(s, h).real
        k = np.arange(5)
        u_t = np.exp(2j * np.pi * np.outer(k, k) / 5) / np.sqrt(5)
        for i in range(3):
            blk = u_t.conj().T @ cov[i::3, i::3] @ u_t
            np.testing.assert_allclose(np.diag(blk).real, marginal_tpsd(m, i), atol=1e-12)
            assert np.linalg.norm(blk - np.diag(np.diag(blk))) < 1e-12
        for t in range(5):
            blk = s.eigenvectors.T @ cov[3 * t:3 * t + 3, 3 * t:3 * t + 3] @ s.eigenvectors
            np.testing.assert_allclose(np.diag(blk), marginal_vpsd(m, t), atol=1e-12)
            assert np.linalg.norm(blk - np.diag(np.diag(blk))) < 1e-12

    def test_welch_matches_marginal(self):
        s = random_spectrum(4, seed=13)
        t, m_bands = 256, 32
        model = JwssModel(smooth_jpsd(s, t), s, TimeBasis(t))
        window = iterated_sine_window(m_bands)
        acc = np.zeros((4, m_bands))
        xs = synthesize_jwss(model, 1000, seed=14)
        for x in xs:
            acc += estimate_tpsd(x, window, remove_mean=False)
        acc /= len(xs)
        for i in range(4):
            truth = marginal_tpsd(model, i)[:: t // m_bands]
            assert np.linalg.norm(acc[i] - truth) / np.linalg.norm(truth) < 0.15
