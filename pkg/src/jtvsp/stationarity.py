"""Jointly wide-sense stationary (JWSS) processes.

A JWSS process has a constant mean and a covariance that the joint Fourier
basis diagonalizes; the diagonal, laid out on the ``(N, T)`` joint frequency
grid, is the joint power spectral density (JPSD).
"""

from dataclasses import dataclass, replace

import numpy as np

from .exceptions import InputError
from .graph import GraphSpectrum
from .joint import joint_basis, joint_filter_apply, jft, joint_laplacian_response, vec
from .temporal import TimeBasis

NOISE_KINDS = ("gaussian", "uniform", "rademacher")
#: largest N*T for which the dense diagnostic is attempted
DIAGNOSTIC_MAX_SIZE = 4096
#: a non-constant mean part below this many standard errors is treated as noise
MEAN_NOISE_FACTOR = 3.0


@dataclass(frozen=True)
class JwssModel:
    """Mean ``mean_coefficient`` at every entry, JPSD ``jpsd`` on the joint grid."""

    jpsd: np.ndarray
    graph_spectrum: GraphSpectrum
    time_basis: TimeBasis
    mean_coefficient: float = 0.0

    def __post_init__(self):
        h = np.array(self.jpsd, dtype=float, copy=True)
        shape = (self.graph_spectrum.n_vertices, self.time_basis.n_steps)
        if h.shape != shape:
            raise InputError(f"jpsd has shape {h.shape}, expected {shape}")
        if not np.all(np.isfinite(h)):
            raise InputError("jpsd must be finite")
        if np.any(h < 0):
            raise InputError("jpsd must be nonnegative")
        h.setflags(write=False)
        object.__setattr__(self, "jpsd", h)

    @property
    def shape(self):
        return self.jpsd.shape

    @property
    def mean(self) -> np.ndarray:
        return np.full(self.shape, float(self.mean_coefficient))

    def filtered(self, f) -> "JwssModel":
        """Model of the output of the joint filter with response ``f``.

        The mean is scaled by the response at zero frequency and the JPSD by
        ``f**2``.
        """
        f = np.asarray(f, dtype=float)
        return replace(
            self,
            jpsd=filter_psd_transform(f, self.jpsd),
            mean_coefficient=float(f[0, 0]) * self.mean_coefficient,
        )


def filter_psd_transform(f, jpsd_in):
    f = np.asarray(f)
    jpsd_in = np.asarray(jpsd_in)
    if f.shape != jpsd_in.shape:
        raise InputError(f"response shape {f.shape} does not match jpsd shape {jpsd_in.shape}")
    return np.abs(f) ** 2 * jpsd_in


def realization_rng(seed, index):
    """Independent counter-based stream for realization ``index``."""
    ss = np.random.SeedSequence(seed, spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def white_noise(rng, shape, kind="gaussian"):
    """Zero-mean, unit-variance i.i.d. noise."""
    if kind == "gaussian":
        return rng.standard_normal(shape)
    if kind == "uniform":
        return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size=shape)
    if kind == "rademacher":
        return rng.choice(np.array([-1.0, 1.0]), size=shape)
    raise InputError(f"unknown noise kind {kind!r}; expected one of {NOISE_KINDS}")


def synthesize_jwss(model: JwssModel, n_realizations: int, seed=0, noise="gaussian", start=0):
    """Draw realizations by filtering white noise with ``sqrt(jpsd)``.

    Realization ``r`` depends only on ``(seed, start + r)``, so batches can be
    generated in any order.
    """
    if n_realizations < 1:
        raise InputError("n_realizations must be positive")
    amp = np.sqrt(model.jpsd)
    spec = model.graph_spectrum
    out = []
    for r in range(start, start + n_realizations):
        w = white_noise(realization_rng(seed, r), model.shape, noise)
        out.append(model.mean + joint_filter_apply(amp, w, spec))
    return out


def _stack(samples):
    x = np.asarray(samples)
    if x.ndim != 3:
        raise InputError("samples must be a sequence of (N, T) arrays")
    if x.shape[0] < 2:
        raise InputError("at least two samples are needed")
    return x


def empirical_jpsd(samples, spec: GraphSpectrum) -> np.ndarray:
    """Unbiased sample variance of every joint Fourier coefficient."""
    x = _stack(samples)
    coeffs = np.stack([jft(s, spec) for s in x])
    centred = coeffs - coeffs.mean(axis=0)
    return np.sum(np.abs(centred) ** 2, axis=0) / (x.shape[0] - 1)


def _offdiag_ratio(cov, basis):
    total = np.linalg.norm(cov)
    if total == 0:
        return 0.0, 0.0
    d = basis.conj().T @ cov @ basis
    off = d - np.diag(np.diag(d))
    return float(np.linalg.norm(off)), float(total)


def _ratio(num, den):
    return float(num / den) if den > 0 else 0.0


@dataclass
class StationarityReport:
    """Outcome of :func:`jwss_diagnostic`.

    The ``offdiag`` ratios measure how far the sample covariance is from being
    diagonal in the relevant Fourier basis; the ``mean`` residuals how far the
    sample mean is from the relevant Laplacian null space. Each verdict is
    ``True`` when the covariance ratio is below the tolerance and the mean
    passes: its residual is below the tolerance, or the non-constant part of
    the sample mean is within sampling noise (``MEAN_NOISE_FACTOR`` standard
    errors). No verdict is inferred from the others.
    """

    offdiag_ratio: float
    mean_nullspace_residual: float
    verdict: bool
    time_offdiag_ratio: float
    time_mean_residual: float
    time_verdict: bool
    vertex_offdiag_ratio: float
    vertex_mean_residual: float
    vertex_verdict: bool
    tol: float


def jwss_diagnostic(samples, spec: GraphSpectrum, tol=0.15) -> StationarityReport:
    x = _stack(samples)
    k, n, steps = x.shape
    if n * steps > DIAGNOSTIC_MAX_SIZE:
        raise InputError(f"N*T = {n * steps} exceeds the dense diagnostic limit {DIAGNOSTIC_MAX_SIZE}")
    if n != spec.n_vertices:
        raise InputError("samples and graph disagree on the number of vertices")

    mu = x.mean(axis=0)
    flat = np.stack([vec(s) for s in x]) - vec(mu)
    cov = flat.T @ flat / (k - 1)
    off, tot = _offdiag_ratio(cov, joint_basis(spec, steps))
    offdiag = _ratio(off, tot)

    mu_norm = np.linalg.norm(mu)
    # standard error of the sample mean's norm
    noise = np.sqrt(max(np.trace(cov), 0.0) / k)

    def mean_ok(residual, varying):
        return residual < tol or np.linalg.norm(varying) <= MEAN_NOISE_FACTOR * noise

    lap_j = joint_laplacian_response(spec, TimeBasis(steps))
    mean_res = _ratio(np.linalg.norm(joint_filter_apply(lap_j, mu, spec)), mu_norm)

    # per-vertex time covariances (blocks i::N) against the DFT basis
    t = np.arange(steps)
    u_t = np.exp(2j * np.pi * np.outer(t, t) / steps) / np.sqrt(steps)
    num = den = 0.0
    for i in range(n):
        o, s = _offdiag_ratio(cov[i::n, i::n], u_t)
        num, den = num + o**2, den + s**2
    time_off = _ratio(np.sqrt(num), np.sqrt(den))
    lap_t = np.fft.ifft(TimeBasis(steps).eigenvalues * np.fft.fft(mu, axis=1), axis=1).real
    time_res = _ratio(np.linalg.norm(lap_t), mu_norm)

    # per-time graph covariances (diagonal N x N blocks) against U_G
    num = den = 0.0
    for tt in range(steps):
        blk = slice(tt * n, (tt + 1) * n)
        o, s = _offdiag_ratio(cov[blk, blk], spec.eigenvectors)
        num, den = num + o**2, den + s**2
    vertex_off = _ratio(np.sqrt(num), np.sqrt(den))
    lap_g = spec.eigenvectors @ (spec.eigenvalues[:, None] * (spec.eigenvectors.T @ mu))
    vertex_res = _ratio(np.linalg.norm(lap_g), mu_norm)

    return StationarityReport(
        offdiag_ratio=offdiag,
        mean_nullspace_residual=mean_res,
        verdict=bool(offdiag < tol and mean_ok(mean_res, mu - mu.mean())),
        time_offdiag_ratio=time_off,
        time_mean_residual=time_res,
        time_verdict=bool(time_off < tol and mean_ok(time_res, mu - mu.mean(axis=1, keepdims=True))),
        vertex_offdiag_ratio=vertex_off,
        vertex_mean_residual=vertex_res,
        vertex_verdict=bool(vertex_off < tol and mean_ok(vertex_res, mu - mu.mean(axis=0, keepdims=True))),
        tol=tol,
    )


def marginal_tpsd(model: JwssModel, i: int) -> np.ndarray:
    """Time PSD of vertex ``i``: ``sum_n jpsd[n, tau] * u_n(i)**2``."""
    n = model.graph_spectrum.n_vertices
    if not 0 <= i < n:
        raise InputError(f"vertex index {i} out of range for {n} vertices")
    u_i = model.graph_spectrum.eigenvectors[i]
    return (u_i**2) @ model.jpsd


def marginal_vpsd(model: JwssModel, t: int) -> np.ndarray:
    """Vertex PSD at time ``t``; the same for every ``t`` on a cycle."""
    if not 0 <= t < model.time_basis.n_steps:
        raise InputError(f"time index {t} out of range")
    return model.jpsd.mean(axis=1)
