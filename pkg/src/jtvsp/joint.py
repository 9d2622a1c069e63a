"""Joint time-vertex Fourier transform, filters and localization.

A time-vertex signal is an ``(N, T)`` array: column ``t`` is the graph signal
at time ``t`` and row ``i`` the time series of vertex ``i``. Its vector form
stacks columns, so ``vec(X)[N * t + i] == X[i, t]`` (0-based). In that
ordering the joint Fourier basis is ``kron(U_T, U_G)``.

The joint Laplacian is the Cartesian-product operator
``kron(I_T, L_G) + kron(L_T, I_N)``, whose eigenvalues are
``lambda_n + lambda_T[tau]``.
"""

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .exceptions import InputError, NonRealOutputError
from .graph import GraphSpectrum, evaluate_response
from .temporal import LAPLACIAN, TimeBasis

#: imaginary residue tolerated (relative to the input norm) before a real result is refused
REAL_RESIDUE_RTOL = 1e-8


def vec(x):
    return np.asarray(x).reshape(-1, order="F")


def mat(x, n_vertices, n_steps):
    return np.asarray(x).reshape((n_vertices, n_steps), order="F")


def _check(spec, x):
    x = np.asarray(x)
    if x.ndim != 2:
        raise InputError(f"time-vertex signal must be 2-D, got shape {x.shape}")
    if x.shape[0] != spec.n_vertices:
        raise InputError(f"signal has {x.shape[0]} vertices, graph has {spec.n_vertices}")
    return x


def jft(x, spec: GraphSpectrum) -> np.ndarray:
    """``U_G^T X conj(U_T)``: GFT down the columns, unitary DFT along the rows."""
    x = _check(spec, x)
    return np.fft.fft(spec.eigenvectors.T @ x, axis=1, norm="ortho")


def ijft(xhat, spec: GraphSpectrum) -> np.ndarray:
    """Inverse of :func:`jft`; always complex."""
    xhat = _check(spec, xhat)
    return spec.eigenvectors @ np.fft.ifft(xhat, axis=1, norm="ortho")


def to_real(y, reference_norm, what="filter output"):
    """Drop the imaginary part of ``y`` after checking it is negligible."""
    residue = np.linalg.norm(y.imag)
    if residue > REAL_RESIDUE_RTOL * max(reference_norm, np.finfo(float).tiny):
        raise NonRealOutputError(
            f"{what} has imaginary residue {residue:.3g} (input norm {reference_norm:.3g}); "
            "the response must be symmetric in time frequency"
        )
    return y.real.copy()


def joint_basis(spec: GraphSpectrum, n_steps: int) -> np.ndarray:
    """Dense ``kron(U_T, U_G)`` with ``U_T[t, tau] = exp(2j pi t tau / T) / sqrt(T)``.

    Only for small problems; the size is ``(N T)**2``.
    """
    t = np.arange(n_steps)
    u_t = np.exp(2j * np.pi * np.outer(t, t) / n_steps) / np.sqrt(n_steps)
    return np.kron(u_t, spec.eigenvectors)


@dataclass(frozen=True)
class JointFilter:
    """Joint filter given by its response sampled on the ``(lambda_n, omega_tau)`` grid."""

    response: np.ndarray
    graph_spectrum: GraphSpectrum
    time_basis: TimeBasis

    def __post_init__(self):
        r = np.array(self.response, copy=True)
        shape = (self.graph_spectrum.n_vertices, self.time_basis.n_steps)
        if r.shape != shape:
            raise InputError(f"response has shape {r.shape}, expected {shape}")
        if not np.all(np.isfinite(r)):
            raise InputError("joint response contains non-finite values")
        r.setflags(write=False)
        object.__setattr__(self, "response", r)

    @property
    def shape(self):
        return self.response.shape

    @classmethod
    def from_function(cls, h: Callable, spec: GraphSpectrum, basis: TimeBasis) -> "JointFilter":
        """Sample ``h(lam, omega)`` on the joint grid (broadcasting call)."""
        lam, omega = joint_grid(spec, basis)
        shape = (spec.n_vertices, basis.n_steps)
        return cls(np.broadcast_to(h(lam, omega), shape).copy(), spec, basis)

    @classmethod
    def separable(cls, h_graph, h_time, spec: GraphSpectrum, basis: TimeBasis) -> "JointFilter":
        g = evaluate_response(h_graph, spec.eigenvalues, "graph response")
        t = evaluate_response(h_time, basis.angular_frequencies, "time response")
        return cls(np.outer(g, t), spec, basis)

    def __mul__(self, other: "JointFilter") -> "JointFilter":
        return JointFilter(self.response * other.response, self.graph_spectrum, self.time_basis)


def joint_grid(spec: GraphSpectrum, basis: TimeBasis):
    """Broadcastable ``(lambda, omega)`` pair of shapes ``(N, 1)`` and ``(1, T)``."""
    return spec.eigenvalues[:, None], basis.angular_frequencies[None, :]


def _apply_response(response, spec, x):
    x = _check(spec, x)
    if x.shape != response.shape:
        raise InputError(f"signal shape {x.shape} does not match response shape {response.shape}")
    y = ijft(response * jft(x, spec), spec)
    if np.iscomplexobj(x) or np.iscomplexobj(response):
        return y
    return to_real(y, np.linalg.norm(x))


def joint_filter_apply(filt: Union[JointFilter, np.ndarray], x, spec: GraphSpectrum = None):
    """``IJFT(H * JFT(X))``.

    ``filt`` is a :class:`JointFilter` or a raw response array (then ``spec``
    is required). Real input gives real output; a response that is not
    symmetric in time frequency raises :class:`NonRealOutputError`.
    """
    if isinstance(filt, JointFilter):
        spec, response = filt.graph_spectrum, filt.response
    else:
        if spec is None:
            raise InputError("a graph spectrum is required with a raw response array")
        response = np.asarray(filt)
        if not np.all(np.isfinite(response)):
            raise InputError("joint response contains non-finite values")
    return _apply_response(response, spec, x)


def _delta(n, t, i, tt):
    d = np.zeros((n, t))
    d[i, tt] = 1.0
    return d


def _check_index(filt, i, t):
    n, steps = filt.shape
    if not (0 <= i < n and 0 <= t < steps):
        raise InputError(f"index ({i}, {t}) out of range for shape {(n, steps)}")


def joint_localize(filt: JointFilter, i: int, t: int) -> np.ndarray:
    """The filter's impulse response to a delta at vertex ``i`` and time ``t``."""
    _check_index(filt, i, t)
    n, steps = filt.shape
    return joint_filter_apply(filt, _delta(n, steps, i, t))


def joint_localize_time_first(filt: JointFilter, i: int, t: int) -> np.ndarray:
    """Same as :func:`joint_localize`, built by translating every row of the
    response in time, then localizing each graph mode at vertex ``i``."""
    _check_index(filt, i, t)
    u = filt.graph_spectrum.eigenvectors
    steps = filt.shape[1]
    # row n: inverse DFT of H[n, :] shifted to t, with the 1/T of an orthonormal cycle basis
    rows = np.roll(np.fft.ifft(filt.response, axis=1), t, axis=1)
    out = (u * u[i]) @ rows
    return _real_like(out, filt)


def joint_localize_graph_first(filt: JointFilter, i: int, t: int) -> np.ndarray:
    """Same as :func:`joint_localize`, built by localizing every column of the
    response on the graph first, then translating in time."""
    _check_index(filt, i, t)
    u = filt.graph_spectrum.eigenvectors
    cols = u @ (filt.response * u[i][:, None])  # column tau: graph localization of H[:, tau] at i
    out = np.roll(np.fft.ifft(cols, axis=1), t, axis=1)
    return _real_like(out, filt)


def _real_like(out, filt):
    if np.iscomplexobj(filt.response):
        return out
    return to_real(out, 1.0, "localized filter")


def separable_filter_apply(h_graph, h_time, x, spec: GraphSpectrum) -> np.ndarray:
    """Filter with ``h_graph(lambda) * h_time(omega)`` without a joint transform.

    The graph filter acts on the columns and the time filter on the rows.
    """
    x = _check(spec, x)
    g = evaluate_response(h_graph, spec.eigenvalues, "graph response")
    w = 2 * np.pi * np.arange(x.shape[1]) / x.shape[1]
    tresp = evaluate_response(h_time, w, "time response")
    u = spec.eigenvectors
    y = u @ (g[:, None] * (u.T @ x))
    y = np.fft.ifft(tresp * np.fft.fft(y, axis=1), axis=1)
    if np.iscomplexobj(x) or np.iscomplexobj(g) or np.iscomplexobj(tresp):
        return y
    return to_real(y, np.linalg.norm(x))


def joint_laplacian_response(spec: GraphSpectrum, basis: TimeBasis) -> np.ndarray:
    """Eigenvalues ``lambda_n + lambda_T[tau]`` of the joint Laplacian on the grid."""
    if basis.eigenvalue_mode != LAPLACIAN:
        raise InputError("the joint Laplacian needs the laplacian eigenvalue mode")
    return spec.eigenvalues[:, None] + basis.eigenvalues[None, :]


def joint_quadratic_form(x, spec: GraphSpectrum, basis: TimeBasis) -> float:
    """``vec(X)^T L_J vec(X)``, evaluated in the joint spectral domain."""
    x = _check(spec, x)
    if x.shape[1] != basis.n_steps:
        raise InputError("signal length does not match the time basis")
    lam = joint_laplacian_response(spec, basis)
    return float(np.sum(lam * np.abs(jft(x, spec)) ** 2))
