"""Joint PSD estimation from few realizations.

The estimator is Welch's method lifted to time-vertex signals: take the
STFT of every vertex time series, a GFT across vertices, and average the
squared magnitudes over frames::

    C[n, k, m] = sum_i U[i, n] * STFT(x_i)[k, m]
    h[n, m]    = a / (T * ||g||**2) * sum_k |C[n, k, m]|**2
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InputError
from .graph import GraphSpectrum
from .temporal import Window, iterated_sine_window, stft

DEFAULT_BANDS = 32
INTERPOLATIONS = ("linear_circular", "nearest")


@dataclass(frozen=True)
class Jpsd:
    """JPSD sampled at ``(lambda_n, 2 pi m / M)``; band ``m = 0`` is DC."""

    values: np.ndarray
    eigenvalues: np.ndarray
    interpolation: str = "linear_circular"

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        lam = np.array(self.eigenvalues, dtype=float, copy=True)
        if v.ndim != 2 or lam.shape != (v.shape[0],):
            raise InputError(f"values {v.shape} and eigenvalues {lam.shape} are inconsistent")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InputError("jpsd values must be finite and nonnegative")
        if self.interpolation not in INTERPOLATIONS:
            raise InputError(f"unknown interpolation {self.interpolation!r}")
        v.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def n_bands(self) -> int:
        return self.values.shape[1]

    @property
    def band_frequencies(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_bands) / self.n_bands


def default_window(n_steps: int, n_bands=None) -> Window:
    """Iterated sine window with half overlap; 32 bands unless the signal is shorter."""
    if n_bands is None:
        n_bands = DEFAULT_BANDS if n_steps > DEFAULT_BANDS else n_steps - n_steps % 2
    return iterated_sine_window(int(n_bands))


def _signals(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3:
        raise InputError("expected an (N, T) signal or a stack of them")
    return x


def coefficients_tensor(x, spec: GraphSpectrum, window: Window) -> np.ndarray:
    """GFT across vertices of the per-vertex STFTs, shape ``(N, K, M)``."""
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != spec.n_vertices:
        raise InputError(f"signal shape {x.shape} does not match a {spec.n_vertices}-vertex graph")
    frames = stft(x, window)  # (N, K, M)
    return np.tensordot(spec.eigenvectors.T, frames, axes=(1, 0))


def _welch_scale(window, n_steps):
    return window.hop / (n_steps * window.norm_sq)


def _centre(x, remove_mean):
    if remove_mean:
        return x - x.mean()
    rms = np.sqrt(np.mean(x**2))
    if abs(x.mean()) > 1e-9 * rms:
        raise InputError("signal mean is not removed; center it or pass remove_mean=True")
    return x


def estimate_jpsd(x, spec: GraphSpectrum, window: Window = None, remove_mean=True) -> Jpsd:
    """Welch-style JPSD estimate.

    Parameters
    ----------
    x : (N, T) array or sequence of them
        One or more realizations; their estimates are averaged.
    spec : GraphSpectrum
    window : Window, optional
        Defaults to :func:`default_window`.
    remove_mean : bool
        Subtract the global mean of each realization first. When False the
        input must already be centred.
    """
    xs = _signals(x)
    if window is None:
        window = default_window(xs.shape[2])
    scale = _welch_scale(window, xs.shape[2])
    acc = np.zeros((spec.n_vertices, window.n_bands))
    for s in xs:
        c = coefficients_tensor(_centre(s, remove_mean), spec, window)
        acc += scale * np.sum(np.abs(c) ** 2, axis=1)
    return Jpsd(acc / xs.shape[0], spec.eigenvalues)


def estimate_tpsd(x, window: Window = None, remove_mean=True) -> np.ndarray:
    """Welch PSD of every row of ``x`` separately, shape ``(N, M)``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if window is None:
        window = default_window(x.shape[1])
    if remove_mean:
        x = x - x.mean(axis=1, keepdims=True)
    c = stft(x, window)
    return _welch_scale(window, x.shape[1]) * np.sum(np.abs(c) ** 2, axis=1)


def interpolate(jpsd: Jpsd, omega) -> np.ndarray:
    """JPSD at arbitrary time frequencies, circular in ``omega``.

    Returns shape ``(N,)`` for a scalar ``omega`` and ``(N, len(omega))``
    otherwise.
    """
    w = np.asarray(omega, dtype=float)
    scalar = w.ndim == 0
    w = np.atleast_1d(w)
    m = jpsd.n_bands
    pos = np.mod(w, 2 * np.pi) * m / (2 * np.pi)
    near = np.rint(pos)
    pos = np.where(np.abs(pos - near) < 1e-9, near, pos)  # exact at band centres
    v = jpsd.values
    if jpsd.interpolation == "nearest":
        out = v[:, np.rint(pos).astype(int) % m]
    else:
        lo = np.floor(pos).astype(int)
        frac = pos - lo
        out = v[:, lo % m] * (1 - frac) + v[:, (lo + 1) % m] * frac
    out = np.maximum(out, 0.0)
    return out[:, 0] if scalar else out


def upsample_to_grid(jpsd: Jpsd, n_steps: int) -> np.ndarray:
    """JPSD on the full ``(N, T)`` joint frequency grid used by the filters."""
    return interpolate(jpsd, 2 * np.pi * np.arange(n_steps) / n_steps)
