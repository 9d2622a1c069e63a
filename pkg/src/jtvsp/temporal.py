"""Fourier analysis along the time axis.

Time is treated as a cycle of ``T`` samples. The DFT is unitary, so
``dft`` here is ``numpy.fft.fft(s, norm="ortho")``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InputError

LAPLACIAN = "laplacian"
LAG = "lag"


@dataclass(frozen=True)
class TimeBasis:
    """Frequency grid of a length-``n_steps`` cycle.

    ``eigenvalue_mode`` selects how a frequency maps to an operator eigenvalue:
    ``"laplacian"`` gives ``real(1 - exp(-1j w)) = 1 - cos(w)`` and ``"lag"``
    gives ``exp(-1j w)``.
    """

    n_steps: int
    eigenvalue_mode: str = LAPLACIAN

    def __post_init__(self):
        if int(self.n_steps) < 1:
            raise InputError("n_steps must be positive")
        if self.eigenvalue_mode not in (LAPLACIAN, LAG):
            raise InputError(f"unknown eigenvalue mode {self.eigenvalue_mode!r}")

    @property
    def angular_frequencies(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_steps) / self.n_steps

    @property
    def eigenvalues(self) -> np.ndarray:
        w = self.angular_frequencies
        if self.eigenvalue_mode == LAG:
            return np.exp(-1j * w)
        return 1.0 - np.cos(w)


def dft(s, axis=-1):
    """Unitary DFT; the DC output of a constant ``c`` is ``c * sqrt(T)``."""
    return np.fft.fft(s, axis=axis, norm="ortho")


def idft(shat, axis=-1):
    return np.fft.ifft(shat, axis=axis, norm="ortho")


@dataclass(frozen=True)
class Window:
    """Analysis window.

    ``values[j]`` is the window at offset ``j - M // 2`` from the frame
    centre, so the support is ``[-M/2, M/2)`` and the peak of a symmetric
    window sits at index ``M // 2``.
    """

    values: np.ndarray
    hop: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).copy()
        if v.ndim != 1 or v.size == 0:
            raise InputError("window values must be a non-empty vector")
        if not np.linalg.norm(v) > 0:
            raise InputError("window has zero norm")
        hop = int(self.hop)
        if not 1 <= hop <= v.size:
            raise InputError(f"hop {self.hop} must lie in [1, {v.size}]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "hop", hop)

    @property
    def n_bands(self) -> int:
        return self.values.size

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(self.n_bands) - self.n_bands // 2

    @property
    def norm_sq(self) -> float:
        return float(np.dot(self.values, self.values))


def iterated_sine_window(m: int) -> Window:
    """``sin(pi/2 * cos(pi t / m)**2)`` on ``t = -m/2 .. m/2 - 1`` with hop ``m/2``.

    At half overlap the squared shifts sum to one, which makes the STFT tight.
    """
    if m < 2 or m % 2:
        raise InputError(f"iterated sine window needs an even length, got {m}")
    t = np.arange(m) - m // 2
    g = np.sin(0.5 * np.pi * np.cos(np.pi * t / m) ** 2)
    return Window(g, m // 2)


def rectangular_window(m: int, hop: int) -> Window:
    return Window(np.ones(m), hop)


def window_overlap_sum(window: Window, n_steps: int) -> np.ndarray:
    """``sum_k g(t - a k)**2`` over the circular frames, for every ``t``."""
    out = np.zeros(n_steps)
    for k in range(n_steps // window.hop):
        idx = (window.hop * k + window.offsets) % n_steps
        np.add.at(out, idx, window.values**2)
    return out


def stft(s, window: Window) -> np.ndarray:
    """Circular sampled STFT.

    Frame ``k`` (``k = 0 .. T // a - 1``) is centred at time ``a k``, and band
    ``m`` (``m = 0 .. M - 1``) uses the absolute-time kernel
    ``exp(-2j pi t m / M)``::

        C[k, m] = sum_t s[t] * conj(g[t - a k  (mod T)]) * exp(-2j pi t m / M)

    Parameters
    ----------
    s : (..., T) array
        Signals along the last axis.
    window : Window

    Returns
    -------
    (..., T // a, M) complex array
    """
    s = np.asarray(s)
    n_steps = s.shape[-1]
    m = window.n_bands
    if m > n_steps:
        raise InputError(f"window of length {m} is longer than the signal ({n_steps})")
    n_frames = n_steps // window.hop
    # times covered by each frame, (K, M)
    times = (window.hop * np.arange(n_frames)[:, None] + window.offsets[None, :]) % n_steps
    segs = s[..., times] * np.conj(window.values)
    # fold absolute times onto the M-periodic kernel, then one FFT per frame
    bins = times % m
    if n_steps % m == 0:
        folded = np.zeros(segs.shape, dtype=segs.dtype)
        np.put_along_axis(folded, np.broadcast_to(bins, segs.shape), segs, axis=-1)
    else:
        folded = np.zeros(segs.shape, dtype=segs.dtype)
        lead = folded.reshape(-1, n_frames, m)
        src = segs.reshape(-1, n_frames, m)
        rows = np.arange(n_frames)[:, None]
        for b in range(lead.shape[0]):
            np.add.at(lead[b], (rows, bins), src[b])
        folded = lead.reshape(segs.shape)
    return np.fft.fft(folded, axis=-1)


def _maybe_real(x, rtol=1e-10):
    scale = np.abs(x).max() if x.size else 0.0
    if np.abs(x.imag).max(initial=0.0) <= rtol * max(scale, np.finfo(float).tiny):
        return x.real.copy()
    return x


def time_localize(h, tau: int) -> np.ndarray:
    """Inverse unitary DFT of the response ``h`` translated to time ``tau``.

    ``h = 1`` everywhere gives ``sqrt(T)`` times a delta at ``tau``. The
    result is real when ``h`` is symmetric in frequency.
    """
    h = np.asarray(h)
    if h.ndim != 1 or not np.all(np.isfinite(h)):
        raise InputError("time response must be a finite vector")
    base = np.fft.ifft(h, norm="ortho")
    return _maybe_real(np.roll(base, tau))
