"""Denoising and recovery experiments on sensor-network data.

Every experiment estimates spectra on the first ``rho`` fraction of the time
axis and evaluates on the rest, comparing the joint Wiener estimator with
two disjoint baselines that model only time or only the graph.
"""

import json
import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.linalg import circulant

from . import io
from .exceptions import ConvergenceError, InputError
from .graph import GraphSpectrum, build_gaussian_radius_graph, calibrate_kernel_scale
from .psd import Jpsd, default_window, estimate_jpsd, estimate_tpsd, upsample_to_grid
from .stationarity import JwssModel, synthesize_jwss
from .temporal import TimeBasis
from .wiener import (
    SolverSettings,
    joint_wiener_closed_form,
    mask_operator,
    tikhonov_solve,
    wiener_solve,
    wiener_solve_noiseless,
)

log = logging.getLogger(__name__)

SNR_CAP_DB = 300.0


@dataclass
class Dataset:
    coords: np.ndarray
    readings: np.ndarray
    station_ids: list
    global_mean: float = 0.0
    dropped: list = field(default_factory=list)

    @property
    def shape(self):
        return self.readings.shape


def ingest(coords_path, readings_path) -> Dataset:
    """Load stations and readings, drop incomplete stations, remove the global mean.

    Readings rows are matched to coordinates by station id; the dataset keeps
    the order of the coordinates file.
    """
    ids, coords = io.read_coords(coords_path)
    rids, _, values = io.read_matrix(readings_path)
    if set(ids) != set(rids):
        only_c = sorted(set(ids) - set(rids))
        only_r = sorted(set(rids) - set(ids))
        raise InputError(f"station ids differ: only in coordinates {only_c}, only in readings {only_r}")
    order = [rids.index(i) for i in ids]
    values = values[order]

    bad = np.isnan(values).any(axis=1)
    dropped = [ids[k] for k in np.flatnonzero(bad)]
    for name in dropped:
        log.warning("dropping station %s: missing readings", name)
    keep = ~bad
    if keep.sum() < 2:
        raise InputError("fewer than two complete stations remain")
    values = values[keep]
    mean = float(values.mean())
    return Dataset(coords[keep], values - mean, [i for i, k in zip(ids, keep) if k], mean, dropped)


def split(readings, rho, min_train=1):
    """Contiguous train/test split along time; ``rho = 1`` uses all data for both."""
    x = readings.readings if isinstance(readings, Dataset) else np.asarray(readings)
    if not 0 < rho <= 1:
        raise InputError(f"rho must lie in (0, 1], got {rho}")
    n_steps = x.shape[1]
    if rho == 1:
        train, test = x, x
    else:
        cut = math.floor(rho * n_steps + 1e-9)
        train, test = x[:, :cut], x[:, cut:]
    if train.shape[1] < min_train:
        raise InputError(f"training block has {train.shape[1]} steps, fewer than the window ({min_train})")
    if test.shape[1] == 0:
        raise InputError("test block is empty")
    return train, test


def snr_db(reference, estimate) -> float:
    """``10 log10(||ref||^2 / ||est - ref||^2)``, capped at 300 dB."""
    reference = np.asarray(reference, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if reference.shape != estimate.shape:
        raise InputError("reference and estimate shapes differ")
    ref = np.sum(reference**2)
    if ref == 0:
        raise InputError("reference signal is zero")
    err = np.sum((estimate - reference) ** 2)
    if err == 0:
        return SNR_CAP_DB
    return float(min(10 * np.log10(ref / err), SNR_CAP_DB))


# ---------------------------------------------------------------- baselines

def _gain(h, noise):
    den = h + noise
    return np.where(den > 0, h / np.where(den > 0, den, 1.0), 0.0)


def time_wiener_denoise(y, tpsd, noise_var):
    """Per-vertex Wiener filter; ``tpsd`` is ``(N, T)`` on the DFT grid."""
    g = _gain(tpsd, noise_var)
    return np.fft.ifft(g * np.fft.fft(y, axis=1), axis=1).real


def vertex_wiener_denoise(y, spec: GraphSpectrum, vpsd, noise_var):
    """Per-time graph Wiener filter with a length-``N`` VPSD."""
    u = spec.eigenvectors
    return u @ (_gain(vpsd, noise_var)[:, None] * (u.T @ y))


def _interpolate_gaussian(cov, y, observed):
    """Kriging of each column of ``y`` with covariance ``cov``, observed entries fixed."""
    out = np.zeros_like(y)
    for j in range(y.shape[1]):
        obs = observed[:, j]
        if not obs.any():
            continue
        mu = np.linalg.solve(cov[np.ix_(obs, obs)], y[obs, j])
        out[:, j] = cov[:, obs] @ mu
        out[obs, j] = y[obs, j]
    return out


def time_wiener_interpolate(y, observed, tpsd):
    """Noiseless per-vertex interpolation with circulant covariances from ``tpsd``."""
    out = np.zeros_like(y, dtype=float)
    for i in range(y.shape[0]):
        cov = circulant(np.fft.ifft(tpsd[i]).real)
        out[i] = _interpolate_gaussian(cov, y[i][:, None], observed[i][:, None])[:, 0]
    return out


def vertex_wiener_interpolate(y, observed, spec: GraphSpectrum, vpsd):
    u = spec.eigenvectors
    cov = (u * vpsd) @ u.T
    return _interpolate_gaussian(cov, y, observed)


def vertex_psd(x, spec: GraphSpectrum):
    """VPSD estimate: mean of ``|GFT(x_t)|**2`` over the columns of ``x``."""
    return np.mean((spec.eigenvectors.T @ x) ** 2, axis=1)


# ---------------------------------------------------------------- configuration

@dataclass
class ExperimentConfig:
    """Experiment settings. Default grids: input SNR -10..30 dB in 5 dB
    steps and 10%..90% missing in 10% steps."""

    rho: float = 0.5
    snr_grid: list = field(default_factory=lambda: [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0])
    mask_fraction_grid: list = field(default_factory=lambda: [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    n_trials: int = 10
    seed: int = 0
    n_bands: int = None
    tol: float = 1e-8
    max_iters: int = 2000
    f_max: float = 1e8
    disjoint_psd_source: str = "train"

    def __post_init__(self):
        if not self.snr_grid or not self.mask_fraction_grid:
            raise InputError("parameter grids must be non-empty")
        if not 0 < self.rho <= 1:
            raise InputError("rho must lie in (0, 1]")
        if self.n_trials < 1:
            raise InputError("n_trials must be positive")
        if self.disjoint_psd_source not in ("train", "full"):
            raise InputError("disjoint_psd_source must be 'train' or 'full'")
        if any(not 0 <= p < 1 for p in self.mask_fraction_grid):
            raise InputError("missing fractions must lie in [0, 1)")

    @property
    def solver(self) -> SolverSettings:
        return SolverSettings(self.tol, self.max_iters, self.f_max)

    @classmethod
    def from_dict(cls, d) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InputError(f"unknown experiment keys: {sorted(unknown)}")
        return cls(**d)


def load_config(path):
    """Read a JSON config: ``{"experiment": {...}, "data": {...}}``."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: cannot read config ({exc})") from None
    unknown = set(raw) - {"experiment", "data"}
    if unknown:
        raise InputError(f"{path}: unknown sections {sorted(unknown)}")
    return ExperimentConfig.from_dict(raw.get("experiment", {})), raw.get("data", {})


# ---------------------------------------------------------------- synthetic data

def ridge_jpsd(spec: GraphSpectrum, n_steps, width=0.15, floor=1e-3):
    """Non-separable JPSD concentrated where graph and time frequency agree.

    ``exp(-(lambda/lambda_max - |omega|/pi)**2 / (2 width**2)) + floor`` with
    ``omega`` wrapped to ``(-pi, pi]``.
    """
    lam = spec.eigenvalues / max(spec.eigenvalues[-1], np.finfo(float).tiny)
    w = 2 * np.pi * np.arange(n_steps) / n_steps
    w = np.abs(np.where(w > np.pi, w - 2 * np.pi, w)) / np.pi
    return np.exp(-((lam[:, None] - w[None, :]) ** 2) / (2 * width**2)) + floor


def random_station_graph(n_vertices, seed=0, target_degree=3.0, radius=None, max_tries=100):
    """Random stations in the unit square joined into a connected graph of the
    requested average degree. Returns ``(coords, graph)``."""
    rng = np.random.default_rng(seed)
    radius = radius or np.sqrt(2.0)
    for _ in range(max_tries):
        coords = rng.random((n_vertices, 2))
        try:
            k = calibrate_kernel_scale(coords, radius, target_degree)
            graph = build_gaussian_radius_graph(coords, radius, k)
        except InputError:
            continue
        lam = np.linalg.eigvalsh(np.diag(graph.weights.sum(1)) - graph.weights)
        if lam[1] > 1e-6 * lam[-1]:
            return coords, graph
    raise InputError(f"no connected graph found in {max_tries} draws")


def synthetic_dataset(n_vertices=8, n_steps=256, seed=0, width=0.15):
    """One JWSS realization on a random station graph.

    Returns ``(dataset, spectrum, jpsd)`` with the true JPSD on the full grid.
    """
    coords, graph = random_station_graph(n_vertices, seed)
    spec = GraphSpectrum.from_graph(graph)
    h = ridge_jpsd(spec, n_steps, width)
    x = synthesize_jwss(JwssModel(h, spec, TimeBasis(n_steps)), 1, seed=seed)[0]
    ids = [f"s{i:02d}" for i in range(n_vertices)]
    return Dataset(coords, x - x.mean(), ids, float(x.mean())), spec, h


# ---------------------------------------------------------------- protocols

def _trial_rng(seed, kind, param_index, trial):
    ss = np.random.SeedSequence(seed, spawn_key=(kind, param_index, trial))
    return np.random.Generator(np.random.Philox(ss))


class _Spectra:
    """Spectral models fitted on the training block, sampled for the test grid."""

    def __init__(self, readings, spec, config):
        self.train, self.test = split(readings, config.rho)
        steps_tr = self.train.shape[1]
        window = default_window(steps_tr, config.n_bands)
        if steps_tr < window.n_bands:
            raise InputError(f"training block ({steps_tr}) shorter than the window ({window.n_bands})")
        t_test = self.test.shape[1]
        self.joint = upsample_to_grid(estimate_jpsd(self.train, spec, window), t_test)
        disjoint = readings if config.disjoint_psd_source == "full" else self.train
        dwin = default_window(disjoint.shape[1], config.n_bands)
        tp = estimate_tpsd(disjoint, dwin)
        self.time = upsample_to_grid(Jpsd(tp, np.zeros(tp.shape[0])), t_test)
        self.vertex = vertex_psd(disjoint - disjoint.mean(), spec)


def _row(method, parameter, trial, metric, value):
    return {"method": method, "parameter": float(parameter), "trial": int(trial),
            "metric": metric, "value": float(value)}


def run_denoising(readings, spec: GraphSpectrum, config: ExperimentConfig):
    """Add white Gaussian noise to the test block and denoise it three ways.

    Returns long-form rows ``(method, parameter, trial, metric, value)`` where
    ``parameter`` is the input SNR in dB and the metric is the output SNR.
    """
    x = readings.readings if isinstance(readings, Dataset) else np.asarray(readings, dtype=float)
    fit = _Spectra(x, spec, config)
    test = fit.test
    power = float(np.mean(test**2))
    rows = []
    for p, snr_in in enumerate(config.snr_grid):
        noise_var = 0.0 if math.isinf(snr_in) else power / 10 ** (snr_in / 10)
        for trial in range(config.n_trials):
            rng = _trial_rng(config.seed, 0, p, trial)
            noisy = test + np.sqrt(noise_var) * rng.standard_normal(test.shape)
            estimates = {
                "input": noisy,
                "joint": joint_wiener_closed_form(1.0, fit.joint, noise_var, noisy, spec),
                "time": time_wiener_denoise(noisy, fit.time, noise_var),
                "vertex": vertex_wiener_denoise(noisy, spec, fit.vertex, noise_var),
            }
            for method, est in estimates.items():
                rows.append(_row(method, snr_in, trial, "snr_db", snr_db(test, est)))
    return rows


def run_recovery(readings, spec: GraphSpectrum, config: ExperimentConfig):
    """Hide a random fraction of the test block and interpolate it three ways.

    ``parameter`` is the missing fraction; metrics are ``relative_error`` and
    ``snr_db``. A method whose system cannot be solved in a trial contributes
    a ``failed`` row instead.
    """
    x = readings.readings if isinstance(readings, Dataset) else np.asarray(readings, dtype=float)
    fit = _Spectra(x, spec, config)
    test = fit.test
    norm = np.linalg.norm(test)
    rows = []
    for p, frac in enumerate(config.mask_fraction_grid):
        for trial in range(config.n_trials):
            rng = _trial_rng(config.seed, 1, p, trial)
            observed = rng.random(test.shape) >= frac
            hidden = np.where(observed, test, 0.0)
            solvers = {
                "joint": lambda: wiener_solve_noiseless(
                    mask_operator(observed), hidden, fit.joint, spec, config.solver).solution,
                "time": lambda: time_wiener_interpolate(hidden, observed, fit.time),
                "vertex": lambda: vertex_wiener_interpolate(hidden, observed, spec, fit.vertex),
            }
            for method, solve in solvers.items():
                try:
                    est = solve()
                except (ConvergenceError, InputError, np.linalg.LinAlgError) as exc:
                    log.warning("%s failed at missing=%g trial %d: %s", method, frac, trial, exc)
                    rows.append(_row(method, frac, trial, "failed", 1.0))
                    continue
                rows.append(_row(method, frac, trial, "relative_error", np.linalg.norm(est - test) / norm))
                rows.append(_row(method, frac, trial, "snr_db", snr_db(test, est)))
    return rows


def tikhonov_comparison(n_draws=50, n_vertices=8, n_steps=16, missing=0.3, snr_in_db=0.0,
                        alpha_grid=None, seed=0, width=0.15, settings=None):
    """Mean squared error of Wiener and Tikhonov recovery from noisy masked data.

    Each draw is a Gaussian JWSS signal with the :func:`ridge_jpsd` spectrum,
    observed on a Bernoulli mask with white noise at ``snr_in_db`` relative
    to the mean signal power. The noise level is known to the Wiener solver.

    Returns
    -------
    wiener_mse : float
    tikhonov_mse : (len(alpha_grid),) array
    alpha_grid : array
    """
    alpha_grid = np.logspace(-3, 2, 10) if alpha_grid is None else np.asarray(alpha_grid, dtype=float)
    settings = settings or SolverSettings()
    _, graph = random_station_graph(n_vertices, seed)
    spec = GraphSpectrum.from_graph(graph)
    h = ridge_jpsd(spec, n_steps, width)
    model = JwssModel(h, spec, TimeBasis(n_steps))
    noise_var = float(h.mean()) / 10 ** (snr_in_db / 10)
    wiener_err = 0.0
    tik_err = np.zeros(alpha_grid.size)
    for d in range(n_draws):
        x = synthesize_jwss(model, 1, seed=seed, start=d)[0]
        rng = _trial_rng(seed, 2, 0, d)
        observed = rng.random(x.shape) >= missing
        if not observed.any():
            observed[0, 0] = True
        y = np.where(observed, x + np.sqrt(noise_var) * rng.standard_normal(x.shape), 0.0)
        op = mask_operator(observed)
        est = wiener_solve(op, y, h, noise_var, spec, settings=settings).solution
        wiener_err += np.mean((est - x) ** 2)
        for k, alpha in enumerate(alpha_grid):
            est = tikhonov_solve(op, y, alpha, spec, settings).solution
            tik_err[k] += np.mean((est - x) ** 2)
    return wiener_err / n_draws, tik_err / n_draws, alpha_grid


def summarize(rows):
    """Mean, std and count per ``(method, parameter, metric)``; failures are counted apart."""
    groups, failed = {}, {}
    for r in rows:
        key = (r["method"], r["parameter"])
        if r["metric"] == "failed":
            failed[key] = failed.get(key, 0) + 1
            continue
        groups.setdefault(key + (r["metric"],), []).append(r["value"])
    out = []
    for (method, param, metric), vals in sorted(groups.items()):
        v = np.asarray(vals)
        out.append({"method": method, "parameter": param, "metric": metric,
                    "mean": float(v.mean()), "std": float(v.std()), "n": int(v.size),
                    "n_failed": failed.get((method, param), 0)})
    return out


def mean_metric(rows, method, parameter, metric="snr_db"):
    vals = [r["value"] for r in rows
            if r["method"] == method and r["parameter"] == parameter and r["metric"] == metric]
    if not vals:
        raise KeyError((method, parameter, metric))
    return float(np.mean(vals))


def write_fixture(directory, n_stations=32, n_steps=256, seed=7, offset=8.0, sigma=0.3,
                  missing=0.3, radius=0.5):
    """Write a small synthetic station dataset in the CLI file formats.

    Files: ``coords.csv``, ``readings.csv`` (one JWSS realization plus
    ``offset``), ``noisy.csv`` (white noise of std ``sigma`` added) and
    ``masked.csv`` (a ``missing`` fraction of cells left empty).
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    coords = rng.random((n_stations, 2))
    k = calibrate_kernel_scale(coords, radius, 3.0)
    graph = build_gaussian_radius_graph(coords, radius, k)
    spec = GraphSpectrum.from_graph(graph)
    model = JwssModel(ridge_jpsd(spec, n_steps), spec, TimeBasis(n_steps), offset)
    x = synthesize_jwss(model, 1, seed=seed)[0]
    ids = [f"st{i:02d}" for i in range(n_stations)]
    io.write_coords(directory / "coords.csv", ids, np.round(coords, 6))
    io.write_matrix(directory / "readings.csv", ids, np.round(x, 6))
    io.write_matrix(directory / "noisy.csv", ids, np.round(x + sigma * rng.standard_normal(x.shape), 6))
    io.write_matrix(directory / "masked.csv", ids, np.where(rng.random(x.shape) < missing, np.nan, np.round(x, 6)))
