"""Graphs, combinatorial Laplacians and the graph Fourier transform.

Vertex indices are 0-based throughout.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import GraphConstructionError, InputError

Response = Union[Callable[[np.ndarray], np.ndarray], np.ndarray]

#: a weight counts as an edge when it is at least this fraction of the max weight
EDGE_CUTOFF = 1e-4


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Graph:
    """Weighted undirected graph.

    Parameters
    ----------
    weights : (N, N) array
        Symmetric, nonnegative, zero diagonal.
    coords : (N, d) array, optional
        Vertex positions.
    """

    weights: np.ndarray
    coords: Optional[np.ndarray] = None
    ids: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InputError(f"weights must be square, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise InputError("weights contain non-finite entries")
        if np.any(w < 0):
            raise InputError("weights must be nonnegative")
        if np.any(np.diag(w) != 0):
            raise InputError("weights must have a zero diagonal")
        if not np.allclose(w, w.T, rtol=0, atol=1e-12 * max(1.0, np.abs(w).max())):
            raise InputError("weights must be symmetric")
        object.__setattr__(self, "weights", _readonly(w))
        if self.coords is not None:
            c = np.asarray(self.coords, dtype=float)
            if c.ndim == 1:
                c = c[:, None]
            if c.shape[0] != w.shape[0]:
                raise InputError("coords and weights disagree on the number of vertices")
            object.__setattr__(self, "coords", _readonly(c))
        if self.ids is not None:
            if len(self.ids) != w.shape[0]:
                raise InputError("ids and weights disagree on the number of vertices")
            object.__setattr__(self, "ids", tuple(str(i) for i in self.ids))

    @property
    def n_vertices(self) -> int:
        return self.weights.shape[0]

    def average_degree(self, cutoff: float = EDGE_CUTOFF) -> float:
        """Mean number of neighbours, counting weights >= ``cutoff * max weight``."""
        return average_degree(self.weights, cutoff)


@dataclass(frozen=True)
class GraphSpectrum:
    """Eigendecomposition ``L = U diag(lambda) U^T`` with ascending eigenvalues.

    Columns of ``eigenvectors`` are the graph Fourier modes.
    """

    eigenvectors: np.ndarray
    eigenvalues: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eigenvectors", _readonly(self.eigenvectors))
        object.__setattr__(self, "eigenvalues", _readonly(self.eigenvalues))

    @property
    def n_vertices(self) -> int:
        return self.eigenvalues.shape[0]

    @classmethod
    def from_graph(cls, graph: Graph) -> "GraphSpectrum":
        return eigendecompose(combinatorial_laplacian(graph))


def average_degree(weights, cutoff=EDGE_CUTOFF):
    w = np.asarray(weights, dtype=float)
    wmax = w.max()
    if wmax <= 0:
        return 0.0
    return float(np.count_nonzero(w >= cutoff * wmax)) / w.shape[0]


def build_gaussian_radius_graph(coords, radius, kernel_scale, min_relative_weight=0.0, ids=None):
    """Connect every pair of points closer than ``radius``.

    The weight of an edge is ``exp(-kernel_scale * d**2)`` with ``d`` the
    euclidean distance. Weights below ``min_relative_weight`` times the largest
    weight are dropped.

    Raises
    ------
    GraphConstructionError
        If some vertex ends up without neighbours.
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    if coords.shape[0] < 2:
        raise InputError("need at least two points")
    if not np.all(np.isfinite(coords)):
        raise InputError("coordinates must be finite")
    if radius <= 0 or kernel_scale < 0:
        raise InputError("radius must be positive and kernel_scale nonnegative")

    d = cdist(coords, coords)
    w = np.where((d > 0) & (d <= radius), np.exp(-kernel_scale * d**2), 0.0)
    if min_relative_weight > 0 and w.max() > 0:
        w[w < min_relative_weight * w.max()] = 0.0
    w = 0.5 * (w + w.T)

    isolated = np.flatnonzero(w.sum(axis=1) == 0)
    if isolated.size:
        i = int(isolated[0])
        raise GraphConstructionError(
            f"vertex {i} has no neighbours within radius {radius:g}; increase the radius",
            vertex=i,
        )
    return Graph(w, coords=coords, ids=ids)


def calibrate_kernel_scale(coords, radius, target_avg_degree, cutoff=EDGE_CUTOFF):
    """Find a kernel scale giving roughly the requested average degree.

    An edge counts when its weight is at least ``cutoff`` times the largest
    weight. The degree is a non-increasing step function of the scale whose
    jumps are known in closed form, so every plateau is examined and a scale
    inside the plateau closest to the target is returned (never on a jump).

    Raises
    ------
    GraphConstructionError
        If no plateau lies within 0.5 of the target.
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    n = coords.shape[0]
    if target_avg_degree <= 0:
        raise InputError("target degree must be positive")
    if target_avg_degree > n - 1:
        raise GraphConstructionError(
            f"target degree {target_avg_degree:g} exceeds the maximum {n - 1} for {n} vertices"
        )

    d2 = cdist(coords, coords) ** 2
    within = (d2 > 0) & (d2 <= radius**2)
    if not within.any():
        raise GraphConstructionError(f"no pair of points lies within radius {radius:g}")
    # w_ij / w_max = exp(-k (d_ij^2 - d_min^2)): an edge survives iff k * excess <= log(1/cutoff)
    excess = d2[within] - d2[within].min()
    log_cut = np.log(1.0 / cutoff)

    jumps = np.unique(log_cut / excess[excess > 0])
    if jumps.size == 0:
        candidates = np.array([1.0 / d2[within].min()])
    else:
        candidates = np.concatenate(
            [[0.5 * jumps[0]], np.sqrt(jumps[:-1] * jumps[1:]), [2.0 * jumps[-1]]]
        )
    degrees = np.array([np.count_nonzero(k * excess <= log_cut) / n for k in candidates])
    gaps = np.abs(degrees - target_avg_degree)
    best = int(np.argmin(gaps))
    if gaps[best] > 0.5:
        raise GraphConstructionError(
            f"cannot reach average degree {target_avg_degree:g} with radius {radius:g}; "
            f"reachable degrees span [{degrees.min():g}, {degrees.max():g}]"
        )
    return float(candidates[best])


def combinatorial_laplacian(graph) -> np.ndarray:
    """``diag(W 1) - W``. Accepts a :class:`Graph` or a weight matrix."""
    w = graph.weights if isinstance(graph, Graph) else np.asarray(graph, dtype=float)
    return np.diag(w.sum(axis=1)) - w


def _fix_signs(u):
    # largest-magnitude entry of each column made positive (argmax picks the first on ties)
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs


def eigendecompose(laplacian) -> GraphSpectrum:
    """Dense symmetric eigendecomposition with a deterministic sign convention."""
    lap = np.asarray(laplacian, dtype=float)
    if lap.ndim != 2 or lap.shape[0] != lap.shape[1]:
        raise InputError(f"expected a square matrix, got shape {lap.shape}")
    scale = max(1.0, np.abs(lap).max())
    if not np.allclose(lap, lap.T, rtol=0, atol=1e-10 * scale):
        raise InputError("matrix is not symmetric")
    evals, evecs = np.linalg.eigh(0.5 * (lap + lap.T))
    return GraphSpectrum(_fix_signs(evecs), evals)


def _check_signal(spec, x):
    x = np.asarray(x)
    if x.shape[0] != spec.n_vertices:
        raise InputError(f"signal has {x.shape[0]} vertices, graph has {spec.n_vertices}")
    return x


def gft(spec: GraphSpectrum, x):
    """Graph Fourier transform ``U^T x``; ``x`` may hold signals as columns."""
    return spec.eigenvectors.T @ _check_signal(spec, x)


def igft(spec: GraphSpectrum, xhat):
    return spec.eigenvectors @ _check_signal(spec, xhat)


def evaluate_response(h: Response, grid, name="response") -> np.ndarray:
    """Sample ``h`` on ``grid`` (or validate an already sampled array)."""
    grid = np.asarray(grid)
    if callable(h):
        values = np.asarray(h(grid))
        if values.ndim == 0:
            values = np.full(grid.shape, values, dtype=values.dtype)
    else:
        values = np.asarray(h)
    if values.shape != grid.shape:
        raise InputError(f"{name} has shape {values.shape}, expected {grid.shape}")
    if not np.all(np.isfinite(values)):
        raise InputError(f"{name} is not finite on every grid point")
    return values


def graph_filter(spec: GraphSpectrum, h: Response, x):
    """Apply ``h(L) x = U h(Lambda) U^T x``."""
    resp = evaluate_response(h, spec.eigenvalues, "graph response")
    x = _check_signal(spec, x)
    xhat = spec.eigenvectors.T @ x
    scale = resp if x.ndim == 1 else resp[:, None]
    return spec.eigenvectors @ (scale * xhat)


def graph_localize(spec: GraphSpectrum, h: Response, i: int) -> np.ndarray:
    """Impulse response of ``h(L)`` centred at vertex ``i``, i.e. ``h(L) delta_i``."""
    n = spec.n_vertices
    if not 0 <= i < n:
        raise InputError(f"vertex index {i} out of range for {n} vertices")
    resp = evaluate_response(h, spec.eigenvalues, "graph response")
    u = spec.eigenvectors
    return u @ (resp * u[i])
