"""Recovery of time-vertex signals observed through a linear operator.

Measurements follow ``y = A x + w`` with ``x`` of known JPSD ``h_x`` and noise
of JPSD ``h_w``. All solvers work on vectorized signals (see
:func:`jtvsp.joint.vec`) and never form ``A`` or the joint Laplacian as
matrices: joint filters are applied through the joint Fourier transform and
the normal equations are solved by preconditioned conjugate gradients.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator as _ScipyOperator
from scipy.sparse.linalg import cg

from .exceptions import ConvergenceError, InputError
from .graph import GraphSpectrum
from .joint import JointFilter, joint_filter_apply, joint_laplacian_response, mat, vec
from .temporal import TimeBasis

F_MAX = 1e8


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-8
    max_iters: int = 2000
    f_max: float = F_MAX


@dataclass
class SolveReport:
    """``residual`` is the final relative residual of the (scaled) linear system."""

    solution: np.ndarray
    iterations: int
    residual: float
    converged: bool


@dataclass(frozen=True)
class LinearOperator:
    """Linear map from vectorized ``(N, T)`` signals to ``R^P``.

    ``kind`` is one of ``identity``, ``mask``, ``joint_filter`` or ``custom``;
    ``mask`` or ``response`` hold the defining data of the structured kinds.
    """

    forward: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]
    signal_shape: tuple
    n_out: int
    kind: str = "custom"
    mask: Optional[np.ndarray] = None
    response: Optional[np.ndarray] = None

    @property
    def n_in(self) -> int:
        return int(np.prod(self.signal_shape))

    def observe(self, y):
        """Measurement vector from ``y``, which may be a full ``(N, T)`` array."""
        y = np.asarray(y)
        if y.ndim == 2:
            if y.shape != self.signal_shape:
                raise InputError(f"measurement shape {y.shape} != signal shape {self.signal_shape}")
            y = y.reshape(-1, order="F")
            if self.kind == "mask":
                y = y[vec(self.mask)]
        if y.shape != (self.n_out,):
            raise InputError(f"expected {self.n_out} measurements, got shape {y.shape}")
        return y


def identity_operator(signal_shape) -> LinearOperator:
    n = int(np.prod(signal_shape))
    return LinearOperator(lambda x: x, lambda y: y, tuple(signal_shape), n, "identity")


def mask_operator(mask) -> LinearOperator:
    """Select observed entries, in vectorized (column-major) order."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise InputError("mask must be a 2-D boolean array")
    if not mask.any():
        raise InputError("mask observes no entry")
    sel = vec(mask)
    n_in = sel.size

    def adjoint(y):
        out = np.zeros(n_in, dtype=np.result_type(y, float))
        out[sel] = y
        return out

    return LinearOperator(lambda x: x[sel], adjoint, mask.shape, int(sel.sum()), "mask", mask=mask)


def joint_filter_operator(filt: JointFilter) -> LinearOperator:
    """``a(L_J)`` as an operator. A real response makes it self-adjoint."""
    shape = filt.shape
    spec = filt.graph_spectrum

    def forward(x):
        return vec(joint_filter_apply(filt.response, mat(x, *shape), spec))

    def adjoint(y):
        return vec(joint_filter_apply(np.conj(filt.response), mat(y, *shape), spec))

    return LinearOperator(forward, adjoint, shape, int(np.prod(shape)), "joint_filter",
                          response=filt.response)


def _gram_response(op: LinearOperator):
    # spectral stand-in for A^T A, used only to build the preconditioner
    if op.kind == "joint_filter":
        return np.abs(op.response) ** 2
    if op.kind == "mask":
        return np.full(op.signal_shape, op.n_out / op.n_in)
    return np.ones(op.signal_shape)


def _cg(apply, b, settings, precond=None):
    """Conjugate gradients with restarts until the true residual meets ``tol``."""
    n = b.size
    a_op = _ScipyOperator((n, n), matvec=apply, dtype=float)
    m_op = None if precond is None else _ScipyOperator((n, n), matvec=precond, dtype=float)
    bnorm = np.linalg.norm(b)
    x = np.zeros(n)
    if bnorm == 0:
        return x, 0, 0.0, True
    count = [0]

    def tick(_):
        count[0] += 1

    residual = 1.0
    for _ in range(4):
        left = settings.max_iters - count[0]
        if left <= 0:
            break
        x, _info = cg(a_op, b, x0=x, rtol=settings.tol, atol=0.0, maxiter=left, M=m_op, callback=tick)
        residual = float(np.linalg.norm(b - apply(x)) / bnorm)
        if residual <= settings.tol:
            return x, count[0], residual, True
    return x, count[0], residual, False


def _spectral_apply(response, shape, spec):
    def apply(v):
        return vec(joint_filter_apply(response, mat(v, *shape), spec))
    return apply


def _finish(x, iters, residual, ok, shape, what):
    report = SolveReport(mat(x, *shape), iters, residual, ok)
    if not ok:
        raise ConvergenceError(
            f"{what} did not converge: relative residual {residual:.3g} after {iters} iterations",
            report,
        )
    return report


def _solve_regularized(op, y, reg, spec, settings, shift=None):
    """Solve ``(A^T A + reg(L_J)) z = A^T (y - A shift)``; ``reg`` is a response.

    The system is scaled on both sides by ``d(L_J)**-1/2`` with ``d`` a
    spectral approximation of its diagonal, so the regularizer enters as the
    bounded response ``reg / d``. Penalties as large as ``f_max**2`` then do
    not amplify rounding errors. The reported residual is that of the scaled
    system.
    """
    shape = op.signal_shape
    if reg.shape != shape:
        raise InputError(f"regularizer shape {reg.shape} != signal shape {shape}")
    y = op.observe(y)
    if shift is not None:
        y = y - op.forward(vec(shift))
    d = _gram_response(op) + reg
    d = np.where(d > 0, d, 1.0)
    scale = _spectral_apply(1.0 / np.sqrt(d), shape, spec)
    scaled_reg = _spectral_apply(reg / d, shape, spec)

    def system(u):
        return scale(op.adjoint(op.forward(scale(u)))) + scaled_reg(u)

    u, it, res, ok = _cg(system, scale(op.adjoint(y)), settings)
    return scale(u), it, res, ok


def tikhonov_solve(op: LinearOperator, y, alpha, spec: GraphSpectrum, settings=None) -> SolveReport:
    """Minimize ``||A x - y||^2 + alpha * x^T L_J x``."""
    settings = settings or SolverSettings()
    if alpha < 0:
        raise InputError("alpha must be nonnegative")
    basis = TimeBasis(op.signal_shape[1])
    reg = alpha * joint_laplacian_response(spec, basis)
    x, it, res, ok = _solve_regularized(op, y, reg, spec, settings)
    return _finish(x, it, res, ok, op.signal_shape, "Tikhonov solve")


def wiener_weights(h_x, h_w, f_max=F_MAX) -> np.ndarray:
    """Penalty ``sqrt(h_w / h_x)``, the inverse square root of the SNR.

    Where ``h_x = 0`` and ``h_w > 0`` the weight is capped at ``f_max``; where
    both vanish it is 0.
    """
    h_x = np.asarray(h_x, dtype=float)
    h_w = np.broadcast_to(np.asarray(h_w, dtype=float), h_x.shape)
    if np.any(h_x < 0) or np.any(h_w < 0):
        raise InputError("power spectral densities must be nonnegative")
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.sqrt(h_w / h_x)
    f = np.where(h_x > 0, f, np.where(h_w > 0, f_max, 0.0))
    return np.minimum(f, f_max)


def wiener_solve(op: LinearOperator, y, h_x, h_w, spec: GraphSpectrum, mean_coefficient=0.0,
                 settings=None) -> SolveReport:
    """Minimize ``||A x - y||^2 + ||f(L_J)(x - E[x])||^2`` with ``E[x] = c 1``."""
    settings = settings or SolverSettings()
    f = wiener_weights(h_x, h_w, settings.f_max)
    mean = np.full(op.signal_shape, float(mean_coefficient))
    shift = mean if mean_coefficient else None
    z, it, res, ok = _solve_regularized(op, y, f**2, spec, settings, shift)
    return _finish(z + vec(mean), it, res, ok, op.signal_shape, "Wiener solve")


def wiener_objective(op: LinearOperator, y, x, h_x, h_w, spec, mean_coefficient=0.0, f_max=F_MAX):
    """Value of the Wiener objective at the ``(N, T)`` signal ``x``."""
    f = wiener_weights(h_x, h_w, f_max)
    x = np.asarray(x, dtype=float)
    fit = op.forward(vec(x)) - op.observe(y)
    pen = joint_filter_apply(f, x - mean_coefficient, spec)
    return float(fit @ fit + np.sum(pen**2))


def joint_wiener_closed_form(a_resp, h_x, h_w, y, spec: GraphSpectrum) -> np.ndarray:
    """Joint Wiener filter ``a h_x / (a**2 h_x + h_w)`` applied to ``y``.

    Valid when the observation operator is itself the joint filter ``a``.
    Entries where the denominator vanishes are set to 0.
    """
    h_x = np.asarray(h_x, dtype=float)
    a = np.broadcast_to(np.asarray(a_resp, dtype=float), h_x.shape)
    h_w = np.broadcast_to(np.asarray(h_w, dtype=float), h_x.shape)
    den = a**2 * h_x + h_w
    gain = np.where(den > 0, a * h_x / np.where(den > 0, den, 1.0), 0.0)
    return joint_filter_apply(gain, y, spec)


def wiener_solve_noiseless(op: LinearOperator, y, h_x, spec: GraphSpectrum, settings=None) -> SolveReport:
    """Minimize ``||h_x^{-1/2}(L_J) x||`` subject to ``A x = y`` for a mask ``A``.

    Solves ``(A h_x(L_J) A^T) mu = y`` and returns ``x = h_x(L_J) A^T mu``, so
    modes with ``h_x = 0`` never enter the solution.
    """
    settings = settings or SolverSettings()
    if op.kind not in ("mask", "identity"):
        raise InputError("the noiseless solver needs a masking operator")
    h_x = np.asarray(h_x, dtype=float)
    shape = op.signal_shape
    if h_x.shape != shape:
        raise InputError(f"h_x shape {h_x.shape} != signal shape {shape}")
    if np.any(h_x < 0):
        raise InputError("h_x must be nonnegative")
    y = op.observe(y)
    if op.n_out == op.n_in:
        # every entry observed: the constraint alone fixes x
        return SolveReport(mat(op.adjoint(y), *shape), 0, 0.0, True)

    h_apply = _spectral_apply(h_x, shape, spec)

    def system(mu):
        return op.forward(h_apply(op.adjoint(mu)))

    # Jacobi preconditioner: diag of h_x(L_J) at vertex i is sum_n u_n(i)^2 mean_tau h_x[n, tau]
    diag_vertex = (spec.eigenvectors**2) @ h_x.mean(axis=1)
    diag = op.forward(vec(np.repeat(diag_vertex[:, None], shape[1], axis=1)))
    if np.any(diag <= 0):
        raise ConvergenceError("singular system: an observed vertex carries no signal energy under h_x")
    mu, it, res, ok = _cg(system, y, settings, lambda v: v / diag)
    x = h_apply(op.adjoint(mu))
    report = SolveReport(mat(x, *shape), it, res, ok)
    if not ok:
        raise ConvergenceError(
            f"noiseless Wiener solve did not converge (residual {res:.3g} after {it} iterations); "
            "the mask may be incompatible with zero entries of h_x",
            report,
        )
    return report
