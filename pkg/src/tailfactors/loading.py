"""Loading-matrix estimation: latent matrix averaging, FISTA Lasso rows,
OLS post-Lasso refit, nonnegativity clipping, and simplex projection.

Pure rows are set to unit vectors.  Each non-pure row solves

    min_beta  0.5 * ||C beta - theta_j||_2^2 + lambda * ||beta||_1

by FISTA with step 1/||C||_2^2 and a monotone restart, optionally refit by
ordinary least squares on the recovered support, clipped at zero, and
optionally projected (on its nonzero coordinates) onto the unit simplex.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EstimationError, InputError, StructuralError
from .purevar import PureVarResult
from .tpdm import _as_matrix

SUPPORT_TOL = 1e-10


@dataclass(frozen=True)
class LspConfig:
    """Tuning knobs for the row estimator."""

    lam: float = 0.0
    use_projection: bool = True
    fista_max_iter: int = 5000
    fista_tol: float = 1e-8
    post_lasso: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise InputError("lambda must be a nonnegative real")
        if self.fista_tol <= 0:
            raise InputError("fista_tol must be positive")


def lambda_grid_default() -> tuple[float, ...]:
    """Default sparsity grid: 0.00001 .. 0.001 in steps of 0.00001 (100 values)."""
    return tuple(np.round(np.linspace(1e-5, 1e-3, 100), 8))


@dataclass(frozen=True)
class FistaResult:
    beta: np.ndarray
    objective: float
    iterations: int
    converged: bool
    objective_trace: np.ndarray


@dataclass(frozen=True)
class LoadingEstimate:
    """Estimated d x K loading matrix with per-row support metadata."""

    matrix: np.ndarray
    support_sizes: np.ndarray
    config: LspConfig
    row_flags: dict[int, tuple[str, ...]] = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_factors(self) -> int:
        return self.matrix.shape[1]

    # duck-compatible with LoadingMatrix for alignment utilities
    @property
    def entries(self) -> np.ndarray:
        return self.matrix


def estimate_c(sigma, partition: PureVarResult) -> tuple[np.ndarray, dict[int, np.ndarray]]:
    """Latent matrix estimate and per-column regression targets.

    C(a, b) averages the TPDM over the block I_a x I_b; theta_j collects, for
    each non-pure column j, the average TPDM entry against each pure group.
    """
    s = _as_matrix(sigma)
    if partition.n_factors < 1:
        raise StructuralError("partition must contain at least one set")
    groups = partition.sorted_partition()
    if any(len(g) == 0 for g in groups):
        raise StructuralError("partition sets must be nonempty")
    k = len(groups)
    c = np.empty((k, k))
    for a in range(k):
        for b in range(k):
            c[a, b] = s[np.ix_(groups[a], groups[b])].mean()
    c = 0.5 * (c + c.T)
    d = s.shape[0]
    non_pure = [j for j in range(d) if j not in partition.pure_indices]
    theta = {j: np.array([s[g, j].mean() for g in groups]) for j in non_pure}
    return c, theta


def _soft_threshold(x: np.ndarray, t: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def fista_lasso(c, theta, lam: float, max_iter: int = 5000, tol: float = 1e-8) -> FistaResult:
    """Solve the l1-penalized least squares row problem by monotone FISTA.

    Deterministic: starts at zero, fixed step 1/||C||_2^2, momentum restarted
    whenever the accelerated step would increase the objective.  With lam = 0
    the iterates converge to the least-squares solution.
    """
    c = np.asarray(c, dtype=float)
    theta = np.asarray(theta, dtype=float).ravel()
    if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] != theta.shape[0]:
        raise StructuralError("C must be square and conformable with theta")
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(theta)) and np.isfinite(lam) and lam >= 0):
        raise InputError("C, theta and lambda must be finite (lambda >= 0)")

    def objective(b):
        r = c @ b - theta
        return 0.5 * float(r @ r) + lam * float(np.abs(b).sum())

    spectral = np.linalg.norm(c, 2)
    if spectral == 0.0:
        beta = np.zeros_like(theta)
        return FistaResult(beta, objective(beta), 0, True, np.array([objective(beta)]))
    step = 1.0 / spectral**2
    ctc = c.T @ c
    ct_theta = c.T @ theta

    def grad(b):
        return ctc @ b - ct_theta

    x = np.zeros_like(theta)
    y = x.copy()
    t = 1.0
    f_x = objective(x)
    trace = [f_x]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        x_new = _soft_threshold(y - step * grad(y), step * lam)
        f_new = objective(x_new)
        if f_new > f_x:
            # momentum overshoot: restart from the last accepted point
            t = 1.0
            x_new = _soft_threshold(x - step * grad(x), step * lam)
            f_new = objective(x_new)
            if f_new > f_x:
                # plain proximal step cannot descend: numerical stationarity
                converged = True
                break
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        rel_change = abs(f_x - f_new) / max(1.0, abs(f_x))
        x, f_x, t = x_new, f_new, t_new
        trace.append(f_x)
        if rel_change <= tol:
            converged = True
            break
    return FistaResult(x, f_x, iterations, converged, np.array(trace))


def ols_post_lasso(c, theta, support) -> tuple[np.ndarray, str | None]:
    """Least-squares refit restricted to ``support``; zeros elsewhere.

    Returns (beta, flag) where flag is None, "empty-support" (zero vector for
    a degenerate row) or "singular" (minimum-norm solution of a rank-deficient
    restricted system).
    """
    c = np.asarray(c, dtype=float)
    theta = np.asarray(theta, dtype=float).ravel()
    k = theta.shape[0]
    idx = sorted(int(a) for a in support)
    if any(a < 0 or a >= k for a in idx):
        raise StructuralError("support indices out of range")
    beta = np.zeros(k)
    if not idx:
        return beta, "empty-support"
    sub = c[np.ix_(idx, idx)]
    sol, _, rank, _ = np.linalg.lstsq(sub, theta[idx], rcond=None)
    beta[idx] = sol
    return beta, ("singular" if rank < len(idx) else None)


def simplex_project(v) -> np.ndarray:
    """Euclidean projection onto {b >= 0, sum b = 1} by sort and threshold."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size == 0:
        raise StructuralError("cannot project an empty vector")
    if not np.all(np.isfinite(v)):
        raise InputError("projection input must be finite")
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, v.size + 1)
    rho = int(np.nonzero(u - (css - 1.0) / j > 0)[0][-1])
    tau = (css[rho] - 1.0) / (rho + 1)
    return np.maximum(v - tau, 0.0)


def lsp(sigma, purevar: PureVarResult, config: LspConfig = LspConfig()) -> LoadingEstimate:
    """Assemble the full loading-matrix estimate.

    Pure rows become unit vectors.  Every other row runs, in order: FISTA,
    an optional least-squares refit on the FISTA support, clipping at zero,
    and an optional simplex projection of the nonzero coordinates.
    """
    if purevar.n_factors < 1:
        raise EstimationError("no pure variables: cannot estimate a loading matrix")
    s = _as_matrix(sigma)
    c, theta = estimate_c(s, purevar)
    k = purevar.n_factors
    d = s.shape[0]
    matrix = np.zeros((d, k))
    flags: dict[int, tuple[str, ...]] = {}
    for a, group in enumerate(purevar.sorted_partition()):
        for j in group:
            matrix[j, a] = 1.0
    for j in sorted(theta):
        row_flags: list[str] = []
        fista = fista_lasso(c, theta[j], config.lam, config.fista_max_iter, config.fista_tol)
        if not fista.converged:
            row_flags.append("fista-max-iter")
        beta = fista.beta
        support = np.nonzero(np.abs(beta) > SUPPORT_TOL)[0]
        if config.post_lasso:
            beta, flag = ols_post_lasso(c, theta[j], support)
            if flag:
                row_flags.append(flag)
        beta = np.maximum(beta, 0.0)
        nonzero = np.nonzero(beta > 0)[0]
        if config.use_projection:
            if nonzero.size:
                beta[nonzero] = simplex_project(beta[nonzero])
            else:
                row_flags.append("empty-support")
        elif nonzero.size == 0 and "empty-support" not in row_flags:
            row_flags.append("empty-support")
        matrix[j] = beta
        if row_flags:
            flags[j] = tuple(dict.fromkeys(row_flags))
    support_sizes = (matrix > 0).sum(axis=1)
    return LoadingEstimate(matrix=matrix, support_sizes=support_sizes,
                           config=config, row_flags=flags)
