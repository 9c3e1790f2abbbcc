"""Joint tail-risk estimation: plug-in probabilities, model-implied tail
correlations, hyperparameter selection by R^2 against empirical tail
correlations, lower-tail transforms, the empirical benchmark, and basic
bootstrap confidence intervals.

The plug-in probability for a family of index subsets is

    p_hat = (K/k') * sum_i  max_J min_{j in J} (A_j . Z_i) q_j(x_j) / S_i

over the rows whose aggregated radius S_i exceeds its (n-k')-th order
statistic, where q_j is the per-coordinate semiparametric tail estimate.
The raw 1/k' atom masses are used throughout (no renormalization).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EstimationError, InputError, ParameterError, TailFactorsError
from .families import SubsetFamily, family_max_min, family_max_min_rows, family_min_max_rows  # noqa: F401 (re-export)
from .loading import LoadingEstimate, LspConfig, lambda_grid_default, lsp
from .marginal import GpdFit, fit_margin, tail_prob
from .norms import Norm
from .purevar import PureVarResult, kappa_grid_default, pure_var
from .spectral import AggregatedObservations, SpectralSample, aggregate, empirical_psi
from .tpdm import DataMatrix, empirical_chi, empirical_tpdm, pseudo_pareto

R2_ADEQUACY = 0.8


@dataclass(frozen=True)
class HyperConfig:
    """One grid point of the hyperparameter search."""

    kappa: float
    lam: float
    projection: bool


@dataclass(frozen=True)
class ConfigScore:
    """Search-table row: configuration, factor count, and fit quality."""

    kappa: float
    lam: float
    projection: bool
    n_factors: int
    r2: float


@dataclass(frozen=True)
class TailProbability:
    """A probability estimate, with the raw value when clipping occurred."""

    value: float
    raw: float
    clipped: bool


@dataclass(frozen=True)
class BootstrapCi:
    """Basic bootstrap confidence interval, clipped to [0, 1]."""

    point: float
    lower: float
    upper: float
    level: float
    replicates: int
    failures: int = 0

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper <= 1.0):
            raise EstimationError("confidence bounds must satisfy 0 <= lower <= upper <= 1")


@dataclass(frozen=True)
class FittedTailModel:
    """Everything the downstream tail-risk estimators need.

    ``psi`` carries the raw 1/k' atom masses via its total_mass field;
    ``data`` is retained for the empirical-cdf branch of the margins.
    """

    n_factors: int
    loading: LoadingEstimate
    psi: SpectralSample
    margins: tuple[GpdFit, ...]
    config: HyperConfig
    r2: float
    adequate: bool
    purevar: PureVarResult
    aggregated: AggregatedObservations
    data: DataMatrix
    k: int
    k_prime: int
    norm: Norm
    search_table: tuple[ConfigScore, ...] = field(default=())

    def __post_init__(self):
        if self.loading.n_factors != self.n_factors or self.psi.dimension != self.n_factors:
            raise EstimationError("loading, spectral sample and factor count disagree")
        if len(self.margins) != self.data.d:
            raise EstimationError("need one fitted margin per coordinate")

    def tail_probabilities(self, x) -> np.ndarray:
        """Per-coordinate semiparametric estimates q_j(x_j)."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.data.d,):
            raise InputError(f"x must have length {self.data.d}")
        return np.array([
            tail_prob(x[j], self.margins[j], self.data.values[:, j])
            for j in range(self.data.d)
        ])


def estimate_p(model: FittedTailModel, x, family: SubsetFamily) -> TailProbability:
    """Plug-in estimate of P(some subset in the family jointly exceeds x)."""
    if model.n_factors < 1:
        raise EstimationError("cannot estimate probabilities without factors")
    q = model.tail_probabilities(x)
    v = (model.psi.atoms @ model.loading.matrix.T) * q
    per_atom = family_max_min_rows(v, family)
    raw = float(model.n_factors * (model.psi.raw_weights @ per_atom))
    value = min(max(raw, 0.0), 1.0)
    return TailProbability(value=value, raw=raw, clipped=(value != raw))


def _weighted_min_outer(u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """sum_i w_i * min(u_ij, u_il) accumulated in bounded-memory chunks."""
    d = u.shape[1]
    out = np.zeros((d, d))
    chunk = max(1, int(2e7) // (d * d))
    for start in range(0, u.shape[0], chunk):
        block = u[start:start + chunk]
        mins = np.minimum(block[:, :, None], block[:, None, :])
        out += np.tensordot(w[start:start + chunk], mins, axes=(0, 0))
    return out


def model_chi(loading: LoadingEstimate | np.ndarray, agg: AggregatedObservations,
              k_prime: int, n_factors: int | None = None) -> np.ndarray:
    """Model-implied pairwise tail correlations from aggregated observations.

    chi_tilde(j, l) = min{1, (K/k') * sum_i (A_j.Z_i/S_i) ^ (A_l.Z_i/S_i)}
    over the rows with radius above the (n-k')-th radius order statistic.
    """
    a = loading.matrix if isinstance(loading, LoadingEstimate) else np.asarray(loading, dtype=float)
    k_factors = a.shape[1] if n_factors is None else int(n_factors)
    mask = agg.tail_mask(k_prime)
    z = agg.z_values[mask] / agg.radii[mask, None]
    u = z @ a.T
    weights = np.full(u.shape[0], 1.0 / k_prime)
    chi = k_factors * _weighted_min_outer(u, weights)
    return np.minimum(chi, 1.0)


def r_squared(chi_model: np.ndarray, chi_emp: np.ndarray) -> float:
    """Coefficient of determination of the model-implied against the empirical
    tail correlations over unordered off-diagonal pairs.

    The empirical values are the response; may be negative.  Returns NaN when
    the empirical values have zero variance (undefined).
    """
    cm = np.asarray(chi_model, dtype=float)
    ce = np.asarray(chi_emp, dtype=float)
    if cm.shape != ce.shape or cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise InputError("chi matrices must be square and of equal shape")
    d = cm.shape[0]
    if d < 2:
        raise InputError("need at least two coordinates")
    iu = np.triu_indices(d, k=1)
    resid = ce[iu] - cm[iu]
    total = ce[iu] - ce[iu].mean()
    ss_tot = float(total @ total)
    if ss_tot == 0.0:
        return float("nan")
    return 1.0 - float(resid @ resid) / ss_tot


def reciprocal(values):
    """Entrywise 1/x map used for lower-tail analyses (data and thresholds)."""
    v = np.asarray(values, dtype=float)
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise InputError("reciprocal transform requires strictly positive finite entries")
    return 1.0 / v


def lower_tail_transform(data: DataMatrix) -> DataMatrix:
    """Map lower-tail questions about W onto upper-tail questions about 1/W."""
    if not isinstance(data, DataMatrix):
        data = DataMatrix(np.asarray(data, dtype=float))
    return DataMatrix(reciprocal(data.values))


def empirical_p(data: DataMatrix, x, family: SubsetFamily) -> float:
    """Empirical benchmark: the fraction of rows exceeding x on some family set."""
    if not isinstance(data, DataMatrix):
        data = DataMatrix(np.asarray(data, dtype=float))
    x = np.asarray(x, dtype=float)
    if x.shape != (data.d,):
        raise InputError(f"x must have length {data.d}")
    exceed = data.values > x[None, :]
    if family.sets is not None:
        hit = np.zeros(data.n, dtype=bool)
        for s in family.sets:
            hit |= exceed[:, sorted(s)].all(axis=1)
    else:
        hit = exceed @ family.weights >= family.alpha
    return float(hit.sum()) / data.n


def select_hyperparameters(
    data: DataMatrix,
    k: int | None = None,
    k_prime: int | None = None,
    kappa_grid=None,
    lambda_grid=None,
    norm: Norm = Norm.max(),
    projection_options: tuple[bool, ...] = (False, True),
    margin_k=None,
    lsp_defaults: LspConfig = LspConfig(),
) -> FittedTailModel:
    """Grid search over (kappa, lambda, projection) maximizing R^2.

    Every configuration runs the full pipeline (pure-variable scan, loading
    estimation, aggregation, spectral estimate, model-implied tail
    correlations) and is scored against the empirical tail correlations.
    Ties keep the earliest grid point (kappa outer, lambda middle, projection
    False before True); configurations with no pure variables or undefined
    R^2 are recorded but skipped.  Margins are fitted once with
    ``margin_k`` (default k) excesses per coordinate.
    """
    if not isinstance(data, DataMatrix):
        data = DataMatrix(np.asarray(data, dtype=float))
    n = data.n
    if k is None:
        k = max(10, int(0.05 * n))
    if k_prime is None:
        k_prime = k
    if margin_k is None:
        margin_k = k
    kappas = kappa_grid_default(user_grid=kappa_grid) if kappa_grid is not None else kappa_grid_default()
    lams = tuple(float(v) for v in lambda_grid) if lambda_grid is not None else lambda_grid_default()
    if len(lams) == 0:
        raise ParameterError("lambda grid must be nonempty")

    pseudo = pseudo_pareto(data)
    sigma = empirical_tpdm(pseudo, k, norm)
    chi_emp = empirical_chi(data, k_prime)

    best: tuple[float, HyperConfig] | None = None
    table: list[ConfigScore] = []
    for kappa in kappas:
        pv = pure_var(sigma, kappa)
        if pv.n_factors == 0:
            for lam in lams:
                for proj in projection_options:
                    table.append(ConfigScore(kappa, lam, proj, 0, float("nan")))
            continue
        agg = aggregate(pseudo, pv)
        for lam in lams:
            for proj in projection_options:
                cfg = LspConfig(lam=lam, use_projection=proj,
                                fista_max_iter=lsp_defaults.fista_max_iter,
                                fista_tol=lsp_defaults.fista_tol,
                                post_lasso=lsp_defaults.post_lasso)
                est = lsp(sigma, pv, cfg)
                chi_mod = model_chi(est, agg, k_prime, pv.n_factors)
                r2 = r_squared(chi_mod, chi_emp)
                table.append(ConfigScore(kappa, lam, proj, pv.n_factors, r2))
                if np.isnan(r2):
                    continue
                if best is None or r2 > best[0]:
                    best = (r2, HyperConfig(kappa, lam, proj))
    if best is None:
        raise EstimationError("no hyperparameter configuration produced a valid fit")

    r2_best, config = best
    pv = pure_var(sigma, config.kappa)
    agg = aggregate(pseudo, pv)
    est = lsp(sigma, pv, LspConfig(lam=config.lam, use_projection=config.projection,
                                   fista_max_iter=lsp_defaults.fista_max_iter,
                                   fista_tol=lsp_defaults.fista_tol,
                                   post_lasso=lsp_defaults.post_lasso))
    psi = empirical_psi(agg, k_prime)
    margin_ks = np.broadcast_to(np.asarray(margin_k, dtype=int), (data.d,))
    margins = tuple(fit_margin(data.values[:, j], int(margin_ks[j])) for j in range(data.d))
    return FittedTailModel(
        n_factors=pv.n_factors, loading=est, psi=psi, margins=margins,
        config=config, r2=r2_best, adequate=bool(r2_best > R2_ADEQUACY),
        purevar=pv, aggregated=agg, data=data, k=int(k), k_prime=int(k_prime),
        norm=norm, search_table=tuple(table),
    )


def _order_statistic_quantile(sorted_values: np.ndarray, q: float) -> float:
    """Empirical quantile by the ceil(q*B) order-statistic rule."""
    b = sorted_values.size
    idx = int(np.ceil(q * b)) - 1
    return float(sorted_values[min(max(idx, 0), b - 1)])


def bootstrap_ci(
    data: DataMatrix,
    estimator,
    b: int = 999,
    beta: float = 0.05,
    seed: int = 0,
    x=None,
    family: SubsetFamily | None = None,
    fit_kwargs: dict | None = None,
) -> BootstrapCi:
    """Basic bootstrap confidence interval for a tail-probability estimator.

    ``estimator`` is "empirical", "model", or a callable DataMatrix -> float.
    Rows are resampled with replacement; replicate r uses the generator seeded
    by the pair (seed, r), so serial and parallel execution agree.  The
    "model" pipeline re-runs marginal fitting and hyperparameter selection on
    every replicate (thresholds k, k' stay fixed).  Replicates whose estimator
    fails are skipped; at least 90% must succeed.
    """
    if not isinstance(data, DataMatrix):
        data = DataMatrix(np.asarray(data, dtype=float))
    if b < 1:
        raise ParameterError("need at least one bootstrap replicate")
    if not (0.0 < beta < 1.0):
        raise ParameterError("beta must lie in (0, 1)")

    if callable(estimator):
        run = estimator
    elif estimator == "empirical":
        if x is None or family is None:
            raise ParameterError("empirical estimator needs x and family")
        run = lambda dm: empirical_p(dm, x, family)  # noqa: E731
    elif estimator == "model":
        if x is None or family is None:
            raise ParameterError("model estimator needs x and family")
        kwargs = dict(fit_kwargs or {})

        def run(dm):
            fitted = select_hyperparameters(dm, **kwargs)
            return estimate_p(fitted, x, family).value
    else:
        raise ParameterError(f"unknown estimator {estimator!r}")

    point = float(run(data))
    n = data.n
    values = []
    failures = 0
    for rep in range(b):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), rep]))
        idx = rng.integers(0, n, size=n)
        try:
            values.append(float(run(DataMatrix(data.values[idx]))))
        except TailFactorsError:
            failures += 1
    if len(values) < 0.9 * b:
        raise EstimationError(f"bootstrap failed in {failures} of {b} replicates")

    srt = np.sort(np.asarray(values))
    q_lo = _order_statistic_quantile(srt, beta / 2.0)
    q_hi = _order_statistic_quantile(srt, 1.0 - beta / 2.0)
    lower = min(max(2.0 * point - q_hi, 0.0), 1.0)
    upper = min(max(2.0 * point - q_lo, lower), 1.0)
    return BootstrapCi(point=point, lower=lower, upper=upper, level=1.0 - beta,
                       replicates=b, failures=failures)
