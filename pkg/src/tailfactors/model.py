"""Generative latent linear factor model for tail dependence.

The observable vector is ``Y = A Z`` with ``Z = K * R * Lambda``, where the
loading matrix ``A`` is d x K with entries in [0, 1], row sums 1 and full
column rank, ``R`` is standard Pareto, and ``Lambda`` is a random point on
the 1-norm unit simplex with marginal means 1/K, independent of ``R``.

This module houses the model parameters, parameter validation, simulation,
and closed-form / Monte-Carlo oracles for the stable tail dependence function
(STDF), joint tail functionals, the TPDM, and the pushforward spectral
dependence measure.  All oracles are exact for atom-based spectral laws and
seeded Monte-Carlo averages otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConfigurationError, InputError, ParameterError, StructuralError
from .families import SubsetFamily, family_max_min_rows, family_min_max_rows
from .norms import Norm
from .spectral import SpectralSample
from .tpdm import Tpdm

ROW_SUM_TOL = 1e-9
PURE_TOL = 1e-9
RANK_REL_TOL = 1e-10


def delta_gap(c: np.ndarray) -> float:
    """Diagonal-dominance gap: min over a != b of min(C_aa, C_bb) - |C_ab|.

    Returns +inf for 1 x 1 matrices (no off-diagonal pairs).
    """
    c = np.asarray(c, dtype=float)
    k = c.shape[0]
    if k == 1:
        return float("inf")
    diag = np.diag(c)
    pair_min = np.minimum(diag[:, None], diag[None, :])
    gaps = pair_min - np.abs(c)
    return float(gaps[~np.eye(k, dtype=bool)].min())


def is_diagonally_dominant(c: np.ndarray, eig_tol: float = 1e-12) -> bool:
    """Membership in the identifiable set: positive gap and positive definite."""
    c = np.asarray(c, dtype=float)
    if delta_gap(c) <= 0:
        return False
    return bool(np.linalg.eigvalsh(0.5 * (c + c.T)).min() > eig_tol)


# ---------------------------------------------------------------------------
# Loading matrix
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LoadingMatrix:
    """d x K loading matrix with entries in [0, 1] and unit row sums.

    ``require_pure`` asserts that every factor owns at least one pure row
    (a row equal to a unit vector); validation reports a violation when the
    flag is set but the property fails.
    """

    entries: np.ndarray
    require_pure: bool = True

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.size == 0:
            raise StructuralError("loading matrix must be a nonempty 2-d array")
        if not np.all(np.isfinite(a)):
            raise InputError("loading matrix contains non-finite entries")
        object.__setattr__(self, "entries", a)

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @property
    def n_factors(self) -> int:
        return self.entries.shape[1]

    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def numerical_rank(self, rel_tol: float = RANK_REL_TOL) -> int:
        s = np.linalg.svd(self.entries, compute_uv=False)
        if s.size == 0 or s[0] == 0.0:
            return 0
        return int((s >= rel_tol * s[0]).sum())

    def pure_rows(self, tol: float = PURE_TOL) -> dict[int, int]:
        """Map row index -> factor index for rows equal to a unit vector."""
        out: dict[int, int] = {}
        for j in range(self.d):
            row = self.entries[j]
            a = int(np.argmax(row))
            if row[a] >= 1.0 - tol and (np.abs(np.delete(row, a)) <= tol).all():
                out[j] = a
        return out

    def pure_partition(self, tol: float = PURE_TOL) -> list[set[int]]:
        """Pure-row index sets, one per factor (possibly empty sets)."""
        groups: list[set[int]] = [set() for _ in range(self.n_factors)]
        for j, a in self.pure_rows(tol).items():
            groups[a].add(j)
        return groups

    def violations(self) -> list[str]:
        out = []
        a = self.entries
        if np.any(a < -PURE_TOL) or np.any(a > 1.0 + PURE_TOL):
            out.append("entries outside [0, 1]")
        if np.any(np.abs(self.row_sums() - 1.0) > ROW_SUM_TOL):
            out.append("row sums differ from 1")
        if self.numerical_rank() < self.n_factors:
            out.append("loading matrix not of full column rank")
        if self.require_pure and any(len(g) == 0 for g in self.pure_partition()):
            out.append("some factor has no pure row")
        return out


# ---------------------------------------------------------------------------
# Spectral laws on the 1-norm simplex
# ---------------------------------------------------------------------------

class SpectralSpec:
    """Law of the latent simplex point.  Subclasses provide atoms or sampling."""

    @property
    def dimension(self) -> int:
        raise NotImplementedError

    def atoms(self) -> tuple[np.ndarray, np.ndarray] | None:
        """(atoms, weights) for purely atomic laws, else None."""
        return None

    @property
    def is_atomic(self) -> bool:
        return self.atoms() is not None

    def sample(self, m: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def expect(self, fn, mc_draws: int | None = None, seed=None):
        """E[fn(Z)] for a batched ``fn`` mapping (m, K) arrays to (m, ...) arrays.

        Exact weighted sum over atoms when the law is atomic; otherwise a
        seeded Monte-Carlo average over ``mc_draws`` draws.
        """
        at = self.atoms()
        if at is not None:
            z, w = at
            return np.tensordot(w, np.asarray(fn(z), dtype=float), axes=(0, 0))
        if mc_draws is None:
            raise ConfigurationError("continuous spectral law requires mc_draws")
        z = self.sample(int(mc_draws), np.random.default_rng(seed))
        return np.asarray(fn(z), dtype=float).mean(axis=0)

    def mean_vector(self, mc_draws: int | None = None, seed=None) -> np.ndarray:
        return self.expect(lambda z: z, mc_draws, seed)

    def second_moment(self, mc_draws: int | None = None, seed=None) -> np.ndarray:
        return self.expect(lambda z: z[:, :, None] * z[:, None, :], mc_draws, seed)

    def has_exact_moments(self) -> bool:
        return self.is_atomic

    def violations(self) -> list[str]:
        return []


@dataclass(frozen=True)
class DiscreteUnitAtoms(SpectralSpec):
    """Equal mass 1/K at each unit vector: asymptotically independent factors."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError("factor count must be >= 1")

    @property
    def dimension(self) -> int:
        return self.k

    def atoms(self):
        return np.eye(self.k), np.full(self.k, 1.0 / self.k)

    def sample(self, m, rng):
        idx = rng.integers(0, self.k, size=m)
        return np.eye(self.k)[idx]


@dataclass(frozen=True)
class AtomList(SpectralSpec):
    """Arbitrary finite list of simplex atoms with probability weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        z = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if z.shape[0] != w.shape[0] or z.size == 0:
            raise StructuralError("atoms and weights must align and be nonempty")
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(w))):
            raise InputError("atoms/weights contain non-finite entries")
        object.__setattr__(self, "points", z)
        object.__setattr__(self, "weights", w)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def atoms(self):
        return self.points, self.weights

    def sample(self, m, rng):
        idx = rng.choice(self.points.shape[0], size=m, p=self.weights)
        return self.points[idx]

    def violations(self) -> list[str]:
        out = []
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-9:
            out.append("atom weights are not a probability vector")
        if np.any(self.points < -1e-9):
            out.append("atoms have negative coordinates")
        if np.any(np.abs(self.points.sum(axis=1) - 1.0) > 1e-9):
            out.append("atoms do not lie on the 1-norm simplex")
        return out


@dataclass(frozen=True)
class SymmetricDirichlet(SpectralSpec):
    """Symmetric Dirichlet law: the canonical continuous simplex family.

    The marginal means are 1/K automatically and the second-moment matrix is
    diagonally dominant for every concentration, so any such law is a valid
    latent spectral measure.
    """

    k: int
    concentration: float

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError("factor count must be >= 1")
        if not (np.isfinite(self.concentration) and self.concentration > 0):
            raise ParameterError("concentration must be a positive real")

    @property
    def dimension(self) -> int:
        return self.k

    def sample(self, m, rng):
        return rng.dirichlet(np.full(self.k, self.concentration), size=m)

    def mean_vector(self, mc_draws=None, seed=None):
        return np.full(self.k, 1.0 / self.k)

    def second_moment(self, mc_draws=None, seed=None):
        a, k = self.concentration, self.k
        denom = k * a * (k * a + 1.0)
        return (a * a * np.ones((k, k)) + a * np.eye(k)) / denom

    def has_exact_moments(self) -> bool:
        return True


@dataclass(frozen=True)
class Mixture(SpectralSpec):
    """Finite mixture of spectral laws of a common dimension."""

    components: tuple[SpectralSpec, ...]
    probabilities: np.ndarray

    def __post_init__(self):
        comps = tuple(self.components)
        p = np.asarray(self.probabilities, dtype=float).ravel()
        if len(comps) == 0 or p.shape[0] != len(comps):
            raise StructuralError("mixture needs components aligned with probabilities")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ParameterError("mixture probabilities must form a probability vector")
        dims = {c.dimension for c in comps}
        if len(dims) != 1:
            raise StructuralError("mixture components must share one dimension")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "probabilities", p)

    @property
    def dimension(self) -> int:
        return self.components[0].dimension

    def atoms(self):
        parts = [c.atoms() for c in self.components]
        if any(part is None for part in parts):
            return None
        zs = np.vstack([z for z, _ in parts])
        ws = np.concatenate([w * p for (_, w), p in zip(parts, self.probabilities)])
        return zs, ws

    def sample(self, m, rng):
        which = rng.choice(len(self.components), size=m, p=self.probabilities)
        out = np.empty((m, self.dimension))
        for c, comp in enumerate(self.components):
            idx = np.nonzero(which == c)[0]
            if idx.size:
                out[idx] = comp.sample(idx.size, rng)
        return out

    def mean_vector(self, mc_draws=None, seed=None):
        means = [c.mean_vector(mc_draws, seed) for c in self.components]
        return np.tensordot(self.probabilities, np.asarray(means), axes=(0, 0))

    def second_moment(self, mc_draws=None, seed=None):
        moms = [c.second_moment(mc_draws, seed) for c in self.components]
        return np.tensordot(self.probabilities, np.asarray(moms), axes=(0, 0))

    def has_exact_moments(self) -> bool:
        return all(c.has_exact_moments() for c in self.components)

    def violations(self) -> list[str]:
        out = []
        for c in self.components:
            out.extend(c.violations())
        return out


# ---------------------------------------------------------------------------
# Factor model, validation, simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FactorModel:
    """Ground-truth parameter triple: loading matrix plus latent spectral law."""

    loading: LoadingMatrix
    spectral: SpectralSpec

    def __post_init__(self):
        if self.loading.n_factors != self.spectral.dimension:
            raise StructuralError(
                f"loading has {self.loading.n_factors} factors but the spectral "
                f"law lives in dimension {self.spectral.dimension}"
            )

    @property
    def d(self) -> int:
        return self.loading.d

    @property
    def n_factors(self) -> int:
        return self.loading.n_factors


@dataclass(frozen=True)
class ValidationReport:
    """Violated invariants (empty means valid) plus the max-norm recovery check.

    ``max_norm_condition`` states whether the second moment of the spectral
    law weighted by 1/max-coordinate is diagonally dominant, which guarantees
    that recovery may use the maximum norm; None when it was not evaluated
    (continuous law without mc_draws).
    """

    violations: tuple[str, ...]
    max_norm_condition: bool | None

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class SyntheticSample:
    """Rows simulated i.i.d. from a factor model, tagged with seed and model."""

    data: np.ndarray
    seed: int
    model: FactorModel

    @property
    def n(self) -> int:
        return self.data.shape[0]


def validate_model(model: FactorModel, mc_draws: int | None = None, seed=None) -> ValidationReport:
    """Check every model invariant and report the violated ones.

    Moment-based checks are exact for atomic laws and laws with closed-form
    moments; otherwise they use a seeded Monte-Carlo sample of ``mc_draws``
    points with a 4-standard-error tolerance.
    """
    violations = list(model.loading.violations())
    violations.extend(model.spectral.violations())
    k = model.n_factors
    if k > model.d:
        violations.append("factor count exceeds the observed dimension")

    exact = model.spectral.has_exact_moments()
    mc_ok = mc_draws is not None
    if exact or mc_ok:
        mean = model.spectral.mean_vector(mc_draws, seed)
        if exact:
            tol = np.full(k, 1e-9)
        else:
            z = model.spectral.sample(int(mc_draws), np.random.default_rng(seed))
            tol = np.maximum(4.0 * z.std(axis=0) / np.sqrt(z.shape[0]), 1e-9)
        if np.any(np.abs(mean - 1.0 / k) > tol):
            violations.append("marginal means differ from 1/K")
        sigma_psi = model.spectral.second_moment(mc_draws, seed)
        if not is_diagonally_dominant(sigma_psi):
            violations.append("diagonal dominance fails for the spectral second moment")
    else:
        violations.append("moment checks skipped: continuous law without mc_draws")

    max_norm_condition: bool | None = None
    try:
        m_inf = model.spectral.expect(
            lambda z: z[:, :, None] * z[:, None, :] / z.max(axis=1)[:, None, None],
            mc_draws, seed,
        )
        max_norm_condition = is_diagonally_dominant(m_inf)
    except ConfigurationError:
        pass
    return ValidationReport(tuple(violations), max_norm_condition)


def simulate(model: FactorModel, n: int, seed: int) -> SyntheticSample:
    """Draw n i.i.d. rows Y = A (K R Lambda) with R standard Pareto.

    Margins follow the standard Pareto law exactly above level K (and the
    whole pipeline downstream is rank-based, so only that tail matters).
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    rng = np.random.default_rng(seed)
    r = 1.0 / (1.0 - rng.random(n))
    lam = model.spectral.sample(n, rng)
    z = model.n_factors * r[:, None] * lam
    data = z @ model.loading.entries.T
    return SyntheticSample(data=data, seed=int(seed), model=model)


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------

def _check_thresholds(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (d,):
        raise StructuralError(f"x must have length {d}")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise InputError("x must be nonnegative and finite")
    return x


def stdf_oracle(model: FactorModel, x, mc_draws: int | None = None, seed=None) -> float:
    """Stable tail dependence function L(x) = K * E[max_j x_j (A Z)_j]."""
    x = _check_thresholds(x, model.d)
    a = model.loading.entries
    val = model.spectral.expect(lambda z: ((z @ a.T) * x).max(axis=1), mc_draws, seed)
    return float(model.n_factors * val)


def tail_functional_oracle(
    model: FactorModel,
    family: SubsetFamily,
    x,
    mode: str = "union-of-intersections",
    mc_draws: int | None = None,
    seed=None,
) -> float:
    """Joint tail functional over a family of index subsets.

    mode "union-of-intersections" computes K * E[max_J min_{j in J} x_j (A Z)_j]
    (the tail probability of 'some subset jointly exceeds'); mode
    "intersection-of-unions" swaps max and min.  With a single two-element
    subset and x = 1 this is the pairwise tail correlation.
    """
    x = _check_thresholds(x, model.d)
    a = model.loading.entries
    if mode == "union-of-intersections":
        reducer = family_max_min_rows
    elif mode == "intersection-of-unions":
        reducer = family_min_max_rows
    else:
        raise ParameterError(f"unknown mode {mode!r}")
    val = model.spectral.expect(lambda z: reducer((z @ a.T) * x, family), mc_draws, seed)
    return float(model.n_factors * val)


def tail_correlation_oracle(model: FactorModel, j: int, ell: int,
                            mc_draws: int | None = None, seed=None) -> float:
    """Pairwise tail correlation chi(j, ell) in [0, 1]."""
    x = np.zeros(model.d)
    x[j] = x[ell] = 1.0
    fam = SubsetFamily.explicit([{j, ell}])
    return tail_functional_oracle(model, fam, x, "union-of-intersections", mc_draws, seed)


def _atoms_or_mc(spec: SpectralSpec, mc_draws, seed):
    at = spec.atoms()
    if at is not None:
        return at
    if mc_draws is None:
        raise ConfigurationError("continuous spectral law requires mc_draws")
    z = spec.sample(int(mc_draws), np.random.default_rng(seed))
    return z, np.full(z.shape[0], 1.0 / z.shape[0])


def tpdm_oracle(model: FactorModel, norm: Norm = Norm.max(),
                mc_draws: int | None = None, seed=None) -> tuple[Tpdm, np.ndarray]:
    """Population TPDM Sigma = A C A^T and the latent matrix C.

    C averages Z Z^T / ||A Z|| over the spectral law, normalized by the mean
    of ||A Z||.  Exact for atom-based laws; the Monte-Carlo branch uses one
    common set of draws for numerator and normalizer.
    """
    a = model.loading.entries
    z, w = _atoms_or_mc(model.spectral, mc_draws, seed)
    an = norm.rowwise(z @ a.T)
    c_norm = float(w @ an)
    c = (z.T * (w / an)) @ z / c_norm
    c = 0.5 * (c + c.T)
    sigma = a @ c @ a.T
    sigma = 0.5 * (sigma + sigma.T)
    return Tpdm(matrix=sigma, norm=norm), c


def sample_spectral_dependence(model: FactorModel, norm: Norm, m: int, seed=None) -> SpectralSample:
    """Weighted sample from the spectral dependence measure of the observable.

    Draws Z from the latent law, importance-weights by ||A Z|| and maps through
    z -> A z / ||A z||; duplicate atoms are merged.  The weighted second moment
    converges to the TPDM under the same norm.
    """
    if m < 1:
        raise ParameterError("m must be >= 1")
    a = model.loading.entries
    z = model.spectral.sample(int(m), np.random.default_rng(seed))
    az = z @ a.T
    an = norm.rowwise(az)
    keep = an > 0  # a zero image cannot be placed on the sphere
    az, an = az[keep], an[keep]
    if an.size == 0:
        raise StructuralError("all sampled points map to zero under the loading matrix")
    weights = an / an.sum()
    points = az / an[:, None]
    uniq, inverse = np.unique(points, axis=0, return_inverse=True)
    merged = np.zeros(uniq.shape[0])
    np.add.at(merged, inverse, weights)
    return SpectralSample(atoms=uniq, weights=merged, k_prime=None, norm=norm)


def align_loading(estimate, truth) -> tuple[tuple[int, ...], float]:
    """Best column permutation of ``estimate`` against ``truth``.

    Returns (perm, err) where ``estimate[:, perm]`` matches the column order of
    ``truth`` and ``err`` is the max-abs entry difference after alignment.
    Exhaustive search for up to 8 columns, Hungarian assignment on the
    pairwise max-abs column distance matrix beyond that.
    """
    est = estimate.entries if hasattr(estimate, "entries") else np.asarray(estimate, dtype=float)
    tru = truth.entries if hasattr(truth, "entries") else np.asarray(truth, dtype=float)
    if est.shape != tru.shape:
        raise StructuralError(f"shape mismatch: {est.shape} vs {tru.shape}")
    k = est.shape[1]
    if k <= 8:
        best_perm, best_err = None, np.inf
        for perm in permutations(range(k)):
            err = float(np.abs(est[:, perm] - tru).max())
            if err < best_err:
                best_perm, best_err = perm, err
        return best_perm, best_err
    cost = np.abs(est[:, :, None] - tru[:, None, :]).max(axis=0)  # cost[a, b]
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(k, dtype=int)
    perm[cols] = rows
    err = float(np.abs(est[:, perm] - tru).max())
    return tuple(int(p) for p in perm), err
