"""Rank-based marginal standardization and the empirical tail pairwise
dependence matrix (TPDM).

Pseudo-observations are built column-wise from the rescaled empirical cdf,
``Y_ij = (n+1) / (n+1 - rank_ij)``, so each margin is mapped onto a standard
Pareto scale in (1, n+1].  The empirical TPDM averages the outer products of
the pseudo-observations, normalized by their squared radius, over the rows
whose radius strictly exceeds the (n-k)-th radius order statistic:

    Sigma_hat = (1/k) * sum_i (Y_i Y_i^T / R_i^2) * 1{R_i > R_(n-k:n)}.

The strict inequality is kept verbatim, so the number of selected rows can
fall below k when radii tie at the threshold; ``effective_count`` exposes it.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import InputError, ParameterError, StructuralError
from .norms import Norm


@dataclass(frozen=True)
class DataMatrix:
    """An n x d matrix of finite observations, one row per observation."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise InputError("data must be a 2-d array (rows = observations)")
        if v.shape[0] < 2:
            raise InputError("need at least 2 observations")
        if not np.all(np.isfinite(v)):
            raise InputError("data contains non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class PseudoObservations:
    """Pareto-scale pseudo-observations with the ranks they came from."""

    values: np.ndarray       # (n, d), entries in (1, n+1]
    rank_matrix: np.ndarray  # (n, d), each column a permutation of 1..n
    had_ties: bool = False

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Tpdm:
    """A tail pairwise dependence matrix together with how it was computed.

    ``k`` and ``effective_count`` are None for population-level (oracle)
    matrices that do not arise from thresholding a sample.
    """

    matrix: np.ndarray
    norm: Norm
    k: int | None = None
    effective_count: int | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise StructuralError("TPDM must be a square matrix")
        object.__setattr__(self, "matrix", m)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]


def _as_matrix(sigma) -> np.ndarray:
    """Accept a Tpdm or a plain square array."""
    if isinstance(sigma, Tpdm):
        return sigma.matrix
    m = np.asarray(sigma, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise StructuralError("expected a square matrix or a Tpdm")
    return m


def pseudo_pareto(data: DataMatrix) -> PseudoObservations:
    """Map each column onto the Pareto scale via its rescaled empirical cdf.

    Ties are broken by the ordinal rule (the earlier row index receives the
    smaller rank); a warning is emitted when any column contains ties.
    """
    if not isinstance(data, DataMatrix):
        data = DataMatrix(np.asarray(data, dtype=float))
    x = data.values
    n = data.n
    ranks = rankdata(x, method="ordinal", axis=0).astype(np.int64)
    had_ties = bool(any(np.unique(x[:, j]).size < n for j in range(data.d)))
    if had_ties:
        warnings.warn("ties detected; ranks use the ordinal (first-come) rule", stacklevel=2)
    values = (n + 1.0) / (n + 1.0 - ranks)
    return PseudoObservations(values=values, rank_matrix=ranks, had_ties=had_ties)


def empirical_tpdm(pseudo: PseudoObservations, k: int, norm: Norm = Norm.max()) -> Tpdm:
    """Empirical TPDM from pseudo-observations at threshold count ``k``."""
    n = pseudo.n
    if not (1 <= k < n):
        raise ParameterError(f"k must satisfy 1 <= k < n (got k={k}, n={n})")
    y = pseudo.values
    radii = norm.rowwise(y)
    threshold = np.sort(radii)[n - k - 1]  # (n-k)-th order statistic, 1-indexed
    mask = radii > threshold
    effective = int(mask.sum())
    u = y[mask] / radii[mask, None]
    sigma = (u.T @ u) / k
    sigma = 0.5 * (sigma + sigma.T)  # remove fp asymmetry from the matmul
    return Tpdm(matrix=sigma, norm=norm, k=int(k), effective_count=effective)


def empirical_chi(data: DataMatrix, k_prime: int) -> np.ndarray:
    """Matrix of empirical pairwise tail correlations.

    chi_hat(j, l) is the fraction, among the k' largest ranks, of rows where
    columns j and l exceed the rank threshold n - k' simultaneously.  The
    diagonal equals 1 by construction.
    """
    if not isinstance(data, DataMatrix):
        data = DataMatrix(np.asarray(data, dtype=float))
    n = data.n
    if not (1 <= k_prime < n):
        raise ParameterError(f"k_prime must satisfy 1 <= k' < n (got {k_prime}, n={n})")
    ranks = rankdata(data.values, method="ordinal", axis=0)
    exceed = (ranks > n - k_prime).astype(float)
    return (exceed.T @ exceed) / k_prime
