"""Aggregated latent pseudo-observations and the nonparametric estimator of
the latent spectral measure.

Averaging the Pareto-scale pseudo-observations over each pure-variable group
yields a proxy for the latent factor vector; normalizing the rows with large
1-norm radius by that radius gives an empirical measure on the simplex whose
raw atom masses are 1/k' each (total mass can fall below 1 when radii tie at
the threshold; a normalized probability view is exposed alongside).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, StructuralError
from .norms import Norm
from .purevar import PureVarResult
from .tpdm import PseudoObservations


@dataclass(frozen=True)
class AggregatedObservations:
    """Per-factor averages of pseudo-observations and their 1-norm radii."""

    z_values: np.ndarray  # (n, K)
    radii: np.ndarray     # (n,)

    def __post_init__(self):
        z = np.asarray(self.z_values, dtype=float)
        r = np.asarray(self.radii, dtype=float)
        if z.ndim != 2 or r.shape != (z.shape[0],):
            raise StructuralError("z_values must be (n, K) with radii of length n")
        object.__setattr__(self, "z_values", z)
        object.__setattr__(self, "radii", r)

    @property
    def n(self) -> int:
        return self.z_values.shape[0]

    @property
    def n_factors(self) -> int:
        return self.z_values.shape[1]

    def radius_threshold(self, k_prime: int) -> float:
        """(n - k')-th order statistic of the radii (1-indexed)."""
        n = self.n
        if not (1 <= k_prime < n):
            raise ParameterError(f"k_prime must satisfy 1 <= k' < n (got {k_prime}, n={n})")
        return float(np.sort(self.radii)[n - k_prime - 1])

    def tail_mask(self, k_prime: int) -> np.ndarray:
        return self.radii > self.radius_threshold(k_prime)


@dataclass(frozen=True)
class SpectralSample:
    """Weighted atoms on the unit sphere of ``norm`` (1-norm by default).

    ``weights`` is a probability vector; ``total_mass`` scales it back to the
    raw estimator masses (atoms carry raw mass 1/k' each in the empirical
    variant, so total_mass = retained/k' <= 1).  ``raw_weights`` recovers them.
    """

    atoms: np.ndarray
    weights: np.ndarray
    k_prime: int | None = None
    norm: Norm = field(default_factory=Norm.one)
    total_mass: float = 1.0

    def __post_init__(self):
        z = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if z.shape[0] != w.shape[0] or z.size == 0:
            raise StructuralError("atoms and weights must align and be nonempty")
        if np.any(z < -1e-9):
            raise StructuralError("atoms must be nonnegative")
        if np.any(np.abs(self.norm.rowwise(z) - 1.0) > 1e-9):
            raise StructuralError("atoms must lie on the unit sphere of the norm")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise StructuralError("weights must be positive and sum to 1")
        object.__setattr__(self, "atoms", z)
        object.__setattr__(self, "weights", w)

    @property
    def dimension(self) -> int:
        return self.atoms.shape[1]

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[0]

    @property
    def raw_weights(self) -> np.ndarray:
        return self.weights * self.total_mass

    def marginal_means(self) -> np.ndarray:
        """Probability-weighted mean of the atom coordinates."""
        return self.weights @ self.atoms

    def second_moment(self) -> np.ndarray:
        return (self.atoms.T * self.weights) @ self.atoms


def aggregate(pseudo: PseudoObservations, partition: PureVarResult) -> AggregatedObservations:
    """Average the pseudo-observation columns over each pure-variable group."""
    if partition.n_factors < 1:
        raise StructuralError("partition must contain at least one set")
    groups = partition.sorted_partition()
    d = pseudo.d
    for g in groups:
        if max(g) >= d:
            raise StructuralError("partition references columns beyond the data")
    y = pseudo.values
    z = np.column_stack([y[:, g].mean(axis=1) for g in groups])
    return AggregatedObservations(z_values=z, radii=z.sum(axis=1))


def empirical_psi(agg: AggregatedObservations, k_prime: int) -> SpectralSample:
    """Empirical latent spectral measure from the radially largest rows.

    Retains the rows whose radius strictly exceeds the (n-k')-th radius order
    statistic and places mass 1/k' on each normalized row.
    """
    mask = agg.tail_mask(k_prime)
    retained = int(mask.sum())
    if retained == 0:
        raise ParameterError("no radii exceed the threshold (all tied); increase k'")
    atoms = agg.z_values[mask] / agg.radii[mask, None]
    weights = np.full(retained, 1.0 / retained)
    return SpectralSample(atoms=atoms, weights=weights, k_prime=int(k_prime),
                          norm=Norm.one(), total_mass=retained / k_prime)
