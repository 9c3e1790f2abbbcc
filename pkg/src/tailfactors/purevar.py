"""Estimation of the factor count and the pure-variable partition from a TPDM.

A coordinate j is declared pure when every near-maximizer of its TPDM row
attains (within slack 2*kappa) the same row maximum as j itself.  Near-
maximizer sets of pure coordinates are collected into a partition, merging
sets that overlap.  On an exact matrix Sigma = A C A^T with pure loading A and
diagonally dominant C, the partition equals the pure-variable groups of A
whenever kappa is below a quarter of the smallest positive row gap.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, StructuralError
from .tpdm import Tpdm, _as_matrix

KAPPA_GRID_DEFAULT = tuple(np.round(np.linspace(0.002, 0.008, 13), 6))


@dataclass(frozen=True)
class PureVarResult:
    """Estimated factor count, pure index set, and its partition.

    ``partition`` lists the per-factor pure index sets in discovery order;
    their union is ``pure_indices`` and their number is ``n_factors``.
    Indices are 0-based throughout.
    """

    n_factors: int
    pure_indices: frozenset[int]
    partition: tuple[frozenset[int], ...]
    kappa: float

    def __post_init__(self):
        union: set[int] = set()
        for s in self.partition:
            if not s:
                raise StructuralError("partition sets must be nonempty")
            if union & s:
                raise StructuralError("partition sets must be disjoint")
            union |= s
        if union != set(self.pure_indices) or len(self.partition) != self.n_factors:
            raise StructuralError("inconsistent pure-variable result")

    def sorted_partition(self) -> list[list[int]]:
        return [sorted(s) for s in self.partition]

    def to_json(self) -> str:
        return json.dumps(
            {"K_hat": self.n_factors,
             "partition": self.sorted_partition(),
             "kappa": self.kappa},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "PureVarResult":
        obj = json.loads(text)
        partition = tuple(frozenset(int(j) for j in s) for s in obj["partition"])
        pure = frozenset().union(*partition) if partition else frozenset()
        return cls(n_factors=int(obj["K_hat"]), pure_indices=pure,
                   partition=partition, kappa=float(obj["kappa"]))


def pure_var(sigma, kappa: float) -> PureVarResult:
    """Run the pure-variable scan on a TPDM with slack parameter ``kappa``.

    ``sigma`` may be a Tpdm or a plain symmetric square array.  An empty
    result (zero factors) is returned, not raised, when no coordinate passes
    the purity check; grid searches must survive bad kappa values.
    """
    s = _as_matrix(sigma)
    if not np.allclose(s, s.T, atol=1e-8):
        raise StructuralError("TPDM must be symmetric")
    if not (np.isfinite(kappa) and kappa > 0):
        raise ParameterError("kappa must be a positive real")
    d = s.shape[0]
    row_max = s.max(axis=1)
    slack = 2.0 * kappa

    partition: list[set[int]] = []
    for j in range(d):
        near = np.nonzero(row_max[j] - s[j] <= slack)[0]
        if (row_max[near] - s[j, near]).max() > slack:
            continue  # j is not pure
        near_set = set(int(v) for v in near)
        overlap_idx = [i for i, g in enumerate(partition) if g & near_set]
        if not overlap_idx:
            partition.append(near_set)
        else:
            # Merge every overlapping group with the new set; with noisy input
            # several groups can intersect and only a full merge is
            # order-robust under coordinate relabeling.
            merged = set(near_set)
            for i in overlap_idx:
                merged |= partition[i]
            partition = [g for i, g in enumerate(partition) if i not in overlap_idx]
            partition.append(merged)

    frozen = tuple(frozenset(g) for g in partition)
    pure = frozenset().union(*frozen) if frozen else frozenset()
    return PureVarResult(n_factors=len(frozen), pure_indices=pure,
                         partition=frozen, kappa=float(kappa))


def kappa_grid_default(sigma_hat: Tpdm | None = None, user_grid=None) -> tuple[float, ...]:
    """Candidate kappa values: the 13-point default grid 0.002..0.008 (step
    0.0005), or a user-supplied grid passed through in its given order."""
    if user_grid is not None:
        grid = tuple(float(v) for v in user_grid)
        if len(grid) == 0:
            raise ParameterError("kappa grid must be nonempty")
        if any(not (np.isfinite(v) and v > 0) for v in grid):
            raise ParameterError("kappa values must be positive reals")
        return grid
    return KAPPA_GRID_DEFAULT
