"""Collections of index subsets and max-min / min-max evaluation over them.

Two family variants are supported:

* ``explicit``: a literal list of index sets.
* ``capacity``: all subsets whose total weight reaches a level ``alpha``,
  evaluated without enumeration via the sorted cumulative-weight rule.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import chain, combinations

import numpy as np

from .errors import ParameterError, StructuralError


@dataclass(frozen=True)
class SubsetFamily:
    """A collection of nonempty subsets of {0, ..., d-1}.

    Either ``sets`` is given (explicit variant) or ``weights`` and ``alpha``
    are given (capacity-threshold variant: all J with sum_{j in J} w_j >= alpha).
    """

    sets: tuple[frozenset[int], ...] | None = None
    weights: np.ndarray | None = None
    alpha: float | None = None

    def __post_init__(self):
        if (self.sets is None) == (self.weights is None):
            raise StructuralError("specify exactly one of sets / (weights, alpha)")
        if self.sets is not None:
            if len(self.sets) == 0:
                raise StructuralError("family must contain at least one subset")
            sets = tuple(frozenset(int(j) for j in s) for s in self.sets)
            if any(len(s) == 0 for s in sets):
                raise StructuralError("family member sets must be nonempty")
            if any(j < 0 for s in sets for j in s):
                raise StructuralError("indices must be nonnegative")
            object.__setattr__(self, "sets", sets)
        else:
            w = np.asarray(self.weights, dtype=float)
            if w.ndim != 1 or w.size == 0:
                raise StructuralError("weights must be a nonempty vector")
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise ParameterError("capacity weights must be finite and nonnegative")
            if abs(w.sum() - 1.0) > 1e-9:
                raise ParameterError(f"capacity weights must sum to 1 (got {w.sum()!r})")
            if self.alpha is None or not (0.0 < float(self.alpha) <= 1.0):
                raise ParameterError("alpha must lie in (0, 1]")
            object.__setattr__(self, "weights", w)
            object.__setattr__(self, "alpha", float(self.alpha))

    @classmethod
    def explicit(cls, sets) -> "SubsetFamily":
        return cls(sets=tuple(frozenset(s) for s in sets))

    @classmethod
    def capacity(cls, weights, alpha: float) -> "SubsetFamily":
        return cls(weights=np.asarray(weights, dtype=float), alpha=alpha)

    @classmethod
    def uniform_capacity(cls, d: int, alpha: float) -> "SubsetFamily":
        """Capacity family with uniform weights 1/d: all J with |J| >= alpha*d."""
        return cls.capacity(np.full(d, 1.0 / d), alpha)

    @property
    def variant(self) -> str:
        return "explicit" if self.sets is not None else "capacity"

    def dimension_bound(self) -> int:
        if self.sets is not None:
            return 1 + max(max(s) for s in self.sets)
        return self.weights.shape[0]


def _check_v(v, family: SubsetFamily) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise StructuralError("v must be a 1-d vector")
    if family.dimension_bound() > v.shape[0]:
        raise StructuralError("family references indices beyond the length of v")
    return v


def family_max_min(v, family: SubsetFamily) -> float:
    """max over subsets J in the family of min_{j in J} v_j.

    For the capacity variant this is computed by sorting v in decreasing order
    (ties broken by original index, which cannot change the value), forming
    cumulative weights along the sorted order, and returning the value at the
    first position where the cumulative weight reaches alpha.
    """
    v = _check_v(v, family)
    if family.sets is not None:
        return max(min(v[j] for j in s) for s in family.sets)
    order = np.argsort(-v, kind="stable")
    cumw = np.cumsum(family.weights[order])
    reached = np.nonzero(cumw >= family.alpha)[0]
    if reached.size == 0:
        raise ParameterError("alpha exceeds the total capacity weight")
    return float(v[order[reached[0]]])


def family_min_max(v, family: SubsetFamily) -> float:
    """min over subsets J in the family of max_{j in J} v_j (mirror of family_max_min)."""
    v = _check_v(v, family)
    if family.sets is not None:
        return min(max(v[j] for j in s) for s in family.sets)
    order = np.argsort(v, kind="stable")
    cumw = np.cumsum(family.weights[order])
    reached = np.nonzero(cumw >= family.alpha)[0]
    if reached.size == 0:
        raise ParameterError("alpha exceeds the total capacity weight")
    return float(v[order[reached[0]]])


def _check_rows(v_rows, family: SubsetFamily) -> np.ndarray:
    v = np.atleast_2d(np.asarray(v_rows, dtype=float))
    if family.dimension_bound() > v.shape[1]:
        raise StructuralError("family references indices beyond the row length")
    return v


def _capacity_rows(v: np.ndarray, family: SubsetFamily, descending: bool) -> np.ndarray:
    order = np.argsort(-v if descending else v, axis=1, kind="stable")
    cumw = np.cumsum(family.weights[order], axis=1)
    hit = cumw >= family.alpha
    if not hit[:, -1].all():
        raise ParameterError("alpha exceeds the total capacity weight")
    first = hit.argmax(axis=1)
    return v[np.arange(v.shape[0]), order[np.arange(v.shape[0]), first]]


def family_max_min_rows(v_rows, family: SubsetFamily) -> np.ndarray:
    """Vectorized family_max_min applied to each row of a 2-d array."""
    v = _check_rows(v_rows, family)
    if family.sets is not None:
        mins = np.stack([v[:, sorted(s)].min(axis=1) for s in family.sets], axis=1)
        return mins.max(axis=1)
    return _capacity_rows(v, family, descending=True)


def family_min_max_rows(v_rows, family: SubsetFamily) -> np.ndarray:
    """Vectorized family_min_max applied to each row of a 2-d array."""
    v = _check_rows(v_rows, family)
    if family.sets is not None:
        maxs = np.stack([v[:, sorted(s)].max(axis=1) for s in family.sets], axis=1)
        return maxs.min(axis=1)
    return _capacity_rows(v, family, descending=False)


def enumerate_family(family: SubsetFamily, d: int):
    """Yield every member set explicitly (exponential; intended for small d)."""
    if family.sets is not None:
        yield from family.sets
        return
    indices = range(d)
    for s in chain.from_iterable(combinations(indices, r) for r in range(1, d + 1)):
        if family.weights[list(s)].sum() >= family.alpha:
            yield frozenset(s)
