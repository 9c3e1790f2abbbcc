"""Norms used to define radial thresholds and dependence matrices.

Supported kinds: the 1-norm, the Euclidean norm, the maximum norm, and a
weighted 1-norm ``sum_j w_j |x_j|`` with strictly positive weights.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ParameterError

_KINDS = ("one", "two", "max", "weighted-one")


@dataclass(frozen=True)
class Norm:
    """A vector norm, evaluable on single vectors or row-wise on matrices."""

    kind: str
    weights: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown norm kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind == "weighted-one":
            if self.weights is None:
                raise ParameterError("weighted-one norm requires weights")
            w = np.asarray(self.weights, dtype=float)
            if w.ndim != 1 or w.size == 0:
                raise ParameterError("weights must be a nonempty 1-d vector")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise ParameterError("weighted-one norm weights must be finite and strictly positive")
            object.__setattr__(self, "weights", w)
        elif self.weights is not None:
            raise ParameterError(f"norm kind {self.kind!r} takes no weights")

    @classmethod
    def one(cls) -> "Norm":
        return cls("one")

    @classmethod
    def two(cls) -> "Norm":
        return cls("two")

    @classmethod
    def max(cls) -> "Norm":
        return cls("max")

    @classmethod
    def weighted_one(cls, weights) -> "Norm":
        return cls("weighted-one", np.asarray(weights, dtype=float))

    @classmethod
    def parse(cls, name: str) -> "Norm":
        """Parse a CLI-style norm name: 'one', 'two', 'max' (aliases 'l1', 'l2', 'inf')."""
        aliases = {"one": "one", "l1": "one", "1": "one",
                   "two": "two", "l2": "two", "2": "two",
                   "max": "max", "inf": "max", "sup": "max"}
        key = name.strip().lower()
        if key not in aliases:
            raise ParameterError(f"unknown norm name {name!r}")
        return cls(aliases[key])

    def __call__(self, x, axis: int | None = None) -> np.ndarray | float:
        """Evaluate the norm of ``x``, or row-wise along ``axis`` for matrices."""
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise InputError("norm evaluation requires finite entries")
        if self.kind == "one":
            return np.abs(x).sum(axis=axis)
        if self.kind == "two":
            # scale by the max magnitude so squares cannot under/overflow
            a = np.abs(x)
            if axis is None:
                m = float(a.max())
                return 0.0 if m == 0.0 else m * float(np.sqrt(((a / m) ** 2).sum()))
            m = a.max(axis=axis)
            safe = np.where(m == 0.0, 1.0, m)
            return m * np.sqrt(((a / np.expand_dims(safe, axis)) ** 2).sum(axis=axis))
        if self.kind == "max":
            return np.abs(x).max(axis=axis)
        # weighted-one: weights act on the last axis
        if x.shape[-1] != self.weights.shape[0]:
            raise InputError("weighted-one norm dimension mismatch")
        return (np.abs(x) * self.weights).sum(axis=axis)

    def rowwise(self, x) -> np.ndarray:
        """Norm of each row of a 2-d array."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 2:
            raise InputError("rowwise() expects a 2-d array")
        return self(x, axis=1)

    def label(self) -> str:
        return self.kind
