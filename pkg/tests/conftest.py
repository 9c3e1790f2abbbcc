"""Shared fixtures: the 3x2 reference model and random pure-model generators."""
from __future__ import annotations

import numpy as np
import pytest

import tailfactors as tf

REFERENCE_A = np.array([[1.0, 0.0], [1.0 / 3.0, 2.0 / 3.0], [0.0, 1.0]])
REFERENCE_SIGMA = np.array([
    [0.5, 1.0 / 6.0, 0.0],
    [1.0 / 6.0, 5.0 / 18.0, 1.0 / 3.0],
    [0.0, 1.0 / 3.0, 0.5],
])


@pytest.fixture
def reference_model() -> tf.FactorModel:
    """d=3, K=2 model with rows (1,0), (1/3,2/3), (0,1) and unit atoms."""
    return tf.FactorModel(tf.LoadingMatrix(REFERENCE_A), tf.DiscreteUnitAtoms(2))


def make_reference_model() -> tf.FactorModel:
    return tf.FactorModel(tf.LoadingMatrix(REFERENCE_A), tf.DiscreteUnitAtoms(2))


def random_diagdom(rng: np.random.Generator, k: int) -> np.ndarray:
    """Random symmetric matrix with positive dominance gap, PD by Gershgorin."""
    diag = rng.uniform(0.4, 1.0, size=k)
    c = np.diag(diag)
    for a in range(k):
        for b in range(a + 1, k):
            c[a, b] = c[b, a] = rng.uniform(0.0, 0.8) * min(diag[a], diag[b]) / k
    return c


def random_pure_loading(rng: np.random.Generator, d: int, k: int,
                        pure_per_factor: int = 1, max_entry: float = 0.8,
                        min_entry: float = 0.1) -> np.ndarray:
    """Random loading matrix with pure rows for every factor.

    Non-pure rows are sparse simplex rows whose nonzero entries are bounded
    away from 0 and 1 so that supports are numerically unambiguous.
    """
    n_pure = pure_per_factor * k
    if d < n_pure:
        raise ValueError("d too small for the requested pure rows")
    a = np.zeros((d, k))
    rows = rng.permutation(d)
    pure_rows = rows[:n_pure]
    for i, j in enumerate(pure_rows):
        a[j, i % k] = 1.0
    for j in rows[n_pure:]:
        size = int(rng.integers(2, k + 1)) if k > 1 else 1
        support = rng.choice(k, size=size, replace=False)
        if size == 1:
            a[j, support[0]] = 1.0
            continue
        while True:
            w = rng.dirichlet(np.ones(size))
            if w.min() >= min_entry and w.max() <= max_entry:
                break
        a[j, support] = w
    return a


def delta_star(sigma: np.ndarray, pure_rows) -> float:
    """Smallest positive gap between the row max and the next distinct value,
    taken over pure rows."""
    gaps = []
    for j in pure_rows:
        row = sigma[j]
        m = row.max()
        below = row[row < m - 1e-12]
        if below.size:
            gaps.append(m - below.max())
    return min(gaps)


def partition_sets(groups) -> set[frozenset[int]]:
    return {frozenset(g) for g in groups}


def true_pure_partition(a: np.ndarray) -> list[set[int]]:
    return tf.LoadingMatrix(a).pure_partition()
