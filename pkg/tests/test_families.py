import numpy as np
import pytest

import tailfactors as tf
from tailfactors.errors import ParameterError, StructuralError
from tailfactors.families import (enumerate_family, family_max_min_rows,
                                  family_min_max_rows)


def brute_force_max_min(v, family, d):
    return max(min(v[j] for j in s) for s in enumerate_family(family, d))


def test_capacity_example():
    v = np.array([0.5, 0.2, 0.9])
    fam = tf.SubsetFamily.uniform_capacity(3, 0.6)
    assert tf.family_max_min(v, fam) == 0.5
    assert brute_force_max_min(v, fam, 3) == 0.5


def test_explicit_corners():
    v = np.array([0.3, 0.8, 0.1, 0.5])
    singletons = tf.SubsetFamily.explicit([{j} for j in range(4)])
    assert tf.family_max_min(v, singletons) == v.max()
    full = tf.SubsetFamily.explicit([set(range(4))])
    assert tf.family_max_min(v, full) == v.min()
    assert tf.family_min_max(v, singletons) == v.min()
    assert tf.family_min_max(v, full) == v.max()


def test_capacity_matches_brute_force_randomized():
    rng = np.random.default_rng(123)
    for _ in range(300):
        d = int(rng.integers(1, 11))
        v = rng.uniform(0, 1, d)
        c = rng.dirichlet(np.ones(d))
        alpha = float(rng.uniform(1e-6, 1.0))
        fam = tf.SubsetFamily.capacity(c, alpha)
        assert tf.family_max_min(v, fam) == brute_force_max_min(v, fam, d)


def test_row_variants_match_scalar():
    rng = np.random.default_rng(5)
    v = rng.uniform(0, 1, (40, 6))
    fam_cap = tf.SubsetFamily.capacity(rng.dirichlet(np.ones(6)), 0.4)
    fam_exp = tf.SubsetFamily.explicit([{0, 2}, {1, 3, 5}, {4}])
    for fam in (fam_cap, fam_exp):
        assert np.allclose(family_max_min_rows(v, fam),
                           [tf.family_max_min(r, fam) for r in v])
        assert np.allclose(family_min_max_rows(v, fam),
                           [tf.family_min_max(r, fam) for r in v])


def test_value_ties_are_value_invariant():
    v = np.array([0.5, 0.5, 0.1])
    fam = tf.SubsetFamily.capacity([0.4, 0.4, 0.2], 0.5)
    assert tf.family_max_min(v, fam) == 0.5


def test_validation_errors():
    with pytest.raises(StructuralError):
        tf.SubsetFamily.explicit([])
    with pytest.raises(StructuralError):
        tf.SubsetFamily.explicit([set()])
    with pytest.raises(ParameterError):
        tf.SubsetFamily.capacity([0.5, 0.6], 0.5)  # weights sum != 1
    with pytest.raises(ParameterError):
        tf.SubsetFamily.capacity([0.5, 0.5], 1.5)
    with pytest.raises(StructuralError):
        tf.family_max_min(np.array([1.0]), tf.SubsetFamily.explicit([{0, 3}]))


def test_alpha_beyond_total_weight():
    fam = tf.SubsetFamily.capacity([0.5, 0.5], 1.0)
    object.__setattr__(fam, "alpha", 1.0 + 1e-6)
    with pytest.raises(ParameterError):
        tf.family_max_min(np.array([1.0, 2.0]), fam)
