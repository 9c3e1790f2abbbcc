import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import tailfactors as tf
from tailfactors.errors import InputError, ParameterError


def test_values_on_simple_vectors():
    x = np.array([3.0, -4.0, 0.0])
    assert tf.Norm.one()(x) == 7.0
    assert tf.Norm.two()(x) == 5.0
    assert tf.Norm.max()(x) == 4.0
    assert tf.Norm.weighted_one([1.0, 2.0, 5.0])(x) == 11.0


def test_rowwise_matches_loop():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(20, 4))
    for norm in [tf.Norm.one(), tf.Norm.two(), tf.Norm.max(),
                 tf.Norm.weighted_one(rng.uniform(0.5, 2.0, 4))]:
        rows = norm.rowwise(x)
        assert np.allclose(rows, [norm(r) for r in x])


coords = st.lists(st.floats(-50, 50, allow_nan=False), min_size=3, max_size=3)


@settings(max_examples=200, deadline=None)
@given(coords, coords, st.floats(-5, 5))
def test_norm_axioms(u, v, c):
    u, v = np.asarray(u), np.asarray(v)
    for norm in [tf.Norm.one(), tf.Norm.two(), tf.Norm.max(),
                 tf.Norm.weighted_one([0.5, 1.5, 2.0])]:
        assert norm(u) >= 0.0
        assert (norm(u) == 0.0) == bool(np.all(u == 0.0))
        assert norm(c * u) == pytest.approx(abs(c) * norm(u), rel=1e-12, abs=1e-12)
        assert norm(u + v) <= norm(u) + norm(v) + 1e-12


def test_weighted_requires_positive_weights():
    with pytest.raises(ParameterError):
        tf.Norm.weighted_one([1.0, 0.0])
    with pytest.raises(ParameterError):
        tf.Norm.weighted_one([1.0, -2.0])
    with pytest.raises(ParameterError):
        tf.Norm("one", np.array([1.0]))
    with pytest.raises(ParameterError):
        tf.Norm("banana")


def test_parse_aliases():
    assert tf.Norm.parse("inf").kind == "max"
    assert tf.Norm.parse("L1").kind == "one"
    assert tf.Norm.parse("2").kind == "two"
    with pytest.raises(ParameterError):
        tf.Norm.parse("three")


def test_non_finite_rejected():
    with pytest.raises(InputError):
        tf.Norm.one()(np.array([1.0, np.nan]))
