import numpy as np
import pytest

import tailfactors as tf
from tailfactors.errors import InputError, ParameterError

from conftest import REFERENCE_SIGMA, make_reference_model


def test_pseudo_pareto_hand_example():
    data = tf.DataMatrix(np.array([[3.0], [1.0], [4.0], [2.0]]))
    pseudo = tf.pseudo_pareto(data)
    assert list(pseudo.rank_matrix[:, 0]) == [3, 1, 4, 2]
    assert np.allclose(pseudo.values[:, 0], [2.5, 1.25, 5.0, 5.0 / 3.0])
    assert not pseudo.had_ties


def test_pseudo_pareto_increasing_column():
    data = tf.DataMatrix(np.arange(1.0, 7.0).reshape(-1, 1))
    pseudo = tf.pseudo_pareto(data)
    assert list(pseudo.rank_matrix[:, 0]) == [1, 2, 3, 4, 5, 6]


def test_pseudo_pareto_constant_column_warns_ordinal():
    data = tf.DataMatrix(np.ones((5, 1)))
    with pytest.warns(UserWarning, match="ties"):
        pseudo = tf.pseudo_pareto(data)
    assert list(pseudo.rank_matrix[:, 0]) == [1, 2, 3, 4, 5]
    assert pseudo.had_ties


def test_rank_invariance_under_monotone_transforms():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(50, 3))
    base = tf.pseudo_pareto(tf.DataMatrix(x))
    transformed = np.column_stack([np.exp(x[:, 0]), x[:, 1] ** 3, 5.0 * x[:, 2] - 2.0])
    other = tf.pseudo_pareto(tf.DataMatrix(transformed))
    assert np.array_equal(base.rank_matrix, other.rank_matrix)
    assert np.allclose(base.values, other.values)


def test_empirical_tpdm_one_dimensional_degeneracy():
    rng = np.random.default_rng(2)
    pseudo = tf.pseudo_pareto(tf.DataMatrix(rng.normal(size=(100, 1))))
    for k in (5, 30, 99):
        sigma = tf.empirical_tpdm(pseudo, k, tf.Norm.max())
        assert sigma.matrix[0, 0] == pytest.approx(sigma.effective_count / k)


def test_empirical_tpdm_symmetry_psd_nonnegative():
    rng = np.random.default_rng(3)
    pseudo = tf.pseudo_pareto(tf.DataMatrix(rng.normal(size=(400, 5))))
    sigma = tf.empirical_tpdm(pseudo, 40, tf.Norm.max())
    m = sigma.matrix
    assert np.allclose(m, m.T, atol=1e-12)
    assert np.all(m >= 0)
    assert np.linalg.eigvalsh(m).min() >= -1e-10


def test_empirical_tpdm_permutation_equivariance():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(300, 4))
    perm = [2, 0, 3, 1]
    s1 = tf.empirical_tpdm(tf.pseudo_pareto(tf.DataMatrix(x)), 30, tf.Norm.two())
    s2 = tf.empirical_tpdm(tf.pseudo_pareto(tf.DataMatrix(x[:, perm])), 30, tf.Norm.two())
    assert np.allclose(s2.matrix, s1.matrix[np.ix_(perm, perm)])


def test_two_norm_trace_identity():
    rng = np.random.default_rng(5)
    pseudo = tf.pseudo_pareto(tf.DataMatrix(rng.normal(size=(200, 3))))
    sigma = tf.empirical_tpdm(pseudo, 25, tf.Norm.two())
    assert np.trace(sigma.matrix) == pytest.approx(sigma.effective_count / 25)


def test_entry_bound():
    rng = np.random.default_rng(6)
    pseudo = tf.pseudo_pareto(tf.DataMatrix(rng.normal(size=(200, 3))))
    sigma = tf.empirical_tpdm(pseudo, 20, tf.Norm.max())
    radii2 = tf.Norm.two().rowwise(pseudo.values)
    radii = tf.Norm.max().rowwise(pseudo.values)
    bound = ((radii2 / radii) ** 2).max()
    assert sigma.matrix.max() <= bound + 1e-12


def test_reference_model_consistency_seeded():
    model = make_reference_model()
    sample = tf.simulate(model, 50_000, seed=7)
    with pytest.warns(UserWarning, match="ties"):
        pseudo = tf.pseudo_pareto(tf.DataMatrix(sample.data))
    sigma = tf.empirical_tpdm(pseudo, 2000, tf.Norm.max())
    assert np.abs(sigma.matrix - REFERENCE_SIGMA).max() <= 0.08


def test_consistency_error_decreases_along_schedule():
    model = make_reference_model()
    for seed in (11, 12, 13):
        errors = []
        for n in (10_000, 40_000, 160_000):
            k = int(9 * np.sqrt(n))
            sample = tf.simulate(model, n, seed=seed)
            with pytest.warns(UserWarning, match="ties"):
                pseudo = tf.pseudo_pareto(tf.DataMatrix(sample.data))
            sigma = tf.empirical_tpdm(pseudo, k, tf.Norm.max())
            errors.append(np.abs(sigma.matrix - REFERENCE_SIGMA).max())
        assert errors[-1] < errors[0]


def test_empirical_chi_identical_and_antithetic_columns():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(100, 1))
    same = tf.empirical_chi(tf.DataMatrix(np.column_stack([x, x])), 20)
    assert same[0, 1] == pytest.approx(1.0)
    anti = tf.empirical_chi(tf.DataMatrix(np.column_stack([x, -x])), 20)
    assert anti[0, 1] == 0.0
    assert np.allclose(np.diag(anti), 1.0)


def test_empirical_chi_reference_value():
    model = make_reference_model()
    sample = tf.simulate(model, 200_000, seed=21)
    chi = tf.empirical_chi(tf.DataMatrix(sample.data), 4000)
    assert chi[0, 1] == pytest.approx(1.0 / 3.0, abs=0.04)
    assert chi[0, 2] == pytest.approx(0.0, abs=0.02)
    assert np.all((chi >= 0) & (chi <= 1))


def test_parameter_validation():
    rng = np.random.default_rng(9)
    data = tf.DataMatrix(rng.normal(size=(50, 2)))
    pseudo = tf.pseudo_pareto(data)
    with pytest.raises(ParameterError):
        tf.empirical_tpdm(pseudo, 50, tf.Norm.max())
    with pytest.raises(ParameterError):
        tf.empirical_chi(data, 0)
    with pytest.raises(InputError):
        tf.DataMatrix(np.array([[1.0, np.inf]]))
    with pytest.raises(InputError):
        tf.DataMatrix(np.array([[1.0, 2.0]]))  # n < 2
