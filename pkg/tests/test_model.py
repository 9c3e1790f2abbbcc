import numpy as np
import pytest

import tailfactors as tf
from tailfactors.errors import (ConfigurationError, InputError, ParameterError,
                                StructuralError)

from conftest import (REFERENCE_A, REFERENCE_SIGMA, make_reference_model,
                      random_diagdom, random_pure_loading)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def test_identity_model_is_valid():
    model = tf.FactorModel(tf.LoadingMatrix(np.eye(3)), tf.DiscreteUnitAtoms(3))
    report = tf.validate_model(model)
    assert report.ok
    assert report.max_norm_condition is True


def test_row_sum_violation_reported():
    a = np.array([[0.5, 0.4], [1.0, 0.0], [0.0, 1.0]])
    model = tf.FactorModel(tf.LoadingMatrix(a), tf.DiscreteUnitAtoms(2))
    report = tf.validate_model(model)
    assert any("row sums" in v for v in report.violations)


def test_degenerate_atom_breaks_diagonal_dominance():
    # single atom at (1/2, 1/2): second moment has all entries 1/4, zero gap
    spec = tf.AtomList(np.array([[0.5, 0.5]]), np.array([1.0]))
    model = tf.FactorModel(tf.LoadingMatrix(np.eye(2)), spec)
    report = tf.validate_model(model)
    assert any("diagonal dominance" in v for v in report.violations)


def test_dimension_mismatch_is_structural():
    with pytest.raises(StructuralError):
        tf.FactorModel(tf.LoadingMatrix(np.eye(3)), tf.DiscreteUnitAtoms(2))


def test_missing_pure_row_reported():
    a = np.array([[0.6, 0.4], [0.3, 0.7], [0.0, 1.0]])
    model = tf.FactorModel(tf.LoadingMatrix(a), tf.DiscreteUnitAtoms(2))
    report = tf.validate_model(model)
    assert any("pure" in v for v in report.violations)


def test_dirichlet_model_valid_without_mc():
    model = tf.FactorModel(tf.LoadingMatrix(np.eye(4)), tf.SymmetricDirichlet(4, 0.7))
    report = tf.validate_model(model, mc_draws=4000, seed=0)
    assert report.ok
    assert report.max_norm_condition is not None


def test_mixture_moments_compose():
    spec = tf.Mixture(
        (tf.DiscreteUnitAtoms(2), tf.SymmetricDirichlet(2, 2.0)),
        np.array([0.25, 0.75]),
    )
    assert np.allclose(spec.mean_vector(), [0.5, 0.5])
    expected = 0.25 * np.eye(2) / 2 + 0.75 * tf.SymmetricDirichlet(2, 2.0).second_moment()
    assert np.allclose(spec.second_moment(), expected)
    model = tf.FactorModel(tf.LoadingMatrix(np.eye(2)), spec)
    assert tf.validate_model(model, mc_draws=2000, seed=1).ok


def test_atom_weights_must_be_probabilities():
    spec = tf.AtomList(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([0.7, 0.7]))
    model = tf.FactorModel(tf.LoadingMatrix(np.eye(2)), spec)
    assert any("probability" in v for v in tf.validate_model(model).violations)


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

def test_single_factor_rows_are_comonotone():
    a = np.ones((4, 1))
    model = tf.FactorModel(tf.LoadingMatrix(a), tf.DiscreteUnitAtoms(1))
    sample = tf.simulate(model, 1000, seed=5)
    assert np.allclose(sample.data, sample.data[:, [0]])
    # all values equal R (K = 1, Lambda = 1)
    assert sample.data.min() >= 1.0


def test_univariate_margin_is_standard_pareto():
    model = tf.FactorModel(tf.LoadingMatrix(np.ones((1, 1))), tf.DiscreteUnitAtoms(1))
    sample = tf.simulate(model, 100_000, seed=17)
    p2 = (sample.data[:, 0] > 2.0).mean()
    assert p2 == pytest.approx(0.5, abs=0.01)


def test_reference_margins_pareto_in_the_tail():
    # Above level K every margin is exactly standard Pareto, so K/Y given
    # Y > K is uniform; check the Kolmogorov-Smirnov distance.
    model = make_reference_model()
    sample = tf.simulate(model, 100_000, seed=23)
    k = model.n_factors
    for j in range(model.d):
        col = sample.data[:, j]
        tail = col[col > k]
        u = np.sort(k / tail)
        grid = np.arange(1, u.size + 1) / u.size
        ks = max(np.abs(grid - u).max(), np.abs(u - grid + 1.0 / u.size).max())
        assert ks <= 0.01


def test_row_maximum_at_least_one():
    model = make_reference_model()
    sample = tf.simulate(model, 2000, seed=3)
    assert sample.data.max(axis=1).min() >= 1.0


def test_simulation_reproducible():
    model = make_reference_model()
    s1 = tf.simulate(model, 500, seed=9)
    s2 = tf.simulate(model, 500, seed=9)
    assert np.array_equal(s1.data, s2.data)
    assert not np.array_equal(s1.data, tf.simulate(model, 500, seed=10).data)


def test_simulate_requires_positive_n():
    with pytest.raises(ParameterError):
        tf.simulate(make_reference_model(), 0, seed=1)


# ---------------------------------------------------------------------------
# STDF oracle
# ---------------------------------------------------------------------------

def test_stdf_tail_independent_case():
    model = tf.FactorModel(tf.LoadingMatrix(np.eye(4)), tf.DiscreteUnitAtoms(4))
    assert tf.stdf_oracle(model, np.ones(4)) == pytest.approx(4.0)


def test_stdf_reference_value():
    assert tf.stdf_oracle(make_reference_model(), [1.0, 1.0, 1.0]) == pytest.approx(2.0)


def test_stdf_unit_vectors_give_one():
    rng = np.random.default_rng(31)
    for _ in range(10):
        d, k = int(rng.integers(2, 7)), int(rng.integers(1, 4))
        d = max(d, k)
        a = random_pure_loading(rng, d, k)
        model = tf.FactorModel(tf.LoadingMatrix(a), tf.DiscreteUnitAtoms(k))
        for j in range(d):
            e = np.zeros(d)
            e[j] = 1.0
            assert tf.stdf_oracle(model, e) == pytest.approx(1.0, abs=1e-12)


def test_stdf_homogeneity_and_bounds():
    rng = np.random.default_rng(37)
    model = make_reference_model()
    for _ in range(25):
        x = rng.uniform(0, 3, 3)
        c = float(rng.uniform(0, 2))
        lx = tf.stdf_oracle(model, x)
        assert tf.stdf_oracle(model, c * x) == pytest.approx(c * lx, rel=1e-12, abs=1e-12)
        assert x.max() - 1e-12 <= lx <= x.sum() + 1e-12


def test_stdf_max_linear_identity_for_unit_atoms():
    rng = np.random.default_rng(41)
    for _ in range(100):
        d, k = int(rng.integers(2, 8)), int(rng.integers(1, 5))
        d = max(d, k)
        a = random_pure_loading(rng, d, k)
        x = rng.uniform(0, 2, d)
        model = tf.FactorModel(tf.LoadingMatrix(a), tf.DiscreteUnitAtoms(k))
        max_linear = sum((a[:, col] * x).max() for col in range(k))
        assert tf.stdf_oracle(model, x) == pytest.approx(max_linear, rel=1e-12)


def test_stdf_monte_carlo_is_seeded_and_near_exact():
    model = tf.FactorModel(tf.LoadingMatrix(REFERENCE_A), tf.SymmetricDirichlet(2, 1.0))
    v1 = tf.stdf_oracle(model, np.ones(3), mc_draws=50_000, seed=2)
    v2 = tf.stdf_oracle(model, np.ones(3), mc_draws=50_000, seed=2)
    assert v1 == v2
    for j in range(3):
        e = np.zeros(3)
        e[j] = 1.0
        val = tf.stdf_oracle(model, e, mc_draws=100_000, seed=3)
        assert val == pytest.approx(1.0, abs=0.01)  # ~3 MC standard errors


def test_stdf_continuous_without_draws_is_configuration_error():
    model = tf.FactorModel(tf.LoadingMatrix(REFERENCE_A), tf.SymmetricDirichlet(2, 1.0))
    with pytest.raises(ConfigurationError):
        tf.stdf_oracle(model, np.ones(3))


def test_stdf_rejects_negative_thresholds():
    with pytest.raises(InputError):
        tf.stdf_oracle(make_reference_model(), [-1.0, 0.0, 0.0])


# ---------------------------------------------------------------------------
# tail functional oracle
# ---------------------------------------------------------------------------

def test_tail_functional_reference_values():
    model = make_reference_model()
    ones = np.ones(3)
    fam_13 = tf.SubsetFamily.explicit([{0, 2}])
    assert tf.tail_functional_oracle(model, fam_13, ones) == pytest.approx(0.0)
    fam_12 = tf.SubsetFamily.explicit([{0, 1}])
    assert tf.tail_functional_oracle(model, fam_12, ones) == pytest.approx(1.0 / 3.0)


def test_tail_functional_singleton_reduces_to_margin():
    model = make_reference_model()
    for j in range(3):
        e = np.zeros(3)
        e[j] = 1.0
        fam = tf.SubsetFamily.explicit([{j}])
        for mode in ("union-of-intersections", "intersection-of-unions"):
            assert tf.tail_functional_oracle(model, fam, e, mode) == pytest.approx(1.0)


def test_pairwise_functional_lies_in_unit_interval():
    rng = np.random.default_rng(43)
    for _ in range(20):
        d, k = int(rng.integers(2, 6)), int(rng.integers(1, 4))
        d = max(d, k)
        a = random_pure_loading(rng, d, k)
        model = tf.FactorModel(tf.LoadingMatrix(a), tf.DiscreteUnitAtoms(k))
        chi = tf.tail_correlation_oracle(model, 0, d - 1)
        assert -1e-12 <= chi <= 1.0 + 1e-12


def brute_force_functional(a, atoms, weights, sets, x, mode):
    total = 0.0
    k = a.shape[1]
    for z, w in zip(atoms, weights):
        vals = []
        for s in sets:
            members = [x[j] * float(a[j] @ z) for j in s]
            vals.append(min(members) if mode == "union-of-intersections" else max(members))
        term = max(vals) if mode == "union-of-intersections" else min(vals)
        total += w * term
    return k * total


def test_tail_functional_matches_brute_force_enumeration():
    rng = np.random.default_rng(47)
    for _ in range(40):
        d = int(rng.integers(2, 5))
        k = int(rng.integers(1, min(3, d) + 1))
        a = random_pure_loading(rng, d, k)
        n_atoms = int(rng.integers(1, 5))
        raw = rng.dirichlet(np.ones(k), size=n_atoms)
        weights = rng.dirichlet(np.ones(n_atoms))
        spec = tf.AtomList(raw, weights)
        model = tf.FactorModel(tf.LoadingMatrix(a), spec)
        x = rng.uniform(0, 2, d)
        n_sets = int(rng.integers(1, 4))
        sets = []
        for _ in range(n_sets):
            size = int(rng.integers(1, d + 1))
            sets.append(frozenset(rng.choice(d, size=size, replace=False).tolist()))
        fam = tf.SubsetFamily.explicit(sets)
        for mode in ("union-of-intersections", "intersection-of-unions"):
            got = tf.tail_functional_oracle(model, fam, x, mode)
            want = brute_force_functional(a, raw, weights, sets, x, mode)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_tail_functional_rejects_bad_input():
    model = make_reference_model()
    with pytest.raises(StructuralError):
        tf.SubsetFamily.explicit([])
    with pytest.raises(ParameterError):
        tf.tail_functional_oracle(model, tf.SubsetFamily.explicit([{0}]),
                                  np.ones(3), mode="nonsense")


# ---------------------------------------------------------------------------
# TPDM oracle
# ---------------------------------------------------------------------------

def test_tpdm_oracle_reference_model():
    sigma, latent = tf.tpdm_oracle(make_reference_model(), tf.Norm.max())
    assert np.allclose(latent, np.diag([0.5, 0.5]), atol=1e-14)
    assert np.allclose(sigma.matrix, REFERENCE_SIGMA, atol=1e-14)


def test_tpdm_oracle_identity_loading():
    model = tf.FactorModel(tf.LoadingMatrix(np.eye(5)), tf.DiscreteUnitAtoms(5))
    sigma, latent = tf.tpdm_oracle(model, tf.Norm.max())
    assert np.allclose(latent, np.eye(5) / 5)
    assert np.allclose(sigma.matrix, np.eye(5) / 5)


def test_tpdm_oracle_random_models_structure():
    rng = np.random.default_rng(53)
    for _ in range(50):
        d, k = int(rng.integers(2, 8)), int(rng.integers(1, 4))
        d = max(d, k)
        a = random_pure_loading(rng, d, k)
        n_atoms = int(rng.integers(1, 6))
        spec = tf.AtomList(rng.dirichlet(np.ones(k), n_atoms), rng.dirichlet(np.ones(n_atoms)))
        model = tf.FactorModel(tf.LoadingMatrix(a), spec)
        norm = [tf.Norm.max(), tf.Norm.one(), tf.Norm.two()][int(rng.integers(0, 3))]
        sigma, latent = tf.tpdm_oracle(model, norm)
        m = sigma.matrix
        assert np.allclose(m, m.T, atol=1e-12)
        assert np.all(m >= -1e-12)
        assert np.linalg.eigvalsh(m).min() >= -1e-10
        assert np.abs(a @ latent @ a.T - m).max() <= 1e-12


# ---------------------------------------------------------------------------
# spectral dependence sampling
# ---------------------------------------------------------------------------

def test_spectral_sample_single_factor_collapses():
    a = np.ones((3, 1)) / np.array([[1.0], [1.0], [1.0]])
    model = tf.FactorModel(tf.LoadingMatrix(a), tf.DiscreteUnitAtoms(1))
    sample = tf.sample_spectral_dependence(model, tf.Norm.one(), 500, seed=1)
    assert sample.n_atoms == 1
    assert sample.weights[0] == pytest.approx(1.0)
    expected = a[:, 0] / np.abs(a[:, 0]).sum()
    assert np.allclose(sample.atoms[0], expected)


def test_spectral_sample_lies_in_column_span():
    model = make_reference_model()
    sample = tf.sample_spectral_dependence(model, tf.Norm.two(), 2000, seed=5)
    q, _ = np.linalg.qr(REFERENCE_A)
    residual = sample.atoms - (sample.atoms @ q) @ q.T
    assert np.abs(residual).max() <= 1e-12


def test_spectral_sample_second_moment_matches_tpdm():
    model = make_reference_model()
    norm = tf.Norm.two()
    sample = tf.sample_spectral_dependence(model, norm, 100_000, seed=11)
    sigma, _ = tf.tpdm_oracle(model, norm)
    got = (sample.atoms.T * sample.weights) @ sample.atoms
    assert np.abs(got - sigma.matrix).max() <= 0.01


# ---------------------------------------------------------------------------
# alignment
# ---------------------------------------------------------------------------

def test_align_loading_swap_and_identity():
    perm, err = tf.align_loading(REFERENCE_A[:, ::-1], REFERENCE_A)
    assert perm == (1, 0)
    assert err == 0.0
    perm, err = tf.align_loading(REFERENCE_A, REFERENCE_A)
    assert perm == (0, 1)
    assert err == 0.0


def test_align_loading_perturbation():
    est = REFERENCE_A.copy()
    est[1] += 0.01
    _, err = tf.align_loading(est, REFERENCE_A)
    assert err == pytest.approx(0.01)


def test_align_loading_shape_mismatch():
    with pytest.raises(StructuralError):
        tf.align_loading(np.eye(3), np.ones((3, 2)))


def test_align_loading_hungarian_path():
    rng = np.random.default_rng(59)
    truth = random_pure_loading(rng, 30, 10)
    perm = rng.permutation(10)
    est = truth[:, perm]
    found, err = tf.align_loading(est, truth)
    assert err == 0.0
    assert np.array_equal(est[:, list(found)], truth)


def test_delta_gap_values():
    assert tf.delta_gap(np.array([[2.0]])) == np.inf
    c = np.array([[0.5, 0.25], [0.25, 0.5]])
    assert tf.delta_gap(c) == pytest.approx(0.25)
    assert tf.is_diagonally_dominant(c)
    assert not tf.is_diagonally_dominant(np.array([[0.25, 0.25], [0.25, 0.25]]))
