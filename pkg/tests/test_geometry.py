import numpy as np
import pytest

import mexlab as mx


def test_sign_pm1_zero_is_plus_one():
    assert mx.sign_pm1(0.0) == 1
    assert mx.sign_pm1(-0.0) == 1
    np.testing.assert_array_equal(mx.sign_pm1([-3.0, 0.0, 2.0]), [-1, 1, 1])


def test_halfspace_predict_examples():
    h = mx.Halfspace([1.0, 0.0])
    assert h.predict(np.array([-0.5, 3.0])) == -1
    h2 = mx.Halfspace([0.0, 1.0])
    assert h2.predict(np.array([7.0, 2.0])) == 1


def test_halfspace_boundary_is_positive():
    h = mx.Halfspace([1.0, 0.0])
    assert h.predict(np.array([0.0, 5.0])) == 1


def test_halfspace_batch_matches_scalar():
    rng = np.random.default_rng(0)
    w = mx.sample_unit_sphere(4, rng)
    h = mx.Halfspace(w)
    X = rng.standard_normal((50, 4))
    batch = h.predict(X)
    singles = [h.predict(x) for x in X]
    np.testing.assert_array_equal(batch, singles)


def test_unit_vector_renormalizes_small_drift():
    v = mx.unit_vector([1.0 + 5e-7, 0.0])
    assert abs(np.linalg.norm(v) - 1.0) < 1e-12


def test_unit_vector_rejects_non_unit():
    with pytest.raises(ValueError):
        mx.unit_vector([2.0, 0.0])


def test_geometric_error_identical():
    w = mx.sample_unit_sphere(5, np.random.default_rng(1))
    assert mx.geometric_error(w, w) == 0.0


def test_geometric_error_antipodal():
    e1 = np.array([1.0, 0.0, 0.0])
    assert mx.geometric_error(e1, -e1) == pytest.approx(2.0)


def test_geometric_error_orthonormal():
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    assert mx.geometric_error(e1, e2) == pytest.approx(np.sqrt(2.0), abs=1e-12)


def test_sample_unit_sphere_d1_is_pm1():
    rng = np.random.default_rng(2)
    draws = mx.sample_unit_sphere(1, rng, size=2000)
    assert set(np.unique(draws)) <= {-1.0, 1.0}
    frac = np.mean(draws == 1.0)
    assert 0.45 < frac < 0.55


def test_sample_unit_sphere_moments():
    rng = np.random.default_rng(3)
    draws = mx.sample_unit_sphere(3, rng, size=100000)
    assert np.linalg.norm(draws, axis=1) == pytest.approx(1.0, abs=1e-9)
    assert np.abs(draws.mean(axis=0)).max() < 0.01
    # E[(X_k)^2] = 1/d for uniform sphere points
    second = (draws ** 2).mean(axis=0)
    np.testing.assert_allclose(second, 1.0 / 3.0, atol=0.01)


def test_sample_unit_sphere_single_vector_shape():
    v = mx.sample_unit_sphere(7, np.random.default_rng(4))
    assert v.shape == (7,)
    assert np.linalg.norm(v) == pytest.approx(1.0)


def test_uniform_error_identical_predictors():
    h = mx.Halfspace([1.0, 0.0])
    err = mx.uniform_error_estimate(
        h.predict, h.predict, lambda n, rng: mx.sample_unit_sphere(2, rng, size=n), 1000, 0
    )
    assert err == 0.0


def test_uniform_error_complementary_predictors():
    h = mx.Halfspace([1.0, 0.0])
    err = mx.uniform_error_estimate(
        h.predict,
        lambda X: -h.predict(X),
        lambda n, rng: mx.sample_unit_sphere(2, rng, size=n),
        1000,
        0,
    )
    assert err == 1.0


def test_uniform_error_orthogonal_halfspaces():
    # normals at angle pi/2 disagree on exactly half the sphere
    a = mx.Halfspace([1.0, 0.0])
    b = mx.Halfspace([0.0, 1.0])
    err = mx.uniform_error_estimate(
        a.predict, b.predict, lambda n, rng: mx.sample_unit_sphere(2, rng, size=n), 1000000, 7
    )
    assert err == pytest.approx(0.5, abs=0.01)


def test_uniform_error_deterministic_for_seed():
    a = mx.Halfspace(mx.sample_unit_sphere(3, np.random.default_rng(5)))
    b = mx.Halfspace(mx.sample_unit_sphere(3, np.random.default_rng(6)))
    sampler = lambda n, rng: mx.sample_unit_sphere(3, rng, size=n)
    e1 = mx.uniform_error_estimate(a.predict, b.predict, sampler, 5000, 11)
    e2 = mx.uniform_error_estimate(a.predict, b.predict, sampler, 5000, 11)
    assert e1 == e2
