"""Tests for observable libraries, exact lifts, and Carleman truncation."""

import json
import math

import numpy as np
import pytest

from koopmankit import (
    CONTINUOUS,
    DISCRETE,
    EXP_NEG_INV,
    KoopmanModel,
    ObservableLibrary,
    Polynomial,
    builtin,
    carleman_center,
    carleman_logistic,
    closure_residual,
    eval_library,
    eval_named_observable,
    integrate,
    iterate,
    lift_state,
    load_model,
    model_from_json,
    model_to_json,
    monomials,
    observable_advance,
    project_states,
    propagate,
    save_model,
    slow_manifold_lift_ct,
    slow_manifold_lift_dt,
    tu_lift,
)


# ---------------------------------------------------------------------------
# observable libraries
# ---------------------------------------------------------------------------

def test_monomials_graded_order_without_constant():
    lib = monomials(2, 2)
    assert lib.names == ["x1", "x2", "x1^2", "x1*x2", "x2^2"]
    assert lib.state_inclusive
    lib3 = monomials(2, 3)
    assert lib3.names[5:] == ["x1^3", "x1^2*x2", "x1*x2^2", "x2^3"]


def test_eval_library_matches_direct_monomials():
    lib = monomials(2, 3)
    rng = np.random.default_rng(5)
    pts = rng.uniform(-2, 2, size=(20, 2))
    vals = eval_library(lib, pts.T)
    assert vals.shape == (len(lib.names), 20)
    np.testing.assert_allclose(vals[0], pts[:, 0], rtol=1e-15)
    np.testing.assert_allclose(vals[4], pts[:, 1] ** 2, rtol=1e-15)
    np.testing.assert_allclose(vals[6], pts[:, 0] ** 2 * pts[:, 1], rtol=1e-14)


def test_named_observable_evaluation():
    x = np.array([0.25, 0.5, 2.0])
    np.testing.assert_allclose(
        eval_named_observable(EXP_NEG_INV, x), np.exp(-1.0 / x), rtol=1e-15
    )


def test_library_index_lookup():
    lib = monomials(2, 2)
    assert lib.index_of("x1^2") == 2
    with pytest.raises(ValueError):
        lib.index_of("x9")


# ---------------------------------------------------------------------------
# closed-form lifts: structure and exact closure
# ---------------------------------------------------------------------------

def test_quadratic_lift_matrix_structure():
    mu, lam = -0.05, 1.0
    model = slow_manifold_lift_ct(mu, lam, {2: 1.0})
    assert model.library.names == ["x1", "x2", "x1^2"]
    expected = np.array([[mu, 0.0, 0.0], [0.0, lam, -lam], [0.0, 0.0, 2 * mu]])
    np.testing.assert_array_equal(model.K, expected)


def test_quadratic_lift_closure_is_exactly_zero():
    for lam in (1.0, -1.0):
        model = slow_manifold_lift_ct(-0.05, lam, {2: 1.0})
        system = builtin("quad_manifold", mu=-0.05, lam=lam)
        assert closure_residual(model, system) == 0.0


def test_quartic_lift_closure_is_exactly_zero():
    # P(x) = x^4 - 2 x^2 needs both x1^2 and x1^4 in the library
    model = slow_manifold_lift_ct(-0.05, 1.0, {4: 1.0, 2: -2.0})
    assert model.library.names == ["x1", "x2", "x1^2", "x1^4"]
    system = builtin("quartic_manifold", mu=-0.05, lam=1.0)
    assert closure_residual(model, system) == 0.0
    # row 2 carries -a_i * lam for each polynomial term
    np.testing.assert_array_equal(model.K[1], [0.0, 1.0, 2.0, -1.0])
    assert model.K[2, 2] == -0.1
    assert model.K[3, 3] == -0.2


def test_discrete_lift_closure_is_exactly_zero():
    mu, lam = 0.9, 0.1
    model = slow_manifold_lift_dt(mu, lam, {2: 1.0})
    system = builtin("discrete_manifold", mu=mu, lam=lam)
    assert closure_residual(model, system) == 0.0
    # x2 <- lam x2 + (1 - lam) a x1^2 family: row 2 coupling is a (1 - lam)
    assert model.K[1, 2] == (1 - lam) * 1.0
    assert model.K[2, 2] == mu**2


def test_tu_lift_structure_and_closure():
    lam, mu = 0.9, 0.5
    model = tu_lift(lam, mu)
    expected = np.array(
        [[lam, 0.0, 0.0], [0.0, mu, lam**2 - mu], [0.0, 0.0, lam**2]]
    )
    np.testing.assert_array_equal(model.K, expected)
    assert model.time_kind == DISCRETE
    system = builtin("tu_map", lam=lam, mu=mu)
    assert closure_residual(model, system) == 0.0


def test_lift_state_appends_observables():
    model = slow_manifold_lift_ct(-0.05, 1.0, {2: 1.0})
    np.testing.assert_array_equal(lift_state(model, [1.5, -1.0]), [1.5, -1.0, 2.25])


def test_polynomial_exponents_must_be_at_least_two():
    with pytest.raises(ValueError):
        slow_manifold_lift_ct(-0.05, 1.0, {1: 2.0})
    with pytest.raises(ValueError):
        slow_manifold_lift_ct(-0.05, 1.0, [(2, 1.0), (2, 3.0)])


# ---------------------------------------------------------------------------
# linear propagation of the lifted system
# ---------------------------------------------------------------------------

def test_lifted_propagation_matches_nonlinear_simulation():
    """Projection of the linear lifted flow equals the nonlinear flow."""
    model = slow_manifold_lift_ct(-0.05, -1.0, {2: 1.0})
    system = builtin("quad_manifold")  # same parameters
    x0 = [1.5, -1.0]
    nonlinear = integrate(system, x0, 10.0, dt=0.01)
    lifted = propagate(model, x0, t_end=10.0, dt=0.01)
    states = project_states(model, lifted)
    assert np.max(np.abs(states - nonlinear.states)) < 1e-6
    # the third lifted coordinate tracks x1^2 along the whole trajectory
    np.testing.assert_allclose(
        lifted.states[:, 2], nonlinear.states[:, 0] ** 2, atol=1e-6
    )


def test_discrete_propagation_matches_map_iteration():
    lam, mu = 0.9, 0.5
    model = tu_lift(lam, mu)
    system = builtin("tu_map", lam=lam, mu=mu)
    x0 = [1.0, 1.0]
    rolled = iterate(system, x0, 30)
    lifted = propagate(model, x0, steps=30)
    states = project_states(model, lifted)
    np.testing.assert_allclose(states, rolled.states, atol=1e-12)


def test_propagate_requires_matching_time_arguments():
    model = tu_lift(0.9, 0.5)
    with pytest.raises(ValueError):
        propagate(model, [1.0, 1.0], t_end=5.0)  # discrete model wants steps
    ct = slow_manifold_lift_ct(-0.05, 1.0, {2: 1.0})
    with pytest.raises(ValueError):
        propagate(ct, [1.0, 1.0], steps=5)  # continuous model wants t_end


# ---------------------------------------------------------------------------
# Carleman truncations
# ---------------------------------------------------------------------------

def test_carleman_logistic_rank4_exact_entries():
    r = 3.5
    m = carleman_logistic(r, 4)
    assert m.library.names == ["x1", "x1^2", "x1^3", "x1^4"]
    assert m.time_kind == DISCRETE
    # row n holds r^n * (-1)^k * C(n, k) at columns n + k, truncated at rank
    expected = np.zeros((4, 4))
    for n in range(1, 5):
        for k in range(0, n + 1):
            col = n + k
            if col <= 4:
                expected[n - 1, col - 1] = r**n * (-1) ** k * math.comb(n, k)
    np.testing.assert_array_equal(m.K, expected)


def test_carleman_logistic_full_rows_sum_to_zero_exactly():
    """Each full binomial row r^n (x - x^2)^n collapses at x = 1.

    The matrix keeps only columns up to the rank; the zero-sum identity
    belongs to the full row, which is reconstructed here term by term.
    With r = 3.5 every term is an exactly-representable double, so the
    compensated sum must be exactly 0.0, not merely small.
    """
    r = 3.5
    m = carleman_logistic(r, 4)
    for n in range(1, 5):
        full_row = [r**n * (-1) ** k * math.comb(n, k) for k in range(n + 1)]
        assert math.fsum(full_row) == 0.0
        # stored row is exactly the retained prefix of the full row
        stored = m.K[n - 1]
        for k, coeff in enumerate(full_row):
            col = n + k
            if col <= 4:
                assert stored[col - 1] == coeff


def test_carleman_logistic_truncated_closure():
    system = builtin("logistic", r=3.5)
    m = carleman_logistic(3.5, 4)
    assert closure_residual(m, system, truncate=True) == 0.0
    assert closure_residual(m, system, truncate=False) > 1.0


def test_carleman_center_structure_and_singularity():
    for rank in (3, 4, 8):
        m = carleman_center(rank)
        k = m.K
        assert m.time_kind == CONTINUOUS
        # d/dt x^i = i x^(i+1): nilpotent superdiagonal with entries 1..rank-1
        np.testing.assert_array_equal(np.diag(k, 1), np.arange(1, rank))
        np.testing.assert_array_equal(k - np.diag(np.diag(k, 1), 1), np.zeros_like(k))
        assert np.linalg.det(k) == 0.0


def test_carleman_center_prediction_is_taylor_partial_sum():
    """Truncated linear flow of dx = x^2 reproduces the geometric series."""
    x0 = 0.5
    t = 1.0
    for rank in (3, 5, 8):
        m = carleman_center(rank)
        lifted = propagate(m, [x0], t_end=t, dt=0.001)
        partial = sum(x0 ** (k + 1) * t**k for k in range(rank))
        assert lifted.states[-1, 0] == pytest.approx(partial, abs=1e-12)


def test_carleman_center_divergence_horizon_monotone_in_rank():
    """Time to 10% relative error grows with truncation rank."""
    x0 = 0.5
    horizons = []
    for rank in (4, 8, 12):
        m = carleman_center(rank)
        lifted = propagate(m, [x0], t_end=1.9, dt=0.001)
        truth = 1.0 / (1.0 / x0 - lifted.times)
        rel = np.abs(lifted.states[:, 0] - truth) / np.abs(truth)
        crossed = np.nonzero(rel > 0.1)[0]
        horizons.append(lifted.times[crossed[0]] if crossed.size else np.inf)
    assert horizons[0] <= horizons[1] <= horizons[2]
    assert horizons[0] > 0.5  # rank 4 is already decent well inside blow-up


# ---------------------------------------------------------------------------
# symbolic observable dynamics
# ---------------------------------------------------------------------------

def test_observable_advance_continuous():
    system = builtin("quad_manifold", mu=-0.05, lam=1.0)
    x1 = Polynomial.variable(2, 0)
    x2 = Polynomial.variable(2, 1)
    assert observable_advance(x1, system) == -0.05 * x1
    assert observable_advance(x1**2, system) == -0.1 * x1**2
    assert observable_advance(x2, system) == x2 - x1**2


def test_observable_advance_discrete_composes_with_the_map():
    system = builtin("logistic", r=3.5)
    x = Polynomial.variable(1, 0)
    # x^2 after the map is (r x (1-x))^2
    advanced = observable_advance(x**2, system)
    direct = (3.5 * (x - x**2)) * (3.5 * (x - x**2))
    assert advanced == direct


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def test_model_json_roundtrip_preserves_exact_floats(tmp_path):
    model = slow_manifold_lift_ct(-0.05, 1.0, {2: 1.0})
    data = model_to_json(model)
    again = model_from_json(json.loads(json.dumps(data)))
    np.testing.assert_array_equal(again.K, model.K)
    assert again.library.names == model.library.names
    assert again.time_kind == model.time_kind
    assert again.state_rows == model.state_rows

    path = tmp_path / "model.json"
    save_model(model, path)
    loaded = load_model(path)
    np.testing.assert_array_equal(loaded.K, model.K)


def test_model_json_roundtrip_with_named_observable(tmp_path):
    lib = ObservableLibrary(1, [EXP_NEG_INV], state_inclusive=False)
    model = KoopmanModel(lib, np.array([[1.0]]), CONTINUOUS, state_rows=())
    path = tmp_path / "named.json"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.library.names == model.library.names
    np.testing.assert_array_equal(
        eval_library(loaded.library, np.array([[0.5]])),
        eval_library(model.library, np.array([[0.5]])),
    )


def test_model_rejects_mismatched_matrix_size():
    lib = monomials(2, 2)
    with pytest.raises(ValueError):
        KoopmanModel(lib, np.eye(3), CONTINUOUS, state_rows=(0, 1))
