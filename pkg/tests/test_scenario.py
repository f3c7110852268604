import math

import numpy as np
import pytest

import linalg_core as la
import scenario as sc

SQ = math.sqrt(2) / 2

def random_scenario(rng, embedding, dim=2, lo=-1.0, hi=1.0):
    ops = [la.random_hermitian(rng, dim, lo, hi) for _ in range(4)]
    return sc.build_scenario(*ops, embedding=embedding, value_range=(lo, hi))

def random_state(rng, dim):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return la.pure_state(v, normalize=True)

def test_build_scenario_all_z(all_z_scenario):
    assert all_z_scenario.dim == 4
    assert all_z_scenario.a1.site is sc.Site.ArmA
    assert all_z_scenario.b2.site is sc.Site.ArmB

def test_build_scenario_infeasible():
    z = sc.pauli_z()
    with pytest.raises(sc.FeasibilityError):
        sc.build_scenario(sc.diag([3, 0]), z, z, z)

def test_build_scenario_probability_range():
    p = sc.diag([1, 0])
    s = sc.build_scenario(p, p, p, p, value_range=sc.PROBABILITY_RANGE)
    assert s.value_range == (0.0, 1.0)
    with pytest.raises(sc.FeasibilityError):
        sc.build_scenario(sc.pauli_z(), p, p, p, value_range=sc.PROBABILITY_RANGE)

def test_build_scenario_shared_shape_mismatch():
    z = sc.pauli_z()
    with pytest.raises(la.ShapeError):
        sc.build_scenario(z, z, np.eye(3), np.eye(3), embedding=sc.Embedding.SharedSpace)

def test_build_scenario_site_tags():
    z = sc.pauli_z()
    a = sc.observable(z, sc.Site.ArmA, 'a')
    with pytest.raises(sc.ScenarioError):
        sc.build_scenario(z, z, a, z)
    s = sc.build_scenario(a, a, z, z)
    assert s.a1.label == 'a'

def test_build_scenario_site_cap():
    with pytest.raises(la.SizeError):
        sc.build_scenario(np.eye(9), np.eye(9), np.eye(2), np.eye(2))

def test_build_scenario_rejects_non_hermitian():
    with pytest.raises(la.SymmetryError):
        sc.build_scenario([[0, 1], [0, 0]], np.eye(2), np.eye(2), np.eye(2))

def test_invalid_value_range():
    with pytest.raises(sc.RangeError):
        sc.check_value_range((1, -1))

def test_bell_operator_all_z(all_z_scenario):
    z = sc.pauli_z()
    b = sc.bell_operator(all_z_scenario)
    np.testing.assert_allclose(b, 2 * np.kron(z, z))
    assert la.largest_singular_value(b) == pytest.approx(2.0)

def test_bell_operator_optimal(optimal_scenario, tsirelson):
    b = sc.bell_operator(optimal_scenario)
    assert la.is_hermitian(b)
    assert la.hermitian_eigen(b).eigenvalues[0] == pytest.approx(tsirelson, abs=1e-9)

def test_bell_operator_identity():
    i = np.eye(2)
    np.testing.assert_allclose(sc.bell_operator(sc.build_scenario(i, i, i, i)), 2 * np.eye(4))

def test_bell_operator_matches_embedded_products(rng):
    s = random_scenario(rng, sc.Embedding.TensorEmbedded)
    ops = sc.embedded_observables(s)
    b = ops['a1'] @ ops['b1'] + ops['a2'] @ ops['b1'] + ops['a1'] @ ops['b2'] - ops['a2'] @ ops['b2']
    np.testing.assert_allclose(sc.bell_operator(s), b, atol=1e-12)

def test_shared_bell_operator_not_hermitian():
    assert not la.is_hermitian(sc.bell_operator(sc.nonlocal_reference()))

def test_bell_expectation_examples(all_z_scenario, optimal_scenario, tsirelson):
    assert sc.bell_expectation(all_z_scenario, sc.basis_state(4, 0)) == pytest.approx(2.0)
    assert sc.bell_expectation(optimal_scenario, sc.phi_plus(2)) == pytest.approx(tsirelson, abs=1e-9)
    assert sc.bell_expectation(optimal_scenario, sc.maximally_mixed(4)) == pytest.approx(0.0, abs=1e-12)

def test_bell_expectation_dimension_mismatch(all_z_scenario):
    with pytest.raises(la.ShapeError):
        sc.bell_expectation(all_z_scenario, sc.basis_state(2))

def test_magnitude_bound_examples(all_z_scenario):
    assert sc.magnitude_bound(all_z_scenario, sc.basis_state(4, 0)) == pytest.approx(2.0)
    i = np.eye(2)
    s = sc.build_scenario(i, i, i, i)
    assert sc.magnitude_bound(s, sc.basis_state(4, 3)) == pytest.approx(2.0)

@pytest.mark.slow
@pytest.mark.parametrize('embedding', list(sc.Embedding))
def test_naive_ceiling_on_random_draws(rng, embedding):
    for _ in range(10000):
        s = random_scenario(rng, embedding)
        state = random_state(rng, s.dim)
        bound = sc.magnitude_bound(s, state)
        assert bound <= sc.NAIVE_BOUND + 1e-9
        assert sc.bell_expectation(s, state) <= bound + 1e-9

def test_classify_regime_examples(tsirelson):
    classical = sc.classify_regime(sc.classical_reference())
    assert classical.regime is sc.Regime.Classical
    assert classical.expected_bound == 2.0
    local = sc.classify_regime(sc.local_reference())
    assert local.regime is sc.Regime.LocalHiddenVariable
    assert local.expected_bound == pytest.approx(tsirelson)
    nonlocal_ = sc.classify_regime(sc.nonlocal_reference())
    assert nonlocal_.regime is sc.Regime.Nonlocal
    assert nonlocal_.expected_bound == pytest.approx(2 * math.sqrt(3))

def test_classify_regime_witness():
    witness = dict(sc.classify_regime(sc.local_reference()).witness)
    assert set(witness) == {'a1,a2', 'b1,b2', 'a1,b1', 'a1,b2', 'a2,b1', 'a2,b2'}
    assert witness['a1,a2'] == pytest.approx(2.0)
    assert witness['a1,b1'] == 0.0

def test_classify_regime_tolerance():
    eps = 1e-12
    a2 = sc.pauli_z() + eps * sc.pauli_x()
    s = sc.build_scenario(sc.pauli_z(), sc.diag([1, -1]) * (1 - 1e-9), sc.pauli_z(), sc.pauli_z())
    assert sc.classify_regime(s).regime is sc.Regime.Classical
    near = sc.build_scenario(sc.pauli_z() * 0.5, a2 * 0.5, sc.pauli_z(), sc.pauli_z())
    assert sc.classify_regime(near).regime is sc.Regime.Classical
    assert sc.classify_regime(near, tol=1e-14).regime is sc.Regime.LocalHiddenVariable
    with pytest.raises(ValueError):
        sc.classify_regime(near, tol=0.0)

@pytest.mark.parametrize('table, expected', [
    ((0.4, 0.4, 0.4, 0.4), 0.0),
    ((1.0, SQ, SQ, -SQ), 2 * math.sqrt(2)),
    ((0.1, -0.2, 0.3, 0.3), 0.0),
])
def test_swap_assumption_delta_examples(table, expected):
    assert sc.swap_assumption_delta(*table) == pytest.approx(expected)

def test_swap_assumption_delta_range():
    with pytest.raises(sc.RangeError):
        sc.swap_assumption_delta(1.5, 0, 0, 0)

def test_swap_assumption_delta_symmetries(rng):
    for _ in range(20):
        e11, e21, e12, e22 = rng.uniform(-1, 1, 4)
        delta = sc.swap_assumption_delta(e11, e21, e12, e22)
        assert delta >= 0
        assert sc.swap_assumption_delta(e21, e11, e12, e22) == pytest.approx(delta)
        assert sc.swap_assumption_delta(-e11, -e21, -e12, -e22) == pytest.approx(delta)

def test_swap_delta_matches_swapped_operator(rng):
    s = random_scenario(rng, sc.Embedding.TensorEmbedded)
    state = random_state(rng, s.dim)
    delta = sc.swap_assumption_delta(*sc.correlation_table(s, state))
    swapped = sc.bell_expectation(sc.swapped_scenario(s), state)
    assert abs(sc.bell_expectation(s, state) - swapped) == pytest.approx(delta, abs=1e-9)

def test_correlation_table_optimal(optimal_scenario):
    table = sc.correlation_table(optimal_scenario, sc.phi_plus(2))
    np.testing.assert_allclose(table, [SQ, SQ, SQ, -SQ], atol=1e-9)

def test_optimal_state_reaches_largest_singular_value(rng):
    s = random_scenario(rng, sc.Embedding.SharedSpace)
    state = sc.optimal_state(s)
    assert sc.magnitude_bound(s, state) == pytest.approx(la.largest_singular_value(sc.bell_operator(s)), abs=1e-9)

def test_evaluate_tensor(optimal_scenario, tsirelson):
    ev = sc.evaluate(optimal_scenario)
    assert ev.expectation == pytest.approx(tsirelson, abs=1e-9)
    assert ev.magnitude == pytest.approx(tsirelson, abs=1e-9)
    assert not ev.gap_flag
    assert ev.regime.regime is sc.Regime.LocalHiddenVariable

def test_evaluate_shared_flags_gap():
    ev = sc.evaluate(sc.nonlocal_reference())
    assert ev.regime.regime is sc.Regime.Nonlocal
    assert ev.expectation <= ev.magnitude + 1e-9
    assert ev.gap == pytest.approx(ev.magnitude - abs(ev.expectation))

def test_polarizer_and_projectors():
    np.testing.assert_allclose(sc.polarizer(0), sc.pauli_z())
    np.testing.assert_allclose(sc.polarizer(math.pi / 4), sc.pauli_x(), atol=1e-15)
    total = sc.projector(0.3, 1) + sc.projector(0.3, -1)
    np.testing.assert_allclose(total, np.eye(2), atol=1e-15)
    with pytest.raises(ValueError):
        sc.projector(0.3, 0)

def test_bloch_direction():
    np.testing.assert_allclose(sc.bloch(math.pi / 2, math.pi / 4), (sc.pauli_x() + sc.pauli_y()) / math.sqrt(2),
                               atol=1e-15)
