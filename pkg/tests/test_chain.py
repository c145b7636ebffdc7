import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markov_dilations.chain import (automaton_path_law, exact_path_law, marginal_consistency,
                                    path_frequency_check, simulate, simulate_arrays,
                                    stochastic_equation_residual, verify_markov)
from markov_dilations.dilation import MINIMAL, UNIVERSAL, dilate
from markov_dilations.errors import EnumerationTooLarge, HorizonExceeded
from markov_dilations.model import Distribution, MatrixSequence, validate_stochastic

from oracles import brute_path_law, matrix_path_law, random_stochastic

P2 = validate_stochastic([[0.7, 0.3], [0.4, 0.6]])
INHOM = MatrixSequence([P2, validate_stochastic([[0.1, 0.9], [0.5, 0.5]]),
                        validate_stochastic([[0.0, 1.0], [1.0, 0.0]])])


def assert_laws_close(table, law, tol=1e-12):
    keys = set(table) | set(law.table)
    assert max(abs(table.get(k, 0.0) - law[k]) for k in keys) <= tol


@pytest.mark.parametrize("mode", [UNIVERSAL, MINIMAL])
@pytest.mark.parametrize("target", [MatrixSequence.constant(P2, 3), INHOM], ids=["hom", "inhom"])
def test_exact_path_law_against_oracles(mode, target):
    spec = dilate(target, mode)
    mats = [m.entries for m in target]
    laws = [spec.q_at(t).weights for t in range(1, 4)]
    for k in range(2):
        law = exact_path_law(spec, k, 3)
        assert abs(law.total() - 1) < 1e-12
        assert_laws_close(brute_path_law(spec.coupling.phi_e, laws, k), law)
        assert_laws_close(matrix_path_law(mats, k), law, 1e-10)


def test_exact_path_law_worked_value():
    law = exact_path_law(dilate(P2, MINIMAL), 0, 2)
    assert law[(0, 1)] == pytest.approx(0.7 * 0.3, abs=1e-15)
    np.testing.assert_allclose(law.marginal(1), [0.7, 0.3], atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 3), st.integers(0, 2**32 - 1))
def test_automaton_matches_dilation(n, seed):
    rng = np.random.default_rng(seed)
    target = MatrixSequence(validate_stochastic(random_stochastic(rng, n, 0.3)) for _ in range(3))
    spec = dilate(target, MINIMAL)
    for k in range(n):
        a = automaton_path_law(spec.decompositions, k, 3)
        b = exact_path_law(spec, k, 3)
        assert a.max_abs_difference(b) <= 1e-12


def test_iid_reduction():
    # identical rows: X_1, X_2, ... are i.i.d. with the row law
    pi = [0.2, 0.5, 0.3]
    spec = dilate(validate_stochastic([pi] * 3), MINIMAL)
    law = exact_path_law(spec, 1, 3)
    for path, p in law:
        assert p == pytest.approx(np.prod([pi[x] for x in path]), abs=1e-14)


@pytest.mark.parametrize("target", [P2, INHOM], ids=["hom", "inhom"])
def test_verify_markov_passes(target):
    spec = dilate(target, MINIMAL)
    report = verify_markov(spec, target, 3)
    assert report.passed, report.summary()
    assert len(report.checks) == 6


def test_verify_markov_negative_control():
    spec = dilate(P2, MINIMAL)
    w = spec.q[0].weights.copy()
    w[0], w[1] = w[0] + 0.05, w[1] - 0.05
    bad = spec.with_q([Distribution(w)])
    report = verify_markov(bad, P2, 2)
    assert not report.passed
    assert report.failures()[0].max_abs_deviation == pytest.approx(0.05, abs=1e-12)


def test_marginal_consistency():
    spec = dilate(INHOM, UNIVERSAL)
    for t in range(4):
        for k in range(2):
            lhs, rhs, diff = marginal_consistency(spec, INHOM, [1.0, 2.0 - 1j], t, k)
            assert diff <= 1e-12


def test_enumeration_cap():
    spec = dilate(P2, UNIVERSAL)
    with pytest.raises(EnumerationTooLarge):
        exact_path_law(spec, 0, 30, cap=1000)


def test_simulation_is_reproducible():
    spec = dilate(P2, MINIMAL)
    a = simulate_arrays(spec, 0, 5, 7, 200)
    b = simulate_arrays(spec, 0, 5, 7, 200)
    assert a[0].tobytes() == b[0].tobytes() and a[1].tobytes() == b[1].tobytes()
    c = simulate_arrays(spec, 0, 5, 8, 200)
    assert c[0].tobytes() != a[0].tobytes()
    # a trajectory does not depend on how many others were drawn alongside it
    d = simulate_arrays(spec, 0, 5, 7, 50)
    assert np.array_equal(d[0], a[0][:50])


def test_simulation_respects_horizon():
    with pytest.raises(HorizonExceeded):
        simulate_arrays(dilate(INHOM, MINIMAL), 0, 4, 0, 1)


def test_trajectory_records():
    spec = dilate(INHOM, MINIMAL)
    for rec in simulate(spec, 1, 3, 11, 20):
        assert rec.states[0] == 1 and len(rec.states) == 4
        assert stochastic_equation_residual(spec, rec, [1.0, -3.0]) == 0.0
        counts = rec.noise_counts(spec.gsize)
        assert counts.shape == (4, spec.gsize)
        assert counts[-1].sum() == 3
        assert rec.to_json()["inputs"] == list(rec.inputs)


def test_monte_carlo_frequencies():
    spec = dilate(INHOM, UNIVERSAL)
    _, states = simulate_arrays(spec, 0, 3, 2024, 20000)
    report = path_frequency_check(states, exact_path_law(spec, 0, 3))
    assert report.passed, report.summary()


def test_monte_carlo_detects_wrong_law():
    spec = dilate(P2, MINIMAL)
    _, states = simulate_arrays(spec, 0, 3, 1, 20000)
    wrong = dilate(validate_stochastic([[0.6, 0.4], [0.4, 0.6]]), MINIMAL)
    assert not path_frequency_check(states, exact_path_law(wrong, 0, 3)).passed
