import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markov_dilations.decompose import decompose_full, decompose_greedy
from markov_dilations.dilation import MINIMAL, UNIVERSAL, dilate
from markov_dilations.errors import DimMismatch, NotAPermutation, UnitalityViolation
from markov_dilations.model import validate_stochastic
from markov_dilations.quantum import (DiagonalObservable, KrausChannel, WindowOperator,
                                      automorphism_J, automorphism_J_inverse, automorphism_power,
                                      build_env_vector, build_unitary, channel_distance,
                                      check_cqd1, check_cqd2, conditional_expectation,
                                      davis_channel, evolved_window, flow, heisenberg_apply,
                                      is_unitary, kraus_channel, matrix_units,
                                      multiplication_operator, permutation_automorphism,
                                      verify_cms_extension)

from oracles import dense_v1, direct_davis, random_stochastic

P2 = validate_stochastic([[0.7, 0.3], [0.4, 0.6]])


def random_operator(rng, d):
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


@pytest.fixture(scope="module")
def minimal():
    spec = dilate(P2, MINIMAL)
    return spec, build_unitary(spec.coupling), build_env_vector(spec.q_at(1))


@pytest.fixture(scope="module")
def universal():
    spec = dilate(P2, UNIVERSAL)
    return spec, build_unitary(spec.coupling), build_env_vector(spec.q_at(1))


def test_unitary_is_permutation(minimal):
    spec, v, _ = minimal
    assert is_unitary(v.matrix)
    m = v.matrix.real
    assert np.array_equal(m.sum(axis=0), np.ones(v.dim))
    for i in range(spec.n):
        for g in range(spec.gsize):
            x = i * spec.gsize + g
            assert m[v.perm[x], x] == 1


def test_blocks_reassemble(minimal):
    _, v, _ = minimal
    g = v.gsize
    for a, b in itertools.product(range(g), repeat=2):
        # <i, a| V |j, b>
        assert np.array_equal(v.block(a, b), v.matrix[a::g, b::g])


def test_environment_vector(minimal):
    spec, _, ups = minimal
    assert abs(np.vdot(ups.vector, ups.vector) - 1) < 1e-15
    np.testing.assert_allclose(np.abs(ups.vector) ** 2, spec.q_at(1).weights, atol=1e-15)
    assert ups.power(3).shape == (spec.gsize**3,)


@pytest.mark.parametrize("fixture", ["minimal", "universal"])
def test_cms_extension(request, fixture):
    spec, v, ups = request.getfixturevalue(fixture)
    ch = kraus_channel(v, ups)
    assert ch.unitality_deviation() <= 1e-12
    report = verify_cms_extension(ch, P2)
    assert report.passed, report.summary()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_one_step_dilation_against_dense_compression(seed):
    rng = np.random.default_rng(seed)
    p = validate_stochastic(random_stochastic(rng, 3, 0.3))
    spec = dilate(p, MINIMAL)
    v, ups = build_unitary(spec.coupling), build_env_vector(spec.q_at(1))
    a = random_operator(rng, 3)
    # (1 (x) upsilon)^dagger V^dagger (a (x) 1) V (1 (x) upsilon), built densely
    iso = np.kron(np.eye(3), ups.vector[:, None])
    big = v.matrix.conj().T @ np.kron(a, np.eye(spec.gsize)) @ v.matrix
    expected = iso.conj().T @ big @ iso
    assert np.abs(kraus_channel(v, ups)(a) - expected).max() <= 1e-12
    assert np.abs(conditional_expectation(v.conjugate(a), ups) - expected).max() <= 1e-12


def test_conditional_expectation_forms(minimal):
    spec, v, ups = minimal
    a = random_operator(np.random.default_rng(0), spec.n * spec.gsize)
    rho = np.outer(ups.vector, ups.vector.conj())
    np.testing.assert_allclose(conditional_expectation(a, rho),
                               conditional_expectation(a, ups.vector), atol=1e-14)
    with pytest.raises(DimMismatch):
        conditional_expectation(a[:-1, :-1], ups.vector)


@pytest.mark.parametrize("mode", [UNIVERSAL, MINIMAL])
def test_davis_matches_direct_formula(mode):
    rng = np.random.default_rng(5)
    p = validate_stochastic(random_stochastic(rng, 3))
    dec = decompose_full(p) if mode == UNIVERSAL else decompose_greedy(p)
    ch = davis_channel(dec)
    terms = [(w, dec_map) for w, dec_map in zip(dec.weights, [m.table for m in dec.maps()])]
    for _, e in matrix_units(3):
        assert np.abs(ch(e) - direct_davis(terms, e)).max() <= 1e-12
    assert all(len(lab) == 2 for lab in ch.labels)


def test_davis_equals_kraus_channel_of_universal_dilation(universal):
    spec, v, ups = universal
    assert channel_distance(davis_channel(decompose_full(P2)), kraus_channel(v, ups)) <= 1e-12


def test_unitality_violation():
    with pytest.raises(UnitalityViolation):
        KrausChannel(np.array([np.eye(2) * 0.5]))


def test_kraus_json_round_trip(minimal):
    _, v, ups = minimal
    ch = kraus_channel(v, ups)
    back = KrausChannel.from_json(ch.to_json())
    assert np.array_equal(back.kraus, ch.kraus)


def test_permutation_automorphism():
    swap = validate_stochastic([[0, 1], [1, 0]])
    u, report = permutation_automorphism(swap, [1, 1j])
    assert report.passed
    assert is_unitary(u)
    with pytest.raises(NotAPermutation):
        permutation_automorphism(P2)


@pytest.mark.parametrize("lo, hi", [(1, 0), (1, 1), (0, 1), (2, 2), (-1, 1)])
def test_J_matches_dense_oracle(minimal, lo, hi):
    spec, v, _ = minimal
    rng = np.random.default_rng(abs(lo * 10 + hi))
    a = WindowOperator(random_operator(rng, spec.n * spec.gsize ** (hi - lo + 1)),
                       spec.n, spec.gsize, lo, hi)
    got = automorphism_J(v, a)
    # right shift, then widen to cover coordinate 1
    b = a.shifted(1).extend(1, 1) if a.width else WindowOperator(
        np.kron(a.matrix, np.eye(spec.gsize)), spec.n, spec.gsize, 1, 1)
    v1 = dense_v1(v.matrix, spec.n, spec.gsize, b.lo, b.hi)
    assert (got.lo, got.hi) == (b.lo, b.hi)
    assert np.abs(got.matrix - v1.conj().T @ b.matrix @ v1).max() <= 1e-12


def test_J_is_a_star_homomorphism_with_inverse(minimal):
    spec, v, _ = minimal
    rng = np.random.default_rng(1)
    d = spec.n * spec.gsize
    a = WindowOperator(random_operator(rng, d), spec.n, spec.gsize, 0, 0)
    b = WindowOperator(random_operator(rng, d), spec.n, spec.gsize, 0, 0)
    assert automorphism_J(v, a @ b).distance(automorphism_J(v, a) @ automorphism_J(v, b)) < 1e-12
    assert automorphism_J(v, a.dagger()).distance(automorphism_J(v, a).dagger()) < 1e-12
    assert automorphism_J_inverse(v, automorphism_J(v, a)).distance(a) < 1e-12
    assert automorphism_power(v, automorphism_power(v, a, 2), -2).distance(a) < 1e-12


@pytest.mark.parametrize("t", [1, 2, 3])
def test_flow_equals_J_power_and_averages_to_semigroup(minimal, t):
    spec, v, ups = minimal
    a = random_operator(np.random.default_rng(t), spec.n)
    jt, dev = flow(v, ups, a, t)
    assert dev <= 1e-12
    powered = automorphism_power(v, WindowOperator.system(a, spec.gsize), t)
    assert (powered.lo, powered.hi) == (1, t)
    assert np.abs(powered.matrix - jt.matrix).max() <= 1e-12
    expected = heisenberg_apply(kraus_channel(v, ups), a, t)
    assert np.abs(conditional_expectation(jt, ups) - expected).max() <= 1e-12


def test_evolved_window():
    assert evolved_window(1, 0, 2) == (1, 2)
    assert evolved_window(-2, -1, 1) == (-1, 1)
    assert evolved_window(-2, -1, 3) == (1, 3)


def indicator_family(n, g, lo, hi):
    for i in range(n):
        for cfg in itertools.product(range(g), repeat=hi - lo + 1):
            yield DiagonalObservable.indicator(n, g, lo, hi, i, dict(zip(range(lo, hi + 1), cfg)))


@pytest.mark.parametrize("lo, hi, t", [(0, 0, 1), (1, 1, 2), (-1, 0, 2), (0, 1, 1)])
def test_cqd1_indicators(minimal, lo, hi, t):
    spec, v, _ = minimal
    family = list(indicator_family(spec.n, spec.gsize, lo, hi))
    report = check_cqd1(spec.coupling, v, family, t)
    assert report.passed, report.summary()


def test_cqd1_detects_wrong_coupling(minimal):
    spec, v, _ = minimal
    other = build_unitary(dilate(validate_stochastic([[0, 1], [1, 0]]), MINIMAL).coupling)
    family = list(indicator_family(spec.n, spec.gsize, 0, 0))
    if other.gsize == spec.gsize and not np.array_equal(other.perm, v.perm):
        assert not check_cqd1(spec.coupling, other, family, 1).passed


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cqd2_random_polynomials(seed):
    spec = dilate(P2, MINIMAL)
    v, ups = build_unitary(spec.coupling), build_env_vector(spec.q_at(1))
    rng = np.random.default_rng(seed)
    obs = [DiagonalObservable(rng.normal(size=spec.n * spec.gsize), spec.n, spec.gsize, m, m)
           for m in (0, 1)]
    eta = {tuple(rng.integers(0, 2, size=2)): complex(*rng.normal(size=2)) for _ in range(3)}
    times = [int(s) for s in rng.integers(1, 3, size=2)]  # common window stays within [1, 3]
    for k in range(spec.n):
        report = check_cqd2(spec, v, ups, k, obs, eta, times)
        assert report.passed, report.summary()


def test_multiplication_operator():
    assert np.array_equal(multiplication_operator([1, 2]), np.diag([1, 2]))
