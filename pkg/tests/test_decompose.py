import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markov_dilations.decompose import (ConvexDecomposition, decompose_full, decompose_greedy,
                                        greedy_steps, label_of_map, map_from_label, recombine)
from markov_dilations.errors import LabelOutOfRange, LabelSpaceTooLarge
from markov_dilations.model import det_matrix, validate_stochastic

from oracles import all_maps, product_formula_weight, random_stochastic

P2 = validate_stochastic([[0.7, 0.3], [0.4, 0.6]])
IDENTITY, SWAP, CONST0, CONST1 = 1, 2, 0, 3  # labels for N = 2


@pytest.mark.parametrize("label, table", [(1, (0, 1)), (2, (1, 0)), (0, (0, 0)), (3, (1, 1))])
def test_map_from_label(label, table):
    assert map_from_label(label, 2).table == table
    assert label_of_map(table) == label


def test_label_out_of_range():
    with pytest.raises(LabelOutOfRange):
        map_from_label(4, 2)
    with pytest.raises(LabelOutOfRange):
        map_from_label(-1, 3)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_label_round_trip_exhaustive(n):
    for label in range(n**n):
        assert label_of_map(map_from_label(label, n)) == label
    # lexicographic order of tables matches label order
    assert [label_of_map(t) for t in all_maps(n)] == list(range(n**n))


def test_full_uniform():
    dec = decompose_full(validate_stochastic([[0.5, 0.5], [0.5, 0.5]]))
    np.testing.assert_allclose(dec.weights, [0.25] * 4, atol=0)
    assert dec.mode == "full"


def test_full_identity():
    dec = decompose_full(validate_stochastic(np.eye(2)))
    assert dec.weights.tolist() == [0.0, 1.0, 0.0, 0.0]


def test_full_product_formula_values():
    dec = decompose_full(P2)
    np.testing.assert_allclose(dec.weights, [0.28, 0.42, 0.12, 0.18], atol=1e-15)
    assert len(dec) == 4


def test_full_cap():
    with pytest.raises(LabelSpaceTooLarge):
        decompose_full(validate_stochastic(np.eye(4)), cap=100)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_full_weights_match_independent_product(n):
    rng = np.random.default_rng(n)
    p = random_stochastic(rng, n)
    dec = decompose_full(validate_stochastic(p))
    expected = [product_formula_weight(p, beta) for beta in all_maps(n)]
    np.testing.assert_allclose(dec.weights, expected, rtol=1e-13, atol=0)
    assert abs(dec.weights.sum() - 1) < 1e-10


def test_greedy_hand_run():
    dec = decompose_greedy(P2)
    assert dec.labels.tolist() == [IDENTITY, SWAP, CONST0]
    np.testing.assert_allclose(dec.weights, [0.6, 0.3, 0.1], atol=1e-15)
    assert len(dec) == 2**2 - 2 + 1


def test_greedy_tie_break():
    dec = decompose_greedy(validate_stochastic([[0.5, 0.5], [0.5, 0.5]]))
    assert list(dec) == [(0.5, CONST0), (0.5, CONST1)]


@pytest.mark.parametrize("perm", list(itertools.permutations(range(3))))
def test_greedy_permutation_single_term(perm):
    p = det_matrix(map_from_label(label_of_map(perm), 3))
    dec = decompose_greedy(p)
    assert list(dec) == [(1.0, label_of_map(perm))]


def test_recombine_examples():
    np.testing.assert_allclose(recombine(decompose_full(P2)).entries, P2.entries, atol=1e-12)
    np.testing.assert_allclose(recombine(decompose_greedy(P2)).entries, P2.entries, atol=1e-10)
    single = ConvexDecomposition(2, [1.0], [IDENTITY])
    np.testing.assert_array_equal(recombine(single, 2).entries, np.eye(2))


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**32 - 1), st.sampled_from([0.0, 0.5]))
def test_greedy_steps_zero_an_entry_and_stay_nonnegative(n, seed, sparsity):
    p = random_stochastic(np.random.default_rng(seed), n, sparsity)
    prev = validate_stochastic(p).entries.copy()
    count = 0
    for w, label, resid in greedy_steps(validate_stochastic(p)):
        count += 1
        assert w > 0
        assert np.all(resid >= 0)
        assert np.count_nonzero(resid) < np.count_nonzero(prev)
        prev = resid
    assert count <= n * n - n + 1


def test_decomposition_json_round_trip():
    dec = decompose_greedy(P2)
    obj = dec.to_json()
    assert obj["mode"] == "sparse"
    assert [t["beta"] for t in obj["terms"]] == [[0, 1], [1, 0], [0, 0]]
    back = ConvexDecomposition.from_json(obj)
    assert list(back) == list(dec)


def test_decomposition_invariants_enforced():
    with pytest.raises(ValueError):
        ConvexDecomposition(2, [0.5, 0.4], [0, 1])
    with pytest.raises(ValueError):
        ConvexDecomposition(2, [0.5, 0.5], [1, 1])
    with pytest.raises(ValueError):
        ConvexDecomposition(2, [1.0, 0.0], [1, 2], "sparse")
    ConvexDecomposition(2, [1.0, 0.0], [1, 2], "full")
