import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from clusterkin.analytics import f_mass
from clusterkin.trees import (
    LabelledTree,
    cayley_count,
    enumerate_gamma,
    enumerate_trees,
    prufer_decode,
    prufer_encode,
    quadrature_oracle_f,
)


@st.composite
def prufer_codes(draw):
    k = draw(st.integers(min_value=2, max_value=40))
    code = draw(st.lists(st.integers(1, k), min_size=k - 2, max_size=k - 2))
    return k, tuple(code)


def test_cayley_counts():
    assert [cayley_count(k) for k in range(1, 6)] == [1, 1, 3, 16, 125]
    assert cayley_count(100) == 100**98


def test_known_decoding():
    tree = prufer_decode((4, 4, 4, 5), 6)
    assert tree.edges == frozenset({(1, 4), (2, 4), (3, 4), (4, 5), (5, 6)})
    assert tree.degree(4) == 4


@given(prufer_codes())
def test_prufer_round_trip(case):
    k, code = case
    tree = prufer_decode(code, k)
    assert prufer_encode(tree) == code
    # the decoded tree passes full validation
    assert LabelledTree(k, tree.edges) == tree


@given(prufer_codes())
def test_degree_is_one_plus_code_multiplicity(case):
    k, code = case
    tree = prufer_decode(code, k)
    for v in range(1, k + 1):
        assert tree.degree(v) == 1 + code.count(v)


def test_enumeration_small():
    assert list(enumerate_trees(1)) == [LabelledTree(1, frozenset())]
    trees = list(enumerate_trees(4))
    assert len(set(trees)) == 16


def test_invalid_trees_rejected():
    with pytest.raises(ValueError):
        LabelledTree.from_pairs(3, [(1, 2), (1, 2)])
    with pytest.raises(ValueError):
        LabelledTree.from_pairs(4, [(1, 2), (2, 3), (1, 3)])
    with pytest.raises(ValueError):
        LabelledTree.from_pairs(3, [(1, 2), (2, 4)])
    with pytest.raises(ValueError):
        prufer_decode((5,), 3)
    with pytest.raises(ValueError):
        enumerate_trees(12).__next__()


def test_gamma_sequences():
    assert list(enumerate_gamma(0)) == [()]
    assert list(enumerate_gamma(3)) == [(1, 1, 1), (1, 1, 2), (1, 1, 3), (1, 2, 1), (1, 2, 2), (1, 2, 3)]
    for n in range(1, 8):
        seqs = list(enumerate_gamma(n))
        assert len(seqs) == len(set(seqs)) == math.factorial(n)
        assert all(1 <= s[r] <= r + 1 for s in seqs for r in range(n))


@pytest.mark.parametrize("k", [2, 3, 4, 5])
@pytest.mark.parametrize("t", [0.3, 1.0, 2.0])
def test_quadrature_oracle_matches_closed_form(k, t):
    assert quadrature_oracle_f(k, t) == pytest.approx(float(f_mass(k, t)), rel=1e-6)


def test_quadrature_oracle_domain():
    with pytest.raises(ValueError):
        quadrature_oracle_f(6, 1.0)
    with pytest.raises(ValueError):
        quadrature_oracle_f(1, 1.0)
