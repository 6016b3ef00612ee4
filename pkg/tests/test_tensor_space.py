import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import inversion_sign, permute_word
from quasiquant.errors import ConfigurationError
from quasiquant.tensor_space import (BasisIndex, SparseTensor, alt, compose_perms, e, es,
                                     flip, insert_legs, is_antisymmetric, is_symmetric,
                                     pair, perm_sign, permute_legs)

LETTERS = [e(1), e(2), es(1), es(2)]


def tensors(legs):
    word = st.tuples(*[st.sampled_from(LETTERS)] * legs)
    coeff = st.fractions(min_value=-3, max_value=3, max_denominator=4)
    return st.dictionaries(word, coeff, max_size=5).map(lambda d: SparseTensor(legs, d))


perms3 = st.permutations([1, 2, 3]).map(tuple)


def test_basis_index_parse_and_pairing():
    assert BasisIndex.parse(str(es(3))) == es(3)
    assert BasisIndex.parse(str(e(2))) == e(2)
    assert pair(es(1), e(1)) == 1 and pair(es(1), e(2)) == 0


def test_permute_moves_factor_i_to_slot_sigma_i():
    x = SparseTensor(3, {(e(1), e(2), es(1)): 1})
    assert permute_legs(x, (3, 1, 2)) == SparseTensor(3, {(e(2), es(1), e(1)): 1})


def test_insert_legs_places_units():
    x = SparseTensor(2, {(e(1), e(2)): 2})
    y = insert_legs(x, (1, 3), 3)
    assert y == SparseTensor(3, {(e(1), None, e(2)): 2})
    with pytest.raises(ConfigurationError):
        insert_legs(x, (3, 1), 3)


def test_bad_permutation_rejected():
    with pytest.raises(ConfigurationError):
        permute_legs(SparseTensor.zero(2), (1, 1))


def test_perm_sign_matches_inversion_count():
    for k in range(1, 6):
        for p in itertools.permutations(range(1, k + 1)):
            assert perm_sign(p) == inversion_sign(p)


@given(tensors(3), perms3)
def test_permute_matches_word_oracle(x, sigma):
    want = SparseTensor.from_pairs(3, [(permute_word(w, sigma), c) for w, c in x.items()])
    assert permute_legs(x, sigma) == want


@given(tensors(3), perms3, perms3)
def test_permutation_action_is_a_left_action(x, sigma, tau):
    assert permute_legs(permute_legs(x, tau), sigma) == permute_legs(x, compose_perms(sigma, tau))
    assert permute_legs(x, (1, 2, 3)) == x


@given(tensors(3), perms3)
@settings(max_examples=50)
def test_alt_is_antisymmetric_and_sign_equivariant(x, sigma):
    a = alt(x)
    assert is_antisymmetric(a)
    assert permute_legs(a, sigma) == a.scale(perm_sign(sigma))
    assert alt(a) == a.scale(6)


@given(tensors(2))
def test_flip_involution_and_symmetric_parts(x):
    assert flip(flip(x)) == x
    assert is_symmetric(x + flip(x))
    assert is_antisymmetric(x - flip(x))


@given(tensors(2), tensors(2), st.fractions(max_denominator=5))
def test_linearity(x, y, c):
    sigma = (2, 1)
    assert permute_legs(x + y.scale(c), sigma) == permute_legs(x, sigma) + permute_legs(y, sigma).scale(c)
    assert alt(x + y) == alt(x) + alt(y)


def test_json_round_trip():
    x = SparseTensor(2, {(e(1), es(2)): Fraction(1, 3), (None, e(2)): -1})
    assert SparseTensor.from_json(2, x.to_json()) == x
