import functools
import itertools
import random
from fractions import Fraction

import pytest

from conftest import FIXTURE_NAMES, structure
from oracles import (oracle_coproduct, oracle_mul, solve_linear, straighten,
                     symmetrize_brute, word_of_mono)
from quasiquant.enveloping_pbw import (PBWAlgebra, SymmetricSplitting, UElement, UTensor,
                                       pbw_basis_size, sigma_mono, u_coproduct, u_counit,
                                       u_multiply)
from quasiquant.errors import ConfigurationError
from quasiquant.quasi_lie import build_double


@functools.lru_cache(maxsize=None)
def double_alg(name):
    D = build_double(structure(name))
    return PBWAlgebra(D.p, D.n)


def random_mono(rng, m, max_deg):
    d = rng.randint(0, max_deg)
    out = [0] * m
    for _ in range(d):
        out[rng.randrange(m)] += 1
    return tuple(out)


def test_basis_size():
    alg = double_alg("F3")
    assert sum(1 for _ in alg.monomials_up_to(3)) == pbw_basis_size(6, 3)


@pytest.mark.parametrize("name", ["F1", "F2", "F3"])
def test_products_match_straightening_oracle(name):
    alg = double_alg(name)
    rng = random.Random(7)
    for _ in range(60):
        a, b = random_mono(rng, alg.m, 3), random_mono(rng, alg.m, 3)
        assert alg.mul_mono(a, b) == oracle_mul(alg.lie, a, b)


def test_pbw_associativity_500_triples():
    alg = double_alg("F3")
    rng = random.Random(2024)
    deg = 6
    for _ in range(500):
        xs = [UElement(alg, 1, {random_mono(rng, alg.m, 2): 1}, degree=deg) for _ in range(3)]
        left = u_multiply(u_multiply(xs[0], xs[1]), xs[2])
        right = u_multiply(xs[0], u_multiply(xs[1], xs[2]))
        assert left == right
        assert not left.overflow and not right.overflow


def test_degree_cap_sets_overflow():
    alg = double_alg("F1")
    x = UElement(alg, 1, {alg.gen(0): 1}, degree=1)
    assert (x * x).overflow


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_coproduct_matches_oracle(name):
    alg = double_alg(name)
    for m in alg.monomials_up_to(3):
        assert alg.coproduct_mono(m) == oracle_coproduct(alg.lie, m)


@pytest.mark.parametrize("name", ["F2", "F3"])
def test_coassociativity_counit_and_multiplicativity(name):
    alg = double_alg(name)
    rng = random.Random(5)
    for m in alg.monomials_up_to(3):
        x = UElement(alg, 1, {m: 1}, degree=None)
        d = u_coproduct(x)
        assert d.coproduct_on_leg(0) == d.coproduct_on_leg(1)
        assert d.counit_on_leg(0) == x and d.counit_on_leg(1) == x
    for _ in range(30):
        a = UElement(alg, 1, {random_mono(rng, alg.m, 2): 1}, degree=None)
        b = UElement(alg, 1, {random_mono(rng, alg.m, 2): 1}, degree=None)
        assert u_coproduct(a * b) == u_coproduct(a) * u_coproduct(b)
        assert u_counit(a * b) == u_counit(a) * u_counit(b)


@pytest.mark.parametrize("name", ["F1", "F3"])
def test_antipode(name):
    alg = double_alg(name)
    for m in alg.monomials_up_to(3):
        if not any(m):
            continue
        x = UElement(alg, 1, {m: 1}, degree=None)
        d = u_coproduct(x)
        # m o (S (x) id) o Delta = eps
        acc = UElement(alg, 1, {}, degree=None)
        for (l, r), c in d.terms.items():
            sl = UElement(alg, 1, alg.antipode_mono(l), degree=None)
            acc = acc + (sl * UElement(alg, 1, {r: 1}, degree=None)) * c
        assert acc.is_zero()


@pytest.mark.parametrize("name", ["F1", "F3"])
def test_sigma_matches_brute_force(name):
    alg = double_alg(name)
    for m in alg.monomials_up_to(4, star_only=True):
        assert sigma_mono(alg, m) == symmetrize_brute(alg.lie, m)
    for m in alg.monomials_up_to(3):
        assert sigma_mono(alg, m) == symmetrize_brute(alg.lie, m)


def _f0_by_basis_change(alg, b, degree):
    """Write e*^b in the basis e_g^a sigma(e*^c) by a linear solve; keep the c = 0 part."""
    basis = []
    for a in alg.monomials_up_to(degree, g_only=True):
        for c in alg.monomials_up_to(degree, star_only=True):
            if sum(a) + sum(c) > degree:
                continue
            vec = {}
            for w, x in symmetrize_brute(alg.lie, c).items():
                for k, y in straighten(word_of_mono(a) + word_of_mono(w), _br(alg)).items():
                    key = tuple(k.count(i) for i in range(alg.m))
                    vec[key] = vec.get(key, 0) + x * y
            basis.append(((a, c), vec))
    monos = list(alg.monomials_up_to(degree))
    rows = [[vec.get(mm, Fraction(0)) for _, vec in basis] for mm in monos]
    rhs = [Fraction(1) if mm == b else Fraction(0) for mm in monos]
    sol = solve_linear(rows, rhs)
    return {a: s for ((a, c), _), s in zip(basis, sol) if s and not any(c)}


def _br(alg):
    L = alg.lie
    pos = {x: i for i, x in enumerate(L.letters)}
    return lambda i, j: {pos[x]: c for x, c in L.bracket(L.letters[i], L.letters[j]).items()}


def test_f0_matches_basis_change_oracle():
    alg = double_alg("F3")
    split = SymmetricSplitting(alg)
    for b in alg.monomials_up_to(2, star_only=True):
        assert split.f0_star(b) == _f0_by_basis_change(alg, b, 2)


def test_f0_sl2_value():
    # e^1 e^2 = sigma(e^1 e^2) + 1/2 [e^1, e^2] and [e^1, e^2] = -1/4 e3
    alg = double_alg("F3")
    b = (0, 0, 0, 1, 1, 0)
    assert SymmetricSplitting(alg).f0_star(b) == {(0, 0, 1, 0, 0, 0): Fraction(-1, 8)}


def test_utensor_leg_operations():
    alg = double_alg("F1")
    x = UTensor(alg, 2, 2, {(alg.gen(0), alg.gen(1)): 1})
    assert x.permute_legs((2, 1)).permute_legs((2, 1)) == x
    assert x.insert_legs((1, 3), 3).terms == {(alg.gen(0), alg.unit, alg.gen(1)): x.terms[(alg.gen(0), alg.gen(1))]}
    with pytest.raises(ConfigurationError):
        UTensor(alg, 2, 2, {(alg.gen(0),): 1})
