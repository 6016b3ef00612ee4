"""Small named algebras used by the tests, the acceptance run and the CLI."""
from __future__ import annotations

from fractions import Fraction

from .quasi_lie import (LieAlgebra, QuasiLieBialgebra, from_invariant_pair,
                        g_letters, zero_structure)
from .tensor_space import SparseTensor, e


def abelian(n: int = 2) -> QuasiLieBialgebra:
    """F0."""
    return zero_structure(LieAlgebra.abelian(g_letters(n)))


def borel_lie() -> LieAlgebra:
    return LieAlgebra.from_brackets(g_letters(2), {(e(1), e(2)): {e(2): 1}})


def borel() -> QuasiLieBialgebra:
    """F1: [e1, e2] = e2 with zero cobracket."""
    return zero_structure(borel_lie())


def borel_bialgebra() -> QuasiLieBialgebra:
    """F2: [e1, e2] = e2, delta(e2) = e1^e2."""
    L = borel_lie()
    deltas = {e(2): SparseTensor(2, {(e(1), e(2)): Fraction(1), (e(2), e(1)): Fraction(-1)})}
    return QuasiLieBialgebra.from_tensors(L, deltas, SparseTensor.zero(3))


def sl2_lie() -> LieAlgebra:
    """Basis e1 = h, e2 = e, e3 = f."""
    h, x, y = e(1), e(2), e(3)
    return LieAlgebra.from_brackets(g_letters(3), {
        (h, x): {x: 2},
        (h, y): {y: -2},
        (x, y): {h: 1},
    })


def sl2_casimir() -> SparseTensor:
    h, x, y = e(1), e(2), e(3)
    return SparseTensor(2, {(h, h): Fraction(1, 2), (x, y): Fraction(1), (y, x): Fraction(1)})


def sl2_quasi() -> QuasiLieBialgebra:
    """F3: sl2 with delta = 0 and phi = 1/4 [t12, t23] for the Casimir."""
    return from_invariant_pair(sl2_lie(), sl2_casimir())


def broken_jacobi() -> LieAlgebra:
    """[e1,e2] = e3, [e1,e3] = e1: antisymmetric but Jacobi fails on (e1,e2,e3)."""
    return LieAlgebra.from_brackets(g_letters(3), {
        (e(1), e(2)): {e(3): 1},
        (e(1), e(3)): {e(1): 1},
    })


FIXTURES = {
    "F0": abelian,
    "F1": borel,
    "F2": borel_bialgebra,
    "F3": sl2_quasi,
}
