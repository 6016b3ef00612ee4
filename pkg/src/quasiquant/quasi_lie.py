"""Lie algebras, quasi-Lie bialgebras, classical twisting and the double.

Structure constants are indexed by letter positions: for a Lie algebra with
letters (x_1, ..., x_m), ``c[i][j][k]`` is the coefficient of x_k in [x_i, x_j]
(0-based array, 1-based letters). For g the letters are e1..en; for the
double p they are e1..en, e^1..e^n in that order.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Sequence

from .errors import InputError, InternalConsistencyError
from .report import Report
from .tensor_space import (BasisIndex, SparseTensor, Space, alt, e, es,
                           insert_legs, is_antisymmetric, is_symmetric, pair,
                           permute_legs)

Vec = Dict[BasisIndex, Fraction]


def _add_into(acc: dict, key, c):
    v = acc.get(key, 0) + c
    if v:
        acc[key] = v
    else:
        acc.pop(key, None)


class LieAlgebra:
    def __init__(self, letters: Sequence[BasisIndex], c: Sequence[Sequence[Sequence]]):
        self.letters = tuple(letters)
        self.position = {a: i for i, a in enumerate(self.letters)}
        m = len(self.letters)
        if len(c) != m or any(len(row) != m for row in c) or any(
                len(v) != m for row in c for v in row):
            raise InputError(f"structure constants must be a {m}x{m}x{m} array")
        self.c = [[[Fraction(x) for x in v] for v in row] for row in c]
        for i in range(m):
            for j in range(m):
                for k in range(m):
                    if self.c[i][j][k] != -self.c[j][i][k]:
                        raise InputError(
                            f"bracket not antisymmetric at [{self.letters[i]},{self.letters[j]}]")
        self._table = {}
        for i, a in enumerate(self.letters):
            for j, b in enumerate(self.letters):
                v = {self.letters[k]: x for k, x in enumerate(self.c[i][j]) if x}
                if v:
                    self._table[(a, b)] = v

    @classmethod
    def from_brackets(cls, letters: Sequence[BasisIndex], brackets: Dict[tuple, Vec]) -> "LieAlgebra":
        """Build from {(a, b): {x: coeff}}; the reversed bracket is filled in."""
        letters = tuple(letters)
        pos = {a: i for i, a in enumerate(letters)}
        m = len(letters)
        c = [[[Fraction(0)] * m for _ in range(m)] for _ in range(m)]
        for (a, b), v in brackets.items():
            if a == b or (b, a) in brackets:
                raise InputError(f"bracket [{a},{b}] must be given once, for distinct letters")
            for x, coeff in v.items():
                c[pos[a]][pos[b]][pos[x]] += Fraction(coeff)
                c[pos[b]][pos[a]][pos[x]] -= Fraction(coeff)
        return cls(letters, c)

    @classmethod
    def abelian(cls, letters: Sequence[BasisIndex]) -> "LieAlgebra":
        m = len(letters)
        return cls(letters, [[[0] * m for _ in range(m)] for _ in range(m)])

    @property
    def dim(self) -> int:
        return len(self.letters)

    def bracket(self, a: BasisIndex, b: BasisIndex) -> Vec:
        return self._table.get((a, b), {})

    def bracket_vec(self, x: Vec, y: Vec) -> Vec:
        out: Vec = {}
        for a, ca in x.items():
            for b, cb in y.items():
                for z, cz in self.bracket(a, b).items():
                    _add_into(out, z, ca * cb * cz)
        return out

    def is_abelian(self) -> bool:
        return not self._table

    def __repr__(self):
        return f"LieAlgebra(dim={self.dim})"


def vec_to_tensor(v: Vec) -> SparseTensor:
    return SparseTensor(1, {(a,): c for a, c in v.items()})


def g_letters(n: int) -> tuple:
    return tuple(e(i) for i in range(1, n + 1))


def p_letters(n: int) -> tuple:
    return g_letters(n) + tuple(es(i) for i in range(1, n + 1))


# ---------------------------------------------------------------- tensors

def ad_tensor(L: LieAlgebra, x: BasisIndex, T: SparseTensor) -> SparseTensor:
    """[x(x)1(x)..(x)1 + ... + 1(x)..(x)x, T] for T in p^{(x)k}."""
    pairs = []
    for w, c in T.items():
        for leg, a in enumerate(w):
            if a is None:
                continue
            for z, cz in L.bracket(x, a).items():
                pairs.append((w[:leg] + (z,) + w[leg + 1:], c * cz))
    return SparseTensor.from_pairs(T.legs, pairs)


def tensor_commutator(L: LieAlgebra, A: SparseTensor, B: SparseTensor) -> SparseTensor:
    """AB - BA in U(L)^{(x)k} for tensors whose words overlap in at most one leg.

    Words are letters or units per leg; with one shared leg the commutator is
    again a letter word, so the result stays in L^{(x)k} (with units).
    """
    if A.legs != B.legs:
        raise InputError("commutator of tensors with different leg counts")
    pairs = []
    for wa, ca in A.items():
        for wb, cb in B.items():
            shared = [i for i in range(A.legs) if wa[i] is not None and wb[i] is not None]
            if not shared:
                continue
            if len(shared) > 1:
                raise InputError("tensor commutator needs words sharing at most one leg")
            q = shared[0]
            base = tuple(wa[i] if wa[i] is not None else wb[i] for i in range(A.legs))
            for z, cz in L.bracket(wa[q], wb[q]).items():
                pairs.append((base[:q] + (z,) + base[q + 1:], ca * cb * cz))
    return SparseTensor.from_pairs(A.legs, pairs)


def cyb(L: LieAlgebra, r: SparseTensor) -> SparseTensor:
    """[r12, r13] + [r12, r23] + [r13, r23]."""
    r12 = insert_legs(r, (1, 2), 3)
    r13 = insert_legs(r, (1, 3), 3)
    r23 = insert_legs(r, (2, 3), 3)
    return (tensor_commutator(L, r12, r13) + tensor_commutator(L, r12, r23)
            + tensor_commutator(L, r13, r23))


def check_jacobi(L: LieAlgebra) -> Report:
    rep = Report("jacobi")
    for a, b, c in itertools.combinations(L.letters, 3):
        x, y, z = {a: Fraction(1)}, {b: Fraction(1)}, {c: Fraction(1)}
        total: Vec = {}
        for u, v, w in ((x, y, z), (y, z, x), (z, x, y)):
            for k, coeff in L.bracket_vec(u, L.bracket_vec(v, w)).items():
                _add_into(total, k, coeff)
        rep.add(f"jacobi({a},{b},{c})", not total, vec_to_tensor(total))
    return rep


def check_invariant(L: LieAlgebra, t: SparseTensor) -> Report:
    rep = Report("invariance")
    for x in L.letters:
        d = ad_tensor(L, x, t)
        rep.add(f"ad({x})", d.is_zero(), d)
    return rep


# ---------------------------------------------------------------- quasi-Lie bialgebras

@dataclass
class QuasiLieBialgebra:
    base: LieAlgebra
    delta: List[List[List[Fraction]]]  # delta[i][j][k]: coefficient of x_j (x) x_k in delta(x_i)
    phi: SparseTensor

    def __post_init__(self):
        m = self.base.dim
        d = self.delta
        if len(d) != m or any(len(r) != m for r in d) or any(len(v) != m for r in d for v in r):
            raise InputError(f"cobracket must be a {m}x{m}x{m} array")
        self.delta = [[[Fraction(x) for x in v] for v in r] for r in d]
        if self.phi.legs != 3:
            raise InputError("phi must have three legs")

    @property
    def letters(self):
        return self.base.letters

    def delta_of(self, x: BasisIndex) -> SparseTensor:
        i = self.base.position[x]
        L = self.letters
        return SparseTensor(2, {(L[j], L[k]): c
                                for j, row in enumerate(self.delta[i])
                                for k, c in enumerate(row) if c})

    def delta_vec(self, v: Vec) -> SparseTensor:
        out = SparseTensor.zero(2)
        for a, c in v.items():
            out = out + self.delta_of(a).scale(c)
        return out

    def delta_on_leg(self, T: SparseTensor, leg: int) -> SparseTensor:
        """Apply delta to leg ``leg`` (0-based), producing one extra leg."""
        pairs = []
        for w, c in T.items():
            for (u, v), cd in self.delta_of(w[leg]).items():
                pairs.append((w[:leg] + (u, v) + w[leg + 1:], c * cd))
        return SparseTensor.from_pairs(T.legs + 1, pairs)

    @classmethod
    def from_tensors(cls, base: LieAlgebra, deltas: Dict[BasisIndex, SparseTensor],
                     phi: SparseTensor) -> "QuasiLieBialgebra":
        m = base.dim
        arr = [[[Fraction(0)] * m for _ in range(m)] for _ in range(m)]
        for x, T in deltas.items():
            i = base.position[x]
            for (a, b), c in T.items():
                arr[i][base.position[a]][base.position[b]] += c
        return cls(base, arr, phi)

    def same_structure(self, other: "QuasiLieBialgebra") -> bool:
        return (self.letters == other.letters and self.base.c == other.base.c
                and self.delta == other.delta and self.phi == other.phi)


def check_quasi_lie(Q: QuasiLieBialgebra) -> Report:
    L = Q.base
    rep = Report("quasi-Lie bialgebra axioms")
    rep.extend(check_jacobi(L))
    for x in L.letters:
        d = Q.delta_of(x)
        rep.add(f"delta({x}) antisymmetric", is_antisymmetric(d), d + permute_legs(d, (2, 1)))
    rep.add("phi antisymmetric", is_antisymmetric(Q.phi), Q.phi)
    # cocycle: delta([x,y]) = [x, delta y] - [y, delta x]
    for x, y in itertools.combinations(L.letters, 2):
        lhs = Q.delta_vec(L.bracket(x, y))
        rhs = ad_tensor(L, x, Q.delta_of(y)) - ad_tensor(L, y, Q.delta_of(x))
        rep.add(f"cocycle({x},{y})", lhs == rhs, lhs - rhs)
    # 1/2 Alt (delta (x) id) delta(x) = [x(x)1(x)1 + ..., phi]
    for x in L.letters:
        lhs = alt(Q.delta_on_leg(Q.delta_of(x), 0)).scale(Fraction(1, 2))
        rhs = ad_tensor(L, x, Q.phi)
        rep.add(f"co-Jacobi({x})", lhs == rhs, lhs - rhs)
    d = alt(Q.delta_on_leg(Q.phi, 0))
    rep.add("Alt(delta(x)id(x)id)phi = 0", d.is_zero(), d)
    return rep


def twist_qlie(Q: QuasiLieBialgebra, f: SparseTensor) -> QuasiLieBialgebra:
    """delta~(x) = delta(x) + [x(x)1 + 1(x)x, f];  phi~ = phi + 1/2 Alt((delta(x)id) f) - CYB(f)."""
    if f.legs != 2 or not is_antisymmetric(f):
        raise InputError("twist must be an antisymmetric 2-tensor")
    L = Q.base
    deltas = {x: Q.delta_of(x) + ad_tensor(L, x, f) for x in L.letters}
    phi = Q.phi + alt(Q.delta_on_leg(f, 0)).scale(Fraction(1, 2)) - cyb(L, f)
    return QuasiLieBialgebra.from_tensors(L, deltas, phi)


def bracket_12_23(L: LieAlgebra, t: SparseTensor) -> SparseTensor:
    return tensor_commutator(L, insert_legs(t, (1, 2), 3), insert_legs(t, (2, 3), 3))


def from_invariant_pair(L: LieAlgebra, t: SparseTensor) -> QuasiLieBialgebra:
    """delta = 0, phi = 1/4 [t12, t23]."""
    if t.legs != 2 or not is_symmetric(t):
        raise InputError("t must be a symmetric 2-tensor")
    inv = check_invariant(L, t)
    if not inv.passed:
        raise InputError("t is not invariant", )
    m = L.dim
    zero = [[[Fraction(0)] * m for _ in range(m)] for _ in range(m)]
    return QuasiLieBialgebra(L, zero, bracket_12_23(L, t).scale(Fraction(1, 4)))


def zero_structure(L: LieAlgebra) -> QuasiLieBialgebra:
    m = L.dim
    return QuasiLieBialgebra(L, [[[Fraction(0)] * m for _ in range(m)] for _ in range(m)],
                             SparseTensor.zero(3))


# ---------------------------------------------------------------- the double

@dataclass
class DoubleData:
    g: QuasiLieBialgebra
    p: LieAlgebra
    omega: SparseTensor
    f_std: SparseTensor
    report: Report

    @property
    def n(self) -> int:
        return self.g.base.dim

    @property
    def r(self) -> SparseTensor:
        """e_i (x) e^i = omega/2 + f_std."""
        return SparseTensor(2, {(e(i), es(i)): Fraction(1) for i in range(1, self.n + 1)})


def scalar_product(a: BasisIndex, b: BasisIndex) -> Fraction:
    """Symmetric pairing on p = g + g*."""
    if a.space == Space.GSTAR:
        return pair(a, b)
    if b.space == Space.GSTAR:
        return pair(b, a)
    return Fraction(0)


def _vec_product(x: Vec, y: Vec) -> Fraction:
    return sum((cx * cy * scalar_product(a, b) for a, cx in x.items() for b, cy in y.items()),
               Fraction(0))


def double_brackets(Q: QuasiLieBialgebra) -> LieAlgebra:
    n = Q.base.dim
    c = Q.base.c  # c[i][j][k] = c^k_{ij}
    d = Q.delta   # d[i][j][k] = delta^{jk}_i
    phi = {tuple(a.index - 1 for a in w): coeff for w, coeff in Q.phi.items()}
    m = 2 * n
    C = [[[Fraction(0)] * m for _ in range(m)] for _ in range(m)]
    G = lambda i: i          # noqa: E731  position of e_i
    S = lambda i: n + i      # noqa: E731  position of e^i
    for i in range(n):
        for j in range(n):
            for k in range(n):
                C[G(i)][G(j)][G(k)] = c[i][j][k]
                # [e^i, e^j] = delta^{ij}_k e^k - phi^{ijl} e_l
                C[S(i)][S(j)][S(k)] = d[k][i][j]
                C[S(i)][S(j)][G(k)] = -phi.get((i, j, k), Fraction(0))
                # [e_i, e^j] = c^j_{ki} e^k + delta^{jl}_i e_l
                C[G(i)][S(j)][S(k)] = c[k][i][j]
                C[G(i)][S(j)][G(k)] = d[i][j][k]
                C[S(j)][G(i)][S(k)] = -c[k][i][j]
                C[S(j)][G(i)][G(k)] = -d[i][j][k]
    return LieAlgebra(p_letters(n), C)


def build_double(Q: QuasiLieBialgebra) -> DoubleData:
    n = Q.base.dim
    P = double_brackets(Q)
    omega = SparseTensor.from_pairs(2, [((e(i), es(i)), Fraction(1)) for i in range(1, n + 1)]
                                    + [((es(i), e(i)), Fraction(1)) for i in range(1, n + 1)])
    f_std = SparseTensor.from_pairs(
        2, [((e(i), es(i)), Fraction(1, 2)) for i in range(1, n + 1)]
        + [((es(i), e(i)), Fraction(-1, 2)) for i in range(1, n + 1)])
    rep = Report("double")
    rep.extend(check_jacobi(P))
    rep.add("omega symmetric", is_symmetric(omega), omega - permute_legs(omega, (2, 1)))
    rep.extend(check_invariant(P, omega), "omega ")
    for a, b, cc in itertools.product(P.letters, repeat=3):
        lhs = _vec_product(P.bracket(a, b), {cc: Fraction(1)})
        rhs = _vec_product({a: Fraction(1)}, P.bracket(b, cc))
        if lhs != rhs:
            rep.add(f"scalar product invariant ({a},{b},{cc})", False,
                    SparseTensor(3, {(a, b, cc): lhs - rhs}))
    if not any(ch.name.startswith("scalar product") for ch in rep.checks):
        rep.add("scalar product invariant", True)
    if not rep.passed:
        raise InternalConsistencyError("double construction failed verification", rep)
    return DoubleData(Q, P, omega, f_std, rep)


def embed_in_double(T: SparseTensor) -> SparseTensor:
    """g-letter tensors are already p-letter tensors; kept for readability at call sites."""
    return T


def verify_sub_structure(Q: QuasiLieBialgebra) -> Report:
    """Twist the structure associated to (p, omega) by f_std and compare on g."""
    rep = Report("sub-quasi-Lie bialgebra of the twisted double")
    D = build_double(Q)
    assoc = from_invariant_pair(D.p, D.omega)
    twisted = twist_qlie(assoc, D.f_std)
    for x in Q.letters:
        got = twisted.delta_of(x)
        want = Q.delta_of(x)
        rep.add(f"delta'({x}) = delta({x})", got == want, got - want)
    rep.add("phi' = phi", twisted.phi == Q.phi, twisted.phi - Q.phi)
    return rep
