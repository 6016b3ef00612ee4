"""Universal enveloping algebras in an ordered PBW basis.

A monomial is a tuple of exponents over the Lie algebra's letters in their
fixed order (for p: e1..en, then e^1..e^n). Products are straightened by
moving the rightmost out-of-order generator left with [x, y] corrections;
results are memoized per (monomial, generator).

Elements of U^{(x)k} are dicts {tuple of k monomials: coefficient}. The
``UElement`` and ``UTensor`` classes wrap these with a truncation degree and
an overflow flag.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Dict, Iterable, Sequence, Tuple

from .errors import ConfigurationError
from .quasi_lie import LieAlgebra
from .scalar_series import HSeries
from .tensor_space import BasisIndex, SparseTensor, Space

Mono = Tuple[int, ...]
DEFAULT_DEGREE = 4


def mono_degree(m: Mono) -> int:
    return sum(m)


def _acc(d: dict, k, c):
    v = d.get(k)
    v = c if v is None else v + c
    if v:
        d[k] = v
    else:
        d.pop(k, None)


class PBWAlgebra:
    """U(L) with straightening over Fractions; ``n_g`` letters form the g-part."""

    def __init__(self, lie: LieAlgebra, n_g: int | None = None):
        self.lie = lie
        self.m = lie.dim
        self.n_g = self.m if n_g is None else n_g
        self.unit: Mono = (0,) * self.m
        # bracket of generator positions as {position: coeff}
        self._br = {}
        for i, a in enumerate(lie.letters):
            for j, b in enumerate(lie.letters):
                v = lie.bracket(a, b)
                if v:
                    self._br[(i, j)] = {lie.position[x]: c for x, c in v.items()}
        self._mg = {}
        self._mm = {}
        self._delta = {}
        self._antipode = {}

    # -------------------------------------------------- basic monomials
    def gen(self, i: int) -> Mono:
        m = [0] * self.m
        m[i] += 1
        return tuple(m)

    def letter_mono(self, a: BasisIndex) -> Mono:
        return self.gen(self.lie.position[a])

    def g_part(self, m: Mono) -> Mono:
        return m[:self.n_g] + (0,) * (self.m - self.n_g)

    def star_part(self, m: Mono) -> Mono:
        return (0,) * self.n_g + m[self.n_g:]

    def is_g_mono(self, m: Mono) -> bool:
        return not any(m[self.n_g:])

    # -------------------------------------------------- products
    def mul_gen(self, m: Mono, j: int) -> Dict[Mono, Fraction]:
        """m * x_j in PBW form."""
        key = (m, j)
        hit = self._mg.get(key)
        if hit is not None:
            return hit
        last = max((i for i, k in enumerate(m) if k), default=-1)
        if last <= j:
            mm = list(m)
            mm[j] += 1
            out = {tuple(mm): Fraction(1)}
        else:
            # m = m' x_last ;  x_last x_j = x_j x_last + [x_last, x_j]
            mp = list(m)
            mp[last] -= 1
            mp = tuple(mp)
            out: Dict[Mono, Fraction] = {}
            for m1, c1 in self.mul_gen(mp, j).items():
                for m2, c2 in self.mul_gen(m1, last).items():
                    _acc(out, m2, c1 * c2)
            for k, ck in self._br.get((last, j), {}).items():
                for m1, c1 in self.mul_gen(mp, k).items():
                    _acc(out, m1, ck * c1)
        self._mg[key] = out
        return out

    def mul_mono(self, a: Mono, b: Mono) -> Dict[Mono, Fraction]:
        key = (a, b)
        hit = self._mm.get(key)
        if hit is not None:
            return hit
        if not any(b):
            out = {a: Fraction(1)}
        elif not any(a):
            out = {b: Fraction(1)}
        else:
            first = next(i for i, k in enumerate(b) if k)
            rest = list(b)
            rest[first] -= 1
            rest = tuple(rest)
            out = {}
            for m1, c1 in self.mul_gen(a, first).items():
                for m2, c2 in self.mul_mono(m1, rest).items():
                    _acc(out, m2, c1 * c2)
        self._mm[key] = out
        return out

    def word(self, letters: Sequence[int]) -> Dict[Mono, Fraction]:
        """Product x_{i1} x_{i2} ... in PBW form."""
        out = {self.unit: Fraction(1)}
        for j in letters:
            nxt: Dict[Mono, Fraction] = {}
            for m, c in out.items():
                for m2, c2 in self.mul_gen(m, j).items():
                    _acc(nxt, m2, c * c2)
            out = nxt
        return out

    # -------------------------------------------------- Hopf structure on monomials
    def coproduct_mono(self, m: Mono) -> Dict[Tuple[Mono, Mono], Fraction]:
        """Delta of an ordered monomial; legs stay ordered so no straightening."""
        hit = self._delta.get(m)
        if hit is not None:
            return hit
        out = {}
        for ks in itertools.product(*(range(a + 1) for a in m)):
            c = 1
            for a, k in zip(m, ks):
                c *= comb(a, k)
            out[(tuple(ks), tuple(a - k for a, k in zip(m, ks)))] = Fraction(c)
        self._delta[m] = out
        return out

    def iterated_coproduct_mono(self, m: Mono, k: int) -> Dict[Tuple[Mono, ...], Fraction]:
        """Delta^{(k)} into k legs (k = 0 gives the counit, k = 1 the identity)."""
        if k == 0:
            return {(): Fraction(1)} if not any(m) else {}
        if k == 1:
            return {(m,): Fraction(1)}
        out = {}
        for splits in itertools.product(*(_compositions(a, k) for a in m)):
            c = 1
            for a, s in zip(m, splits):
                c *= _multinomial(a, s)
            legs = tuple(tuple(s[leg] for s in splits) for leg in range(k))
            out[legs] = Fraction(c)
        return out

    def antipode_mono(self, m: Mono) -> Dict[Mono, Fraction]:
        hit = self._antipode.get(m)
        if hit is not None:
            return hit
        letters = [i for i, a in enumerate(m) for _ in range(a)]
        sign = -1 if len(letters) % 2 else 1
        out = {k: sign * c for k, c in self.word(list(reversed(letters))).items()}
        self._antipode[m] = out
        return out

    def counit_mono(self, m: Mono) -> int:
        return 0 if any(m) else 1

    # -------------------------------------------------- bookkeeping
    def monomials_up_to(self, degree: int, g_only: bool = False, star_only: bool = False):
        lo, hi = 0, self.m
        if g_only:
            hi = self.n_g
        if star_only:
            lo = self.n_g
        width = hi - lo
        for d in range(degree + 1):
            for combo in itertools.combinations_with_replacement(range(width), d):
                m = [0] * self.m
                for i in combo:
                    m[lo + i] += 1
                yield tuple(m)

    def mono_str(self, m: Mono) -> str:
        if not any(m):
            return "1"
        parts = []
        for i, a in enumerate(m):
            if a:
                s = str(self.lie.letters[i])
                parts.append(s if a == 1 else f"{s}^{a}" if "^" not in s else f"({s})^{a}")
        return "*".join(parts)


def _compositions(a: int, k: int):
    if k == 1:
        yield (a,)
        return
    for first in range(a + 1):
        for rest in _compositions(a - first, k - 1):
            yield (first,) + rest


def _multinomial(a: int, parts: Sequence[int]) -> int:
    out = factorial(a)
    for p in parts:
        out //= factorial(p)
    return out


# ====================================================================== elements

class UTensor:
    """Element of U^{(x)k}[h]/h^N: {tuple of monomials: HSeries}.

    ``degree`` caps the PBW degree of every leg (None = no cap); dropped
    terms set ``overflow``.
    """

    __slots__ = ("alg", "legs", "order", "terms", "degree", "overflow")

    def __init__(self, alg: PBWAlgebra, legs: int, order: int, terms=None,
                 degree: int | None = DEFAULT_DEGREE, overflow: bool = False):
        self.alg = alg
        self.legs = legs
        self.order = order
        self.degree = degree
        self.overflow = overflow
        clean = {}
        for k, c in (terms or {}).items():
            if len(k) != legs:
                raise ConfigurationError(f"term {k} does not have {legs} legs")
            if not isinstance(c, HSeries):
                c = HSeries.const(c, order)
            elif c.order != order:
                raise ConfigurationError("series order mismatch")
            if degree is not None and any(sum(m) > degree for m in k):
                if c:
                    self.overflow = True
                continue
            if c:
                _acc(clean, k, c)
        self.terms = clean

    # -------------------------------------------------- constructors
    def _new(self, terms, legs=None, overflow=False) -> "UTensor":
        return UTensor(self.alg, self.legs if legs is None else legs, self.order, terms,
                       self.degree, self.overflow or overflow)

    @classmethod
    def one(cls, alg: PBWAlgebra, legs: int, order: int, degree=DEFAULT_DEGREE) -> "UTensor":
        return cls(alg, legs, order, {(alg.unit,) * legs: HSeries.one(order)}, degree)

    @classmethod
    def zero(cls, alg: PBWAlgebra, legs: int, order: int, degree=DEFAULT_DEGREE) -> "UTensor":
        return cls(alg, legs, order, {}, degree)

    @classmethod
    def from_sparse(cls, alg: PBWAlgebra, T: SparseTensor, order: int,
                    degree=DEFAULT_DEGREE, hbar: int = 0) -> "UTensor":
        """Letter words (with unit legs) times h^hbar."""
        terms = {}
        for w, c in T.items():
            key = tuple(alg.unit if a is None else alg.letter_mono(a) for a in w)
            if isinstance(c, HSeries):
                s = c if hbar == 0 else HSeries.hbar_power(hbar, order) * c
            else:
                s = HSeries.hbar_power(hbar, order, c)
            _acc(terms, key, s)
        return cls(alg, T.legs, order, terms, degree)

    # -------------------------------------------------- arithmetic
    def _compat(self, other: "UTensor"):
        if other.legs != self.legs or other.order != self.order or other.alg is not self.alg:
            raise ConfigurationError("incompatible tensors")

    def __add__(self, other: "UTensor") -> "UTensor":
        self._compat(other)
        terms = dict(self.terms)
        for k, c in other.terms.items():
            _acc(terms, k, c)
        return self._new(terms, overflow=other.overflow)

    def __neg__(self):
        return self._new({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "UTensor":
        return self._new({k: v * c for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, UTensor):
            return u_multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __eq__(self, other):
        if not isinstance(other, UTensor):
            return NotImplemented
        return self.legs == other.legs and self.terms == other.terms

    __hash__ = None

    def is_zero(self) -> bool:
        return not self.terms

    def truncate_hbar(self, order: int) -> "UTensor":
        return UTensor(self.alg, self.legs, order,
                       {k: c.truncate(order) for k, c in self.terms.items()},
                       self.degree, self.overflow)

    def hbar_coefficient(self, k: int) -> Dict[Tuple[Mono, ...], Fraction]:
        return {key: c[k] for key, c in self.terms.items() if c[k]}

    def max_degree(self) -> int:
        return max((sum(sum(m) for m in k) for k in self.terms), default=0)

    # -------------------------------------------------- leg operations
    def permute_legs(self, sigma: Sequence[int]) -> "UTensor":
        """Leg i moves to slot sigma[i-1] (same convention as tensor_space)."""
        if sorted(sigma) != list(range(1, self.legs + 1)):
            raise ConfigurationError(f"{tuple(sigma)} is not a permutation")
        terms = {}
        for k, c in self.terms.items():
            out = [None] * self.legs
            for i, m in enumerate(k):
                out[sigma[i] - 1] = m
            terms[tuple(out)] = c
        return self._new(terms)

    def insert_legs(self, positions: Sequence[int], total: int) -> "UTensor":
        pos = list(positions)
        terms = {}
        for k, c in self.terms.items():
            out = [self.alg.unit] * total
            for p, m in zip(pos, k):
                out[p - 1] = m
            terms[tuple(out)] = c
        return self._new(terms, legs=total)

    def tensor(self, other: "UTensor") -> "UTensor":
        terms = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                _acc(terms, k1 + k2, c1 * c2)
        return self._new(terms, legs=self.legs + other.legs, overflow=other.overflow)

    def apply_on_leg(self, leg: int, fn, new_legs: int) -> "UTensor":
        """Replace leg ``leg`` (0-based) by fn(monomial) -> {tuple of new_legs monomials: Fraction}."""
        terms = {}
        for k, c in self.terms.items():
            for ks, cf in fn(k[leg]).items():
                _acc(terms, k[:leg] + ks + k[leg + 1:], c * cf)
        return self._new(terms, legs=self.legs - 1 + new_legs)

    def coproduct_on_leg(self, leg: int) -> "UTensor":
        return self.apply_on_leg(leg, self.alg.coproduct_mono, 2)

    def counit_on_leg(self, leg: int) -> "UTensor":
        return self.apply_on_leg(leg, lambda m: {(): Fraction(1)} if not any(m) else {}, 0)

    def antipode_on_leg(self, leg: int) -> "UTensor":
        return self.apply_on_leg(
            leg, lambda m: {(k,): c for k, c in self.alg.antipode_mono(m).items()}, 1)

    def to_json(self) -> list:
        out = []
        for k in sorted(self.terms):
            out.append({"word": [self.alg.mono_str(m) for m in k],
                        "coeff": self.terms[k].to_json()})
        return out

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(
            f"({c.to_json()})" + "(x)".join(self.alg.mono_str(m) for m in k)
            for k, c in sorted(self.terms.items()))


def u_multiply(a: UTensor, b: UTensor) -> UTensor:
    """Leg-wise PBW product."""
    a._compat(b)
    alg = a.alg
    deg = a.degree
    terms = {}
    overflow = a.overflow or b.overflow
    for ka, ca in a.terms.items():
        for kb, cb in b.terms.items():
            c = ca * cb
            if not c:
                continue
            parts = [alg.mul_mono(x, y) for x, y in zip(ka, kb)]
            for combo in itertools.product(*(p.items() for p in parts)):
                key = tuple(m for m, _ in combo)
                if deg is not None and any(sum(m) > deg for m in key):
                    overflow = True
                    continue
                f = Fraction(1)
                for _, x in combo:
                    f *= x
                _acc(terms, key, c * f)
    return UTensor(alg, a.legs, a.order, terms, deg, overflow)


def UElement(alg: PBWAlgebra, order: int, terms=None, degree=DEFAULT_DEGREE) -> UTensor:
    """A one-leg element given as {monomial: coefficient}."""
    return UTensor(alg, 1, order, {(m,): c for m, c in (terms or {}).items()}, degree)


def u_coproduct(a: UTensor) -> UTensor:
    if a.legs != 1:
        raise ConfigurationError("u_coproduct expects a one-leg element")
    return a.coproduct_on_leg(0)


def u_counit(a: UTensor) -> HSeries:
    if a.legs != 1:
        raise ConfigurationError("u_counit expects a one-leg element")
    return a.terms.get((a.alg.unit,), HSeries.zero(a.order))


def symmetrize_sigma(alg: PBWAlgebra, poly: Dict[Mono, object], order: int,
                     degree=DEFAULT_DEGREE) -> UTensor:
    """sigma on S(g*): average of all orderings (1/k! included), straightened."""
    terms = {}
    for m, c in poly.items():
        for key, v in sigma_mono(alg, m).items():
            _acc(terms, (key,), HSeries.const(v, order) * (c if isinstance(c, HSeries) else Fraction(c)))
    return UTensor(alg, 1, order, terms, degree)


def sigma_mono(alg: PBWAlgebra, m: Mono) -> Dict[Mono, Fraction]:
    """sigma(x^m) in PBW form: the average over orderings of the letters of m.

    Grouping orderings by their first letter gives
    sigma(m) = sum_j (m_j / |m|) x_j sigma(m - e_j), memoized on the algebra.
    """
    cache = alg.__dict__.setdefault("_sigma", {})
    hit = cache.get(m)
    if hit is not None:
        return hit
    k = sum(m)
    if k <= 1:
        out = {m: Fraction(1)}
    else:
        out = {}
        for j, a in enumerate(m):
            if not a:
                continue
            rest = m[:j] + (a - 1,) + m[j + 1:]
            w = Fraction(a, k)
            for mm, c in sigma_mono(alg, rest).items():
                for mm2, c2 in alg.mul_mono(alg.gen(j), mm).items():
                    _acc(out, mm2, w * c * c2)
    cache[m] = out
    return out


def f0_projection(z: UTensor) -> UTensor:
    """Keep the monomials with no star letters (coordinate projection in the ordered basis)."""
    alg = z.alg
    return z._new({k: c for k, c in z.terms.items() if all(alg.is_g_mono(m) for m in k)})


class SymmetricSplitting:
    """Coordinates of U(p) in the basis e_g^a sigma(e*^b), and the projection f0 built on it.

    For the double of a structure with phi != 0 the star letters do not
    commute, so the ordered star monomials and sigma(e*^b) differ; this class
    performs the triangular change of basis.
    """

    def __init__(self, alg: PBWAlgebra):
        self.alg = alg
        self._f0 = {}

    def f0_star(self, b: Mono) -> Dict[Mono, Fraction]:
        """f0 of the ordered star monomial e*^b, an element of U(g)."""
        hit = self._f0.get(b)
        if hit is not None:
            return hit
        alg = self.alg
        if not any(b):
            out = {alg.unit: Fraction(1)}
        else:
            # e*^b = sigma(e*^b) - (sigma(e*^b) - e*^b); f0(sigma(...)) = 0 for positive degree
            out = {}
            rest = dict(sigma_mono(alg, b))
            _acc(rest, b, Fraction(-1))
            for m, c in rest.items():
                for gm, v in self.f0_mono(m).items():
                    _acc(out, gm, -c * v)
        self._f0[b] = out
        return out

    def f0_mono(self, m: Mono) -> Dict[Mono, Fraction]:
        alg = self.alg
        g, b = alg.g_part(m), alg.star_part(m)
        if not any(b):
            return {g: Fraction(1)}
        out = {}
        for gm, c in self.f0_star(b).items():
            for mm, v in alg.mul_mono(g, gm).items():
                _acc(out, mm, c * v)
        return out

    def f0(self, z: UTensor) -> UTensor:
        terms = {}
        for (m,), c in z.terms.items():
            for gm, v in self.f0_mono(m).items():
                _acc(terms, (gm,), c * v)
        return z._new(terms)


def pbw_basis_size(dim: int, degree: int) -> int:
    """dim S^{<=degree}(V) for dim V = dim."""
    return comb(dim + degree, degree)


def letter_of(alg: PBWAlgebra, i: int) -> BasisIndex:
    return alg.lie.letters[i]


def is_star_position(alg: PBWAlgebra, i: int) -> bool:
    return alg.lie.letters[i].space == Space.GSTAR
