"""Exact rationals and the truncated series ring K[h]/h^N.

Rationals are plain ``fractions.Fraction`` values. ``HSeries`` is an immutable
tuple of N coefficients; every operation reduces mod h^N.
"""
from __future__ import annotations

from fractions import Fraction
from math import comb
from typing import Iterable, Sequence, Union

from .errors import ConfigurationError, InputError, NotInvertible

Rational = Fraction
Scalar = Union[int, Fraction]

DEFAULT_ORDER = 3


def parse_rational(value) -> Fraction:
    """Accept ints, Fractions and strings like "3", "-1/2"."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InputError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not a rational: {value!r}") from exc
    raise InputError(f"not a rational: {value!r}")


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


class HSeries:
    """c_0 + c_1 h + ... + c_{N-1} h^{N-1}, reduced mod h^N."""

    __slots__ = ("coeffs", "_hash")

    def __init__(self, coeffs: Iterable[Scalar], order: int | None = None):
        cs = [Fraction(c) for c in coeffs]
        if order is not None:
            if order < 1:
                raise ConfigurationError("series order must be positive")
            cs = cs[:order] + [Fraction(0)] * (order - len(cs))
        if not cs:
            raise ConfigurationError("series order must be positive")
        self.coeffs = tuple(cs)
        self._hash = None

    @classmethod
    def _raw(cls, coeffs: tuple) -> "HSeries":
        s = object.__new__(cls)
        s.coeffs = coeffs
        s._hash = None
        return s

    @classmethod
    def const(cls, c: Scalar, order: int) -> "HSeries":
        return cls._raw((Fraction(c),) + (Fraction(0),) * (order - 1))

    @classmethod
    def zero(cls, order: int) -> "HSeries":
        return cls._raw((Fraction(0),) * order)

    @classmethod
    def one(cls, order: int) -> "HSeries":
        return cls.const(1, order)

    @classmethod
    def hbar_power(cls, k: int, order: int, c: Scalar = 1) -> "HSeries":
        cs = [Fraction(0)] * order
        if k < order:
            cs[k] = Fraction(c)
        return cls._raw(tuple(cs))

    @property
    def order(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, k: int) -> Fraction:
        return self.coeffs[k]

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def __bool__(self):
        return any(self.coeffs)

    def valuation(self) -> int | None:
        for k, c in enumerate(self.coeffs):
            if c:
                return k
        return None

    def _check(self, other: "HSeries"):
        if len(other.coeffs) != len(self.coeffs):
            raise ConfigurationError(
                f"series orders differ: {len(self.coeffs)} vs {len(other.coeffs)}")

    def _coerce(self, other):
        if isinstance(other, HSeries):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return HSeries.const(other, len(self.coeffs))
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return HSeries._raw(tuple(a + b for a, b in zip(self.coeffs, o.coeffs)))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return HSeries._raw(tuple(a - b for a, b in zip(self.coeffs, o.coeffs)))

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o - self

    def __neg__(self):
        return HSeries._raw(tuple(-a for a in self.coeffs))

    def scale(self, c: Scalar) -> "HSeries":
        return HSeries._raw(tuple(a * c for a in self.coeffs))

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, HSeries):
            return NotImplemented
        return series_mul(self, other)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, HSeries):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self.coeffs[0] == other and not any(self.coeffs[1:])
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.coeffs)
        return self._hash

    def truncate(self, order: int) -> "HSeries":
        if order > len(self.coeffs):
            raise ConfigurationError("cannot raise the order of a truncated series")
        return HSeries._raw(self.coeffs[:order])

    def shift_down(self, k: int) -> "HSeries":
        """Divide by h^k; the first k coefficients must vanish. Result has order N-k."""
        if any(self.coeffs[:k]):
            raise ConfigurationError(f"series not divisible by h^{k}")
        return HSeries._raw(self.coeffs[k:])

    def to_json(self) -> list:
        return [format_rational(c) for c in self.coeffs]

    @classmethod
    def from_json(cls, data: Sequence, order: int | None = None) -> "HSeries":
        return cls([parse_rational(c) for c in data], order)

    def __repr__(self):
        terms = []
        for k, c in enumerate(self.coeffs):
            if not c:
                continue
            h = "" if k == 0 else ("h" if k == 1 else f"h^{k}")
            cs = format_rational(c)
            terms.append(cs if not h else (h if c == 1 else f"{cs}*{h}"))
        body = " + ".join(terms) if terms else "0"
        return f"HSeries({body} mod h^{len(self.coeffs)})"


def series_mul(a: HSeries, b: HSeries) -> HSeries:
    if len(a.coeffs) != len(b.coeffs):
        raise ConfigurationError(
            f"series orders differ: {len(a.coeffs)} vs {len(b.coeffs)}")
    ac, bc = a.coeffs, b.coeffs
    n = len(ac)
    out = [Fraction(0)] * n
    for i, x in enumerate(ac):
        if not x:
            continue
        for j in range(n - i):
            y = bc[j]
            if y:
                out[i + j] += x * y
    return HSeries._raw(tuple(out))


def series_inverse(a: HSeries) -> HSeries:
    c = a.coeffs
    if not c[0]:
        raise NotInvertible("constant term is zero")
    n = len(c)
    inv0 = 1 / c[0]
    b = [inv0]
    # order-by-order: sum_{i<=k} c_i b_{k-i} = 0 for k >= 1
    for k in range(1, n):
        s = sum((c[i] * b[k - i] for i in range(1, k + 1)), Fraction(0))
        b.append(-s * inv0)
    return HSeries._raw(tuple(b))


def inv_sqrt_taylor_coeff(k: int) -> Fraction:
    """Coefficient of x^k in (1+x)^(-1/2), i.e. binom(-1/2, k)."""
    if k < 0:
        raise ConfigurationError("k must be non-negative")
    return Fraction((-1) ** k * comb(2 * k, k), 4 ** k)
