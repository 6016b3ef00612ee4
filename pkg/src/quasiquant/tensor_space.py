"""Sparse tensors over the basis {e_i} of g and {e^i} of g*.

A word is a tuple of letters. A letter is a ``BasisIndex`` or ``None``; ``None``
stands for the unit 1 on that leg, so a word like (e1, None, e^1) lives in
U(p)^{(x)3} rather than in p^{(x)3}. Coefficients are Fractions or HSeries.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from typing import Callable, Dict, Iterable, Mapping, Sequence, Tuple

from .errors import ConfigurationError, InputError
from .scalar_series import HSeries, format_rational, parse_rational


class Space(IntEnum):
    G = 0
    GSTAR = 1


@dataclass(frozen=True, order=True)
class BasisIndex:
    space: Space
    index: int  # 1-based

    def __post_init__(self):
        if self.index < 1:
            raise ConfigurationError(f"basis index must be >= 1, got {self.index}")

    def __str__(self):
        return f"e{self.index}" if self.space == Space.G else f"e^{self.index}"

    __repr__ = __str__

    @classmethod
    def parse(cls, text: str) -> "BasisIndex":
        m = re.fullmatch(r"e(\^?)(\d+)", text.strip())
        if not m:
            raise InputError(f"bad basis letter {text!r}")
        return cls(Space.GSTAR if m.group(1) else Space.G, int(m.group(2)))


def e(i: int) -> BasisIndex:
    return BasisIndex(Space.G, i)


def es(i: int) -> BasisIndex:
    return BasisIndex(Space.GSTAR, i)


Letter = BasisIndex | None
Word = Tuple[Letter, ...]


def pair(upper: BasisIndex, lower: BasisIndex) -> Fraction:
    """<e^i, e_j> = delta^i_j; pairs of the same kind give 0."""
    if upper.space == lower.space:
        return Fraction(0)
    return Fraction(1) if upper.index == lower.index else Fraction(0)


def _nonzero(c) -> bool:
    return bool(c)


def _check_perm(sigma: Sequence[int], k: int):
    if sorted(sigma) != list(range(1, k + 1)):
        raise ConfigurationError(f"{tuple(sigma)} is not a permutation of 1..{k}")


class SparseTensor:
    """Finite linear combination of words of fixed length ``legs``."""

    __slots__ = ("legs", "terms")

    def __init__(self, legs: int, terms: Mapping[Word, object] | None = None):
        self.legs = legs
        clean: Dict[Word, object] = {}
        for w, c in (terms or {}).items():
            w = tuple(w)
            if len(w) != legs:
                raise ConfigurationError(f"word {w} has length {len(w)}, expected {legs}")
            if _nonzero(c):
                clean[w] = clean[w] + c if w in clean else c
                if not _nonzero(clean[w]):
                    del clean[w]
        self.terms = clean

    @classmethod
    def zero(cls, legs: int) -> "SparseTensor":
        return cls(legs)

    @classmethod
    def from_pairs(cls, legs: int, pairs: Iterable[Tuple[Word, object]]) -> "SparseTensor":
        acc: Dict[Word, object] = {}
        for w, c in pairs:
            w = tuple(w)
            acc[w] = acc[w] + c if w in acc else c
        return cls(legs, acc)

    def items(self):
        return self.terms.items()

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, SparseTensor):
            return NotImplemented
        return self.legs == other.legs and self.terms == other.terms

    def __hash__(self):
        return hash((self.legs, frozenset(self.terms.items())))

    def _same_legs(self, other: "SparseTensor"):
        if self.legs != other.legs:
            raise ConfigurationError(f"leg counts differ: {self.legs} vs {other.legs}")

    def __add__(self, other: "SparseTensor") -> "SparseTensor":
        self._same_legs(other)
        acc = dict(self.terms)
        for w, c in other.terms.items():
            acc[w] = acc[w] + c if w in acc else c
        return SparseTensor(self.legs, acc)

    def __neg__(self) -> "SparseTensor":
        return SparseTensor(self.legs, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other: "SparseTensor") -> "SparseTensor":
        return self + (-other)

    def scale(self, c) -> "SparseTensor":
        return SparseTensor(self.legs, {w: c * v for w, v in self.terms.items()})

    def __mul__(self, c):
        if isinstance(c, SparseTensor):
            return NotImplemented
        return self.scale(c)

    __rmul__ = __mul__

    def tensor(self, other: "SparseTensor") -> "SparseTensor":
        """x (x) y by word concatenation."""
        return SparseTensor.from_pairs(
            self.legs + other.legs,
            ((w1 + w2, c1 * c2) for w1, c1 in self.terms.items()
             for w2, c2 in other.terms.items()))

    def map_words(self, fn: Callable[[Word], Word], legs: int | None = None) -> "SparseTensor":
        return SparseTensor.from_pairs(
            self.legs if legs is None else legs,
            ((fn(w), c) for w, c in self.terms.items()))

    def map_coeffs(self, fn: Callable) -> "SparseTensor":
        return SparseTensor(self.legs, {w: fn(c) for w, c in self.terms.items()})

    def letters_only(self) -> bool:
        """True when no word carries a unit leg."""
        return all(None not in w for w in self.terms)

    def to_json(self) -> list:
        out = []
        for w in sorted(self.terms, key=_word_key):
            c = self.terms[w]
            coeff = c.to_json() if isinstance(c, HSeries) else format_rational(c)
            out.append({"word": ["1" if a is None else str(a) for a in w], "coeff": coeff})
        return out

    @classmethod
    def from_json(cls, legs: int, data: Sequence[Mapping], order: int | None = None) -> "SparseTensor":
        pairs = []
        for item in data:
            word = tuple(None if s == "1" else BasisIndex.parse(s) for s in item["word"])
            raw = item["coeff"]
            if isinstance(raw, list):
                c = HSeries.from_json(raw, order)
            else:
                c = parse_rational(raw)
                if order is not None:
                    c = HSeries.const(c, order)
            pairs.append((word, c))
        return cls.from_pairs(legs, pairs)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for w in sorted(self.terms, key=_word_key):
            c = self.terms[w]
            cs = repr(c) if isinstance(c, HSeries) else format_rational(c)
            parts.append(f"{cs}*" + "(x)".join("1" if a is None else str(a) for a in w))
        return " + ".join(parts)


def _word_key(w: Word):
    return tuple((-1, 0) if a is None else (int(a.space), a.index) for a in w)


def permute_legs(x: SparseTensor, sigma: Sequence[int]) -> SparseTensor:
    """Factor i moves to slot sigma[i-1]; so (a(x)b(x)c)^{312} = b(x)c(x)a.

    This is a left action: permute(permute(x, tau), sigma) = permute(x, sigma o tau).
    """
    k = x.legs
    _check_perm(sigma, k)
    sig = [s - 1 for s in sigma]

    def move(w):
        out = [None] * k
        for i, a in enumerate(w):
            out[sig[i]] = a
        return tuple(out)

    return x.map_words(move)


def compose_perms(sigma: Sequence[int], tau: Sequence[int]) -> tuple:
    """(sigma o tau)(i) = sigma(tau(i)), 1-based."""
    return tuple(sigma[t - 1] for t in tau)


def insert_legs(x: SparseTensor, positions: Sequence[int], total: int) -> SparseTensor:
    """Place the legs of x on the given slots of a ``total``-leg tensor; other slots carry 1."""
    pos = list(positions)
    if len(pos) != x.legs:
        raise ConfigurationError(f"need {x.legs} positions, got {len(pos)}")
    if sorted(set(pos)) != pos or pos[0] < 1 or pos[-1] > total:
        raise ConfigurationError(f"positions {tuple(pos)} invalid for {total} legs")

    def place(w):
        out = [None] * total
        for p, a in zip(pos, w):
            out[p - 1] = a
        return tuple(out)

    return x.map_words(place, total)


def perm_sign(perm: Sequence[int]) -> int:
    """Sign of a 1-based permutation."""
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j] - 1
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def alt(x: SparseTensor) -> SparseTensor:
    """Sum over S_k of sign(sigma) sigma(x); no 1/k! normalisation."""
    k = x.legs
    acc: Dict[Word, object] = {}
    for perm in itertools.permutations(range(1, k + 1)):
        s = perm_sign(perm)
        for w, c in permute_legs(x, perm).terms.items():
            v = c if s > 0 else -c
            acc[w] = acc[w] + v if w in acc else v
    return SparseTensor(k, acc)


def is_symmetric(x: SparseTensor) -> bool:
    if x.legs < 2:
        return True
    return all(permute_legs(x, p) == x for p in _adjacent_transpositions(x.legs))


def is_antisymmetric(x: SparseTensor) -> bool:
    if x.legs < 2:
        return True
    return all(permute_legs(x, p) == -x for p in _adjacent_transpositions(x.legs))


def _adjacent_transpositions(k: int):
    for i in range(k - 1):
        p = list(range(1, k + 1))
        p[i], p[i + 1] = p[i + 1], p[i]
        yield tuple(p)


def flip(x: SparseTensor) -> SparseTensor:
    return permute_legs(x, (2, 1))
