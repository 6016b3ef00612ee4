"""Truncated associator series and the Drinfeld quantization of (p, t)."""
from __future__ import annotations

import itertools
from fractions import Fraction
from math import factorial
from typing import Dict, Mapping, Optional

from .enveloping_pbw import DEFAULT_DEGREE, PBWAlgebra, UTensor, _acc
from .errors import InputError, UnsupportedDegree
from .quasi_bialgebra import QuasiBialgebra
from .quasi_lie import LieAlgebra, check_invariant
from .scalar_series import HSeries, parse_rational
from .tensor_space import SparseTensor, is_symmetric

# coefficient of [X, Y]
COMMUTATOR_COEFF = Fraction(1, 24)


class FreeSeries:
    """Element of Q<<X, Y>> truncated at total degree ``max_degree``."""

    def __init__(self, max_degree: int, terms: Mapping[str, object]):
        self.max_degree = max_degree
        clean = {}
        for w, c in terms.items():
            if set(w) - {"X", "Y"}:
                raise InputError(f"associator word {w!r} uses letters other than X, Y")
            if len(w) > max_degree:
                continue
            c = parse_rational(c)
            if c:
                clean[w] = clean.get(w, 0) + c
        self.terms = {w: c for w, c in clean.items() if c}

    def __eq__(self, other):
        return isinstance(other, FreeSeries) and self.terms == other.terms

    def __repr__(self):
        return " + ".join(f"{c}*{w or '1'}" for w, c in sorted(self.terms.items())) or "0"

    def to_json(self):
        return [{"word": w, "coeff": str(c)} for w, c in sorted(self.terms.items(), key=lambda x: (len(x[0]), x[0]))]


def rational_associator(max_degree: int = 2,
                        coefficients: Optional[Mapping[str, object]] = None) -> FreeSeries:
    """1 + (1/24)(XY - YX) through degree 2; higher degrees only from user coefficients."""
    if coefficients is not None:
        terms = dict(coefficients)
        terms.setdefault("", 1)
        return FreeSeries(max_degree, terms)
    if max_degree >= 3:
        raise UnsupportedDegree("degree >= 3 associator coefficients are irrational; supply them")
    terms = {"": 1}
    if max_degree >= 2:
        terms["XY"] = COMMUTATOR_COEFF
        terms["YX"] = -COMMUTATOR_COEFF
    return FreeSeries(max_degree, terms)


def _shuffle_coproduct(word: str):
    """Delta(w) for X, Y primitive: sum over subsets of positions."""
    n = len(word)
    for mask in range(1 << n):
        left = "".join(word[i] for i in range(n) if mask >> i & 1)
        right = "".join(word[i] for i in range(n) if not mask >> i & 1)
        yield left, right


def is_group_like(phi: FreeSeries) -> bool:
    """Delta(Phi) = Phi (x) Phi through total degree max_degree."""
    lhs: Dict[tuple, Fraction] = {}
    for w, c in phi.terms.items():
        for pair in _shuffle_coproduct(w):
            _acc(lhs, pair, c)
    rhs: Dict[tuple, Fraction] = {}
    for (w1, c1), (w2, c2) in itertools.product(phi.terms.items(), repeat=2):
        if len(w1) + len(w2) <= phi.max_degree:
            _acc(rhs, (w1, w2), c1 * c2)
    return lhs == rhs


def substitute(phi: FreeSeries, t: SparseTensor, alg: PBWAlgebra, order: int,
               degree=DEFAULT_DEGREE) -> UTensor:
    """Phi(h t12, h t23) in U(p)^{(x)3} with t12 = t(x)1 and t23 = 1(x)t."""
    one = UTensor.one(alg, 3, order, degree)
    tt = UTensor.from_sparse(alg, t, order, degree, hbar=1)
    X = tt.insert_legs((1, 2), 3)
    Y = tt.insert_legs((2, 3), 3)
    out = UTensor.zero(alg, 3, order, degree)
    cache = {"": one}
    for w in sorted(phi.terms, key=len):
        if len(w) >= order:
            continue  # h^{len w} vanishes
        val = cache.get(w)
        if val is None:
            val = one
            for ch in w:
                val = val * (X if ch == "X" else Y)
            cache[w] = val
        out = out + val.scale(phi.terms[w])
    return out


def r_matrix(t: SparseTensor, alg: PBWAlgebra, order: int, degree=DEFAULT_DEGREE) -> UTensor:
    """exp(h t / 2) truncated at h^order."""
    one = UTensor.one(alg, 2, order, degree)
    x = UTensor.from_sparse(alg, t, order, degree, hbar=1).scale(Fraction(1, 2))
    out = one
    power = one
    for k in range(1, order):
        power = power * x
        out = out + power.scale(Fraction(1, factorial(k)))
    return out


def drinfeld_quantize(p: LieAlgebra, t: SparseTensor, order: int = 3,
                      associator: Optional[FreeSeries] = None,
                      alg: Optional[PBWAlgebra] = None, n_g: int | None = None,
                      degree=DEFAULT_DEGREE) -> QuasiBialgebra:
    """U(p)[[h]] with undeformed Delta, eps and (R, Phi) = (exp(h t/2), Phi(h t12, h t23))."""
    if not is_symmetric(t) or not check_invariant(p, t).passed:
        raise InputError("t must be symmetric and invariant")
    if alg is None:
        alg = PBWAlgebra(p, n_g)
    if associator is None:
        associator = rational_associator(min(2, order - 1))
    phi = substitute(associator, t, alg, order, degree)
    R = r_matrix(t, alg, order, degree)
    return QuasiBialgebra(alg, order, phi, None, R, "U(p)", degree)
