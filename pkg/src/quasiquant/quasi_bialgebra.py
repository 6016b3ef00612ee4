"""Quasi-(triangular) bialgebra structures on truncated enveloping algebras."""
from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Dict, Optional

from .enveloping_pbw import DEFAULT_DEGREE, PBWAlgebra, UTensor, _acc
from .errors import (ConfigurationError, InputError, InternalConsistencyError,
                     NotInvertible, PreconditionError)
from .quasi_lie import QuasiLieBialgebra, check_invariant
from .report import Report
from .scalar_series import HSeries
from .tensor_space import SparseTensor, is_symmetric, perm_sign


def u_inverse(x: UTensor) -> UTensor:
    """Inverse of an element whose h^0 part is exactly 1, by the geometric series."""
    one = UTensor.one(x.alg, x.legs, x.order, x.degree)
    y = x - one
    if any(c[0] for c in y.terms.values()):
        raise NotInvertible("constant term is not 1; only unipotent inverses are supported")
    out = one
    power = one
    for _ in range(1, x.order):
        power = power * (-y)
        if power.is_zero():
            break
        out = out + power
    return out


def u_alt(x: UTensor) -> UTensor:
    out = UTensor.zero(x.alg, x.legs, x.order, x.degree)
    for perm in itertools.permutations(range(1, x.legs + 1)):
        out = out + x.permute_legs(perm).scale(perm_sign(perm))
    return out


def to_sparse(x: Dict[tuple, Fraction], alg: PBWAlgebra, what: str) -> SparseTensor:
    """Convert {monomial tuple: Fraction} with legs of degree <= 1 into letter words."""
    pairs = []
    for key, c in x.items():
        word = []
        for m in key:
            d = sum(m)
            if d == 0:
                word.append(None)
            elif d == 1:
                word.append(alg.lie.letters[m.index(1)])
            else:
                raise PreconditionError(f"{what} has a leg of degree {d}; not a Lie tensor", key)
        pairs.append((tuple(word), c))
    legs = len(next(iter(x))) if x else 0
    return SparseTensor.from_pairs(legs, pairs)


class QuasiBialgebra:
    """Delta is given on generators (None = primitive) and extended multiplicatively."""

    def __init__(self, alg: PBWAlgebra, order: int, phi: UTensor,
                 delta_gens: Optional[Dict[int, UTensor]] = None,
                 R: Optional[UTensor] = None, carrier: str = "U(p)",
                 degree: int | None = DEFAULT_DEGREE):
        self.alg = alg
        self.order = order
        self.degree = degree
        self.carrier = carrier
        self.phi = phi
        self.R = R
        if delta_gens is None:
            delta_gens = {i: self.primitive(i) for i in range(alg.m)}
        self.delta_gens = delta_gens
        self._dm = {}

    # -------------------------------------------------- elements
    def one(self, legs: int) -> UTensor:
        return UTensor.one(self.alg, legs, self.order, self.degree)

    def gen(self, i: int) -> UTensor:
        return UTensor(self.alg, 1, self.order, {(self.alg.gen(i),): 1}, self.degree)

    def primitive(self, i: int) -> UTensor:
        g, u = self.alg.gen(i), self.alg.unit
        return UTensor(self.alg, 2, self.order, {(g, u): 1, (u, g): 1}, self.degree)

    # -------------------------------------------------- coproduct
    def delta_mono(self, m) -> UTensor:
        hit = self._dm.get(m)
        if hit is not None:
            return hit
        out = self.one(2)
        for i, a in enumerate(m):
            for _ in range(a):
                out = out * self.delta_gens[i]
        self._dm[m] = out
        return out

    def delta_on_leg(self, x: UTensor, leg: int) -> UTensor:
        terms = {}
        overflow = x.overflow
        for key, c in x.terms.items():
            d = self.delta_mono(key[leg])
            overflow = overflow or d.overflow
            for k2, c2 in d.terms.items():
                _acc(terms, key[:leg] + k2 + key[leg + 1:], c * c2)
        return UTensor(self.alg, x.legs + 1, self.order, terms, self.degree, overflow)

    def coproduct(self, x: UTensor) -> UTensor:
        return self.delta_on_leg(x, 0)

    # -------------------------------------------------- serialization
    def to_json(self):
        letters = self.alg.lie.letters
        out = {"carrier": self.carrier, "order": self.order,
               "Delta": {str(letters[i]): d.to_json() for i, d in sorted(self.delta_gens.items())},
               "Phi": self.phi.to_json()}
        if self.R is not None:
            out["R"] = self.R.to_json()
        return out


def undeformed(alg: PBWAlgebra, order: int, carrier: str = "U(g)",
               degree: int | None = DEFAULT_DEGREE, with_R: bool = False) -> QuasiBialgebra:
    phi = UTensor.one(alg, 3, order, degree)
    R = UTensor.one(alg, 2, order, degree) if with_R else None
    return QuasiBialgebra(alg, order, phi, None, R, carrier, degree)


def _record(rep: Report, name: str, lhs: UTensor, rhs: UTensor, order: int):
    d = lhs - rhs
    rep.add(name, d.is_zero(), d, f"mod h^{order}")
    if lhs.overflow or rhs.overflow:
        rep.add(name + " (no overflow)", False, None, "PBW degree cap reached; retry with a larger degree")


def check_axioms(B: QuasiBialgebra) -> Report:
    rep = Report(f"quasi-bialgebra axioms mod h^{B.order}")
    phi = B.phi
    phi_inv = u_inverse(phi)
    letters = B.alg.lie.letters
    for i in range(B.alg.m):
        d = B.coproduct(B.gen(i))
        lhs = B.delta_on_leg(d, 1)
        rhs = phi * B.delta_on_leg(d, 0) * phi_inv
        _record(rep, f"coassociativity up to Phi on {letters[i]}", lhs, rhs, B.order)
    lhs = B.delta_on_leg(phi, 2) * B.delta_on_leg(phi, 0)
    rhs = phi.insert_legs((2, 3, 4), 4) * B.delta_on_leg(phi, 1) * phi.insert_legs((1, 2, 3), 4)
    _record(rep, "pentagon", lhs, rhs, B.order)
    for i in range(B.alg.m):
        d = B.coproduct(B.gen(i))
        x = B.gen(i)
        _record(rep, f"left counit on {letters[i]}", d.counit_on_leg(0), x, B.order)
        _record(rep, f"right counit on {letters[i]}", d.counit_on_leg(1), x, B.order)
    _record(rep, "(id(x)eps(x)id)Phi = 1", phi.counit_on_leg(1), B.one(2), B.order)
    return rep


def check_quasitriangular(B: QuasiBialgebra) -> Report:
    if B.R is None:
        raise InputError("no R-matrix present")
    rep = Report(f"quasi-triangular identities mod h^{B.order}")
    R, phi = B.R, B.phi
    R_inv = u_inverse(R)
    phi_inv = u_inverse(phi)
    letters = B.alg.lie.letters
    for i in range(B.alg.m):
        d = B.coproduct(B.gen(i))
        _record(rep, f"Delta^op = R Delta R^-1 on {letters[i]}",
                d.permute_legs((2, 1)), R * d * R_inv, B.order)
    R13 = R.insert_legs((1, 3), 3)
    R23 = R.insert_legs((2, 3), 3)
    R12 = R.insert_legs((1, 2), 3)
    lhs = B.delta_on_leg(R, 0)
    rhs = (phi.permute_legs((3, 1, 2)) * R13 * u_inverse(phi.permute_legs((1, 3, 2)))
           * R23 * phi)
    _record(rep, "hexagon (Delta(x)id)R", lhs, rhs, B.order)
    lhs = B.delta_on_leg(R, 1)
    rhs = (u_inverse(phi.permute_legs((2, 3, 1))) * R13 * phi.permute_legs((2, 1, 3))
           * R12 * phi_inv)
    _record(rep, "hexagon (id(x)Delta)R", lhs, rhs, B.order)
    return rep


def check_twist_counit(F: UTensor) -> Report:
    rep = Report("twist counit conditions")
    one = UTensor.one(F.alg, 1, F.order, F.degree)
    rep.add("(eps(x)id)F = 1", (F.counit_on_leg(0) - one).is_zero(), F.counit_on_leg(0) - one)
    rep.add("(id(x)eps)F = 1", (F.counit_on_leg(1) - one).is_zero(), F.counit_on_leg(1) - one)
    return rep


def twist_quasibialg(B: QuasiBialgebra, F: UTensor) -> QuasiBialgebra:
    """Delta~ = F Delta F^-1,  Phi~ = F23 (id(x)Delta)(F) Phi (Delta(x)id)(F^-1) F12^-1,
    R~ = F21 R F^-1."""
    if F.legs != 2:
        raise InputError("twist must have two legs")
    cc = check_twist_counit(F)
    if not cc.passed:
        raise InputError("twist violates the counit conditions")
    F_inv = u_inverse(F)
    deltas = {i: F * d * F_inv for i, d in B.delta_gens.items()}
    phi = (F.insert_legs((2, 3), 3) * B.delta_on_leg(F, 1) * B.phi
           * B.delta_on_leg(F_inv, 0) * F_inv.insert_legs((1, 2), 3))
    R = None
    if B.R is not None:
        R = F.permute_legs((2, 1)) * B.R * F_inv
    return QuasiBialgebra(B.alg, B.order, phi, deltas, R, B.carrier, B.degree)


def phi_defect_mod_h2(B: QuasiBialgebra) -> UTensor:
    d = B.phi - B.one(3)
    return UTensor(B.alg, 3, B.order,
                   {k: HSeries([c[0], c[1]], B.order) for k, c in d.terms.items() if c[0] or c[1]},
                   B.degree)


def classical_limit(B: QuasiBialgebra) -> QuasiLieBialgebra:
    """delta = (Delta - Delta^op)/h mod h, phi = Alt(Phi)/h^2 mod h."""
    if B.order < 3:
        raise ConfigurationError("classical limit needs order >= 3")
    defect = phi_defect_mod_h2(B)
    if not defect.is_zero():
        raise PreconditionError("Phi is not 1 mod h^2", defect)
    alg = B.alg
    L = alg.lie
    deltas = {}
    for i in range(alg.m):
        d = B.coproduct(B.gen(i))
        skew = d - d.permute_legs((2, 1))
        if skew.hbar_coefficient(0):
            raise PreconditionError("Delta is not cocommutative mod h", skew)
        deltas[L.letters[i]] = to_sparse(skew.hbar_coefficient(1), alg, "delta")
    phi_part = u_alt(B.phi).hbar_coefficient(2)
    phi = to_sparse(phi_part, alg, "phi") if phi_part else SparseTensor.zero(3)
    deltas = {x: T if T.legs else SparseTensor.zero(2) for x, T in deltas.items()}
    return QuasiLieBialgebra.from_tensors(L, deltas, phi)


def extract_t(B: QuasiBialgebra) -> SparseTensor:
    """t = (R21 R - 1)/h mod h; checked to be symmetric and invariant."""
    if B.R is None:
        raise InputError("no R-matrix present")
    x = B.R.permute_legs((2, 1)) * B.R - B.one(2)
    if x.hbar_coefficient(0):
        raise PreconditionError("R21 R is not 1 mod h", x)
    coeffs = x.hbar_coefficient(1)
    t = to_sparse(coeffs, B.alg, "t") if coeffs else SparseTensor.zero(2)
    if not is_symmetric(t):
        raise InternalConsistencyError("extracted t is not symmetric")
    inv = check_invariant(B.alg.lie, t)
    if not inv.passed:
        raise InternalConsistencyError("extracted t is not invariant", inv)
    return t
