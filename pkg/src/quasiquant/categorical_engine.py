"""Free A-module morphisms, the deformed idempotent and the structure on U(g)[[h]].

Representation
--------------
A morphism X(x)A -> Y(x)A of free A-modules is stored through the
identification with U(g)-linear maps X -> Y between U(p)-modules, i.e. we
keep f_bar = (id (x) eps_A) o f. Objects are flat tuples of leg kinds:

* ``"Q"``: the coinduced module Q = Hom_{U(g)}(U(p), U(g)), with
  (u > x)(w) = x(w u) and pi(x) = x(1);
* ``"U"``: the regular module U(p);
* the empty tuple is the unit object.

An element of a tensor product of such modules is a dict
{(gens, monos): HSeries}. Each leg carries a generator and a PBW monomial v
meaning v > generator. Generators on Q legs are ``S0`` (the splitting
s0 = f0) or a star exponent tuple b, the U(g)-linear functional with
x_b(e_g^a e*^c) = e_g^a [b == c]. Regular legs use generator ``None``.

Associator and braiding enter only through composition and tensor products
of morphisms, as kernels in U(p)^{(x)k}: composition inserts Phi_{Z,A,A}, and
the tensor product of morphisms inserts the rebracketings and the crossing
of A with W. With ``F_v(x) = S(v_(1)) > f_bar(v_(2) > x)``:

    (f o g)(x)  = sum Phi_Z > F_{Phi_1}(G_{Phi_2}(x))
    (f (x) g)(x (x) z) = sum K_Y > F_{K_1}(x) (x) K_W > G_{K_2}(z)
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .associator import FreeSeries, drinfeld_quantize, rational_associator
from .enveloping_pbw import (PBWAlgebra, SymmetricSplitting, UTensor, _acc,
                             sigma_mono)
from .errors import InternalConsistencyError, TruncationError
from .quasi_bialgebra import QuasiBialgebra, u_inverse
from .quasi_lie import DoubleData, LieAlgebra, QuasiLieBialgebra, build_double
from .report import Report
from .scalar_series import HSeries, inv_sqrt_taylor_coeff
from .tensor_space import SparseTensor, e, es

S0 = "s0"
Q_LEG = "Q"
U_LEG = "U"

Elem = Dict[tuple, HSeries]


def _add(acc: Elem, key, c: HSeries):
    v = acc.get(key)
    v = c if v is None else v + c
    if v:
        acc[key] = v
    else:
        acc.pop(key, None)


def elem_iadd(acc: Elem, b: Elem, scale=1) -> Elem:
    """acc += scale * b in place; scale is a rational or a series."""
    for k, c in b.items():
        _add(acc, k, c if scale == 1 else c * scale)
    return acc


def elem_add(a: Elem, b: Elem, scale=1) -> Elem:
    return elem_iadd(dict(a), b, scale)


def elem_scale(a: Elem, c) -> Elem:
    out = {}
    for k, v in a.items():
        w = v * c
        if w:
            out[k] = w
    return out


def valuation(c) -> int:
    """h-adic valuation of a scalar or series coefficient (a large number for zero)."""
    if isinstance(c, HSeries):
        v = c.valuation()
        return 1 << 30 if v is None else v
    return 0 if c else 1 << 30


def cut(x: Elem, k: int, order: int) -> Elem:
    """Zero the coefficients of h^k and above."""
    if k >= order:
        return x
    zeros = (Fraction(0),) * (order - k)
    out = {}
    for key, c in x.items():
        if any(c.coeffs[:k]):
            out[key] = HSeries._raw(c.coeffs[:k] + zeros)
    return out


class FMorphism:
    """A free-module morphism, evaluated lazily atom by atom with memoization.

    ``atom_fn(atom, k)`` must return the image of one atom correctly mod h^k;
    callers ask for the lowest precision they need, which keeps the deep
    associator corrections cheap.
    """

    def __init__(self, model: "TruncModel", source: tuple, target: tuple,
                 atom_fn: Callable[[tuple, int], Elem], name: str = "f"):
        self.model = model
        self.source = tuple(source)
        self.target = tuple(target)
        self._fn = atom_fn
        self.name = name
        self._cache: Dict[tuple, Tuple[int, Elem]] = {}
        self._fv: Dict[tuple, Tuple[int, Elem]] = {}

    def on_atom(self, atom, k: Optional[int] = None) -> Elem:
        N = self.model.order
        k = N if k is None else min(k, N)
        if k <= 0:
            return {}
        hit = self._cache.get(atom)
        if hit is not None and hit[0] >= k:
            return hit[1]
        out = cut(self._fn(atom, k), k, N)
        self._cache[atom] = (k, out)
        return out

    def __call__(self, x: Elem, k: Optional[int] = None) -> Elem:
        k = self.model.order if k is None else k
        out: Elem = {}
        for atom, c in x.items():
            j = valuation(c)
            if j >= k:
                continue
            for key, v in self.on_atom(atom, k - j).items():
                _add(out, key, c * v)
        return out

    def twisted(self, v) -> Callable[[tuple, int], Elem]:
        """atom -> F_v(atom) = S(v_(1)) > f(v_(2) > atom)."""
        if not any(v):
            return self.on_atom
        M = self.model
        alg = M.alg
        N = M.order

        def fv(atom, k):
            if k <= 0:
                return {}
            key = (v, atom)
            hit = self._fv.get(key)
            if hit is not None and hit[0] >= k:
                return hit[1]
            out: Elem = {}
            single = {atom: M.one}
            for (v1, v2), c in alg.coproduct_mono(v).items():
                y = self(M.act_mono(v2, single, len(self.source)), k)
                for s, cs in alg.antipode_mono(v1).items():
                    elem_iadd(out, M.act_mono(s, y, len(self.target)), c * cs)
            out = cut(out, k, N)
            self._fv[key] = (k, out)
            return out

        return fv

    def __repr__(self):
        return f"FMorphism({self.name}: {self.source} -> {self.target})"


@dataclass
class SummandObject:
    base: tuple
    idem: FMorphism
    flavor: str = "phi"


class TruncModel:
    """Finite model of A, C, Q over the double of a quasi-Lie bialgebra.

    ``deg_a`` bounds the star degree of probes and comparison tables and the
    size of the A action tables; ``deg_u`` bounds the U(g) degree kept in
    reported tables (anything beyond sets ``overflow``). Products in U(p)
    themselves are exact.
    """

    def __init__(self, Q: QuasiLieBialgebra, deg_u: int = 4, deg_a: int = 4, order: int = 3,
                 associator: Optional[FreeSeries] = None, crossing: str = "braid",
                 double: Optional[DoubleData] = None, alg: Optional[PBWAlgebra] = None):
        if crossing not in ("inverse", "braid"):
            raise ValueError("crossing must be 'braid' or 'inverse'")
        self.Q = Q
        self.deg_u = deg_u
        self.deg_a = deg_a
        self.order = order
        self.crossing = crossing
        self.double = double or build_double(Q)
        self.n = self.double.n
        self.alg = alg or PBWAlgebra(self.double.p, self.n)
        self.split = SymmetricSplitting(self.alg)
        if associator is None:
            associator = rational_associator(min(2, max(order - 1, 1)))
        self.associator = associator
        self.quantized: QuasiBialgebra = drinfeld_quantize(
            self.double.p, self.double.omega, order, associator, alg=self.alg, degree=None)
        self.phi = self.quantized.phi
        self.phi_inv = u_inverse(self.phi)
        self.R = self.quantized.R
        self.R_inv = u_inverse(self.R)
        self.one = HSeries.one(order)
        self.unit = self.alg.unit
        self.overflow = False
        self._pi: Dict[tuple, dict] = {}
        self._iter: Dict[tuple, dict] = {}
        self._tensor_kernels: Dict[str, dict] = {}
        self._named: Dict[str, FMorphism] = {}
        self.report = Report("model")

    def with_order(self, order: int) -> "TruncModel":
        return TruncModel(self.Q, self.deg_u, self.deg_a, order,
                          crossing=self.crossing, double=self.double, alg=self.alg)

    def with_truncation(self, deg_u: int, deg_a: int) -> "TruncModel":
        return TruncModel(self.Q, deg_u, deg_a, self.order, self.associator,
                          self.crossing, self.double, self.alg)

    # ------------------------------------------------------------ algebra helpers
    def series(self, c) -> HSeries:
        return c if isinstance(c, HSeries) else HSeries.const(c, self.order)

    def iterated(self, u, k: int) -> dict:
        key = (u, k)
        hit = self._iter.get(key)
        if hit is None:
            hit = self.alg.iterated_coproduct_mono(u, k)
            self._iter[key] = hit
        return hit

    def act_legs(self, parts: Sequence[tuple], x: Elem) -> Elem:
        """Act with a pure tensor of monomials, one per leg."""
        alg = self.alg
        out: Elem = {}
        for (gens, monos), c in x.items():
            prods = [alg.mul_mono(u, m) if any(u) else {m: Fraction(1)}
                     for u, m in zip(parts, monos)]
            for combo in itertools.product(*(p.items() for p in prods)):
                f = Fraction(1)
                for _, a in combo:
                    f *= a
                _add(out, (gens, tuple(m for m, _ in combo)), c.scale(f) if f != 1 else c)
        return out

    def act_mono(self, u, x: Elem, k: int) -> Elem:
        """Delta^{(k)}(u) acting on a k-leg element (k = 0: counit)."""
        if not any(u):
            return x
        if k == 0:
            return {}
        out: Elem = {}
        for parts, c in self.iterated(u, k).items():
            elem_iadd(out, self.act_legs(parts, x), c)
        return out

    def act_blocks(self, blocks: Sequence[tuple], sizes: Sequence[int], x: Elem) -> Elem:
        """Act with u_1 (x) ... (x) u_r, block i spread over sizes[i] legs by iterated coproduct."""
        expansions = [self.iterated(u, k) if any(u) or k != 1 else {(u,): Fraction(1)}
                      for u, k in zip(blocks, sizes)]
        out: Elem = {}
        for combo in itertools.product(*(ex.items() for ex in expansions)):
            f = Fraction(1)
            parts = ()
            for p, c in combo:
                f *= c
                parts += p
            if any(any(u) for u in parts):
                elem_iadd(out, self.act_legs(parts, x), f)
            else:
                elem_iadd(out, x, f)
        return out

    # ------------------------------------------------------------ pi and generators
    def pi_atom(self, gen, v) -> dict:
        """pi(v > gen) as {U(g) monomial (in U(p) exponents): Fraction}."""
        key = (gen, v)
        hit = self._pi.get(key)
        if hit is not None:
            return hit
        alg = self.alg
        if gen == S0:
            out = self.split.f0_mono(v)
        else:
            out = {alg.g_part(v): Fraction(1)} if alg.star_part(v) == gen else {}
        self._pi[key] = out
        return out

    def pi(self, x: Elem) -> Dict[tuple, HSeries]:
        """pi on a one-leg Q element."""
        out: Dict[tuple, HSeries] = {}
        for ((gen,), (v,)), c in x.items():
            for m, f in self.pi_atom(gen, v).items():
                _add(out, m, c.scale(f))
        return out

    def s0(self) -> Elem:
        return {((S0,), (self.unit,)): self.one}

    def x_b(self, b) -> Elem:
        return {((tuple(b),), (self.unit,)): self.one}

    def regular_one(self, k: int = 1) -> Elem:
        return {((None,) * k, (self.unit,) * k): self.one}

    def star_monomials(self, degree: int):
        return list(self.alg.monomials_up_to(degree, star_only=True))

    def probes(self) -> List[Elem]:
        return [self.s0()] + [self.x_b(b) for b in self.star_monomials(self.deg_a)]

    # ------------------------------------------------------------ primitive morphisms
    def identity(self, kinds: tuple) -> FMorphism:
        return FMorphism(self, kinds, kinds, lambda atom, k: {atom: self.one}, "id")

    def _from_pi(self, target: tuple, build, name: str) -> FMorphism:
        """Q -> target, atom -> build(pi(atom)) for pi(atom) in U(g)."""
        def fn(atom, k):
            (gen,), (v,) = atom
            out: Elem = {}
            for m, f in self.pi_atom(gen, v).items():
                elem_iadd(out, build(m), f)
            return out
        return FMorphism(self, (Q_LEG,), target, fn, name)

    def p(self) -> FMorphism:
        """p(x) = pi(x) > s0."""
        if "p" not in self._named:
            self._named["p"] = self._from_pi(
                (Q_LEG,), lambda m: {((S0,), (m,)): self.one}, "p")
        return self._named["p"]

    def delta_q(self) -> FMorphism:
        """Delta_Q(x) = (iota (x) iota) Delta(pi x)."""
        if "delta_q" not in self._named:
            def build(m):
                return {((S0, S0), k): self.series(c)
                        for k, c in self.alg.coproduct_mono(m).items()}
            self._named["delta_q"] = self._from_pi((Q_LEG, Q_LEG), build, "Delta_Q")
        return self._named["delta_q"]

    def eps_q(self) -> FMorphism:
        """eps_Q(x) = eps(pi x)."""
        if "eps_q" not in self._named:
            def build(m):
                return {((), ()): self.one} if not any(m) else {}
            self._named["eps_q"] = self._from_pi((), build, "eps_Q")
        return self._named["eps_q"]

    def right_mult(self, z: Dict[tuple, object]) -> FMorphism:
        """e_z(x) = (pi(x) z) > s0 for z in U(g)."""
        alg = self.alg

        def build(m):
            out: Elem = {}
            for zm, zc in z.items():
                for mm, f in alg.mul_mono(m, zm).items():
                    _add(out, ((S0,), (mm,)), self.series(zc) * f)
            return out
        return self._from_pi((Q_LEG,), build, "e_z")

    def hat_regular(self, m_elem: Dict[tuple, HSeries], legs: int = 1) -> FMorphism:
        """m_hat: Q -> U(p)^{(x)legs}, x -> Delta^{(legs)}(pi x) m for the regular module."""
        alg = self.alg

        def build(u):
            left = {((None,) * legs, k): self.series(c) for k, c in self.iterated(u, legs).items()}
            out: Elem = {}
            for (gens, monos), c in left.items():
                for mk, mc in m_elem.items():
                    prods = [alg.mul_mono(a, b) for a, b in zip(monos, mk)]
                    for combo in itertools.product(*(p.items() for p in prods)):
                        f = Fraction(1)
                        for _, a in combo:
                            f *= a
                        _add(out, (gens, tuple(x for x, _ in combo)), c * mc * f)
            return out
        return self._from_pi((U_LEG,) * legs, build, "m_hat")

    def alpha_morphism(self, kinds: tuple, inverse: bool = False) -> FMorphism:
        """x -> Phi > x on a three-leg object (the associativity constraint)."""
        phi = self.phi_inv if inverse else self.phi

        def fn(atom, k):
            out: Elem = {}
            for parts, c in phi.terms.items():
                elem_iadd(out, self.act_legs(parts, {atom: self.one}), c)
            return out
        return FMorphism(self, kinds, kinds, fn, "alpha")

    # ------------------------------------------------------------ linear structure
    def lincomb(self, terms: Sequence[Tuple[object, FMorphism]], name: str = "sum") -> FMorphism:
        src, tgt = terms[0][1].source, terms[0][1].target
        for _, f in terms:
            if f.source != src or f.target != tgt:
                raise InternalConsistencyError("linear combination of incompatible morphisms")

        def fn(atom, k):
            out: Elem = {}
            for c, f in terms:
                j = valuation(c)
                if j < k:
                    elem_iadd(out, f.on_atom(atom, k - j), c)
            return out
        return FMorphism(self, src, tgt, fn, name)

    # ------------------------------------------------------------ composition
    def _phi_terms(self, flavor: str):
        if flavor == "plain":
            return {(self.unit,) * 3: self.one}
        return self.phi.terms

    def compose(self, f: FMorphism, g: FMorphism, flavor: str = "phi") -> FMorphism:
        """f o g (g applied first)."""
        if g.target != f.source:
            raise InternalConsistencyError(f"cannot compose {f} after {g}")
        kz = len(f.target)
        terms = self._phi_terms(flavor)

        def fn(atom, k):
            out: Elem = {}
            for (uz, u1, u2), c in terms.items():
                kk = k - valuation(c)
                if kk <= 0:
                    continue
                gv = g.twisted(u2)(atom, kk)
                fv = f.twisted(u1)
                y: Elem = {}
                for a, ca in gv.items():
                    ja = valuation(ca)
                    if ja >= kk:
                        continue
                    for key, v in fv(a, kk - ja).items():
                        _add(y, key, ca * v)
                elem_iadd(out, self.act_mono(uz, y, kz), c)
            return out
        return FMorphism(self, g.source, f.target, fn, f"({f.name} o {g.name})")

    def compose_plain(self, f: FMorphism, g: FMorphism) -> FMorphism:
        return self.compose(f, g, "plain")

    def compose_phi(self, f: FMorphism, g: FMorphism) -> FMorphism:
        return self.compose(f, g, "phi")

    # ------------------------------------------------------------ tensor product
    def tensor_kernel(self, flavor: str) -> dict:
        """Kernel on blocks (Y, A1, W, A2) for the tensor product of morphisms."""
        hit = self._tensor_kernels.get(flavor)
        if hit is not None:
            return hit
        alg, N = self.alg, self.order
        if flavor == "plain":
            K = UTensor.one(alg, 4, N, None)
        else:
            # backwards through: alpha^-1_{Y,W,A}, multiplication on A(x)A,
            # alpha_{W,A,A}, crossing of A past W, alpha^-1_{A,W,A}, alpha_{Y,A,W(x)A}
            K = self.phi_inv.coproduct_on_leg(2)                     # (Y, W, A1, A2)
            K = K * self.phi.insert_legs((2, 3, 4), 4)
            K = K.permute_legs((1, 3, 2, 4))                         # (Y, A1, W, A2)
            # A crosses W: "braid" is beta_{A,W}, "inverse" is beta_{W,A}^-1
            if self.crossing == "inverse":
                K = K * self.R_inv.permute_legs((2, 1)).insert_legs((2, 3), 4)
            else:
                K = K * self.R.insert_legs((2, 3), 4)
            K = K * self.phi_inv.insert_legs((2, 3, 4), 4)
            K = K * self.phi.coproduct_on_leg(2)
        self._tensor_kernels[flavor] = K.terms
        return K.terms

    def tensor(self, f: FMorphism, g: FMorphism, flavor: str = "phi") -> FMorphism:
        kernel = self.tensor_kernel(flavor)
        nx, ny, nw = len(f.source), len(f.target), len(g.target)

        def fn(atom, k):
            gens, monos = atom
            ax = (gens[:nx], monos[:nx])
            az = (gens[nx:], monos[nx:])
            out: Elem = {}
            for (ky, k1, kw, k2), c in kernel.items():
                kk = k - valuation(c)
                if kk <= 0:
                    continue
                fx = f.twisted(k1)(ax, kk)
                if not fx:
                    continue
                gz = g.twisted(k2)(az, kk)
                if not gz:
                    continue
                prod: Elem = {}
                for (g1, m1), c1 in fx.items():
                    for (g2, m2), c2 in gz.items():
                        _add(prod, (g1 + g2, m1 + m2), c1 * c2)
                elem_iadd(out, self.act_blocks((ky, kw), (ny, nw), prod), c)
            return out
        return FMorphism(self, f.source + g.source, f.target + g.target, fn,
                         f"({f.name} (x) {g.name})")

    def tensor_plain(self, f, g):
        return self.tensor(f, g, "plain")

    def tensor_phi(self, f, g):
        return self.tensor(f, g, "phi")

    # ------------------------------------------------------------ tables and comparison
    def table(self, x: Elem, kinds: tuple, deg_a: Optional[int] = None,
              deg_u: Optional[int] = None) -> Dict[tuple, HSeries]:
        """Coordinates of an element: Q legs read as c -> pi(e*^c > x) for |c| <= deg_a,
        regular legs kept as PBW monomials; U(g) monomials above deg_u are dropped
        and flagged."""
        deg_a = self.deg_a if deg_a is None else deg_a
        deg_u = self.deg_u if deg_u is None else deg_u
        alg = self.alg
        qpos = [i for i, k in enumerate(kinds) if k == Q_LEG]
        stars = self.star_monomials(deg_a)
        out: Dict[tuple, HSeries] = {}
        for cs in itertools.product(stars, repeat=len(qpos)):
            for (gens, monos), c in x.items():
                per_leg = []
                for i, (gen, v) in enumerate(zip(gens, monos)):
                    if kinds[i] == Q_LEG:
                        cc = cs[qpos.index(i)]
                        vals: Dict[tuple, Fraction] = {}
                        for w, f in alg.mul_mono(cc, v).items():
                            for m, f2 in self.pi_atom(gen, w).items():
                                _acc(vals, m, f * f2)
                        per_leg.append(vals)
                    else:
                        per_leg.append({v: Fraction(1)})
                for combo in itertools.product(*(d.items() for d in per_leg)):
                    ms = tuple(m for m, _ in combo)
                    if any(kinds[i] == Q_LEG and sum(ms[i]) > deg_u for i in range(len(ms))):
                        self.overflow = True
                        continue
                    f = Fraction(1)
                    for _, a in combo:
                        f *= a
                    _add(out, (cs, ms), c.scale(f))
        return out

    def kappa(self, x: Elem, kinds: tuple) -> Dict[tuple, HSeries]:
        """(pi (x) ... (x) pi)(x) on Q legs, identity on regular legs (no truncation)."""
        alg = self.alg
        out: Dict[tuple, HSeries] = {}
        for (gens, monos), c in x.items():
            per_leg = [self.pi_atom(g, v) if kinds[i] == Q_LEG else {v: Fraction(1)}
                       for i, (g, v) in enumerate(zip(gens, monos))]
            for combo in itertools.product(*(d.items() for d in per_leg)):
                f = Fraction(1)
                for _, a in combo:
                    f *= a
                _add(out, tuple(m for m, _ in combo), c.scale(f))
        return out

    def morphism_difference(self, f: FMorphism, g: FMorphism, probes=None) -> dict:
        """Table-level difference of two morphisms on the probes (empty = equal)."""
        if f.source != g.source or f.target != g.target:
            raise InternalConsistencyError("comparing morphisms between different objects")
        probes = self.probe_elements(f.source) if probes is None else probes
        diff = {}
        for i, x in enumerate(probes):
            d = elem_add(f(x), g(x), -1)
            t = self.table(d, f.target)
            if t:
                diff[i] = t
        return diff

    def probe_elements(self, kinds: tuple) -> List[Elem]:
        if kinds == (Q_LEG,):
            return self.probes()
        if kinds == ():
            return [{((), ()): self.one}]
        if all(k == Q_LEG for k in kinds):
            s = self.probes()
            out = []
            for combo in itertools.product(s[:3], repeat=len(kinds)):
                x: Elem = {((), ()): self.one}
                for y in combo:
                    x = {(g1 + g2, m1 + m2): c1 * c2 for (g1, m1), c1 in x.items()
                         for (g2, m2), c2 in y.items()}
                out.append(x)
            return out
        raise InternalConsistencyError(f"no probes for {kinds}")

    def equal(self, f: FMorphism, g: FMorphism, probes=None) -> bool:
        return not self.morphism_difference(f, g, probes)

    def truncate_elem(self, x: Elem, order: int) -> Elem:
        out = {}
        for k, c in x.items():
            t = c.truncate(order)
            if t:
                out[k] = t
        return out


# ====================================================================== pipeline

def build_model(Q: QuasiLieBialgebra, deg_u: int = 4, deg_a: int = 4, order: int = 3,
                associator: Optional[FreeSeries] = None, crossing: str = "braid") -> TruncModel:
    M = TruncModel(Q, deg_u, deg_a, order, associator, crossing)
    rep = M.report
    # A action tables and their checks
    tables = a_action_tables(M)
    rep.extend(check_action_tables(M, tables))
    # splitting: pi(s0) = 1 and pi(sigma(y) > s0) = 0 for y of positive degree
    alg = M.alg
    pi_s0 = M.pi(M.s0())
    rep.add("pi(s0) = 1", pi_s0 == {alg.unit: M.one}, {alg.mono_str(m): c for m, c in pi_s0.items()})
    bad = []
    for y in M.star_monomials(M.deg_a):
        if not any(y):
            continue
        x = {}
        for w, f in sigma_mono(alg, y).items():
            _add(x, ((S0,), (w,)), M.one.scale(f))
        if M.pi(x):
            bad.append(alg.mono_str(y))
    rep.add("pi(sigma(y) > s0) = 0 for y in S^{>0}g*", not bad, bad)
    # the idempotent p in the plain category
    p = M.p()
    record_equal(rep, "p o p = p (plain)", M, M.compose_plain(p, p), p)
    record_equal(rep, "eps_Q o p = eps_Q", M, M.compose_plain(M.eps_q(), p), M.eps_q())
    M.action_tables = tables
    if not rep.passed:
        raise InternalConsistencyError("model construction failed its checks", rep)
    return M


def a_action_tables(M: TruncModel) -> Dict[object, Dict[tuple, Dict[tuple, Fraction]]]:
    """For each generator z of p: rows c (|c| < deg_a) -> {c': coefficient of e*^{c'} in e*^c z}.

    A functional s in A is determined by its values on ordered star monomials,
    and (z > s)(e*^c) = s(e*^c z) = sum_{c'} table[c][c'] s(e*^{c'}).
    """
    alg = M.alg
    out = {}
    rows = M.star_monomials(M.deg_a - 1)
    for i, letter in enumerate(alg.lie.letters):
        z = alg.gen(i)
        tab = {}
        for c in rows:
            row = {}
            for w, f in alg.mul_mono(c, z).items():
                if not any(alg.g_part(w)):
                    _acc(row, w, f)
            tab[c] = row
        out[letter] = tab
    return out


def check_action_tables(M: TruncModel, tables) -> Report:
    rep = Report("A action tables")
    alg = M.alg
    lie = alg.lie
    rows = M.star_monomials(M.deg_a - 2)

    def apply(tab_y, tab_z, c):
        out = {}
        for c2, f in tab_y[c].items():
            for c3, f2 in tab_z.get(c2, {}).items():
                _acc(out, c3, f * f2)
        return out

    bad = []
    for y, z in itertools.combinations(lie.letters, 2):
        br = lie.bracket(y, z)
        for c in rows:
            lhs = {}
            for x, f in br.items():
                for c2, f2 in tables[x][c].items():
                    _acc(lhs, c2, f * f2)
            rhs = apply(tables[y], tables[z], c)
            for k, f in apply(tables[z], tables[y], c).items():
                _acc(rhs, k, -f)
            if lhs != rhs:
                bad.append((str(y), str(z), alg.mono_str(c)))
    rep.add("action respects [,]_p", not bad, bad)
    g_bad = [str(x) for x in lie.letters[:M.n] if tables[x].get(alg.unit)]
    rep.add("eps_A is g-linear", not g_bad, g_bad)
    return rep


# ------------------------------------------------------------------ p^Phi

def p_phi(M: TruncModel) -> SummandObject:
    """p' = p + (p - 1/2) o sum_{k>=1} 4^k beta_k u^k with u = p o p - p (Phi-composition)."""
    if "p_phi" in M._named:
        return SummandObject((Q_LEG,), M._named["p_phi"])
    p = M.p()
    u = M.lincomb([(1, M.compose_phi(p, p)), (-1, p)], "u")
    ident = M.identity((Q_LEG,))
    a_half = M.lincomb([(1, p), (Fraction(-1, 2), ident)], "p - 1/2")
    terms = []
    power = u
    # u = 0 mod h^2, so u^k only matters for 2k < order
    for k in range(1, max(2, (M.order + 1) // 2)):
        terms.append((4 ** k * inv_sqrt_taylor_coeff(k), power))
        power = M.compose_phi(power, u)
    series = M.lincomb(terms, "sum alpha_k u^k")
    pphi = M.lincomb([(1, p), (1, M.compose_phi(a_half, series))], "p^Phi")
    M._named["p_phi"] = pphi
    return SummandObject((Q_LEG,), pphi)


def u_vanishes_mod_h2(M: TruncModel) -> bool:
    p = M.p()
    u = M.lincomb([(1, M.compose_phi(p, p)), (-1, p)], "u")
    for x in M.probes():
        if any(c[0] or c[1] for c in M.table(u(x), (Q_LEG,)).values()):
            return False
    return True


# ------------------------------------------------------------------ quasi-coalgebra

@dataclass
class Coalgebra:
    delta_q: FMorphism
    eps_q: FMorphism
    delta_prime: FMorphism
    r: FMorphism
    s: FMorphism
    r_inv: FMorphism
    s_inv: FMorphism
    delta_phi: FMorphism
    p_phi: FMorphism


def _summand_inverse(M: TruncModel, f: FMorphism, unit: FMorphism) -> FMorphism:
    """Inverse of f in the endomorphism algebra of a summand with unit ``unit``,
    valid when f = unit mod h: sum_k (unit - f)^k."""
    d = M.lincomb([(1, unit), (-1, f)], "unit - f")
    terms = [(1, unit)]
    power = d
    for _ in range(1, M.order):
        terms.append((1, power))
        power = M.compose_phi(power, d)
    return M.lincomb(terms, f"{f.name}^-1")


def coalgebra_on_summand(M: TruncModel) -> Coalgebra:
    if "coalgebra" in M._named:
        return M._named["coalgebra"]
    pphi = p_phi(M).idem
    dq, eq = M.delta_q(), M.eps_q()
    ident = M.identity((Q_LEG,))
    dprime = M.compose_phi(M.compose_phi(M.tensor_phi(pphi, pphi), dq), pphi)
    dprime.name = "Delta'_Q"
    r = M.compose_phi(M.tensor_phi(eq, ident), dprime)
    s = M.compose_phi(M.tensor_phi(ident, eq), dprime)
    r_inv = _summand_inverse(M, r, pphi)
    s_inv = _summand_inverse(M, s, pphi)
    dphi = M.compose_phi(M.tensor_phi(r_inv, s_inv), dprime)
    dphi.name = "Delta^Phi_Q"
    out = Coalgebra(dq, eq, dprime, r, s, r_inv, s_inv, dphi, pphi)
    M._named["coalgebra"] = out
    return out


def table_defect(M: TruncModel, diff: dict) -> list:
    """JSON form of a morphism_difference result."""
    out = []
    for probe, t in sorted(diff.items()):
        for key, c in sorted(t.items(), key=lambda kv: repr(kv[0])):
            cs, ms = key
            out.append({"probe": probe, "rows": [M.alg.mono_str(c) for c in cs],
                        "legs": [M.alg.mono_str(m) for m in ms], "coeff": c.to_json()})
    return out


def record_equal(rep: Report, name: str, M: TruncModel, f: FMorphism, g: FMorphism) -> bool:
    diff = M.morphism_difference(f, g)
    rep.add(name, not diff, table_defect(M, diff) if diff else None, f"mod h^{M.order}")
    return not diff


def check_counit_repair(M: TruncModel) -> Report:
    rep = Report(f"quasi-coalgebra on the summand mod h^{M.order}")
    C = coalgebra_on_summand(M)
    ident = M.identity((Q_LEG,))
    eq = C.eps_q
    record_equal(rep, "eps_Q o p^Phi = eps_Q", M, M.compose_phi(eq, C.p_phi), eq)
    record_equal(rep, "(eps (x) eps) o Delta' = eps_Q", M,
                 M.compose_phi(M.tensor_phi(eq, eq), C.delta_prime), eq)
    record_equal(rep, "(eps (x) id) o Delta^Phi = p^Phi", M,
                 M.compose_phi(M.tensor_phi(eq, ident), C.delta_phi), C.p_phi)
    record_equal(rep, "(id (x) eps) o Delta^Phi = p^Phi", M,
                 M.compose_phi(M.tensor_phi(ident, eq), C.delta_phi), C.p_phi)
    return rep


# ------------------------------------------------------------------ End(C) and U(g)

def hom_basis(M: TruncModel, z: Dict[tuple, object]) -> FMorphism:
    """z in U(g) -> p^Phi o e_z o p^Phi, an endomorphism of the summand (Q(x)A, p^Phi)."""
    pphi = p_phi(M).idem
    return M.compose_phi(M.compose_phi(pphi, M.right_mult(z)), pphi)


def hom_basis_inverse(M: TruncModel, h: FMorphism) -> Dict[tuple, HSeries]:
    """Solve hom_basis(z) = h for z in U(g)[h] order by order from pi(h(s0))."""
    def read(f):
        return {m: c for (m,), c in M.kappa(f(M.s0()), (Q_LEG,)).items()}

    target = read(h)
    z: Dict[tuple, HSeries] = {}
    for _ in range(M.order):
        got = read(hom_basis(M, z)) if z else {}
        resid = elem_add(target, got, -1)
        if not resid:
            break
        z = elem_add(z, resid)
    return z


def _solve(M: TruncModel, target: Dict[tuple, HSeries], image) -> Dict[tuple, HSeries]:
    """Find X with image(X) = target where image = id mod h (Picard iteration)."""
    X = dict(target)
    for _ in range(M.order + 1):
        resid = elem_add(target, image(X), -1)
        if not resid:
            return X
        X = elem_add(X, resid)
    resid = elem_add(target, image(X), -1)
    if resid:
        raise TruncationError("order-by-order solve did not converge")
    return X


def _split_terms(X: Dict[tuple, HSeries]):
    return list(X.items())


def delta_map(M: TruncModel, coalg: Coalgebra):
    """X in U(g)^{(x)2}[h] -> kappa(((E_a (x) E_b) o Delta^Phi)(s0))."""
    cache = {}

    def image(X):
        out: Dict[tuple, HSeries] = {}
        for (a, b), c in X.items():
            if (a, b) not in cache:
                h = M.compose_phi(M.tensor_phi(hom_basis(M, {a: 1}), hom_basis(M, {b: 1})),
                                  coalg.delta_phi)
                cache[(a, b)] = M.kappa(h(M.s0()), (Q_LEG, Q_LEG))
            for k, v in cache[(a, b)].items():
                _add(out, k, c * v)
        return out
    return image


@dataclass
class UhgStructure:
    deltas: Dict[object, Dict[tuple, HSeries]]
    counit: Dict[object, HSeries]
    phi: Dict[tuple, HSeries]
    order: int

    def skew_first_order(self, alg: PBWAlgebra) -> Dict[object, SparseTensor]:
        out = {}
        for x, d in self.deltas.items():
            pairs = []
            for (a, b), c in d.items():
                flipped = d.get((b, a))
                v = c[1] - (flipped[1] if flipped is not None else 0)
                if v:
                    pairs.append(((a, b), v))
            out[x] = _mono_pairs_to_sparse(alg, pairs)
        return out


def _mono_pairs_to_sparse(alg: PBWAlgebra, pairs) -> SparseTensor:
    terms = []
    for key, c in pairs:
        word = []
        for m in key:
            d = sum(m)
            if d == 0:
                word.append(None)
            elif d == 1:
                word.append(alg.lie.letters[m.index(1)])
            else:
                raise InternalConsistencyError("first-order coproduct has a leg of degree > 1")
        terms.append((tuple(word), c))
    legs = len(pairs[0][0]) if pairs else 2
    return SparseTensor.from_pairs(legs, terms)


def compute_uhg_structure(M: TruncModel, with_phi: bool = True) -> UhgStructure:
    """Coproduct on generators, counit and Phi_H, all mod h^2."""
    M2 = M if M.order == 2 else M.with_order(2)
    coalg = coalgebra_on_summand(M2)
    image = delta_map(M2, coalg)
    deltas, counits = {}, {}
    for i in range(M2.n):
        z = {M2.alg.gen(i): 1}
        T = M2.compose_phi(coalg.delta_phi, hom_basis(M2, z))
        target = M2.kappa(T(M2.s0()), (Q_LEG, Q_LEG))
        deltas[M2.alg.lie.letters[i]] = _solve(M2, target, image)
        eps = M2.compose_phi(coalg.eps_q, hom_basis(M2, z))(M2.s0())
        counits[M2.alg.lie.letters[i]] = eps.get(((), ()), HSeries.zero(2))
    phi = compute_phi_h(M2, coalg, image) if with_phi else {}
    return UhgStructure(deltas, counits, phi, 2)


def compute_phi_h(M: TruncModel, coalg: Coalgebra, image2) -> Dict[tuple, HSeries]:
    """Solve (E_a (x) ((E_b (x) E_c) o D)) o D = alpha o (D (x) p^Phi) o D for sum a(x)b(x)c."""
    D, pphi = coalg.delta_phi, coalg.p_phi
    alpha = M.alpha_morphism((Q_LEG,) * 3)
    T = M.compose_phi(alpha, M.compose_phi(M.tensor_phi(D, pphi), D))
    target = M.kappa(T(M.s0()), (Q_LEG,) * 3)
    cache = {}

    def image(X):
        out: Dict[tuple, HSeries] = {}
        for (a, b, c), v in X.items():
            if (a, b, c) not in cache:
                inner = M.compose_phi(M.tensor_phi(hom_basis(M, {b: 1}), hom_basis(M, {c: 1})), D)
                h = M.compose_phi(M.tensor_phi(hom_basis(M, {a: 1}), inner), D)
                cache[(a, b, c)] = M.kappa(h(M.s0()), (Q_LEG,) * 3)
            for k, w in cache[(a, b, c)].items():
                _add(out, k, v * w)
        return out
    return _solve(M, target, image)


# ------------------------------------------------------------------ the twist

def monoidal_defect(M: TruncModel) -> Dict[tuple, HSeries]:
    """J = alpha^-1_{M(x)N} o mu o (alpha_M (x) alpha_N) mod h^2 on M = N = U(p) regular,
    read off at m = n = 1."""
    M2 = M if M.order == 2 else M.with_order(2)
    coalg = coalgebra_on_summand(M2)
    pphi = coalg.p_phi
    one = {(M2.unit,): M2.one}
    one_hat = M2.compose_phi(M2.hat_regular(one, 1), pphi)
    mu = M2.compose_phi(M2.tensor_phi(one_hat, one_hat), coalg.delta_phi)
    target = M2.kappa(mu(M2.s0()), (U_LEG, U_LEG))

    def image(J):
        h = M2.compose_phi(M2.hat_regular(J, 2), pphi)
        return M2.kappa(h(M2.s0()), (U_LEG, U_LEG))

    return _solve(M2, target, image)


def compute_twist(M: TruncModel) -> Dict[tuple, HSeries]:
    """The twist F with Delta_new = F Delta F^-1 relating the structure read through
    free A-modules to the Drinfeld one, mod h^2.

    mu being H-linear forces Delta_new = J^-1 Delta J for J = monoidal_defect, so F = J^-1.
    """
    J = monoidal_defect(M)
    JU = UTensor(M.alg, 2, 2, J, None)
    return dict(u_inverse(JU).terms)


def expected_twist(M: TruncModel) -> Dict[tuple, HSeries]:
    """1 + (h/2) sum_i e^i (x) e_i."""
    alg = M.alg
    out = {(alg.unit, alg.unit): HSeries.one(2)}
    for i in range(1, M.n + 1):
        out[(alg.letter_mono(es(i)), alg.letter_mono(e(i)))] = HSeries.hbar_power(1, 2, Fraction(1, 2))
    return out


def hom_c_unit_rank(M: TruncModel) -> int:
    """Rank of {h_c o p^Phi} where h_c(x) = eps(pi(e*^c > x)); expected 1."""
    pphi = p_phi(M).idem
    probes = M.probes()
    rows = []
    for c in M.star_monomials(M.deg_a):
        def fn(atom, k, c=c):
            (gen,), (v,) = atom
            out = {}
            for w, f in M.alg.mul_mono(c, v).items():
                for m, f2 in M.pi_atom(gen, w).items():
                    if not any(m):
                        _add(out, ((), ()), M.one.scale(f * f2))
            return out
        hc = M.compose_phi(FMorphism(M, (Q_LEG,), (), fn, "h_c"), pphi)
        row = []
        for x in probes:
            val = hc(x).get(((), ()), HSeries.zero(M.order))
            row.extend(val.coeffs)
        rows.append(row)
    return _rank(rows)


def _rank(rows) -> int:
    mat = [list(r) for r in rows]
    rank, col = 0, 0
    ncols = len(mat[0]) if mat else 0
    while rank < len(mat) and col < ncols:
        piv = next((i for i in range(rank, len(mat)) if mat[i][col]), None)
        if piv is None:
            col += 1
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        for i in range(len(mat)):
            if i != rank and mat[i][col]:
                f = mat[i][col] / mat[rank][col]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[rank])]
        rank += 1
        col += 1
    return rank


# ------------------------------------------------------------------ properties

def record_close(rep: Report, name: str, M: TruncModel, f: FMorphism, g: FMorphism, k: int) -> bool:
    """f = g mod h^k on the probes; the defect lists the differing low-order entries."""
    diff = {}
    for probe, t in M.morphism_difference(f, g).items():
        low = {key: c for key, c in t.items() if any(c.coeffs[:k])}
        if low:
            diff[probe] = low
    rep.add(name, not diff, table_defect(M, diff) if diff else None, f"mod h^{k}")
    return not diff


def difference_valuation(M: TruncModel, f: FMorphism, g: FMorphism, probes=None) -> int:
    """Largest k with f = g mod h^k on the probes (M.order when they agree)."""
    best = M.order
    for t in M.morphism_difference(f, g, probes).values():
        for c in t.values():
            best = min(best, c.valuation())
    return best


def check_g_equivariance(M: TruncModel, f: FMorphism, probes=None) -> bool:
    """f(x > a) = x > f(a) for the generators x of g on the probes."""
    probes = M.probe_elements(f.source) if probes is None else probes
    ks, kt = len(f.source), len(f.target)
    for i in range(M.n):
        x = M.alg.gen(i)
        for a in probes:
            lhs = f(M.act_mono(x, a, ks))
            rhs = M.act_mono(x, f(a), kt)
            if M.table(elem_add(lhs, rhs, -1), f.target):
                return False
    return True


def tensor_json(M: TruncModel, x: Dict[tuple, HSeries]) -> list:
    """Serialize {monomial tuple: series} with readable monomials."""
    out = []
    for key in sorted(x):
        out.append({"legs": [M.alg.mono_str(m) for m in key], "coeff": x[key].to_json()})
    return out


def pphi_table(M: TruncModel, deg_a: int, deg_u: int) -> dict:
    """Tables of p^Phi on the probes of a given truncation (used by the audit)."""
    pphi = p_phi(M).idem
    probes = [M.s0()] + [M.x_b(b) for b in M.star_monomials(deg_a)]
    return {i: M.table(pphi(x), (Q_LEG,), deg_a, deg_u) for i, x in enumerate(probes)}


# ------------------------------------------------------------------ the full run

@dataclass
class PipelineResult:
    report: Report
    twist: Dict[tuple, HSeries]
    uhg: UhgStructure
    model: TruncModel
    model2: TruncModel
    timings: Dict[str, float] = field(default_factory=dict)

    def reported(self) -> dict:
        """The tensors a run reports; the stabilization audit compares these."""
        M2 = self.model2
        return {
            "twist": tensor_json(M2, self.twist),
            "delta": {str(x): tensor_json(M2, d) for x, d in self.uhg.deltas.items()},
            "counit": {str(x): c.to_json() for x, c in self.uhg.counit.items()},
            "phi_h": tensor_json(M2, self.uhg.phi),
        }


def _phi_h_is_one(U: UhgStructure, alg: PBWAlgebra) -> bool:
    u = alg.unit
    return U.phi == {(u, u, u): HSeries.one(U.order)}


def run_pipeline(Q: QuasiLieBialgebra, order: int = 3, deg_a: Optional[int] = None,
                 deg_u: int = 4, crossing: str = "braid") -> PipelineResult:
    """p^Phi, the repaired quasi-coalgebra, the twist and the structure on U(g)[[h]]."""
    import time
    deg_a = order + 1 if deg_a is None else deg_a
    timings = {}
    t0 = time.perf_counter()
    M = build_model(Q, deg_u, deg_a, order, crossing=crossing)
    rep = Report(f"quantization pipeline mod h^{order}")
    rep.extend(M.report, "model: ")
    pphi = p_phi(M).idem
    p = M.p()
    record_close(rep, "u = p o p - p vanishes mod h^2", M, M.compose_phi(p, p), p, 2)
    record_equal(rep, "p^Phi o p^Phi = p^Phi", M, M.compose_phi(pphi, pphi), pphi)
    record_close(rep, "p^Phi = p", M, pphi, p, 2)
    timings["idempotent"] = time.perf_counter() - t0
    rep.extend(check_counit_repair(M))
    C = coalgebra_on_summand(M)
    record_close(rep, "r = p^Phi", M, C.r, pphi, 2)
    record_close(rep, "s = p^Phi", M, C.s, pphi, 2)
    rank = hom_c_unit_rank(M)
    rep.add("Hom(C, 1) has rank 1", rank == 1, {"rank": rank})
    timings["coalgebra"] = time.perf_counter() - t0
    M2 = M if order == 2 else M.with_order(2)
    J = compute_twist(M2)
    want = expected_twist(M2)
    defect = {k: c for k, c in elem_add(J, want, -1).items() if c}
    rep.add("twist F = 1 + (h/2) sum e^i (x) e_i mod h^2", not defect, tensor_json(M2, defect))
    timings["twist"] = time.perf_counter() - t0
    U = compute_uhg_structure(M2)
    skew = U.skew_first_order(M2.alg)
    for x in Q.letters:
        got, ref = skew[x], Q.delta_of(x)
        rep.add(f"(Delta - Delta^op)({x})/h = delta({x}) mod h", got == ref, got - ref)
    for x, c in U.counit.items():
        rep.add(f"eps({x}) = 0", not c, c)
    rep.add("Phi_H = 1 mod h^2", _phi_h_is_one(U, M2.alg), tensor_json(M2, U.phi))
    rep.add("no truncation overflow", not (M.overflow or M2.overflow),
            {"deg_u": M.deg_u, "hint": "a table entry exceeded deg_u; raise --deg-u"})
    timings["uhg"] = time.perf_counter() - t0
    return PipelineResult(rep, J, U, M, M2, timings)


def stabilization_audit(Q: QuasiLieBialgebra, result: PipelineResult, step: int = 2) -> Report:
    """Re-run at deg_a + step, deg_u + step and compare everything that is reported."""
    M = result.model
    bigger = run_pipeline(Q, M.order, M.deg_a + step, M.deg_u + step, M.crossing)
    rep = Report(f"stabilization audit (deg_a {M.deg_a}->{M.deg_a + step}, "
                 f"deg_u {M.deg_u}->{M.deg_u + step})")
    rep.add("re-run passes", bigger.report.passed,
            [c.name for c in bigger.report.failures()])
    a, b = result.reported(), bigger.reported()
    for key in a:
        rep.add(f"{key} unchanged", a[key] == b[key], {"before": a[key], "after": b[key]})
    before = pphi_table(M, M.deg_a, M.deg_u)
    after = pphi_table(bigger.model, M.deg_a, M.deg_u)
    changed = [i for i in before if before[i] != after[i]]
    rep.add("p^Phi tables unchanged on the common range", not changed, {"probes": changed})
    return rep


def dump_model(M: TruncModel) -> dict:
    """A action tables and truncation data for external audit."""
    alg = M.alg
    tables = getattr(M, "action_tables", None) or a_action_tables(M)
    return {
        "order": M.order, "deg_a": M.deg_a, "deg_u": M.deg_u, "crossing": M.crossing,
        "letters": [str(x) for x in alg.lie.letters],
        "action_tables": {
            str(z): {alg.mono_str(c): {alg.mono_str(c2): str(f) for c2, f in row.items()}
                     for c, row in tab.items()}
            for z, tab in tables.items()},
    }
