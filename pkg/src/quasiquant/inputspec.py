"""JSON input files: one algebra per file, rationals written as "p/q" strings.

    {
      "name": "borel bialgebra",
      "dim": 2,
      "bracket": [{"i": 1, "j": 2, "result": ["0", "1"]}],
      "delta":   [{"i": 2, "result": [["0", "1"], ["-1", "0"]]}],
      "phi":     [{"i": 1, "j": 2, "k": 3, "coeff": "1/4"}],
      "t":       [{"i": 1, "j": 1, "coeff": "1/2"}],
      "hbarOrder": 3,
      "truncation": {"degU": 4, "degA": 4},
      "associator": {"maxDegree": 2, "coefficients": {"XY": "1/24", "YX": "-1/24"}}
    }

Indices are 1-based. ``bracket`` lists [e_i, e_j] for i < j as a coefficient
vector; ``delta`` gives delta(e_i) as a dim x dim matrix of e_a (x) e_b
coefficients; ``phi`` lists entries with i < j < k and is completed
antisymmetrically; ``t`` lists entries with i <= j and is completed
symmetrically. Everything except ``dim`` is optional.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .associator import FreeSeries, rational_associator
from .errors import InputError
from .quasi_lie import LieAlgebra, QuasiLieBialgebra, g_letters
from .scalar_series import format_rational, parse_rational
from .tensor_space import SparseTensor, perm_sign

KNOWN_KEYS = {"name", "dim", "bracket", "delta", "phi", "t", "hbarOrder", "truncation",
              "associator"}


@dataclass
class InputSpec:
    name: str
    structure: QuasiLieBialgebra
    t: Optional[SparseTensor] = None
    order: Optional[int] = None
    deg_u: Optional[int] = None
    deg_a: Optional[int] = None
    associator: Optional[FreeSeries] = None
    raw: dict = field(default_factory=dict)


def _index(value, dim: int, what: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= dim:
        raise InputError(f"{what}: index {value!r} is not in 1..{dim}")
    return value - 1


def _vector(values, dim: int, what: str):
    if not isinstance(values, list) or len(values) != dim:
        raise InputError(f"{what}: expected a list of {dim} coefficients")
    return [parse_rational(v) for v in values]


def _positive_int(value, what: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise InputError(f"{what} must be a positive integer")
    return value


def parse_input(data: dict) -> InputSpec:
    if not isinstance(data, dict):
        raise InputError("input must be a JSON object")
    unknown = set(data) - KNOWN_KEYS
    if unknown:
        raise InputError(f"unknown keys: {sorted(unknown)}")
    if "dim" not in data:
        raise InputError("missing 'dim'")
    dim = data["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 0:
        raise InputError("'dim' must be a non-negative integer")
    letters = g_letters(dim)

    c = [[[Fraction(0)] * dim for _ in range(dim)] for _ in range(dim)]
    seen = set()
    for entry in data.get("bracket", []):
        i = _index(entry.get("i"), dim, "bracket")
        j = _index(entry.get("j"), dim, "bracket")
        if i >= j:
            raise InputError(f"bracket entries need i < j, got ({i + 1}, {j + 1})")
        if (i, j) in seen:
            raise InputError(f"bracket [{i + 1},{j + 1}] given twice")
        seen.add((i, j))
        v = _vector(entry.get("result"), dim, f"bracket [{i + 1},{j + 1}]")
        for k, x in enumerate(v):
            c[i][j][k] = x
            c[j][i][k] = -x
    L = LieAlgebra(letters, c)

    delta = [[[Fraction(0)] * dim for _ in range(dim)] for _ in range(dim)]
    for entry in data.get("delta", []):
        i = _index(entry.get("i"), dim, "delta")
        rows = entry.get("result")
        if not isinstance(rows, list) or len(rows) != dim:
            raise InputError(f"delta(e{i + 1}): expected a {dim}x{dim} matrix")
        delta[i] = [_vector(r, dim, f"delta(e{i + 1})") for r in rows]

    phi_terms = {}
    for entry in data.get("phi", []):
        idx = [_index(entry.get(k), dim, "phi") for k in "ijk"]
        if not idx[0] < idx[1] < idx[2]:
            raise InputError("phi entries need i < j < k")
        coeff = parse_rational(entry.get("coeff"))
        for perm in itertools.permutations(range(3)):
            w = tuple(letters[idx[p]] for p in perm)
            phi_terms[w] = phi_terms.get(w, 0) + perm_sign([p + 1 for p in perm]) * coeff
    Q = QuasiLieBialgebra(L, delta, SparseTensor(3, phi_terms))

    t = None
    if "t" in data:
        t_terms = {}
        for entry in data["t"]:
            i = _index(entry.get("i"), dim, "t")
            j = _index(entry.get("j"), dim, "t")
            if i > j:
                raise InputError("t entries need i <= j")
            coeff = parse_rational(entry.get("coeff"))
            t_terms[(letters[i], letters[j])] = coeff
            t_terms[(letters[j], letters[i])] = coeff
        t = SparseTensor(2, t_terms)

    order = _positive_int(data["hbarOrder"], "hbarOrder") if "hbarOrder" in data else None
    trunc = data.get("truncation", {})
    if not isinstance(trunc, dict) or set(trunc) - {"degU", "degA"}:
        raise InputError("truncation takes only degU and degA")
    deg_u = _positive_int(trunc["degU"], "degU") if "degU" in trunc else None
    deg_a = _positive_int(trunc["degA"], "degA") if "degA" in trunc else None

    assoc = None
    if "associator" in data:
        a = data["associator"]
        if not isinstance(a, dict) or "coefficients" not in a:
            raise InputError("associator needs a 'coefficients' table")
        assoc = rational_associator(_positive_int(a.get("maxDegree", 2), "maxDegree"),
                                    a["coefficients"])
    return InputSpec(str(data.get("name", "")), Q, t, order, deg_u, deg_a, assoc, data)


def load_input(path: str) -> InputSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    return parse_input(data)


def structure_to_input(Q: QuasiLieBialgebra, name: str = "") -> dict:
    """Inverse of parse_input for the structure part."""
    dim = Q.base.dim
    letters = Q.letters
    out = {"name": name, "dim": dim, "bracket": [], "delta": [], "phi": []}
    for i, j in itertools.combinations(range(dim), 2):
        v = Q.base.c[i][j]
        if any(v):
            out["bracket"].append({"i": i + 1, "j": j + 1,
                                   "result": [format_rational(x) for x in v]})
    for i in range(dim):
        if any(any(r) for r in Q.delta[i]):
            out["delta"].append({"i": i + 1, "result": [[format_rational(x) for x in r]
                                                         for r in Q.delta[i]]})
    for i, j, k in itertools.combinations(range(dim), 3):
        coeff = Q.phi.terms.get((letters[i], letters[j], letters[k]), 0)
        if coeff:
            out["phi"].append({"i": i + 1, "j": j + 1, "k": k + 1,
                               "coeff": format_rational(Fraction(coeff))})
    return out
