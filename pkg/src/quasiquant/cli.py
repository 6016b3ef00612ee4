"""Command line: check, double, drinfeld, quantize.

Exit codes: 0 all checks pass, 2 a mathematical check failed, 3 truncation
unstable, 4 invalid input.
"""
from __future__ import annotations

import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from typing import List, Tuple

import click

from . import __version__
from .associator import drinfeld_quantize
from .categorical_engine import dump_model, run_pipeline, stabilization_audit
from .errors import (InputError, InternalConsistencyError, PreconditionError,
                     QuasiQuantError, TruncationError, UnsupportedDegree)
from .fixtures import FIXTURES
from .inputspec import InputSpec, load_input, parse_input, structure_to_input
from .quasi_bialgebra import (check_axioms, check_quasitriangular, classical_limit,
                              extract_t)
from .quasi_lie import (build_double, check_quasi_lie, double_brackets,
                        from_invariant_pair, verify_sub_structure)
from .report import Report

EXIT_OK, EXIT_MATH, EXIT_TRUNCATION, EXIT_INPUT = 0, 2, 3, 4

# failing only these means the truncation was too small, not that the math is wrong
TRUNCATION_CHECKS = {"no truncation overflow"}


def _lie_table(L) -> list:
    out = []
    for a in L.letters:
        for b in L.letters:
            if a < b:
                v = L.bracket(a, b)
                if v:
                    out.append({"a": str(a), "b": str(b),
                                "result": {str(x): str(c) for x, c in sorted(v.items())}})
    return out


def _load(source: str) -> InputSpec:
    if source in FIXTURES:
        Q = FIXTURES[source]()
        return parse_input(structure_to_input(Q, source))
    return load_input(source)


def _check(inp: InputSpec, opts: dict) -> Tuple[List[Report], dict]:
    return [check_quasi_lie(inp.structure)], {}


def _double(inp: InputSpec, opts: dict) -> Tuple[List[Report], dict]:
    Q = inp.structure
    rep = Report("double")
    try:
        D = build_double(Q)
    except InternalConsistencyError as exc:
        return [exc.report or rep], {}
    return [D.report, verify_sub_structure(Q)], {
        "bracket": _lie_table(double_brackets(Q)),
        "omega": D.omega.to_json(),
        "f_std": D.f_std.to_json(),
    }


def _drinfeld(inp: InputSpec, opts: dict) -> Tuple[List[Report], dict]:
    order = opts["order"]
    if inp.t is not None:
        L, t, what = inp.structure.base, inp.t, "(g, t)"
    else:
        D = build_double(inp.structure)
        L, t, what = D.p, D.omega, "the double (p, omega)"
    B = drinfeld_quantize(L, t, order, inp.associator, degree=None)
    reports = [check_axioms(B), check_quasitriangular(B)]
    rt = Report("classical limit round trip")
    if order >= 3:
        limit = classical_limit(B)
        want = from_invariant_pair(L, t)
        rt.add("classical limit = structure associated to (p, t)", limit.same_structure(want),
               {"delta": [str(limit.delta_of(x) - want.delta_of(x)) for x in L.letters],
                "phi": (limit.phi - want.phi).to_json()})
        got_t = extract_t(B)
        rt.add("extract_t returns t", got_t == t, (got_t - t).to_json())
    else:
        rt.note = "classical limit needs --order >= 3; skipped"
    reports.append(rt)
    return reports, {"quantized": what, "structure": B.to_json()}


def _quantize(inp: InputSpec, opts: dict) -> Tuple[List[Report], dict]:
    Q = inp.structure
    result = run_pipeline(Q, opts["order"], opts["deg_a"], opts["deg_u"])
    reports = [result.report]
    tensors = result.reported()
    if opts["audit"]:
        reports.append(stabilization_audit(Q, result))
    if opts["dump_model"]:
        tensors["model"] = dump_model(result.model)
    if opts["timings"]:
        tensors["timings"] = {k: round(v, 3) for k, v in result.timings.items()}
    return reports, tensors


COMMANDS = {"check": _check, "double": _double, "drinfeld": _drinfeld, "quantize": _quantize}


def run_command(command: str, source: str, opts: dict) -> Tuple[dict, int]:
    """Run one command on one input; never raises for library errors."""
    start = time.perf_counter()
    out = {"command": command, "version": __version__, "input": source}
    try:
        inp = _load(source)
    except (InputError, QuasiQuantError) as exc:
        out.update(status="invalid input", error=str(exc))
        return out, EXIT_INPUT
    eff = dict(opts)
    eff["order"] = opts["order"] or inp.order or 3
    eff["deg_u"] = opts["deg_u"] or inp.deg_u or 4
    eff["deg_a"] = opts["deg_a"] or inp.deg_a or eff["order"] + 1
    out["echo"] = inp.raw
    out["parameters"] = {"order": eff["order"], "deg_u": eff["deg_u"], "deg_a": eff["deg_a"]}
    code = EXIT_OK
    try:
        reports, tensors = COMMANDS[command](inp, eff)
    except (InputError, UnsupportedDegree) as exc:
        out.update(status="invalid input", error=str(exc))
        return out, EXIT_INPUT
    except TruncationError as exc:
        out.update(status="truncation unstable", error=str(exc))
        return out, EXIT_TRUNCATION
    except (PreconditionError, InternalConsistencyError) as exc:
        rep = getattr(exc, "report", None)
        out.update(status="failed", error=str(exc))
        if rep is not None:
            out["reports"] = [rep.to_json()]
        return out, EXIT_MATH
    out["reports"] = [r.to_json() for r in reports]
    out["tensors"] = tensors
    audit = [r for r in reports if r.title.startswith("stabilization audit")]
    failed = [c.name for r in reports if r not in audit for c in r.failures()]
    if any(name not in TRUNCATION_CHECKS for name in failed):
        code = EXIT_MATH
    elif failed or (audit and not audit[0].passed):
        code = EXIT_TRUNCATION
    out["status"] = {EXIT_OK: "pass", EXIT_MATH: "failed",
                     EXIT_TRUNCATION: "truncation unstable"}[code]
    if opts.get("timings"):
        out["seconds"] = round(time.perf_counter() - start, 3)
    return out, code


def _summary(out: dict) -> str:
    lines = [f"{out['command']} {out['input']}: {out['status']}  (quasiquant {out['version']})"]
    if "parameters" in out:
        lines.append("  " + ", ".join(f"{k}={v}" for k, v in out["parameters"].items()))
    if "error" in out:
        lines.append(f"  error: {out['error']}")
    for rep in out.get("reports", []):
        lines.append(f"  [{'pass' if rep['passed'] else 'FAIL'}] {rep['title']}")
        for c in rep["checks"]:
            if not c["passed"]:
                lines.append(f"      FAIL {c['name']}")
        if rep.get("note"):
            lines.append(f"      note: {rep['note']}")
    return "\n".join(lines)


def _options(f):
    f = click.option("--timings", is_flag=True, help="Include wall-clock timings (not reproducible).")(f)
    f = click.option("--output", "-o", type=click.Path(dir_okay=False), help="Write the report here.")(f)
    f = click.option("--format", "fmt", type=click.Choice(["json", "summary"]), default="json")(f)
    f = click.option("--jobs", type=click.IntRange(1), default=1, help="Inputs evaluated in parallel.")(f)
    f = click.option("--dump-model", is_flag=True, help="Emit the A action tables (quantize).")(f)
    f = click.option("--audit", is_flag=True, help="Re-run at deg_a+2, deg_u+2 and compare (quantize).")(f)
    f = click.option("--deg-a", type=click.IntRange(1), default=None, help="Star degree of probes and tables.")(f)
    f = click.option("--deg-u", type=click.IntRange(1), default=None, help="U(g) degree kept in tables.")(f)
    f = click.option("--order", type=click.IntRange(1), default=None, help="Work mod h^ORDER.")(f)
    f = click.argument("inputs", nargs=-1, required=True)(f)
    return f


def _run(command: str, inputs, order, deg_u, deg_a, audit, dump_model, jobs, fmt, output, timings):
    opts = {"order": order, "deg_u": deg_u, "deg_a": deg_a, "audit": audit,
            "dump_model": dump_model, "timings": timings}
    args = [(command, src, opts) for src in inputs]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_command, *zip(*args)))
    else:
        results = [run_command(*a) for a in args]
    outs = [r[0] for r in results]
    code = max(r[1] for r in results)
    if fmt == "summary":
        text = "\n".join(_summary(o) for o in outs)
    else:
        text = json.dumps(outs[0] if len(outs) == 1 else outs, indent=2)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)
    sys.exit(code)


@click.group()
@click.version_option(__version__, prog_name="quasiquant")
def main():
    """Quantization of quasi-Lie bialgebras, verified in exact arithmetic.

    INPUTS are JSON files or the built-in fixture names F0, F1, F2, F3.
    """


@main.command()
@_options
def check(**kw):
    """Jacobi and quasi-Lie bialgebra axioms."""
    _run("check", **kw)


@main.command()
@_options
def double(**kw):
    """The double p = g + g*, its invariant pairing and the sub-bialgebra check."""
    _run("double", **kw)


@main.command()
@_options
def drinfeld(**kw):
    """Drinfeld's quasi-triangular quasi-bialgebra on U(p)[[h]] and its classical limit."""
    _run("drinfeld", **kw)


@main.command()
@_options
def quantize(**kw):
    """The full pipeline: idempotent, quasi-coalgebra, twist and structure on U(g)[[h]]."""
    _run("quantize", **kw)


if __name__ == "__main__":
    main()
