import json
import os

import pytest
from click.testing import CliRunner

from quasiquant.cli import EXIT_INPUT, EXIT_MATH, EXIT_OK, EXIT_TRUNCATION, main, run_command
from quasiquant.fixtures import FIXTURES
from quasiquant.inputspec import load_input, parse_input, structure_to_input
from quasiquant.errors import InputError

INPUTS = os.path.join(os.path.dirname(__file__), os.pardir, "inputs")


def path(name):
    return os.path.join(INPUTS, name)


def invoke(*args):
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


@pytest.mark.parametrize("command", ["check", "double", "drinfeld", "quantize"])
@pytest.mark.parametrize("name", ["F0", "F1", "F2", "F3"])
def test_commands_pass_on_fixtures(command, name):
    out, code = run_command(command, name, {"order": None, "deg_u": None, "deg_a": None,
                                            "audit": False, "dump_model": False, "timings": False})
    assert code == EXIT_OK, out.get("error") or out["reports"]
    assert out["status"] == "pass"


@pytest.mark.parametrize("command", ["check", "double"])
def test_broken_jacobi_exits_2(command):
    r = invoke(command, path("broken_jacobi.json"))
    assert r.exit_code == EXIT_MATH
    assert json.loads(r.output)["status"] == "failed"


def test_invalid_inputs_exit_4(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"dim": 2, "bracket": [{"i": 1, "j": 2, "result": ["1/0", "1"]}]}))
    assert invoke("check", str(bad)).exit_code == EXIT_INPUT
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert invoke("check", str(broken)).exit_code == EXIT_INPUT
    assert invoke("check", str(tmp_path / "missing.json")).exit_code == EXIT_INPUT
    extra = tmp_path / "extra.json"
    extra.write_text(json.dumps({"dim": 1, "colour": "red"}))
    assert invoke("check", str(extra)).exit_code == EXIT_INPUT


def test_small_truncation_exits_3():
    r = invoke("quantize", "F3", "--deg-u", "2", "--format", "summary")
    assert r.exit_code == EXIT_TRUNCATION
    assert "no truncation overflow" in r.output


def test_json_output_is_deterministic():
    a = invoke("quantize", "F2")
    b = invoke("quantize", "F2")
    assert a.exit_code == EXIT_OK
    assert a.output == b.output
    out = json.loads(a.output)
    assert out["echo"]["dim"] == 2
    assert set(out["tensors"]) == {"twist", "delta", "counit", "phi_h"}


def test_timings_are_opt_in():
    out = json.loads(invoke("quantize", "F1", "--timings").output)
    assert "seconds" in out and "timings" in out["tensors"]
    assert "seconds" not in json.loads(invoke("quantize", "F1").output)


def test_summary_format_and_output_file(tmp_path):
    target = tmp_path / "report.txt"
    r = invoke("double", "F1", "--format", "summary", "-o", str(target))
    assert r.exit_code == EXIT_OK
    text = target.read_text()
    assert text.startswith("double F1: pass")
    assert "[pass] double" in text


def test_dump_model_and_audit():
    r = invoke("quantize", "F1", "--dump-model", "--audit")
    assert r.exit_code == EXIT_OK
    out = json.loads(r.output)
    assert "model" in out["tensors"]
    assert any(rep["title"].startswith("stabilization audit") for rep in out["reports"])


def test_jobs_runs_several_inputs():
    r = invoke("check", "F0", "F1", path("broken_jacobi.json"), "--jobs", "2")
    assert r.exit_code == EXIT_MATH
    outs = json.loads(r.output)
    assert [o["status"] for o in outs] == ["pass", "pass", "failed"]


def test_drinfeld_on_lie_algebra_with_casimir():
    r = invoke("drinfeld", path("sl2_casimir.json"), "--format", "summary")
    assert r.exit_code == EXIT_OK
    assert "classical limit round trip" in r.output


def test_low_order_skips_classical_limit():
    out = json.loads(invoke("drinfeld", "F1", "--order", "2").output)
    assert out["status"] == "pass"
    assert "skipped" in out["reports"][-1]["note"]


@pytest.mark.parametrize("name", ["F0", "F1", "F2", "F3"])
def test_input_round_trip(name):
    Q = FIXTURES[name]()
    assert parse_input(structure_to_input(Q, name)).structure.same_structure(Q)


@pytest.mark.parametrize("fname", ["f0_abelian.json", "f1_borel.json",
                                   "f2_borel_bialgebra.json", "f3_sl2_quasi.json"])
def test_shipped_inputs_match_fixtures(fname):
    inp = load_input(path(fname))
    name = "F" + fname[1]
    assert inp.structure.same_structure(FIXTURES[name]())


@pytest.mark.parametrize("data", [
    {"dim": 2, "bracket": [{"i": 2, "j": 1, "result": ["0", "1"]}]},
    {"dim": 2, "delta": [{"i": 1, "result": [["0"]]}]},
    {"dim": 3, "phi": [{"i": 1, "j": 1, "k": 2, "coeff": "1"}]},
    {"dim": 2, "t": [{"i": 2, "j": 1, "coeff": "1"}]},
    {"dim": 2, "truncation": {"degX": 3}},
    {"dim": 2, "hbarOrder": 0},
    {"dim": -1},
    [],
])
def test_parse_input_rejects(data):
    with pytest.raises(InputError):
        parse_input(data)


def test_version():
    r = invoke("--version")
    assert r.exit_code == 0 and "0.1.0" in r.output
