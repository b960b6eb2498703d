import json
import shlex
from pathlib import Path

import jsonschema
import pytest

from foliacoh.cli import main
from foliacoh.resources import FIBERED_MODELS, MODELS, load_model, load_schema

GOLDEN = Path(__file__).parent / "golden"
CASES = [line.split("|", 1) for line in (GOLDEN / "cases.txt").read_text().splitlines() if line.strip()]
SCHEMAS = {
    "gf": "gf_result",
    "compare": "compare_result",
    "realize": "realize_result",
    "invariance": "invariance_result",
    "cdr": "cdr_result",
    "verify-homotopy": "homotopy_report",
}


def run(capsys, argv):
    code = main(shlex.split(argv) if isinstance(argv, str) else argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("fname,argv", CASES, ids=[c[0] for c in CASES])
def test_golden_output(capsys, fname, argv):
    code, out, _ = run(capsys, argv)
    assert code == 0
    assert out == (GOLDEN / fname).read_text()


@pytest.mark.parametrize("fname,argv", [c for c in CASES if c[0].endswith(".json")],
                         ids=[c[0] for c in CASES if c[0].endswith(".json")])
def test_json_output_matches_schema(fname, argv):
    data = json.loads((GOLDEN / fname).read_text())
    jsonschema.validate(data, load_schema(SCHEMAS[argv.split()[0]]))


def test_rerun_is_byte_identical(capsys):
    argv = "verify-homotopy --model point_fiber.json --seed 3 --trials 15 --format json"
    first = run(capsys, argv)
    second = run(capsys, argv)
    assert first == second and first[0] == 0


def test_output_file_and_manifest(capsys, tmp_path):
    out, man = tmp_path / "out.json", tmp_path / "manifest.json"
    code, stdout, _ = run(capsys, ["gf", "--variant", "WGL", "--n", "2", "--format", "json",
                                   "--output", str(out), "--manifest", str(man)])
    assert code == 0 and stdout == ""
    data = json.loads(out.read_text())
    assert data["betti"] == [1, 0, 1, 0, 2]
    manifest = json.loads(man.read_text())
    jsonschema.validate(manifest, load_schema("run_manifest"))
    run(capsys, ["gf", "--variant", "WGL", "--n", "2", "--format", "json", "--output", str(out), "--manifest", str(man)])
    again = json.loads(man.read_text())
    assert again["result_digest"] == manifest["result_digest"]


@pytest.mark.parametrize("name", MODELS)
def test_shipped_models_match_schema(name):
    schema = "fibered_model" if name in FIBERED_MODELS else "chart_model"
    jsonschema.validate(load_model(name), load_schema(schema))


@pytest.mark.parametrize("argv,code", [
    ("gf --variant W --n 0", 2),
    ("gf --variant X --n 1", 2),
    ("gf --variant W", 2),
    ("gf --variant W --n 9", 1),
    ("compare --n 1 --degree 99", 2),
    ("realize --class y3 --n 1 --K 3", 2),
    ("realize --class y1*c1 --n 1 --K 2", 2),
    ("invariance --class y1*c1 --family cubic --n 2", 2),
    ("invariance --family cubic", 2),
    ("cdr --model no_such_model.json", 2),
    ("nonsense", 2),
])
def test_exit_codes(capsys, argv, code):
    assert run(capsys, argv)[0] == code


def test_invalid_model_exits_3(capsys, tmp_path):
    data = load_model("arrow")
    data["morphisms"] = data["morphisms"][1:]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    code, _, err = run(capsys, ["cdr", "--model", str(bad)])
    assert code == 3 and "missing identity" in err


def test_string_guard_exits_1(capsys, monkeypatch):
    monkeypatch.setenv("FOLIACOH_MAX_STRINGS", "2")
    assert run(capsys, "cdr --model arrow.json --max-degree 2")[0] == 1


def test_invariance_failure_is_reported_not_an_error(capsys):
    code, out, _ = run(capsys, "invariance --form dx0 --family quadratic --format json")
    assert code == 0
    data = json.loads(out)
    assert data["invariant"] is False
    jsonschema.validate(data, load_schema("invariance_result"))
