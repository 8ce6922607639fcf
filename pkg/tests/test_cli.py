import json
import math
from pathlib import Path

import jsonschema
import pytest

from germflow import cli

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
SCHEMA = json.loads((ROOT / "docs" / "report_schema.json").read_text())
GOLDEN = Path(__file__).parent / "golden" / "check_report.json"


def load(name):
    return json.loads((CONFIGS / name).read_text())


def write_spec(tmp_path, spec, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(spec))
    return p


def rounded(obj, digits=9):
    """Round floats to a fixed number of significant digits for golden comparison."""
    if isinstance(obj, dict):
        return {k: rounded(v, digits) for k, v in obj.items()}
    if isinstance(obj, list):
        return [rounded(v, digits) for v in obj]
    if isinstance(obj, float) and obj != 0 and math.isfinite(obj):
        return float(f"{obj:.{digits}g}")
    return obj


def test_check_example_reports_tends_to_zero(tmp_path, capsys):
    code = cli.main(["check", "--spec", str(CONFIGS / "check_mu_constant.json"), "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    jsonschema.validate(report, SCHEMA)
    verdicts = {c["verdict"]["kind"]: c["verdict"] for c in report["results"]["check"]["conditions"]}
    assert verdicts["C0_1"]["verdict"] == "TendsToZero"
    # every verdict carries its seed and grid
    assert all(v["seed"] == 7 and v["grid"]["count"] == 24 for v in verdicts.values())
    assert json.loads(capsys.readouterr().out)["determinism_hash"] == report["determinism_hash"]
    assert "wall_clock_seconds" in json.loads((tmp_path / "report.timing.json").read_text())


def test_unparsable_polynomial_exits_1_with_location(tmp_path, capsys):
    spec = load("check_mu_constant.json")
    spec["family"]["f"] = "x^^2"
    code = cli.main(["check", "--spec", str(write_spec(tmp_path, spec)), "--out", str(tmp_path)])
    assert code == 1
    err = capsys.readouterr().err
    assert "family.f" in err and "column 3" in err
    assert not (tmp_path / "report.json").exists()


def test_malformed_json_exits_1(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"task": "check",\n "seed": }')
    assert cli.main(["check", "--spec", str(p)]) == 1
    assert "line 2, column 10" in capsys.readouterr().err


def test_zero_length_flow_is_identity(tmp_path):
    spec = load("flow_glued.json")
    spec["flow"]["t1"] = spec["flow"]["t0"]
    report, code = cli.run(spec, "flow", tmp_path)
    assert code == 0
    res = report["results"]["flow"]
    assert "zero-length" in res["note"]
    assert res["trajectory"]["x_end"] == spec["flow"]["start"]


def test_flow_writes_csv_and_plots(tmp_path):
    code = cli.main(["flow", "--spec", str(CONFIGS / "flow_glued.json"), "--out", str(tmp_path), "--plots"])
    assert code == 0
    rows = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert rows[0] == "t_param,x1,x2,abs_F,abs_g"
    svg = (tmp_path / "fibres.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg
    report = json.loads((tmp_path / "report.json").read_text())
    jsonschema.validate(report, SCHEMA)
    assert report["results"]["flow"]["trajectory"]["status"] == "Completed"


def test_unfinished_flow_exits_2(tmp_path):
    spec = {"task": "flow", "family": {"f": "x^2", "g": "x"}, "seed": 0,
            "flow": {"kind": "W_kuo", "start": [0.1], "t0": -0.19, "t1": 0.0}}
    report, code = cli.run(spec, "flow", tmp_path)
    assert code == 2
    assert report["results"]["flow"]["trajectory"]["status"] == "HitSingularLocus"


def test_validate_examples():
    assert cli.validate(load("check_mu_constant.json")) == []
    spec = load("flow_glued.json")
    spec["flow"]["partition"] = {"tau1": 0.2, "tau2": 0.1}
    diags = cli.validate(spec)
    assert len(diags) == 1 and "tau1 < tau2" in diags[0]
    spec = load("check_mu_constant.json")
    spec["check"]["arcs"]["count"] = -3
    diags = cli.validate(spec)
    assert len(diags) == 1 and "count" in diags[0]


def test_validate_flag(tmp_path):
    assert cli.main(["check", "--spec", str(CONFIGS / "check_mu_constant.json"), "--validate"]) == 0
    spec = load("check_mu_constant.json")
    spec["seed"] = -1
    assert cli.main(["check", "--spec", str(write_spec(tmp_path, spec)), "--validate"]) == 1


@pytest.mark.parametrize("config", ["check_mu_constant.json", "exponent.json", "flow_glued.json"])
def test_reports_are_byte_identical(tmp_path, config):
    spec = load(config)
    a, b = tmp_path / "a", tmp_path / "b"
    cli.run(spec, spec["task"], a, plots=True)
    cli.run(spec, spec["task"], b, plots=True)
    for name in ("report.json", "ratios.svg", "fibres.svg", "trajectory.csv"):
        if (a / name).exists():
            assert (a / name).read_bytes() == (b / name).read_bytes(), name
    report = json.loads((a / "report.json").read_text())
    assert report["determinism_hash"] == cli.determinism_hash(report)
    jsonschema.validate(report, SCHEMA)


def test_golden_check_report(tmp_path):
    report, _ = cli.run(load("check_mu_constant.json"), "check", tmp_path)
    golden = json.loads(GOLDEN.read_text())
    strip = lambda r: rounded({k: v for k, v in r.items() if k not in ("determinism_hash", "tool")})
    assert strip(report) == strip(golden)


def test_seed_override_changes_the_suite(tmp_path):
    base = CONFIGS / "check_mu_constant.json"
    cli.main(["check", "--spec", str(base), "--out", str(tmp_path / "a"), "--seed", "8", "--kind", "C0_1"])
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert report["seed"] == 8
    assert [c["verdict"]["kind"] for c in report["results"]["check"]["conditions"]] == ["C0_1"]


def test_report_all_runs_every_section(tmp_path):
    spec = {
        "task": "report-all",
        "family": {"f": "x^2 + y^2", "g": "x*y"},
        "seed": 1,
        "check": {"kinds": ["C0_1"], "arcs": {"count": 8}},
        "flow": {"kind": "V_paper", "start": [0.3, 0.1], "t0": -3.0, "t1": -2.9},
    }
    report, code = cli.run(spec, "report-all", tmp_path)
    assert code == 0
    assert set(report["results"]) == {"check", "flow"}
    jsonschema.validate(report, SCHEMA)


def test_malgrange_task(tmp_path):
    report, code = cli.run(load("malgrange_broughton.json"), "malgrange", tmp_path)
    assert code == 0
    res = report["results"]["malgrange"]
    assert res["holds"] is False and res["witness"] is not None
    jsonschema.validate(report, SCHEMA)


def test_canonical_json_handles_non_finite_and_complex():
    text = cli.canonical_json({"b": float("inf"), "a": [complex(1, -2), float("nan")]})
    assert json.loads(text) == {"a": [[1.0, -2.0], "nan"], "b": "inf"}
    assert text.index('"a"') < text.index('"b"')
