import csv
import json
from pathlib import Path

import pytest

from cubeavg.cli import main

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def test_validate_ok(capsys):
    code, out, _ = run(capsys, "validate", SAMPLES / "z3_rotation.json")
    assert code == 0
    assert json.loads(out)["orders"] == [3]


def test_validate_toml(capsys):
    code, out, _ = run(capsys, "validate", SAMPLES / "grid_2x3.toml")
    assert code == 0 and json.loads(out)["orders"] == [2, 3]


def test_validate_non_commuting(capsys):
    code, out, err = run(capsys, "validate", SAMPLES / "noncommuting.json")
    assert code == 1 and out == ""
    diag = json.loads(err)
    assert diag["error"] == "NotCommuting"
    assert 2 in diag["details"]["points"]


def test_validate_non_commuting_allowed(capsys):
    code, out, _ = run(capsys, "validate", "--allow-noncommuting", SAMPLES / "noncommuting.json")
    assert code == 0
    payload = json.loads(out)
    assert payload["commuting"] is False and payload["witness"]["i"] == 1


def test_bad_weights_exit_one(capsys, tmp_path):
    path = write(tmp_path, "s.json", {"points": 2, "weights": ["0.5", "0.5"], "transformations": [[0, 1]]})
    code, _, err = run(capsys, "validate", path)
    assert code == 1 and json.loads(err)["error"] == "BadWeights"


def test_missing_file_and_usage_errors(capsys, tmp_path):
    code, _, err = run(capsys, "validate", tmp_path / "nope.json")
    assert code == 1 and json.loads(err)["error"] == "ConfigError"
    code, _, err = run(capsys, "frobnicate")
    assert code == 1 and json.loads(err)["error"] == "UsageError"
    code, _, _ = run(capsys, "suite", "--seed", "x")
    assert code == 1


def test_help_exits_zero(capsys):
    code, out, _ = run(capsys, "suite", "--help")
    assert code == 0 and "box seminorm" in out


def test_seminorm_output_shape(capsys):
    code, out, _ = run(capsys, "seminorm", SAMPLES / "grid_2x3.toml", SAMPLES / "f_grid.json")
    assert code == 0
    payload = json.loads(out)
    assert set(payload) == {"epsilon", "power_value", "degree", "value"}
    assert payload["epsilon"] == [1, 2] and payload["degree"] == 4
    num, den = map(int, payload["power_value"].split("/"))
    assert payload["value"] == pytest.approx((num / den) ** 0.25)


def test_seminorm_methods_agree(capsys):
    results = []
    for method in ("direct", "recursive"):
        code, out, _ = run(capsys, "seminorm", "--method", method, "--eps", "01",
                           SAMPLES / "grid_2x3.toml", SAMPLES / "f_grid.json")
        assert code == 0
        results.append(json.loads(out))
    assert results[0] == results[1] and results[0]["epsilon"] == [2]


def test_average_all_ones(capsys, tmp_path):
    write(tmp_path, "one.json", {"values": [1] * 6})
    spec = {"system": str(SAMPLES / "grid_2x3.toml"),
            "functions": {"10": "one.json", "01": "one.json", "11": "one.json"},
            "box": [[3, 50], [-2, 9]]}
    path = write(tmp_path, "cube.json", spec)
    code, out, _ = run(capsys, "average", path)
    assert code == 0
    assert set(json.loads(out)["average"]) == {"1"}


def test_average_trace_csv(capsys, tmp_path):
    trace = tmp_path / "trace.csv"
    code, _, _ = run(capsys, "average", SAMPLES / "cube_grid.json", "--trace", trace, "--trace-steps", "5")
    assert code == 0
    rows = list(csv.reader(trace.open()))
    assert rows[0] == ["box_len_1", "box_len_2", "l2_deviation"]
    assert [r[:2] for r in rows[1:]] == [[str(2**k)] * 2 for k in range(5)]


def test_limit_paths_and_bounds(capsys):
    code, joint, _ = run(capsys, "limit", SAMPLES / "cube_grid.json")
    code2, iterated, _ = run(capsys, "limit", "--iterated", SAMPLES / "cube_grid.json")
    assert code == code2 == 0
    assert json.loads(joint)["average"] == json.loads(iterated)["average"]
    code, out, _ = run(capsys, "limit", "--check-bounds", SAMPLES / "cube_grid.json")
    assert code == 0 and json.loads(out)["bound_all_vertices"]["holds"]


def test_magic_checks(capsys):
    for check in ("defect", "characterization", "factor", "all"):
        code, out, _ = run(capsys, "magic", "--check", check, SAMPLES / "grid_2x3.toml")
        assert code == 0
        assert json.loads(out)["ok"]
    code, out, _ = run(capsys, "magic", "--function", SAMPLES / "f_grid.json", SAMPLES / "grid_2x3.toml")
    assert code == 0


def test_recurrence_z4(capsys):
    code, out, _ = run(capsys, "recurrence", "--subset", SAMPLES / "subset_z4.json", "--c", "0")
    assert code == 0
    payload = json.loads(out)
    assert payload["good_set"] == [[0], [2]] and payload["syndetic_gap"] == 2
    assert payload["averaged_intersection_limit"] == "1/4"


def test_csv_format(capsys):
    code, out, _ = run(capsys, "--format", "csv", "recurrence", "--subset", SAMPLES / "subset_z4.json")
    assert code == 0
    rows = list(csv.reader(out.splitlines()))
    assert rows[0] == ["n_1", "measure", "good"]
    assert rows[1:] == [["0", "1/2", "True"], ["1", "0", "False"], ["2", "1/2", "True"], ["3", "0", "False"]]


def test_max_entries_cap(capsys):
    code, _, err = run(capsys, "--max-entries", "3", "seminorm", SAMPLES / "grid_2x3.toml", SAMPLES / "f_grid.json")
    assert code == 1 and json.loads(err)["error"] == "SupportOverflow"


def test_suite_and_output_file(capsys, tmp_path):
    out_path = tmp_path / "summary.json"
    code, out, _ = run(capsys, "--output", out_path, "suite", "--seed", "7", "--instances", "100")
    assert code == 0 and out == ""
    summary = json.loads(out_path.read_text())
    assert summary["ok"] and summary["instances"] == 100
    assert all(v["failed"] == 0 for v in summary["checks"].values())


def test_property_violation_exits_two(capsys, monkeypatch):
    import cubeavg.cli as cli
    from cubeavg.errors import PropertyViolation

    def broken(args):
        raise PropertyViolation("cube-limit norm bounded by the box seminorm of every vertex function",
                                {"instance": "replay me"})

    original = cli.build_parser

    def build():
        parser = original()
        parser._subparsers._group_actions[0].choices["suite"].set_defaults(func=broken)
        return parser

    monkeypatch.setattr(cli, "build_parser", build)
    code, out, err = run(capsys, "suite", "--instances", "1")
    assert code == 2
    assert json.loads(err)["details"]["statement"].startswith("cube-limit norm")
    assert json.loads(out) == {"instance": "replay me"}


def test_byte_identical_outputs(tmp_path):
    outputs = []
    for k in range(2):
        path = tmp_path / f"run{k}.json"
        assert main(["--output", str(path), "suite", "--seed", "3", "--instances", "20"]) == 0
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
