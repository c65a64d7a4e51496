import json

import pytest

from projprod.cli import main
from projprod.scenarios import bundled_config_path


@pytest.fixture(autouse=True)
def isolated_output(tmp_path, monkeypatch):
    monkeypatch.setenv("PROJPROD_OUTPUT_DIR", str(tmp_path / "out"))
    return tmp_path


def test_run_bundled_scenario(capsys):
    code = main(["run", str(bundled_config_path("von_neumann_45deg.json"))])
    assert code == 0
    out = capsys.readouterr().out
    assert "von_neumann_45deg:step_identity" in out
    assert "FAIL" not in out


def test_run_writes_artifacts(tmp_path):
    code = main(["run", str(bundled_config_path("cyclic_triple_r6.json")),
                 "--out", str(tmp_path / "explicit")])
    assert code == 0
    assert (tmp_path / "explicit" / "cyclic_triple_r6_trace.csv").exists()
    report = json.loads((tmp_path / "explicit"
                         / "cyclic_triple_r6_report.json").read_text())
    assert report["passed"] is True
    entry = report["entries"][0]
    assert {"name", "status", "measured", "threshold", "anchor"} \
        == set(entry)


def test_verify_exit_zero(capsys):
    assert main(["verify"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_verify_negative_controls_exit_one(capsys):
    assert main(["verify", "--negative-controls"]) == 1
    out = capsys.readouterr().out
    assert "step_identity" in out and "FAIL" in out


def test_config_error_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{\"name\": \"x\"}")
    assert main(["run", str(bad)]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_exit_two(tmp_path):
    assert main(["run", str(tmp_path / "ghost.json")]) == 2


def test_schedule_inspect_inline(capsys):
    code = main(["schedule", "inspect",
                 '{"rule": "ternary_insertion", "seed": 1}', "--n", "30"])
    assert code == 0
    out = capsys.readouterr().out
    assert "# sigma prefix" in out
    assert "# profile" in out
    assert "3,9,27" in out  # marker line
    assert "3,7,6,finite" in out  # label 3: 7 occurrences, gap index 6


def test_schedule_inspect_file(tmp_path, capsys):
    desc = tmp_path / "sched.json"
    desc.write_text('{"rule": "cyclic", "r": 3}')
    assert main(["schedule", "inspect", str(desc), "--n", "9"]) == 0
    out = capsys.readouterr().out
    assert out.count("\n1,1\n") == 1


def test_schedule_inspect_bad_descriptor():
    assert main(["schedule", "inspect", "not json at all"]) == 2


def test_geometry_cb(capsys):
    code = main(["geometry", "cb",
                 str(bundled_config_path("coordinate_axes_geometry.json"))])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["cb"]["cb"] == pytest.approx(0.0, abs=1e-12)
    assert payload["closed_sum"]["closed"] is True


def test_geometry_incl(capsys):
    code = main(["geometry", "incl",
                 str(bundled_config_path("coordinate_axes_geometry.json")),
                 "--resolution", "512", "--restarts", "2"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["inner_inclination"]["value_upper"] == pytest.approx(1.0)
    assert 0.5 <= payload["inclination"]["value_upper"] <= 0.7072
