import json

import numpy as np
import pytest

from projprod.scenarios import (
    ConfigError,
    ScenarioConfig,
    _validate_config,
    bundled_config_names,
    bundled_config_path,
    coordinate_span,
    line_angle,
    load_bundled,
    load_config,
    negative_controls,
    pair_average,
    run_scenario,
    tail_3j,
    verify_all,
    verify_negative_controls,
    write_config,
)


def minimal_config(**overrides):
    data = {
        "name": "minimal",
        "ambient_dim": 2,
        "subspaces": {"1": {"generator": "coordinate_span", "indices": [1]},
                      "2": {"generator": "coordinate_span", "indices": [2]}},
        "schedule": {"rule": "cyclic", "r": 2},
        "x0": {"kind": "basis", "i": 1},
        "iteration": {"n_max": 20, "stop_tol": -1.0},
        "checks": {"step_identity": {}},
    }
    data.update(overrides)
    return data


class TestGenerators:
    def test_coordinate_span_odd(self):
        m = coordinate_span(6, "odd")
        assert m.dim == 3
        assert m.contains([1, 0, 0, 0, 0, 0])
        assert not m.contains([0, 1, 0, 0, 0, 0])

    def test_pair_average(self):
        m = pair_average(4)
        assert m.dim == 2
        assert m.contains(np.array([1, 1, 0, 0]) / np.sqrt(2))

    def test_tail_3j_shrinks_to_zero(self):
        d = 12
        dims = [tail_3j(d, i).dim for i in range(3, 9)]
        assert dims == [4, 3, 2, 1, 0, 0]
        # nested: each contains the next
        for i in range(3, 8):
            outer, inner = tail_3j(d, i), tail_3j(d, i + 1)
            assert all(outer.contains(col) for col in inner.basis.T)

    def test_line_angle(self):
        m = line_angle(np.pi / 3)
        assert m.contains([np.cos(np.pi / 3), np.sin(np.pi / 3)])


class TestLoadConfig:
    def test_bundled_odd_pair_tail(self):
        cfg = load_bundled("odd_pair_tail.json")
        assert cfg.ambient_dim == 60
        assert sorted(cfg.subspaces) == ["1", "2"]
        assert cfg.tail["generator"] == "tail_3j"
        assert cfg.schedule["rule"] == "composed"
        assert cfg.schedule["marker_gaps"] == {"kind": "power_markers",
                                               "base": 3}

    def test_minimal_loads(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps(minimal_config()))
        cfg = load_config(path)
        assert cfg.name == "minimal"
        assert cfg.iteration["n_max"] == 20

    def test_line_angle_requires_d2(self, tmp_path):
        data = minimal_config(ambient_dim=3)
        data["subspaces"] = {
            "1": {"generator": "line_angle", "theta": 0.5},
            "2": {"generator": "coordinate_span", "indices": [2]}}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ConfigError, match="ambient_dim = 2") as exc:
            load_config(path)
        assert "subspaces.1" in exc.value.path

    def test_unknown_generator_names_field(self, tmp_path):
        data = minimal_config()
        data["subspaces"]["2"] = {"generator": "mystery"}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ConfigError, match="unknown generator"):
            load_config(path)

    def test_labels_must_be_contiguous(self, tmp_path):
        data = minimal_config()
        data["subspaces"] = {"1": data["subspaces"]["1"],
                             "3": data["subspaces"]["2"]}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ConfigError, match="labels must be 1..r"):
            load_config(path)

    def test_unknown_checker_rejected(self, tmp_path):
        data = minimal_config(checks={"imaginary": {}})
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ConfigError, match="unknown checker"):
            load_config(path)

    def test_coordinate_index_out_of_range(self, tmp_path):
        data = minimal_config()
        data["subspaces"]["1"] = {"generator": "coordinate_span",
                                  "indices": [5]}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ConfigError, match="outside 1..2"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.json")

    def test_iteration_check_needs_x0(self, tmp_path):
        data = minimal_config()
        del data["x0"]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ConfigError, match="x0 required"):
            load_config(path)

    def test_checks_need_subspaces(self, tmp_path):
        data = {"name": "s", "schedule": {"rule": "cyclic", "r": 2},
                "checks": {"closed_sum": {}}}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ConfigError, match="need subspaces"):
            load_config(path)

    def test_round_trip(self, tmp_path):
        cfg = _validate_config(minimal_config())
        path = tmp_path / "rt.json"
        write_config(cfg, path)
        assert load_config(path) == cfg

    def test_bundled_all_load(self):
        names = bundled_config_names()
        assert len(names) == 5
        for name in names:
            assert isinstance(load_bundled(name), ScenarioConfig)


class TestRunScenario:
    def test_von_neumann_rate_envelope(self):
        cfg = load_bundled("von_neumann_45deg.json")
        trace, report = run_scenario(cfg)
        assert report.passed
        theta = np.pi / 4
        for n in range(1, 21):
            ratio = trace.dist_to_limit[2 * n] / np.cos(theta) ** (2 * n)
            assert ratio <= 1.1
        assert trace.dist_to_limit[40] <= 1e-6

    def test_ternary_meta_scenario(self):
        cfg = load_bundled("ternary_insertion_meta.json")
        trace, report = run_scenario(cfg)
        assert trace is None  # schedule-only scenario
        assert report.passed
        names = {e.name for e in report.entries}
        assert {"profile", "pseudo_periodic", "quasi_periodic"} <= names

    def test_odd_pair_tail_converges(self):
        cfg = load_bundled("odd_pair_tail.json")
        trace, report = run_scenario(cfg)
        assert report.passed
        assert trace.norms[-1] <= 1e-6
        assert np.all(np.diff(trace.norms) <= 1e-12)
        # limit projection is 0, so norm and distance coincide
        np.testing.assert_allclose(trace.norms, trace.dist_to_limit,
                                   atol=1e-14)

    def test_deterministic_artifacts(self, tmp_path):
        cfg = load_bundled("cyclic_triple_r6.json")
        a, b = tmp_path / "a", tmp_path / "b"
        run_scenario(cfg, out_dir=a)
        run_scenario(cfg, out_dir=b)
        for name in ("cyclic_triple_r6_trace.csv",
                     "cyclic_triple_r6_report.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_env_var_output_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("PROJPROD_OUTPUT_DIR", str(tmp_path / "env"))
        cfg = load_bundled("von_neumann_45deg.json")
        run_scenario(cfg)
        assert (tmp_path / "env" / "von_neumann_45deg_report.json").exists()


class TestVerifyAll:
    def test_all_pass_and_every_checker_covered(self):
        report, code = verify_all()
        assert code == 0
        assert report.passed
        base_names = {e.name.split(":", 1)[1] for e in report.entries}
        expected = {
            "step_identity", "sakai_bound", "vanishing_differences",
            "marker_residual", "three_point", "weak_trace", "norm_limit",
            "block_bound", "closed_sum", "intersection_stability",
            "halperin_consistency", "profile", "pseudo_periodic",
            "quasi_periodic", "cb", "inclination", "inner_inclination",
        }
        assert expected <= base_names

    def test_entries_unique(self):
        report, _ = verify_all()
        names = [e.name for e in report.entries]
        assert len(names) == len(set(names))

    def test_deterministic_report(self):
        a, _ = verify_all()
        b, _ = verify_all()
        assert a.to_json() == b.to_json()


class TestNegativeControls:
    def test_every_fixture_fails_its_checker(self):
        failing = dict(negative_controls())
        expected = {"step_identity", "norm_limit", "block_bound",
                    "vanishing_differences", "marker_residual",
                    "three_point", "weak_trace", "sakai_bound",
                    "closed_sum"}
        assert expected <= set(failing)
        for name, report in failing.items():
            assert not report.passed, f"{name} should fail on its fixture"

    def test_exit_code_one(self):
        _, code = verify_negative_controls()
        assert code == 1


class TestSubspaceSerializationInConfigs:
    def test_explicit_basis_round_trip(self, tmp_path):
        # explicit basis rows survive config serialization
        cfg = load_bundled("cyclic_triple_r6.json")
        path = tmp_path / "clone.json"
        write_config(cfg, path)
        clone = load_config(path)
        assert clone == cfg
        _, report = run_scenario(clone)
        assert report.passed
