"""Command-line interface: reports, exit codes, determinism."""

import json

import pytest

from statgeo import cli


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, json.loads(captured.out), captured.out


class TestValidate:
    def test_builtin_dual_plane(self, capsys):
        code, report, _ = run_cli(capsys, "validate", "builtin:geost")
        assert code == 0
        assert report["pass"]
        names = {c["name"]: c["pass"] for c in report["checks"]}
        assert names == {"torsion_free": True, "codazzi": True, "spd": True}
        assert report["properties"]["conjugate_symmetric"]["holds"]
        assert not report["properties"]["trace_free"]["holds"]

    def test_euclidean_all_clean(self, capsys):
        code, report, _ = run_cli(capsys, "validate", "builtin:euclidean:2")
        assert code == 0
        assert all(v["holds"] for v in report["properties"].values())

    def test_asymmetric_metric_exits_nonzero(self, capsys, tmp_path):
        spec = tmp_path / "bad.json"
        spec.write_text(json.dumps({
            "dimension": 2, "coordinates": ["x", "y"],
            "topology": {"kind": "box", "intervals": [[-1, 1], [-1, 1]]},
            "metric": [["1", "x"], ["y", "1"]],
            "connection": {"kind": "levi_civita"},
        }))
        code, report, _ = run_cli(capsys, "validate", str(spec))
        assert code == 1
        assert "symmetry" in report["error"]


class TestCheckMap:
    def test_reference_scalar_map(self, capsys, tmp_path):
        spec = tmp_path / "map.json"
        spec.write_text(json.dumps({
            "source": "builtin:geost",
            "target": "builtin:real_line",
            "components": ["sinh(x) + cosh(y)"],
        }))
        code, report, _ = run_cli(capsys, "check-map", str(spec))
        assert code == 0
        props = report["properties"]
        assert not props["harmonic"]["holds"]
        assert props["statistical_biharmonic"]["holds"]

    def test_identity_map(self, capsys, tmp_path):
        spec = tmp_path / "map.json"
        spec.write_text(json.dumps({
            "source": "builtin:euclidean:2",
            "target": {"dimension": 2, "coordinates": ["a", "b"],
                       "topology": {"kind": "box", "intervals": [[-9, 9], [-9, 9]]},
                       "metric": [["1", "0"], ["0", "1"]],
                       "connection": {"kind": "levi_civita"}},
            "components": ["x", "y"],
        }))
        code, report, _ = run_cli(capsys, "check-map", str(spec))
        assert code == 0
        assert report["properties"]["harmonic"]["holds"]
        assert report["properties"]["statistical_biharmonic"]["holds"]

    def test_quintic_map_neither(self, capsys, tmp_path):
        spec = tmp_path / "map.json"
        spec.write_text(json.dumps({
            "source": "builtin:euclidean:2",
            "target": {"dimension": 2, "coordinates": ["a", "b"],
                       "topology": {"kind": "box",
                                    "intervals": [[-200, 200], [-200, 200]]},
                       "metric": [["1", "0"], ["0", "1"]],
                       "connection": {"kind": "levi_civita"}},
            "components": ["x^5", "y"],
        }))
        code, report, _ = run_cli(capsys, "check-map", str(spec))
        assert code == 0
        assert not report["properties"]["harmonic"]["holds"]
        assert not report["properties"]["statistical_biharmonic"]["holds"]


class TestBlaschke:
    def test_paraboloid_classification(self, capsys):
        code, report, _ = run_cli(capsys, "blaschke", "builtin:paraboloid:2")
        assert code == 0
        assert report["classification"] == "improper_sphere"
        assert all(c["pass"] for c in report["checks"])


class TestTensors:
    def test_simplex_point_report(self, capsys):
        code, report, _ = run_cli(
            capsys, "tensors", "builtin:simplex:n=2:exponential",
            "--point", "0.333333333,0.333333333",
        )
        assert code == 0
        assert report["div_trace_K"] == pytest.approx(3.0, rel=1e-6)
        assert report["min_U_sectional"] == pytest.approx(0.5, abs=1e-5)

    def test_point_outside_domain(self, capsys):
        code, report, _ = run_cli(
            capsys, "tensors", "builtin:simplex:n=2:exponential",
            "--point", "0.8,0.8",
        )
        assert code == 1
        assert "outside" in report["error"]


class TestBatteryCommands:
    def test_fvf_check(self, capsys):
        code, report, _ = run_cli(capsys, "fvf-check", "--resolution", "32")
        assert code == 0
        assert report["pass"]

    def test_paper_examples_filter(self, capsys):
        code, report, _ = run_cli(capsys, "paper-examples", "--filter", "3-lines")
        assert code == 0
        assert {c["name"] for c in report["checks"]} == {
            "lines.bitension", "lines.tension_norm"
        }

    def test_paper_examples_tightened_tolerance_fails_named_checks(self, capsys):
        code, report, _ = run_cli(
            capsys, "paper-examples", "--filter", "2-scalar-map", "--tol", "0.01"
        )
        assert code == 1
        failing = [c["name"] for c in report["checks"] if not c["pass"]]
        assert "scalar_map.tension_reference" in failing

    def test_reports_are_byte_stable(self, capsys):
        _, _, first = run_cli(capsys, "paper-examples", "--filter", "1-flat-plane")
        _, _, second = run_cli(capsys, "paper-examples", "--filter", "1-flat-plane")
        assert first == second


class TestMinimize:
    def test_descent_and_grid_output(self, capsys, tmp_path):
        spec = tmp_path / "map.json"
        spec.write_text(json.dumps({
            "source": "builtin:flat_torus:1",
            "target": "builtin:real_line",
            "components": ["sin(x) + 0.3*sin(2*x)"],
        }))
        out = tmp_path / "grid.json"
        code, report, _ = run_cli(
            capsys, "minimize", str(spec), "--resolution", "16", "--out", str(out),
        )
        assert code == 0
        assert report["report"]["termination"] == "tolerance met"
        energies = report["report"]["energies"]
        assert len(energies) == report["report"]["iterations"] + 1
        assert all(b <= a for a, b in zip(energies, energies[1:]))
        grid = json.loads(out.read_text())
        assert grid["resolution"] == [16]
        assert len(grid["values"]) == 16
        assert all(abs(float(v[0])) < 1e-2 for v in grid["values"])

    def test_zero_step_reports_stagnation(self, capsys, tmp_path):
        spec = tmp_path / "map.json"
        spec.write_text(json.dumps({
            "source": "builtin:flat_torus:1",
            "target": "builtin:real_line",
            "components": ["sin(x)"],
        }))
        code, report, _ = run_cli(
            capsys, "minimize", str(spec), "--resolution", "16", "--step", "0",
        )
        assert code == 1
        assert report["error"] == "line search stagnated"
        assert report["report"]["termination"] == "stagnation"
