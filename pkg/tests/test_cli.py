"""Command-line runner: configuration handling, exit codes and outputs."""

import csv
import json

import pytest

from mln.cli import ConfigError, load_config, main, parse_config

MODEL = {"kin": 1.0, "omega": 1.0, "alpha": -1.0, "s": 0.5, "p": 4.0}
SMALL = {"model": MODEL, "grid": {"n": 16, "L": 8.0}, "generator": {"amplitude": 1.0, "width": 1.2}}


def run(tmp_path, cfg, command="solve", name="out", extra=()):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(cfg) if isinstance(cfg, dict) else cfg)
    out = tmp_path / name
    return main([command, "--config", str(path), "--out", str(out), *extra]), out


class TestConfig:
    def test_defaults(self):
        cfg = parse_config({"model": MODEL})
        assert cfg.grid.n == 32 and cfg.grid.box_len == 16.0 and cfg.potential is None
        assert cfg.spectrum["K"] == 10 and cfg.output["figures"]

    @pytest.mark.parametrize(
        "raw, match",
        [
            ({"model": MODEL, "extra": 1}, "unknown key 'extra'"),
            ({"model": {**MODEL, "foo": 1}}, "unknown key 'model.foo'"),
            ({"model": {**MODEL, "s": 1.5}}, "invalid 'model'"),
            ({"model": MODEL, "potential": {"kind": "harmonic"}}, "v0"),
            ({"model": MODEL, "spectrum": {"K": 0}}, "spectrum.K"),
            ({"model": MODEL, "check": {"samples": 3}}, "check.samples"),
            ({"model": MODEL, "grid": {"n": 15}}, "invalid 'grid'"),
            ({"model": MODEL, "solver": {"tol": -1}}, "invalid 'solver'"),
            ([], "JSON object"),
        ],
    )
    def test_rejected(self, raw, match):
        with pytest.raises(ConfigError, match=match):
            parse_config(raw)

    def test_malformed_json_position(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"model":\n  {"kin": 1,,}}')
        with pytest.raises(ConfigError, match="line 2, column"):
            load_config(path)

    def test_potential_file_relative(self, tmp_path, grid16):
        from mln import Field, write_field

        write_field(tmp_path / "v.mln1", Field(grid16, 1.0 + grid16.radius**2))
        (tmp_path / "c.json").write_text(json.dumps({"model": MODEL, "potential": {"file": "v.mln1"}}))
        cfg = load_config(tmp_path / "c.json")
        assert cfg.potential.kind == "tabulated" and cfg.potential.v0 == 1.0


class TestExitCodes:
    def test_config_error(self, tmp_path):
        assert run(tmp_path, {"model": {**MODEL, "foo": 1}})[0] == 2

    def test_malformed(self, tmp_path):
        assert run(tmp_path, "{not json")[0] == 2

    def test_negative_seed(self, tmp_path):
        assert run(tmp_path, SMALL, extra=("--seed", "-1"))[0] == 2

    def test_threshold_is_geometry(self, tmp_path):
        code, out = run(tmp_path, {**SMALL, "model": {**MODEL, "alpha": -3.0}})
        assert code == 3
        assert "threshold" in json.loads((out / "report.json").read_text())["error"]

    def test_bandwidth(self, tmp_path):
        cfg = {**SMALL, "grid": {"n": 16, "L": 16.0}, "generator": {"amplitude": 0.05, "width": 1.0}}
        assert run(tmp_path, cfg)[0] == 5

    def test_spectrum_without_potential(self, tmp_path):
        assert run(tmp_path, SMALL, "spectrum")[0] == 2

    def test_scaling_bandwidth(self, tmp_path):
        cfg = {**SMALL, "scaling": {"n": 16, "L": 8.0, "width": 0.3, "slopes": False}}
        assert run(tmp_path, cfg, "scaling-test")[0] == 5


class TestSolve:
    @pytest.fixture(scope="class")
    @staticmethod
    def solved(tmp_path_factory):
        tmp = tmp_path_factory.mktemp("solve")
        cfg = {**SMALL, "output": {"dump_fields": True}}
        first = run(tmp, cfg, name="a")
        second = run(tmp, cfg, name="b")
        return first, second

    def test_exit_and_outputs(self, solved):
        (code, out), _ = solved
        assert code == 0
        for name in ("report.json", "scan.csv", "trace.csv", "u_0.mln1", "phi_0.mln1",
                     "trace.png", "scan.png", "profile_0.png"):
            assert (out / name).exists(), name

    def test_report_content(self, solved):
        rep = json.loads((solved[0][1] / "report.json").read_text())
        sol = rep["solutions"][0]
        assert sol["passed"] and sol["J_value"] > 0 and sol["dual_residual"] <= 1e-6
        assert sol["restart_rel_change"] <= 1e-6 and rep["geometry"]["delta"] > 0

    def test_deterministic_except_timestamp(self, solved):
        (_, a), (_, b) = solved
        ra, rb = (json.loads((d / "report.json").read_text()) for d in (a, b))
        ra.pop("timestamp"), rb.pop("timestamp")
        assert ra == rb
        assert (a / "u_0.mln1").read_bytes() == (b / "u_0.mln1").read_bytes()

    def test_dumped_field_matches_report(self, solved):
        from mln import read_field

        u, meta = read_field(solved[0][1] / "u_0.mln1")
        assert meta["role"] == "u" and meta["params"]["p"] == 4.0 and u.grid.n == 16


class TestOtherCommands:
    def test_check(self, tmp_path):
        code, out = run(tmp_path, {**SMALL, "check": {"samples": 20}}, "check")
        assert code == 0
        rows = list(csv.DictReader(open(out / "check.csv")))
        assert rows and all(r["passed"] == "1" for r in rows)
        assert {"plancherel", "phi_energy_identity", "combination_identity", "potential_coercivity"} <= {r["name"] for r in rows}

    def test_spectrum(self, tmp_path):
        cfg = {**SMALL, "potential": {"kind": "harmonic", "v0": 1.0}, "spectrum": {"K": 4},
               "output": {"dump_fields": True}}
        code, out = run(tmp_path, cfg, "spectrum")
        assert code == 0
        rows = list(csv.DictReader(open(out / "spectrum.csv")))
        assert [r["k"] for r in rows] == ["1", "2", "3", "4"]
        assert (out / "eig_4.mln1").exists() and (out / "spectrum.png").exists()
        assert json.loads((out / "report.json").read_text())["shift_bound"]["verified"]

    def test_figures_off(self, tmp_path):
        code, out = run(tmp_path, {**SMALL, "output": {"figures": False}})
        assert code == 0 and not list(out.glob("*.png"))
