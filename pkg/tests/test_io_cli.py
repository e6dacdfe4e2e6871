import json

import numpy as np
import pytest

from fluxatom import cli
from fluxatom.errors import ParseError, SchemaError, ValidationError
from fluxatom.io import ResultTable, dumps_config, loads_config, parse_config, read_csv_table, render_csv

GENERIC = {
    "model": {"generic": {"n": 1, "omega0": 1.0, "alpha": [[1, 0]], "S_plus": [[[1, 0]]], "S_minus": [[[1, 0]]]}},
    "drive": {"lambda": [[0.5, 0]], "omega": 1.0},
    "run": {"t_end": 5, "seed": 3},
}
SPHERICAL = {
    "model": {"spherical": {"alpha_norm": 1.0, "eta": 0.3, "omega0": 1.0}},
    "drive": {"omega_scan": {"min": 0.2, "max": 1.8, "points": 161}},
}


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run_cli(tmp_path, command, doc, *extra, out="out.csv"):
    path = tmp_path / out
    code = cli.main([command, "--config", write(tmp_path, doc), "--out", str(path), "--quiet", *extra])
    return code, path


class TestConfig:
    def test_minimal_generic(self):
        cfg = parse_config(GENERIC)
        model, drive = cfg.build_generic()
        assert cfg.model_kind == "generic" and model.n == 1 and drive.flux == 0.25
        assert cfg.run.format == "csv" and cfg.run.n_traj == 2000

    def test_both_models_rejected(self):
        doc = json.loads(json.dumps(GENERIC))
        doc["model"]["spherical"] = SPHERICAL["model"]["spherical"]
        with pytest.raises(SchemaError, match="exactly one"):
            parse_config(doc)

    def test_unknown_and_missing_keys_named(self):
        doc = json.loads(json.dumps(GENERIC))
        doc["run"]["bogus"] = 1
        with pytest.raises(SchemaError, match="bogus"):
            parse_config(doc)
        del doc["run"]["bogus"]
        del doc["model"]["generic"]["omega0"]
        with pytest.raises(SchemaError, match="omega0"):
            parse_config(doc)

    def test_malformed_json(self):
        with pytest.raises(ParseError, match="line 1"):
            loads_config('{"model": ')

    def test_physics_violation(self):
        doc = json.loads(json.dumps(GENERIC))
        doc["model"]["generic"]["S_plus"] = [[[2, 0]]]
        with pytest.raises(ValidationError):
            parse_config(doc).build_generic()

    def test_round_trip(self):
        doc = json.loads(json.dumps(SPHERICAL))
        doc["model"]["spherical"]["s_minus"] = 30.0
        doc["run"] = {"degrees": True}
        cfg = parse_config(doc)
        assert cfg.spherical.s_minus == pytest.approx(np.pi / 6)
        again = loads_config(dumps_config(cfg))
        assert again == cfg and again.sha256() == cfg.sha256()

    def test_csv_round_trip(self):
        t = ResultTable.from_columns("x", {"a": ("1", np.array([1.0, 2.5])), "b": ("s", 1 / 3)})
        meta, back = read_csv_table(render_csv([t], {"seed": "1"})["x"])
        assert meta == {"seed": "1"} and back.units == ("1", "s")
        assert np.array_equal(back.rows, t.rows)


class TestCLI:
    def test_undriven_steady(self, tmp_path):
        doc = json.loads(json.dumps(GENERIC))
        doc["drive"]["lambda"] = [[0, 0]]
        code, path = run_cli(tmp_path, "steady", doc)
        assert code == 0
        _, t = read_csv_table(path.read_text())
        assert t.column("u_inf")[0] == 0 and t.column("v_inf_re")[0] == 0 and t.column("rho_mm")[0] == 1

    def test_lineshape_peak(self, tmp_path):
        code, path = run_cli(tmp_path, "lineshape", SPHERICAL)
        assert code == 0
        _, t = read_csv_table(path.read_text())
        assert t.column("sigma_hat").max() == pytest.approx(1 / (1 + 2 * 0.3**2), rel=1e-12)
        assert (tmp_path / "out.summary.csv").exists()

    @pytest.mark.parametrize("command", ["evolve", "count", "flux", "oracle", "validate"])
    def test_generic_commands(self, tmp_path, command):
        doc = json.loads(json.dumps(GENERIC))
        doc["run"].update(n_traj=200, corpus_size=5, t_end=2)
        code, path = run_cli(tmp_path, command, doc)
        assert code == 0 and path.stat().st_size > 0

    def test_diffxs_and_json(self, tmp_path):
        doc = json.loads(json.dumps(SPHERICAL))
        doc["drive"] = {"omega": 1.0}
        code, path = run_cli(tmp_path, "diffxs", doc, "--format", "json", out="o.json")
        assert code == 0
        data = json.loads(path.read_text())
        assert data["provenance"]["config_sha256"] == parse_config(doc).sha256()
        sigma = np.array(data["tables"][0]["data"]["sigma"])
        assert np.allclose(sigma, sigma[0], rtol=1e-12)

    def test_invalid_exit_code(self, tmp_path):
        doc = json.loads(json.dumps(GENERIC))
        doc["model"]["generic"]["alpha"] = [[0, 0]]
        assert run_cli(tmp_path, "steady", doc)[0] == 2
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        assert cli.main(["steady", "--config", str(bad), "--quiet"]) == 2

    def test_spherical_rejected_for_dynamics(self, tmp_path):
        doc = json.loads(json.dumps(SPHERICAL))
        doc["drive"] = {"omega": 1.0}
        assert run_cli(tmp_path, "evolve", doc)[0] == 2

    def test_identity_failure_exit_code(self, tmp_path, monkeypatch):
        monkeypatch.setattr(cli, "GENERIC_TOL", {k: -1.0 for k in cli.GENERIC_TOL})
        doc = json.loads(json.dumps(GENERIC))
        doc["run"]["corpus_size"] = 2
        code, path = run_cli(tmp_path, "validate", doc)
        assert code == 3 and path.exists()

    def test_bit_identical_reruns(self, tmp_path):
        doc = json.loads(json.dumps(GENERIC))
        doc["run"].update(n_traj=100, t_end=1)
        _, p1 = run_cli(tmp_path, "oracle", doc, out="a.csv")
        _, p2 = run_cli(tmp_path, "oracle", doc, out="b.csv")
        assert p1.read_bytes() == p2.read_bytes()
        _, p3 = run_cli(tmp_path, "oracle", doc, "--seed", "4", out="c.csv")
        assert p3.read_bytes() != p1.read_bytes()

    def test_seed_from_environment(self, tmp_path, monkeypatch):
        doc = json.loads(json.dumps(GENERIC))
        del doc["run"]["seed"]
        monkeypatch.setenv("FLUXATOM_SEED", "17")
        _, path = run_cli(tmp_path, "steady", doc)
        meta, _ = read_csv_table(path.read_text())
        assert meta["seed"] == "17"
        monkeypatch.setenv("FLUXATOM_SEED", "x")
        assert run_cli(tmp_path, "steady", doc)[0] == 2

    def test_stdout(self, tmp_path, capsys):
        assert cli.main(["steady", "--config", write(tmp_path, GENERIC), "--quiet"]) == 0
        out = capsys.readouterr().out
        assert "# table: steady" in out and "u_inf" in out
