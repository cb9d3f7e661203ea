import json

import numpy as np
import pytest
from scipy.stats import norm

import cevpolar as cp
from cevpolar.cli import parse_grid, run


@pytest.fixture()
def model_config(tmp_path):
    cfg = {
        "radial": {"kind": "rayleigh"},
        "curve": {"kind": "elliptical", "params": {"rho": 0.6}},
        "angular": {"kind": "uniform"},
    }
    path = tmp_path / "model.json"
    path.write_text(json.dumps(cfg))
    return path


@pytest.fixture()
def mixture_config(tmp_path):
    cfg = {"mixture": {"p": 0.4, "rho": 0.8, "tau_mix": -0.4}}
    path = tmp_path / "mixture.json"
    path.write_text(json.dumps(cfg))
    return path


def read_csv(path):
    header = None
    rows = []
    meta = {}
    for line in open(path):
        line = line.strip()
        if line.startswith("#"):
            key, _, value = line[2:].partition("=")
            meta[key] = value
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return meta, header, rows


class TestGridParsing:
    def test_integer_index_generation(self):
        grid = parse_grid("-5:5:0.1")
        assert len(grid) == 101
        assert grid[0] == -5.0
        assert grid[-1] == pytest.approx(5.0, abs=1e-12)

    def test_bad_grids(self):
        for bad in ("1:2", "a:b:c", "1:2:-0.5", "3:1:0.5"):
            with pytest.raises(cp.ConfigError):
                parse_grid(bad)


class TestLimitCommand:
    def test_cdf_matches_gaussian(self, tmp_path):
        out = tmp_path / "h.csv"
        code = run(["limit", "--eta", "2", "--zeta", "1",
                    "--grid", "-5:5:0.1", "-o", str(out)])
        assert code == 0
        meta, header, rows = read_csv(out)
        assert header == ["y", "cdf", "pdf"]
        assert "config_sha256" in meta
        ys = np.array([float(r[0]) for r in rows])
        cdf = np.array([float(r[1]) for r in rows])
        assert np.max(np.abs(cdf - norm.cdf(ys))) <= 1e-10

    def test_json_format(self, tmp_path):
        out = tmp_path / "h.json"
        code = run(["limit", "--eta", "3", "--zeta", "1",
                    "--grid", "0:1:0.5", "-o", str(out), "--format", "json"])
        assert code == 0
        data = json.loads(out.read_text())
        assert set(data) == {"meta", "y", "cdf", "pdf"}
        assert len(data["y"]) == 3


class TestSimulateCommand:
    def test_rerun_is_bitwise_identical(self, model_config, tmp_path):
        out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["simulate", "-c", str(model_config), "--n", "500", "--seed", "7"]
        assert run(args + ["-o", str(out_a)]) == 0
        assert run(args + ["-o", str(out_b)]) == 0
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_missing_seed_names_flag(self, model_config, tmp_path, capsys):
        code = run(["simulate", "-c", str(model_config), "--n", "10",
                    "-o", str(tmp_path / "x.csv")])
        assert code == 1
        assert "--seed" in capsys.readouterr().err

    def test_conditional_has_weights_and_metadata(self, model_config, tmp_path):
        out = tmp_path / "cond.csv"
        code = run(["simulate", "-c", str(model_config), "--n", "2000",
                    "--seed", "3", "--threshold", "4.0", "-o", str(out)])
        assert code == 0
        meta, header, rows = read_csv(out)
        assert header == ["x", "y", "weight"]
        assert "effective_size" in meta
        assert all(float(r[0]) > 4.0 for r in rows)

    def test_degenerate_threshold_exit_two(self, model_config, tmp_path, capsys):
        code = run(["simulate", "-c", str(model_config), "--n", "100",
                    "--seed", "3", "--threshold", "80.0", "-o", str(tmp_path / "x.csv")])
        assert code == 2
        payload = json.loads(capsys.readouterr().err)
        assert payload["error"] == "degenerate_weights"

    def test_mixture_simulation(self, mixture_config, tmp_path):
        out = tmp_path / "mix.csv"
        code = run(["simulate", "-c", str(mixture_config), "--n", "50000",
                    "--seed", "5", "-o", str(out)])
        assert code == 0
        _, header, rows = read_csv(out)
        xy = np.array([[float(a), float(b)] for a, b in rows])
        # mixture correlation p*rho + (1-p)*tau = 0.08
        assert np.corrcoef(xy[:, 0], xy[:, 1])[0, 1] == pytest.approx(0.08, abs=0.02)

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"radial": {"kind": "rayleigh"},
                                   "curve": {"kind": "elliptical", "params": {"rho": 0}},
                                   "angular": {"kind": "uniform"},
                                   "extra": 1}))
        code = run(["simulate", "-c", str(cfg), "--n", "10", "--seed", "1",
                    "-o", str(tmp_path / "x.csv")])
        assert code == 1
        assert "extra" in capsys.readouterr().err

    def test_bad_json_exit_one(self, tmp_path):
        cfg = tmp_path / "broken.json"
        cfg.write_text("{not json")
        assert run(["simulate", "-c", str(cfg), "--n", "10", "--seed", "1",
                    "-o", str(tmp_path / "x.csv")]) == 1

    def test_unknown_flag_exit_one(self, model_config, tmp_path):
        assert run(["simulate", "-c", str(model_config), "--n", "10", "--seed", "1",
                    "--frobnicate", "-o", str(tmp_path / "x.csv")]) == 1


class TestAnalysisCommands:
    def test_verify_json_fields(self, model_config, tmp_path):
        out = tmp_path / "verify.json"
        code = run(["verify", "-c", str(model_config), "--levels", "0.99,0.999",
                    "--n", "2000", "--seed", "11", "-o", str(out), "--format", "json"])
        assert code == 0
        data = json.loads(out.read_text())
        assert set(data) == {"meta", "thresholds", "ks", "eff_size", "oracle_dist", "pass"}
        assert len(data["thresholds"]) == 2

    def test_tail_ratio_column(self, model_config, tmp_path):
        out = tmp_path / "tail.csv"
        code = run(["tail", "-c", str(model_config), "--x-grid", "5:8:3", "-o", str(out)])
        assert code == 0
        _, header, rows = read_csv(out)
        assert header == ["x", "asymptotic", "oracle", "ratio"]
        ratios = [float(r[3]) for r in rows]
        assert 0.9 < ratios[0] < 1.1

    def test_independence_command(self, model_config, tmp_path):
        out = tmp_path / "indep.json"
        code = run(["independence", "-c", str(model_config), "--t-grid", "2:4:1",
                    "-o", str(out), "--format", "json"])
        assert code == 0
        data = json.loads(out.read_text())
        assert data["thresholds"] == [100.0, 1000.0, 10000.0]
        assert all(b > a for a, b in zip(data["ratios"], data["ratios"][1:]))

    def test_second_order_command(self, model_config, tmp_path):
        out = tmp_path / "so.csv"
        code = run(["second-order", "-c", str(model_config), "--x-grid", "8:8:1",
                    "--z-grid", "-1:1:1", "-o", str(out)])
        assert code == 0
        _, header, rows = read_csv(out)
        assert header == ["x", "z", "first_order", "corrected", "oracle"]
        for r in rows:
            assert abs(float(r[3]) - float(r[4])) < abs(float(r[2]) - float(r[4]))

    def test_decompose_command(self, tmp_path):
        cfg = tmp_path / "dec.json"
        cfg.write_text(json.dumps({"curve": {"kind": "elliptical", "params": {"rho": 0.0}},
                                   "profile": "gaussian"}))
        out = tmp_path / "dec.csv"
        code = run(["decompose", "-c", str(cfg), "-o", str(out), "--points", "51"])
        assert code == 0
        _, header, rows = read_csv(out)
        assert header == ["component", "grid", "value"]
        ang = [float(r[2]) for r in rows if r[0] == "angular"]
        assert max(abs(a - 1.0) for a in ang) < 1e-6

    def test_second_order_unsupported_model_exit_one(self, tmp_path):
        cfg = tmp_path / "lp.json"
        cfg.write_text(json.dumps({"radial": {"kind": "weibull", "params": {"shape": 1.0}},
                                   "curve": {"kind": "lp", "params": {"p": 3.0, "rho": 0.0}},
                                   "angular": {"kind": "uniform"}}))
        code = run(["second-order", "-c", str(cfg), "--x-grid", "8:8:1",
                    "--z-grid", "0:0:1", "-o", str(tmp_path / "x.csv")])
        assert code == 1
