"""End-to-end CLI runs against temporary configs and output directories."""

import json

import numpy as np
import pytest

from rtstab.cli import main
from rtstab.config import load_config
from rtstab.errors import ConfigError


def write_config(path, *, k_plus=1.0, k_minus=2.0, sigma_plus=0.0,
                 sigma_minus=0.0, mu_minus=1.0, n=24, cutoff=1.8, **numerics):
    doc = {
        "geometry": {"b": 1.0, "ell": 1.0, "L1": 1.0, "L2": 1.0},
        "gravity": 1.0,
        "atmosphere": 1.0,
        "fluids": {
            "plus": {"law": {"kind": "isothermal", "params": [k_plus]},
                     "mu": 1.0, "mu_prime": 0.0},
            "minus": {"law": {"kind": "isothermal", "params": [k_minus]},
                      "mu": mu_minus, "mu_prime": 0.0},
        },
        "surface_tension": {"sigma_plus": sigma_plus, "sigma_minus": sigma_minus},
        "numerics": {"n_minus": n, "n_plus": n, "n_samples": 65,
                     "xi_cutoff": cutoff, **numerics},
    }
    path.write_text(json.dumps(doc))
    return path


def test_classify_unstable(tmp_path, capsys):
    cfg = write_config(tmp_path / "cfg.json")
    assert main(["classify", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    report = json.loads((tmp_path / "o" / "regime.json").read_text())
    assert report["regime"] == "nonlinearly_unstable"
    assert report["jump"] > 0


def test_classify_zero_epsilon_rounds_jump(tmp_path):
    # equal laws: |jump| ~ 1e-13 from round-off, rounded to exactly 0
    cfg = write_config(tmp_path / "cfg.json", k_plus=1.5, k_minus=1.5)
    assert main(["classify", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    report = json.loads((tmp_path / "o" / "regime.json").read_text())
    assert report["jump"] == 0.0
    assert report["regime"] == "locally_well_posed"


def test_dispersion_supercritical_all_zero(tmp_path):
    sigma_c = float(np.e / 2)
    cfg = write_config(tmp_path / "cfg.json", sigma_plus=0.1,
                       sigma_minus=1.1 * sigma_c, cutoff=1.6)
    out = tmp_path / "o"
    assert main(["dispersion", "--config", str(cfg), "--out", str(out)]) == 0
    rows = (out / "dispersion.csv").read_text().splitlines()[1:]
    assert len(rows) >= 2
    assert all(float(r.split(",")[3]) == 0.0 for r in rows)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["Lambda"] == 0.0 and summary["attained"] is True


def test_dispersion_unstable_and_determinism(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", cutoff=1.5)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["dispersion", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["dispersion", "--config", str(cfg), "--out", str(out2),
                 "--threads", "3"]) == 0
    assert (out1 / "dispersion.csv").read_bytes() == (out2 / "dispersion.csv").read_bytes()
    assert (out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()
    summary = json.loads((out1 / "summary.json").read_text())
    assert summary["Lambda"] > 0
    assert summary["xi_c"] == "inf"


def test_alpha_prints_value(tmp_path, capsys):
    cfg = write_config(tmp_path / "cfg.json")
    assert main(["alpha", "--config", str(cfg), "--out", str(tmp_path / "o"),
                 "--xi", "1.0", "--s", "0.01"]) == 0
    printed = float(capsys.readouterr().out.strip())
    assert printed < 0


def test_growth_and_mode_artifacts(tmp_path):
    cfg = write_config(tmp_path / "cfg.json")
    out = tmp_path / "o"
    assert main(["growth", "--config", str(cfg), "--out", str(out),
                 "--xi", "1.0"]) == 0
    growth = json.loads((out / "growth.json").read_text())
    assert growth["lambda"] > 0 and growth["converged"] is True
    assert main(["mode", "--config", str(cfg), "--out", str(out),
                 "--xi", "1.0"]) == 0
    sidecar = json.loads((out / "mode.json").read_text())
    assert sidecar["lambda"] == pytest.approx(growth["lambda"], rel=1e-12)


def test_mode_rejects_stable_frequency(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", k_plus=2.0, k_minus=1.0)
    assert main(["mode", "--config", str(cfg), "--out", str(tmp_path / "o"),
                 "--xi", "1.0"]) == 2


def test_oracle_artifacts(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", n=40, t_final=None)
    out = tmp_path / "o"
    assert main(["oracle", "--config", str(cfg), "--out", str(out),
                 "--xi", "1.0"]) == 0
    rate = json.loads((out / "rate.json").read_text())
    assert rate["fitted_rate"] == pytest.approx(rate["lambda_variational"], rel=0.05)
    header = (out / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,abs_eta_minus,abs_eta_plus,energy,dissipation,balance_residual"


def test_extend_artifacts(tmp_path):
    from rtstab.poisson_ext import PeriodicField, write_field_csv
    rng = np.random.default_rng(0)
    grid = tmp_path / "grid.csv"
    write_field_csv(PeriodicField(rng.standard_normal((8, 8)), 1.0, 1.0), grid)
    cfg = write_config(tmp_path / "cfg.json")
    out = tmp_path / "o"
    assert main(["extend", "--config", str(cfg), "--out", str(out),
                 "--input", str(grid), "--m", "2", "--levels", "5"]) == 0
    rows = (out / "extension.csv").read_text().splitlines()
    assert rows[0] == "x3,i1,i2,value"
    assert len(rows) == 1 + 5 * 64


def test_malformed_config_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path / "cfg.json", mu_minus=-1.0)
    assert main(["classify", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "mu" in capsys.readouterr().err


def test_unreadable_config_exit_2(tmp_path):
    assert main(["classify", "--config", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path / "o")]) == 2


def test_solver_error_exit_3(tmp_path, capsys):
    # tabulated law whose table cannot reach p_atm: InverseFailure -> exit 3
    doc = json.loads(write_config(tmp_path / "base.json").read_text())
    doc["fluids"]["plus"]["law"] = {"kind": "tabulated",
                                    "rho": [1.0, 1.2, 1.4, 1.6],
                                    "p": [0.05, 0.08, 0.11, 0.14]}
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(doc))
    assert main(["equilibrium", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
    assert "solver error" in capsys.readouterr().err


def test_load_config_validates(tmp_path):
    cfg = write_config(tmp_path / "cfg.json")
    rc = load_config(cfg)
    assert rc.numerics.n_minus == 24
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)
    cfg2 = write_config(tmp_path / "cfg2.json", scheme="rk9")
    with pytest.raises(ConfigError):
        load_config(cfg2)
