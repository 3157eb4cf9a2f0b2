import json

import numpy as np
import pandas as pd
import pytest
import yaml

from archvol.cli import main
from archvol.config import parse_config
from archvol.errors import ConfigError
from archvol.simulate import InnovationDist, simulate_returns
from archvol.arch_process import build_lm_arch

A = 260


def fig1_components():
    taus = 2.0 ** np.arange(1, 9)
    raw = 1 - np.log(taus) / np.log(1560)
    return [{"tau": float(t), "weight": float(w)} for t, w in zip(taus, 0.9 * raw / raw.sum())]


def write_config(path, **body):
    path.write_text(yaml.safe_dump(body, sort_keys=False))
    return path


def write_prices(path, n, seed=0):
    lm = build_lm_arch(4, 512, np.sqrt(2), 1560)
    r = simulate_returns(lm, InnovationDist(), n, seed=seed, level=0.1 ** 2 / A).returns
    dates = np.busday_offset(np.datetime64("2001-01-02"), np.arange(n + 1), roll="forward")
    prices = 100 * np.exp(np.concatenate([[0.0], np.cumsum(r)]))
    pd.DataFrame({"date": np.datetime_as_string(dates), "price": prices}).to_csv(path, index=False)
    return path


def run(argv, capsys):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_weights_fig1(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.yaml", processes=[
        {"label": "fig1", "components": fig1_components(), "w_inf": 0.1, "sigma_inf_sq": 0.01},
        {"label": "ig1", "preset": "igarch1", "tau": 16}], weights={"max_horizon": 300})
    code, _ = run(["weights", "--config", cfg, "--out-dir", tmp_path / "out"], capsys)
    assert code == 0
    w = pd.read_csv(tmp_path / "out" / "weights.csv")
    s = pd.read_csv(tmp_path / "out" / "weight_sums.csv")
    fig = w[w.spec == "fig1"].pivot(index="horizon", columns="component_tau", values="weight")
    assert fig.shape == (300, 8)
    fs = s[s.spec == "fig1"]
    assert fs.sum_weights.iloc[0] == pytest.approx(0.9, abs=1e-12)
    assert np.allclose(fs.sum_weights + fs.w_inf, 1.0, atol=1e-12)
    ig = w[w.spec == "ig1"]
    assert ig.component_tau.nunique() == 1 and np.allclose(ig.weight, 1.0, atol=1e-12)


def test_forecast_and_market_fit_chain(tmp_path, capsys):
    prices = write_prices(tmp_path / "p.csv", 800)
    cfg = write_config(tmp_path / "c.yaml",
                       horizons=[1, 5, 10, 21, 42, 63, 126, 252],
                       processes=[{"label": "lm", "preset": "lm_arch", "tau1": 4, "tau_n": 512,
                                   "rho": "sqrt(2)", "tau0": 1560}],
                       market={"n_factors": 2, "tau": [4, 64], "v_inf": 0.01})
    out = tmp_path / "out"
    code, _ = run(["forecast", "--config", cfg, "--prices", prices, "--out-dir", out], capsys)
    assert code == 0
    ts = pd.read_csv(out / "term_structure.csv")
    assert list(ts.columns) == ["date", "spec", "horizon_days", "forward_vol", "forecast_vol"]
    assert len(ts) == 8 and (ts.forward_vol > 0).all()
    code, _ = run(["market-fit", "--config", cfg, "--curve", out / "term_structure.csv",
                   "--out-dir", out], capsys)
    assert code == 0
    fit = pd.read_csv(out / "factors.csv")
    assert list(fit.columns) == ["date", "v1", "v2", "residual"]
    assert (fit[["v1", "v2"]] > 0).all(axis=None)
    assert np.isfinite(fit.residual).all() and (fit.residual >= 0).all()


def test_evaluate_insufficient_sample(tmp_path, capsys):
    prices = write_prices(tmp_path / "p.csv", 100)
    cfg = write_config(tmp_path / "c.yaml", processes=[
        {"label": "lm", "preset": "lm_arch", "tau1": 4, "tau_n": 512, "rho": 1.4142135623730951,
         "tau0": 1560}], horizons=[21])
    code, io = run(["evaluate", "--config", cfg, "--prices", prices, "--out-dir", tmp_path], capsys)
    assert code == 1
    lines = io.err.strip().splitlines()
    assert len(lines) == 1
    err = json.loads(lines[0])
    assert err["error"] == "insufficient_sample" and "need at least" in err["message"]


def test_evaluate_outputs(tmp_path, capsys):
    prices = write_prices(tmp_path / "p.csv", 400)
    iv = tmp_path / "iv.csv"
    iv.write_text("date,iv_5,iv_21\n2001-06-01,0.11,\n2001-06-04,0.12,0.13\n")
    cfg = write_config(tmp_path / "c.yaml", horizons=[5, 21], processes=[
        {"label": "ig1", "preset": "igarch1", "tau": 16},
        {"label": "ig2", "preset": "igarch2", "tau1": 4, "tau2": 64, "tau0": 1560}],
        evaluate={"snapshot_dates": ["2001-06-04"]})
    out = tmp_path / "out"
    code, _ = run(["evaluate", "--config", cfg, "--prices", prices, "--implied", iv,
                   "--out-dir", out], capsys)
    assert code == 0
    rec = pd.read_csv(out / "records.csv")
    assert list(rec.columns) == ["date", "spec", "horizon", "forecast", "implied", "realized"]
    dist = pd.read_csv(out / "distances.csv")
    assert list(dist.columns)[:7] == ["spec", "horizon", "pair", "mae", "rmse", "mae_log", "n"]
    fi = dist[(dist.pair == "forecast-implied")].set_index(["spec", "horizon"]).n
    assert fi[("ig1", 5)] == 2 and fi[("ig1", 21)] == 1
    snap = pd.read_csv(out / "snapshot_2001-06-04.csv")
    assert snap.implied.tolist() == [0.12, 0.13]


def test_simulate_deterministic(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.yaml", seed=3, processes=[
        {"label": "ig1", "preset": "igarch1", "tau": 16}],
        simulate={"n_steps": 300, "n_paths": 3, "dist": {"kind": "student_t", "dof": 5},
                  "martingale": {"t_prime": 5, "T": 21, "n_paths": 2000},
                  "market_model": {"n_steps": 50, "n_paths": 3}},
        market={"n_factors": 1, "tau": [16], "v_inf": 0.01, "gamma": 0.3})
    for d in ("a", "b"):
        code, _ = run(["simulate", "--config", cfg, "--out-dir", tmp_path / d, "--dump-paths"], capsys)
        assert code == 0
    for name in ("simulation_summary.csv", "paths.csv", "martingale.csv", "market_simulation.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    paths = pd.read_csv(tmp_path / "a" / "paths.csv")
    assert {"path", "step", "return", "sigma_eff_sq"} <= set(paths.columns)
    code, _ = run(["simulate", "--config", cfg, "--out-dir", tmp_path / "c", "--seed", "4"], capsys)
    assert (tmp_path / "a" / "simulation_summary.csv").read_bytes() != \
        (tmp_path / "c" / "simulation_summary.csv").read_bytes()


def test_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_bad_spec_reports_key_path(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.yaml", processes=[
        {"label": "ok", "preset": "igarch1", "tau": 16},
        {"label": "bad", "preset": "igarch2", "tau1": 4, "tau0": 1560}])
    code, io = run(["weights", "--config", cfg, "--out-dir", tmp_path], capsys)
    assert code == 1
    assert "processes[1].tau2" in json.loads(io.err)["message"]


def test_missing_input_file(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.yaml", processes=[{"label": "a", "preset": "igarch1", "tau": 16}])
    code, io = run(["forecast", "--config", cfg, "--prices", tmp_path / "nope.csv"], capsys)
    assert code == 1 and json.loads(io.err)["error"] == "io_error"


def test_flags_override_config(tmp_path):
    from archvol.cli import _resolve, build_parser
    cfg = write_config(tmp_path / "c.yaml", seed=1, year_days=252, out_dir="x")
    args = build_parser().parse_args(["weights", "--config", str(cfg), "--seed", "9",
                                      "--year-days", "260", "--out-dir", "y"])
    rc = _resolve(args)
    assert rc.seed == 9 and rc.year_days == 260 and str(rc.out_dir) == "y"


@pytest.mark.parametrize("raw, key", [
    ({"horizons": [5, -1]}, "horizons[1]"),
    ({"processes": [{"label": "a", "preset": "nope"}]}, "processes[0].preset"),
    ({"processes": [{"label": "a", "preset": "igarch1", "tau": 16},
                    {"label": "a", "preset": "igarch1", "tau": 8}]}, "duplicate"),
    ({"processes": [{"label": "a", "components": [{"tau": 4, "weight": 0.7}]}]}, "processes[0]"),
])
def test_config_errors(raw, key):
    with pytest.raises(ConfigError, match=key.replace("[", r"\[").replace("]", r"\]")):
        parse_config(raw)


def test_outputs_leave_no_temp_files(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.yaml", processes=[{"label": "a", "preset": "igarch1", "tau": 16}])
    run(["weights", "--config", cfg, "--out-dir", tmp_path / "o"], capsys)
    assert sorted(p.name for p in (tmp_path / "o").iterdir()) == ["weight_sums.csv", "weights.csv"]


def test_market_fit_needs_spec_choice(tmp_path, capsys):
    curve = tmp_path / "curve.csv"
    curve.write_text("date,spec,horizon_days,forward_vol\n"
                     "2005-01-03,a,5,0.1\n2005-01-03,a,63,0.12\n"
                     "2005-01-03,b,5,0.2\n2005-01-03,b,63,0.15\n")
    cfg = write_config(tmp_path / "c.yaml", market={"n_factors": 1, "tau": [16], "v_inf": 0.01})
    code, io = run(["market-fit", "--config", cfg, "--curve", curve, "--out-dir", tmp_path], capsys)
    assert code == 1 and "market.spec" in json.loads(io.err)["message"]
    cfg = write_config(tmp_path / "c.yaml", market={"n_factors": 1, "tau": [16], "v_inf": 0.01,
                                                     "spec": "b"})
    code, _ = run(["market-fit", "--config", cfg, "--curve", curve, "--out-dir", tmp_path], capsys)
    assert code == 0
    fit = pd.read_csv(tmp_path / "factors.csv")
    assert list(fit.columns) == ["date", "v1", "residual"] and len(fit) == 1
