"""Scenario parsing and the command-line surface: files, exit codes, determinism."""
import json
import subprocess
import sys

import numpy as np
import pytest

from ebofrac.cli import main
from ebofrac.config import (
    DEFAULT_INITIAL_STATE,
    ConfigError,
    FixedStrategy,
    SweepStrategy,
    load_config,
    parse_config,
)
from ebofrac.params import ModelParams

from reference import R0_NOMINAL


def write_config(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


# -- parsing -----------------------------------------------------------------

def test_empty_document_gives_defaults():
    cfg = parse_config({})
    assert cfg.params == ModelParams()
    assert cfg.initial_state.to_dict() == DEFAULT_INITIAL_STATE
    assert cfg.t0 == 0.0 and cfg.horizon == 100.0
    assert cfg.integrator == "auto"
    assert cfg.strategy is None
    assert cfg.abm_steps is None
    assert cfg.output_dir == "out"
    assert cfg.seed == 0


def test_params_section_merges_over_defaults():
    cfg = parse_config({"params": {"beta": 0.3, "alpha": 1.0}})
    assert cfg.params.beta == 0.3
    assert cfg.params.alpha == 1.0
    assert cfg.params.sigma == ModelParams().sigma


@pytest.mark.parametrize("doc,fragment", [
    ({"params": {"bogus": 1.0}}, "params.bogus: unknown key"),
    ({"unknown": 1}, "config.unknown: unknown key"),
    ({"initial_state": {"X": 1.0}}, "initial_state.X: unknown key"),
    ({"integrator_config": {"tol": 1.0}}, "integrator_config.tol: unknown key"),
    ({"cost_weights": {"A9": 1.0}}, "cost_weights.A9: unknown key"),
    ({"t0": True}, "t0: expected a number, got bool"),
    ({"seed": 1.5}, "seed: expected an integer, got float"),
    ({"params": {"beta": "fast"}}, "params.beta: expected a number"),
    ({"horizon": 0.0}, "horizon: must exceed t0"),
    ({"abm_steps": 1}, "abm_steps: must be at least 2"),
    ({"integrator": "euler"}, "integrator: expected one of"),
    ({"params": {"alpha": 2.0}}, "params: alpha must lie in"),
    ({"cost_weights": {"A1": 0.0}}, "cost_weights: A1 must be positive"),
    ({"strategy": {"kind": "warp"}}, "strategy.kind: expected 'fixed' or 'sweep'"),
    ({"strategy": {"kind": "fixed", "u": [0.1, 0.2]}},
     "strategy.u: expected a list of four numbers"),
    ({"strategy": {"kind": "fixed", "u": [0.9, 0.0, 0.0, 0.0]}},
     "strategy.u: u1=0.9 outside"),
    ({"strategy": {"kind": "sweep", "relaxation": 2.0}},
     "strategy.relaxation: must lie in (0, 1]"),
    ({"strategy": {"kind": "sweep", "surprise": 1}},
     "strategy.surprise: unknown key"),
    ({"initial_state": {"S": 0.0, "E": 0.0, "Is": 0.0, "Ia": 0.0}},
     "living population must be positive"),
])
def test_rejections_carry_dotted_paths(doc, fragment):
    with pytest.raises(ConfigError) as err:
        parse_config(doc)
    assert fragment in str(err.value)


def test_fixed_strategy_parses():
    cfg = parse_config({"strategy": {"kind": "fixed", "u": [0.1, 0.05, 0.2, 0.3]}})
    assert isinstance(cfg.strategy, FixedStrategy)
    assert np.array_equal(cfg.strategy.u.as_array(), [0.1, 0.05, 0.2, 0.3])


def test_sweep_strategy_parses_with_defaults():
    cfg = parse_config({"strategy": {"kind": "sweep", "max_iter": 5}})
    assert cfg.strategy == SweepStrategy(max_iter=5)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.json")


def test_load_config_reports_json_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "horizon": 50.0,\n}\n')
    with pytest.raises(ConfigError, match=r"invalid JSON at line 3, column 1"):
        load_config(path)


# -- CLI ---------------------------------------------------------------------

ALPHA1 = {"params": {"alpha": 1.0, "v": 0.0, "h_s": 0.0}, "horizon": 40.0}


def test_simulate_writes_trajectory_and_summary(tmp_path):
    cfg = write_config(tmp_path, ALPHA1)
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,S,V,E,Is,Ia,H,D,R"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["integrator"] == "rkf45"
    assert summary["rows"] == summary["accepted"] + 1 == len(lines) - 1
    last = [float(x) for x in lines[-1].split(",")]
    assert last[0] == pytest.approx(40.0, abs=1e-12)
    for i, name in enumerate(("S", "V", "E", "Is", "Ia", "H", "D", "R")):
        assert summary["final_state"][name] == last[1 + i]


def test_simulate_is_deterministic(tmp_path):
    cfg = write_config(tmp_path, ALPHA1)
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        outs.append((out / "trajectory.csv").read_bytes())
    assert outs[0] == outs[1]


def test_simulate_fractional_grid(tmp_path):
    cfg = write_config(tmp_path, {"horizon": 20.0, "abm_steps": 400})
    out = tmp_path / "frac"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["integrator"] == "abm"
    assert summary["rows"] == 401


def test_simulate_rejects_sweep_strategy(tmp_path, capsys):
    doc = dict(ALPHA1)
    doc["strategy"] = {"kind": "sweep"}
    cfg = write_config(tmp_path, doc)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2
    assert "belongs to the control subcommand" in capsys.readouterr().err


def test_simulate_missing_config_exits_2(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "gone.json")]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_analyze_nominal_report(tmp_path):
    cfg = write_config(tmp_path, {})
    out = tmp_path / "an"
    assert main(["analyze", "--config", str(cfg), "--out", str(out)]) == 0
    doc = json.loads((out / "analysis.json").read_text())
    assert doc["R0_closed_form"] == pytest.approx(R0_NOMINAL, rel=1e-12)
    assert doc["R0_spectral"] == pytest.approx(R0_NOMINAL, rel=1e-10)
    assert doc["disease_free"]["stability"] == "stable"
    assert len(doc["disease_free"]["eigenvalues"]) == 8
    reals = [re for re, _ in doc["disease_free"]["eigenvalues"]]
    assert reals == sorted(reals)
    assert doc["endemic"] is None
    assert doc["sensitivity"]["indices"]["beta"]["sign"] == 1
    assert (out / "sensitivity.csv").read_text().splitlines()[0] == "parameter,index"


def test_analyze_supercritical_has_endemic_block(tmp_path):
    cfg = write_config(tmp_path, {"params": {"v": 0.0, "h_s": 0.0}})
    out = tmp_path / "an2"
    assert main(["analyze", "--config", str(cfg), "--out", str(out)]) == 0
    doc = json.loads((out / "analysis.json").read_text())
    assert doc["R0_closed_form"] > 1.0
    assert doc["disease_free"]["stability"] == "unstable"
    assert doc["endemic"]["stability"] == "stable"
    assert doc["endemic"]["lambda_star"] > 0.0


def test_analyze_zero_transmission_skips_sensitivity(tmp_path):
    cfg = write_config(tmp_path, {"params": {"beta": 0.0}})
    out = tmp_path / "an3"
    assert main(["analyze", "--config", str(cfg), "--out", str(out)]) == 0
    doc = json.loads((out / "analysis.json").read_text())
    assert doc["R0_closed_form"] == 0.0
    assert doc["sensitivity"] is None
    assert not (out / "sensitivity.csv").exists()


def test_analyze_is_deterministic(tmp_path):
    cfg = write_config(tmp_path, {})
    blobs = []
    for sub in ("d1", "d2"):
        out = tmp_path / sub
        assert main(["analyze", "--config", str(cfg), "--out", str(out)]) == 0
        blobs.append((out / "analysis.json").read_bytes())
    assert blobs[0] == blobs[1]


CONTROL_DOC = {
    "params": {"alpha": 1.0, "v": 0.0, "h_s": 0.0},
    "horizon": 40.0,
    "strategy": {"kind": "sweep", "n_nodes": 251},
}


def test_control_writes_full_artifact_set(tmp_path):
    cfg = write_config(tmp_path, CONTROL_DOC)
    out = tmp_path / "ctl"
    assert main(["control", "--config", str(cfg), "--out", str(out)]) == 0
    for name in ("controls.csv", "adjoints.csv", "trajectory.csv",
                 "convergence.csv", "summary.json"):
        assert (out / name).exists(), name
    summary = json.loads((out / "summary.json").read_text())
    assert summary["converged"] is True
    assert summary["objective"] == summary["summary"]["total_cost"]
    conv = (out / "convergence.csv").read_text().splitlines()
    assert conv[0] == "iter,J,delta_u"
    assert len(conv) == summary["iterations"] + 1
    assert conv[1].startswith("1,")
    first_J = float(conv[1].split(",")[1])
    assert summary["objective"] <= first_J
    adj = (out / "adjoints.csv").read_text().splitlines()
    assert adj[0] == "t,lam_S,lam_V,lam_E,lam_Is,lam_Ia,lam_H,lam_D,lam_R"
    assert [float(x) for x in adj[-1].split(",")[1:]] == [0.0] * 8


def test_control_non_convergence_exits_4(tmp_path, capsys):
    doc = dict(CONTROL_DOC)
    doc["strategy"] = {"kind": "sweep", "n_nodes": 251, "max_iter": 1}
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "ctl1"
    assert main(["control", "--config", str(cfg), "--out", str(out)]) == 4
    assert "not converged" in capsys.readouterr().out
    assert (out / "controls.csv").exists()


def test_strategies_table(tmp_path):
    cfg = write_config(tmp_path, ALPHA1)
    out = tmp_path / "strat"
    assert main(["strategies", "--config", str(cfg), "--out", str(out)]) == 0
    lines = (out / "strategies.csv").read_text().splitlines()
    assert lines[0] == ("name,u1,u2,u3,u4,peak_infected,final_deceased,"
                       "cumulative_mortality,mortality_reduction_pct")
    assert len(lines) == 8
    rows = {line.split(",")[0]: line.split(",") for line in lines[1:]}
    assert float(rows["baseline"][8]) == 0.0
    assert all(float(rows[n][8]) > 0.0 for n in ("u1", "u2", "u3", "u4"))
    summary = json.loads((out / "summary.json").read_text())
    assert summary["best_strategy"] in rows
    assert summary["strategies"]["baseline"]["mortality_reduction_pct"] == 0.0


def test_export_dinn_noise_free_matches_interpolant(tmp_path):
    from ebofrac.simulate import simulate_model

    cfg_path = write_config(tmp_path, ALPHA1)
    out = tmp_path / "ds"
    assert main(["export-dinn", "--config", str(cfg_path), "--out", str(out),
                 "--n-points", "50"]) == 0
    data = np.loadtxt(out / "dataset.csv", delimiter=",", skiprows=1)
    assert data.shape == (50, 9)
    traj = simulate_model(ModelParams(alpha=1.0, v=0.0, h_s=0.0),
                          load_config(cfg_path).initial_state, 40.0,
                          integrator="auto")
    expected = traj.interpolate(np.linspace(0.0, 40.0, 50))
    assert np.array_equal(data[:, 1:], expected)
    sidecar = json.loads((out / "dataset.json").read_text())
    assert sidecar["n_points"] == 50
    assert sidecar["noise_level"] == 0.0
    assert sidecar["params"]["alpha"] == 1.0
    assert sidecar["integrator"] == "rkf45"
    assert sidecar["initial_state"]["S"] == 1_000_000.0


def test_export_dinn_noise_is_seeded(tmp_path):
    cfg = write_config(tmp_path, ALPHA1)
    blobs = []
    for sub, seed in (("n1", "7"), ("n2", "7"), ("n3", "8")):
        out = tmp_path / sub
        assert main(["export-dinn", "--config", str(cfg), "--out", str(out),
                     "--noise", "0.05", "--seed", seed]) == 0
        blobs.append((out / "dataset.csv").read_bytes())
        assert json.loads((out / "dataset.json").read_text())["seed"] == int(seed)
    assert blobs[0] == blobs[1]
    assert blobs[0] != blobs[2]


def test_export_dinn_argument_validation(tmp_path, capsys):
    cfg = write_config(tmp_path, ALPHA1)
    out = tmp_path / "bad"
    assert main(["export-dinn", "--config", str(cfg), "--out", str(out),
                 "--n-points", "5"]) == 2
    assert "n_points" in capsys.readouterr().err
    assert main(["export-dinn", "--config", str(cfg), "--out", str(out),
                 "--noise", "-0.1"]) == 2
    assert "noise_level" in capsys.readouterr().err


def test_integrator_override_controls_backend(tmp_path):
    cfg = write_config(tmp_path, {"horizon": 10.0, "params": {"alpha": 1.0}})
    out = tmp_path / "ov"
    assert main(["simulate", "--config", str(cfg), "--out", str(out),
                 "--integrator", "abm"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["integrator"] == "abm"


def test_batch_mode_uses_config_stems(tmp_path):
    c1 = write_config(tmp_path, ALPHA1, name="west.json")
    c2 = write_config(tmp_path, {"horizon": 10.0}, name="east.json")
    out = tmp_path / "batch"
    code = main(["simulate", "--config", str(c1), "--config", str(c2),
                 "--out", str(out), "--jobs", "2"])
    assert code == 0
    assert (out / "west" / "trajectory.csv").exists()
    assert (out / "east" / "trajectory.csv").exists()


def test_batch_exit_code_is_worst_case(tmp_path, capsys):
    good = write_config(tmp_path, ALPHA1, name="good.json")
    bad = write_config(tmp_path, {"unknown": 1}, name="bad.json")
    out = tmp_path / "mixed"
    code = main(["simulate", "--config", str(good), "--config", str(bad),
                 "--out", str(out)])
    assert code == 2
    assert (out / "good" / "trajectory.csv").exists()


def test_missing_required_config_flag_is_a_usage_error():
    with pytest.raises(SystemExit) as err:
        main(["simulate"])
    assert err.value.code == 2


def test_console_entry_point_runs(tmp_path):
    cfg = write_config(tmp_path, {"horizon": 5.0, "params": {"alpha": 1.0}})
    out = tmp_path / "proc"
    proc = subprocess.run(
        [sys.executable, "-m", "ebofrac.cli", "simulate",
         "--config", str(cfg), "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "trajectory.csv" in proc.stdout
    assert (out / "trajectory.csv").exists()
