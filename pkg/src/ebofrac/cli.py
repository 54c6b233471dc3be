"""Command-line front end.

Subcommands cover simulation, threshold analysis, optimal control,
fixed-strategy comparison, and synthetic-dataset export.  All outputs are
deterministic for a fixed config and seed; exit codes are 0 (success),
2 (config error), 3 (numerical failure), 4 (non-convergence).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from . import analysis, control
from .config import (ConfigError, FixedStrategy, ScenarioConfig, SweepStrategy,
                     load_config)
from .integrators import IntegrationError, Trajectory
from .params import STATE_NAMES
from .simulate import simulate_model

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_NO_CONVERGENCE = 4

_NUMERICAL_ERRORS = (IntegrationError, analysis.RootFindingError,
                     np.linalg.LinAlgError)


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", newline="") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _state_dict(state: np.ndarray) -> dict:
    return {name: float(value) for name, value in zip(STATE_NAMES, state)}


def _scenario_controls(cfg: ScenarioConfig):
    if cfg.strategy is None:
        return None
    if isinstance(cfg.strategy, FixedStrategy):
        return cfg.strategy.u
    raise ConfigError("strategy.kind: 'sweep' belongs to the control subcommand")


def _run_scenario(cfg: ScenarioConfig) -> Trajectory:
    return simulate_model(cfg.params, cfg.initial_state, cfg.horizon,
                          t0=cfg.t0, integrator=cfg.integrator,
                          config=cfg.integrator_config, n_steps=cfg.abm_steps,
                          controls=_scenario_controls(cfg))


def cmd_simulate(cfg: ScenarioConfig, outdir: Path) -> int:
    traj = _run_scenario(cfg)
    traj.to_csv(outdir / "trajectory.csv")
    infected = traj.states[:, 2:6].sum(axis=1)
    _write_json(outdir / "summary.json", {
        "integrator": traj.integrator,
        "accepted": traj.accepted,
        "rejected": traj.rejected,
        "rows": len(traj.times),
        "t0": cfg.t0,
        "horizon": cfg.horizon,
        "strategy": "fixed" if isinstance(cfg.strategy, FixedStrategy) else "none",
        "final_state": _state_dict(traj.final_state),
        "peak_infected": float(infected.max()),
    })
    print(f"wrote {outdir / 'trajectory.csv'}")
    return EXIT_OK


def _eig_list(values: np.ndarray) -> list:
    pairs = sorted((float(v.real), float(v.imag)) for v in values)
    return [[re, im] for re, im in pairs]


def cmd_analyze(cfg: ScenarioConfig, outdir: Path) -> int:
    params = cfg.params
    r0_closed = analysis.r0_closed_form(params)
    r0_spectral = analysis.r0_spectral(params)
    dfe = analysis.disease_free_equilibrium(params)
    dfe_stability = analysis.stability_check(dfe, params)
    endemic = analysis.endemic_equilibrium(params)

    payload = {
        "R0_closed_form": r0_closed,
        "R0_spectral": r0_spectral,
        "disease_free": {
            "state": _state_dict(dfe.state.as_array()),
            "residual": dfe.residual(params),
            "stability": dfe_stability.verdict,
            "eigenvalues": _eig_list(dfe_stability.eigenvalues),
        },
        "endemic": None,
        "sensitivity": None,
    }
    if endemic is not None:
        endemic_stability = analysis.stability_check(endemic, params)
        payload["endemic"] = {
            "state": _state_dict(endemic.state.as_array()),
            "lambda_star": endemic.lambda_star,
            "residual": endemic.residual(params),
            "stability": endemic_stability.verdict,
            "eigenvalues": _eig_list(endemic_stability.eigenvalues),
        }
    if r0_closed > 0.0:
        report = analysis.sensitivity_indices(params)
        payload["sensitivity"] = report.to_dict()
        report.to_csv(outdir / "sensitivity.csv")
    _write_json(outdir / "analysis.json", payload)
    print(f"wrote {outdir / 'analysis.json'}")
    return EXIT_OK


def cmd_control(cfg: ScenarioConfig, outdir: Path) -> int:
    strategy = cfg.strategy if isinstance(cfg.strategy, SweepStrategy) else SweepStrategy()
    result = control.forward_backward_sweep(
        cfg.params, cfg.cost_weights, cfg.initial_state, cfg.horizon,
        cfg=cfg.integrator_config, relaxation=strategy.relaxation,
        tol=strategy.tol, max_iter=strategy.max_iter, n_nodes=strategy.n_nodes,
        integrator=cfg.integrator)
    result.controls.to_csv(outdir / "controls.csv")
    result.adjoints.to_csv(outdir / "adjoints.csv")
    result.trajectory.to_csv(outdir / "trajectory.csv")
    with open(outdir / "convergence.csv", "w", newline="") as fh:
        fh.write("iter,J,delta_u\n")
        history = zip(result.objective_history, result.delta_history)
        for i, (J, delta) in enumerate(history, start=1):
            fh.write(f"{i},{J:.17g},{delta:.17g}\n")
    _write_json(outdir / "summary.json", {
        "converged": result.converged,
        "iterations": result.iterations,
        "objective": result.summary["total_cost"],
        "summary": result.summary,
    })
    print(f"wrote {outdir / 'controls.csv'}"
          f" ({'converged' if result.converged else 'not converged'}"
          f" after {result.iterations} iterations)")
    return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE


def cmd_strategies(cfg: ScenarioConfig, outdir: Path) -> int:
    names = control.default_strategies()
    base_traj, base_summary = control.run_strategy(
        cfg.params, names["baseline"], cfg.initial_state, cfg.horizon,
        cfg=cfg.integrator_config, integrator=cfg.integrator,
        n_steps=cfg.abm_steps)
    baseline_mortality = base_summary["cumulative_mortality"]
    rows = {"baseline": base_summary}
    for name, fixed_u in names.items():
        if name == "baseline":
            continue
        _, summary = control.run_strategy(
            cfg.params, fixed_u, cfg.initial_state, cfg.horizon,
            cfg=cfg.integrator_config, integrator=cfg.integrator,
            n_steps=cfg.abm_steps, baseline_mortality=baseline_mortality)
        rows[name] = summary

    with open(outdir / "strategies.csv", "w", newline="") as fh:
        fh.write("name,u1,u2,u3,u4,peak_infected,final_deceased,"
                 "cumulative_mortality,mortality_reduction_pct\n")
        for name, summary in rows.items():
            u = names[name].as_array()
            cells = ",".join(format(x, ".17g") for x in u)
            fh.write(f"{name},{cells},{summary['peak_infected']:.17g},"
                     f"{summary['final_deceased']:.17g},"
                     f"{summary['cumulative_mortality']:.17g},"
                     f"{summary['mortality_reduction_pct']:.17g}\n")
    best = max(rows, key=lambda name: rows[name]["mortality_reduction_pct"])
    _write_json(outdir / "summary.json", {
        "baseline_mortality": baseline_mortality,
        "best_strategy": best,
        "strategies": rows,
    })
    print(f"wrote {outdir / 'strategies.csv'} (best: {best})")
    return EXIT_OK


def cmd_export_dinn(cfg: ScenarioConfig, outdir: Path, n_points: int,
                    noise_level: float) -> int:
    if n_points < 10:
        raise ConfigError("n_points: must be at least 10")
    if noise_level < 0.0:
        raise ConfigError("noise_level: must be non-negative")
    traj = _run_scenario(cfg)
    times = np.linspace(cfg.t0, cfg.horizon, n_points)
    values = traj.interpolate(times)
    if noise_level > 0.0:
        rng = np.random.default_rng(cfg.seed)
        values = values * (1.0 + noise_level * rng.standard_normal(values.shape))
    with open(outdir / "dataset.csv", "w", newline="") as fh:
        fh.write("t," + ",".join(STATE_NAMES) + "\n")
        for t, row in zip(times, values):
            cells = ",".join(format(x, ".17g") for x in row)
            fh.write(f"{t:.17g},{cells}\n")
    _write_json(outdir / "dataset.json", {
        "params": cfg.params.to_dict(),
        "initial_state": _state_dict(cfg.initial_state.as_array()),
        "t0": cfg.t0,
        "horizon": cfg.horizon,
        "n_points": n_points,
        "noise_level": noise_level,
        "seed": cfg.seed,
        "integrator": traj.integrator,
    })
    print(f"wrote {outdir / 'dataset.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ebofrac",
        description="Fractional-order epidemic scenarios: simulation, "
                    "thresholds, optimal control, and dataset export.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", action="append", required=True,
                       metavar="PATH", help="scenario JSON (repeat for a batch)")
        p.add_argument("--out", metavar="DIR",
                       help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, metavar="N",
                       help="random seed (overrides the config)")
        p.add_argument("--integrator", choices=("rkf45", "abm"),
                       help="integration engine (overrides the config)")
        p.add_argument("--jobs", type=int, default=1, metavar="N",
                       help="run batched configs in N parallel processes")

    common(sub.add_parser("simulate", help="integrate the scenario"))
    common(sub.add_parser("analyze", help="equilibria, R0, stability, sensitivity"))
    common(sub.add_parser("control", help="forward-backward optimal control sweep"))
    common(sub.add_parser("strategies", help="compare fixed intervention strategies"))
    exporter = sub.add_parser("export-dinn", help="export a training dataset")
    common(exporter)
    exporter.add_argument("--n-points", type=int, default=200, metavar="N",
                          help="number of uniformly spaced samples")
    exporter.add_argument("--noise", type=float, default=0.0, metavar="LEVEL",
                          help="multiplicative Gaussian noise level")
    return parser


def _run_job(job: tuple) -> int:
    (command, config_path, out, seed, integrator, batch, n_points, noise) = job
    try:
        cfg = load_config(config_path)
        if seed is not None:
            cfg = dataclasses.replace(cfg, seed=seed)
        if integrator is not None:
            cfg = dataclasses.replace(cfg, integrator=integrator)
        outdir = Path(out) if out is not None else Path(cfg.output_dir)
        if batch:
            outdir = outdir / Path(config_path).stem
        outdir.mkdir(parents=True, exist_ok=True)
        if command == "simulate":
            return cmd_simulate(cfg, outdir)
        if command == "analyze":
            return cmd_analyze(cfg, outdir)
        if command == "control":
            return cmd_control(cfg, outdir)
        if command == "strategies":
            return cmd_strategies(cfg, outdir)
        return cmd_export_dinn(cfg, outdir, n_points, noise)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERICAL_ERRORS as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    batch = len(args.config) > 1
    n_points = getattr(args, "n_points", 200)
    noise = getattr(args, "noise", 0.0)
    jobs = [(args.command, path, args.out, args.seed, args.integrator,
             batch, n_points, noise) for path in args.config]
    if args.jobs > 1 and batch:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(_run_job, jobs))
    else:
        codes = [_run_job(job) for job in jobs]
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
