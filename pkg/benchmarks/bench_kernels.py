"""Time the compiled integration drivers against the NumPy fallback.

Usage:
    python3 benchmarks/bench_kernels.py [--repeats N] [--horizon T]
                                        [--abm-steps N]

Each driver is run on the same scenario (default initial state, nominal
parameters, constant mid-range controls where controls apply) and the
best wall time over the repeats is reported per backend.
"""
import argparse
import importlib
import time

import numpy as np

from ebofrac.config import DEFAULT_INITIAL_STATE
from ebofrac.integrators import IntegratorConfig
from ebofrac.params import CONTROL_BOUNDS, ModelParams


def best_time(fn, repeats: int) -> float:
    out = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        out.append(time.perf_counter() - start)
    return min(out)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--horizon", type=float, default=150.0)
    ap.add_argument("--abm-steps", type=int, default=2000)
    args = ap.parse_args()

    backends = {}
    backends["fallback"] = importlib.import_module("ebofrac.kernels._fallback")
    try:
        backends["compiled"] = importlib.import_module("ebofrac.kernels._core")
    except ImportError:
        print("compiled extension not available; timing the fallback only")

    par = ModelParams(alpha=1.0, v=0.0, h_s=0.0).as_array()
    par_frac = ModelParams(v=0.0, h_s=0.0)
    y0 = np.array([DEFAULT_INITIAL_STATE[k]
                   for k in ("S", "V", "E", "Is", "Ia", "H", "D", "R")])
    cfg = IntegratorConfig()
    cfg_args = (cfg.rel_tol, cfg.abs_tol, cfg.h_min, cfg.h_max, cfg.h_init,
                cfg.safety, cfg.error_exponent, cfg.max_steps)
    u_times = np.array([0.0, args.horizon])
    u_values = np.tile(0.5 * np.asarray(CONTROL_BOUNDS), (2, 1))

    rows = []
    for name, mod in backends.items():
        t_fwd = best_time(
            lambda: mod.rkf45_model(par, y0, 0.0, args.horizon, *cfg_args,
                                    u_times, u_values),
            args.repeats)

        t_abm = best_time(
            lambda: mod.abm_model(par_frac.as_array(), y0, 0.0, args.horizon,
                                  par_frac.alpha, args.abm_steps,
                                  u_times, u_values),
            args.repeats)

        times, states, derivs, _, _, status = mod.rkf45_model(
            par, y0, 0.0, args.horizon, *cfg_args, u_times, u_values)
        assert status == 0
        burden = np.ones(4)
        t_adj = best_time(
            lambda: mod.rkf45_adjoint(par, burden, times, states, derivs,
                                      u_times, u_values, args.horizon,
                                      *cfg_args),
            args.repeats)
        rows.append((name, t_fwd, t_abm, t_adj))

    header = f"{'backend':10s} {'rkf45':>10s} {'abm':>10s} {'adjoint':>10s}"
    print(header)
    print("-" * len(header))
    for name, t_fwd, t_abm, t_adj in rows:
        print(f"{name:10s} {t_fwd * 1e3:9.2f}ms {t_abm * 1e3:9.2f}ms "
              f"{t_adj * 1e3:9.2f}ms")
    if len(rows) == 2:
        by_name = {r[0]: r[1:] for r in rows}
        speedups = [f / c for f, c in
                    zip(by_name["fallback"], by_name["compiled"])]
        print(f"{'speedup':10s} {speedups[0]:9.1f}x {speedups[1]:9.1f}x "
              f"{speedups[2]:9.1f}x")


if __name__ == "__main__":
    main()
