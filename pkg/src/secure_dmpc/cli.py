"""Command line entry point.

    secure-dmpc simulate --config FILE --out DIR [--mode nominal|attacked|secured|all] [--seed N]
    secure-dmpc sweep    --config FILE --tau-min A --tau-max B --tau-steps N --out DIR
    secure-dmpc oracle   --config FILE

``--config`` also accepts the name of a bundled scenario (nominal,
attacked, secured). Exit codes: 0 success, 2 configuration error,
3 negotiation divergence in secured mode.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .sim.config import MODES, bundled_path, load_scenario
from .sim.output import fmt, write_outputs, write_summary, write_sweep
from .sim.runner import accumulate_costs, run_oracle, run_scenario
from .sim.sweep import tau_sweep

EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _load(name: str):
    path = Path(name)
    if not path.exists() and bundled_path(name).exists():
        path = bundled_path(name)
    return load_scenario(path)


def cmd_simulate(args) -> int:
    cfg = _load(args.config)
    modes = MODES if args.mode == "all" else (args.mode or cfg.mode,)
    out = Path(args.out)
    reports, traces = {}, {}
    for mode in modes:
        trace = run_scenario(cfg, mode=mode, seed=args.seed)
        report = accumulate_costs(trace, cfg)
        write_outputs(trace, report, out / mode if len(modes) > 1 else out)
        reports[mode], traces[mode] = report, trace
        print(f"{mode}: J_G = {report.J_G:.6g}, diverged steps = "
              f"{sum(s.diverged for s in trace.steps)}")
    if len(modes) > 1:
        write_summary(reports, out / "summary.txt", traces)
    if "secured" in traces and traces["secured"].any_diverged:
        print("negotiation diverged in secured mode", file=sys.stderr)
        return EXIT_DIVERGED
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args.config)
    if not 0 < args.tau_min <= args.tau_max or args.tau_steps < 1:
        raise ConfigError("need 0 < tau-min <= tau-max and tau-steps >= 1")
    grid = np.linspace(args.tau_min, args.tau_max, args.tau_steps)
    report = tau_sweep(cfg, grid, attacker=args.agent)
    path = write_sweep(report, Path(args.out) / "sweep.csv")
    region = report.divergence_region()
    print(f"wrote {path}; non-convergent tau: "
          + (f"[{region.min():.6g}, {region.max():.6g}] ({region.size} points)" if region.size else "none"))
    return 0


def cmd_oracle(args) -> int:
    cfg = _load(args.config)
    names = [a.name for a in cfg.agents]
    print("k," + ",".join(f"u_{n}" for n in names) + ",lambda,J")
    for k, theta, lam, J in run_oracle(cfg):
        print(",".join([str(k)] + [fmt(t[0]) for t in theta] + [fmt(lam[0]), fmt(J)]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="secure-dmpc", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="closed-loop run of a scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=MODES + ("all",))
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="negotiation outcome versus the attack gain tau")
    p.add_argument("--config", required=True)
    p.add_argument("--tau-min", type=float, default=0.1)
    p.add_argument("--tau-max", type=float, default=20.0)
    p.add_argument("--tau-steps", type=int, default=60)
    p.add_argument("--agent", type=int, default=0, help="index of the attacking agent")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="print the centralized solution per step")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
