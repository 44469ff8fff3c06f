"""Negotiated cost and convergence as room I scales its prices by tau.

Prints the first non-convergent tau next to the value where the iteration's
spectral radius crosses one, and writes sweep.csv.

    python3 scripts/tau_sweep.py --out results/sweep --steps 200
"""

import argparse
from pathlib import Path

import numpy as np

from secure_dmpc.sim import load_bundled, tau_sweep, write_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--out", default="results/sweep")
    ap.add_argument("--tau-min", type=float, default=0.1)
    ap.add_argument("--tau-max", type=float, default=20.0)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--agent", type=int, default=0)
    args = ap.parse_args()

    cfg = load_bundled("nominal")
    grid = np.union1d(np.linspace(args.tau_min, args.tau_max, args.steps), [1.0])
    sw = tau_sweep(cfg, grid, attacker=args.agent)
    path = write_sweep(sw, Path(args.out) / "sweep.csv")

    ref = sw.J_G[sw.tau == 1.0][0]
    print(f"{'tau':>8} {'J_attacker':>12} {'J_G':>12} {'J_G/J_G(1)':>11} {'radius':>8}")
    for t in np.linspace(0, sw.tau.size - 1, 15).astype(int):
        print(f"{sw.tau[t]:8.3f} {sw.J[t, args.agent]:12.6g} {sw.J_G[t]:12.6g} "
              f"{sw.J_G[t] / ref:11.6f} {sw.radius[t]:8.4f}")
    bad = sw.tau[~sw.converged]
    unstable = sw.tau[sw.radius >= 1]
    print(f"\nfirst non-convergent tau: {bad.min() if bad.size else 'none'}")
    print(f"first tau with radius >= 1: {unstable.min() if unstable.size else 'none'}")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
