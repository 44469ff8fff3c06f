"""CSV and text emitters. Floats use 12 significant digits, newlines are ``\\n``.

trace.csv   k,agent,u,x_air,x_wall,y,E,d,iters   one row per (step, agent);
            x_* and y are taken when u(k) is applied, iters is the number
            of allocation updates of that step's negotiation.
costs.csv   agent,J                               one row per agent plus ``global``.
sweep.csv   tau,J_<agent>...,J_G,converged,diverged,iterations,radius
summary.txt cost table (agents x scenarios)
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

TRACE_HEADER = ["k", "agent", "u", "x_air", "x_wall", "y", "E", "d", "iters"]
MODE_LABELS = {"nominal": "Nominal", "attacked": "Selfish", "secured": "Selfish + correction"}


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if np.isnan(v):
        return "nan"
    return f"{v:.12g}"


def _open(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_trace(trace, path) -> Path:
    path = Path(path)
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for s in trace.steps:
            for i, name in enumerate(trace.agent_names):
                w.writerow([fmt(s.k), name, fmt(s.u[i][0]), fmt(s.x[i][0]), fmt(s.x[i][1]),
                            fmt(s.y[i]), fmt(s.E[i]), fmt(s.d[i]), fmt(s.iterations)])
    return path


def write_costs(report, path) -> Path:
    path = Path(path)
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["agent", "J"])
        for name, J in zip(report.agent_names, report.J):
            w.writerow([name, fmt(J)])
        w.writerow(["global", fmt(report.J_G)])
    return path


def write_sweep(sweep, path) -> Path:
    path = Path(path)
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau"] + [f"J_{n}" for n in sweep.agent_names]
                   + ["J_G", "converged", "diverged", "iterations", "radius"])
        for t in range(sweep.tau.size):
            w.writerow([fmt(sweep.tau[t])] + [fmt(v) for v in sweep.J[t]]
                       + [fmt(sweep.J_G[t]), fmt(sweep.converged[t]), fmt(sweep.diverged[t]),
                          fmt(sweep.iterations[t]), fmt(sweep.radius[t])])
    return path


def cost_table(reports: dict) -> str:
    """Agents as rows, scenarios as columns; ``reports`` maps mode -> CostReport."""
    modes = list(reports)
    names = next(iter(reports.values())).agent_names
    head = ["Agent"] + [MODE_LABELS.get(m, m) for m in modes]
    rows = [[n] + [f"{reports[m].J[i]:.1f}" for m in modes] for i, n in enumerate(names)]
    rows.append(["Global"] + [f"{reports[m].J_G:.1f}" for m in modes])
    widths = [max(len(r[c]) for r in [head] + rows) for c in range(len(head))]
    line = lambda r: "  ".join(v.rjust(w) for v, w in zip(r, widths)).rstrip()
    out = [line(head), "-" * len(line(head))]
    out += [line(r) for r in rows]
    return "\n".join(out)


def write_summary(reports: dict, path, traces: dict = None) -> Path:
    path = Path(path)
    lines = ["Closed-loop costs J_i^N and J_G^N (realized trajectories, "
             "sum_k |w_i - x_i(k+1)|_Q^2 + |u_i(k)|_R^2)", "", cost_table(reports)]
    for mode, trace in (traces or {}).items():
        iters = trace.series("iterations")
        diverged = int(sum(s.diverged for s in trace.steps))
        flagged = {n: int(sum(s.d[i] for s in trace.steps)) for i, n in enumerate(trace.agent_names)}
        lines += ["", f"[{mode}] steps={len(trace.steps)} negotiation iterations "
                  f"min/max={iters.min()}/{iters.max()} diverged_steps={diverged}",
                  f"[{mode}] steps flagged per agent: "
                  + ", ".join(f"{n}={v}" for n, v in flagged.items())]
    with _open(path) as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_outputs(trace, report, out_dir, sweep=None) -> list:
    out = Path(out_dir)
    files = [write_trace(trace, out / "trace.csv"), write_costs(report, out / "costs.csv")]
    if sweep is not None:
        files.append(write_sweep(sweep, out / "sweep.csv"))
    files.append(write_summary({trace.mode: report}, out / "summary.txt", {trace.mode: trace}))
    return files
