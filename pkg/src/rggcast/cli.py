"""Command-line front end: theta / sweep / simulate / diagnostics.

Every command's output is a pure function of the resolved configuration and
master seed: work is fanned out in fixed task order, floats are serialized
with shortest round-trip formatting, and files are written atomically (temp
file + rename) so failures never leave partial outputs behind.
"""

import argparse
import json
import logging
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict

import numpy as np

from . import analysis, config as config_mod, percolation
from .config import ExperimentConfig
from .forwarding import ForwardingParams, forward_n_packets
from .pointproc import SeedSpec, SimDomain, sample_ppp
from .rgg import build_rgg, largest_component_fraction

logger = logging.getLogger(__name__)

THETA_PRESETS = {
    # (lambda_min, lambda_max, step, window_m, trials)
    "fast": (1.0, 5.0, 0.05, 101.0, 20),
    "paper": (1.0, 5.0, 0.01, 251.0, 100),
}


def _atomic_write(path: str, text: str) -> None:
    """Write text to path via a temp file in the same directory + rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    """Six significant digits; NaN prints as 'nan'."""
    return "nan" if math.isnan(x) else f"{x:.6g}"


def _config_header(cfg: ExperimentConfig) -> str:
    # workers is excluded: by contract it never affects results, and echoing
    # it would break byte-identity across worker counts
    out = []
    for line in config_mod.render(cfg).splitlines():
        if line.startswith("workers"):
            continue
        out.append(line if line.startswith("#") else f"# {line}")
    return "\n".join(out) + "\n"


def _config_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    del d["workers"]  # scheduling detail, never affects results
    return d


def _parse_n(text: str) -> tuple[int, int]:
    if ".." in text:
        lo, _, hi = text.partition("..")
        return int(lo), int(hi)
    n = int(text)
    return n, n


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="intensity", type=float, help="point density")
    p.add_argument("--m", dest="side", type=float, help="window side length")
    p.add_argument("--k", type=int, help="packets needed to decode")
    p.add_argument("--n", type=str, help="coded packet count, single or a..b")
    p.add_argument("--delta", type=float, help="tolerated failure fraction")
    p.add_argument("--p", dest="prob", type=float, help="forwarding probability")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--workers", type=int, help="parallel worker count")
    p.add_argument("--graph-trials", type=int, help="independent graphs")
    p.add_argument("--fwd-trials", type=int, help="forwarding runs per graph")
    p.add_argument("--theta-table", type=str, help="path to a saved theta table")
    p.add_argument("--method", choices=["simulated", "mean-field"])
    p.add_argument("--condition", choices=["none", "giant"])
    p.add_argument("--out", type=str, help="output file path")
    p.add_argument("--config", type=str, help="key=value config file")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")


def _resolve(args) -> ExperimentConfig:
    """defaults <- config file <- explicit flags."""
    cfg = ExperimentConfig()
    if args.config:
        cfg = config_mod.load(args.config, base=cfg)
    updates = {}
    if args.intensity is not None:
        updates["intensity_lambda"] = args.intensity
    if args.side is not None:
        updates["side_m"] = args.side
    if args.k is not None:
        updates["k_decode"] = args.k
    if args.n is not None:
        updates["n_min"], updates["n_max"] = _parse_n(args.n)
    if args.delta is not None:
        updates["delta"] = args.delta
    if args.prob is not None:
        updates["forward_prob"] = args.prob
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.workers is not None:
        updates["workers"] = args.workers
    if args.graph_trials is not None:
        updates["graph_trials"] = args.graph_trials
    if args.fwd_trials is not None:
        updates["fwd_trials"] = args.fwd_trials
    if args.theta_table is not None:
        updates["theta_table"] = args.theta_table
    if args.method is not None:
        updates["method"] = args.method.replace("-", "_")
    if args.condition is not None:
        updates["condition"] = args.condition
    if args.out is not None:
        updates["out"] = args.out
    if updates:
        from dataclasses import replace

        cfg = replace(cfg, **updates)
    return cfg


def _domain(cfg: ExperimentConfig) -> SimDomain:
    return SimDomain(
        side_m=cfg.side_m, intensity_lambda=cfg.intensity_lambda, radius_r=cfg.radius_r
    )


def _render_theta_text(table, cfg: ExperimentConfig | None) -> str:
    header = _config_header(cfg) if cfg is not None else ""
    m = table.window_m
    m_str = str(int(m)) if float(m).is_integer() else repr(m)
    lines = [
        f"# m={m_str} trials={table.trials} seed={table.master_seed} smoothed={table.smoothed}",
        "lambda,theta_hat,std_err",
    ]
    for lam, th, se in zip(table.lambda_grid, table.theta_hat, table.std_err):
        lines.append(f"{float(lam)!r},{float(th)!r},{float(se)!r}")
    return header + "\n".join(lines) + "\n"


def _load_or_make_table(cfg: ExperimentConfig):
    """Read the configured theta table, or build the fast preset from scratch."""
    if cfg.theta_table:
        return percolation.read_theta_table(cfg.theta_table)
    lo, hi, step, m, trials = THETA_PRESETS["fast"]
    logger.warning("no theta table given; generating the fast preset (this takes a while)")
    return percolation.estimate_theta_curve(
        lo, hi, step, m, trials, cfg.master_seed, workers=cfg.workers
    )


def cmd_theta(args) -> int:
    cfg = _resolve(args)
    lo, hi, step, m, trials = THETA_PRESETS[args.preset]
    if args.side is not None:
        m = args.side
    if args.trials is not None:
        trials = args.trials
    if args.step is not None:
        step = args.step
    out = cfg.out or f"theta_{args.preset}.csv"
    start = time.perf_counter()
    table = percolation.estimate_theta_curve(
        lo, hi, step, m, trials, cfg.master_seed,
        smoothed=not args.no_smooth, workers=cfg.workers,
    )
    elapsed = time.perf_counter() - start
    _atomic_write(out, _render_theta_text(table, cfg))
    print(
        f"wrote {out}: {table.lambda_grid.size} grid points, "
        f"{elapsed:.1f}s, max std_err {table.std_err.max():.4f}"
    )
    if not args.no_plot:
        from . import plotting

        fig_path = os.path.splitext(out)[0] + ".png"
        plotting.save_theta_figure(table, fig_path)
        print(f"wrote {fig_path}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _resolve(args)
    domain = _domain(cfg)
    table = None
    if cfg.method == "mean_field" or cfg.theta_table:
        table = _load_or_make_table(cfg)
    out = cfg.out or "sweep.csv"

    def progress(row):
        print(
            f"n={row.n}: p_min={_fmt(row.p_min)} success={_fmt(row.success_at_p)} "
            f"tau_per_node={_fmt(row.tau_per_node)}"
        )
        if math.isnan(row.p_min):
            print(f"warning: target success unreachable at n={row.n}", file=sys.stderr)

    rows = analysis.sweep(
        domain,
        cfg.k_decode,
        cfg.delta,
        cfg.n_values,
        cfg.method,
        cfg.graph_trials,
        cfg.fwd_trials,
        table,
        cfg.master_seed,
        condition=cfg.condition,
        workers=cfg.workers,
        progress=progress,
    )
    lines = [_config_header(cfg) + "n,p_min,success_at_p,tau,tau_per_node,method"]
    for r in rows:
        lines.append(
            f"{r.n},{_fmt(r.p_min)},{_fmt(r.success_at_p)},"
            f"{_fmt(r.tau)},{_fmt(r.tau_per_node)},{r.method}"
        )
    _atomic_write(out, "\n".join(lines) + "\n")
    print(f"wrote {out}")
    if not args.no_plot:
        from . import plotting

        for p in plotting.save_sweep_figures(rows, os.path.splitext(out)[0]):
            print(f"wrote {p}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _resolve(args)
    if args.n is not None and ".." in args.n:
        raise SystemExit("simulate takes a single --n, not a range")
    n = cfg.n_min
    domain = _domain(cfg)
    seed = SeedSpec(cfg.master_seed, trial_id=0, stream_id=0)
    points = sample_ppp(domain, seed)
    graph = build_rgg(points)
    params = ForwardingParams(
        n_packets=n, k_decode=cfg.k_decode, forward_prob=cfg.forward_prob
    )
    result = forward_n_packets(graph, params, seed, keep_packets=True)
    report = {
        "config": _config_dict(cfg),
        "n_points": graph.n_points,
        "n_edges": graph.n_edges,
        "largest_component_fraction": largest_component_fraction(graph),
        "successful_receivers": result.successful_receivers,
        "successful_fraction": result.successful_receivers / graph.n_points,
        "total_transmissions": result.total_transmissions,
        "per_packet": [
            {
                "packet": j + 1,
                "transmitters": int(out.transmitters.size),
                "receivers": int(out.receivers.size),
            }
            for j, out in enumerate(result.per_packet)
        ],
        "seed": {
            "master_seed": cfg.master_seed,
            "graph_trial": 0,
            "packet_streams": f"1..{n}",
        },
    }
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if cfg.out:
        _atomic_write(cfg.out, text)
        print(f"wrote {cfg.out}")
    else:
        sys.stdout.write(text)
    if args.graph_out:
        m = domain.side_m
        m_str = str(int(m)) if float(m).is_integer() else repr(m)
        lines = [f"# n={graph.n_points} m={m_str} lambda={domain.intensity_lambda!r}"]
        lines.extend(f"{u} {v}" for u, v in graph.edges)
        _atomic_write(args.graph_out, "\n".join(lines) + "\n")
        print(f"wrote {args.graph_out}")
    return 0


def cmd_diagnostics(args) -> int:
    cfg = _resolve(args)
    domain = _domain(cfg)
    table = percolation.read_theta_table(cfg.theta_table) if cfg.theta_table else None
    trials = args.trials if args.trials is not None else 50
    report = percolation.ergodic_diagnostics(
        domain, cfg.forward_prob, trials, cfg.master_seed,
        table=table, workers=cfg.workers,
    )
    payload = {
        "config": _config_dict(cfg),
        "trials": trials,
        "supercritical": report.supercritical,
        "rows": [
            {
                "name": r.name,
                "predicted": r.predicted,
                "estimate": r.estimate,
                "std_err": r.std_err,
                "z_score": r.z_score,
                "applicable": r.applicable,
            }
            for r in report.rows
        ],
        "worst_abs_z": report.worst_z(),
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if cfg.out:
        _atomic_write(cfg.out, text)
        print(f"wrote {cfg.out}")
    else:
        sys.stdout.write(text)
    for r in report.rows:
        tag = "" if r.applicable else " (not applicable)"
        print(
            f"{r.name}: predicted={_fmt(r.predicted)} estimate={_fmt(r.estimate)} "
            f"z={_fmt(r.z_score)}{tag}"
        )
    if not report.supercritical:
        print("note: thinned intensity is sub-critical; cluster rows skipped")
    return 1 if report.worst_z() > 5.0 else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rggcast",
        description="Monte Carlo study of probabilistic packet forwarding on "
        "random geometric graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theta", help="estimate and save the percolation curve")
    _add_common(p)
    p.add_argument("--preset", choices=["fast", "paper"], default="fast")
    p.add_argument("--trials", type=int, help="graphs per grid point")
    p.add_argument("--step", type=float, help="intensity grid spacing")
    p.add_argument("--no-smooth", action="store_true", help="skip isotonic smoothing")
    p.set_defaults(func=cmd_theta)

    p = sub.add_parser("sweep", help="minimum forwarding probability per n")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="one graph, one forwarding run, JSON report")
    _add_common(p)
    p.add_argument("--graph-out", type=str, help="also save the edge list here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diagnostics", help="ergodic limit checks with z-scores")
    _add_common(p)
    p.add_argument("--trials", type=int, help="independent graphs (default 50)")
    p.set_defaults(func=cmd_diagnostics)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
