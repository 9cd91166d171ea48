"""Command-line experiment runner.

Every subcommand writes its artifacts into --out-dir under a name built from the
subcommand, the seed and a hash of the configuration, then prints the written paths as
JSON. CSV files end with a `# config_hash=...` comment line. QQ_THREADS caps the BLAS
thread pools and must be set before numpy loads, which is why it is read here first.
"""
from __future__ import annotations

import os

_threads = os.environ.get("QQ_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import QuditCCError
from .instances import Dataset, generate_dataset


def config_hash(config: dict) -> str:
    text = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def write_csv(path: Path, header: list[str], rows, chash: str, plot: str | None = None) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    meta = f"# config_hash={chash}"
    if plot:
        meta += f" plot={plot}"
    buf.write(meta + "\n")
    path.write_text(buf.getvalue())
    return path


def write_json(path: Path, payload: dict, chash: str) -> Path:
    payload = dict(payload)
    payload["meta"] = {"config_hash": chash, "version": __version__}
    path.write_text(json.dumps(payload, sort_keys=True, indent=1, default=_json_default) + "\n")
    return path


def _json_default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def _file_digest(path: str) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]
    except OSError:
        return "missing:" + Path(path).name


def _config(args: argparse.Namespace) -> dict:
    """Hashable run configuration; input datasets enter by content, not by location."""
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("out_dir", "func")}
    if "dataset" in cfg:
        ds = cfg["dataset"]
        cfg["dataset"] = [_file_digest(x) for x in ds] if isinstance(ds, list) else _file_digest(ds)
    if cfg.get("warm_cache"):
        cfg["warm_cache"] = Path(cfg["warm_cache"]).name
    return cfg


def _stem(args: argparse.Namespace, chash: str) -> str:
    seed = getattr(args, "seed", None)
    return f"{args.command}" + (f"_s{seed}" if seed is not None else "") + f"_{chash}"


def _load_dataset(path: str) -> Dataset:
    return Dataset.from_json(Path(path).read_text())


# ---------------------------------------------------------------- subcommands


def cmd_gen_dataset(args, out: Path, chash: str) -> list[Path]:
    ds = generate_dataset(args.kind, args.n, args.count, args.seed)
    path = out / f"dataset_{args.kind}_n{args.n}_c{args.count}_s{args.seed}.json"
    path.write_text(ds.to_json() + "\n")
    return [path]


def _opt_cfg(args):
    from .strategies import OptimizerConfig

    return OptimizerConfig(max_evals=args.max_evals, restarts=args.restarts, seed=args.seed)


def cmd_run_qaoa(args, out: Path, chash: str) -> list[Path]:
    from .strategies import WarmStartCache, solve_with_strategy

    ds = _load_dataset(args.dataset)
    cache = WarmStartCache(args.warm_cache) if args.warm_cache else WarmStartCache()
    dataset_id = Path(args.dataset).stem
    rows = []
    for i, g in enumerate(ds.instances):
        for p in args.p:
            rep = solve_with_strategy(g, p, args.strategy, _opt_cfg(args), args.mixer, cache=cache)
            rows.append((dataset_id, i, g.n_nodes, p, rep.best_d, rep.best_ratio, rep.evals_used))
    header = ["dataset_id", "instance_id", "N", "p", "d_best", "ratio", "evals"]
    return [write_csv(out / f"{_stem(args, chash)}.csv", header, rows, chash, "ratio_vs_p")]


def cmd_run_noise(args, out: Path, chash: str) -> list[Path]:
    from .noise import DEFAULT_P2_GRID, threshold_scan
    from .strategies import WarmStartCache

    datasets = {}
    for path in args.dataset:
        ds = _load_dataset(path)
        datasets[ds.instances[0].n_nodes] = ds
    grid = args.p2_grid if args.p2_grid else list(DEFAULT_P2_GRID)
    cache = WarmStartCache(args.warm_cache) if args.warm_cache else WarmStartCache()
    res = threshold_scan(datasets, tuple(args.p), grid, args.trajectories, args.seed, _opt_cfg(args), cache)
    stem = _stem(args, chash)
    curve_rows = [(pt.N, pt.p, c[0], c[1], c[2], args.trajectories) for pt in res.points for c in pt.curve]
    th_rows = [(pt.N, pt.p, pt.p2_threshold, pt.g_threshold) for pt in res.points]
    return [
        write_csv(out / f"{stem}_curves.csv", ["N", "p", "p2", "mean_ratio", "stderr", "trajectories"],
                  curve_rows, chash, "ratio_vs_p2"),
        write_csv(out / f"{stem}_thresholds.csv", ["N", "p", "p2_th", "g_th"], th_rows, chash, "threshold_vs_gates"),
        write_json(out / f"{stem}_fit.json", {"kappa": res.kappa, "r2": res.r2}, chash),
    ]


def cmd_gate_count(args, out: Path, chash: str) -> list[Path]:
    from .gatecount import table_rows, total_cost

    stem = _stem(args, chash)
    if args.sweep:
        rows = table_rows(tuple(args.sweep_d))
        header = list(rows[0].keys())
        return [write_csv(out / f"{stem}.csv", header, [[_fraction(r[h]) for h in header] for r in rows],
                          chash, "cost_coefficients")]
    br = total_cost(args.n, args.d, args.encoding, args.topology)
    return [write_json(out / f"{stem}.json", br.to_dict(), chash)]


def _fraction(x):
    from fractions import Fraction

    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else str(x)
    return x


def cmd_swap_schedule(args, out: Path, chash: str) -> list[Path]:
    from .gatecount import swap_lower_bounds, swap_schedule_1d, swap_schedule_2d

    sched = swap_schedule_1d(args.n) if args.topology == "1D" else swap_schedule_2d(args.n)
    lb_layers, lb_swaps = swap_lower_bounds(args.n)
    payload = {
        "n": args.n, "topology": args.topology, "n_layers": sched.n_layers,
        "total_swaps": sched.total_swaps, "layers": [[list(s) for s in layer] for layer in sched.layers],
        "all_pairs_met": len(sched.met_pairs) == args.n * (args.n - 1) // 2,
        "lower_bound_layers": lb_layers, "lower_bound_swaps": lb_swaps,
    }
    return [write_json(out / f"{_stem(args, chash)}.json", payload, chash)]


def cmd_bounds(args, out: Path, chash: str) -> list[Path]:
    from .bounds import compute_tables, enumerate_subgraphs, iterative_bound, solve_bound, table_params

    subs = enumerate_subgraphs()
    catalogue = [{"key": s.key, "structure": s.structure, "weights": list(s.weights)} for s in subs]
    if args.relaxation == "iterate":
        trace = iterative_bound(rounds=args.rounds, seed=args.seed)
        payload = {
            "relaxation": "iterate",
            "rounds": [
                {"lp_bound": t.lp_bound, "improved_bound": t.improved_bound, "n_lambda": t.n_lambda,
                 "params": {str(d): list(v) for d, v in t.params.items()},
                 "optimized_params": {str(d): list(v) for d, v in t.optimized_params.items()},
                 "per_d_ratio": {str(d): v for d, v in t.per_d_ratio.items()}}
                for t in trace
            ],
            "alpha": trace[-1].improved_bound,
            "subgraphs": catalogue,
        }
    else:
        tables = compute_tables(table_params())
        res = solve_bound(args.relaxation, tables)
        payload = {
            "relaxation": args.relaxation,
            "alpha": res.alpha,
            "hardest_n_lambda": res.n_lambda,
            "f_table": {s.key: {str(d): tables.f[d][i] for d in sorted(tables.f)} for i, s in enumerate(tables.subgraphs)},
            "c_table": {s.key: _fraction(tables.c[i]) for i, s in enumerate(tables.subgraphs)},
            "subgraphs": catalogue,
        }
    return [write_json(out / f"{_stem(args, chash)}.json", payload, chash)]


def cmd_gates_verify(args, out: Path, chash: str) -> list[Path]:
    from .gates import verify_all

    rows = verify_all(range(2, args.d_max + 1), seed=args.seed)
    body = [(r["gate"], r["d"], r["max_deviation"], r["passed"]) for r in rows]
    return [write_csv(out / f"{_stem(args, chash)}.csv", ["gate", "d", "max_deviation", "passed"], body, chash)]


def cmd_opensys(args, out: Path, chash: str) -> list[Path]:
    from .opensys import fidelity_suite

    rep = fidelity_suite(args.gamma, v_ratio=args.v_ratio, steps_per_pi=args.steps)
    stem = _stem(args, chash)
    summary = {
        "eta": rep.eta, "eta_block_time": rep.eta_block_time, "t_cp": rep.t_cp,
        "block_decay_time": rep.block_decay_time, "gate_fidelity": rep.gate_fidelity,
        "gate_fidelity_uncalibrated": rep.gate_fidelity_uncalibrated, "phase_offset": rep.phase_offset,
        "mean_weyl_fidelity": rep.mean_weyl_fidelity, "max_trace_drift": rep.max_trace_drift,
        "decays": rep.decays, "projected_deviation": rep.projected_deviation,
    }
    return [
        write_csv(out / f"{stem}.csv", ["p2", "F_err", "F_open", "F_err_open"], rep.rows(), chash, "fidelity_vs_p2"),
        write_json(out / f"{stem}.json", summary, chash),
    ]


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="quditcc", description="Qudit QAOA correlation clustering experiments")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, **kw):
        p = sub.add_parser(name, **kw)
        p.add_argument("--out-dir", default=".")
        p.set_defaults(func=func)
        return p

    def opt_flags(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--max-evals", type=int, default=500)
        p.add_argument("--restarts", type=int, default=5)
        p.add_argument("--warm-cache", default=None, help="JSON file for warm-start parameters")

    p = add("gen-dataset", cmd_gen_dataset, help="generate a seeded instance dataset")
    p.add_argument("--kind", choices=["complete", "erdos_renyi"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--seed", type=int, required=True)

    p = add("run-qaoa", cmd_run_qaoa, help="optimize every instance of a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--p", type=int, nargs="+", required=True)
    p.add_argument("--strategy", choices=["vanilla", "restarts", "full"], default="full")
    p.add_argument("--mixer", default="standard")
    opt_flags(p)

    p = add("run-noise", cmd_run_noise, help="noisy curves, thresholds and kappa fit")
    p.add_argument("--dataset", nargs="+", required=True)
    p.add_argument("--p", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--p2-grid", type=float, nargs="*", default=None)
    p.add_argument("--trajectories", type=int, default=200)
    opt_flags(p)

    p = add("gate-count", cmd_gate_count, help="2-gate cost of the cost layer")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--encoding", choices=["qudit", "binary"], default="qudit")
    p.add_argument("--topology", choices=["1D", "2D"], default="1D")
    p.add_argument("--sweep", action="store_true", help="emit the coefficient table instead")
    p.add_argument("--sweep-d", type=int, nargs="+", default=[4, 8, 16])

    p = add("swap-schedule", cmd_swap_schedule, help="all-pairs SWAP network")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--topology", choices=["1D", "2D"], default="1D")

    p = add("bounds", cmd_bounds, help="3-regular approximation-ratio bound")
    p.add_argument("--relaxation", choices=["lp1", "lp2", "iterate"], default="lp1")
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)

    p = add("gates-verify", cmd_gates_verify, help="gate identity table")
    p.add_argument("--d-max", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)

    p = add("opensys", cmd_opensys, help="open-system CP fidelities")
    p.add_argument("--gamma", type=float, default=float(np.pi / 2))
    p.add_argument("--v-ratio", type=float, default=20.0)
    p.add_argument("--steps", type=int, default=3200, help="RK4 steps per pi-pulse")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        chash = config_hash(_config(args))
        paths = args.func(args, out, chash)
    except (QuditCCError, ValueError, KeyError, OSError, RuntimeError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
        return 1
    print(json.dumps({"command": args.command, "config_hash": chash, "outputs": [str(p) for p in paths]}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
