"""Classical outer loop: simplex maximizer, warm starts, restarts and cluster-number looping."""
from __future__ import annotations

import json
import math
import os
import threading
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import OptimizerError
from .instances import Dataset, ProblemGraph, all_negative, brute_force_maxagree
from .simulator import TWO_PI, MixerSpec, QaoaEvaluator, QaoaParams, approx_ratio, parse_mixer


@dataclass(frozen=True)
class OptimizerConfig:
    max_evals: int = 500
    restarts: int = 5
    init_simplex_scale: float = 0.5
    tolerance: float = 1e-7
    xtol: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.max_evals < 1:
            raise ValueError("max_evals must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


class OptimResult(NamedTuple):
    x: np.ndarray
    f: float
    evals: int


def nelder_mead(
    objective: Callable[[np.ndarray], float],
    x0: Sequence[float],
    cfg: OptimizerConfig = OptimizerConfig(),
    periodic: bool = False,
) -> OptimResult:
    """Maximize objective with a Nelder-Mead simplex.

    With periodic=True every coordinate is an angle: points are evaluated (and the
    best point returned) wrapped into [0, 2pi).
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size < 1:
        raise ValueError("x0 must have dimension >= 1")
    wrap = (lambda x: np.mod(x, TWO_PI)) if periodic else (lambda x: x)
    n = x0.size
    evals = 0

    def f(x):
        nonlocal evals
        evals += 1
        v = float(objective(wrap(x)))
        if not math.isfinite(v):
            raise OptimizerError(f"objective returned {v} at x={wrap(x).tolist()}")
        return -v  # minimize the negative

    sim = np.vstack([x0] + [x0 + cfg.init_simplex_scale * e for e in np.eye(n)])
    fs = np.empty(n + 1)
    fs[0] = f(sim[0])
    for i in range(1, n + 1):
        if evals >= cfg.max_evals:
            fs[i:] = np.inf
            break
        fs[i] = f(sim[i])

    while evals < cfg.max_evals:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        if fs[-1] - fs[0] <= cfg.tolerance and np.max(np.abs(sim[1:] - sim[0])) <= cfg.xtol:
            break
        centroid = sim[:-1].mean(axis=0)
        xr = centroid + (centroid - sim[-1])
        fr = f(xr)
        if fr < fs[0]:
            if evals >= cfg.max_evals:
                sim[-1], fs[-1] = xr, fr
                break
            xe = centroid + 2.0 * (centroid - sim[-1])
            fe = f(xe)
            sim[-1], fs[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
        else:
            if evals >= cfg.max_evals:
                break
            outside = fr < fs[-1]
            xc = centroid + 0.5 * ((xr if outside else sim[-1]) - centroid)
            fc = f(xc)
            if fc < (fr if outside else fs[-1]):
                sim[-1], fs[-1] = xc, fc
            else:
                for i in range(1, n + 1):
                    if evals >= cfg.max_evals:
                        break
                    sim[i] = sim[0] + 0.5 * (sim[i] - sim[0])
                    fs[i] = f(sim[i])
    best = int(np.argmin(fs))
    return OptimResult(wrap(sim[best]), -float(fs[best]), evals)


def multistart(
    objective: Callable[[np.ndarray], float],
    starts: Sequence[np.ndarray],
    cfg: OptimizerConfig,
) -> tuple[OptimResult, list[OptimResult]]:
    """Run the maximizer from every start; the first strictly best run wins."""
    runs = [nelder_mead(objective, s, cfg, periodic=True) for s in starts]
    best = runs[0]
    for r in runs[1:]:
        if r.f > best.f:
            best = r
    total = sum(r.evals for r in runs)
    return OptimResult(best.x, best.f, total), runs


def random_starts(rng: np.random.Generator, count: int, p: int) -> list[np.ndarray]:
    return [rng.uniform(0.0, TWO_PI, 2 * p) for _ in range(count)]


# ---------------------------------------------------------------- warm starts


@dataclass
class WarmStartCache:
    """(N, d, p, mixer) -> optimized parameters on the all-negative instance.

    Single writer, many readers; optionally persisted as JSON lines in a file.
    """

    path: str | None = None
    entries: dict = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if self.path and os.path.exists(self.path):
            with open(self.path) as fh:
                for rec in json.load(fh):
                    key = (rec["N"], rec["d"], rec["p"], rec["mixer"])
                    self.entries[key] = (QaoaParams(rec["gammas"], rec["betas"]), rec["F"])

    def get(self, key):
        return self.entries.get(key)

    def put(self, key, params: QaoaParams, value: float) -> None:
        with self._lock:
            self.entries[key] = (params, value)
            if self.path:
                self._save()

    def _save(self) -> None:
        recs = [
            {"N": k[0], "d": k[1], "p": k[2], "mixer": k[3],
             "gammas": v[0].gammas.tolist(), "betas": v[0].betas.tolist(), "F": v[1]}
            for k, v in sorted(self.entries.items())
        ]
        tmp = self.path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(recs, fh, sort_keys=True, indent=1)
        os.replace(tmp, self.path)


DEFAULT_CACHE = WarmStartCache()


def warm_start(
    N: int,
    d: int,
    p: int,
    cfg: OptimizerConfig = OptimizerConfig(),
    mixer: str = "standard",
    cache: WarmStartCache | None = None,
) -> QaoaParams:
    """Parameters maximizing F_p on the all-negative complete graph at (N, d, p)."""
    if not 1 <= d <= N:
        raise ValueError("warm start needs 1 <= d <= N")
    cache = DEFAULT_CACHE if cache is None else cache
    key = (N, d, p, mixer)
    hit = cache.get(key)
    if hit is not None:
        return hit[0]
    g = all_negative(N)
    if d == 1:
        params = QaoaParams(np.zeros(p), np.zeros(p))
        cache.put(key, params, float(g.weight_sum))
        return params
    ev = QaoaEvaluator(g, d, parse_mixer(mixer, d))
    rng = np.random.default_rng([cfg.seed, N, d, p])
    starts = random_starts(rng, max(cfg.restarts, 2), p)
    if p > 1:
        # extend the depth-(p-1) optimum by repeating its last layer
        prev = warm_start(N, d, p - 1, cfg, mixer, cache)
        starts.insert(0, np.concatenate([prev.gammas, prev.gammas[-1:], prev.betas, prev.betas[-1:]]))
    best, _ = multistart(ev, starts, cfg)
    params = QaoaParams.from_vector(best.x)
    cache.put(key, params, ev(params.to_vector()))
    return params


# ---------------------------------------------------------------- per-instance solve


@dataclass
class DResult:
    F: float
    ratio: float
    params: QaoaParams
    evals: int


@dataclass
class RunReport:
    best_ratio: float
    best_params: QaoaParams
    best_d: int
    evals_used: int
    per_d_results: dict[int, DResult]
    c_star: int


def _instance_seed(g: ProblemGraph) -> int:
    h = 0
    for u, v, w in g.edges:
        h = (h * 1000003 + u * 131 + v * 7 + (w > 0)) % (2**61 - 1)
    return h


def solve_instance(
    g: ProblemGraph,
    p: int,
    cfg: OptimizerConfig = OptimizerConfig(),
    use_warm_start: bool = True,
    mixer: str = "standard",
    loop_clusters: bool = True,
    c_star: int | None = None,
    cache: WarmStartCache | None = None,
) -> RunReport:
    """Best approximation ratio over cluster numbers d (or d = N only without looping).

    Restart 0 starts from the warm start when enabled; remaining restarts start from
    seeded uniform points in [0, 2pi)^(2p).
    """
    N = g.n_nodes
    if c_star is None:
        c_star = brute_force_maxagree(g, N).c_star
    ds = range(1, N + 1) if loop_clusters else [N]
    per_d: dict[int, DResult] = {}
    total = 0
    for d in ds:
        if d == 1:
            F = float(g.weight_sum)
            per_d[d] = DResult(F, approx_ratio(F, g.n_edges, c_star), QaoaParams(np.zeros(p), np.zeros(p)), 0)
            continue
        ev = QaoaEvaluator(g, d, parse_mixer(mixer, d))
        rng = np.random.default_rng([cfg.seed, _instance_seed(g), d, p])
        starts = random_starts(rng, cfg.restarts, p)
        if use_warm_start:
            starts[0] = warm_start(N, d, p, cfg, mixer, cache).to_vector()
        best, _ = multistart(ev, starts, cfg)
        total += best.evals
        params = QaoaParams.from_vector(best.x)
        per_d[d] = DResult(best.f, approx_ratio(best.f, g.n_edges, c_star), params, best.evals)
    best_d = min(per_d, key=lambda k: (-per_d[k].ratio, k))
    r = per_d[best_d]
    return RunReport(r.ratio, r.params, best_d, total, per_d, c_star)


STRATEGIES = {
    "vanilla": dict(use_warm_start=False, loop_clusters=False, restarts=1),
    "restarts": dict(use_warm_start=False, loop_clusters=False, restarts=None),
    "full": dict(use_warm_start=True, loop_clusters=True, restarts=None),
}


def solve_with_strategy(
    g: ProblemGraph, p: int, strategy: str, cfg: OptimizerConfig = OptimizerConfig(),
    mixer: str = "standard", c_star: int | None = None, cache: WarmStartCache | None = None,
) -> RunReport:
    """Named strategy stacks: 'vanilla' (d=N, one random start), 'restarts' (d=N,
    cfg.restarts random starts) and 'full' (cluster loop + warm start + restarts)."""
    opts = STRATEGIES[strategy]
    if opts["restarts"] is not None:
        cfg = OptimizerConfig(cfg.max_evals, opts["restarts"], cfg.init_simplex_scale, cfg.tolerance, cfg.xtol, cfg.seed)
    return solve_instance(g, p, cfg, opts["use_warm_start"], mixer, opts["loop_clusters"], c_star, cache)


# ---------------------------------------------------------------- concentration study


def circular_span(angles: np.ndarray) -> float:
    """Length of the shortest arc of the circle [0, 2pi) containing all angles."""
    a = np.sort(np.mod(np.asarray(angles, dtype=float), TWO_PI))
    if a.size <= 1:
        return 0.0
    gaps = np.diff(np.concatenate([a, [a[0] + TWO_PI]]))
    return float(TWO_PI - gaps.max())


@dataclass
class ConcentrationReport:
    fraction: float
    points: list[tuple[float, float]]
    gamma_span: float
    beta_span: float


def concentration_report(
    N: int, d: int, dataset: Dataset | Sequence[ProblemGraph], p: int = 1,
    cfg: OptimizerConfig = OptimizerConfig(), mixer: str = "standard",
    cache: WarmStartCache | None = None,
) -> ConcentrationReport:
    """Optimize every instance from the warm start and measure how tightly the optima cluster."""
    if p != 1:
        raise ValueError("concentration study is defined for p=1")
    graphs = dataset.instances if isinstance(dataset, Dataset) else tuple(dataset)
    x0 = warm_start(N, d, p, cfg, mixer, cache).to_vector()
    pts = []
    for g in graphs:
        res = nelder_mead(QaoaEvaluator(g, d, parse_mixer(mixer, d)), x0, cfg, periodic=True)
        pts.append((float(res.x[0]), float(res.x[1])))
    arr = np.array(pts)
    gs, bs = circular_span(arr[:, 0]), circular_span(arr[:, 1])
    return ConcentrationReport(gs * bs / TWO_PI**2, pts, gs, bs)
