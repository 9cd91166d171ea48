"""f-tables, LP relaxations of the hardest-graph problem, and the iterative bound."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from ..simulator import TWO_PI, MixerSpec, QaoaEvaluator, QaoaParams, StateVector, run_qaoa
from ..strategies import OptimizerConfig, nelder_mead
from .simplex import LPProblem, LPSolution, simplex_solve
from .subgraphs import WeightedSubgraph, c_lambda, enumerate_subgraphs

D_VALUES = (1, 2, 3, 4)

# Best parameters per d as published: (gamma, beta). They refer to a cost unitary with
# the opposite sign and a mixer angle half of ours; see published_to_internal.
PUBLISHED_PARAMS = {2: (2.857, 0.4833), 3: (2.773, 0.1310), 4: (2.682, 0.1435)}
PUBLISHED_LP1 = 0.6367
PUBLISHED_LP2 = 0.6699
PUBLISHED_REOPT = 0.674


def published_to_internal(gamma: float, beta: float) -> tuple[float, float]:
    """Map published angles to exp(-i gamma H_obj), exp(-i beta h) with h the ring mixer."""
    return float(np.mod(-gamma, TWO_PI)), float(np.mod(2 * beta, TWO_PI))


def table_params() -> dict[int, tuple[float, float]]:
    return {d: published_to_internal(*gb) for d, gb in PUBLISHED_PARAMS.items()}


def _central_observable(lam: WeightedSubgraph, d: int) -> np.ndarray:
    n = lam.graph().n_nodes
    idx = np.indices((d,) * n).reshape(n, -1)
    return np.where(idx[0] == idx[1], 1.0, -1.0)


def f_lambda(lam: WeightedSubgraph, d: int, gamma: float, beta: float) -> float:
    """w <S_central> after one QAOA layer (ring mixer) on the isolated subgraph."""
    if d not in D_VALUES:
        raise ValueError("d must be in 1..4")
    if d == 1:
        return float(lam.central_weight)
    state = run_qaoa(lam.graph(), d, QaoaParams([gamma], [beta]), MixerSpec("standard", d))
    return float(lam.central_weight * np.dot(state.probabilities(), _central_observable(lam, d)))


def agreement_probability(f: float) -> float:
    return (1.0 + f) / 2.0


@dataclass
class Tables:
    subgraphs: tuple[WeightedSubgraph, ...]
    f: dict[int, np.ndarray]  # w<S> per d
    c: tuple[Fraction, ...]

    def agree(self, d: int) -> np.ndarray:
        return agreement_probability(self.f[d])


def compute_tables(params: Mapping[int, tuple[float, float]]) -> Tables:
    S = enumerate_subgraphs()
    f = {1: np.array([float(l.central_weight) for l in S])}
    for d in (2, 3, 4):
        g, b = params[d]
        f[d] = np.array([f_lambda(l, d, g, b) for l in S])
    return Tables(S, f, tuple(c_lambda(l) for l in S))


def build_lp(relaxation: str, tables: Tables) -> tuple[LPProblem, list[int]]:
    """Variables n_lambda (lambda in the relaxation's set) then alpha; minimize alpha."""
    if relaxation not in ("lp1", "lp2"):
        raise ValueError("relaxation must be 'lp1' or 'lp2'")
    S = tables.subgraphs
    idx = [i for i in range(len(S)) if relaxation == "lp1" or tables.c[i] == 1]
    if not idx:
        raise ValueError("empty subgraph set")
    k = len(idx)
    g2 = np.array([1.0 if S[i].structure == "g2" else 0.0 for i in idx])
    g3 = np.array([1.0 if S[i].structure == "g3" else 0.0 for i in idx])
    rows, rhs = [], []
    for d in D_VALUES:
        rows.append(np.concatenate([tables.agree(d)[idx], [-1.5]]))
        rhs.append(0.0)
    rows.append(np.concatenate([-(g2 - 4 * g3), [0.0]]))  # g2 - 4 g3 >= 0
    rhs.append(0.0)
    rows.append(np.concatenate([g2, [0.0]]))  # g2 <= 1
    rhs.append(1.0)
    c = np.zeros(k + 1)
    c[-1] = 1.0
    lp = LPProblem(
        c, np.array(rows), np.array(rhs), np.concatenate([np.ones(k), [0.0]])[None, :], np.array([1.5]),
        [(0.0, None)] * k + [(None, None)],
        [S[i].key for i in idx] + ["alpha"],
    )
    return lp, idx


@dataclass
class BoundResult:
    relaxation: str
    alpha: float
    n_lambda: dict[str, float]
    solution: LPSolution


def solve_bound(relaxation: str, tables: Tables) -> BoundResult:
    lp, idx = build_lp(relaxation, tables)
    sol = simplex_solve(lp)
    if sol.status != "optimal":
        raise RuntimeError(f"LP {relaxation} returned {sol.status}")
    n = {lp.names[j]: float(sol.x[j]) for j in range(len(idx)) if sol.x[j] > 1e-12}
    return BoundResult(relaxation, float(sol.x[-1]), n, sol)


def hardest_ratio(d: int, gamma: float, beta: float, hard: Mapping[WeightedSubgraph, float]) -> float:
    """sum n f_agree / sum n c for fixed n_lambda at one d."""
    num = sum(w * agreement_probability(f_lambda(l, d, gamma, beta)) for l, w in hard.items())
    den = sum(w * float(c_lambda(l)) for l, w in hard.items())
    return num / den


@dataclass
class RoundTrace:
    params: dict[int, tuple[float, float]]
    n_lambda: dict[str, float]
    lp_bound: float
    optimized_params: dict[int, tuple[float, float]]
    per_d_ratio: dict[int, float]
    improved_bound: float


def optimize_on_hardest(
    hard: Mapping[WeightedSubgraph, float], params: Mapping[int, tuple[float, float]],
    starts: int = 20, seed: int = 0, cfg: OptimizerConfig | None = None,
) -> tuple[dict[int, tuple[float, float]], dict[int, float]]:
    """Maximize the hardest-graph ratio over (gamma_d, beta_d) per d with multi-start."""
    cfg = cfg or OptimizerConfig(max_evals=300, tolerance=1e-10, xtol=1e-6)
    rng = np.random.default_rng(seed)
    new, ratios = {}, {}
    ratios[1] = hardest_ratio(1, 0.0, 0.0, hard)
    for d in (2, 3, 4):
        obj = lambda x, d=d: hardest_ratio(d, x[0], x[1], hard)
        cands = [np.array(params[d], dtype=float)] + [rng.uniform(0, TWO_PI, 2) for _ in range(starts - 1)]
        best = None
        for x0 in cands:
            r = nelder_mead(obj, x0, cfg, periodic=True)
            if best is None or r.f > best.f:
                best = r
        new[d] = (float(best.x[0]), float(best.x[1]))
        ratios[d] = best.f
    return new, ratios


def iterative_bound(
    init_params: Mapping[int, tuple[float, float]] | None = None, rounds: int = 1,
    relaxation: str = "lp2", starts: int = 20, seed: int = 0,
) -> list[RoundTrace]:
    """Alternate hardest-graph LP and per-d parameter maximization."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    params = dict(init_params or table_params())
    S = {l.key: l for l in enumerate_subgraphs()}
    trace = []
    for k in range(rounds):
        res = solve_bound(relaxation, compute_tables(params))
        hard = {S[key]: v for key, v in res.n_lambda.items()}
        new, ratios = optimize_on_hardest(hard, params, starts, seed + k)
        trace.append(RoundTrace(dict(params), res.n_lambda, res.alpha, new, ratios, max(ratios.values())))
        params = new
    return trace
