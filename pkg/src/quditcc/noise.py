"""Stochastic two-qudit Weyl error channel, noisy trajectories and threshold fitting."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import NoThresholdError
from .instances import Dataset, ProblemGraph, brute_force_maxagree
from .simulator import (
    MixerSpec, QaoaParams, StateVector, approx_ratio, check_capacity, cost_diagonal, mixer_unitary, shift_matrix,
)
from .strategies import OptimizerConfig, RunReport, WarmStartCache, solve_instance

DEFAULT_P2_GRID = tuple(float(x) for x in np.logspace(-4, 0, 13))


@dataclass(frozen=True)
class WeylSet:
    d: int
    unitaries: tuple[np.ndarray, ...]  # index r*d + s holds X^r Z^s


def weyl_operator(d: int, r: int, s: int) -> np.ndarray:
    lam = np.exp(2j * np.pi / d)
    z = np.diag(lam ** np.arange(d))
    return np.linalg.matrix_power(shift_matrix(d), r) @ np.linalg.matrix_power(z, s)


def weyl_set(d: int) -> WeylSet:
    if d < 2:
        raise ValueError("d must be >= 2")
    return WeylSet(d, tuple(weyl_operator(d, r, s) for r in range(d) for s in range(d)))


def decode_pair(k: int, d: int) -> tuple[int, int, int, int]:
    """Index in [0, d^4) -> (r_u, s_u, r_v, s_v); 0 is the identity pair."""
    k, s2 = divmod(k, d)
    k, r2 = divmod(k, d)
    r1, s1 = divmod(k, d)
    return r1, s1, r2, s2


@dataclass(frozen=True)
class NoiseConfig:
    p2: float
    trajectories: int = 200
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p2 <= 1.0:
            raise ValueError("p2 must lie in [0, 1]")
        if self.trajectories < 1:
            raise ValueError("trajectories must be >= 1")


def _weyl_on_axis(batch: np.ndarray, axis: int, r: np.ndarray, s: np.ndarray, d: int) -> np.ndarray:
    """Apply X^{r_t} Z^{s_t} to `axis` of every trajectory t (leading axis) of batch."""
    shape = [1] * batch.ndim
    shape[0], shape[axis] = len(r), d
    lam = np.exp(2j * np.pi / d)
    batch = batch * (lam ** (np.outer(s, np.arange(d)) % d)).reshape(shape)
    out = batch.copy()
    for shift in range(1, d):
        sel = r == shift
        if sel.any():
            out[sel] = np.roll(batch[sel], shift, axis=axis)
    return out


def apply_error_channel(
    state: StateVector, edge_pairs: Sequence[tuple[int, int]], p2: float, d: int,
    rng: np.random.Generator,
) -> StateVector:
    """Independently per pair: identity w.p. 1-p2, else a uniform non-identity Weyl pair."""
    if d < 2 or p2 == 0:
        return StateVector(state.d, state.n, state.amps.copy())
    psi = state.amps.reshape((1,) + (d,) * state.n)
    for u, v in edge_pairs:
        if rng.random() < p2:
            r1, s1, r2, s2 = decode_pair(int(rng.integers(1, d**4)), d)
            psi = _weyl_on_axis(psi, u + 1, np.array([r1]), np.array([s1]), d)
            psi = _weyl_on_axis(psi, v + 1, np.array([r2]), np.array([s2]), d)
    return StateVector(state.d, state.n, psi.reshape(-1))


def trajectory_draws(seed: int, t: int, layers: int, n_edges: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniforms and Weyl-pair indices for trajectory t; fixed by (seed, t) alone so that
    runs at different p2 share their random numbers."""
    rng = np.random.default_rng([seed, t])
    u = rng.random((layers, n_edges))
    k = rng.integers(1, max(d**4, 2), size=(layers, n_edges))
    return u, k


@dataclass
class NoisyResult:
    mean_ratio: float
    stderr: float
    ratios: np.ndarray


def run_noisy(
    g: ProblemGraph, d: int, params: QaoaParams, spec: MixerSpec | None = None,
    cfg: NoiseConfig = NoiseConfig(0.0), c_star: int | None = None,
) -> NoisyResult:
    """Monte-Carlo mean ratio with the error channel after every cost layer (fixed angles)."""
    c_star = brute_force_maxagree(g).c_star if c_star is None else c_star
    if d == 1:
        r = approx_ratio(float(g.weight_sum), g.n_edges, c_star)
        return NoisyResult(r, 0.0, np.full(cfg.trajectories, r))
    spec = spec or MixerSpec("standard", d)
    n, T, E = g.n_nodes, cfg.trajectories, g.n_edges
    check_capacity(n, d, capacity=10**7 // max(T, 1) * max(T, 1))
    diag = cost_diagonal(g, d).astype(float)
    draws = [trajectory_draws(cfg.seed, t, params.p, E, d) for t in range(T)]
    U = np.stack([dr[0] for dr in draws])  # (T, p, E)
    K = np.stack([dr[1] for dr in draws])
    pairs = g.pairs()
    psi = np.full((T,) + (d,) * n, d ** (-n / 2), dtype=np.complex128)
    for layer, (gamma, beta) in enumerate(zip(params.gammas, params.betas)):
        psi = psi * np.exp(-1j * gamma * diag).reshape((1,) + (d,) * n)
        for e, (a, b) in enumerate(pairs):
            hit = U[:, layer, e] < cfg.p2
            if not hit.any():
                continue
            codes = np.array([decode_pair(int(k), d) for k in K[hit, layer, e]])
            sub = psi[hit]
            sub = _weyl_on_axis(sub, a + 1, codes[:, 0], codes[:, 1], d)
            sub = _weyl_on_axis(sub, b + 1, codes[:, 2], codes[:, 3], d)
            psi[hit] = sub
        um = mixer_unitary(spec, beta)
        flat = psi.reshape(T, -1)
        for q in range(n):
            flat = np.matmul(um, flat.reshape(T * d**q, d, -1)).reshape(T, -1)
        psi = flat.reshape(psi.shape)
    probs = np.abs(psi.reshape(T, -1)) ** 2
    F = probs @ diag
    ratios = (F + E) / (2.0 * c_star)
    se = float(ratios.std(ddof=1) / math.sqrt(T)) if T > 1 else 0.0
    return NoisyResult(float(ratios.mean()), se, ratios)


def random_guess_ratio(g: ProblemGraph, d: int, c_star: int) -> float:
    """Ratio of the uniform superposition over [d]^N: P(equal labels) = 1/d per edge."""
    F = g.weight_sum * (1.0 if d == 1 else 2.0 / d - 1.0)
    return approx_ratio(F, g.n_edges, c_star)


# ---------------------------------------------------------------- thresholds


def find_threshold(p2_grid: Sequence[float], ratios: Sequence[float], r0: float, r_rand: float) -> float:
    """First crossing of (r0 + r_rand)/2, interpolated linearly in log p2."""
    level = 0.5 * (r0 + r_rand)
    p = np.asarray(p2_grid, dtype=float)
    r = np.asarray(ratios, dtype=float)
    order = np.argsort(p)
    p, r = p[order], r[order]
    below = np.flatnonzero(r <= level)
    if below.size == 0:
        raise NoThresholdError(f"ratio never drops to {level:.4f} on the grid")
    i = int(below[0])
    if i == 0:
        raise NoThresholdError("ratio already below the half-way level at the smallest p2")
    t = (r[i - 1] - level) / (r[i - 1] - r[i])
    lp = math.log(p[i - 1]) + t * (math.log(p[i]) - math.log(p[i - 1]))
    return float(math.exp(lp))


def gate_count(N: int, p: int) -> int:
    return p * N * (N - 1) // 2


def fit_kappa(p2s: Sequence[float], gs: Sequence[float]) -> tuple[float, float]:
    """Least squares of log g = log kappa - log p2; returns (kappa, R^2 in log space)."""
    lp, lg = np.log(np.asarray(p2s, dtype=float)), np.log(np.asarray(gs, dtype=float))
    if lp.size == 0:
        raise ValueError("no points to fit")
    log_k = float(np.mean(lg + lp))
    pred = log_k - lp
    ss_res = float(np.sum((lg - pred) ** 2))
    ss_tot = float(np.sum((lg - lg.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return math.exp(log_k), r2


@dataclass
class ThresholdPoint:
    N: int
    p: int
    p2_threshold: float | None
    g_threshold: int
    noise_free_mean: float
    random_mean: float
    curve: list[tuple[float, float, float]]  # (p2, mean ratio, stderr)


@dataclass
class ThresholdResult:
    points: list[ThresholdPoint]
    kappa: float | None
    r2: float | None


def noisy_curve(
    graphs: Sequence[ProblemGraph], reports: Sequence[RunReport], p2_grid: Sequence[float],
    trajectories: int, seed: int, mixer: str = "standard",
) -> list[tuple[float, float, float]]:
    """Dataset-mean noisy ratio per p2 (stderr combines per-instance stderrs)."""
    out = []
    for p2 in p2_grid:
        means, ses = [], []
        for i, (g, rep) in enumerate(zip(graphs, reports)):
            spec = None if rep.best_d == 1 else MixerSpec("standard", rep.best_d)
            res = run_noisy(g, rep.best_d, rep.best_params, spec, NoiseConfig(p2, trajectories, seed + i), rep.c_star)
            means.append(res.mean_ratio)
            ses.append(res.stderr)
        out.append((float(p2), float(np.mean(means)), float(np.sqrt(np.sum(np.square(ses))) / len(ses))))
    return out


def threshold_scan(
    datasets: Mapping[int, Dataset | Sequence[ProblemGraph]], p_depths: Sequence[int] = (1, 2, 3),
    p2_grid: Sequence[float] = DEFAULT_P2_GRID, trajectories: int = 200, seed: int = 0,
    opt_cfg: OptimizerConfig = OptimizerConfig(), cache: WarmStartCache | None = None,
    reports: Mapping[tuple[int, int], Sequence[RunReport]] | None = None,
) -> ThresholdResult:
    """Noise-free optimization per instance, noisy curves at fixed (params, d), thresholds and kappa."""
    points = []
    for N, ds in datasets.items():
        graphs = ds.instances if isinstance(ds, Dataset) else tuple(ds)
        for p in p_depths:
            reps = (reports or {}).get((N, p))
            if reps is None:
                reps = [solve_instance(g, p, opt_cfg, cache=cache) for g in graphs]
            r0 = float(np.mean([r.best_ratio for r in reps]))
            rr = float(np.mean([random_guess_ratio(g, r.best_d, r.c_star) for g, r in zip(graphs, reps)]))
            curve = noisy_curve(graphs, reps, p2_grid, trajectories, seed)
            try:
                p2_th = find_threshold([c[0] for c in curve], [c[1] for c in curve], r0, rr)
            except NoThresholdError:
                p2_th = None
            points.append(ThresholdPoint(N, p, p2_th, gate_count(N, p), r0, rr, curve))
    found = [pt for pt in points if pt.p2_threshold is not None]
    if not found:
        return ThresholdResult(points, None, None)
    kappa, r2 = fit_kappa([pt.p2_threshold for pt in found], [pt.g_threshold for pt in found])
    return ThresholdResult(points, kappa, r2)


def success_probability(p2: float, n_edges: int) -> float:
    return (1.0 - p2) ** n_edges


def scaling_estimate(
    p_cx: float, d: int, kappa: float = 0.84, p: int = 1, decade_rounding: bool = True,
) -> tuple[float, int]:
    """Largest N whose gate count p N(N-1)/2 stays within kappa / p2, with p2 = [CP] p_cx.

    [CP] = 2d - 2. With decade_rounding the order-of-magnitude estimate p2 is rounded to
    the nearest power of ten, which is how the d=8 estimates N ~ 13, 41, 130 arise.
    """
    if not 0 < p_cx < 1:
        raise ValueError("p_cx must lie in (0, 1)")
    p2 = (2 * d - 2) * p_cx
    if decade_rounding:
        p2 = 10.0 ** round(math.log10(p2))
    g = kappa / p2
    N = (1 + math.sqrt(1 + 8 * g / p)) / 2
    return p2, int(math.floor(N + 1e-12))
