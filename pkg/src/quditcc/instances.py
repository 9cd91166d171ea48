"""Correlation-clustering instances, datasets and the exhaustive MAXAGREE oracle."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, InvalidAssignmentError

MAX_ORACLE_NODES = 10


@dataclass(frozen=True)
class ProblemGraph:
    """Undirected graph with +1 ('+', similar) / -1 ('-', dissimilar) edge labels."""

    n_nodes: int
    edges: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be positive")
        norm = []
        for u, v, w in self.edges:
            u, v, w = int(u), int(v), int(w)
            if u > v:
                u, v = v, u
            if u == v or u < 0 or v >= self.n_nodes:
                raise ValueError(f"bad edge ({u},{v})")
            if w not in (-1, 1):
                raise ValueError(f"weight must be +-1, got {w}")
            norm.append((u, v, w))
        norm.sort()
        if len({(u, v) for u, v, _ in norm}) != len(norm):
            raise ValueError("duplicate edge")
        object.__setattr__(self, "edges", tuple(norm))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def weight_sum(self) -> int:
        return sum(w for _, _, w in self.edges)

    def pairs(self) -> list[tuple[int, int]]:
        return [(u, v) for u, v, _ in self.edges]

    def to_dict(self) -> dict:
        return {"n": self.n_nodes, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, data: dict) -> "ProblemGraph":
        return cls(int(data["n"]), tuple(tuple(e) for e in data["edges"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class Dataset:
    kind: str
    seed: int
    instances: tuple[ProblemGraph, ...]
    plus_probabilities: tuple[float, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.instances)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "plus_probabilities": list(self.plus_probabilities),
            "instances": [g.to_dict() for g in self.instances],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "Dataset":
        return cls(
            data["kind"],
            int(data["seed"]),
            tuple(ProblemGraph.from_dict(g) for g in data["instances"]),
            tuple(float(p) for p in data.get("plus_probabilities", ())),
        )

    @classmethod
    def from_json(cls, text: str) -> "Dataset":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class OracleResult:
    c_star: int
    optimal_assignments: tuple[tuple[int, ...], ...]
    optimal_cluster_counts: frozenset[int]


def _check_labels(g: ProblemGraph, labels: Sequence[int], d: int | None) -> np.ndarray:
    a = np.asarray(labels, dtype=np.int64)
    if a.shape != (g.n_nodes,):
        raise InvalidAssignmentError(f"expected {g.n_nodes} labels, got shape {a.shape}")
    if np.any(a < 0) or (d is not None and np.any(a >= d)):
        raise InvalidAssignmentError(f"labels {a.tolist()} out of range for d={d}")
    return a


def agreements(g: ProblemGraph, labels: Sequence[int], d: int | None = None) -> int:
    """'+' edges inside clusters plus '-' edges across clusters."""
    a = _check_labels(g, labels, d)
    return sum(1 for u, v, w in g.edges if (a[u] == a[v]) == (w == 1))


def disagreements(g: ProblemGraph, labels: Sequence[int], d: int | None = None) -> int:
    return g.n_edges - agreements(g, labels, d)


@lru_cache(maxsize=None)
def restricted_growth_strings(n: int, max_blocks: int) -> np.ndarray:
    """All set partitions of n items with at most max_blocks blocks, as canonical label arrays.

    Row r is the lexicographically smallest labeling of its partition (label of the
    first occurrence of each block increases 0,1,2,...).
    """
    rows: list[list[int]] = [[0]] if n > 0 else [[]]
    for _ in range(1, n):
        nxt = []
        for r in rows:
            top = max(r) + 1
            for lab in range(min(top + 1, max_blocks)):
                nxt.append(r + [lab])
        rows = nxt
    out = np.array(rows, dtype=np.int8).reshape(len(rows), n)
    out.setflags(write=False)
    return out


def brute_force_maxagree(g: ProblemGraph, d_max: int | None = None) -> OracleResult:
    """Exhaustive MAXAGREE over all labelings with at most d_max distinct labels.

    Agreement counts depend only on the induced partition, so the search runs over
    canonical partitions; listed optima are those canonical labelings.
    """
    n = g.n_nodes
    if n > MAX_ORACLE_NODES:
        raise CapacityError(f"oracle supports N <= {MAX_ORACLE_NODES}, got {n}")
    d_max = n if d_max is None else int(d_max)
    if d_max < 1:
        raise ValueError("d_max must be >= 1")
    rgs = restricted_growth_strings(n, min(d_max, n))
    score = np.zeros(len(rgs), dtype=np.int64)
    for u, v, w in g.edges:
        same = rgs[:, u] == rgs[:, v]
        score += same if w == 1 else ~same
    best = int(score.max()) if g.n_edges else 0
    winners = rgs[score == best]
    counts = frozenset(int(k) for k in np.unique(winners.max(axis=1) + 1))
    return OracleResult(best, tuple(tuple(int(x) for x in r) for r in winners), counts)


def all_negative(n: int) -> ProblemGraph:
    if n < 2:
        raise ValueError("need N >= 2")
    return ProblemGraph(n, tuple((u, v, -1) for u in range(n) for v in range(u + 1, n)))


def all_positive(n: int) -> ProblemGraph:
    if n < 2:
        raise ValueError("need N >= 2")
    return ProblemGraph(n, tuple((u, v, 1) for u in range(n) for v in range(u + 1, n)))


def plus_probability_grid(count: int) -> list[float]:
    if count == 1:
        return [0.5]
    return [i / (count - 1) for i in range(count)]


def _random_graph(rng: np.random.Generator, n: int, kind: str, p_plus: float) -> ProblemGraph:
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    while True:
        if kind == "complete":
            keep = pairs
        else:
            mask = rng.random(len(pairs)) < 0.5
            keep = [e for e, m in zip(pairs, mask) if m]
        if keep:
            break
    signs = np.where(rng.random(len(keep)) < p_plus, 1, -1)
    return ProblemGraph(n, tuple((u, v, int(s)) for (u, v), s in zip(keep, signs)))


def generate_dataset(kind: str, n: int, count: int = 50, seed: int = 0) -> Dataset:
    """Seeded dataset; instance i draws '+' edges with probability i/(count-1)."""
    if kind not in ("complete", "erdos_renyi"):
        raise ValueError(f"unknown dataset kind {kind!r}")
    if count < 1 or n < 2:
        raise ValueError("need count >= 1 and N >= 2")
    rng = np.random.default_rng(seed)
    probs = plus_probability_grid(count)
    graphs = tuple(_random_graph(rng, n, kind, p) for p in probs)
    return Dataset(kind, int(seed), graphs, tuple(probs))


def graph_from_edges(n: int, edges: Iterable[tuple[int, int, int]]) -> ProblemGraph:
    return ProblemGraph(n, tuple(edges))
