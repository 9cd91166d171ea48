"""The three p=1 edge environments of 3-regular graphs and their weightings."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ..instances import ProblemGraph, brute_force_maxagree


@dataclass(frozen=True)
class SubgraphStructure:
    """Five edges; edge 0 is the central edge (nodes 0, 1)."""

    id: str
    n_nodes: int
    edges: tuple[tuple[int, int], ...]


# g1: tree, g2: central edge in a triangle (apex 2), g3: crossed square
STRUCTURES = {
    "g1": SubgraphStructure("g1", 6, ((0, 1), (0, 2), (0, 3), (1, 4), (1, 5))),
    "g2": SubgraphStructure("g2", 5, ((0, 1), (0, 2), (1, 2), (0, 3), (1, 4))),
    "g3": SubgraphStructure("g3", 4, ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3))),
}


@lru_cache(maxsize=None)
def automorphisms(sid: str) -> tuple[tuple[int, ...], ...]:
    """Edge permutations induced by node permutations that map the central edge to itself.

    Entry k of a permutation is the index of the image of edge k.
    """
    st = STRUCTURES[sid]
    es = [frozenset(e) for e in st.edges]
    out = []
    for perm in itertools.permutations(range(st.n_nodes)):
        img = [frozenset((perm[a], perm[b])) for a, b in st.edges]
        if set(img) == set(es) and img[0] == es[0]:
            out.append(tuple(es.index(x) for x in img))
    return tuple(sorted(set(out)))


def canonical_weights(sid: str, weights: tuple[int, ...]) -> tuple[int, ...]:
    """Smallest weight tuple over the structure's symmetry group."""
    best = None
    for perm in automorphisms(sid):
        moved = [0] * 5
        for k, img in enumerate(perm):
            moved[img] = weights[k]
        t = tuple(moved)
        if best is None or t < best:
            best = t
    return best


@dataclass(frozen=True, order=True)
class WeightedSubgraph:
    structure: str
    weights: tuple[int, ...]

    def canonical(self) -> "WeightedSubgraph":
        return WeightedSubgraph(self.structure, canonical_weights(self.structure, self.weights))

    def graph(self) -> ProblemGraph:
        st = STRUCTURES[self.structure]
        return ProblemGraph(st.n_nodes, tuple((u, v, w) for (u, v), w in zip(st.edges, self.weights)))

    @property
    def central_weight(self) -> int:
        return self.weights[0]

    @property
    def key(self) -> str:
        return self.structure + ":" + "".join("+" if w > 0 else "-" for w in self.weights)


def raw_subgraphs() -> list[WeightedSubgraph]:
    return [WeightedSubgraph(sid, w) for sid in STRUCTURES for w in itertools.product((1, -1), repeat=5)]


@lru_cache(maxsize=None)
def enumerate_subgraphs() -> tuple[WeightedSubgraph, ...]:
    """Deduplicated catalogue S = g1 u g2 u g3 in canonical form."""
    seen = []
    for raw in raw_subgraphs():
        c = raw.canonical()
        if c not in seen:
            seen.append(c)
    return tuple(seen)


@lru_cache(maxsize=None)
def c_lambda(lam: WeightedSubgraph) -> Fraction:
    """Best achievable agreement fraction on the isolated subgraph."""
    g = lam.graph()
    return Fraction(brute_force_maxagree(g, g.n_nodes).c_star, 5)


# ---------------------------------------------------------------- decomposing 3-regular graphs


def random_regular_graph(n: int, rng: np.random.Generator, degree: int = 3) -> list[tuple[int, int]]:
    """Configuration-model sample, retried until simple."""
    if n * degree % 2:
        raise ValueError("n * degree must be even")
    while True:
        stubs = np.repeat(np.arange(n), degree)
        rng.shuffle(stubs)
        pairs = stubs.reshape(-1, 2)
        edges = {tuple(sorted(map(int, p))) for p in pairs}
        if len(edges) == len(pairs) and all(a != b for a, b in edges):
            return sorted(edges)


def edge_environment(edges: list[tuple[int, int]], weights: dict, u: int, v: int) -> WeightedSubgraph:
    """Light-cone subgraph of edge (u, v): the five edges touching u or v, canonicalized."""
    nbr: dict[int, set[int]] = {}
    for a, b in edges:
        nbr.setdefault(a, set()).add(b)
        nbr.setdefault(b, set()).add(a)
    nu, nv = sorted(nbr[u] - {v}), sorted(nbr[v] - {u})
    if len(nu) != 2 or len(nv) != 2:
        raise ValueError("graph is not 3-regular")
    common = sorted(set(nu) & set(nv))

    def w(a, b):
        return weights[(min(a, b), max(a, b))]

    if len(common) == 0:
        sid = "g1"
        mapping = {u: 0, v: 1, nu[0]: 2, nu[1]: 3, nv[0]: 4, nv[1]: 5}
    elif len(common) == 1:
        sid = "g2"
        t = common[0]
        mapping = {u: 0, v: 1, t: 2, [x for x in nu if x != t][0]: 3, [x for x in nv if x != t][0]: 4}
    else:
        sid = "g3"
        mapping = {u: 0, v: 1, common[0]: 2, common[1]: 3}
    inv = {i: n for n, i in mapping.items()}
    ws = tuple(w(inv[a], inv[b]) for a, b in STRUCTURES[sid].edges)
    return WeightedSubgraph(sid, ws).canonical()


def decompose(edges: list[tuple[int, int]], weights: dict) -> dict[WeightedSubgraph, int]:
    """N_lambda(G): how many edges of G have environment lambda."""
    out: dict[WeightedSubgraph, int] = {}
    for u, v in edges:
        lam = edge_environment(edges, weights, u, v)
        out[lam] = out.get(lam, 0) + 1
    return out
