"""Two-gate cost accounting for qudit and binary encodings, and nearest-neighbour swap schedules."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import UnsupportedCaseError

TOPOLOGIES = ("1D", "2D")

# CP cost in two-gate units for the binary (q-qubit) encoding with d = 3, 5, 6, 7, taken
# from an external compilation table; stored for reference only.
REFERENCE_BINARY_CP = {3: 70, 5: 206, 6: 142, 7: 78}

# C^{q-1}(U) costs in CX units; 2D values include the SWAP_2 routing between legs.
_MULTICONTROL = {"1D": {2: 1, 3: 11, 4: 49}, "2D": {2: 1, 3: 5, 4: 19}}
# 2D e-dit swap and intra-e-dit swap units: 3 x (weighted average over neighbour leg counts)
_EDIT_SWAP_2D = {2: Fraction(10, 3), 3: Fraction(8), 4: Fraction(28, 3)}
_INTRA_2D = {2: Fraction(4), 3: Fraction(6), 4: Fraction(38, 3)}


def cp_cost(d: int, form: str = "chain", qubit_reduction: bool = False) -> int:
    """Two-gate cost of CP: 2d pulses symmetric, 2d-2 via the CX ladder; d=2 may drop to d."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if form == "symmetric":
        return d if (qubit_reduction and d == 2) else 2 * d
    if form == "chain":
        return 2 * d - 2
    raise ValueError(f"unknown CP form {form!r}")


def swap_d_cost(d: int) -> int:
    if d < 2:
        raise ValueError("d must be >= 2")
    return 3 * (d - 1)


def qubits_per_edit(d: int) -> int:
    if d < 2:
        raise ValueError("binary encoding requires d >= 2")
    return max(1, math.ceil(math.log2(d)))


@dataclass(frozen=True)
class Encoding:
    kind: str
    d: int

    def __post_init__(self):
        if self.kind not in ("qudit", "binary"):
            raise ValueError(f"unknown encoding {self.kind!r}")
        if self.d < 2:
            raise ValueError("d must be >= 2")

    @property
    def q(self) -> int:
        return qubits_per_edit(self.d)


def binary_unit_costs(q: int, topology: str) -> tuple[Fraction, Fraction, Fraction]:
    """(e-dit SWAP, intra-e-dit SWAPs per CP, multi-controlled gate) in CX units."""
    if q not in (2, 3, 4):
        raise UnsupportedCaseError(f"binary costs available for q in (2,3,4), got {q}")
    if topology == "1D":
        return Fraction(3 * q * q), Fraction(3 * 3 * q * (q - 1)), Fraction(_MULTICONTROL["1D"][q])
    if topology == "2D":
        return 3 * _EDIT_SWAP_2D[q], 3 * _INTRA_2D[q], Fraction(_MULTICONTROL["2D"][q])
    raise UnsupportedCaseError(f"unknown topology {topology!r}")


@dataclass(frozen=True)
class CostBreakdown:
    N: int
    d: int
    encoding: str
    topology: str
    cp_unit: Fraction
    swap_unit: Fraction
    n_edges: int
    n_inter_swaps: int
    intra_swap_unit: Fraction | None = None
    multicontrol_unit: Fraction | None = None
    per_edge_coefficient: Fraction = Fraction(0)
    per_n_coefficient: Fraction = Fraction(0)
    per_n_sign: int = -1
    c_tot: Fraction = Fraction(0)
    notes: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        def num(x):
            if x is None:
                return None
            return int(x) if Fraction(x).denominator == 1 else str(Fraction(x))

        return {
            "N": self.N, "d": self.d, "encoding": self.encoding, "topology": self.topology,
            "cp_unit": num(self.cp_unit), "swap_unit": num(self.swap_unit),
            "n_edges": self.n_edges, "n_inter_swaps": self.n_inter_swaps,
            "intra_swap_unit": num(self.intra_swap_unit), "multicontrol_unit": num(self.multicontrol_unit),
            "c_tot_coefficients": [num(self.per_edge_coefficient), num(self.per_n_coefficient), self.per_n_sign],
            "c_tot": num(self.c_tot), "notes": list(self.notes),
        }


def total_cost(N: int, d: int, encoding: str = "qudit", topology: str = "1D") -> CostBreakdown:
    """C_tot = n_inter * [SWAP] + |E| * [CP] for the complete graph on N nodes.

    Per-edge coefficients follow the tabulated presentation: in 1D all (N-1)(N-2)/2
    inter-swaps are folded into |E| x ([CP]+[SWAP]) - (N-1) x [SWAP]; in 2D the
    per-edge coefficient is [CP] and the swap term is reported from our 2D schedule.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    if topology not in TOPOLOGIES:
        raise UnsupportedCaseError(f"unknown topology {topology!r}")
    n_edges = N * (N - 1) // 2
    if encoding == "qudit":
        cp, swap = Fraction(cp_cost(d, "chain")), Fraction(swap_d_cost(d))
        intra = mc = None
    elif encoding == "binary":
        q = math.log2(d)
        if q != int(q) or int(q) not in (2, 3, 4):
            raise UnsupportedCaseError(f"binary encoding needs d in (4, 8, 16), got {d}")
        q = int(q)
        swap, intra, mc = binary_unit_costs(q, topology)
        cp = intra + 2 * q + mc
    else:
        raise UnsupportedCaseError(f"unknown encoding {encoding!r}")
    notes = []
    if topology == "1D":
        n_inter = (N - 1) * (N - 2) // 2
        per_edge, per_n, sign = cp + swap, swap, -1
    else:
        n_inter = swap_schedule_2d(N).total_swaps
        per_edge, per_n, sign = cp, swap, +1
        notes.append("2D inter-swap count from the snake schedule on a triangular lattice")
    c_tot = n_inter * swap + n_edges * cp
    return CostBreakdown(N, d, encoding, topology, cp, swap, n_edges, n_inter, intra, mc,
                         per_edge, per_n, sign, c_tot, tuple(notes))


def qudit_1d_closed_form(N: int, d: int) -> Fraction:
    return Fraction((5 * N - 6) * (N - 1) * (d - 1), 2)


# ---------------------------------------------------------------- swap schedules


@dataclass
class SwapSchedule:
    n: int
    layers: list[list[tuple[int, int]]]
    total_swaps: int
    met_pairs: set[frozenset]

    @property
    def n_layers(self) -> int:
        return len(self.layers)


def replay(n: int, layers: list[list[tuple[int, int]]], adjacency: list[tuple[int, int]]) -> set[frozenset]:
    """Execute position-swap layers and collect every pair of items that was ever adjacent."""
    at = list(range(n))  # at[position] = item
    met = {frozenset((at[a], at[b])) for a, b in adjacency}
    for layer in layers:
        used = set()
        for a, b in layer:
            if a in used or b in used:
                raise ValueError("swaps in a layer must be vertex-disjoint")
            used.update((a, b))
            at[a], at[b] = at[b], at[a]
        met |= {frozenset((at[a], at[b])) for a, b in adjacency}
    return met


def _alternating_layer(n: int, parity: int) -> list[tuple[int, int]]:
    return [(i, i + 1) for i in range(parity, n - 1, 2)]


def swap_schedule_1d(n: int) -> SwapSchedule:
    """n-2 alternating layers (pairs (0,1),(2,3),... then (1,2),(3,4),...) on a line."""
    if n < 2:
        raise ValueError("n must be >= 2")
    layers = [_alternating_layer(n, k % 2) for k in range(n - 2)]
    chain = [(i, i + 1) for i in range(n - 1)]
    met = replay(n, layers, chain)
    return SwapSchedule(n, layers, sum(len(l) for l in layers), met)


def swap_lower_bounds(n: int) -> tuple[int, int]:
    """Each swap creates at most two new adjacencies; each layer at most ~n new ones."""
    if n < 2:
        raise ValueError("n must be >= 2")
    pairs = n * (n - 1) // 2
    return -(-(pairs - (n - 1)) // 2), -(-n // 2) - 1


def triangular_lattice(n: int) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Positions 0..n-1 on a width-w triangular lattice traversed in snake order.

    Returns (snake-path edges, all lattice nearest-neighbour edges) in position indices.
    """
    w = max(1, math.ceil(math.sqrt(n)))
    coords = []
    for pos in range(n):
        r, c = divmod(pos, w)
        coords.append((r, c if r % 2 == 0 else w - 1 - c))
    index = {rc: i for i, rc in enumerate(coords)}
    nbrs = [(0, 1), (1, 0), (1, -1)]
    edges = set()
    for (r, c), i in index.items():
        for dr, dc in nbrs:
            j = index.get((r + dr, c + dc))
            if j is not None:
                edges.add((min(i, j), max(i, j)))
    path = [(i, i + 1) for i in range(n - 1)]
    assert all(e in edges for e in path)
    return path, sorted(edges)


def swap_schedule_2d(n: int) -> SwapSchedule:
    """Alternating layers along a snake path, stopped once all pairs met on the 2D lattice."""
    if n < 2:
        raise ValueError("n must be >= 2")
    _, adj = triangular_lattice(n)
    target = n * (n - 1) // 2
    layers: list[list[tuple[int, int]]] = []
    met = replay(n, layers, adj)
    while len(met) < target:
        layers.append(_alternating_layer(n, len(layers) % 2))
        met = replay(n, layers, adj)
    return SwapSchedule(n, layers, sum(len(l) for l in layers), met)


def table_rows(ds: tuple[int, ...] = (4, 8, 16)) -> list[dict]:
    """Per-edge coefficients for every encoding/topology pair, one row per d."""
    rows = []
    for d in ds:
        row = {"d": d, "q": qubits_per_edit(d)}
        for enc in ("qudit", "binary"):
            for topo in TOPOLOGIES:
                cb = total_cost(8, d, enc, topo)
                row[f"{enc}_{topo}_per_edge"] = cb.per_edge_coefficient
                row[f"{enc}_{topo}_per_n"] = cb.per_n_coefficient
        rows.append(row)
    return rows
