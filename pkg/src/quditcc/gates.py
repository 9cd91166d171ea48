"""Matrix-level synthesis of the neutral-atom qudit gates on an extended level space.

Each atom carries qudit levels 0..d-1, one Rydberg level r_l per qudit level and an
optional auxiliary (non-Rydberg) level. Two-atom operators are Kronecker products with
atom 1 in the most significant slot. Blockade is perfect: a drive on one atom acts as
the identity while the other atom sits in any Rydberg level.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import GateConstraintError
from .simulator import MixerSpec, mixer_unitary

PHASE_TOL = 1e-10


@dataclass(frozen=True)
class ExtendedSpace:
    d: int
    aux: bool = False

    @property
    def dim(self) -> int:
        return 2 * self.d + (1 if self.aux else 0)

    def qudit(self, l: int) -> int:
        return l

    def rydberg(self, l: int) -> int:
        return self.d + l

    @property
    def aux_level(self) -> int:
        if not self.aux:
            raise ValueError("space has no auxiliary level")
        return 2 * self.d

    def rydberg_projector(self) -> np.ndarray:
        p = np.zeros((self.dim, self.dim))
        for l in range(self.d):
            p[self.rydberg(l), self.rydberg(l)] = 1.0
        return p

    def qudit_indices_two_atom(self) -> np.ndarray:
        D = self.dim
        return np.array([a * D + b for a in range(self.d) for b in range(self.d)])


@dataclass
class GateMatrix:
    label: str
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


# ---------------------------------------------------------------- single-atom pulses


def u2level(theta: float, phi: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * np.exp(1j * phi) * s], [-1j * np.exp(-1j * phi) * s, c]])


def theta_phi_3level(omega0: complex, omega1: complex) -> tuple[float, float]:
    om2 = abs(omega0) ** 2 + abs(omega1) ** 2
    if om2 == 0:
        raise ValueError("zero drive")
    cos_h = (abs(omega0) ** 2 - abs(omega1) ** 2) / om2
    sin_h_phase = 2 * omega0 * np.conj(omega1) / om2
    return 2 * np.arctan2(abs(sin_h_phase), cos_h), float(np.angle(sin_h_phase))


def u3level(omega0: complex, omega1: complex) -> np.ndarray:
    """Resonant Lambda-scheme unitary in the {l, l', r} basis after a pulse of length pi/Omega."""
    om2 = abs(omega0) ** 2 + abs(omega1) ** 2
    if om2 == 0:
        raise ValueError("zero drive")
    c = (abs(omega0) ** 2 - abs(omega1) ** 2) / om2
    se = 2 * omega0 * np.conj(omega1) / om2
    return -np.array([[c, se, 0], [np.conj(se), -c, 0], [0, 0, 1]], dtype=complex)


def pauli_x() -> np.ndarray:
    return u2level(np.pi, 0.0)


def phase_gate(phi: float) -> np.ndarray:
    return np.diag([np.exp(1j * phi), np.exp(-1j * phi)])


def phase_gate_pulses(phi1: float, phi2: float) -> np.ndarray:
    """Two pi pulses U(pi, phi2) U(pi, phi1); equals P(phi2 - phi1) up to a global phase (-1)."""
    return u2level(np.pi, phi2) @ u2level(np.pi, phi1)


def embed(dim: int, levels: tuple[int, ...], block: np.ndarray) -> np.ndarray:
    """Identity on dim levels with `block` acting on the listed levels (in that order)."""
    out = np.eye(dim, dtype=complex)
    idx = np.array(levels)
    out[np.ix_(idx, idx)] = block
    return out


def on_atom(op: np.ndarray, atom: int) -> np.ndarray:
    eye = np.eye(op.shape[0])
    return np.kron(op, eye) if atom == 1 else np.kron(eye, op)


def blockaded(space: ExtendedSpace, control: int, target_op: np.ndarray) -> np.ndarray:
    """Drive on the target atom, frozen while the control atom occupies a Rydberg level."""
    pr = space.rydberg_projector()
    free = np.eye(space.dim) - pr
    if control == 2:
        return np.kron(np.eye(space.dim), pr) + np.kron(target_op, free)
    return np.kron(pr, np.eye(space.dim)) + np.kron(free, target_op)


# ---------------------------------------------------------------- CP constructions


def calU(space: ExtendedSpace, target: int, level: int, gamma: float) -> np.ndarray:
    """X on the control (l <-> r_l), blockaded P(gamma/2) pulse pair on the target, X again."""
    control = 3 - target
    D, l, r = space.dim, space.qudit(level), space.rydberg(level)
    x_c = on_atom(embed(D, (l, r), pauli_x()), control)
    p_t = embed(D, (l, r), phase_gate_pulses(0.0, gamma / 2))
    return x_c @ blockaded(space, control, p_t) @ x_c


def cp_symmetric_full(d: int, gamma: float) -> np.ndarray:
    space = ExtendedSpace(d)
    ops = [calU(space, 1, l, gamma) @ calU(space, 2, l, gamma) for l in range(d)]
    return reduce(np.matmul, ops)


def cx_blockade(space: ExtendedSpace, lt: int, lt2: int, lc: int, target: int = 1) -> np.ndarray:
    """Swap target levels lt, lt2 (Lambda scheme via r_lt) unless the control is in lc."""
    if abs(lt - lt2) > 2:
        raise GateConstraintError(f"target levels {lt},{lt2} further apart than 2")
    if lt == lt2:
        raise GateConstraintError("target levels must differ")
    control = 3 - target
    D = space.dim
    x_c = on_atom(embed(D, (space.qudit(lc), space.rydberg(lc)), pauli_x()), control)
    swap_t = embed(D, (space.qudit(lt), space.qudit(lt2), space.rydberg(lt)), u3level(1.0, 1.0))
    return x_c @ blockaded(space, control, swap_t) @ x_c


def cx_ladder(space: ExtendedSpace, target: int = 1) -> np.ndarray:
    """prod_{l=0}^{d-2} CX_{l,l+1|not l}: the l = d-2 step acts first and sends |l l> to |0 l>."""
    ops = [cx_blockade(space, l, l + 1, l, target) for l in range(space.d - 1)]
    return reduce(np.matmul, ops)


def cp_chain_full(d: int, gamma: float, target: int = 1) -> np.ndarray:
    """Ladder, phase on target level 0 through the auxiliary level, reversed ladder.

    The phase argument is -gamma so that equal labels pick up e^{-i gamma}, the same
    gate as the symmetric construction.
    """
    space = ExtendedSpace(d, aux=True)
    ladder = cx_ladder(space, target)
    ph = on_atom(embed(space.dim, (space.qudit(0), space.aux_level), phase_gate(-gamma)), target)
    return ladder.conj().T @ ph @ ladder


def qudit_block(full: np.ndarray, space: ExtendedSpace) -> np.ndarray:
    idx = space.qudit_indices_two_atom()
    return full[np.ix_(idx, idx)]


def leakage(full: np.ndarray, space: ExtendedSpace) -> float:
    """Norm of the part of the gate that maps the qudit subspace out of itself."""
    idx = space.qudit_indices_two_atom()
    rest = np.setdiff1d(np.arange(full.shape[0]), idx)
    return float(np.linalg.norm(full[np.ix_(rest, idx)], 2)) if rest.size else 0.0


def cp_target(d: int, gamma: float) -> np.ndarray:
    """diag(e^{-i gamma} on equal labels, 1 otherwise)."""
    a = np.arange(d)
    eq = (a[:, None] == a[None, :]).reshape(-1)
    return np.diag(np.where(eq, np.exp(-1j * gamma), 1.0))


def cp_symmetric(d: int, gamma: float) -> GateMatrix:
    if d < 2:
        raise ValueError("d must be >= 2")
    return GateMatrix(f"CP_sym(d={d})", qudit_block(cp_symmetric_full(d, gamma), ExtendedSpace(d)))


def cp_chain(d: int, gamma: float, target: int = 1) -> GateMatrix:
    if d < 2:
        raise ValueError("d must be >= 2")
    return GateMatrix(f"CP_chain(d={d})", qudit_block(cp_chain_full(d, gamma, target), ExtendedSpace(d, True)))


# ---------------------------------------------------------------- generalized Clifford gates


def qft_d(d: int) -> np.ndarray:
    a = np.arange(d)
    return np.exp(2j * np.pi * np.outer(a, a) / d) / np.sqrt(d)


def cz_d(d: int) -> np.ndarray:
    a = np.arange(d)
    return np.diag(np.exp(2j * np.pi * np.outer(a, a).reshape(-1) / d))


def cx_d(d: int, target: int = 2) -> np.ndarray:
    """QFT on the target, CZ, QFT on the target: |a>|b> -> target <- (-a-b) mod d."""
    f = on_atom(qft_d(d), target)
    return f @ cz_d(d) @ f


def swap_permutation(d: int) -> np.ndarray:
    out = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            out[b * d + a, a * d + b] = 1.0
    return out


# Slot order of the three CX_d factors (outer, middle) found by exhaustive search over
# {1,2}^2 for d <= 7; see find_swap_ordering.
SWAP_ORDER = (1, 2)


def find_swap_ordering(d: int) -> list[tuple[int, int]]:
    """All (outer, middle) target-slot choices for which CX CX CX equals SWAP."""
    return [
        (o, m) for o in (1, 2) for m in (1, 2)
        if np.allclose(cx_d(d, o) @ cx_d(d, m) @ cx_d(d, o), swap_permutation(d), atol=1e-10)
    ]


def swap_d(d: int) -> np.ndarray:
    outer, middle = SWAP_ORDER
    return cx_d(d, outer) @ cx_d(d, middle) @ cx_d(d, outer)


# ---------------------------------------------------------------- preparation and mixers


def init_angles(d: int) -> list[float]:
    """theta_l with cos(theta_l/2) = 1/sqrt(d-(l-1)), l = 1..d-1."""
    return [2 * np.arccos(1 / np.sqrt(d - (l - 1))) for l in range(1, d)]


def init_sequence(d: int) -> np.ndarray:
    """[prod_l U^dag_{l-1,l}(theta_l, phi)]^dag applied to |0> gives the uniform superposition.

    phi = -pi/2 under the u2level sign convention; +pi/2 would leave alternating signs.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    ops = [embed(d, (l - 1, l), u2level(t, -np.pi / 2)).conj().T for l, t in zip(range(1, d), init_angles(d))]
    prod = reduce(np.matmul, ops, np.eye(d, dtype=complex))
    return prod.conj().T


def hardware_mixer_unitary(d: int, r: int, beta: float) -> np.ndarray:
    if r not in (1, 2):
        raise ValueError("hardware mixers exist for r in (1, 2)")
    return mixer_unitary(MixerSpec(f"hardware_r{r}", d), beta)


# ---------------------------------------------------------------- comparisons


def phase_aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    """max |a - e^{i phi} b| minimized over a single global phase (least-squares phase)."""
    ov = np.vdot(b, a)
    ph = ov / abs(ov) if abs(ov) > 1e-300 else 1.0
    return float(np.max(np.abs(a - ph * b)))


def unitarity_error(u: np.ndarray) -> float:
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def verify_all(ds=range(2, 8), gammas=None, seed: int = 0) -> list[dict]:
    """Rows (gate, d, max deviation, passed) covering every claimed gate identity."""
    rng = np.random.default_rng(seed)
    gammas = rng.uniform(0, 2 * np.pi, 8) if gammas is None else gammas
    rows = []

    def add(name, d, dev):
        rows.append({"gate": name, "d": d, "max_deviation": float(dev), "passed": bool(dev <= PHASE_TOL)})

    for d in ds:
        dev_sym = dev_chain = dev_leak = dev_exch = 0.0
        for g in gammas:
            full_s, full_c = cp_symmetric_full(d, g), cp_chain_full(d, g)
            tgt = cp_target(d, g)
            dev_sym = max(dev_sym, phase_aligned_distance(qudit_block(full_s, ExtendedSpace(d)), tgt))
            dev_chain = max(dev_chain, phase_aligned_distance(qudit_block(full_c, ExtendedSpace(d, True)), tgt))
            dev_leak = max(dev_leak, leakage(full_s, ExtendedSpace(d)), leakage(full_c, ExtendedSpace(d, True)))
            dev_exch = max(dev_exch, phase_aligned_distance(cp_chain(d, g, 2).matrix, cp_chain(d, g, 1).matrix))
        add("cp_symmetric", d, dev_sym)
        add("cp_chain", d, dev_chain)
        add("cp_rydberg_leakage", d, dev_leak)
        add("cp_chain_exchange", d, dev_exch)
        add("swap_d", d, np.max(np.abs(swap_d(d) - swap_permutation(d))))
        amps = init_sequence(d)[:, 0]
        add("init_sequence", d, np.max(np.abs(amps - 1 / np.sqrt(d))))
    return rows
