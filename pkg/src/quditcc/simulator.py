"""Dense qudit statevector simulation of the clustering QAOA circuit.

Basis states are ordered lexicographically over [d]^n with qudit 0 most significant.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import (
    CapacityError,
    DimensionMismatchError,
    MixerSpecError,
    UndefinedRatioError,
)
from .instances import ProblemGraph

CAPACITY = 10**7
TWO_PI = 2.0 * np.pi


def check_capacity(n: int, d: int, capacity: int = CAPACITY) -> None:
    if d < 1 or n < 0:
        raise ValueError("need d >= 1 and n >= 0")
    if d**n > capacity:
        raise CapacityError(f"{d}^{n} amplitudes exceed capacity {capacity}")


@dataclass
class StateVector:
    d: int
    n: int
    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=np.complex128).reshape(-1)
        if self.amps.size != self.d**self.n:
            raise DimensionMismatchError(f"{self.amps.size} amplitudes for d={self.d}, n={self.n}")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def debug_dump(self, tol: float = 0.0) -> list[tuple[int, float, float]]:
        return [(int(i), float(a.real), float(a.imag)) for i, a in enumerate(self.amps) if abs(a) > tol]


@dataclass(frozen=True)
class MixerSpec:
    """Single-qudit mixer: 'standard' ring coupling up to distance r, or open-chain hardware variants."""

    variant: str
    d: int
    r: int = 1

    def __post_init__(self):
        if self.variant not in ("standard", "hardware_r1", "hardware_r2"):
            raise MixerSpecError(f"unknown mixer variant {self.variant!r}")
        if self.d < 1:
            raise MixerSpecError("d must be >= 1")
        if self.variant == "standard" and self.d >= 2 and not 1 <= self.r <= self.d - 1:
            raise MixerSpecError(f"r={self.r} out of range for d={self.d}")

    @property
    def label(self) -> str:
        return f"standard_r{self.r}" if self.variant == "standard" else self.variant

    @property
    def circulant(self) -> bool:
        return self.variant == "standard"


def parse_mixer(name: str, d: int) -> MixerSpec:
    """'standard', 'standard_r2', 'hardware_r1', 'hardware_r2' -> MixerSpec."""
    if name.startswith("standard"):
        r = int(name.split("_r")[1]) if "_r" in name else 1
        return MixerSpec("standard", d, min(r, max(d - 1, 1)))
    return MixerSpec(name, d)


@dataclass
class QaoaParams:
    gammas: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        self.gammas = np.mod(np.asarray(self.gammas, dtype=float).reshape(-1), TWO_PI)
        self.betas = np.mod(np.asarray(self.betas, dtype=float).reshape(-1), TWO_PI)
        if self.gammas.shape != self.betas.shape:
            raise ValueError("gammas and betas must have equal length")

    @property
    def p(self) -> int:
        return len(self.gammas)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.gammas, self.betas])

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> "QaoaParams":
        x = np.asarray(x, dtype=float)
        p = len(x) // 2
        return cls(x[:p], x[p:])


def shift_matrix(d: int) -> np.ndarray:
    """Cyclic shift |j> -> |j+1 mod d>."""
    return np.roll(np.eye(d), 1, axis=0)


def mixer_matrix(spec: MixerSpec) -> np.ndarray:
    d = spec.d
    h = np.zeros((d, d))
    if d == 1:
        return h
    if spec.variant == "standard":
        sx = shift_matrix(d)
        for i in range(1, spec.r + 1):
            p = np.linalg.matrix_power(sx, i)
            h += p + p.T
    else:
        reach = 1 if spec.variant == "hardware_r1" else 2
        for k in range(1, reach + 1):
            h += np.eye(d, k=k) + np.eye(d, k=-k)
    return h


@lru_cache(maxsize=256)
def _mixer_eigh(spec: MixerSpec) -> tuple[np.ndarray, np.ndarray]:
    h = mixer_matrix(spec)
    if not np.allclose(h, h.conj().T):
        raise AssertionError("mixer matrix is not Hermitian")
    w, v = np.linalg.eigh(h)
    return w, v


def mixer_unitary(spec: MixerSpec, beta: float) -> np.ndarray:
    """exp(-i beta h) from the Hermitian eigendecomposition of h."""
    w, v = _mixer_eigh(spec)
    return (v * np.exp(-1j * beta * w)) @ v.conj().T


def apply_local(amps: np.ndarray, u: np.ndarray, d: int, n: int) -> np.ndarray:
    """Apply the same d x d matrix to every qudit of a flat amplitude array."""
    x = amps
    for q in range(n - 1):
        x = np.matmul(u, x.reshape(d**q, d, -1)).reshape(-1)
    if n:
        x = (x.reshape(-1, d) @ u.T).reshape(-1)  # one large gemm for the last axis
    return x


def apply_on_qudit(amps: np.ndarray, u: np.ndarray, d: int, n: int, q: int) -> np.ndarray:
    return np.matmul(u, amps.reshape(d**q, d, -1)).reshape(-1)


def uniform_state(n: int, d: int) -> StateVector:
    check_capacity(n, d)
    return StateVector(d, n, np.full(d**n, d ** (-n / 2), dtype=np.complex128))


def _equality_tensor(d: int, n: int, u: int, v: int) -> np.ndarray:
    shape = [1] * n
    shape[u], shape[v] = d, d
    return np.eye(d, dtype=bool).reshape(shape)


def cost_diagonal(g: ProblemGraph, d: int) -> np.ndarray:
    """Integer H_obj eigenvalue per basis state: sum_e w_e (+1 same label / -1 otherwise)."""
    n = g.n_nodes
    check_capacity(n, d)
    out = np.full((d,) * n, g.weight_sum if d == 1 else 0, dtype=np.int64)
    if d == 1:
        return out.reshape(-1)
    out[...] = -g.weight_sum
    for u, v, w in g.edges:
        out += (2 * w) * _equality_tensor(d, n, u, v)
    return out.reshape(-1)


def apply_cost(state: StateVector, diag: np.ndarray, gamma: float) -> StateVector:
    if np.shape(diag) != state.amps.shape:
        raise DimensionMismatchError("diagonal does not match state dimension")
    return StateVector(state.d, state.n, np.exp(-1j * gamma * np.asarray(diag, dtype=float)) * state.amps)


def apply_mixer(state: StateVector, spec: MixerSpec, beta: float) -> StateVector:
    if spec.d != state.d:
        raise DimensionMismatchError(f"mixer d={spec.d} vs state d={state.d}")
    u = mixer_unitary(spec, beta)
    return StateVector(state.d, state.n, apply_local(state.amps, u, state.d, state.n))


def run_qaoa(g: ProblemGraph, d: int, params: QaoaParams, spec: MixerSpec | None = None) -> StateVector:
    spec = spec or MixerSpec("standard", d)
    state = uniform_state(g.n_nodes, d)
    if d == 1:
        return state
    diag = cost_diagonal(g, d)
    for gamma, beta in zip(params.gammas, params.betas):
        state = apply_mixer(apply_cost(state, diag, gamma), spec, beta)
    return state


def expectation(state: StateVector, diag: np.ndarray) -> float:
    if np.shape(diag) != state.amps.shape:
        raise DimensionMismatchError("diagonal does not match state dimension")
    return float(np.dot(state.probabilities(), diag))


def approx_ratio(F: float, n_edges: int, c_star: int) -> float:
    if c_star <= 0:
        raise UndefinedRatioError("c_star must be positive")
    return (F + n_edges) / (2.0 * c_star)


def index_to_labels(index: int, n: int, d: int) -> tuple[int, ...]:
    out = []
    for _ in range(n):
        index, r = divmod(index, d)
        out.append(r)
    return tuple(reversed(out))


@dataclass
class SampleResult:
    counts: dict[tuple[int, ...], int]
    best_value: float | None
    best_labels: tuple[int, ...] | None


def sample(
    state: StateVector, shots: int, rng: np.random.Generator, diag: np.ndarray | None = None
) -> SampleResult:
    """Multinomial draw over basis states; best objective is reported when a diagonal is given."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = state.probabilities()
    probs = probs / probs.sum()
    hits = rng.multinomial(shots, probs)
    nz = np.flatnonzero(hits)
    counts = {index_to_labels(int(i), state.n, state.d): int(hits[i]) for i in nz}
    if diag is None:
        return SampleResult(counts, None, None)
    best = int(nz[np.argmax(np.asarray(diag)[nz])])
    return SampleResult(counts, float(diag[best]), index_to_labels(best, state.n, state.d))


class QaoaEvaluator:
    """Repeated F_p evaluation for one (graph, d, mixer).

    Ring (circulant) mixers commute with a common cyclic shift of all labels, and so does
    the cost. The state then satisfies psi(z) = psi(z - z_0), so only the slice z_0 = 0
    is stored and the mixer is applied in the Fourier basis, where the constraint
    sum(k) = 0 mod d fixes the frequency of qudit 0. Other mixers use the full state.
    """

    def __init__(self, g: ProblemGraph, d: int, spec: MixerSpec | None = None):
        self.g, self.d = g, d
        self.spec = spec or MixerSpec("standard", d)
        if self.spec.d != d:
            raise DimensionMismatchError("mixer d differs from evaluator d")
        self.n = g.n_nodes
        check_capacity(self.n, d)
        self.n_evals = 0
        if d == 1:
            return
        diag = cost_diagonal(g, d)
        m = g.n_edges
        self.reduced = self.spec.circulant and self.n >= 2
        if self.reduced:
            diag = diag[: d ** (self.n - 1)]
            # eigenvalue of the ring mixer on Fourier mode k
            h = mixer_matrix(self.spec)
            lam = np.real(np.fft.fft(h[:, 0]))
            shape = (d,) * (self.n - 1)
            ks = np.indices(shape).reshape(self.n - 1, -1)
            k0 = (-ks.sum(axis=0)) % d
            self._spectrum = lam[k0] + lam[ks].sum(axis=0)
            # exp(-i beta spectrum) splits into a per-axis factor folded into the DFT
            # and a factor depending only on k0, looked up by index
            self._lam = lam
            self._k0 = k0.astype(np.intp)
            # per-axis DFT by small matmuls beats fftn for axes of length <= 10
            self._dft = np.fft.fft(np.eye(d), axis=0)
            self._idft = self._dft.conj().T / d
            self._shape = shape
        else:
            self._shape = (d,) * self.n
        self._diag = diag.astype(float)
        self._phase_index = (diag + m).astype(np.intp)
        self._levels = np.arange(-m, m + 1, dtype=float)
        self._size = diag.size

    def state(self, gammas: Sequence[float], betas: Sequence[float]) -> np.ndarray:
        """Reduced (or full) amplitude array after the circuit, unit norm."""
        d = self.d
        psi = np.full(self._size, self._size**-0.5, dtype=np.complex128)
        for gamma, beta in zip(gammas, betas):
            psi = np.exp(-1j * gamma * self._levels)[self._phase_index] * psi
            if self.reduced:
                ph = np.exp(-1j * beta * self._lam)
                f = apply_local(psi, ph[:, None] * self._dft, d, self.n - 1)
                f *= ph[self._k0]
                psi = apply_local(f, self._idft, d, self.n - 1)
            else:
                psi = apply_local(psi, mixer_unitary(self.spec, beta), d, self.n)
        return psi

    def full_state(self, gammas: Sequence[float], betas: Sequence[float]) -> StateVector:
        if self.d == 1:
            return uniform_state(self.n, 1)
        psi = self.state(gammas, betas)
        if not self.reduced:
            return StateVector(self.d, self.n, psi)
        # psi(z0, z') = phi(z' - z0)
        phi = psi.reshape(self._shape)
        axes = tuple(range(self.n - 1))
        full = np.stack([np.roll(phi, s, axis=axes) for s in range(self.d)])
        return StateVector(self.d, self.n, full.reshape(-1) / np.sqrt(self.d))

    def expectation(self, gammas: Sequence[float], betas: Sequence[float]) -> float:
        self.n_evals += 1
        if self.d == 1:
            return float(self.g.weight_sum)
        psi = self.state(gammas, betas)
        return float(np.dot(np.abs(psi) ** 2, self._diag))

    def __call__(self, x: Sequence[float]) -> float:
        x = np.asarray(x, dtype=float)
        p = len(x) // 2
        return self.expectation(x[:p], x[p:])
