"""Pulse-level CP gate for two qubit-atoms with Rydberg decay to an auxiliary level.

Each atom has levels {0, 1, r_0, r_1, aux} (index order as in gates.ExtendedSpace with
aux=True). Pulses drive l <-> r_l resonantly with H = (Omega/2)(e^{i phi}|l><r_l| + h.c.),
so a pulse of area theta realizes gates.u2level(theta, phi). Blockade is finite: every
doubly-Rydberg pair state carries energy V. Decay runs r_l -> aux at rate Gamma.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidStateError, StepSizeError
from .gates import ExtendedSpace, cp_target
from .noise import weyl_set

D_QUBIT = 2
DEFAULT_V_RATIO = 20.0
DEFAULT_STEPS = 3200  # RK4 steps per pi-pulse duration


@dataclass(frozen=True)
class Pulse:
    atom: int  # 1 or 2; 0 means idle (no drive)
    level: int
    phase: float
    area: float = np.pi


@dataclass(frozen=True)
class LindbladModel:
    pulses: tuple[Pulse, ...]
    omega: float = 1.0
    v: float = DEFAULT_V_RATIO
    decay: float = 0.0
    d: int = D_QUBIT

    def __post_init__(self):
        if self.decay < 0 or self.omega <= 0:
            raise ValueError("rates must be non-negative and omega positive")

    @property
    def space(self) -> ExtendedSpace:
        return ExtendedSpace(self.d, aux=True)

    @property
    def dim(self) -> int:
        return self.space.dim**2

    def duration(self, pulse: Pulse) -> float:
        return pulse.area / self.omega

    @property
    def gate_time(self) -> float:
        return sum(self.duration(p) for p in self.pulses)

    def interaction(self) -> np.ndarray:
        pr = np.diag(self.space.rydberg_projector().diagonal())
        return self.v * np.kron(pr, pr)

    def hamiltonian(self, pulse: Pulse) -> np.ndarray:
        sp = self.space
        h = self.interaction().astype(complex)
        if pulse.atom == 0:
            return h
        one = np.zeros((sp.dim, sp.dim), dtype=complex)
        l, r = sp.qudit(pulse.level), sp.rydberg(pulse.level)
        one[l, r] = 0.5 * self.omega * np.exp(1j * pulse.phase)
        one[r, l] = np.conj(one[l, r])
        eye = np.eye(sp.dim)
        return h + (np.kron(one, eye) if pulse.atom == 1 else np.kron(eye, one))

    def collapse_operators(self) -> list[np.ndarray]:
        sp = self.space
        eye = np.eye(sp.dim)
        ops = []
        for l in range(self.d):
            s = np.zeros((sp.dim, sp.dim))
            s[sp.aux_level, sp.rydberg(l)] = 1.0
            ops += [np.sqrt(self.decay) * np.kron(s, eye), np.sqrt(self.decay) * np.kron(eye, s)]
        return ops


def calU_pulses(target: int, level: int, gamma: float, offset: float = 0.0) -> list[Pulse]:
    """X on the control, P(gamma/2) as a pi-pulse pair on the target, X on the control."""
    control = 3 - target
    return [
        Pulse(control, level, 0.0),
        Pulse(target, level, 0.0),
        Pulse(target, level, gamma / 2 + offset),
        Pulse(control, level, 0.0),
    ]


def cp_pulse_sequence(d: int, gamma: float, offset: float = 0.0) -> tuple[Pulse, ...]:
    """Time-ordered pulses of the symmetric CP gate (rightmost factor first)."""
    seq: list[Pulse] = []
    for l in reversed(range(d)):
        seq += calU_pulses(2, l, gamma, offset) + calU_pulses(1, l, gamma, offset)
    return tuple(seq)


def _expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def pulse_unitary(model: LindbladModel) -> np.ndarray:
    """Closed-system propagator of the whole sequence (decay ignored)."""
    u = np.eye(model.dim, dtype=complex)
    for p in model.pulses:
        u = _expm_hermitian(model.hamiltonian(p), model.duration(p)) @ u
    return u


def _qudit_idx(model: LindbladModel) -> np.ndarray:
    return model.space.qudit_indices_two_atom()


def equal_label_phase_error(model: LindbladModel, gamma: float) -> float:
    """Phase of the equal-label block relative to CP(gamma), after removing the global phase."""
    idx = _qudit_idx(model)
    diag = pulse_unitary(model)[idx, idx] / cp_target(model.d, gamma).diagonal()
    a = np.arange(model.d)
    eq = (a[:, None] == a[None, :]).reshape(-1)
    return float(np.angle(diag[eq].sum() / diag[~eq].sum()))


def calibrate_offset(gamma: float, omega: float = 1.0, v: float = DEFAULT_V_RATIO,
                     d: int = D_QUBIT, iters: int = 6) -> float:
    """Pulse-phase offset cancelling the finite-V light shift on the blockaded pair states."""

    def err(x):
        m = LindbladModel(cp_pulse_sequence(d, gamma, x), omega=omega, v=v, d=d)
        return equal_label_phase_error(m, gamma)

    x0, x1 = 0.0, 0.05
    e0, e1 = err(x0), err(x1)
    for _ in range(iters):
        if e1 == e0:
            break
        x0, x1, e0 = x1, x1 - e1 * (x1 - x0) / (e1 - e0), e1
        e1 = err(x1)
        if abs(e1) < 1e-13:
            break
    return float(x1)


def cp_model(gamma: float = np.pi / 2, decay: float = 0.0, omega: float = 1.0,
             v: float = DEFAULT_V_RATIO, calibrate: bool = True) -> LindbladModel:
    offset = calibrate_offset(gamma, omega, v) if calibrate else 0.0
    return LindbladModel(cp_pulse_sequence(D_QUBIT, gamma, offset), omega=omega, v=v, decay=decay)


# ---------------------------------------------------------------- integration


@dataclass
class Evolution:
    rho: np.ndarray
    trajectory: list[np.ndarray] = field(default_factory=list)  # state after each pulse
    times: list[float] = field(default_factory=list)
    max_trace_drift: float = 0.0
    max_hermiticity_error: float = 0.0
    min_eigenvalue: float = 0.0


def _check_state(rho: np.ndarray, tol: float = 1e-9) -> None:
    if abs(np.trace(rho) - 1) > 1e-8:
        raise InvalidStateError("density matrix must have unit trace")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise InvalidStateError("density matrix must be Hermitian")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise InvalidStateError("density matrix has a negative eigenvalue")


def _lindblad_rk4(model: LindbladModel, decays: np.ndarray, rho0: np.ndarray, steps_per_pi: int,
                  drift_tol: float) -> tuple[np.ndarray, list[Evolution]]:
    """Batched RK4 over a vector of decay rates sharing the same pulse sequence.

    The jump term L rho L^+ for L = |aux><r_l| on one atom moves the (r_l, r_l) block of
    that atom onto (aux, aux), so it is applied by reshaping rho to four level indices.
    """
    sp = model.space
    k = sp.dim
    ryd = [sp.rydberg(l) for l in range(model.d)]
    aux = sp.aux_level
    pr = sp.rydberg_projector().diagonal()
    n_ryd = np.kron(pr, np.ones(k)) + np.kron(np.ones(k), pr)  # diagonal of sum_k L^+L / Gamma
    loss = 0.5 * (n_ryd[:, None] + n_ryd[None, :])
    g = decays[:, None, None]
    rho = np.repeat(np.asarray(rho0, dtype=complex)[None], len(decays), axis=0)
    evs = [Evolution(rho[i]) for i in range(len(decays))]

    def rhs(r, h):
        val = -1j * (h @ r - r @ h) - g * loss * r
        r4 = r.reshape(-1, k, k, k, k)
        j4 = np.zeros_like(r4)
        for q in ryd:
            j4[:, aux, :, aux, :] += r4[:, q, :, q, :]
            j4[:, :, aux, :, aux] += r4[:, :, q, :, q]
        return val + g * j4.reshape(r.shape)

    t = 0.0
    for p in model.pulses:
        h = model.hamiltonian(p)
        tp = model.duration(p)
        n = max(1, int(np.ceil(steps_per_pi * tp * model.omega / np.pi)))
        dt = tp / n
        for _ in range(n):
            k1 = rhs(rho, h)
            k2 = rhs(rho + 0.5 * dt * k1, h)
            k3 = rhs(rho + 0.5 * dt * k2, h)
            k4 = rhs(rho + dt * k3, h)
            rho = rho + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += tp
        drift = np.abs(np.trace(rho, axis1=1, axis2=2).real - 1)
        if not np.all(np.isfinite(rho)) or drift.max() > drift_tol or np.abs(rho).max() > 1 + drift_tol:
            raise StepSizeError(f"RK4 unstable at t={t:.4g}; increase steps_per_pi")
        herm = np.abs(rho - rho.conj().transpose(0, 2, 1)).max(axis=(1, 2))
        for i, ev in enumerate(evs):
            ev.max_trace_drift = max(ev.max_trace_drift, float(drift[i]))
            ev.max_hermiticity_error = max(ev.max_hermiticity_error, float(herm[i]))
            ev.trajectory.append(rho[i])
            ev.times.append(t)
    for i, ev in enumerate(evs):
        ev.rho = rho[i]
        ev.min_eigenvalue = float(np.linalg.eigvalsh(0.5 * (rho[i] + rho[i].conj().T)).min())
    return rho, evs


def evolve(model: LindbladModel, rho0: np.ndarray, steps_per_pi: int = DEFAULT_STEPS,
           drift_tol: float = 1e-6) -> Evolution:
    """Fixed-step RK4 on d rho/dt = -i[H, rho] + sum_k L rho L^+ - {L^+L, rho}/2."""
    _check_state(np.asarray(rho0))
    return _lindblad_rk4(model, np.array([model.decay]), rho0, steps_per_pi, drift_tol)[1][0]


def evolve_many(model: LindbladModel, decays, rho0: np.ndarray, steps_per_pi: int = DEFAULT_STEPS,
                drift_tol: float = 1e-6) -> list[Evolution]:
    """evolve() for several decay rates at once (the model's own rate is ignored)."""
    _check_state(np.asarray(rho0))
    decays = np.asarray(decays, dtype=float)
    if np.any(decays < 0):
        raise ValueError("decay rates must be non-negative")
    return _lindblad_rk4(model, decays, rho0, steps_per_pi, drift_tol)[1]


# ---------------------------------------------------------------- fidelities


def _psd_sqrt(rho: np.ndarray, tol: float) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    if w.min() < -tol:
        raise InvalidStateError(f"negative eigenvalue {w.min():.3g}")
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def fidelity(rho: np.ndarray, sigma: np.ndarray, tol: float = 1e-9) -> float:
    """Tr sqrt(sqrt(rho) sigma sqrt(rho))."""
    rho, sigma = np.asarray(rho), np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise ValueError("shape mismatch")
    _psd_sqrt(sigma, tol)
    s = _psd_sqrt(rho, tol)
    m = s @ sigma @ s
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return float(min(1.0, np.sqrt(np.clip(w, 0, None)).sum()))


def embed_state(psi: np.ndarray, space: ExtendedSpace) -> np.ndarray:
    full = np.zeros(space.dim**2, dtype=complex)
    full[space.qudit_indices_two_atom()] = psi
    return full


def plus_input(d: int = D_QUBIT) -> np.ndarray:
    return np.full(d * d, 1 / d, dtype=complex)


def ideal_state(gamma: float, space: ExtendedSpace, psi_in: np.ndarray | None = None) -> np.ndarray:
    psi = cp_target(space.d, gamma) @ (plus_input(space.d) if psi_in is None else psi_in)
    full = embed_state(psi, space)
    return np.outer(full, full.conj())


def weyl_images(rho_id: np.ndarray, space: ExtendedSpace) -> list[np.ndarray]:
    """U rho_id U^+ for the d^4 - 1 non-identity two-qudit Weyl products, lifted to the atom space."""
    ws = weyl_set(space.d).unitaries
    idx = space.qudit_indices_two_atom()
    out = []
    for a, ua in enumerate(ws):
        for b, ub in enumerate(ws):
            if a == 0 and b == 0:
                continue
            u = np.eye(space.dim**2, dtype=complex)
            u[np.ix_(idx, idx)] = np.kron(ua, ub)
            out.append(u @ rho_id @ u.conj().T)
    return out


def f_err(p2, mean_weyl_fidelity: float):
    """Error-model average fidelity; affine in p2."""
    return (1 - np.asarray(p2)) + np.asarray(p2) * mean_weyl_fidelity


def p2_from_decay(decay, eta: float, t_cp: float):
    return 1 - np.exp(-eta * np.asarray(decay) * t_cp)


def fit_eta(decays: np.ndarray, f_open: np.ndarray, mean_weyl_fidelity: float, t_cp: float,
            lo: float = 1e-3, hi: float = 1e3) -> float:
    """Least-squares eta matching F_open(Gamma) to F_err(p2(Gamma; eta)); golden section in log eta."""
    decays, f_open = np.asarray(decays, float), np.asarray(f_open, float)

    def loss(log_eta):
        p2 = p2_from_decay(decays, np.exp(log_eta), t_cp)
        return float(np.sum((f_open - f_err(p2, mean_weyl_fidelity)) ** 2))

    a, b = np.log(lo), np.log(hi)
    g = (np.sqrt(5) - 1) / 2
    c, e = b - g * (b - a), a + g * (b - a)
    fc, fe = loss(c), loss(e)
    while b - a > 1e-10:
        if fc < fe:
            b, e, fe = e, c, fc
            c = b - g * (b - a)
            fc = loss(c)
        else:
            a, c, fc = c, e, fe
            e = a + g * (b - a)
            fe = loss(e)
    return float(np.exp(0.5 * (a + b)))


@dataclass
class FidelityReport:
    gamma_cp: float
    v_ratio: float
    decays: list[float]
    p2: list[float]
    f_err: list[float]
    f_open: list[float]
    f_err_open: list[float]
    eta: float
    t_cp: float  # total pulse-sequence duration
    mean_weyl_fidelity: float
    gate_fidelity: float  # Gamma = 0, calibrated pulses
    gate_fidelity_uncalibrated: float
    phase_offset: float
    block_decay_time: float  # t with P rho_open P ~ e^{-Gamma t} rho_id at the smallest Gamma > 0
    projected_deviation: list[float]  # |P rho P - e^{-Gamma t_cp} rho_id| / |e^{-Gamma t_cp} rho_id|
    max_trace_drift: float
    fit_points: int

    @property
    def eta_block_time(self) -> float:
        """eta if t_CP is instead taken as the block decay time."""
        return self.eta * self.t_cp / self.block_decay_time

    def rows(self) -> list[tuple[float, float, float, float]]:
        return list(zip(self.p2, self.f_err, self.f_open, self.f_err_open))


DEFAULT_DECAY_GRID = (0.0,) + tuple(float(x) for x in np.logspace(-5, -1.5, 8))


def fidelity_suite(gamma_cp: float = np.pi / 2, decays=DEFAULT_DECAY_GRID, omega: float = 1.0,
                   v_ratio: float = DEFAULT_V_RATIO, steps_per_pi: int = DEFAULT_STEPS,
                   fit_max_decay_time: float = 0.1) -> FidelityReport:
    """F_err, F_open and F_err_open on a decay-rate grid, plus the fitted eta.

    eta is fitted on grid points with Gamma * t_CP <= fit_max_decay_time, where t_CP is the
    total duration of the pulse sequence.
    """
    base = cp_model(gamma_cp, 0.0, omega, v_ratio * omega)
    raw = cp_model(gamma_cp, 0.0, omega, v_ratio * omega, calibrate=False)
    space = base.space
    rho_id = ideal_state(gamma_cp, space)
    images = weyl_images(rho_id, space)
    mean_w = float(np.mean([fidelity(im, rho_id) for im in images]))
    t_cp = base.gate_time
    idx = space.qudit_indices_two_atom()
    psi0 = embed_state(plus_input(space.d), space)
    rho0 = np.outer(psi0, psi0.conj())
    u_raw = pulse_unitary(raw)
    gate_unc = fidelity(u_raw @ rho0 @ u_raw.conj().T, rho_id)

    decays = [float(g) for g in decays]
    f_open, f_eo, dev, drift = [], [], [], 0.0
    rhos = []
    gate_fid = None
    block_t = float("nan")
    evs = evolve_many(base, np.array(decays) * omega, rho0, steps_per_pi)
    for g, ev in zip(decays, evs):
        rho = ev.rho
        rhos.append(rho)
        drift = max(drift, ev.max_trace_drift)
        fo = fidelity(rho, rho_id)
        f_open.append(fo)
        if g == 0 and gate_fid is None:
            gate_fid = fo
        block = rho[np.ix_(idx, idx)]
        ref = np.exp(-g * omega * t_cp) * rho_id[np.ix_(idx, idx)]
        dev.append(float(np.linalg.norm(block - ref) / np.linalg.norm(ref)))
        if g > 0 and np.isnan(block_t):
            block_t = float(-np.log(np.trace(block).real) / (g * omega))
    if gate_fid is None:
        gate_fid = fidelity(pulse_unitary(base) @ rho0 @ pulse_unitary(base).conj().T, rho_id)

    gam = np.array(decays) * omega
    sel = (gam > 0) & (gam * t_cp <= fit_max_decay_time)
    if not sel.any():
        sel = gam > 0
    eta = fit_eta(gam[sel], np.array(f_open)[sel], mean_w, t_cp)
    p2 = p2_from_decay(gam, eta, t_cp)
    fe = f_err(p2, mean_w)
    for rho, q in zip(rhos, p2):
        f_eo.append(float((1 - q) * fidelity(rho_id, rho) + q * np.mean([fidelity(im, rho) for im in images])))
    return FidelityReport(
        gamma_cp=gamma_cp, v_ratio=v_ratio, decays=decays, p2=[float(x) for x in p2],
        f_err=[float(x) for x in fe], f_open=f_open, f_err_open=f_eo, eta=eta, t_cp=t_cp,
        mean_weyl_fidelity=mean_w, gate_fidelity=float(gate_fid),
        gate_fidelity_uncalibrated=float(gate_unc), phase_offset=float(base.pulses[2].phase - gamma_cp / 2),
        block_decay_time=block_t, projected_deviation=dev, max_trace_drift=drift,
        fit_points=int(sel.sum()),
    )
