import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import chisquare

from quditcc.errors import NoThresholdError
from quditcc.instances import ProblemGraph, all_negative, all_positive, brute_force_maxagree, generate_dataset
from quditcc.noise import (
    NoiseConfig, apply_error_channel, decode_pair, find_threshold, fit_kappa, gate_count,
    random_guess_ratio, run_noisy, scaling_estimate, success_probability, threshold_scan,
    trajectory_draws, weyl_operator, weyl_set,
)
from quditcc.simulator import (
    MixerSpec, QaoaEvaluator, QaoaParams, StateVector, approx_ratio, mixer_unitary, uniform_state,
)
from quditcc.strategies import OptimizerConfig, WarmStartCache, solve_instance


def kron_all(ops):
    out = ops[0]
    for o in ops[1:]:
        out = np.kron(out, o)
    return out


def dense_trajectory_ratio(g, d, params, p2, seed, t, c_star):
    """Oracle: full-register matrices for cost, per-edge Weyl pairs and mixer."""
    n, E = g.n_nodes, g.n_edges
    labels = list(itertools.product(range(d), repeat=n))
    cost = np.array([sum(w * (1 if z[u] == z[v] else -1) for u, v, w in g.edges) for z in labels], float)
    u_draw, k_draw = trajectory_draws(seed, t, params.p, E, d)
    psi = np.full(d**n, d ** (-n / 2), dtype=complex)
    mix = kron_all([mixer_unitary(MixerSpec("standard", d), 0.0)] * n)
    for layer, (gm, bt) in enumerate(zip(params.gammas, params.betas)):
        psi = np.exp(-1j * gm * cost) * psi
        for e, (a, b, _) in enumerate(g.edges):
            if u_draw[layer, e] < p2:
                r1, s1, r2, s2 = decode_pair(int(k_draw[layer, e]), d)
                ops = [np.eye(d)] * n
                ops[a], ops[b] = weyl_operator(d, r1, s1), weyl_operator(d, r2, s2)
                psi = kron_all(ops) @ psi
        mix = kron_all([mixer_unitary(MixerSpec("standard", d), bt)] * n)
        psi = mix @ psi
    F = float(np.dot(np.abs(psi) ** 2, cost))
    return (F + E) / (2 * c_star)


def test_weyl_set_qubit():
    ws = weyl_set(2)
    X, Z = np.array([[0, 1], [1, 0]]), np.diag([1, -1])
    expected = [np.eye(2), Z, X, X @ Z]
    assert len(ws.unitaries) == 4
    for got, want in zip(ws.unitaries, expected):
        assert np.allclose(got, want)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_weyl_set_properties(d):
    us = weyl_set(d).unitaries
    assert len(us) == d * d and np.allclose(us[0], np.eye(d))
    for u in us:
        assert np.allclose(u.conj().T @ u, np.eye(d), atol=1e-12)
    for a, b in itertools.combinations(us, 2):
        assert not np.allclose(a, b)
    with pytest.raises(ValueError):
        weyl_set(1)


def test_decode_pair_is_bijective():
    d = 3
    codes = {decode_pair(k, d) for k in range(d**4)}
    assert len(codes) == d**4 and decode_pair(0, d) == (0, 0, 0, 0)


def test_channel_p2_zero_is_identity():
    rng = np.random.default_rng(0)
    s = StateVector(3, 3, rng.normal(size=27) + 1j * rng.normal(size=27))
    out = apply_error_channel(s, [(0, 1), (1, 2)], 0.0, 3, rng)
    assert np.array_equal(out.amps, s.amps)


def test_channel_p2_one_never_identity():
    rng = np.random.default_rng(1)
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    s = StateVector(2, 2, v / np.linalg.norm(v))
    for _ in range(300):
        out = apply_error_channel(s, [(0, 1)], 1.0, 2, rng)
        assert abs(abs(np.vdot(s.amps, out.amps)) - 1) > 1e-6
        assert abs(out.norm() - 1) < 1e-12


@given(st.integers(2, 4), st.floats(0, 1), st.integers(0, 2**31))
def test_channel_preserves_norm(d, p2, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=d**3) + 1j * rng.normal(size=d**3)
    s = StateVector(d, 3, v / np.linalg.norm(v))
    out = apply_error_channel(s, [(0, 1), (0, 2), (1, 2)], p2, d, rng)
    assert abs(out.norm() - 1) < 1e-12


def test_channel_twirl_distribution():
    """p2=1 on one qubit pair: ensemble average equals (d^4 I/d^2 - rho)/(d^4 - 1)."""
    d, draws = 2, 20000
    rng = np.random.default_rng(5)
    v = np.array([0.8, 0.1 + 0.3j, 0.2, -0.4j])
    s = StateVector(d, 2, v / np.linalg.norm(v))
    rho = np.outer(s.amps, s.amps.conj())
    avg = np.zeros((4, 4), dtype=complex)
    counts = np.zeros(4)
    for _ in range(draws):
        out = apply_error_channel(s, [(0, 1)], 1.0, d, rng).amps
        avg += np.outer(out, out.conj())
        counts[rng.choice(4, p=np.abs(out) ** 2)] += 1
    avg /= draws
    expected = (d**4 * np.eye(4) / d**2 - rho) / (d**4 - 1)
    assert np.max(np.abs(avg - expected)) < 0.02
    assert chisquare(counts, draws * np.real(np.diag(expected))).pvalue > 1e-3


def test_run_noisy_zero_noise_equals_noise_free():
    g = generate_dataset("erdos_renyi", 4, 5, seed=2).instances[3]
    c_star = brute_force_maxagree(g).c_star
    params = QaoaParams([0.4, 1.2], [0.9, 0.3])
    res = run_noisy(g, 3, params, cfg=NoiseConfig(0.0, 4), c_star=c_star)
    F = QaoaEvaluator(g, 3).expectation(params.gammas, params.betas)
    assert abs(res.mean_ratio - approx_ratio(F, g.n_edges, c_star)) < 1e-9


def test_run_noisy_matches_dense_trajectories():
    g = generate_dataset("erdos_renyi", 3, 5, seed=4).instances[2]
    c_star = brute_force_maxagree(g).c_star
    params = QaoaParams([0.7, 2.1], [0.4, 1.6])
    res = run_noisy(g, 3, params, cfg=NoiseConfig(0.5, 6, seed=11), c_star=c_star)
    oracle = [dense_trajectory_ratio(g, 3, params, 0.5, 11, t, c_star) for t in range(6)]
    assert np.allclose(res.ratios, oracle, atol=1e-10)


def test_run_noisy_deterministic_under_seed():
    g = all_negative(3)
    params = QaoaParams([1.8], [0.44])
    a = run_noisy(g, 3, params, cfg=NoiseConfig(0.3, 50, seed=7))
    b = run_noisy(g, 3, params, cfg=NoiseConfig(0.3, 50, seed=7))
    assert np.array_equal(a.ratios, b.ratios)


def test_d1_unaffected_by_noise():
    g = all_positive(4)
    for p2 in (0.0, 0.1, 1.0):
        assert run_noisy(g, 1, QaoaParams([0.3], [0.2]), cfg=NoiseConfig(p2, 10)).mean_ratio == 1.0


@pytest.mark.parametrize("d", [2, 3])
def test_full_noise_gives_random_guess(d):
    g = all_negative(3)
    res = run_noisy(g, d, QaoaParams([1.81], [0.441]), cfg=NoiseConfig(1.0, 1000, seed=3))
    assert abs(res.mean_ratio - random_guess_ratio(g, d, 3)) <= 3 * res.stderr


def test_random_guess_ratio():
    g = ProblemGraph(2, ((0, 1, 1),))
    assert random_guess_ratio(g, 2, 1) == 0.5
    assert random_guess_ratio(all_negative(3), 3, 3) == approx_ratio(1.0, 3, 3)
    assert random_guess_ratio(all_positive(3), 1, 3) == 1.0


def test_mean_ratio_non_increasing_in_p2():
    g = generate_dataset("complete", 4, 10, seed=1).instances[2]
    rep = solve_instance(g, 2, OptimizerConfig(max_evals=200, restarts=2), cache=WarmStartCache())
    d = max(rep.best_d, 2)
    params = rep.per_d_results[d].params
    prev = None
    for p2 in (0.0, 0.01, 0.1, 0.5, 1.0):
        res = run_noisy(g, d, params, cfg=NoiseConfig(p2, 300, seed=2), c_star=rep.c_star)
        if prev is not None:
            assert res.mean_ratio <= prev.mean_ratio + 3 * np.hypot(res.stderr, prev.stderr)
        prev = res


def test_threshold_on_linear_curve():
    r0, rr = 0.9, 0.5
    grid = [0.1, 0.25, 0.5, 0.75, 1.0]
    ratios = [r0 - (r0 - rr) * p for p in grid]
    assert find_threshold(grid, ratios, r0, rr) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(NoThresholdError):
        find_threshold([0.1, 0.2], [0.9, 0.89], r0, rr)
    with pytest.raises(NoThresholdError):
        find_threshold([0.1, 0.2], [0.6, 0.5], r0, rr)


def test_threshold_interpolates_in_log_p2():
    grid = [1e-3, 1e-1]
    p = find_threshold(grid, [1.0, 0.0], 1.0, 0.0)
    assert p == pytest.approx(1e-2)


def test_fit_kappa():
    kappa, r2 = fit_kappa([0.1, 0.01], [8.4, 84])
    assert kappa == pytest.approx(0.84) and r2 == pytest.approx(1.0)
    rng = np.random.default_rng(0)
    p2 = np.logspace(-3, -1, 6)
    g = 1.3 / p2 * np.exp(rng.normal(0, 0.05, 6))
    kappa, r2 = fit_kappa(p2, g)
    assert kappa > 0 and abs(kappa - 1.3) < 0.1 and r2 > 0.99
    with pytest.raises(ValueError):
        fit_kappa([], [])


def test_gate_count_and_success_probability():
    assert gate_count(4, 2) == 12
    assert success_probability(0.0, 10) == 1.0
    assert success_probability(0.1, 2) == pytest.approx(0.81)


def test_scaling_estimate_reproduces_published_sizes():
    assert [scaling_estimate(p, 8)[1] for p in (1e-3, 1e-4, 1e-5)] == [13, 41, 130]
    assert [scaling_estimate(p, 8, decade_rounding=False)[1] for p in (1e-3, 1e-4, 1e-5)] == [11, 35, 110]
    assert scaling_estimate(1e-3, 8, decade_rounding=False)[0] == pytest.approx(0.014)
    with pytest.raises(ValueError):
        scaling_estimate(0.0, 8)


def test_threshold_scan_small():
    ds = {3: generate_dataset("complete", 3, 6, seed=0)}
    grid = np.logspace(-3, 0, 7)
    res = threshold_scan(ds, p_depths=(1,), p2_grid=grid, trajectories=40,
                         opt_cfg=OptimizerConfig(max_evals=150, restarts=2), cache=WarmStartCache())
    (pt,) = res.points
    assert pt.g_threshold == 3 and len(pt.curve) == 7
    assert pt.noise_free_mean >= pt.random_mean
    if pt.p2_threshold is not None:
        assert res.kappa == pytest.approx(pt.g_threshold * pt.p2_threshold)


def test_noise_config_validation():
    with pytest.raises(ValueError):
        NoiseConfig(1.5)
    with pytest.raises(ValueError):
        NoiseConfig(0.1, 0)
