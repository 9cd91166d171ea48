import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from quditcc.errors import CapacityError, DimensionMismatchError, MixerSpecError, UndefinedRatioError
from quditcc.instances import ProblemGraph, agreements, all_negative, brute_force_maxagree, generate_dataset
from quditcc.simulator import (
    MixerSpec, QaoaEvaluator, QaoaParams, StateVector, apply_cost, apply_mixer, approx_ratio,
    cost_diagonal, expectation, mixer_matrix, mixer_unitary, parse_mixer, run_qaoa, sample,
    uniform_state,
)

EDGE_PLUS = ProblemGraph(2, ((0, 1, 1),))
TRI_MINUS = all_negative(3)


def dense_qaoa(g, d, gammas, betas, h):
    """Oracle: dense cost matrix, full-register mixer Hamiltonian, scipy expm."""
    n = g.n_nodes
    labels = list(itertools.product(range(d), repeat=n))
    cost = np.diag([2 * agreements(g, z) - g.n_edges for z in labels]).astype(complex)
    big = np.zeros((d**n, d**n), dtype=complex)
    for q in range(n):
        ops = [np.eye(d)] * n
        ops[q] = h
        term = ops[0]
        for o in ops[1:]:
            term = np.kron(term, o)
        big += term
    psi = np.full(d**n, d ** (-n / 2), dtype=complex)
    for gm, bt in zip(gammas, betas):
        psi = expm(-1j * bt * big) @ (expm(-1j * gm * cost) @ psi)
    return psi, float(np.real(psi.conj() @ cost @ psi))


@st.composite
def small_graphs(draw, n_min=2, n_max=4):
    n = draw(st.integers(n_min, n_max))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), min_size=1, unique=True))
    return ProblemGraph(n, tuple((u, v, draw(st.sampled_from([-1, 1]))) for u, v in chosen))


def test_uniform_state_examples():
    assert np.allclose(uniform_state(1, 2).amps, [2**-0.5] * 2)
    s = uniform_state(2, 3)
    assert s.amps.size == 9 and np.allclose(s.amps, 1 / 3)
    assert abs(s.norm() - 1) < 1e-12
    with pytest.raises(CapacityError):
        uniform_state(30, 3)


def test_state_vector_shape_check():
    with pytest.raises(DimensionMismatchError):
        StateVector(2, 2, np.ones(3))


def test_cost_diagonal_examples():
    assert cost_diagonal(EDGE_PLUS, 2).tolist() == [1, -1, -1, 1]
    diag = cost_diagonal(TRI_MINUS, 3)
    assert diag[0 * 9 + 1 * 3 + 2] == 3


@given(small_graphs(), st.integers(2, 4))
def test_cost_diagonal_matches_agreement_count(g, d):
    diag = cost_diagonal(g, d)
    for idx, z in enumerate(itertools.product(range(d), repeat=g.n_nodes)):
        assert diag[idx] == 2 * agreements(g, z) - g.n_edges


def test_cost_diagonal_maximum_is_c_star():
    for g in generate_dataset("erdos_renyi", 4, 12, seed=5).instances:
        r = brute_force_maxagree(g)
        d = max(r.optimal_cluster_counts)
        assert (cost_diagonal(g, max(d, 3)).max() + g.n_edges) // 2 == r.c_star


def test_mixer_matrix_examples():
    ring = mixer_matrix(MixerSpec("standard", 4))
    expected = np.array([[0, 1, 0, 1], [1, 0, 1, 0], [0, 1, 0, 1], [1, 0, 1, 0]])
    assert np.array_equal(ring, expected)
    chain = mixer_matrix(MixerSpec("hardware_r1", 4))
    expected[0, 3] = expected[3, 0] = 0
    assert np.array_equal(chain, expected)
    # r = d-1 couples every pair of levels equally; the literal sum counts wrapped powers twice
    full = mixer_matrix(MixerSpec("standard", 3, 2))
    assert np.array_equal(full, 2 * (np.ones((3, 3)) - np.eye(3)))
    # d=2 keeps both ring terms, h = 2X
    assert np.array_equal(mixer_matrix(MixerSpec("standard", 2)), [[0, 2], [2, 0]])
    r2 = mixer_matrix(MixerSpec("hardware_r2", 5))
    assert r2[0, 2] == 1 and r2[0, 3] == 0 and r2[0, 4] == 0


def test_mixer_spec_validation():
    with pytest.raises(MixerSpecError):
        MixerSpec("standard", 4, 4)
    with pytest.raises(MixerSpecError):
        MixerSpec("ring", 4)
    assert parse_mixer("standard_r2", 5) == MixerSpec("standard", 5, 2)
    assert parse_mixer("hardware_r1", 3).label == "hardware_r1"


@pytest.mark.parametrize("variant", ["standard", "hardware_r1", "hardware_r2"])
@pytest.mark.parametrize("d", [2, 3, 5, 7])
def test_mixer_unitary_matches_expm(variant, d):
    spec = MixerSpec(variant, d)
    u = mixer_unitary(spec, 0.37)
    assert np.allclose(u, expm(-0.37j * mixer_matrix(spec)), atol=1e-12)


def test_apply_cost_examples():
    s = uniform_state(2, 2)
    diag = cost_diagonal(EDGE_PLUS, 2)
    assert np.allclose(apply_cost(s, diag, 0.0).amps, s.amps)
    assert np.allclose(apply_cost(s, diag, 2 * np.pi).amps, s.amps, atol=1e-12)
    out = apply_cost(s, diag, np.pi / 2).amps
    assert np.isclose(out[1] / out[0], np.exp(-1j * np.pi))
    with pytest.raises(DimensionMismatchError):
        apply_cost(s, diag[:3], 0.1)


def test_apply_mixer_examples():
    spec = MixerSpec("standard", 2)
    zero = StateVector(2, 1, [1, 0])
    assert np.allclose(apply_mixer(zero, spec, 0.0).amps, zero.amps)
    assert np.allclose(apply_mixer(zero, spec, np.pi / 4).amps, [0, -1j], atol=1e-12)
    with pytest.raises(DimensionMismatchError):
        apply_mixer(zero, MixerSpec("standard", 3), 0.1)


@given(st.integers(2, 7), st.floats(-10, 10), st.integers(0, 2**31))
def test_apply_mixer_preserves_norm(d, beta, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=d**2) + 1j * rng.normal(size=d**2)
    s = StateVector(d, 2, v / np.linalg.norm(v))
    for variant in ("standard", "hardware_r1", "hardware_r2"):
        assert abs(apply_mixer(s, MixerSpec(variant, d), beta).norm() - 1) < 1e-10


def test_run_qaoa_trivial_parameters():
    assert np.allclose(run_qaoa(TRI_MINUS, 3, QaoaParams([], [])).amps, uniform_state(3, 3).amps)
    out = run_qaoa(TRI_MINUS, 3, QaoaParams([0, 0], [0, 0]))
    assert np.allclose(out.amps, uniform_state(3, 3).amps)


def test_single_edge_dense_grid_reaches_optimum():
    diag = cost_diagonal(EDGE_PLUS, 2)
    grid = np.linspace(0, 2 * np.pi, 61)
    best = max(
        expectation(run_qaoa(EDGE_PLUS, 2, QaoaParams([g], [b])), diag) for g in grid for b in grid
    )
    assert best >= 0.9 * EDGE_PLUS.n_edges


def test_expectation_examples():
    for d in (2, 3, 5):
        for w in (-1, 1):
            g = ProblemGraph(2, ((0, 1, w),))
            assert np.isclose(expectation(uniform_state(2, d), cost_diagonal(g, d)), w * (2 / d - 1))
    assert np.isclose(expectation(uniform_state(3, 3), cost_diagonal(TRI_MINUS, 3)), 1.0)
    diag = cost_diagonal(TRI_MINUS, 3)
    basis = StateVector(3, 3, np.eye(27)[5])
    assert expectation(basis, diag) == diag[5]


def test_approx_ratio_examples():
    assert approx_ratio(-3, 3, 3) == 0
    assert approx_ratio(3, 3, 3) == 1
    assert approx_ratio(0.0, 1, 1) == 0.5
    with pytest.raises(UndefinedRatioError):
        approx_ratio(0, 0, 0)


def test_sample_examples():
    rng = np.random.default_rng(0)
    basis = StateVector(2, 2, [0, 0, 1, 0])
    res = sample(basis, 100, rng)
    assert res.counts == {(1, 0): 100}
    res = sample(uniform_state(1, 2), 10**5, np.random.default_rng(1))
    assert sum(res.counts.values()) == 10**5
    assert all(abs(c / 10**5 - 0.5) < 0.01 for c in res.counts.values())
    a = sample(uniform_state(3, 3), 50, np.random.default_rng(9), cost_diagonal(TRI_MINUS, 3))
    b = sample(uniform_state(3, 3), 50, np.random.default_rng(9), cost_diagonal(TRI_MINUS, 3))
    assert a == b
    assert a.best_value == 2 * agreements(TRI_MINUS, a.best_labels) - 3
    with pytest.raises(ValueError):
        sample(basis, 0, rng)


@pytest.mark.parametrize("variant", ["standard", "hardware_r1", "hardware_r2"])
@pytest.mark.parametrize("d", [2, 3, 4])
def test_run_qaoa_matches_dense_oracle(variant, d):
    g = generate_dataset("erdos_renyi", 3, 6, seed=2).instances[4]
    spec = MixerSpec(variant, d)
    gammas, betas = [0.3, 1.1], [0.7, 2.2]
    psi, F = dense_qaoa(g, d, gammas, betas, mixer_matrix(spec))
    out = run_qaoa(g, d, QaoaParams(gammas, betas), spec)
    assert np.allclose(out.amps, psi, atol=1e-10)
    assert np.isclose(expectation(out, cost_diagonal(g, d)), F, atol=1e-10)


@given(small_graphs(n_max=5), st.integers(2, 5), st.integers(1, 2),
       st.sampled_from(["standard", "standard_r2", "hardware_r1"]), st.integers(0, 2**31))
def test_evaluator_matches_direct_simulation(g, d, p, mixer, seed):
    rng = np.random.default_rng(seed)
    gammas, betas = rng.uniform(0, 2 * np.pi, (2, p))
    spec = parse_mixer(mixer, d)
    ev = QaoaEvaluator(g, d, spec)
    direct = run_qaoa(g, d, QaoaParams(gammas, betas), spec)
    assert np.isclose(ev.expectation(gammas, betas), expectation(direct, cost_diagonal(g, d)), atol=1e-10)
    full = ev.full_state(gammas, betas)
    assert np.allclose(full.amps, direct.amps, atol=1e-10)


def test_evaluator_d1_is_analytic():
    ev = QaoaEvaluator(TRI_MINUS, 1)
    assert ev.expectation([0.1], [0.2]) == -3
    assert ev.n_evals == 1


@given(small_graphs(), st.integers(2, 4), st.floats(0, 6.3), st.floats(0, 6.3))
def test_expectation_bounded_by_edge_count(g, d, gm, bt):
    F = QaoaEvaluator(g, d).expectation([gm], [bt])
    assert -g.n_edges - 1e-9 <= F <= g.n_edges + 1e-9
