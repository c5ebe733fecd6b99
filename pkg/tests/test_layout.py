import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from dellayout.errors import ConfigError, NumericDegeneracyError
from dellayout.graph import Graph, complete_graph, gnp_graph, path_graph, random_sparse_graph, shortest_paths
from dellayout.layout import (
    LayoutParams,
    ar_energy,
    ar_forces,
    compute_layout,
    fr_energy,
    fr_forces,
    fr_layout,
    kk_delta,
    kk_energy,
    kk_gradient,
    kk_ideal_lengths,
    kk_layout,
    langevin_step,
    random_layout,
    separate_coincident,
)

from conftest import well_separated
from oracles import central_gradient, rel_error

DET = LayoutParams(noise_scale=0.0)


def _rotation(d, rng):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


# --- forces and energies ---------------------------------------------------


def test_balanced_pair_has_zero_force():
    P = np.array([[0.0, 0.0], [1.0, 0.0]])
    assert np.allclose(ar_forces(P, path_graph(2), DET), 0.0, atol=1e-15)


def test_stretched_pair_pulled_inward():
    P = np.array([[0.0, 0.0], [2.0, 0.0]])
    F = ar_forces(P, path_graph(2), DET)
    # attraction 2**2 = 4 inward, repulsion 1/2 outward
    assert F == pytest.approx(np.array([[3.5, 0.0], [-3.5, 0.0]]))


def test_isolated_node_no_force():
    assert np.array_equal(fr_forces(np.array([[0.3, -0.2]]), Graph(1, ()), DET), [[0.0, 0.0]])


def test_unit_pair_energy():
    P = np.array([[0.0, 0.0], [1.0, 0.0]])
    assert fr_energy(P, path_graph(2), DET) == pytest.approx(1.0 / 3.0, abs=1e-15)


def test_edgeless_energy_drops_under_expansion(rng):
    g = Graph(5, ())
    P = well_separated(rng, 5, 2)
    energies = [fr_energy(c * P, g, DET) for c in (1.0, 1.5, 2.0, 4.0)]
    assert all(a > b for a, b in zip(energies, energies[1:]))


def test_coincident_nodes_rejected():
    P = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
    with pytest.raises(NumericDegeneracyError):
        fr_forces(P, complete_graph(3), DET)
    fixed = separate_coincident(P, np.random.default_rng(0))
    assert np.array_equal(fixed[0], P[0])
    assert 0 < np.abs(fixed[1] - P[1]).max() <= 1e-6
    fr_forces(fixed, complete_graph(3), DET)


@pytest.mark.parametrize("a_exp, r_exp", [(2.0, -1.0), (0.0, -1.0), (1.0, -1.0), (1.5, -2.0), (-1.0, 0.5)])
def test_ar_forces_are_negative_gradient(rng, a_exp, r_exp):
    params = DET.with_(algorithm="ar", a_exp=a_exp, r_exp=r_exp, k_attr=0.7, k_rep=1.3)
    for _ in range(10):
        n, d = int(rng.integers(2, 9)), int(rng.integers(2, 4))
        g = gnp_graph(n, 0.5, rng)
        P = well_separated(rng, n, d)
        fd = central_gradient(lambda X: ar_energy(X, g, params), P)
        assert rel_error(ar_forces(P, g, params), -fd) < 1e-4


def test_fr_forces_are_negative_gradient(rng):
    for _ in range(20):
        n = int(rng.integers(2, 9))
        g = gnp_graph(n, 0.4, rng)
        P = well_separated(rng, n, 2)
        fd = central_gradient(lambda X: fr_energy(X, g, DET), P)
        assert rel_error(fr_forces(P, g, DET), -fd) < 1e-4


def test_ar_specialises_to_fr_bitwise(rng):
    params = DET.with_(algorithm="ar", a_exp=2.0, r_exp=-1.0)
    for _ in range(20):
        n = int(rng.integers(2, 12))
        g = gnp_graph(n, 0.4, rng)
        P = well_separated(rng, n, int(rng.integers(2, 4)), min_dist=1e-3)
        assert ar_forces(P, g, params).tobytes() == fr_forces(P, g, DET).tobytes()
        assert ar_energy(P, g, params) == pytest.approx(fr_energy(P, g, DET), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 10), st.integers(2, 4), st.floats(0.0, 1.0), st.integers(0, 2**32 - 1))
def test_forces_sum_to_zero(n, d, p, seed):
    rng = np.random.default_rng(seed)
    g = gnp_graph(n, p, rng)
    P = well_separated(rng, n, d, min_dist=0.05)
    assert np.abs(fr_forces(P, g, DET).sum(axis=0)).max() < 1e-9
    assert np.abs(kk_gradient(P, kk_ideal_lengths(shortest_paths(g)), 1.0).sum(axis=0)).max() < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 9), st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_energies_rigid_motion_invariant(n, d, seed):
    rng = np.random.default_rng(seed)
    g = gnp_graph(n, 0.5, rng)
    P = well_separated(rng, n, d)
    Q = P @ _rotation(d, rng).T + rng.uniform(-5, 5, d)
    ideal = kk_ideal_lengths(shortest_paths(g))
    assert fr_energy(Q, g, DET) == pytest.approx(fr_energy(P, g, DET), rel=1e-9, abs=1e-9)
    assert kk_energy(Q, ideal, 1.0) == pytest.approx(kk_energy(P, ideal, 1.0), rel=1e-9, abs=1e-12)


# --- Langevin step ---------------------------------------------------------


def test_langevin_without_noise_is_deterministic(rng):
    g = random_sparse_graph(8, 10, rng)
    P = well_separated(rng, 8, 2)
    a = langevin_step(P, g, DET, 0.05, np.random.default_rng(1))
    b = langevin_step(P, g, DET, 0.05, np.random.default_rng(2))
    assert np.array_equal(a, b)
    single = np.array([[0.25, -0.5]])
    assert np.array_equal(langevin_step(single, Graph(1, ()), DET, 0.1, rng), single)


def test_langevin_step_matches_formula_when_uncapped(rng):
    g = random_sparse_graph(6, 7, rng)
    P = well_separated(rng, 6, 2)
    params = LayoutParams(noise_scale=0.01, max_displacement=None)
    got = langevin_step(P, g, params, 0.01, np.random.default_rng(9))
    eps = np.random.default_rng(9).standard_normal(P.shape)
    assert np.allclose(got, P + 0.01 * fr_forces(P, g, params) + 0.1 * eps, rtol=0, atol=1e-14)


def test_displacement_cap():
    P = np.array([[0.0, 0.0], [5.0, 0.0]])
    out = langevin_step(P, path_graph(2), DET.with_(max_displacement=0.1), 1.0, None)
    assert np.linalg.norm(out - P, axis=1) == pytest.approx([0.1, 0.1])


def test_langevin_noise_scale():
    g = Graph(1, ())
    params = LayoutParams(noise_scale=0.04)
    rng = np.random.default_rng(2024)
    P = np.zeros((1, 2))
    steps = []
    for _ in range(10_000):
        nxt = langevin_step(P, g, params, 0.1, rng)
        steps.append(nxt - P)
        P = nxt
    std = np.std(np.concatenate(steps))
    assert abs(std - 0.2) < 0.01


def test_langevin_rejects_bad_step():
    with pytest.raises(ConfigError):
        langevin_step(np.zeros((1, 2)), Graph(1, ()), DET, 0.0, None)


# --- FR layout -------------------------------------------------------------


def test_fr_pair_equilibrium():
    lay, trace = fr_layout(path_graph(2), DET.with_(iterations=200), seed=3)
    assert np.linalg.norm(lay.positions[0] - lay.positions[1]) == pytest.approx(1.0, abs=0.02)
    assert len(trace) == 201 and lay.iterations_run == 200


def test_fr_triangle_equilateral():
    lay, _ = fr_layout(complete_graph(3), DET.with_(iterations=300), seed=5)
    P = lay.positions
    sides = [np.linalg.norm(P[i] - P[j]) for i, j in ((0, 1), (0, 2), (1, 2))]
    assert sides == pytest.approx([1.0] * 3, abs=0.05)


def test_fr_layout_bookkeeping(rng):
    g = random_sparse_graph(12, 14, rng)
    params = LayoutParams(iterations=30)
    lay, trace = fr_layout(g, params, seed=11)
    assert lay.positions.shape == (12, 2)
    assert np.isfinite(lay.positions).all()
    assert lay.final_energy == trace[-1] == pytest.approx(fr_energy(lay.positions, g, params))
    start = random_layout(g, params, 11).positions
    assert trace[0] == pytest.approx(fr_energy(start, g, params))


def test_fr_layout_reproducible(rng):
    g = random_sparse_graph(10, 12, rng)
    a, _ = fr_layout(g, LayoutParams(), seed=99)
    b, _ = fr_layout(g, LayoutParams(), seed=99)
    c, _ = fr_layout(g, LayoutParams(), seed=100)
    assert a.positions.tobytes() == b.positions.tobytes()
    assert not np.array_equal(a.positions, c.positions)


def test_fr_energy_descends_on_sparse_graphs():
    hits5 = hits_end = 0
    trials = 40
    for s in range(trials):
        rng = np.random.default_rng(500 + s)
        g = random_sparse_graph(18, 20, rng)
        _, tr = fr_layout(g, LayoutParams(), seed=s)
        hits5 += bool((tr.values[1:6] < tr[0]).any())
        hits_end += bool(tr[-1] < tr[0])
    assert hits5 >= 0.95 * trials and hits_end >= 0.95 * trials


@pytest.mark.parametrize("d", [3, 4])
def test_higher_dimensions(rng, d):
    g = random_sparse_graph(10, 12, rng)
    for algo in ("fr", "ar", "kk"):
        lay, _ = compute_layout(g, LayoutParams(algorithm=algo, dim=d), seed=1)
        assert lay.positions.shape == (10, d) and np.isfinite(lay.positions).all()


def test_fr_permutation_equivariance(rng):
    for _ in range(5):
        n = 9
        g = random_sparse_graph(n, 11, rng)
        perm = rng.permutation(n)
        P0 = rng.uniform(-1, 1, (n, 2))
        P0_perm = np.empty_like(P0)
        P0_perm[perm] = P0
        base, _ = fr_layout(g, DET, seed=0, init=P0)
        moved, _ = fr_layout(g.relabel(perm), DET, seed=0, init=P0_perm)
        assert np.allclose(moved.positions[perm], base.positions, rtol=0, atol=1e-9)


# --- Kamada-Kawai ----------------------------------------------------------


def test_kk_energy_examples(rng):
    P = np.array([[0.0, 0.0], [2.0, 0.0]])
    ideal = kk_ideal_lengths(shortest_paths(path_graph(2)))
    assert kk_energy(P, ideal, 1.0) == pytest.approx(0.5)
    assert kk_delta(P, ideal, 1.0, 0) == pytest.approx(1.0)
    assert kk_delta(P, ideal, 1.0, 1) == pytest.approx(1.0)
    exact = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    ideal3 = kk_ideal_lengths(shortest_paths(path_graph(3)))
    assert kk_energy(exact, ideal3, 1.0) == 0.0
    assert all(kk_delta(exact, ideal3, 1.0, m) == 0.0 for m in range(3))
    g = gnp_graph(7, 0.5, rng)
    Q = well_separated(rng, 7, 2)
    ideal7 = kk_ideal_lengths(shortest_paths(g))
    assert kk_energy(2 * Q, 2 * ideal7, 1.0) == pytest.approx(4 * kk_energy(Q, ideal7, 1.0))


def test_kk_expanded_form_matches(rng):
    # E = sum 1/2 k (dx^2 + dy^2 + l^2 - 2 l sqrt(dx^2 + dy^2))
    g = gnp_graph(6, 0.5, rng)
    P = well_separated(rng, 6, 2)
    L = kk_ideal_lengths(shortest_paths(g))
    total = 0.0
    for i in range(6):
        for j in range(i + 1, 6):
            sq = ((P[i] - P[j]) ** 2).sum()
            total += 0.5 * 2.0 * (sq + L[i, j] ** 2 - 2 * L[i, j] * math.sqrt(sq))
    assert kk_energy(P, L, 2.0) == pytest.approx(total, rel=1e-12)


def test_kk_gradient_matches_finite_differences(rng):
    for _ in range(30):
        n, d = int(rng.integers(2, 9)), int(rng.integers(2, 4))
        g = gnp_graph(n, 0.5, rng)
        L = kk_ideal_lengths(shortest_paths(g))
        P = well_separated(rng, n, d)
        fd = central_gradient(lambda X: kk_energy(X, L, 1.5), P)
        assert rel_error(kk_gradient(P, L, 1.5), fd) < 1e-4
        for m in range(n):
            assert kk_delta(P, L, 1.5, m) == pytest.approx(np.linalg.norm(fd[m]), rel=1e-4, abs=1e-8)


def test_kk_sentinel_for_disconnected():
    L = kk_ideal_lengths(shortest_paths(Graph(4, ((0, 1),))))
    assert L[0, 2] == 6.0 and L[0, 1] == 1.0 and L[2, 2] == 0.0


def test_kk_pair():
    lay, _ = kk_layout(path_graph(2), LayoutParams(algorithm="kk"), seed=4)
    assert np.linalg.norm(lay.positions[0] - lay.positions[1]) == pytest.approx(1.0, abs=1e-3)
    assert lay.final_energy < 1e-6


def test_kk_path3_collinear():
    lay, _ = kk_layout(path_graph(3), LayoutParams(algorithm="kk"), seed=8)
    assert lay.final_energy < 1e-4


def test_kk_triangle():
    lay, _ = kk_layout(complete_graph(3), LayoutParams(algorithm="kk"), seed=2)
    P = lay.positions
    sides = [np.linalg.norm(P[i] - P[j]) for i, j in ((0, 1), (0, 2), (1, 2))]
    assert sides == pytest.approx([1.0] * 3, abs=1e-3)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 14), st.integers(0, 2**32 - 1), st.sampled_from([2, 3]))
def test_kk_trace_non_increasing(n, seed, d):
    rng = np.random.default_rng(seed)
    g = gnp_graph(n, 0.35, rng)
    lay, trace = kk_layout(g, LayoutParams(algorithm="kk", dim=d, iterations=20), seed=seed)
    assert (np.diff(trace.values) <= 1e-12 * max(1.0, abs(trace[0]))).all()
    assert len(trace) == lay.iterations_run + 1


# --- random layout ---------------------------------------------------------


def test_random_layout_deterministic():
    g = path_graph(5)
    a = random_layout(g, LayoutParams(), 17)
    b = random_layout(g, LayoutParams(), 17)
    assert np.array_equal(a.positions, b.positions)
    assert a.algorithm == "random" and a.iterations_run == 0


def test_random_layout_single_node():
    lay = random_layout(Graph(1, ()), LayoutParams(dim=3), 0)
    assert lay.positions.shape == (1, 3) and np.isfinite(lay.positions).all()


def test_random_layout_uniform_on_box():
    params = LayoutParams(init_box=2.0)
    coords = np.concatenate([random_layout(Graph(1, ()), params, s).positions.ravel() for s in range(10_000)])
    assert coords.min() >= -2.0 and coords.max() <= 2.0
    assert stats.kstest(coords, stats.uniform(loc=-2.0, scale=4.0).cdf).pvalue > 0.01


@pytest.mark.parametrize(
    "changes",
    [
        {"dim": 1},
        {"iterations": 0},
        {"k_attr": 0.0},
        {"step_size": -1.0},
        {"cooling": 0.0},
        {"cooling": 1.5},
        {"noise_scale": -0.1},
        {"algorithm": "spectral"},
        {"max_displacement": 0.0},
        {"a_exp": math.inf},
    ],
)
def test_params_validation(changes):
    with pytest.raises(ConfigError):
        LayoutParams(**changes)
