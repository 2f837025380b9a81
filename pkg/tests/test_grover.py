import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import unitary_group

from qsearch.grover import (
    AngleParams,
    NoAmplificationError,
    amplitude_amplify,
    classical_baselines,
    factorized_search,
    grover_iterate,
    optimal_queries,
    random_stopping_mean,
    restricted_rotation,
    rotation_eigenpairs,
    run_grover,
    solve_n_for_q,
    success_probability,
)
from qsearch.hilbert import DimensionError, StateVector, uniform_state


def dense_grover(n, marked):
    """-U_s U_t as an explicit matrix."""
    s = np.full(n, 1 / math.sqrt(n))
    u_s = np.eye(n) - 2 * np.outer(s, s)
    u_t = np.eye(n)
    for i in marked:
        u_t[i, i] = -1
    return -u_s @ u_t


def brute_force_q(n, m, q_cap=10_000):
    theta = math.asin(math.sqrt(m / n))
    best_q, best_p = 0, math.sin(theta) ** 2
    q = 1
    # walk the first rise of sin^2((2q+1) theta) and stop once it falls
    while q < q_cap:
        p = math.sin((2 * q + 1) * theta) ** 2
        if p > best_p + 1e-12:
            best_q, best_p = q, p
        elif p < best_p - 1e-12:
            break
        q += 1
    return best_q, best_p


def test_angle_params():
    a = AngleParams.for_counts(4, 1)
    assert a.theta == pytest.approx(math.pi / 6)
    assert a.per_query_rotation == 2 * a.theta
    assert AngleParams.for_counts(3, 3).theta == pytest.approx(math.pi / 2)


def test_four_items_one_query():
    out = grover_iterate(uniform_state(4), [0])
    np.testing.assert_allclose(out.amps, [1, 0, 0, 0], atol=1e-15)


def test_all_marked_stays_put():
    run = run_grover(16, range(16), 2)
    assert all(p == pytest.approx(1.0) for _, p in run.trace)


def test_eight_items_one_iteration_matches_dense():
    dense = dense_grover(8, [5]) @ np.full(8, 1 / math.sqrt(8))
    out = grover_iterate(uniform_state(8), [5])
    np.testing.assert_allclose(out.amps, dense, atol=1e-14)
    assert abs(out.amps[5]) ** 2 == pytest.approx(math.sin(3 * math.asin(1 / math.sqrt(8))) ** 2, abs=1e-12)
    assert abs(out.amps[5]) ** 2 == pytest.approx(25 / 32, abs=1e-12)


def test_iterate_errors():
    with pytest.raises(ValueError):
        grover_iterate(uniform_state(4), [])
    with pytest.raises(IndexError):
        grover_iterate(uniform_state(4), [4])


def test_trace_shape():
    run = run_grover(64, [3], 5)
    assert run.q_performed == 5
    assert len(run.trace) == 6
    assert all(0 <= p <= 1 for _, p in run.trace)


@pytest.mark.parametrize("n,m", [(4, 1), (1, 1), (100, 1), (16, 4), (1000, 1), (1024, 3), (37, 5)])
def test_optimal_queries_vs_brute_force(n, m):
    q, p = optimal_queries(n, m)
    bq, bp = brute_force_q(n, m)
    assert (q, p) == (bq, pytest.approx(bp, abs=1e-15))
    assert p > 1 - m / n


def test_optimal_queries_examples():
    assert optimal_queries(4, 1) == (1, pytest.approx(1.0))
    assert optimal_queries(1, 1) == (0, pytest.approx(1.0))
    q, p = optimal_queries(100, 1)
    assert q == 7 and p == pytest.approx(0.995344, abs=1e-6)
    q, p = optimal_queries(16, 4)
    assert q == 1 and p == pytest.approx(1.0, abs=1e-12)
    assert run_grover(16, [0, 1, 2, 3], 1).trace[-1][1] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n,m", [(4, 0), (4, 5)])
def test_optimal_queries_bad_counts(n, m):
    with pytest.raises(ValueError):
        optimal_queries(n, m)


def test_solve_n_for_q():
    assert solve_n_for_q(1) == pytest.approx(4.0, abs=1e-12)
    assert solve_n_for_q(2) == pytest.approx(10.47, abs=0.01)
    assert solve_n_for_q(3) == pytest.approx(20.20, abs=0.01)
    with pytest.raises(ValueError):
        solve_n_for_q(0)


def test_solve_n_for_q_roundtrip():
    for q in range(1, 8):
        n = solve_n_for_q(q)
        assert math.sin((2 * q + 1) * math.asin(1 / math.sqrt(n))) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_success_probability_examples():
    assert success_probability(4, 1, 1) == pytest.approx(1.0)
    assert success_probability(50, 3, 0) == pytest.approx(3 / 50)
    dense = np.linalg.matrix_power(dense_grover(8, [0]), 2) @ np.full(8, 1 / math.sqrt(8))
    assert success_probability(8, 1, 2) == pytest.approx(abs(dense[0]) ** 2, abs=1e-12)
    assert success_probability(8, 1, 2) == pytest.approx(0.9453, abs=1e-4)


@settings(max_examples=30, deadline=None)
@given(k=st.integers(2, 8), m=st.sampled_from([1, 2, 4]), seed=st.integers(0, 10**6))
def test_state_vector_matches_dense(k, m, seed):
    n = 2**k
    rng = np.random.default_rng(seed)
    marked = rng.choice(n, size=min(m, n), replace=False)
    g = dense_grover(n, marked)
    v = np.full(n, 1 / math.sqrt(n))
    run = run_grover(n, marked, 6)
    for q, p in run.trace:
        assert p == pytest.approx(float(np.sum(np.abs(v[marked]) ** 2)), abs=1e-12)
        v = g @ v


def test_confined_to_two_dim_subspace():
    n, t = 256, 17
    s = np.full(n, 1 / math.sqrt(n))
    e = np.zeros(n)
    e[t] = 1
    tperp = (s - s[t] * e) / np.linalg.norm(s - s[t] * e)
    a = uniform_state(n).amps
    for _ in range(40):
        a = grover_iterate(StateVector(a), [t]).amps
        rest = a - np.vdot(e, a) * e - np.vdot(tperp, a) * tperp
        assert np.linalg.norm(rest) < 1e-10


def _restricted_numeric(n):
    g = dense_grover(n, [0])
    s = np.full(n, 1 / math.sqrt(n))
    e = np.eye(n)[0]
    tperp = (s - s[0] * e) / np.linalg.norm(s - s[0] * e)
    b = np.column_stack([e, tperp])
    return b.T @ g @ b


@pytest.mark.parametrize("n", [4, 64, 1000])
def test_restricted_rotation_matches_dense(n):
    np.testing.assert_allclose(restricted_rotation(n), _restricted_numeric(n), atol=1e-12)


def test_eigenpairs():
    vals = sorted((v for v, _ in rotation_eigenpairs(4)), key=lambda z: z.imag)
    assert vals[0] == pytest.approx(np.exp(-1j * math.pi / 3))
    assert vals[1] == pytest.approx(np.exp(1j * math.pi / 3))
    g2 = _restricted_numeric(64)
    for lam, vec in rotation_eigenpairs(64):
        assert np.max(np.abs(g2 @ vec - lam * vec)) < 1e-10
    lam_big = rotation_eigenpairs(10**12)[0][0]
    assert abs(lam_big - 1) < 1e-5
    with pytest.raises(DimensionError):
        rotation_eigenpairs(1)


def test_random_stopping_half():
    assert random_stopping_mean(1024, 100_000, seed=7) == pytest.approx(0.5, abs=0.01)


def test_random_stopping_deterministic_at_optimum():
    assert random_stopping_mean(4, 10, seed=0, window=1, start=1) == pytest.approx(1.0)


def test_period_average_analytic():
    theta = math.asin(1 / math.sqrt(1024))
    period = math.pi / theta
    # average over many periods of the stroboscopic samples
    qs = np.arange(int(round(20 * period)))
    assert np.mean(np.sin((2 * qs + 1) * theta) ** 2) == pytest.approx(0.5, abs=1e-3)


def test_random_stopping_reproducible():
    assert random_stopping_mean(256, 1000, seed=3) == random_stopping_mean(256, 1000, seed=3)


def test_amplify_identity_is_grover():
    n = 64
    q, p = amplitude_amplify(np.eye(n), 0, 0, n)
    # V = 1: |<t|s>| = 1, nothing to do
    assert (q, p) == (0, pytest.approx(1.0))


def test_amplify_uniform_builder():
    n = 64
    # Householder map sending e_0 to |s>
    s = np.full(n, 1 / math.sqrt(n))
    u = s - np.eye(n)[0]
    v = np.eye(n) - 2 * np.outer(u, u) / np.dot(u, u)
    assert np.allclose(v[:, 0], s)
    q, p = amplitude_amplify(v, 0, 5, n)
    assert (q, p) == (optimal_queries(n)[0], pytest.approx(optimal_queries(n)[1], abs=1e-9))


def test_amplify_random_unitary():
    n = 16
    v = unitary_group.rvs(n, random_state=1234)
    theta = math.asin(abs(v[3, 0]))
    q, p = amplitude_amplify(v, 0, 3, n)
    assert p == pytest.approx(math.sin((2 * q + 1) * theta) ** 2, abs=1e-9)
    assert p > abs(v[3, 0]) ** 2


def test_amplify_callable_matches_dense():
    n = 16
    v = unitary_group.rvs(n, random_state=99)
    dense = amplitude_amplify(v, 2, 7, n)
    fn = amplitude_amplify(lambda x: v @ x, 2, 7, n, v_adjoint=lambda x: v.conj().T @ x)
    assert dense[0] == fn[0] and dense[1] == pytest.approx(fn[1], abs=1e-12)


def test_amplify_zero_overlap():
    v = np.eye(4)[[1, 0, 2, 3]]
    with pytest.raises(NoAmplificationError):
        amplitude_amplify(v, 0, 0, 4)


def test_factorized_search():
    assert factorized_search(16, 11) == (2, 11)
    assert factorized_search(4, 2) == (1, 2)
    q, found = factorized_search(4096, 3001)
    assert (q, found) == (6, 3001)
    with pytest.raises(ValueError):
        factorized_search(32, 1)


def test_classical_baselines():
    c = classical_baselines(1024)
    assert (c.binary_sorted, c.unsorted_mean_with_memory, c.unsorted_mean_memoryless) == (10, 512.5, 1024)
    c = classical_baselines(1)
    assert (c.binary_sorted, c.unsorted_mean_with_memory, c.unsorted_mean_memoryless) == (0, 1, 1)
    c = classical_baselines(4)
    assert (c.binary_sorted, c.unsorted_mean_with_memory, c.unsorted_mean_memoryless) == (2, 2.5, 4)
    assert classical_baselines(1000).binary_sorted == math.ceil(math.log2(1000))
