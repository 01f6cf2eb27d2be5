"""Partial-support l1 solver and restricted least squares."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import (
    enumeration_instances,
    needs_cvxpy,
    sparsest_solutions,
    vertex_l1_minimum,
)
from modcs.l1min import (
    DEFAULT_OPTIONS,
    InfeasibleProblemError,
    PartialL1Solver,
    RankDeficiencyError,
    SolverOptions,
    least_squares_on_support,
    solve_partial_l1,
)
from modcs.sensing import gaussian_matrix

TIGHT = SolverOptions(opt_tol=1e-9, feas_tol=1e-9, max_iters=60000)


def sparse_instance(n, m, k, seed, noise=0.0):
    rng = np.random.default_rng(seed)
    A = gaussian_matrix(n, m, seed=seed)
    x = np.zeros(m)
    support = rng.choice(m, size=k, replace=False)
    x[support] = rng.choice([-1.0, 1.0], size=k) * rng.uniform(1.0, 2.0, size=k)
    w = rng.normal(size=n)
    w *= noise / max(np.linalg.norm(w), 1e-30)
    return A, x, A @ x + w, support


# ---------------------------------------------------------------------------
# exact recovery / identity cases
# ---------------------------------------------------------------------------


def test_oracle_support_identity():
    # T = true support, epsilon = 0: objective 0 forces beta zero off T,
    # and the equality constraint pins beta on T
    A, x, y, support = sparse_instance(10, 25, 4, seed=0)
    res = solve_partial_l1(A, y, T=support, epsilon=0.0, options=TIGHT)
    assert res.converged
    assert res.objective <= 1e-7
    assert np.linalg.norm(res.beta - x) <= 1e-6 * np.linalg.norm(x)


def test_noise_free_basis_pursuit_recovery():
    A, x, y, _ = sparse_instance(20, 40, 3, seed=1)
    res = solve_partial_l1(A, y, T=None, epsilon=0.0, options=TIGHT)
    assert np.linalg.norm(res.beta - x) <= 1e-6 * np.linalg.norm(x)


def test_zero_rhs():
    A = gaussian_matrix(8, 20, seed=2)
    res = solve_partial_l1(A, np.zeros(8), T=None, epsilon=0.0)
    assert np.allclose(res.beta, 0.0, atol=1e-9)
    assert res.objective == pytest.approx(0.0, abs=1e-12)


def test_epsilon_zero_infeasible():
    # y outside range(A) with equality constraint cannot be satisfied
    A = np.zeros((3, 6))
    A[0, 0] = A[1, 1] = 1.0  # third row identically zero
    y = np.array([1.0, 2.0, 3.0])
    with pytest.raises(InfeasibleProblemError):
        solve_partial_l1(A, y, T=None, epsilon=0.0)


# ---------------------------------------------------------------------------
# brute-force enumeration oracles
# ---------------------------------------------------------------------------


def test_matches_vertex_enumeration():
    # The equality-constrained l1 program is a linear program, so its optimum
    # is attained at a basic solution.  Enumerating every invertible n-column
    # basis computes the exact optimum with no assumptions on the instance,
    # so this holds even where l1 and sparsest-support solutions differ.
    for seed in range(25):
        rng = np.random.default_rng((905, seed))
        n = int(rng.integers(5, 9))
        m = int(rng.integers(n + 1, 11))
        A, x, y, _ = sparse_instance(n, m, 2, seed=seed + 300)
        opt = vertex_l1_minimum(A, y)
        res = solve_partial_l1(A, y, T=None, epsilon=0.0, options=TIGHT)
        assert res.objective == pytest.approx(opt, abs=1e-6 * (1 + opt))


def test_matches_sparsest_enumeration():
    # noise-free instances small enough to enumerate every support, sized so
    # the l1 relaxation recovers the sparsest solution (see conftest notes)
    matched = 0
    for A, x, y, support in enumeration_instances(40, master_seed=0):
        k = len(support)
        size, hits = sparsest_solutions(A, y, kmax=k)
        assert size == k  # generic draws admit nothing sparser
        if len(hits) != 1:
            continue  # sparsest support not unique: skip per contract
        enum_obj = np.abs(hits[0][1]).sum()
        res = solve_partial_l1(A, y, T=None, epsilon=0.0, options=TIGHT)
        assert res.objective == pytest.approx(enum_obj, abs=1e-5 * (1 + enum_obj))
        matched += 1
    assert matched >= 36  # uniqueness holds for almost every draw


def test_example_instance_sparsest_match():
    # documented operating point: 5x8 system, 2-sparse signal, no noise
    A, x, y, support = sparse_instance(5, 8, 2, seed=7)
    size, hits = sparsest_solutions(A, y, kmax=2)
    assert size == 2 and len(hits) == 1
    assert tuple(sorted(support)) == hits[0][0]
    enum_obj = np.abs(hits[0][1]).sum()
    res = solve_partial_l1(A, y, T=None, epsilon=0.0, options=TIGHT)
    assert res.objective == pytest.approx(enum_obj, abs=1e-5 * (1 + enum_obj))
    assert res.objective == pytest.approx(vertex_l1_minimum(A, y),
                                          abs=1e-6 * (1 + enum_obj))
    assert np.linalg.norm(res.beta - x) <= 1e-5 * np.linalg.norm(x)


# ---------------------------------------------------------------------------
# generic convex-programming oracle
# ---------------------------------------------------------------------------


@needs_cvxpy
@pytest.mark.parametrize("seed,k,tsize,eps_scale", [
    (0, 3, 0, 0.3), (1, 3, 2, 0.3), (2, 4, 4, 0.1),
    (3, 2, 1, 1.0), (4, 5, 3, 0.05),
])
def test_objective_matches_cvxpy(seed, k, tsize, eps_scale):
    import cvxpy as cp

    rng = np.random.default_rng((901, seed))
    n, m = 12, 20
    A, x, y, support = sparse_instance(n, m, k, seed=seed + 50,
                                       noise=eps_scale * 0.5)
    epsilon = eps_scale
    T = rng.choice(support, size=tsize, replace=False) if tsize else None

    beta = cp.Variable(m)
    mask = np.ones(m, dtype=bool)
    if T is not None:
        mask[T] = False
    prob = cp.Problem(cp.Minimize(cp.norm1(beta[mask])),
                      [cp.norm(y - A @ beta, 2) <= epsilon])
    prob.solve(solver=cp.CLARABEL)
    assert prob.status == "optimal"

    res = solve_partial_l1(A, y, T=T, epsilon=epsilon, options=TIGHT)
    assert res.converged
    assert res.objective == pytest.approx(prob.value, abs=2e-6 * (1 + prob.value))


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------


def test_feasibility_invariant():
    for seed in range(6):
        A, x, y, support = sparse_instance(12, 30, 4, seed=seed, noise=0.2)
        res = solve_partial_l1(A, y, T=support[:2], epsilon=0.25)
        assert res.converged
        assert res.residual_norm <= 0.25 * (1 + DEFAULT_OPTIONS.feas_tol) + 1e-12


def test_objective_monotone_in_support():
    # enlarging T shrinks the penalized set, so the optimum cannot grow
    A, x, y, support = sparse_instance(12, 30, 5, seed=7, noise=0.1)
    sets = [None, support[:1], support[:3], support]
    objs = [solve_partial_l1(A, y, T=T, epsilon=0.15, options=TIGHT).objective
            for T in sets]
    for a, b in zip(objs, objs[1:]):
        assert b <= a + 1e-6 * (1 + abs(a))


def test_objective_never_exceeds_truth():
    # the true signal is feasible whenever ||w|| <= epsilon
    for seed in range(5):
        A, x, y, _ = sparse_instance(14, 28, 4, seed=seed + 20, noise=0.3)
        res = solve_partial_l1(A, y, T=None, epsilon=0.3, options=TIGHT)
        assert res.objective <= np.abs(x).sum() + 1e-6


def test_solver_reuse_matches_oneoff():
    A, x, y, support = sparse_instance(10, 22, 3, seed=3, noise=0.1)
    solver = PartialL1Solver(A, options=TIGHT)
    r1 = solver.solve(y, T=support[:1], epsilon=0.12)
    r2 = solve_partial_l1(A, y, T=support[:1], epsilon=0.12, options=TIGHT)
    assert r1.objective == pytest.approx(r2.objective, rel=1e-9)
    assert np.allclose(r1.beta, r2.beta, atol=1e-9)


def test_unconverged_flag():
    A, x, y, _ = sparse_instance(12, 30, 4, seed=9, noise=0.2)
    res = solve_partial_l1(A, y, epsilon=0.25,
                           options=SolverOptions(opt_tol=1e-12, max_iters=3))
    assert not res.converged
    assert res.iterations == 3


def test_support_index_validation():
    A = gaussian_matrix(6, 10, seed=0)
    y = np.zeros(6)
    with pytest.raises(ValueError):
        solve_partial_l1(A, y, T=[10], epsilon=0.1)
    with pytest.raises(ValueError):
        solve_partial_l1(A, y, T=[-1], epsilon=0.1)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6), k=st.integers(1, 4),
       eps=st.sampled_from([0.05, 0.2, 0.5]))
def test_feasibility_property(seed, k, eps):
    A, x, y, support = sparse_instance(12, 24, k, seed=seed, noise=0.8 * eps)
    res = solve_partial_l1(A, y, T=support[:k // 2], epsilon=eps)
    if res.converged:
        assert res.residual_norm <= eps * (1 + 1e-6) + 1e-12
        assert res.objective <= np.abs(x).sum() + 1e-5


# ---------------------------------------------------------------------------
# restricted least squares
# ---------------------------------------------------------------------------


def test_ls_empty_support():
    A = gaussian_matrix(6, 12, seed=0)
    out = least_squares_on_support(A, np.ones(6), T=[])
    assert np.array_equal(out, np.zeros(12))


def test_ls_consistent_system_exact():
    A = gaussian_matrix(8, 16, seed=1)
    T = [2, 5, 11]
    c = np.array([1.5, -2.0, 0.25])
    y = A[:, T] @ c
    out = least_squares_on_support(A, y, T)
    assert np.allclose(out[T], c, atol=1e-10)
    off = np.delete(out, T)
    assert np.all(off == 0)


def test_ls_matches_normal_equations():
    rng = np.random.default_rng(5)
    A = gaussian_matrix(10, 20, seed=4)
    T = [0, 3, 7, 12, 19]
    y = rng.normal(size=10)
    out = least_squares_on_support(A, y, T)
    G = A[:, T].T @ A[:, T]
    ref = np.linalg.solve(G, A[:, T].T @ y)
    assert np.allclose(out[T], ref, atol=1e-9)


def test_ls_residual_orthogonality():
    rng = np.random.default_rng(6)
    A = gaussian_matrix(12, 24, seed=6)
    T = [1, 4, 9, 16]
    y = rng.normal(size=12)
    out = least_squares_on_support(A, y, T)
    resid = y - A @ out
    assert np.allclose(A[:, T].T @ resid, 0.0, atol=1e-9)


def test_ls_overdetermined_support_error():
    A = gaussian_matrix(4, 10, seed=0)
    with pytest.raises(RankDeficiencyError):
        least_squares_on_support(A, np.ones(4), T=[0, 1, 2, 3, 4])


def test_ls_rank_deficient_columns():
    # duplicated columns: minimum-norm solution splits the coefficient
    A = np.zeros((4, 6))
    A[0, 0] = A[0, 1] = 1.0
    A[1, 2] = 1.0
    y = np.array([2.0, 0.0, 0.0, 0.0])
    out = least_squares_on_support(A, y, T=[0, 1])
    assert out[0] == pytest.approx(1.0, abs=1e-9)
    assert out[1] == pytest.approx(1.0, abs=1e-9)
