import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from inexact_oracle.methods import MethodParams, BudgetExhausted, sgd_strongly_convex
from inexact_oracle.oracles import (
    EntropySaddle, OracleSpec, eval_exact, eval_stochastic, inner_max_oracle, stochastic_oracle,
)
from inexact_oracle.problems import (
    QuadraticProblem, LinearProblem, FiniteSumProblem, finite_sum_problem, least_squares_components,
    quadratic_battery, entropy_saddle_value, exact_inner, generate_sparse_stochastic, two_cycle,
    PageRankInstance, pagerank_quadratic_value, pagerank_quadratic_grad, power_iteration_pagerank,
    IndexedHeap, DualHeap, pagerank_sparse_solver, bilinear_gap, pagerank_matrix, saddle_budget,
    pagerank_saddle_solver,
)
from inexact_oracle.spaces import SparseMatrix, make_rng, read_matrix_market, write_matrix_market


# ---- simple problems ------------------------------------------------------

def test_quadratic_and_linear():
    q = QuadraticProblem([2.0, 0.5], x_star=np.array([1.0, -1.0]))
    assert q.spec.L == 2.0 and q.spec.mu == 0.5
    assert q.value(np.array([1.0, -1.0])) == 0.0
    b = quadratic_battery(10, 4)
    assert b.spec.L == pytest.approx(1.0) and b.spec.mu == pytest.approx(1e-4)
    lp = LinearProblem([0.3, -0.2, 0.1], r=2.0)
    assert lp.f_star == pytest.approx(-0.4)


def test_finite_sum():
    rng = make_rng(0)
    A, b = rng.standard_normal((1, 3)), rng.standard_normal(1)
    one = finite_sum_problem(least_squares_components(A, b), 3)
    x = rng.standard_normal(3)
    assert eval_stochastic(one, x, rng).grad == pytest.approx(eval_exact(one, x).grad)
    A, b = rng.standard_normal((4, 3)), rng.standard_normal(4)
    fs = finite_sum_problem(least_squares_components(A, b, 0.2), 3)
    enum = np.mean([fs.grad_xi(x, k) for k in range(4)], axis=0)
    assert enum == pytest.approx(fs.grad(x), abs=1e-14)
    H = A.T @ A / 4 + 0.2 * np.eye(3)
    assert fs.grad(x) == pytest.approx(H @ x - A.T @ b / 4)
    with pytest.raises(ValueError):
        FiniteSumProblem([], 3)


def test_finite_sum_sgd_gap():
    rng = make_rng(1)
    m, n, ridge = 40, 10, 0.5
    A, b = rng.standard_normal((m, n)) / math.sqrt(n), rng.standard_normal(m)
    fs = finite_sum_problem(least_squares_components(A, b, ridge), n)
    H = A.T @ A / m + ridge * np.eye(n)
    xs = np.linalg.solve(H, A.T @ b / m)
    mu = float(np.linalg.eigvalsh(H).min())
    # bound on the stochastic gradients over the path (measured along the run)
    N = 5000
    gaps, Ms = [], []
    for seed in range(3):
        tr = sgd_strongly_convex(fs, MethodParams(N=N, spec=OracleSpec(mu=mu), seed=seed,
                                                  x0=tuple(np.zeros(n)), record_values=False),
                                 oracle=stochastic_oracle(fs))
        gaps.append(fs.value(tr.x_out) - fs.value(xs))
        Ms.append(max(tr.grad_norms))
    M = max(Ms)
    assert np.mean(gaps) <= 4 * M * M / (mu * N)


# ---- entropy saddle closed form -------------------------------------------

def test_entropy_saddle_closed_form():
    s0 = EntropySaddle(np.zeros((3, 5)))
    for x in make_rng(2).standard_normal((3, 3)):
        assert entropy_saddle_value(s0, x) == pytest.approx(math.log(5))
        assert exact_inner(s0, x) == pytest.approx(np.full(5, 0.2))
    m = 4
    sI = EntropySaddle(np.eye(m))
    for t in (-3.0, 0.0, 2.5, 700.0):
        x = np.zeros(m)
        x[0] = t
        direct = t + math.log(1 + (m - 1) * math.exp(-t)) if t > 0 else math.log(math.exp(t) + m - 1)
        assert entropy_saddle_value(sI, x) == pytest.approx(direct, rel=1e-13)
    rng = make_rng(3)
    B = rng.standard_normal((4, 4))
    s = EntropySaddle(B)
    for x in rng.standard_normal((5, 4)):
        fd = np.array([(entropy_saddle_value(s, x + 1e-6 * e) - entropy_saddle_value(s, x - 1e-6 * e)) / 2e-6
                       for e in np.eye(4)])
        assert B @ exact_inner(s, x) == pytest.approx(fd, abs=1e-5)
        reply, _ = inner_max_oracle(s, x, 1e-6)
        assert reply.value == pytest.approx(entropy_saddle_value(s, x), abs=1e-6)


# ---- generator ------------------------------------------------------------

def test_generator_small_and_errors():
    P = generate_sparse_stochastic(2, 2, seed=0)
    assert P.toarray()[0, 1] > 0 and P.toarray()[1, 0] > 0
    assert P.row_sums() == pytest.approx([1, 1], abs=1e-12)
    for n, s in ((1, 2), (5, 1), (3, 4)):
        with pytest.raises(ValueError):
            generate_sparse_stochastic(n, s)


def test_generator_counts_over_seeds():
    for seed in range(100):
        P = generate_sparse_stochastic(1000, 5, seed=seed)
        assert np.all(np.abs(P.row_sums() - 1) <= 1e-12)
        assert P.s_max_row <= 5 and P.s_max_col <= 5
    a = generate_sparse_stochastic(50, 4, seed=7).toarray()
    assert np.array_equal(a, generate_sparse_stochastic(50, 4, seed=7).toarray())


def test_generator_irreducible():
    P = generate_sparse_stochastic(60, 3, seed=2).toarray()
    reach = np.eye(60, dtype=bool)
    adj = P > 0
    for _ in range(60):
        reach = reach | (reach.astype(int) @ adj.astype(int) > 0)
    assert reach.all()


def test_matrix_market_sidecar(tmp_path):
    P = generate_sparse_stochastic(30, 3, seed=5)
    path = tmp_path / "p.mtx"
    write_matrix_market(path, P, comments=["generator n=30 s=3 seed=5"])
    assert "% generator n=30 s=3 seed=5" in path.read_text()
    Q = read_matrix_market(path, stochastic=True)
    assert np.array_equal(Q.toarray(), P.toarray())


# ---- quadratic-penalty PageRank -------------------------------------------

def test_pagerank_objective():
    P = generate_sparse_stochastic(40, 4, seed=1)
    inst = PageRankInstance(P)
    p = power_iteration_pagerank(P)
    assert pagerank_quadratic_value(inst, p) <= 1e-20
    assert np.abs(pagerank_quadratic_grad(inst, p)).max() <= 1e-12
    x = make_rng(0).random(40)
    r = inst.A_matvec(x)
    assert inst.value(x) == pytest.approx(0.5 * r @ r)
    assert inst.A_matvec(x) == pytest.approx((P.toarray().T - np.eye(40)) @ x)
    with pytest.raises(ValueError):
        PageRankInstance(SparseMatrix.from_dense([[0.5, 0.4], [0, 1.0]]))
    with pytest.raises(ValueError):
        PageRankInstance(two_cycle(), gamma=0.0)


def test_pagerank_gradient_finite_differences():
    inst = PageRankInstance(generate_sparse_stochastic(5, 3, seed=2), gamma=1.0)
    rng = make_rng(4)
    for _ in range(10):
        x = rng.standard_normal(5)
        fd = np.array([(inst.value(x + 1e-6 * e) - inst.value(x - 1e-6 * e)) / 2e-6 for e in np.eye(5)])
        assert inst.grad(x) == pytest.approx(fd, abs=1e-5)


def test_two_cycle_L():
    assert PageRankInstance(two_cycle(), gamma=1.0).L == 3.0
    assert PageRankInstance(two_cycle(), gamma=0.5).L == 2.5


# ---- heaps ----------------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=40),
       st.lists(st.tuples(st.integers(0, 39), st.floats(-10, 10)), max_size=60))
def test_dual_heap_matches_scan(keys, updates):
    keys = np.array(keys)
    h = DualHeap(keys)
    assert h.check(keys)
    for idx, v in updates:
        idx %= keys.size
        keys[idx] = v
        h.update(idx, v)
        assert h.check(keys)


def test_indexed_heap_ties_and_swaps():
    h = IndexedHeap([3.0, 1.0, 1.0, 2.0])
    assert h.top() == 1
    assert h.update(3, 0.0) >= 1 and h.top() == 3
    hm = IndexedHeap([3.0, 5.0, 5.0], sign=-1)
    assert hm.top() == 1


# ---- sparse two-coordinate solver -----------------------------------------

def test_sparse_solver_two_cycle():
    inst = PageRankInstance(two_cycle())
    tr = pagerank_sparse_solver(inst, 1e-4)
    assert tr.x_out == pytest.approx([0.5, 0.5])
    assert tr.meta["final_value"] <= 1e-8


def test_sparse_solver_invariants():
    P = generate_sparse_stochastic(1000, 5, seed=0)
    inst = PageRankInstance(P)
    eps = 1e-2
    tr = pagerank_sparse_solver(inst, eps, resync_every=500)
    assert set(tr.meta["step_nnz"]) == {2}
    assert tr.meta["final_value"] <= eps * eps
    assert abs(tr.x_out.sum() - 1) <= 1e-12
    assert tr.meta["max_drift"] <= 1e-8
    # f <= eps^2 gives ||Ax||_2 <= sqrt(2) eps, and the inf-norm is dominated by it
    assert tr.meta["residual_inf"] <= tr.meta["residual_2"] <= math.sqrt(2) * eps
    assert tr.meta["c"] <= 1.0


def test_sparse_solver_work_law_larger():
    P = generate_sparse_stochastic(10_000, 10, seed=1)
    tr = pagerank_sparse_solver(PageRankInstance(P), 1e-2)
    assert tr.meta["touch_max"] <= 1.0 * 100 * math.log2(10_000)


def test_sparse_solver_budget():
    inst = PageRankInstance(generate_sparse_stochastic(200, 4, seed=3))
    with pytest.raises(BudgetExhausted) as info:
        pagerank_sparse_solver(inst, 1e-6, budget=10)
    assert info.value.trace.iterations == 10


# ---- randomized saddle solver ---------------------------------------------

def test_pagerank_matrix_and_gap():
    P = generate_sparse_stochastic(6, 3, seed=0)
    A = pagerank_matrix(P)
    assert A.toarray() == pytest.approx(P.toarray().T - np.eye(6))
    x = make_rng(0).dirichlet(np.ones(6))
    y = make_rng(1).dirichlet(np.ones(6))
    Ad = A.toarray()
    assert bilinear_gap(A, x, y) == pytest.approx((Ad @ x).max() - (Ad.T @ y).min())
    assert bilinear_gap(A, power_iteration_pagerank(P), np.full(6, 1 / 6)) >= -1e-12
    assert saddle_budget(100, 0.1) == math.ceil(800 * math.log(100))


def test_saddle_two_cycle():
    r = pagerank_saddle_solver(pagerank_matrix(two_cycle()), 0.01, seed=0)
    assert r.gap <= 0.01 and r.x == pytest.approx([0.5, 0.5], abs=0.01)


def test_saddle_identity_is_solved_immediately():
    I = SparseMatrix.from_dense(np.eye(4))
    r = pagerank_saddle_solver(pagerank_matrix(I), 0.05)
    assert r.gap == 0.0 and r.iterations == 1


def test_saddle_sparse_instance_and_budget():
    A = pagerank_matrix(generate_sparse_stochastic(100, 20, seed=1, skew=3.0))
    r = pagerank_saddle_solver(A, 0.1, seed=0)
    assert r.gap <= 0.1 and r.iterations <= saddle_budget(100, 0.1, A.max_abs)
    hist = []
    with pytest.raises(BudgetExhausted) as info:
        pagerank_saddle_solver(A, 0.01, budget=50, history=hist)
    assert info.value.result.iterations == 50 and hist[-1][0] == 50
