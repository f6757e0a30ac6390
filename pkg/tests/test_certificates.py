import numpy as np
import pytest

from inexact_oracle.certificates import (
    Certificate, UnsupportedDomain, InconsistentSystem, averaged_point, linear_maximizer,
    duality_gap, spectral_norm, dual_least_norm, pagerank_system,
)
from inexact_oracle.methods import RunTrace, MethodParams, mirror_descent, fgm
from inexact_oracle.oracles import OracleSpec
from inexact_oracle.problems import LinearProblem, QuadraticProblem, two_cycle, generate_sparse_stochastic
from inexact_oracle.spaces import (
    Simplex, Ball2, BallQ, Box, AffineSum, SparseMatrix, entropy_setup, euclidean_setup, make_rng,
)


def manual_trace(points, grads, lambdas):
    return RunTrace("manual", points=[np.asarray(p, float) for p in points],
                    grads=[np.asarray(g, float) for g in grads], lambdas=list(map(float, lambdas)))


# ---- averaged point -------------------------------------------------------

def test_averaged_point():
    xb = np.array([0.2, 0.8])
    assert averaged_point(manual_trace([xb] * 3, [xb] * 3, [1, 2, 3])) == pytest.approx(xb)
    a, b = np.array([0.0, 1.0]), np.array([1.0, 0.0])
    assert averaged_point(manual_trace([a, b], [a, b], [1, 1])) == pytest.approx([0.5, 0.5])
    X = make_rng(0).standard_normal((5, 3))
    lam = np.arange(1, 6)
    expected = sum(k * X[k - 1] for k in range(1, 6)) / 15
    assert averaged_point(manual_trace(X, X, lam)) == pytest.approx(expected, abs=1e-15)
    with pytest.raises(ValueError):
        averaged_point(manual_trace([a], [a], [0.0]))


# ---- linear maximization and gap ------------------------------------------

def test_linear_maximizer_domains():
    c = np.array([1.0, -3.0, 2.0])
    assert linear_maximizer(Simplex(2.0), c)[1] == 4.0
    u, v = linear_maximizer(Ball2(2.0), c)
    assert v == pytest.approx(2 * np.linalg.norm(c)) and np.linalg.norm(u) == pytest.approx(2.0)
    u, v = linear_maximizer(BallQ(1.0, 1.0), c)
    assert v == 3.0 and list(u) == [0, -1, 0]
    u, v = linear_maximizer(Box((-1, -1, 0), (1, 2, 1)), c)
    assert list(u) == [1, -1, 1] and v == 6.0
    with pytest.raises(UnsupportedDomain):
        linear_maximizer(AffineSum(1.0), c)


def test_gap_zero_at_optimal_vertex():
    c = np.array([0.5, -1.0, 2.0])
    e = np.array([0.0, 1.0, 0.0])
    cert = duality_gap(manual_trace([e], [c], [1.0]), Simplex(1.0))
    assert isinstance(cert, Certificate) and cert.gap_value == 0.0
    assert list(cert.witness) == [0, 1, 0]


def test_gap_linear_vertex_enumeration():
    rng = make_rng(1)
    n, r = 6, 2.0
    c = rng.standard_normal(n)
    pb = LinearProblem(c, r)
    tr = mirror_descent(pb, entropy_setup(r), MethodParams(N=40, spec=pb.spec, R=r * np.sqrt(np.log(n)),
                                                           record_points=True))
    cert = duality_gap(tr, Simplex(r))
    lam = np.array(tr.lambdas)
    avg_val = float(lam @ (np.array(tr.points) @ c)) / lam.sum()
    # max over vertices r e_j of (1/S) sum lam_k <c, x_k - r e_j>
    enum = max(avg_val - r * c[j] for j in range(n))
    assert cert.gap_value == pytest.approx(enum, rel=1e-12)
    assert cert.weights == tuple(tr.lambdas)
    with pytest.raises(ValueError):
        duality_gap(RunTrace("empty"), Simplex(1.0))


def test_gap_dominates_true_gap_random_traces():
    rng = make_rng(2)
    dom = Ball2(1.0)
    for _ in range(100):
        n = int(rng.integers(2, 6))
        lam = rng.uniform(0.1, 3, n)
        xs = rng.standard_normal(n) * 0.3
        pb = QuadraticProblem(lam, x_star=xs, domain=dom)
        k = int(rng.integers(1, 20))
        P = rng.standard_normal((k, n))
        P /= np.maximum(1.0, np.linalg.norm(P, axis=1, keepdims=True))
        w = rng.uniform(0, 1, k)
        tr = manual_trace(P, [pb.grad(p) for p in P], w)
        cert = duality_gap(tr, dom)
        true_gap = pb.value(averaged_point(tr)) - 0.0
        assert cert.gap_value >= true_gap - 1e-12
        assert cert.gap_value >= -1e-12


def test_gap_on_method_trace():
    pb = QuadraticProblem([1.0, 0.3], x_star=np.array([0.2, -0.1]), domain=Ball2(1.0))
    tr = fgm(pb, euclidean_setup(Ball2(1.0)), MethodParams(N=50, spec=OracleSpec(L=1.0), record_points=True))
    cert = duality_gap(tr, Ball2(1.0))
    assert cert.gap_value >= pb.value(averaged_point(tr)) >= 0


# ---- dual least-norm solver -----------------------------------------------

def test_spectral_norm():
    d = np.diag([3.0, 1.0, 0.5])
    assert spectral_norm(SparseMatrix.from_dense(d)) == pytest.approx(3.0)


def test_least_norm_identity():
    b = np.arange(1.0, 6.0)
    x, res = dual_least_norm(SparseMatrix.from_dense(np.eye(5)), b, budget=2000, tol=1e-10)
    assert np.linalg.norm(x - b) <= 1e-10 and len(res) < 100


def test_least_norm_two_cycle():
    A, b = pagerank_system(two_cycle())
    assert A.toarray() == pytest.approx(np.array([[-1, 1], [1, -1], [1, 1.0]]))
    x, _ = dual_least_norm(A, b, budget=2000, tol=1e-10)
    assert x == pytest.approx([0.5, 0.5], abs=1e-9)


def test_least_norm_rate_and_window_monotone():
    rng = make_rng(1)
    Ad = rng.standard_normal((30, 50))
    b = Ad @ rng.standard_normal(50)
    x, res = dual_least_norm(SparseMatrix.from_dense(Ad), b, budget=3000)
    k = np.arange(1, len(res) + 1)
    m = k >= 300
    slope = np.polyfit(np.log(k[m]), np.log(res[m]), 1)[0]
    assert -2.4 <= slope <= -1.6
    mins = [res[i:i + 50].min() for i in range(0, len(res), 50)]
    assert all(a >= b for a, b in zip(mins, mins[1:]))
    assert np.linalg.norm(Ad @ x - b) <= res[-1] * (1 + 1e-9)
    # the least-norm solution lies in the row space of A
    x_ln = np.linalg.pinv(Ad) @ b
    assert np.linalg.norm(x - x_ln) < 1e-2 * np.linalg.norm(x_ln)


def test_least_norm_pagerank_system():
    P = generate_sparse_stochastic(20, 3, seed=4)
    A, b = pagerank_system(P)
    x, res = dual_least_norm(A, b, budget=5000, tol=1e-8)
    assert res[-1] <= 1e-8 or np.linalg.norm(A.matvec(x) - b) <= 1e-8
    assert x.sum() == pytest.approx(1.0, abs=1e-7)


def test_inconsistent_system_detected():
    A = SparseMatrix.from_dense(np.array([[1.0, 0.0], [1.0, 0.0]]))
    with pytest.raises(InconsistentSystem):
        dual_least_norm(A, np.array([1.0, -1.0]), budget=2000)
    with pytest.raises(ValueError):
        dual_least_norm(SparseMatrix.from_dense(np.zeros((2, 2))), np.ones(2))
