"""Benchmark problems with known solutions, PageRank solvers and instance generators."""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .methods import RunTrace, BudgetExhausted
from .oracles import Problem, OracleSpec, EntropySaddle
from .spaces import (Simplex, Free, SparseMatrix, make_rng, entropy_setup, mirror_step,
                     sample_categorical)


# ---------------------------------------------------------------------------
# smooth test problems with a known optimum

class QuadraticProblem(Problem):
    """f(x) = 0.5 sum lam_i (x_i - x*_i)^2 + f_star, diagonal in a fixed basis."""

    def __init__(self, lam, x_star=None, f_star: float = 0.0, domain=None):
        self.lam = np.asarray(lam, dtype=np.float64)
        if np.any(self.lam < 0):
            raise ValueError("curvatures must be nonnegative")
        self.dim = self.lam.size
        self.x_star = np.zeros(self.dim) if x_star is None else np.asarray(x_star, dtype=np.float64)
        self.f_star = float(f_star)
        self.domain = domain or Free()
        self.spec = OracleSpec(L=float(self.lam.max()), mu=float(self.lam.min()))

    def value(self, x):
        d = np.asarray(x, float) - self.x_star
        return 0.5 * float(np.dot(self.lam * d, d)) + self.f_star

    def grad(self, x):
        return self.lam * (np.asarray(x, float) - self.x_star)


def quadratic_battery(n: int = 100, log_cond: float = 8.0):
    """Ill-conditioned diagonal quadratic with curvatures from 1 down to 10^-log_cond."""
    return QuadraticProblem(np.logspace(0.0, -log_cond, n))


class LinearProblem(Problem):
    """f(x) = <c, x> on Simplex(r); min f = r min_j c_j."""

    def __init__(self, c, r: float = 1.0):
        self.c = np.asarray(c, dtype=np.float64)
        self.dim = self.c.size
        self.domain = Simplex(r)
        self.f_star = r * float(self.c.min())
        self.spec = OracleSpec(L=0.0, M=float(np.abs(self.c).max()))

    def value(self, x):
        return float(np.dot(self.c, x))

    def grad(self, x):
        return self.c.copy()


class FiniteSumProblem(Problem):
    """f = (1/m) sum f_k; the stochastic oracle samples k uniformly.

    ``components`` is a list of (value, grad) callable pairs.
    """

    def __init__(self, components, dim: int, spec=None, domain=None):
        if not components:
            raise ValueError("component list is empty")
        self.components = list(components)
        self.m = len(self.components)
        self.dim = dim
        self.spec = spec or OracleSpec()
        self.domain = domain or Free()

    def value(self, x):
        return sum(f(x) for f, _ in self.components) / self.m

    def grad(self, x):
        g = np.zeros(self.dim)
        for _, gk in self.components:
            g += gk(x)
        return g / self.m

    def sample_xi(self, rng):
        return int(rng.integers(self.m))

    def value_xi(self, x, xi):
        return float(self.components[xi][0](x))

    def grad_xi(self, x, xi):
        return np.asarray(self.components[xi][1](x), dtype=np.float64)


def finite_sum_problem(components, dim: int, spec=None, domain=None) -> FiniteSumProblem:
    return FiniteSumProblem(components, dim, spec, domain)


def least_squares_components(A, b, ridge: float = 0.0):
    """Components f_k(x) = 0.5 (a_k^T x - b_k)^2 + 0.5 ridge ||x||^2."""
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    comps = []
    for a_k, b_k in zip(A, b):
        def f(x, a_k=a_k, b_k=b_k):
            r = float(np.dot(a_k, x)) - b_k
            return 0.5 * r * r + 0.5 * ridge * float(np.dot(x, x))

        def g(x, a_k=a_k, b_k=b_k):
            return (float(np.dot(a_k, x)) - b_k) * a_k + ridge * np.asarray(x, float)
        comps.append((f, g))
    return comps


# ---------------------------------------------------------------------------
# entropy-regularized saddle, closed form

def entropy_saddle_value(saddle: EntropySaddle, x) -> float:
    return saddle.closed_form(x)[0]


def exact_inner(saddle: EntropySaddle, x) -> np.ndarray:
    return saddle.closed_form(x)[1]


# ---------------------------------------------------------------------------
# sparse stochastic matrices

def generate_sparse_stochastic(n: int, s: int, seed=0, skew: float = 2.0) -> SparseMatrix:
    """Row-stochastic P with at most s nonzeros per row and per column.

    A random Hamiltonian cycle makes P irreducible; every row then receives
    up to s - 1 extra columns chosen among columns that still have room.
    Each column j carries an attractiveness exp(skew * z_j), z_j standard
    normal, and row weights are proportional to it, so column sums and the
    stationary vector are far from uniform.
    """
    if n < 2 or s < 2 or s > n:
        raise ValueError(f"infeasible sizes n={n}, s={s}; need 2 <= s <= n")
    rng = make_rng(seed)
    perm = rng.permutation(n)
    nxt = np.empty(n, dtype=np.int64)
    nxt[perm] = np.roll(perm, -1)
    col_count = np.ones(n, dtype=np.int64)
    attract = np.exp(skew * rng.standard_normal(n))
    rows_out, cols_out, vals_out = [], [], []
    for i in range(n):
        chosen = [int(nxt[i])]
        for _ in range(4 * s):
            if len(chosen) == s:
                break
            j = int(rng.integers(n))
            if j in chosen or col_count[j] >= s:
                continue
            chosen.append(j)
            col_count[j] += 1
        w = attract[chosen]
        w = w / w.sum()
        rows_out.extend([i] * len(chosen))
        cols_out.extend(chosen)
        vals_out.extend(w.tolist())
    return SparseMatrix(rows_out, cols_out, vals_out, (n, n))


def two_cycle() -> SparseMatrix:
    return SparseMatrix.from_dense([[0.0, 1.0], [1.0, 0.0]])


# ---------------------------------------------------------------------------
# quadratic-penalty PageRank

class PageRankInstance:
    """f(x) = 0.5 ||A x||^2 + (gamma/2) sum (-x_k)_+^2 with A = P^T - I.

    A is never formed; its columns and rows are read from the row and column
    views of P plus the identity adjustment.
    """

    def __init__(self, P: SparseMatrix, gamma: float = 1.0, tol: float = 1e-9):
        if P.n_rows != P.n_cols:
            raise ValueError("P must be square")
        if not gamma > 0:
            raise ValueError("gamma must be positive")
        rs = P.row_sums()
        if np.any(np.abs(rs - 1.0) > tol):
            raise ValueError("P is not row-stochastic")
        self.P = P
        self.gamma = float(gamma)
        self.n = P.n_rows
        self.s = max(P.s_max_row, P.s_max_col)
        self._cols = None
        self._rows = None

    def _build(self):
        # column c of A: P[c, :] - e_c ; row r of A: P[:, r] - e_r
        n = self.n
        cols, rows = [], []
        for c in range(n):
            idx, v = self.P.row(c)
            cols.append(_add_unit(idx, v, c))
            idx, v = self.P.col(c)
            rows.append(_add_unit(idx, v, c))
        self._cols, self._rows = cols, rows

    def a_col(self, c):
        if self._cols is None:
            self._build()
        return self._cols[c]

    def a_row(self, r):
        if self._rows is None:
            self._build()
        return self._rows[r]

    def A_matvec(self, x):
        x = np.asarray(x, float)
        return self.P.rmatvec(x) - x

    def A_rmatvec(self, r):
        r = np.asarray(r, float)
        return self.P.matvec(r) - r

    @property
    def L(self) -> float:
        """max_i ||A^(i)||_2^2 + gamma."""
        sq = np.array([float(np.dot(v, v)) for _, v in (self.a_col(c) for c in range(self.n))])
        return float(sq.max()) + self.gamma

    def value(self, x):
        r = self.A_matvec(x)
        neg = np.maximum(-np.asarray(x, float), 0.0)
        return 0.5 * float(np.dot(r, r)) + 0.5 * self.gamma * float(np.dot(neg, neg))

    def grad(self, x):
        # the penalty is C^1, with derivative 0 at x_k = 0
        x = np.asarray(x, float)
        return self.A_rmatvec(self.A_matvec(x)) - self.gamma * np.maximum(-x, 0.0)


def _add_unit(idx, v, c):
    """Sparse vector (idx, v) minus e_c, indices sorted."""
    idx = np.asarray(idx, dtype=np.int64)
    v = np.asarray(v, dtype=np.float64).copy()
    hit = np.nonzero(idx == c)[0]
    if hit.size:
        v[hit[0]] -= 1.0
        return idx.copy(), v
    k = int(np.searchsorted(idx, c))
    return np.insert(idx, k, c), np.insert(v, k, -1.0)


def pagerank_quadratic_value(instance: PageRankInstance, x) -> float:
    return instance.value(x)


def pagerank_quadratic_grad(instance: PageRankInstance, x) -> np.ndarray:
    return instance.grad(x)


def power_iteration_pagerank(P: SparseMatrix, tol: float = 1e-13, max_iter: int = 100000):
    """Stationary vector of an irreducible P by lazy power iteration (reference only)."""
    n = P.n_rows
    p = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        q = 0.5 * (p + P.rmatvec(p))
        if np.abs(q - p).sum() < tol:
            return q / q.sum()
        p = q
    return p / p.sum()


class IndexedHeap:
    """Binary heap over keys[0..n) with position handles.

    ``sign = 1`` keeps the minimum on top, ``sign = -1`` the maximum.  Ties
    are broken towards the smaller index.  ``update`` returns the number of
    swaps it performed so callers can count work.
    """

    def __init__(self, keys, sign: int = 1):
        self.sign = sign
        self.key = sign * np.asarray(keys, dtype=np.float64).copy()
        n = self.key.size
        order = np.lexsort((np.arange(n), self.key))
        self.heap = order.astype(np.int64)
        self.pos = np.empty(n, dtype=np.int64)
        self.pos[self.heap] = np.arange(n)

    def _less(self, a, b):
        ka, kb = self.key[a], self.key[b]
        return ka < kb or (ka == kb and a < b)

    def _swap(self, i, j):
        h = self.heap
        h[i], h[j] = h[j], h[i]
        self.pos[h[i]] = i
        self.pos[h[j]] = j

    def top(self) -> int:
        return int(self.heap[0])

    def update(self, idx: int, value: float) -> int:
        self.key[idx] = self.sign * value
        i = int(self.pos[idx])
        swaps = 0
        h = self.heap
        while i > 0:
            parent = (i - 1) >> 1
            if self._less(h[i], h[parent]):
                self._swap(i, parent)
                i = parent
                swaps += 1
            else:
                break
        n = h.size
        while True:
            l = 2 * i + 1
            if l >= n:
                break
            c = l
            if l + 1 < n and self._less(h[l + 1], h[l]):
                c = l + 1
            if self._less(h[c], h[i]):
                self._swap(i, c)
                i = c
                swaps += 1
            else:
                break
        return swaps


class DualHeap:
    """Min and max heaps over the same key vector."""

    def __init__(self, keys):
        self.lo = IndexedHeap(keys, 1)
        self.hi = IndexedHeap(keys, -1)

    def argmin(self) -> int:
        return self.lo.top()

    def argmax(self) -> int:
        return self.hi.top()

    def update(self, idx: int, value: float) -> int:
        return self.lo.update(idx, value) + self.hi.update(idx, value)

    def check(self, keys) -> bool:
        keys = np.asarray(keys)
        return self.argmin() == int(np.argmin(keys)) and self.argmax() == int(np.argmax(keys))


def pagerank_sparse_solver(instance: PageRankInstance, eps: float, budget: int = 10 ** 6,
                           heap_check_every: int = None, resync_every: int = 10000,
                           drift_tol: float = 1e-8, seed: int = 0) -> RunTrace:
    """Two-coordinate gradient method in the 1-norm on the hyperplane sum x = 1.

    Each step moves +t on argmin g and -t on argmax g.  The residual A x and
    the gradient are updated from the two touched columns only, and a
    DualHeap keeps both extreme gradient coordinates.  Stops once f <= eps^2.

    The trace's ``meta`` holds the per-step support sizes, the largest
    per-iteration touch count, c = touches / (s^2 log2 n), the final ||Ax||
    in the 2- and inf-norms and the minimum coordinate (which may be
    slightly negative).
    """
    inst = instance
    n, gamma = inst.n, inst.gamma
    L = inst.L
    if heap_check_every is None:
        heap_check_every = 1 if n <= 1000 else 1000
    x = np.full(n, 1.0 / n)
    r = inst.A_matvec(x)
    u = inst.A_rmatvec(r)
    g = u - gamma * np.maximum(-x, 0.0)
    rsq = float(np.dot(r, r))
    pen = 0.0
    heaps = DualHeap(g)
    tr = RunTrace(method="pagerank_sparse", seed=seed)
    step_nnz = []
    touch_max = 0
    max_drift = 0.0
    target = eps * eps
    f = 0.5 * rsq + 0.5 * gamma * pen
    k = 0
    while f > target:
        if k >= budget:
            err = BudgetExhausted(f"f = {f:.3e} > eps^2 after {budget} steps")
            err.trace = tr
            raise err
        i_min, i_max = heaps.argmin(), heaps.argmax()
        spread = g[i_max] - g[i_min]
        if spread <= 0:
            break
        t = spread / (4.0 * L)
        # residual change from the two columns
        ci, vi = inst.a_col(i_min)
        cj, vj = inst.a_col(i_max)
        rows = np.concatenate([ci, cj])
        dr = np.concatenate([t * vi, -t * vj])
        rows, inv = np.unique(rows, return_inverse=True)
        dsum = np.zeros(rows.size)
        np.add.at(dsum, inv, dr)
        old = r[rows]
        r[rows] = old + dsum
        rsq += float(np.dot(r[rows], r[rows]) - np.dot(old, old))
        # u = A^T r changes on the rows' supports
        parts_k, parts_v = [], []
        for rr, d in zip(rows.tolist(), dsum.tolist()):
            ck, cv = inst.a_row(rr)
            parts_k.append(ck)
            parts_v.append(d * cv)
        ks = np.concatenate(parts_k)
        dv = np.concatenate(parts_v)
        touched, inv = np.unique(np.concatenate([ks, [i_min, i_max]]), return_inverse=True)
        du = np.zeros(touched.size)
        np.add.at(du, inv[:ks.size], dv)
        u[touched] += du
        for idx, step in ((i_min, t), (i_max, -t)):
            before = max(-x[idx], 0.0)
            x[idx] += step
            after = max(-x[idx], 0.0)
            pen += after * after - before * before
        g_new = u[touched] - gamma * np.maximum(-x[touched], 0.0)
        g[touched] = g_new
        work = touched.size
        for idx, val in zip(touched.tolist(), g_new.tolist()):
            work += heaps.update(idx, val)
        touch_max = max(touch_max, work)
        step_nnz.append(2 if i_min != i_max else 0)
        k += 1
        if heap_check_every and k % heap_check_every == 0 and not heaps.check(g):
            raise AssertionError(f"heap tops out of date at step {k}")
        if resync_every and k % resync_every == 0:
            r_full = inst.A_matvec(x)
            u_full = inst.A_rmatvec(r_full)
            g_full = u_full - gamma * np.maximum(-x, 0.0)
            drift = float(np.abs(g_full - g).max() / max(1.0, np.abs(g_full).max()))
            max_drift = max(max_drift, drift)
            if drift > drift_tol:
                raise AssertionError(f"incremental gradient drifted by {drift:.3e}")
            r, u, g = r_full, u_full, g_full
            rsq = float(np.dot(r, r))
            neg = np.maximum(-x, 0.0)
            pen = float(np.dot(neg, neg))
            for idx in range(n):
                heaps.update(idx, g[idx])
        f = 0.5 * rsq + 0.5 * gamma * pen
        tr.f_values.append(f)
        tr.grad_norms.append(0.5 * spread)
        tr.lambdas.append(1.0)
        tr.oracle_queries.append(k)
        tr.coord_updates.append(2 * k)
        tr.wall_ns.append(0)
    tr.x_out = x.copy()
    s = max(inst.s, 2)
    r_true = inst.A_matvec(x)
    tr.meta.update(
        L=L, step_nnz=step_nnz, touch_max=touch_max,
        c=touch_max / (s * s * math.log2(max(n, 2))),
        max_drift=max_drift, min_coord=float(x.min()),
        residual_2=float(np.linalg.norm(r_true)), residual_inf=float(np.abs(r_true).max()),
        final_value=inst.value(x),
    )
    return tr


# ---------------------------------------------------------------------------
# bilinear saddle PageRank with sampled columns

class SaddleResult(NamedTuple):
    x: np.ndarray
    y: np.ndarray
    gap: float
    iterations: int
    work: int


def bilinear_gap(A: SparseMatrix, x, y) -> float:
    """max over the simplex of y'^T A x minus min over the simplex of y^T A x'."""
    return float(A.matvec(x).max() - A.rmatvec(y).min())


def pagerank_matrix(P: SparseMatrix) -> SparseMatrix:
    """A = P^T - I."""
    n = P.n_rows
    rows, cols, vals = [], [], []
    for i, j, v in P.triples():
        rows.append(j)
        cols.append(i)
        vals.append(v)
    rows.extend(range(n))
    cols.extend(range(n))
    vals.extend([-1.0] * n)
    return SparseMatrix(rows, cols, vals, (n, n))


def saddle_budget(n: int, eps: float, M: float = 1.0, sigma: float = 1.0) -> int:
    """8 M^2 ln(n / sigma) / eps^2 iterations of the randomized mirror method."""
    return int(math.ceil(8.0 * M * M * math.log(max(n / sigma, 2.0)) / (eps * eps)))


def pagerank_saddle_solver(A: SparseMatrix, eps: float, sigma_budget: float = 1.0, seed=0,
                           budget: int = None, check_every: int = None, history=None) -> SaddleResult:
    """Randomized mirror descent-ascent for min_x max_y y^T A x on two simplices.

    The x-player's gradient A^T y is replaced by row j of A with j drawn from
    y, and the y-player's gradient A x by column i of A with i drawn from x.
    Both players take entropy steps of size eps / (2 M^2).  The exact gap of
    the running averages is evaluated every ``check_every`` steps and the run
    stops once it is <= eps; (k, gap) pairs are appended to ``history``.
    ``work`` counts arithmetic touches: 2n per step for the two prox updates
    plus the sampled entries.
    """
    n = A.n_rows
    M = A.max_abs if A.max_abs > 0 else 1.0
    N = budget or saddle_budget(n, eps, M, sigma_budget)
    if check_every is None:
        check_every = max(1, N // 400)
    rng = make_rng(seed)
    setup = entropy_setup(1.0)
    h = eps / (2.0 * M * M)
    x = np.full(n, 1.0 / n)
    y = np.full(n, 1.0 / n)
    xs = np.zeros(n)
    ys = np.zeros(n)
    work = 0
    gap = math.inf
    if history is None:
        history = []
    for k in range(1, N + 1):
        xs += x
        ys += y
        i = sample_categorical(x, rng)
        j = sample_categorical(y, rng)
        ci, vi = A.col(i)
        rj, vj = A.row(j)
        gx = np.zeros(n)
        gx[rj] = vj
        gy = np.zeros(n)
        gy[ci] = -vi
        x = mirror_step(setup, x, gx, h)
        y = mirror_step(setup, y, gy, h)
        work += 2 * n + ci.size + rj.size
        if k % check_every == 0 or k == 1 or k == N:
            gap = bilinear_gap(A, xs / k, ys / k)
            history.append((k, gap))
            if gap <= eps:
                return SaddleResult(xs / k, ys / k, gap, k, work)
    err = BudgetExhausted(f"gap {gap:.3e} > eps after {N} steps")
    err.result = SaddleResult(xs / N, ys / N, gap, N, work)
    raise err
