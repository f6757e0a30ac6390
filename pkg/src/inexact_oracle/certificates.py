"""Accuracy certificates computed from run traces, and the dual least-norm solver."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .methods import RunTrace
from .spaces import Simplex, Ball2, BallQ, Box, SparseMatrix


class UnsupportedDomain(ValueError):
    pass


class InconsistentSystem(RuntimeError):
    pass


@dataclass(frozen=True)
class Certificate:
    gap_value: float
    weights: tuple
    witness: Optional[np.ndarray]


def averaged_point(trace: RunTrace) -> np.ndarray:
    """sum_k lambda_k x_k / S_N over the stored query points."""
    lam = np.asarray(trace.lambdas, dtype=np.float64)
    S = lam.sum()
    if not S > 0:
        raise ValueError("weights must have a positive sum")
    X = np.asarray(trace.points, dtype=np.float64)
    return lam @ X / S


def linear_maximizer(domain, c):
    """argmax over the domain of <c, u> and its value (closed-form domains only)."""
    c = np.asarray(c, dtype=np.float64)
    if isinstance(domain, Simplex):
        i = int(np.argmax(c))
        u = np.zeros_like(c)
        u[i] = domain.r
        return u, domain.r * float(c[i])
    if isinstance(domain, Ball2):
        nc = float(np.linalg.norm(c))
        u = c * (domain.R / nc) if nc > 0 else np.zeros_like(c)
        return u, domain.R * nc
    if isinstance(domain, BallQ) and domain.q == 1:
        i = int(np.argmax(np.abs(c)))
        u = np.zeros_like(c)
        u[i] = domain.R * np.sign(c[i])
        return u, domain.R * float(abs(c[i]))
    if isinstance(domain, Box):
        lo, hi = np.asarray(domain.lo, float), np.asarray(domain.hi, float)
        u = np.where(c >= 0, hi, lo)
        return u, float(np.dot(c, u))
    raise UnsupportedDomain(f"no closed-form linear maximization on {domain!r}")


def duality_gap(trace: RunTrace, domain) -> Certificate:
    """max over u of (1/S_N) sum_k lambda_k <g_k, x_k - u>.

    Upper-bounds f(averaged point) - min f when the stored gradients are exact.
    """
    if not trace.grads:
        raise ValueError("trace has no stored gradients; run with record_points=True")
    lam = np.asarray(trace.lambdas, dtype=np.float64)
    S = lam.sum()
    X = np.asarray(trace.points, dtype=np.float64)
    Gm = np.asarray(trace.grads, dtype=np.float64)
    agg = lam @ Gm / S
    inner = float(np.sum(lam * np.einsum("ij,ij->i", Gm, X))) / S
    # max_u <-agg, u> is the same as -min_u <agg, u>
    u, val = linear_maximizer(domain, -agg)
    return Certificate(inner + val, tuple(lam.tolist()), u)


# ---------------------------------------------------------------------------
# least-norm solutions through the dual

def spectral_norm(A: SparseMatrix) -> float:
    if A.n_rows * A.n_cols <= 4_000_000:
        return float(np.linalg.norm(A.toarray(), 2))
    from scipy.sparse.linalg import svds
    return float(svds(A.csr, k=1, return_singular_vectors=False)[0]) * (1 + 1e-6)


def dual_least_norm(A: SparseMatrix, b, budget: int = 10000, tol: float = 0.0, window: int = 50):
    """Fast gradient method on the dual of min ||x||^2 / 2 subject to Ax = b.

    The certified primal point is the alpha-weighted combination of
    x(lam_i) = A^T lam_i over the dual query points; its residual equals
    ||sum alpha_i grad_i|| / A_k and decays like L_y R_y / k^2.  That residual
    is recorded every iteration.  The reconstruction A^T y_k at the dual output
    point is also checked and returned when its residual is smaller.
    Stops after `budget` iterations or once a returned residual is <= tol.
    Returns (x, residuals).
    """
    b = np.asarray(b, dtype=np.float64)
    L = spectral_norm(A) ** 2
    if L == 0:
        raise ValueError("A is zero")

    def grad(lam):
        return A.matvec(A.rmatvec(lam)) - b

    m = A.n_rows
    lam0 = np.zeros(m)
    y = lam0.copy()
    G = np.zeros(m)           # sum alpha_i grad_i
    lam_comb = np.zeros(m)    # sum alpha_i lam_i
    A_sum = 0.0
    residuals = []
    best = None
    for k in range(budget):
        a = (k + 1) / 2.0
        A_new = A_sum + a
        tau = a / A_new
        z = lam0 - G / L
        lam = tau * z + (1 - tau) * y
        g = grad(lam)
        xh = z - a * g / L
        y = tau * xh + (1 - tau) * y
        G += a * g
        lam_comb += a * lam
        A_sum = A_new
        r = float(np.linalg.norm(G)) / A_sum
        residuals.append(r)
        if tol > 0 and r <= tol:
            best = A.rmatvec(lam_comb / A_sum)
            break
        if tol > 0 and k % 8 == 0:
            x_out = A.rmatvec(y)
            if float(np.linalg.norm(A.matvec(x_out) - b)) <= tol:
                best = x_out
                break
    residuals = np.asarray(residuals)
    if best is None:
        best = A.rmatvec(lam_comb / A_sum)
        x_out = A.rmatvec(y)
        if np.linalg.norm(A.matvec(x_out) - b) < residuals[-1]:
            best = x_out
        _check_consistency(residuals, window, tol)
    return best, residuals


def _check_consistency(res, window, tol):
    """A consistent system keeps shrinking the residual from window to window."""
    if len(res) < 4 * window:
        return
    last = res[-window:].min()
    prev = res[-2 * window:-window].min()
    if last > tol and last >= 0.999 * prev and last > 1e-12 * max(1.0, res[0]):
        raise InconsistentSystem("residual stopped decreasing; the system looks inconsistent")


def pagerank_system(P: SparseMatrix):
    """Stacked system [P^T - I; 1 ... 1] x = (0, ..., 0, 1)."""
    n = P.n_rows
    rows, cols, vals = [], [], []
    for i, j, v in P.triples():
        rows.append(j)
        cols.append(i)
        vals.append(v)
    for i in range(n):
        rows.append(i)
        cols.append(i)
        vals.append(-1.0)
        rows.append(n)
        cols.append(i)
        vals.append(1.0)
    A = SparseMatrix(rows, cols, vals, (n + 1, n))
    b = np.zeros(n + 1)
    b[n] = 1.0
    return A, b
