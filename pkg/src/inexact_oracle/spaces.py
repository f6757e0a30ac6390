"""Vector geometry: norms, domains, prox setups, Bregman divergences,
prox-mapping steps, random directions and dual-indexed sparse matrices.

Vectors are plain 1-D float64 numpy arrays.  Every stochastic routine takes
an explicit ``numpy.random.Generator``; see :func:`make_rng`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.io
import scipy.sparse as sp

ENTROPY_FLOOR = 1e-300


class UnsupportedProx(ValueError):
    """Raised when a (prox kind, domain) pair has no implemented prox step."""


# ---------------------------------------------------------------------------
# random state

def make_rng(seed) -> np.random.Generator:
    """Counter-based generator (Philox) seeded through a SeedSequence."""
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def spawn(rng: np.random.Generator, k: int) -> list:
    """Split ``rng`` into ``k`` independent child generators."""
    return [np.random.Generator(np.random.Philox(s))
            for s in rng.bit_generator.seed_seq.spawn(k)]


def as_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("expected a non-empty 1-D vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector has non-finite entries")
    return x


# ---------------------------------------------------------------------------
# norms

def norm(x, q: float = 2.0) -> float:
    """l_q norm; ``q = inf`` gives the max absolute entry."""
    if q < 1:
        raise ValueError("norm exponent must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    if math.isinf(q):
        return float(np.max(np.abs(x))) if x.size else 0.0
    if q == 1:
        return float(np.sum(np.abs(x)))
    if q == 2:
        return float(np.sqrt(np.dot(x, x)))
    a = np.abs(x)
    m = a.max() if a.size else 0.0
    if m == 0.0:
        return 0.0
    # scale first so that large q does not overflow
    return float(m * np.sum((a / m) ** q) ** (1.0 / q))


def dual_exponent(q: float) -> float:
    """Return q' with 1/q + 1/q' = 1."""
    if not q >= 1:
        raise ValueError("exponent must lie in [1, inf]")
    if q == 1:
        return math.inf
    if math.isinf(q):
        return 1.0
    return q / (q - 1.0)


# ---------------------------------------------------------------------------
# domains

@dataclass(frozen=True)
class Simplex:
    """{x >= 0, sum(x) = r}."""
    r: float = 1.0

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("simplex radius must be positive")


@dataclass(frozen=True)
class Ball2:
    R: float = 1.0

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("ball radius must be positive")


@dataclass(frozen=True)
class BallQ:
    q: float = 1.0
    R: float = 1.0

    def __post_init__(self):
        if not self.R > 0 or not self.q >= 1:
            raise ValueError("need q >= 1 and R > 0")


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("box needs lo <= hi componentwise")


@dataclass(frozen=True)
class AffineSum:
    """The hyperplane <x, e> = value."""
    value: float = 1.0


@dataclass(frozen=True)
class Free:
    pass


Domain = Union[Simplex, Ball2, BallQ, Box, AffineSum, Free]


def in_domain(domain: Domain, x, tol: float = 1e-9) -> bool:
    x = np.asarray(x, dtype=np.float64)
    if isinstance(domain, Simplex):
        return bool(np.all(x >= -tol) and abs(x.sum() - domain.r) <= tol * max(1.0, domain.r))
    if isinstance(domain, Ball2):
        return norm(x, 2) <= domain.R * (1 + tol)
    if isinstance(domain, BallQ):
        return norm(x, domain.q) <= domain.R * (1 + tol)
    if isinstance(domain, Box):
        return bool(np.all(x >= np.asarray(domain.lo) - tol) and np.all(x <= np.asarray(domain.hi) + tol))
    if isinstance(domain, AffineSum):
        return abs(x.sum() - domain.value) <= tol * max(1.0, abs(domain.value))
    return True


# ---------------------------------------------------------------------------
# prox setups

EUCLIDEAN = "euclidean"
ENTROPY = "entropy"
QNORM = "qnorm"


@dataclass(frozen=True)
class ProxSetup:
    """Norm, prox function and domain.

    ``prox_kind`` is one of ``"euclidean"`` (d = ||x||_2^2 / 2),
    ``"entropy"`` (d = r * sum x_i ln(n x_i / r) on Simplex(r), which is
    ln n + sum x_i ln x_i at r = 1) or ``"qnorm"`` (d = ||x||_a^2 / (2(a-1))).
    ``alpha`` is the strong convexity constant of d with respect to the
    ``norm_q`` norm and ``omega`` the prox distortion factor.
    """
    norm_q: float
    prox_kind: str
    domain: Domain = field(default_factory=Free)
    alpha: float = 1.0
    omega: float = 1.0
    a: Optional[float] = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.omega >= 1:
            raise ValueError("omega must be >= 1")
        if self.prox_kind not in (EUCLIDEAN, ENTROPY, QNORM):
            raise ValueError(f"unknown prox kind {self.prox_kind!r}")
        if self.prox_kind == ENTROPY and not isinstance(self.domain, Simplex):
            raise ValueError("entropy prox needs a Simplex domain")
        if self.prox_kind == QNORM and not (self.a is not None and self.a > 1):
            raise ValueError("q-norm prox needs an exponent a > 1")


def euclidean_setup(domain: Domain = None) -> ProxSetup:
    return ProxSetup(norm_q=2.0, prox_kind=EUCLIDEAN, domain=domain or Free())


def entropy_setup(r: float = 1.0) -> ProxSetup:
    """KL prox on Simplex(r); strongly convex with constant 1 in l_1 (Pinsker)."""
    return ProxSetup(norm_q=1.0, prox_kind=ENTROPY, domain=Simplex(r))


def qnorm_exponent(n: int, q: float) -> float:
    """Exponent of the q-norm prox function.

    When the dual exponent q' is at least of order ln n the l_q geometry
    is close to l_1 and we use a = 2 ln n / (2 ln n - 1); otherwise a = q.
    """
    qd = dual_exponent(q)
    if n >= 2 and qd >= 2 * math.log(n):
        L = 2 * math.log(n)
        return L / (L - 1)
    if q <= 1:
        raise ValueError("q-norm prox with q = 1 needs n >= 2")
    return float(q)


def qnorm_setup(n: int, q: float, domain: Domain = None) -> ProxSetup:
    """d(x) = ||x||_a^2 / (2(a-1)) with a from :func:`qnorm_exponent`.

    alpha is the strong convexity constant in ||.||_q: 1 when a = q, and
    n^{2(1/a - 1/q)} >= 1/e when a > q is the l_1-surrogate exponent.
    """
    a = qnorm_exponent(n, q)
    if a == q:
        alpha = 1.0
    else:
        alpha = min(1.0, float(n ** (2.0 * (1.0 / a - 1.0 / q))))
    return ProxSetup(norm_q=float(q), prox_kind=QNORM, domain=domain or Free(), alpha=alpha, a=a)


def prox_value(setup: ProxSetup, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if setup.prox_kind == EUCLIDEAN:
        return 0.5 * float(np.dot(x, x))
    if setup.prox_kind == ENTROPY:
        r = setup.domain.r
        xs = x[x > 0]
        return r * float(np.sum(xs * np.log(x.size * xs / r)))
    a = setup.a
    return norm(x, a) ** 2 / (2 * (a - 1))


def prox_grad(setup: ProxSetup, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if setup.prox_kind == EUCLIDEAN:
        return x.copy()
    if setup.prox_kind == ENTROPY:
        r = setup.domain.r
        if np.any(x <= 0):
            raise ValueError("entropy gradient needs a strictly positive point")
        return r * (np.log(x.size * x / r) + 1.0)
    return _qnorm_grad(x, setup.a) / (setup.a - 1)


def _qnorm_grad(x, a):
    """Gradient of ||x||_a^2 / 2."""
    nx = norm(x, a)
    if nx == 0.0:
        return np.zeros_like(x)
    return np.sign(x) * (np.abs(x) / nx) ** (a - 1) * nx


def bregman(setup: ProxSetup, x, y) -> float:
    """V(x, y) = d(x) - d(y) - <grad d(y), x - y>."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if setup.prox_kind == EUCLIDEAN:
        d = x - y
        return 0.5 * float(np.dot(d, d))
    if setup.prox_kind == ENTROPY:
        if np.any(y <= 0):
            raise ValueError("y must lie in the relative interior of the simplex")
        r = setup.domain.r
        m = x > 0
        # sum(x) = sum(y) on the simplex, so the linear terms cancel
        v = r * (float(np.sum(x[m] * np.log(x[m] / y[m]))) - float(x.sum() - y.sum()))
        return max(v, 0.0)
    v = prox_value(setup, x) - prox_value(setup, y) - float(np.dot(prox_grad(setup, y), x - y))
    return max(v, 0.0)


def prox_diameter_sq(setup: ProxSetup, n: int) -> float:
    """max over the domain of d(x) - min d, measured at extreme points.

    For the KL prox on Simplex(r) this is r^2 ln n.
    """
    dom = setup.domain
    if setup.prox_kind == ENTROPY:
        v = np.zeros(n)
        v[0] = dom.r
        return prox_value(setup, v)
    if isinstance(dom, Simplex):
        v = np.zeros(n)
        v[0] = dom.r
        return prox_value(setup, v) - prox_value(setup, np.full(n, dom.r / n))
    if isinstance(dom, Ball2):
        return prox_value(setup, np.r_[dom.R, np.zeros(n - 1)])
    if isinstance(dom, BallQ):
        # the maximum of a convex function over the ball is attained on its
        # boundary; vertices and the diagonal cover the l_1 and l_inf cases
        e = np.r_[dom.R, np.zeros(n - 1)]
        diag = np.full(n, dom.R / n ** (1.0 / dom.q) if not math.isinf(dom.q) else dom.R)
        return max(prox_value(setup, e), prox_value(setup, diag))
    if isinstance(dom, Box):
        lo, hi = np.asarray(dom.lo, float), np.asarray(dom.hi, float)
        far = np.where(np.abs(lo) > np.abs(hi), lo, hi)
        return prox_value(setup, far)
    raise ValueError("prox diameter is only defined for bounded domains")


def prox_distortion(setup: ProxSetup, x0, points) -> float:
    """Empirical omega = sup 2 V(x, x0) / (alpha ||x - x0||_q^2) over ``points``."""
    w = 1.0
    for x in points:
        dist = norm(np.asarray(x) - x0, setup.norm_q)
        if dist > 0:
            w = max(w, 2 * bregman(setup, x, x0) / (setup.alpha * dist ** 2))
    return w


# ---------------------------------------------------------------------------
# projections and prox steps

def project_simplex(x, r: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {z >= 0, sum z = r} by sorting."""
    x = np.asarray(x, dtype=np.float64)
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - r
    ind = np.arange(1, x.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(x - theta, 0.0)


def project_l1_ball(x, R: float = 1.0) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if np.sum(np.abs(x)) <= R:
        return x.copy()
    return np.sign(x) * project_simplex(np.abs(x), R)


def project(domain: Domain, x) -> np.ndarray:
    """Euclidean projection onto ``domain``."""
    x = np.asarray(x, dtype=np.float64)
    if isinstance(domain, Free):
        return x.copy()
    if isinstance(domain, Simplex):
        return project_simplex(x, domain.r)
    if isinstance(domain, Ball2):
        nx = norm(x, 2)
        return x * (domain.R / nx) if nx > domain.R else x.copy()
    if isinstance(domain, BallQ):
        if domain.q == 2:
            return project(Ball2(domain.R), x)
        if domain.q == 1:
            return project_l1_ball(x, domain.R)
        if math.isinf(domain.q):
            return np.clip(x, -domain.R, domain.R)
        raise UnsupportedProx(f"no Euclidean projection onto the l_{domain.q} ball")
    if isinstance(domain, Box):
        return np.clip(x, np.asarray(domain.lo, float), np.asarray(domain.hi, float))
    if isinstance(domain, AffineSum):
        return x - (x.sum() - domain.value) / x.size
    raise UnsupportedProx(f"unknown domain {domain!r}")


def mirror_step(setup: ProxSetup, x, g, h: float) -> np.ndarray:
    """argmin_z <g, z> + V(z, x) / h over the setup's domain."""
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if not h > 0:
        raise ValueError("step size must be positive")
    dom = setup.domain
    if setup.prox_kind == EUCLIDEAN:
        return project(dom, x - h * g)
    if setup.prox_kind == ENTROPY:
        return _entropy_step(x, g, h, dom.r)
    return _qnorm_step(setup, x, g, h)


def _entropy_step(x, g, h, r):
    # multiplicative weights: z ~ x exp(-h g / r); shift exponent for stability
    logx = np.log(np.maximum(x, ENTROPY_FLOOR))
    w = logx - (h / r) * g
    w = w - w.max()
    z = np.exp(w)
    z = np.maximum(z, 0.0)
    return r * z / z.sum()


def _dual_map(y, b, scale):
    """argmax_z <y, z> - (scale/2) ||z||_a^2 where b = a / (a - 1)."""
    ny = norm(y, b)
    if ny == 0.0:
        return np.zeros_like(y)
    return np.sign(y) * (np.abs(y) / ny) ** (b - 1) * ny / scale


def _qnorm_step(setup, x, g, h):
    a = setup.a
    b = dual_exponent(a)
    c = 1.0 / (a - 1)
    y = prox_grad(setup, x) / h - g   # maximise <y, z> - d(z) / h
    dom = setup.domain
    if isinstance(dom, Free):
        return _dual_map(y, b, c / h)
    if isinstance(dom, BallQ) and abs(dom.q - a) < 1e-12:
        z = _dual_map(y, b, c / h)
        nz = norm(z, a)
        return z * (dom.R / nz) if nz > dom.R else z
    if isinstance(dom, BallQ) and dom.q == 1:
        z = _dual_map(y, b, c / h)
        if np.sum(np.abs(z)) <= dom.R:
            return z
        # soft-threshold the dual point, bisect on the multiplier
        lo, hi = 0.0, float(np.max(np.abs(y)))
        for _ in range(200):
            nu = 0.5 * (lo + hi)
            z = _dual_map(np.sign(y) * np.maximum(np.abs(y) - nu, 0.0), b, c / h)
            if np.sum(np.abs(z)) > dom.R:
                lo = nu
            else:
                hi = nu
        return _dual_map(np.sign(y) * np.maximum(np.abs(y) - hi, 0.0), b, c / h)
    raise UnsupportedProx(f"q-norm prox step not implemented on {dom!r}")


def steepest_two_coordinate_step(g, L: float) -> np.ndarray:
    """argmin over sum-zero h of <g, h> + (L/2) ||h||_1^2.

    Moves +t on the smallest entry of g and -t on the largest one with
    t = (max g - min g) / (4L); ties go to the smallest index.
    """
    g = np.asarray(g, dtype=np.float64)
    if g.size < 2:
        raise ValueError("need dim >= 2")
    h = np.zeros_like(g)
    i_min = int(np.argmin(g))
    i_max = int(np.argmax(g))
    spread = g[i_max] - g[i_min]
    if spread <= 0:
        return h
    t = spread / (4.0 * L)
    h[i_min] = t
    h[i_max] = -t
    return h


# ---------------------------------------------------------------------------
# sampling

def sample_unit_sphere(n: int, rng: np.random.Generator, size: int = None) -> np.ndarray:
    """Uniform direction on the Euclidean unit sphere (normalized Gaussian).

    With ``size`` a (size, n) array of independent directions is returned.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if size is not None:
        s = rng.standard_normal((size, n))
        ns = np.sqrt(np.einsum("ij,ij->i", s, s))
        bad = ns == 0
        while np.any(bad):
            s[bad] = rng.standard_normal((int(bad.sum()), n))
            ns = np.sqrt(np.einsum("ij,ij->i", s, s))
            bad = ns == 0
        return s / ns[:, None]
    while True:
        s = rng.standard_normal(n)
        ns = np.sqrt(np.dot(s, s))
        if ns > 0:
            return s / ns


def sample_unit_ball(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform point in the Euclidean unit ball."""
    s = sample_unit_sphere(n, rng)
    return s * rng.random() ** (1.0 / n)


def sample_categorical(x, rng: np.random.Generator) -> int:
    """Index i (0-based) drawn with probability x_i."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < -1e-9):
        raise ValueError("probabilities must be nonnegative")
    x = np.maximum(x, 0.0)
    total = x.sum()
    if abs(total - 1.0) > 1e-9 and not total > 0:
        raise ValueError("probabilities must sum to 1")
    cdf = np.cumsum(x)
    i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(i, x.size - 1)


# ---------------------------------------------------------------------------
# sparse matrices

class SparseMatrix:
    """Sparse matrix kept both row-major (CSR) and column-major (CSC).

    ``row(i)`` / ``col(j)`` give (sorted indices, values).  The stats
    ``s_max_row``, ``s_max_col`` and ``max_abs`` (the element bound) are
    computed once at construction.
    """

    def __init__(self, rows, cols, vals, shape):
        coo = sp.coo_matrix((np.asarray(vals, float), (np.asarray(rows), np.asarray(cols))), shape=shape)
        coo.sum_duplicates()
        self.csr = coo.tocsr()
        self.csr.sort_indices()
        self.csc = coo.tocsc()
        self.csc.sort_indices()
        self.n_rows, self.n_cols = shape
        self.s_max_row = int(np.diff(self.csr.indptr).max()) if self.n_rows else 0
        self.s_max_col = int(np.diff(self.csc.indptr).max()) if self.n_cols else 0
        self.max_abs = float(np.max(np.abs(self.csr.data))) if self.csr.nnz else 0.0

    @classmethod
    def from_scipy(cls, m):
        coo = sp.coo_matrix(m)
        return cls(coo.row, coo.col, coo.data, coo.shape)

    @classmethod
    def from_dense(cls, a):
        return cls.from_scipy(sp.coo_matrix(np.asarray(a, float)))

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return self.csr.nnz

    def row(self, i):
        lo, hi = self.csr.indptr[i], self.csr.indptr[i + 1]
        return self.csr.indices[lo:hi], self.csr.data[lo:hi]

    def col(self, j):
        lo, hi = self.csc.indptr[j], self.csc.indptr[j + 1]
        return self.csc.indices[lo:hi], self.csc.data[lo:hi]

    def triples(self):
        coo = self.csr.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def matvec(self, x):
        return self.csr @ np.asarray(x, float)

    def rmatvec(self, y):
        return self.csc.T @ np.asarray(y, float)

    def toarray(self):
        return self.csr.toarray()

    def transpose(self):
        return SparseMatrix.from_scipy(self.csr.T)

    def column_norms_sq(self):
        return np.asarray(self.csc.multiply(self.csc).sum(axis=0)).ravel()

    def row_sums(self):
        return np.asarray(self.csr.sum(axis=1)).ravel()

    def check(self):
        """Both views hold the same triples and stats match."""
        a = sorted(self.triples())
        c = self.csc.tocoo()
        b = sorted(zip(c.row.tolist(), c.col.tolist(), c.data.tolist()))
        return a == b


def read_matrix_market(path, stochastic: bool = False) -> SparseMatrix:
    """Read a MatrixMarket coordinate file; optionally check unit row sums."""
    m = SparseMatrix.from_scipy(scipy.io.mmread(str(path)))
    if stochastic:
        rs = m.row_sums()
        if np.any(np.abs(rs - 1.0) > 1e-9):
            raise ValueError("matrix is not row-stochastic")
    return m


def write_matrix_market(path, m: SparseMatrix, comments=()) -> None:
    """Write ``m`` as MatrixMarket coordinate text with 1-based triples.

    Each entry of ``comments`` becomes a ``%`` line after the banner.
    """
    lines = ["%%MatrixMarket matrix coordinate real general"]
    lines += [f"% {c}" for c in comments]
    lines.append(f"{m.n_rows} {m.n_cols} {m.nnz}")
    for i, j, v in m.triples():
        lines.append(f"{i + 1} {j + 1} {v!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
