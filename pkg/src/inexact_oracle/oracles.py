"""First-order oracles and the wrappers composed over them.

An *oracle* is any callable ``oracle(x, rng) -> OracleReply``.  A *value
oracle* (used by the zeroth-order estimators) splits the randomness out:
``xi = vo.draw(rng)`` fixes one realization and ``vo.value(x, xi)`` may
then be queried at several points under that same realization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple

import numpy as np

from .spaces import norm, Free, make_rng


@dataclass(frozen=True)
class OracleReply:
    value: float
    grad: Optional[np.ndarray]
    queries_used: int = 1


@dataclass(frozen=True)
class OracleSpec:
    """Constants of a (delta, L, mu)-oracle, measured in the ``norm_q`` norm.

    ``holder`` is an optional (L_nu, nu) pair.
    """
    delta: float = 0.0
    L: float = 0.0
    mu: float = 0.0
    M: float = 0.0
    D: float = 0.0
    holder: Optional[Tuple[float, float]] = None
    norm_q: float = 2.0

    def __post_init__(self):
        for name in ("delta", "L", "mu", "M", "D"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.mu > 0 and self.L > 0 and self.mu > self.L:
            raise ValueError("mu must not exceed L")
        if self.holder is not None and not 0 <= self.holder[1] <= 1:
            raise ValueError("Holder exponent must lie in [0, 1]")


class Problem:
    """Base class for objectives f(x) = E f(x, xi).

    Subclasses implement ``value`` and ``grad``; stochastic problems also
    override ``sample_xi`` and ``value_xi`` / ``grad_xi``.
    """
    dim: int = 0
    domain = Free()
    spec = OracleSpec()

    def value(self, x) -> float:
        raise NotImplementedError

    def grad(self, x) -> np.ndarray:
        raise NotImplementedError

    def partial(self, x, i: int) -> float:
        return float(self.grad(x)[i])

    def sample_xi(self, rng):
        return None

    def value_xi(self, x, xi) -> float:
        return self.value(x)

    def grad_xi(self, x, xi) -> np.ndarray:
        return self.grad(x)

    def check_point(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or (self.dim and x.size != self.dim):
            raise ValueError(f"query point has shape {x.shape}, expected ({self.dim},)")
        if not np.all(np.isfinite(x)):
            raise ValueError("query point has non-finite entries")
        return x


class FunctionProblem(Problem):
    """Deterministic problem from plain callables."""

    def __init__(self, f, grad, dim, spec=None, domain=None):
        self._f, self._g = f, grad
        self.dim = dim
        self.spec = spec or OracleSpec()
        self.domain = domain or Free()

    def value(self, x):
        return float(self._f(x))

    def grad(self, x):
        return np.asarray(self._g(x), dtype=np.float64)


def eval_exact(problem: Problem, x) -> OracleReply:
    x = problem.check_point(x)
    return OracleReply(problem.value(x), problem.grad(x), 1)


def eval_stochastic(problem: Problem, x, rng) -> OracleReply:
    """One stochastic (sub)gradient reply; unbiased for the exact gradient."""
    x = problem.check_point(x)
    xi = problem.sample_xi(rng)
    return OracleReply(problem.value_xi(x, xi), problem.grad_xi(x, xi), 1)


def exact_oracle(problem: Problem) -> Callable:
    return lambda x, rng=None: eval_exact(problem, x)


def stochastic_oracle(problem: Problem) -> Callable:
    return lambda x, rng: eval_stochastic(problem, x, rng)


def clip(reply: OracleReply, M: float, q: float = 2.0) -> OracleReply:
    """Rescale the gradient to norm M when it is longer than M."""
    g = reply.grad
    ng = norm(g, q)
    if ng <= M:
        return reply
    return replace(reply, grad=g * (M / ng))


def clipped(oracle: Callable, M: float, q: float = 2.0) -> Callable:
    return lambda x, rng: clip(oracle(x, rng), M, q)


def minibatch(oracle: Callable, m: int) -> Callable:
    """Average m independent replies; the work counter adds up."""
    if m < 1:
        raise ValueError("batch size must be >= 1")
    if m == 1:
        return oracle

    def batched(x, rng):
        replies = [oracle(x, rng) for _ in range(m)]
        value = sum(r.value for r in replies) / m
        grad = np.mean([r.grad for r in replies], axis=0)
        return OracleReply(value, grad, sum(r.queries_used for r in replies))
    return batched


def coordinate_estimator(problem: Problem, x, rng) -> OracleReply:
    """g = n * (df/dx_i) e_i for a uniform i; unbiased with E||g||^2 = n ||grad f||^2."""
    x = problem.check_point(x)
    n = x.size
    i = int(rng.integers(n))
    g = np.zeros(n)
    g[i] = n * problem.partial(x, i)
    return OracleReply(problem.value(x), g, 1)


def holder_to_smooth(L_nu: float, nu: float, delta: float) -> float:
    """Smoothness constant of the inexact oracle that embeds a Holder gradient.

    L = L_nu * [L_nu (1 - nu) / (2 delta (1 + nu))]^{(1 - nu)/(1 + nu)}.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not 0 <= nu <= 1:
        raise ValueError("nu must lie in [0, 1]")
    if nu == 1:
        return float(L_nu)
    base = L_nu * (1 - nu) / (2 * delta * (1 + nu))
    return float(L_nu * base ** ((1 - nu) / (1 + nu)))


def sandwich_gap(f_y: float, reply: OracleReply, x, y, spec: OracleSpec) -> Tuple[float, float]:
    """Slack of the two inequalities of a (delta, L, mu)-oracle at the pair (x, y).

    Returns (lower_slack, upper_slack); both are >= 0 when the pair passes.
    """
    d = np.asarray(y, float) - np.asarray(x, float)
    r = norm(d, spec.norm_q)
    mid = f_y - reply.value - float(np.dot(reply.grad, d))
    return mid - 0.5 * spec.mu * r * r, 0.5 * spec.L * r * r + spec.delta - mid


class GradientBiasOracle:
    """Exact values with a gradient error of norm at most eta = sqrt(2 L delta).

    The error is a fixed vector b plus a fresh random vector r_k drawn from
    the caller's rng, with ||b|| = ||r_k|| = eta/2.  Since
    <e, d> <= eta^2 / (2L) + (L/2)||d||^2, the upper inequality of a
    (delta, 2L)-oracle holds for every reply; the lower one holds in
    expectation for r_k and up to ||b||^2 / (2 mu) for the fixed part.
    The fixed part cannot be averaged away, the fresh part is what an
    accelerated method accumulates.
    """

    def __init__(self, problem: Problem, delta: float, L: float, direction=None, seed: int = 0):
        self.problem = problem
        self.delta = float(delta)
        self.eta = math.sqrt(2 * L * delta)
        n = problem.dim
        if direction is None:
            direction = make_rng(seed).standard_normal(n)
        d = np.asarray(direction, dtype=np.float64)
        self.bias = 0.5 * self.eta * d / np.linalg.norm(d)
        self.spec = OracleSpec(delta=self.delta, L=2 * L, mu=0.0)

    def __call__(self, x, rng) -> OracleReply:
        x = self.problem.check_point(x)
        r = rng.standard_normal(x.size)
        r *= 0.5 * self.eta / np.linalg.norm(r)
        return OracleReply(self.problem.value(x), self.problem.grad(x) + self.bias + r, 1)


# ---------------------------------------------------------------------------
# value oracles and noise

class ValueOracle:
    """Value-only access f(x, xi) with an explicit realization xi."""

    def __init__(self, problem: Problem):
        self.problem = problem
        self.dim = problem.dim

    def draw(self, rng):
        return self.problem.sample_xi(rng)

    def value(self, x, xi) -> float:
        return self.problem.value_xi(x, xi)

    def __call__(self, x, rng) -> OracleReply:
        return OracleReply(self.value(x, self.draw(rng)), None, 1)


@dataclass(frozen=True)
class NoiseModel:
    """delta(x, xi) = spatial(x) + bounded(xi).

    ``bounded`` has |.| <= delta/2.  ``spatial`` is a fixed random Fourier
    sum whose Lipschitz constant is certified to be at most R * delta and
    whose magnitude is at most delta/2.  ``bounded_kind`` is "uniform"
    (uniform on [-delta/2, delta/2]), "constant" (always delta/2) or "zero".
    """
    delta: float
    R: float = 1.0
    dim: int = 1
    seed: int = 0
    n_terms: int = 8
    bounded_kind: str = "uniform"
    spatial: bool = True

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("noise level must be nonnegative")
        if self.bounded_kind not in ("uniform", "constant", "zero"):
            raise ValueError(f"unknown bounded noise kind {self.bounded_kind!r}")
        rng = make_rng(self.seed)
        w = rng.standard_normal((self.n_terms, self.dim))
        phase = rng.uniform(0, 2 * math.pi, self.n_terms)
        amp = rng.uniform(-1, 1, self.n_terms)
        lip_raw = float(np.sum(np.abs(amp) * np.linalg.norm(w, axis=1)))
        sup_raw = float(np.sum(np.abs(amp)))
        scale = 0.0
        if self.spatial and self.delta > 0 and sup_raw > 0:
            scale = min(self.R * self.delta / lip_raw, 0.5 * self.delta / sup_raw)
        object.__setattr__(self, "_w", w)
        object.__setattr__(self, "_phase", phase)
        object.__setattr__(self, "_amp", amp * scale)

    @property
    def lipschitz_bound(self) -> float:
        return float(np.sum(np.abs(self._amp) * np.linalg.norm(self._w, axis=1)))

    @property
    def spatial_bound(self) -> float:
        return float(np.sum(np.abs(self._amp)))

    def spatial_value(self, x) -> float:
        return float(np.dot(self._amp, np.cos(self._w @ np.asarray(x, float) + self._phase)))

    def spatial_grad(self, x) -> np.ndarray:
        s = np.sin(self._w @ np.asarray(x, float) + self._phase)
        return -(self._amp * s) @ self._w

    def draw_bounded(self, rng) -> float:
        if self.bounded_kind == "zero" or self.delta == 0:
            return 0.0
        if self.bounded_kind == "constant":
            return 0.5 * self.delta
        return self.delta * (rng.random() - 0.5)


class NoisyValueOracle(ValueOracle):
    def __init__(self, base: ValueOracle, model: NoiseModel):
        self.base = base
        self.model = model
        self.dim = base.dim
        self.problem = base.problem

    def draw(self, rng):
        return (self.base.draw(rng), self.model.draw_bounded(rng))

    def value(self, x, xi) -> float:
        inner, bar = xi
        return self.base.value(x, inner) + self.model.spatial_value(x) + bar


def inject_noise(oracle, model: NoiseModel) -> NoisyValueOracle:
    """Wrap a value oracle (or a problem) with the noise of ``model``."""
    if isinstance(oracle, Problem):
        oracle = ValueOracle(oracle)
    return NoisyValueOracle(oracle, model)


# ---------------------------------------------------------------------------
# inexact oracle from an inner maximization

class InnerBudgetExceeded(RuntimeError):
    pass


def lf_constant(sigma_max: float, kappa: float, convention: str = "squared") -> float:
    """Gradient Lipschitz constant of f(x) = max_y {G(y) + <By, x>}.

    ``"squared"`` gives sigma_max(B)^2 / kappa, which is what the bilinear
    coupling yields; ``"linear"`` gives sigma_max(B) / kappa.
    """
    if convention == "squared":
        return sigma_max ** 2 / kappa
    if convention == "linear":
        return sigma_max / kappa
    raise ValueError(f"unknown convention {convention!r}")


class EntropySaddle:
    """f(x) = max over y in S_m(R_y) of { -sum y_k ln(y_k / R_y) + <B y, x> }.

    Closed form: f(x) = R_y logsumexp(B^T x), y*(x) = R_y softmax(B^T x).
    B has shape (n, m).  kappa = 1 and the inner smoothness is taken as 1
    relative to the entropy, so the inner budget is driven by ln(R_y^2/delta).
    """
    kappa = 1.0
    L_G = 1.0

    def __init__(self, B, R_y: float = 1.0):
        self.B = np.atleast_2d(np.asarray(B, dtype=np.float64))
        self.R_y = float(R_y)
        self.dim = self.B.shape[0]

    def G(self, y):
        m = y > 0
        return -float(np.sum(y[m] * np.log(y[m] / self.R_y)))

    def closed_form(self, x):
        c = self.B.T @ np.asarray(x, float)
        cmax = c.max()
        e = np.exp(c - cmax)
        lse = cmax + math.log(e.sum())
        return self.R_y * lse, self.R_y * e / e.sum()

    def initial(self):
        m = self.B.shape[1]
        return np.full(m, self.R_y / m)

    def inner_solve(self, x, tol, budget):
        """Entropic mirror ascent with step 1 - 1/e on y -> G(y) + <y, B^T x>.

        The log of the iterate contracts towards the optimum by a factor
        1/e per step, so the gap is certified from the spread of the
        log-ratio between consecutive iterates.
        """
        c = self.B.T @ np.asarray(x, float)
        h = 1.0 - 1.0 / math.e
        y = self.initial()
        logy = np.log(y)
        for k in range(1, budget + 1):
            # gradient of the inner objective at y is c - ln(y/R_y) - 1
            w = logy + h * (c - (logy - math.log(self.R_y)))
            w -= w.max()
            logy_new = w - math.log(np.exp(w).sum()) + math.log(self.R_y)
            step = logy_new - logy
            logy = logy_new
            # remaining distance in log space is at most (1/e)/(1-1/e) of the last move;
            # on the simplex the gap is bounded by R_y * (spread of log error)
            resid = (np.max(step) - np.min(step)) / (math.e - 1.0)
            if self.R_y * resid <= tol:
                y = np.exp(logy)
                return y, k
        raise InnerBudgetExceeded(f"inner method used its budget of {budget} iterations")

    def budget(self, delta):
        return 2 * max(1, math.ceil(math.sqrt(self.L_G / self.kappa)
                                    * math.log(max(self.L_G * self.R_y ** 2 / delta, math.e))))


class QuadraticSaddle:
    """f(x) = max over ||y||_2 <= R_y of { -(kappa/2)||y - y0||^2 + <B y, x> }.

    Solved by accelerated projected gradient ascent; the closed form (a
    projected shift) is available for checks.
    """

    def __init__(self, B, kappa: float = 1.0, R_y: float = 1.0, y0=None):
        self.B = np.atleast_2d(np.asarray(B, dtype=np.float64))
        self.kappa = float(kappa)
        self.L_G = float(kappa)
        self.R_y = float(R_y)
        self.dim = self.B.shape[0]
        m = self.B.shape[1]
        self.y0 = np.zeros(m) if y0 is None else np.asarray(y0, float)

    def G(self, y):
        d = y - self.y0
        return -0.5 * self.kappa * float(np.dot(d, d))

    def _proj(self, y):
        ny = np.linalg.norm(y)
        return y * (self.R_y / ny) if ny > self.R_y else y

    def closed_form(self, x):
        c = self.B.T @ np.asarray(x, float)
        y = self._proj(self.y0 + c / self.kappa)
        return self.G(y) + float(np.dot(c, y)), y

    def inner_solve(self, x, tol, budget):
        c = self.B.T @ np.asarray(x, float)
        L, mu = self.L_G, self.kappa
        beta = (math.sqrt(L) - math.sqrt(mu)) / (math.sqrt(L) + math.sqrt(mu))
        y = self._proj(self.y0.copy())
        z = y.copy()
        for k in range(1, budget + 1):
            g = c - self.kappa * (z - self.y0)
            y_new = self._proj(z + g / L)
            # gradient mapping norm bounds the gap of a strongly concave objective
            gm = L * np.linalg.norm(y_new - z)
            z = y_new + beta * (y_new - y)
            y = y_new
            if gm * gm / (2 * mu) <= tol:
                return y, k
        raise InnerBudgetExceeded(f"inner method used its budget of {budget} iterations")

    def budget(self, delta):
        return 2 * max(1, math.ceil(math.sqrt(self.L_G / self.kappa)
                                    * math.log(max(self.L_G * self.R_y ** 2 / delta, math.e))))


def inner_max_oracle(saddle, x, delta: float, convention: str = "squared"):
    """Reply built from a delta/2-solution of the inner maximization.

    Returns (reply, spec) where reply = (G(y) + <B y, x>, B y) and spec is
    the certified (delta, 2 L_f, 0) oracle record.
    """
    x = np.asarray(x, dtype=np.float64)
    budget = saddle.budget(delta)
    y, iters = saddle.inner_solve(x, delta / 2, budget)
    By = saddle.B @ y
    value = saddle.G(y) + float(np.dot(By, x))
    sigma = float(np.linalg.norm(saddle.B, 2))
    Lf = lf_constant(sigma, saddle.kappa, convention)
    return OracleReply(value, By, iters), OracleSpec(delta=delta, L=2 * Lf, mu=0.0)


def inner_max_as_oracle(saddle, delta: float, convention: str = "squared") -> Callable:
    return lambda x, rng=None: inner_max_oracle(saddle, x, delta, convention)[0]
