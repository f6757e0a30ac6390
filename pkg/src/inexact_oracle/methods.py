"""First-order methods under exact, stochastic and inexact oracles.

All methods take a ``Problem`` (used for the true objective that the trace
records), a ``ProxSetup`` and ``MethodParams``.  The gradient source is the
exact oracle of the problem unless an ``oracle(x, rng) -> OracleReply`` is
passed explicitly.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .oracles import OracleSpec, Problem, eval_exact
from .spaces import (ProxSetup, mirror_step, norm, dual_exponent, make_rng,
                     Simplex, Ball2, AffineSum, Box, BallQ, project)

L_CAP = 2.0 ** 60


class BacktrackingFailure(RuntimeError):
    pass


class BudgetExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class MethodParams:
    """Knobs shared by the methods.

    ``R`` is a bound on the prox distance: V(x*, x0) <= R^2 for the
    accelerated family and the mirror step rule (for the entropy prox on
    Simplex(r) a valid choice is r * sqrt(ln n)).
    """
    p: float = 0.0
    N: int = 1000
    eps: Optional[float] = None
    spec: OracleSpec = field(default_factory=OracleSpec)
    R: float = 1.0
    x0: Optional[tuple] = None
    seed: int = 0
    rate_constant: float = 1.0
    step_rule: str = "constant"
    record_points: bool = False
    record_values: bool = True

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValueError("p must lie in [0, 1]")
        if self.N < 1:
            raise ValueError("iteration budget must be positive")


@dataclass
class RunTrace:
    method: str
    seed: int = 0
    f_values: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)
    oracle_queries: list = field(default_factory=list)
    coord_updates: list = field(default_factory=list)
    wall_ns: list = field(default_factory=list)
    points: list = field(default_factory=list)
    grads: list = field(default_factory=list)
    x_out: Optional[np.ndarray] = None
    x_avg: Optional[np.ndarray] = None
    S_N: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.lambdas)

    @property
    def total_queries(self) -> int:
        return self.oracle_queries[-1] if self.oracle_queries else 0

    def write_csv(self, path, include_wall: bool = False, gap: Optional[float] = None, header_lines=()):
        """Columns k, f_value, grad_norm, lambda_k, oracle_queries, wall_ns.

        Wall-clock times are written as 0 unless ``include_wall`` so that
        reruns produce identical files.
        """
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "f_value", "grad_norm", "lambda_k", "oracle_queries", "wall_ns"])
            for k in range(self.iterations):
                fv = self.f_values[k] if k < len(self.f_values) else float("nan")
                w.writerow([k + 1, repr(float(fv)), repr(float(self.grad_norms[k])),
                            repr(float(self.lambdas[k])), self.oracle_queries[k],
                            self.wall_ns[k] if include_wall else 0])
            if gap is not None:
                fh.write(f"# gap={float(gap)!r}\n")


class _Recorder:
    def __init__(self, name, problem, params, setup):
        self.trace = RunTrace(method=name, seed=params.seed)
        self.problem = problem
        self.params = params
        self.q = dual_exponent(setup.norm_q) if setup is not None else 2.0
        self.queries = 0
        self.coords = 0
        self.t0 = time.perf_counter_ns()
        self.wsum = None
        self.S = 0.0

    def query(self, oracle, x, rng):
        reply = oracle(x, rng)
        self.queries += reply.queries_used
        return reply

    def step(self, x_query, reply, lam, x_report, coords=0):
        t = self.trace
        self.coords += coords
        t.grad_norms.append(norm(reply.grad, self.q))
        t.lambdas.append(float(lam))
        t.oracle_queries.append(self.queries)
        t.coord_updates.append(self.coords)
        t.wall_ns.append(time.perf_counter_ns() - self.t0)
        if self.params.record_values:
            t.f_values.append(self.problem.value(x_report))
        if self.params.record_points:
            t.points.append(np.array(x_query, copy=True))
            t.grads.append(np.array(reply.grad, copy=True))
        self.wsum = lam * x_query if self.wsum is None else self.wsum + lam * x_query
        self.S += lam

    def finish(self, x_out, **meta):
        t = self.trace
        t.x_out = np.asarray(x_out, float)
        t.S_N = self.S
        t.x_avg = self.wsum / self.S if self.S > 0 else t.x_out
        t.meta.update(meta)
        return t


def _oracle_for(problem, oracle):
    if oracle is not None:
        return oracle
    return lambda x, rng=None: eval_exact(problem, x)


def _start(problem, setup, params):
    if params.x0 is not None:
        return np.asarray(params.x0, dtype=np.float64).copy()
    return prox_center(setup, problem.dim)


def prox_center(setup: ProxSetup, n: int) -> np.ndarray:
    """Minimizer of the prox function over the domain."""
    dom = setup.domain
    if isinstance(dom, Simplex):
        return np.full(n, dom.r / n)
    if isinstance(dom, AffineSum):
        return np.full(n, dom.value / n)
    if isinstance(dom, Box):
        return project(dom, np.zeros(n))
    return np.zeros(n)


# ---------------------------------------------------------------------------
# non-accelerated methods

def mirror_descent(problem: Problem, prox: ProxSetup, params: MethodParams, rng=None, oracle=None) -> RunTrace:
    """Mirror descent with weights equal to the steps; reports the weighted average.

    Step rules: ``"constant"`` uses h = (R / M) sqrt(2 alpha / N) and needs
    spec.M; ``"normalized"`` uses h_k = R sqrt(2 alpha / N) / ||g_k||_*.
    With V(x*, x0) <= R^2 the gap of the average is at most
    M R sqrt(2 / (alpha N)).
    """
    rng = make_rng(params.seed) if rng is None else rng
    oracle = _oracle_for(problem, oracle)
    N = params.N
    rule = params.step_rule
    M = params.spec.M
    if rule == "constant" and not M > 0:
        rule = "normalized"
    base = params.R * math.sqrt(2 * prox.alpha / N)
    rec = _Recorder("mirror_descent", problem, params, prox)
    x = _start(problem, prox, params)
    xbar = None
    for k in range(N):
        reply = rec.query(oracle, x, rng)
        g = reply.grad
        if rule == "constant":
            h = base / M
        else:
            gn = norm(g, rec.q)
            h = base / gn if gn > 0 else base
        xbar = x.copy() if xbar is None else xbar + (h / (rec.S + h)) * (x - xbar)
        rec.step(x, reply, h, xbar)
        x = mirror_step(prox, x, g, h)
    return rec.finish(xbar, step_rule=rule)


def sgd_strongly_convex(problem: Problem, params: MethodParams, rng=None, oracle=None, prox: ProxSetup = None) -> RunTrace:
    """Projected stochastic gradient steps h_k = 2 / (mu (k + 1)) with weight-k averaging."""
    mu = params.spec.mu
    if not mu > 0:
        raise ValueError("strongly convex SGD needs mu > 0")
    from .spaces import euclidean_setup
    prox = prox or euclidean_setup(problem.domain)
    if prox.prox_kind != "euclidean":
        raise ValueError("strongly convex SGD is Euclidean only; use restart_strongly_convex otherwise")
    rng = make_rng(params.seed) if rng is None else rng
    oracle = _oracle_for(problem, oracle)
    rec = _Recorder("sgd_strongly_convex", problem, params, prox)
    x = _start(problem, prox, params)
    xbar = x.copy()
    for k in range(1, params.N + 1):
        reply = rec.query(oracle, x, rng)
        lam = float(k)
        xbar = xbar + (lam / (rec.S + lam)) * (x - xbar)
        rec.step(x, reply, lam, xbar)
        x = project(prox.domain, x - (2.0 / (mu * (k + 1))) * reply.grad)
    return rec.finish(xbar)


def _need_L(params):
    L = params.spec.L
    if not L > 0:
        raise ValueError("this method needs spec.L > 0")
    return L


def pgm(problem: Problem, prox: ProxSetup, params: MethodParams, rng=None, oracle=None) -> RunTrace:
    """Primal gradient method: x_{k+1} = mirror step from x_k with step 1/L.

    With ``step_rule="backtracking"`` L is adapted from the upper model
    inequality (doubling on violation, halving once per accepted step).
    """
    rng = make_rng(params.seed) if rng is None else rng
    oracle = _oracle_for(problem, oracle)
    L = _need_L(params)
    L_floor = L / 64
    adaptive = params.step_rule == "backtracking"
    delta = params.spec.delta
    rec = _Recorder("pgm", problem, params, prox)
    x = _start(problem, prox, params)
    reply = rec.query(oracle, x, rng)
    for k in range(params.N):
        if adaptive:
            L = max(L / 2, L_floor)
            while True:
                y = mirror_step(prox, x, reply.grad, 1.0 / L)
                ry = rec.query(oracle, y, rng)
                d = y - x
                model = reply.value + float(np.dot(reply.grad, d)) + 0.5 * L * norm(d, prox.norm_q) ** 2 + delta
                if ry.value <= model + 1e-14 * abs(model):
                    break
                L *= 2
                if L > L_CAP:
                    raise BacktrackingFailure("L grew past 2^60")
        else:
            y = mirror_step(prox, x, reply.grad, 1.0 / L)
            ry = rec.query(oracle, y, rng)
        rec.step(x, reply, 1.0 / L, y)
        x, reply = y, ry
    return rec.finish(x, L_final=L)


def _alpha_schedule(p):
    """Weights alpha_k = ((k+1)/2)^p, shrunk when needed so alpha_k^2 <= A_k."""
    def alpha(k, A_prev):
        a = ((k + 1) / 2.0) ** p
        if k == 0:
            return min(a, 1.0)
        if a * a > A_prev + a:
            a = (1 + math.sqrt(1 + 4 * A_prev)) / 2
        return a
    return alpha


def _estimate_sequence(name, problem, prox, params, rng, oracle, alpha_fn, full_momentum):
    """Shared engine of the dual, fast and intermediate gradient methods.

    psi_k(x) = L V(x, x0) + sum_i alpha_i <g_i, x> is the accumulated model,
    z_k its minimizer.  Each step mixes z_k with the output y_k using
    tau = alpha_{k+1} / B_{k+1}, makes a prox step from z_k, and averages
    the result into y with weight B_{k+1} / A_{k+1}.  The invariant
    A_k f(y_k) <= psi_k^* + delta * sum_i B_i gives
    f(y_k) - f* <= (L R^2 + delta sum_{i<=k} B_i) / A_k.
    ``full_momentum`` takes B = A (the fast method); otherwise
    B = max(alpha, alpha^2).
    """
    rng = make_rng(params.seed) if rng is None else rng
    oracle = _oracle_for(problem, oracle)
    L = _need_L(params)
    rec = _Recorder(name, problem, params, prox)
    x0 = _start(problem, prox, params)
    z = x0.copy()
    y = x0.copy()
    G = np.zeros_like(x0)
    A = 0.0
    B_sum = 0.0
    for k in range(params.N):
        a = alpha_fn(k, A)
        A_new = A + a
        B = A_new if full_momentum else min(A_new, max(a, a * a))
        tau = a / B
        x = tau * z + (1 - tau) * y if k > 0 else z.copy()
        reply = rec.query(oracle, x, rng)
        xh = mirror_step(prox, z, reply.grad, a / L)
        w = tau * xh + (1 - tau) * y
        y = ((A_new - B) * y + B * w) / A_new
        A = A_new
        B_sum += B
        G += a * reply.grad
        z = mirror_step(prox, x0, G, 1.0 / L)
        rec.step(x, reply, a, y)
    return rec.finish(y, A_N=A, B_sum=B_sum, bound=(L * params.R ** 2 + params.spec.delta * B_sum) / A)


def dgm(problem, prox, params, rng=None, oracle=None) -> RunTrace:
    """Dual gradient method: constant weights, output is the running average of prox steps."""
    return _estimate_sequence("dgm", problem, prox, params, rng, oracle, lambda k, A: 1.0, False)


def fgm(problem, prox, params, rng=None, oracle=None) -> RunTrace:
    """Fast gradient method with weights alpha_k = (k+1)/2 and A_k = (k+1)(k+2)/4."""
    return _estimate_sequence("fgm", problem, prox, params, rng, oracle, lambda k, A: (k + 1) / 2.0, True)


def intermediate_gradient(problem, prox, params, rng=None, oracle=None) -> RunTrace:
    """p-family between the dual (p = 0) and fast (p = 1) methods.

    alpha_k grows like k^p so A_N ~ N^{p+1}, while the inexactness enters
    through sum B_i ~ N^{2p+1}; the gap is O(L R^2 / N^{p+1} + N^p delta).
    """
    return _estimate_sequence(f"intermediate(p={params.p:g})", problem, prox, params, rng, oracle,
                              _alpha_schedule(params.p), False)


# ---------------------------------------------------------------------------
# universal method

def _bounded_linear_min(setup: ProxSetup, c, n):
    """min over the domain of <c, u>, or None when the domain is unbounded."""
    dom = setup.domain
    if isinstance(dom, Simplex):
        return dom.r * float(np.min(c))
    if isinstance(dom, Ball2):
        return -dom.R * float(np.linalg.norm(c))
    if isinstance(dom, BallQ):
        return -dom.R * norm(c, dual_exponent(dom.q))
    if isinstance(dom, Box):
        lo, hi = np.asarray(dom.lo, float), np.asarray(dom.hi, float)
        return float(np.sum(np.minimum(c * lo, c * hi)))
    return None


def universal_method(problem: Problem, prox: ProxSetup, target_eps: float, R: float = None,
                     max_iter: int = 10 ** 6, L0: float = 1.0, rng=None, oracle=None,
                     record_values: bool = True, seed: int = 0, f_target: float = None) -> RunTrace:
    """Fast gradient method that adapts to the Holder smoothness on the fly.

    No smoothness constants are supplied.  Every step searches L by
    doubling until f(w) <= f(x) + <g, w - x> + (L/2)||w - x||^2 + eps*tau/2
    and halves L once after acceptance.  The run stops when the gap
    certificate f(y) - min_u (1/A) sum alpha_i (f(x_i) + <g_i, u - x_i>)
    falls below eps (bounded domains), or when R^2 / A_k <= eps/2 if a prox
    radius R is given for an unbounded domain.  Benchmarks with a known
    optimum may pass ``f_target`` to stop as soon as f(y_k) <= f_target.
    """
    rng = make_rng(seed) if rng is None else rng
    oracle = _oracle_for(problem, oracle)
    eps = float(target_eps)
    params = MethodParams(N=1, seed=seed, record_values=record_values)
    rec = _Recorder("universal", problem, params, prox)
    n = problem.dim
    x0 = prox_center(prox, n)
    z = x0.copy()
    y = x0.copy()
    fy = None
    G = np.zeros(n)
    lin_const = 0.0         # sum alpha_i (f(x_i) - <g_i, x_i>)
    A = 0.0
    L = float(L0)
    L_floor = L0 / 64
    gap = math.inf
    trials = 0
    for k in range(max_iter):
        L = max(L / 2, L_floor) if k > 0 else L
        while True:
            a = (1 + math.sqrt(1 + 4 * L * A)) / (2 * L)
            A_new = A + a
            tau = a / A_new
            x = tau * z + (1 - tau) * y
            reply = rec.query(oracle, x, rng)
            xh = mirror_step(prox, z, reply.grad, a)
            w = tau * xh + (1 - tau) * y
            rw = rec.query(oracle, w, rng)
            trials += 1
            d = w - x
            model = reply.value + float(np.dot(reply.grad, d)) + 0.5 * L * norm(d, prox.norm_q) ** 2 + 0.5 * eps * tau
            if rw.value <= model:
                break
            L *= 2
            if L > L_CAP:
                raise BacktrackingFailure("L grew past 2^60")
        y, fy = w, rw.value
        A = A_new
        G += a * reply.grad
        lin_const += a * (reply.value - float(np.dot(reply.grad, x)))
        z = mirror_step(prox, x0, G, 1.0)
        rec.step(x, reply, a, y)
        if f_target is not None and fy <= f_target:
            return rec.finish(y, gap=fy - f_target, L_final=L, trials=trials, converged=True,
                              stopped_by="f_target")
        m = _bounded_linear_min(prox, G, n)
        if m is not None:
            gap = fy - (lin_const + m) / A
        elif R is not None:
            gap = R * R / A + 0.5 * eps
        else:
            raise ValueError("unbounded domain: pass a prox radius R for the stopping rule")
        if gap <= eps:
            return rec.finish(y, gap=gap, L_final=L, trials=trials, converged=True)
    raise BudgetExhausted(f"universal method did not reach eps={eps} in {max_iter} iterations")


def universal_plan(eps: float, L_of_nu: Callable, R: float, grid: int = 101) -> float:
    """N(eps) = inf over nu of (2^{(3+5nu)/2} L_nu R^{1+nu} / eps)^{2/(1+3nu)}.

    ``L_of_nu`` maps nu to the Holder constant (inf where it does not exist).
    """
    best = math.inf
    for nu in np.linspace(0.0, 1.0, grid):
        Lnu = L_of_nu(float(nu))
        if not math.isfinite(Lnu):
            continue
        val = (2 ** ((3 + 5 * nu) / 2) * Lnu * R ** (1 + nu) / eps) ** (2 / (1 + 3 * nu))
        best = min(best, val)
    return best


# ---------------------------------------------------------------------------
# restarts, regularization, parameter doubling, stopping

def restart_strongly_convex(problem: Problem, prox: ProxSetup, mu: float, target_eps: float,
                            L: float, R: float, p: float = 1.0, oracle=None, seed: int = 0,
                            max_stages: int = 200) -> RunTrace:
    """Restart an accelerated method each time its guaranteed gap halves.

    With V(x*, x) <= omega (f(x) - f*) / mu after a stage started at x, a
    stage of N iterations with A_N >= 2 omega L / mu halves the gap bound.
    Starts from the bound L R^2 / 2 and stops once it is below eps.
    """
    if not mu > 0:
        raise ValueError("restarts need mu > 0")
    omega = prox.omega / prox.alpha
    alpha_fn = (lambda k, A: (k + 1) / 2.0) if p == 1 else _alpha_schedule(p)
    target_A = 2 * omega * L / mu
    A, N_stage = 0.0, 0
    while A < target_A:
        A += alpha_fn(N_stage, A)
        N_stage += 1
    bound = 0.5 * L * R * R
    x = None
    total = RunTrace(method=f"restart(p={p:g})", seed=seed)
    stages = 0
    f_prev = None
    while bound > target_eps:
        if stages >= max_stages:
            raise BudgetExhausted("restart stage limit reached")
        params = MethodParams(p=p, N=N_stage, spec=OracleSpec(L=L), seed=seed + stages,
                              x0=None if x is None else tuple(x), R=math.sqrt(bound * omega / mu))
        tr = (fgm if p == 1 else intermediate_gradient)(problem, prox, params, oracle=oracle)
        base = total.total_queries
        total.f_values += tr.f_values
        total.grad_norms += tr.grad_norms
        total.lambdas += tr.lambdas
        total.oracle_queries += [base + q for q in tr.oracle_queries]
        total.coord_updates += tr.coord_updates
        total.wall_ns += tr.wall_ns
        f_new = problem.value(tr.x_out)
        if f_prev is not None and f_new > f_prev + 1e-12 * max(1.0, abs(f_prev)):
            raise RuntimeError("restart stage failed to decrease the objective")
        x, f_prev = tr.x_out, f_new
        bound /= 2
        stages += 1
    total.x_out = x if x is not None else prox_center(prox, problem.dim)
    total.x_avg = total.x_out
    total.S_N = float(sum(total.lambdas))
    total.meta.update(stages=stages, stage_length=N_stage, bound=bound)
    return total


class RegularizedProblem(Problem):
    """f(x) + (mu/2)||x - x0||_2^2."""

    def __init__(self, base: Problem, mu: float, x0):
        self.base = base
        self.mu = float(mu)
        self.x0 = np.asarray(x0, dtype=np.float64)
        self.dim = base.dim
        self.domain = base.domain
        s = base.spec
        self.spec = replace(s, mu=s.mu + self.mu, L=s.L + self.mu)

    def value(self, x):
        d = np.asarray(x, float) - self.x0
        return self.base.value(x) + 0.5 * self.mu * float(np.dot(d, d))

    def grad(self, x):
        return self.base.grad(x) + self.mu * (np.asarray(x, float) - self.x0)

    def partial(self, x, i):
        return self.base.partial(x, i) + self.mu * (x[i] - self.x0[i])


def regularize(problem: Problem, eps: float, R: float, x0=None) -> RegularizedProblem:
    """Add (eps / R^2) ||x - x0||^2 / 2; the objective moves by at most eps/2 inside radius R."""
    x0 = np.zeros(problem.dim) if x0 is None else x0
    return RegularizedProblem(problem, eps / (R * R), x0)


def doubling_R(method_factory: Callable, verifier: Callable, eps: float, R0: float = 1.0,
               R_cap: float = 2.0 ** 30) -> RunTrace:
    """Run ``method_factory(R)`` for R = R0, 2 R0, ... until ``verifier(trace, eps)`` accepts."""
    R = R0
    work = 0
    history = []
    while R <= R_cap:
        tr = method_factory(R)
        work += tr.total_queries
        history.append((R, tr.total_queries))
        if verifier(tr, eps):
            tr.meta.update(R_final=R, total_work=work, stages=history)
            return tr
        R *= 2
    raise BudgetExhausted(f"no radius up to {R_cap:g} was accepted")


def grad_norm_criterion(grad_norm: float, mu: float, eps: float) -> bool:
    """||grad f||_*^2 / (2 mu) <= eps, which implies f - f* <= eps."""
    return grad_norm * grad_norm / (2 * mu) <= eps


def stop_by_grad_norm(trace: RunTrace, mu: float, eps: float) -> bool:
    return bool(trace.grad_norms) and grad_norm_criterion(trace.grad_norms[-1], mu, eps)


# ---------------------------------------------------------------------------
# planners (constants inside O(.) set to 1)

def plan_mirror_descent(M: float, R: float, eps: float) -> int:
    return math.ceil(M * M * R * R / (eps * eps) - 1e-9)


def plan_sgd_strongly_convex(M: float, mu: float, eps: float) -> int:
    return math.ceil(M * M / (mu * eps) - 1e-9)


def plan_intermediate(p: float, L: float, R: float, eps: float, D: float = 0.0) -> int:
    """N = max{(L R^2 / eps)^{1/(p+1)}, D R^2 / eps^2}."""
    return math.ceil(max((L * R * R / eps) ** (1.0 / (p + 1)), D * R * R / eps ** 2) - 1e-9)


def plan_intermediate_strongly_convex(p: float, L: float, mu: float, R: float, eps: float) -> int:
    return math.ceil((L / mu) ** (1.0 / (p + 1)) * math.log(max(L * R * R / eps, math.e)) - 1e-9)


def noise_threshold(p: float, L: float, R: float, eps: float) -> float:
    """Largest bias keeping the p-method's rate: eps (eps / L R^2)^{p/(p+1)}."""
    return eps * (eps / (L * R * R)) ** (p / (p + 1))


def noise_threshold_strongly_convex(p: float, L: float, mu: float, eps: float) -> float:
    return eps * (mu / L) ** (p / (p + 1))


def plan_zeroth_order(n: int, L: float, R: float, eps: float, p: float = 0.0) -> int:
    return math.ceil(n * (L * R * R / eps) ** (1.0 / (p + 1)) - 1e-9)
