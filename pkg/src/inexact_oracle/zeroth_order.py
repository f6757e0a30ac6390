"""Derivative-free gradient estimates from (noisy) function values."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .spaces import sample_unit_sphere, sample_unit_ball, norm

TAU_FLOOR_FACTOR = 2.0 ** -26


@dataclass(frozen=True)
class SmoothingParams:
    tau: float
    gamma: float = 0.0
    dim: int = 1

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")


def tau_floor(x) -> float:
    """Smallest usable finite-difference radius at x."""
    return TAU_FLOOR_FACTOR * (1.0 + norm(x, 2))


def effective_tau(tau: float, x) -> float:
    fl = tau_floor(x)
    if tau < fl:
        warnings.warn(f"tau={tau:.3g} is below the rounding floor {fl:.3g}; using the floor",
                      RuntimeWarning, stacklevel=3)
        return fl
    return tau


def tau_nonsmooth(eps: float, M: float) -> float:
    """Radius that keeps the smoothing bias below eps/2 for an M-Lipschitz f."""
    return eps / (2.0 * M)


def tau_smooth(delta: float, L: float) -> float:
    """Radius balancing smoothing bias and noise for an L-smooth f."""
    return math.sqrt(delta / L)


def two_point_grad(value_oracle, x, params: SmoothingParams, rng) -> np.ndarray:
    """(n/tau) (f(x + tau s, xi) - f(x, xi)) s with s uniform on the sphere.

    Both values are taken under one realization xi, so noise that does not
    depend on x cancels.  Exactly two value queries.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    tau = effective_tau(params.tau, x)
    s = sample_unit_sphere(n, rng)
    xi = value_oracle.draw(rng)
    f1 = value_oracle.value(x + tau * s, xi)
    f0 = value_oracle.value(x, xi)
    return (n / tau) * (f1 - f0) * s


def double_smooth_grad(value_oracle, x, params: SmoothingParams, rng) -> np.ndarray:
    """Two-point estimate taken at x + gamma * s1 with s1 uniform in the ball.

    With gamma = 0 this is :func:`two_point_grad` draw for draw.
    """
    if params.gamma == 0:
        return two_point_grad(value_oracle, x, params, rng)
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    shift = params.gamma * sample_unit_ball(n, rng)
    return two_point_grad(value_oracle, x + shift, params, rng)


def smoothed_value(value_oracle, x, tau: float, mc_samples: int, rng):
    """Monte-Carlo estimate of f_tau(x) = E f(x + tau u, xi), u uniform in the ball.

    Returns (estimate, standard_error).
    """
    x = np.asarray(x, dtype=np.float64)
    vals = np.empty(mc_samples)
    for k in range(mc_samples):
        u = sample_unit_ball(x.size, rng)
        vals[k] = value_oracle.value(x + tau * u, value_oracle.draw(rng))
    se = float(vals.std(ddof=1) / math.sqrt(mc_samples)) if mc_samples > 1 else math.inf
    return float(vals.mean()), se


def quadratic_smoothed_value(x, tau: float) -> float:
    """Closed form of f_tau for f = ||x||^2 / 2."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    return 0.5 * float(np.dot(x, x)) + 0.5 * tau * tau * n / (n + 2)


def norm_bound(n: int, M: float, delta: float, tau: float) -> float:
    """Almost-sure bound on ||two_point_grad||_2."""
    return n * (M + 2 * delta / tau)


def second_moment_bound(n: int, grad_norm: float, L: float, tau: float, delta: float = 0.0) -> float:
    """Bound on E ||two_point_grad||^2 for an L-smooth f with bounded noise."""
    return 4 * n * grad_norm ** 2 + (L * tau * n) ** 2 + 8 * (delta * n / tau) ** 2


def iteration_rate(n: int, L: float, R: float, eps: float, p: float = 0.0) -> float:
    """Order of iterations n (L R^2 / eps)^{1/(p+1)} for a derivative-free method."""
    return n * (L * R * R / eps) ** (1.0 / (p + 1))


def noise_tolerance(n: int, L: float, R: float, eps: float, p: float = 0.0) -> float:
    """Noise level (1/n) eps (eps / L R^2)^{p/(p+1)} below which the rate is kept."""
    return eps * (eps / (L * R * R)) ** (p / (p + 1)) / n


def gradient_oracle(value_oracle, params: SmoothingParams):
    """Oracle (x, rng) -> OracleReply whose gradient is the (double) smoothed estimate.

    The reply's value is NaN; each call costs two value queries.
    """
    from .oracles import OracleReply

    def call(x, rng):
        g = double_smooth_grad(value_oracle, x, params, rng)
        return OracleReply(math.nan, g, 2)
    return call


def zeroth_order_step_L(n: int, L: float) -> float:
    """Effective smoothness 4 n L for a gradient method driven by two-point estimates."""
    return 4.0 * n * L
