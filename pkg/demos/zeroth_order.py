"""Gradient-free minimization with the two-point randomized estimator.

The same quadratic family is solved from function values only in several
dimensions; iterations to reach the target grow linearly with n.
Run: python3 demos/zeroth_order.py
"""
import math

import numpy as np

from inexact_oracle import methods as M
from inexact_oracle.oracles import OracleSpec, ValueOracle
from inexact_oracle.problems import QuadraticProblem
from inexact_oracle.spaces import Free, euclidean_setup
from inexact_oracle.zeroth_order import SmoothingParams, gradient_oracle, zeroth_order_step_L

eps = 1e-4
print(f"{'n':>4}  {'iterations':>10}  {'value queries':>13}")
for n in (5, 10, 20, 40):
    problem = QuadraticProblem(np.linspace(1, 0.1, n))
    oracle = gradient_oracle(ValueOracle(problem), SmoothingParams(tau=1e-6, dim=n))
    hits = []
    for seed in range(3):
        params = M.MethodParams(N=50_000, spec=OracleSpec(L=zeroth_order_step_L(n, 1.0)),
                                x0=tuple(np.ones(n) / math.sqrt(n)), seed=seed)
        f = np.asarray(M.pgm(problem, euclidean_setup(Free()), params, oracle=oracle).f_values)
        hits.append(int(np.argmax(f <= eps)) + 1)
    k = float(np.mean(hits))
    print(f"{n:4d}  {k:10.0f}  {2 * k:13.0f}")
