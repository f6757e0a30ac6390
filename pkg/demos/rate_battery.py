"""Convergence slopes of the gradient family on an ill-conditioned quadratic.

The intermediate method interpolates between the dual gradient method
(p = 0, slope -1) and the fast gradient method (p = 1, slope -2).
Run: python3 demos/rate_battery.py
"""
import math

import numpy as np

from inexact_oracle import methods as M
from inexact_oracle.bench_cli import fit_rate
from inexact_oracle.oracles import OracleSpec
from inexact_oracle.problems import quadratic_battery
from inexact_oracle.spaces import Free, euclidean_setup

n, N = 100, 10_000
problem = quadratic_battery(n, log_cond=8)
setup = euclidean_setup(Free())
x0 = tuple(np.ones(n) / math.sqrt(n))

print(f"{'method':>14}  {'slope':>7}  {'final gap':>10}")
for name, fn, p in [("pgm", M.pgm, 0.0), ("dgm", M.dgm, 0.0), ("p = 0.25", M.intermediate_gradient, 0.25),
                    ("p = 0.5", M.intermediate_gradient, 0.5), ("p = 0.75", M.intermediate_gradient, 0.75),
                    ("fgm", M.fgm, 1.0)]:
    tr = fn(problem, setup, M.MethodParams(p=p, N=N, spec=OracleSpec(L=1.0), x0=x0))
    fit = fit_rate(tr.f_values, window=(N // 10, N))
    print(f"{name:>14}  {fit.slope:7.3f}  {tr.f_values[-1]:10.3e}")
