"""How a biased gradient oracle limits each member of the intermediate family.

A (delta, L)-oracle with delta = 1e-6 is fed to methods with p in [0, 1].
Faster methods accumulate the error: the plateau grows with p while the
dual gradient method stays at the level of delta.
Run: python3 demos/noise_accumulation.py
"""
import math

import numpy as np

from inexact_oracle import methods as M
from inexact_oracle.oracles import GradientBiasOracle, OracleSpec
from inexact_oracle.problems import QuadraticProblem
from inexact_oracle.spaces import Free, euclidean_setup

n, delta, N = 20, 1e-6, 1000
problem = QuadraticProblem(np.logspace(0, -4, n))
setup = euclidean_setup(Free())
x0 = tuple(0.1 * np.ones(n) / math.sqrt(n))

print(f"{'p':>5}  {'plateau / delta':>15}")
for p in (0.0, 0.25, 0.5, 0.75, 1.0):
    finals = []
    for seed in range(5):
        oracle = GradientBiasOracle(problem, delta, 1.0, direction=np.eye(n)[0])
        params = M.MethodParams(p=p, N=N, spec=OracleSpec(L=1.0), x0=x0, seed=seed)
        finals.append(M.intermediate_gradient(problem, setup, params, oracle=oracle).f_values[-1])
    print(f"{p:5.2f}  {np.median(finals) / delta:15.3f}")

print("\nnoise a p = 1 run tolerates at eps = 1e-4:", M.noise_threshold(1.0, 1.0, math.sqrt(0.5), 1e-4))
print("noise a p = 0 run tolerates at eps = 1e-4:", M.noise_threshold(0.0, 1.0, math.sqrt(0.5), 1e-4))
