"""First-order, stochastic and derivative-free convex optimization with inexact oracles."""
from . import spaces, oracles, zeroth_order, methods, certificates, problems, bench_cli

__all__ = ["spaces", "oracles", "zeroth_order", "methods", "certificates", "problems", "bench_cli"]
__version__ = "0.1.0"
