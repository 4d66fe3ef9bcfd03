"""Final validation: 5-seed K-sweep and n-sweep with shipped defaults."""
import numpy as np
import sys, time
sys.path.insert(0, "src")

from adot.local import SolverConfig
from adot.metrics import aggregate_rows, convergence_suite
from adot.transport import GlobalConfig

seeds = [1, 2, 3, 4, 5]
base = GlobalConfig(local=SolverConfig(tolerance=1e-4, max_iter=250))

t0 = time.time()
rows = convergence_suite("steps", [1, 10], seeds, base=base)
agg = aggregate_rows(rows)
for r in rows:
    print(f"  K={r.param:2d} seed={r.seed}: wL2={r.weighted_l2:.3e} linf={r.linf:.3e} "
          f"{r.error or ''} ({r.runtime_s:.1f}s)")
for r in agg:
    print(f"AGG K={r.param:2d}: wL2={r.weighted_l2:.3e} linf={r.linf:.3e}")
m = {r.param: r for r in agg}
print(f"ratio K10/K1 = {m[10].weighted_l2 / m[1].weighted_l2:.4f} (need <= 1/3)")
print(f"K-sweep total {time.time()-t0:.0f}s")

t0 = time.time()
rows = convergence_suite("samples", [25, 100, 500], seeds, base=base)
agg = aggregate_rows(rows)
for r in agg:
    print(f"AGG n={r.param:3d}: wL2={r.weighted_l2:.3e} linf={r.linf:.3e} {r.error or ''}")
print(f"n-sweep total {time.time()-t0:.0f}s")
