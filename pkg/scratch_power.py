"""Scratch: power-map benchmark quality at K=1 and K=10."""
import numpy as np
import sys, time
sys.path.insert(0, "src")

from adot.datasets import power_pair
from adot.local import SolverConfig
from adot.metrics import evaluation_grid, map_error_metrics
from adot.transport import GlobalConfig, solve_transport

for K in [1, 10]:
    t0 = time.time()
    X, Y, ref = power_pair(500, 0.25, seed=1)
    cfg = GlobalConfig(N=K, seed=1, local=SolverConfig(tolerance=1e-6, max_iter=400))
    res = solve_transport(X, Y, cfg)
    grid = evaluation_grid(np.vstack([X, Y]))
    rep = map_error_metrics(res.composed, ref, X, grid, cost=res.cost, kl_final=res.kl_final)
    iters = [s.iterations for s in res.local_solutions]
    print(f"K={K:2d} sweeps={res.sweeps} wL2={rep.weighted_l2:.4e} "
          f"linf={rep.linf:.4e} min_slope={rep.monotone_min_slope:+.4f} "
          f"cost={rep.cost:.4f} kl={rep.kl_final:+.3e} "
          f"hitmax={sum(s.diagnostics['hit_max_iter'] for s in res.local_solutions)} "
          f"iters(mean)={np.mean(iters):.0f} t={time.time()-t0:.1f}s")
