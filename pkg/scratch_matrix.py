"""Experiment: pipeline quality vs local tolerance / max_iter."""
import numpy as np
import sys, time
sys.path.insert(0, "src")

from adot.datasets import power_pair
from adot.local import SolverConfig, StallError
from adot.metrics import evaluation_grid, map_error_metrics
from adot.transport import GlobalConfig, solve_transport

for tol, mi in [(1e-6, 400), (1e-4, 250), (3e-4, 150)]:
    for K in [1, 10]:
        t0 = time.time()
        try:
            X, Y, ref = power_pair(500, 0.25, seed=1)
            cfg = GlobalConfig(N=K, seed=1, local=SolverConfig(tolerance=tol, max_iter=mi))
            res = solve_transport(X, Y, cfg)
            grid = evaluation_grid(np.vstack([X, Y]))
            rep = map_error_metrics(res.composed, ref, X, grid, cost=res.cost,
                                    kl_final=res.kl_final)
            hm = sum(s.diagnostics['hit_max_iter'] for s in res.local_solutions)
            it = np.mean([s.iterations for s in res.local_solutions])
            print(f"tol={tol:.0e} mi={mi} K={K:2d}: sweeps={res.sweeps} "
                  f"wL2={rep.weighted_l2:.3e} linf={rep.linf:.3e} "
                  f"slope={rep.monotone_min_slope:+.3f} kl={rep.kl_final:+.2e} "
                  f"hitmax={hm} it={it:.0f} t={time.time()-t0:.1f}s")
        except StallError as e:
            print(f"tol={tol:.0e} mi={mi} K={K:2d}: STALL {e} t={time.time()-t0:.1f}s")
