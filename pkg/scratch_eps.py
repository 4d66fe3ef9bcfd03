"""Experiment: benchmark quality vs penalty epsilon / lambda."""
import numpy as np
import sys, time
sys.path.insert(0, "src")

from adot.datasets import power_pair
from adot.local import SolverConfig, StallError
from adot.metrics import evaluation_grid, map_error_metrics
from adot.objective import PenaltyConfig
from adot.transport import GlobalConfig, solve_transport

X, Y, ref = power_pair(500, 0.25, seed=1)
sigma = float(np.vstack([X, Y]).std())
D = float(np.vstack([X, Y]).max() - np.vstack([X, Y]).min())
print(f"sigma={sigma:.3f} D={D:.3f}")

for lam in [1e-3, 1e-2]:
    for eps_name, eps in [("2NN", None), ("0.1s", 0.1 * sigma), ("0.2s", 0.2 * sigma),
                          ("0.4s", 0.4 * sigma)]:
        pen = None if eps is None else PenaltyConfig(lam=lam, epsilon=eps, diameter=D)
        t0 = time.time()
        try:
            loc = SolverConfig(tolerance=1e-4, max_iter=250, penalty=pen, lam=lam)
            cfg = GlobalConfig(N=10, seed=1, local=loc)
            res = solve_transport(X, Y, cfg)
            grid = evaluation_grid(np.vstack([X, Y]))
            rep = map_error_metrics(res.composed, ref, X, grid, cost=res.cost,
                                    kl_final=res.kl_final)
            minjac = min(s.diagnostics["min_map_jacobian_eig"] for s in res.local_solutions)
            hm = sum(s.diagnostics["hit_max_iter"] for s in res.local_solutions)
            print(f"lam={lam:.0e} eps={eps_name:5s}: wL2={rep.weighted_l2:.3e} "
                  f"linf={rep.linf:.3e} slope={rep.monotone_min_slope:+.3f} "
                  f"minJac={minjac:+.2f} hitmax={hm} t={time.time()-t0:.1f}s")
        except StallError as e:
            print(f"lam={lam:.0e} eps={eps_name:5s}: STALL t={time.time()-t0:.1f}s")
