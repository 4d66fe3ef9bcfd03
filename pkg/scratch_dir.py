"""Experiment: directional scale form in 1D on the power benchmark."""
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

for pen_name, pen in [("2NN", None),
                      ("0.05s", PenaltyConfig(lam=1e-3, epsilon=0.05 * sigma, diameter=D)),
                      ("0.15s", PenaltyConfig(lam=1e-3, epsilon=0.15 * sigma, diameter=D))]:
    for K in [1, 10]:
        t0 = time.time()
        try:
            loc = SolverConfig(tolerance=1e-4, max_iter=250, penalty=pen)
            cfg = GlobalConfig(N=K, seed=1, local=loc, scale_form="directional")
            res = solve_transport(X, Y, cfg)
            grid = evaluation_grid(np.vstack([X, Y]))
            rep = map_error_metrics(res.composed, ref, X, grid, cost=res.cost,
                                    kl_final=res.kl_final)
            minjac = min(s.diagnostics["min_map_jacobian_eig"] for s in res.local_solutions)
            hm = sum(s.diagnostics["hit_max_iter"] for s in res.local_solutions)
            print(f"eps={pen_name:5s} K={K:2d}: wL2={rep.weighted_l2:.3e} "
                  f"linf={rep.linf:.3e} slope={rep.monotone_min_slope:+.3f} "
                  f"minJac={minjac:+.2f} hitmax={hm} kl={rep.kl_final:+.2e} "
                  f"t={time.time()-t0:.1f}s")
        except StallError:
            print(f"eps={pen_name:5s} K={K:2d}: STALL t={time.time()-t0:.1f}s")
