"""Probe epsilon band for kink resolution vs overfit, directional 1D."""
import numpy as np
import sys, time
sys.path.insert(0, "src")

from adot.datasets import power_pair
from adot.local import SolverConfig, StallError
from adot.metrics import evaluation_grid, map_error_metrics
from adot.objective import PenaltyConfig
from adot.transport import GlobalConfig, solve_transport

for eps_mult in [0.02, 0.03, 0.05]:
    for lam in [1e-3, 3e-3]:
        outs = []
        t0 = time.time()
        for seed in [1, 2]:
            X, Y, ref = power_pair(500, 0.25, seed=seed)
            sigma = float(np.vstack([X, Y]).std())
            D = float(np.vstack([X, Y]).max() - np.vstack([X, Y]).min())
            pen = PenaltyConfig(lam=lam, epsilon=eps_mult * sigma, diameter=D)
            try:
                loc = SolverConfig(tolerance=1e-4, max_iter=250, penalty=pen)
                cfg = GlobalConfig(N=10, seed=seed, local=loc, scale_form="directional")
                res = solve_transport(X, Y, cfg)
                grid = evaluation_grid(np.vstack([X, Y]))
                rep = map_error_metrics(res.composed, ref, X, grid,
                                        cost=res.cost, kl_final=res.kl_final)
                minjac = min(s.diagnostics["min_map_jacobian_eig"]
                             for s in res.local_solutions)
                hm = sum(s.diagnostics["hit_max_iter"] for s in res.local_solutions)
                outs.append((rep.weighted_l2, rep.linf, rep.monotone_min_slope, minjac, hm))
            except StallError:
                outs.append((np.nan, np.nan, np.nan, np.nan, -1))
        msg = " | ".join(f"wL2={o[0]:.3e} linf={o[1]:.3f} slp={o[2]:+.2f} mJ={o[3]:+.2f} hm={o[4]}"
                         for o in outs)
        print(f"eps={eps_mult:.2f}s lam={lam:.0e}: {msg}  t={time.time()-t0:.1f}s")
