"""Experiment: stabilize multi-bump runs (trust cap, lambda)."""
import numpy as np
import sys, time
sys.path.insert(0, "src")

from adot.datasets import power_pair
from adot.local import SolverConfig, StallError
from adot.metrics import evaluation_grid, map_error_metrics
from adot.objective import PenaltyConfig
from adot.transport import GlobalConfig, solve_transport

combos = [
    # pb, db, eps_mult, lam, cap
    (1, 2, 0.10, 1e-3, 0.5),
    (1, 2, 0.10, 3e-3, 0.5),
    (2, 2, 0.10, 3e-3, 0.5),
    (2, 3, 0.10, 3e-3, 0.5),
    (2, 3, 0.10, 1e-2, 0.5),
    (2, 3, 0.05, 3e-3, 0.25),
]
for pb, db, eps_mult, lam, cap in combos:
    outs = []
    t0 = time.time()
    for seed in [1, 2]:
        X, Y, ref = power_pair(500, 0.25, seed=seed)
        sigma = float(np.vstack([X, Y]).std())
        D = float(np.vstack([X, Y]).max() - np.vstack([X, Y]).min())
        pen = PenaltyConfig(lam=lam, epsilon=eps_mult * sigma, diameter=D)
        try:
            loc = SolverConfig(tolerance=1e-4, max_iter=250, penalty=pen,
                               max_step_rel=cap)
            cfg = GlobalConfig(N=10, seed=seed, local=loc, scale_form="directional",
                               potential_bumps=pb, discriminator_bumps=db)
            res = solve_transport(X, Y, cfg)
            grid = evaluation_grid(np.vstack([X, Y]))
            rep = map_error_metrics(res.composed, ref, X, grid,
                                    cost=res.cost, kl_final=res.kl_final)
            hm = sum(s.diagnostics["hit_max_iter"] for s in res.local_solutions)
            outs.append((rep.weighted_l2, rep.linf, rep.monotone_min_slope, hm))
        except StallError:
            outs.append((np.nan, np.nan, np.nan, -1))
    msg = " | ".join(f"wL2={o[0]:.2e} linf={o[1]:.3f} slp={o[2]:+.2f} hm={o[3]}"
                     for o in outs)
    print(f"pb={pb} db={db} eps={eps_mult:.2f}s lam={lam:.0e} cap={cap}: {msg}  "
          f"t={time.time()-t0:.0f}s")
