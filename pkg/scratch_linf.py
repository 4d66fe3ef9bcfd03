"""Where does the sup error occur, and what reduces it?"""
import numpy as np
import sys, time
sys.path.insert(0, "src")

from adot.datasets import power_pair, reference_eval
from adot.local import SolverConfig
from adot.metrics import evaluation_grid, map_error_metrics
from adot.objective import PenaltyConfig
from adot.transport import GlobalConfig, solve_transport, apply_map

X, Y, ref = power_pair(500, 0.25, seed=1)
sigma = float(np.vstack([X, Y]).std())
D = float(np.vstack([X, Y]).max() - np.vstack([X, Y]).min())
pen = PenaltyConfig(lam=1e-3, epsilon=0.15 * sigma, diameter=D)

for tol, mi, sweeps, stol in [(1e-4, 250, 5, 1e-3), (1e-5, 400, 5, 1e-3),
                              (1e-4, 250, 8, 1e-4)]:
    t0 = time.time()
    loc = SolverConfig(tolerance=tol, max_iter=mi, penalty=pen)
    cfg = GlobalConfig(N=10, seed=1, local=loc, max_sweeps=sweeps, sweep_tol=stol)
    res = solve_transport(X, Y, cfg)
    grid = evaluation_grid(np.vstack([X, Y]))
    rep = map_error_metrics(res.composed, ref, X, grid, cost=res.cost, kl_final=res.kl_final)
    Tg = apply_map(res.composed, grid)
    refg = reference_eval(ref, grid)
    err = np.abs(Tg - refg).ravel()
    i = int(np.argmax(err))
    print(f"tol={tol:.0e} mi={mi} sw={sweeps}/{stol:.0e}: wL2={rep.weighted_l2:.3e} "
          f"linf={rep.linf:.3e} at x={grid[i,0]:+.2f} "
          f"(data range [{X.min():+.2f},{X.max():+.2f}]) sweeps={res.sweeps} "
          f"t={time.time()-t0:.1f}s")
    # error profile at a few grid locations
    qs = np.linspace(0, len(grid) - 1, 9).astype(int)
    prof = " ".join(f"{grid[q,0]:+.1f}:{err[q]:.3f}" for q in qs)
    print(f"   profile {prof}")
