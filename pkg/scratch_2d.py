"""Dial sweep for the 2D annulus qualitative run."""
import numpy as np
import sys, time
sys.path.insert(0, "src")

from adot.datasets import AnnulusSpec, DatasetSpec, GaussianSpec, generate
from adot.local import SolverConfig, StallError
from adot.objective import PenaltyConfig
from adot.transport import GlobalConfig, solve_transport

src2 = DatasetSpec(GaussianSpec([2.0, 2.0], [[0.25, 0.0], [0.0, 0.25]]), 300, 14)
ann = DatasetSpec(AnnulusSpec([0.0, 0.0], 1.0, 2.0), 300, 15)
X, Y = generate(src2), generate(ann)
pooled = np.vstack([X, Y])
spread = float(pooled.std(axis=0).mean())
span = pooled.max(axis=0) - pooled.min(axis=0)
D = float(np.sqrt((span ** 2).sum()))
print(f"spread={spread:.3f} D={D:.3f}")

for eps_mult, lam in [(0.1, 1e-3), (0.2, 1e-3), (0.3, 1e-3), (0.2, 1e-2), (0.3, 1e-2)]:
    pen = PenaltyConfig(lam=lam, epsilon=eps_mult * spread, diameter=D)
    t0 = time.time()
    try:
        loc = SolverConfig(penalty=pen)
        cfg = GlobalConfig(N=30, seed=13, local=loc)
        res = solve_transport(X, Y, cfg)
        TX = res.trajectory.steps[-1]
        r = np.sqrt((TX ** 2).sum(axis=1))
        q5, q95 = np.percentile(r, [5, 95])
        hm = sum(s.diagnostics["hit_max_iter"] for s in res.local_solutions)
        max_amp = max(max(abs(b.amplitude) for b in s.alpha.bumps)
                      for s in res.local_solutions)
        print(f"eps={eps_mult}s lam={lam:.0e}: kl={res.kl_final:+.3f} sweeps={res.sweeps} "
              f"hitmax={hm} maxamp={max_amp:.1f} radii=({q5:.2f},{q95:.2f}) "
              f"t={time.time()-t0:.0f}s")
    except StallError as e:
        print(f"eps={eps_mult}s lam={lam:.0e}: STALL t={time.time()-t0:.0f}s")
