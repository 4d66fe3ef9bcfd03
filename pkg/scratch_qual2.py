"""Qualitative runs with overlapping-component reconstructions."""
import numpy as np
import sys, time
sys.path.insert(0, "src")

from adot.datasets import (AnnulusSpec, DatasetSpec, GaussianSpec, MixtureSpec, generate)
from adot.features import AdaptiveFamily
from adot.local import SolverConfig, fit_discriminator
from adot.objective import kl_estimate
from adot.transport import GlobalConfig, solve_transport


def kl_between(Z, Y, scale_kind, bumps=2):
    fam = AdaptiveFamily(Z.shape[1], scale_kind=scale_kind, potential_bumps=0,
                         discriminator_bumps=bumps)
    beta = fit_discriminator(Z, Y, fam, SolverConfig())
    return kl_estimate(fam, beta, Z, Y)


runs = []
src = DatasetSpec(GaussianSpec([0.0], [[1.0]]), 200, 11)
tgt = DatasetSpec(MixtureSpec([(0.5, GaussianSpec([-1.5], [[0.49]])),
                               (0.5, GaussianSpec([1.5], [[0.49]]))]), 200, 12)
runs.append(("1D G->2G N=10", src, tgt, GlobalConfig(N=10, seed=11)))

tgt3 = DatasetSpec(MixtureSpec([(1/3, GaussianSpec([-2.2], [[0.49]])),
                                (1/3, GaussianSpec([0.0], [[0.49]])),
                                (1/3, GaussianSpec([2.2], [[0.49]]))]), 200, 13)
runs.append(("1D G->3G N=20", src, tgt3, GlobalConfig(N=20, seed=12)))

src2 = DatasetSpec(GaussianSpec([2.0, 2.0], [[0.25, 0.0], [0.0, 0.25]]), 300, 14)
ann = DatasetSpec(AnnulusSpec([0.0, 0.0], 1.0, 2.0), 300, 15)
runs.append(("2D G->annulus N=30", src2, ann, GlobalConfig(N=30, seed=13)))

src3 = DatasetSpec(GaussianSpec([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]]), 300, 16)
tgt2g = DatasetSpec(MixtureSpec([(0.5, GaussianSpec([-1.5, 0.0], [[0.25, 0], [0, 0.25]])),
                                 (0.5, GaussianSpec([1.5, 0.0], [[0.25, 0], [0, 0.25]]))]),
                    300, 17)
runs.append(("2D G->2G N=30 diag", src3, tgt2g,
             GlobalConfig(N=30, seed=14, scale_form="diagonal")))

for name, s, t, cfg in runs:
    X, Y = generate(s), generate(t)
    kind = cfg.scale_form
    if kind == "auto":
        kind = "directional" if X.shape[1] == 1 else "isotropic"
    t0 = time.time()
    kl0 = kl_between(X, Y, kind)
    res = solve_transport(X, Y, cfg)
    line = (f"{name:20s}: kl0={kl0:+.3f} kl={res.kl_final:+.4f} "
            f"ratio={res.kl_final / kl0 if kl0 else float('nan'):+.3f} "
            f"sweeps={res.sweeps} "
            f"hitmax={sum(x.diagnostics['hit_max_iter'] for x in res.local_solutions)} "
            f"stall={len(res.diagnostics['stalled_steps'])} t={time.time()-t0:.0f}s")
    if "annulus" in name:
        TX = res.trajectory.steps[-1]
        r = np.sqrt((TX ** 2).sum(axis=1))
        q5, q95 = np.percentile(r, [5, 95])
        line += f" radii=({q5:.2f},{q95:.2f})"
    print(line)
