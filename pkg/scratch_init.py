"""Experiment: diverse bump-width initialization."""
import numpy as np
import sys, time
sys.path.insert(0, "src")

import adot.features as F
from adot.datasets import power_pair
from adot.local import SolverConfig, StallError
from adot.metrics import evaluation_grid, map_error_metrics
from adot.objective import PenaltyConfig
from adot.transport import GlobalConfig, solve_transport

orig_place = F.AdaptiveFamily.place_bumps

def make_place(widths):
    def place(self, points, count, rng):
        points = np.atleast_2d(points)
        mean = points.mean(axis=0)
        std = points.std(axis=0)
        std = np.where(std > 1e-12, std, 1.0)
        bumps = []
        for k in range(count):
            center = mean + 0.1 * std * rng.standard_normal(self.d)
            w = widths[k % len(widths)] * float(std.mean())
            bumps.append(F.GaussianBump(0.0, center, F.default_scale(self.scale_kind, self.d, w)))
        return bumps
    return place

for name, widths in [("1.0", [1.0]), ("0.3", [0.3]), ("1.0/0.25", [1.0, 0.25]),
                     ("0.5/0.15", [0.5, 0.15])]:
    F.AdaptiveFamily.place_bumps = make_place(widths)
    outs = []
    t0 = time.time()
    for seed in [1, 2]:
        X, Y, ref = power_pair(500, 0.25, seed=seed)
        sigma = float(np.vstack([X, Y]).std())
        D = float(np.vstack([X, Y]).max() - np.vstack([X, Y]).min())
        pen = PenaltyConfig(lam=1e-3, epsilon=0.10 * sigma, diameter=D)
        try:
            loc = SolverConfig(tolerance=1e-4, max_iter=250, penalty=pen)
            cfg = GlobalConfig(N=10, seed=seed, local=loc, scale_form="directional")
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
    print(f"widths={name:9s}: {msg}  t={time.time()-t0:.0f}s")
F.AdaptiveFamily.place_bumps = orig_place
