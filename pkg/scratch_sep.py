"""Scan mixture separations for a workable initial/final KL ratio."""
import numpy as np
import sys, time
sys.path.insert(0, "src")

from adot.datasets import DatasetSpec, GaussianSpec, MixtureSpec, generate
from adot.features import AdaptiveFamily
from adot.local import SolverConfig, fit_discriminator
from adot.objective import kl_estimate
from adot.transport import GlobalConfig, solve_transport


def kl_between(Z, Y, kind="directional", bumps=2):
    fam = AdaptiveFamily(Z.shape[1], scale_kind=kind, potential_bumps=0,
                         discriminator_bumps=bumps)
    beta = fit_discriminator(Z, Y, fam, SolverConfig())
    return kl_estimate(fam, beta, Z, Y)


# finite-sample floor: two independent draws of the same law
for var in [0.36]:
    mix = MixtureSpec([(0.5, GaussianSpec([-1.75], [[var]])),
                       (0.5, GaussianSpec([1.75], [[var]]))])
    A = generate(DatasetSpec(mix, 200, 101))
    B = generate(DatasetSpec(mix, 200, 102))
    print(f"1D mixture self-KL floor (n=200): {kl_between(A, B):+.4f}")

src = DatasetSpec(GaussianSpec([0.0], [[1.0]]), 200, 11)
for sep, var in [(1.5, 0.36), (1.75, 0.36), (2.0, 0.36), (2.0, 0.49)]:
    tgt = DatasetSpec(MixtureSpec([(0.5, GaussianSpec([-sep], [[var]])),
                                   (0.5, GaussianSpec([sep], [[var]]))]), 200, 12)
    X, Y = generate(src), generate(tgt)
    t0 = time.time()
    kl0 = kl_between(X, Y)
    res = solve_transport(X, Y, GlobalConfig(N=10, seed=11))
    hm = sum(x.diagnostics['hit_max_iter'] for x in res.local_solutions)
    print(f"sep={sep} var={var}: kl0={kl0:+.3f} kl={res.kl_final:+.4f} "
          f"ratio={res.kl_final/kl0:+.3f} hitmax={hm} t={time.time()-t0:.0f}s")
