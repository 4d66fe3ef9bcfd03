"""Scratch FD verification of the analytic derivative assembly."""
import numpy as np
import sys
sys.path.insert(0, "src")

from adot.features import AdaptiveFamily
from adot.objective import PenaltyConfig, lagrangian, twisted_derivatives

rng = np.random.default_rng(0)


def random_state(family, rng, d):
    lay = family.layout
    alpha = 0.15 * rng.standard_normal(family.alpha_size)
    beta = 0.15 * rng.standard_normal(family.beta_size)
    # keep scales in a sane positive band
    for (_, _, ssl) in lay.potential.bump_slices:
        alpha[ssl] = rng.uniform(0.4, 1.3, ssl.stop - ssl.start)
    for (_, csl, ssl) in lay.discriminator.bump_slices:
        beta[ssl] = rng.uniform(0.4, 1.3, ssl.stop - ssl.start)
        beta[csl] = rng.standard_normal(d)
    for (_, csl, _) in lay.potential.bump_slices:
        alpha[csl] = rng.standard_normal(d)
    return alpha, beta


def fd_check(d, kind, seed):
    rng = np.random.default_rng(seed)
    family = AdaptiveFamily(d, scale_kind=kind, potential_bumps=1, discriminator_bumps=2)
    alpha, beta = random_state(family, rng, d)
    X = rng.standard_normal((10, d))
    Y = rng.standard_normal((10, d)) + 0.3
    cfg = PenaltyConfig(lam=3e-3, epsilon=0.1, diameter=4.0)

    td = twisted_derivatives(family, alpha, beta, X, Y, cfg)
    gbar = td.gbar
    a = family.alpha_size

    def L(gamma):
        return lagrangian(family, gamma[:a], gamma[a:], X, Y, cfg, gbar=gbar).penalized

    gamma = np.concatenate([alpha, beta])
    h = 1e-5
    fdG = np.zeros_like(gamma)
    for i in range(gamma.size):
        gp, gm = gamma.copy(), gamma.copy()
        gp[i] += h
        gm[i] -= h
        fdG[i] = (L(gp) - L(gm)) / (2 * h)
    fdG[a:] *= -1.0
    errG = np.max(np.abs(fdG - td.G)) / max(np.max(np.abs(td.G)), 1e-8)

    def Gfun(gamma):
        return twisted_derivatives(family, gamma[:a], gamma[a:], X, Y, cfg, gbar=gbar).G

    fdH = np.zeros((gamma.size, gamma.size))
    for i in range(gamma.size):
        gp, gm = gamma.copy(), gamma.copy()
        gp[i] += h
        gm[i] -= h
        fdH[:, i] = (Gfun(gp) - Gfun(gm)) / (2 * h)
    errH = np.max(np.abs(fdH - td.H)) / max(np.max(np.abs(td.H)), 1e-8)
    print(f"d={d} kind={kind:12s} seed={seed}  relG={errG:.2e}  relH={errH:.2e}")
    return errG, errH


for kind in ["isotropic", "directional", "diagonal", "full"]:
    for d in [1, 2]:
        for seed in [1, 2]:
            eg, eh = fd_check(d, kind, seed)
            assert eg < 1e-5, (kind, d, seed, eg)
            assert eh < 1e-4, (kind, d, seed, eh)
print("ALL OK")
