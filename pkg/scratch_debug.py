"""Debug the stall on the shift problem."""
import numpy as np
import sys
sys.path.insert(0, "src")

from adot.features import AdaptiveFamily
from adot import objective
from adot.local import SolverConfig, implicit_step, NeedsSmallerEta

rng = np.random.default_rng(42)
_ = rng.standard_normal((200, 1))  # consume like scratch_solver did
X = rng.standard_normal((300, 1))
Y = X + 2.0

d = 1
family = AdaptiveFamily(d)
cfg = SolverConfig(tolerance=1e-7, max_iter=300)
pen = objective.default_penalty_config(X, Y, lam=cfg.lam)
print(f"penalty eps={pen.epsilon:.4f} D={pen.diameter:.4f}")

srng = np.random.default_rng(np.random.SeedSequence(entropy=0, spawn_key=(7,)))
alpha = family.init_alpha(X, srng)
quad, _diag = objective.init_discriminator(X, Y)
beta = family.init_beta(quad, Y, srng)
gamma = np.concatenate([alpha, beta])
a = family.alpha_size
print("alpha0:", alpha)
print("beta0:", beta)

eta = cfg.eta0
td = objective.twisted_derivatives(family, gamma[:a], gamma[a:], X, Y, pen)
for it in range(60):
    if td.grad_norm < cfg.tolerance:
        print("converged")
        break
    gbar = td.gbar
    ok = False
    tries = 0
    while not ok and tries < 60:
        tries += 1
        try:
            prop = implicit_step(gamma, td.G, td.H, eta)
            new = objective.lagrangian(family, prop[:a], prop[a:], X, Y, pen, gbar=gbar)
            ma = objective.lagrangian(family, gamma[:a], prop[a:], X, Y, pen, gbar=gbar)
            mb = objective.lagrangian(family, prop[:a], gamma[a:], X, Y, pen, gbar=gbar)
            rej = new.alpha_side > ma.alpha_side or new.core < mb.core
            why = ""
            if new.alpha_side > ma.alpha_side:
                why += f" a-side {new.alpha_side:.6e} > {ma.alpha_side:.6e}"
            if new.core < mb.core:
                why += f" b-side {new.core:.6e} < {mb.core:.6e}"
        except (NeedsSmallerEta, objective.NonFiniteError) as e:
            rej = True
            why = f" exc={e}"
        if rej:
            if eta <= cfg.eta_min * (1 + 1e-12):
                print(f"STALL at it={it} |G|={td.grad_norm:.3e} why={why}")
                sys.exit()
            eta *= cfg.shrink
        else:
            gamma = prop
            eta = min(eta * cfg.grow, cfg.eta_max)
            ok = True
    td = objective.twisted_derivatives(family, gamma[:a], gamma[a:], X, Y, pen)
    if it % 5 == 0 or it < 12:
        print(f"it={it:3d} eta={eta:9.2e} |G|={td.grad_norm:9.3e} "
              f"Lpen={td.value.penalized:+.5f} core={td.value.core:+.5f} tries={tries}")
print("final alpha:", gamma[:a])
