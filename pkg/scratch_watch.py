"""Watch a thrashing local solve's parameter trajectory (sweep 1 step 6)."""
import numpy as np
import sys
sys.path.insert(0, "src")

from adot.datasets import power_pair
from adot.features import AdaptiveFamily, transport_map
from adot.local import SolverConfig, solve_local, implicit_step, NeedsSmallerEta
from adot import objective
from adot.transport import GlobalConfig, init_trajectory

X, Y, ref = power_pair(500, 0.25, seed=1)
cfg = GlobalConfig(N=10, seed=1, local=SolverConfig(tolerance=1e-6, max_iter=400))
family = AdaptiveFamily(1)
traj = init_trajectory(X, Y, cfg)

# run steps 1..5 to reach step 6's inputs
for t in range(1, 6):
    sol = solve_local(traj.steps[t-1], traj.steps[t] if t < 10 else Y, cfg.local,
                      family=family, seed=cfg.seed * 1000003 + t)
    traj.steps[t] = transport_map(sol.alpha, traj.steps[t-1])

source, target = traj.steps[5], traj.steps[6]
pen = objective.default_penalty_config(source, target, lam=cfg.local.lam)
print(f"eps={pen.epsilon:.5f} D={pen.diameter:.3f} "
      f"src range [{source.min():.2f},{source.max():.2f}] "
      f"tgt range [{target.min():.2f},{target.max():.2f}]")

rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed*1000003+6, spawn_key=(7,)))
alpha = family.init_alpha(source, rng)
quad, _ = objective.init_discriminator(source, target)
beta = family.init_beta(quad, target, rng)
gamma = np.concatenate([alpha, beta])
a = family.alpha_size
eta = cfg.local.eta0
lay = family.layout

td = objective.twisted_derivatives(family, gamma[:a], gamma[a:], source, target, pen)
for it in range(120):
    if td.grad_norm < cfg.local.tolerance:
        print("converged at", it)
        break
    gbar = td.gbar
    tries = 0
    while True:
        tries += 1
        why = ""
        try:
            prop = implicit_step(gamma, td.G, td.H, eta)
            if not family.admissible_step(gamma, prop):
                raise NeedsSmallerEta("barrier")
            if np.max(np.abs(prop - gamma)) > cfg.local.max_step_rel * (1 + pen.diameter):
                raise NeedsSmallerEta("cap")
            new = objective.lagrangian(family, prop[:a], prop[a:], source, target, pen, gbar=gbar)
            ma = objective.lagrangian(family, gamma[:a], prop[a:], source, target, pen, gbar=gbar)
            mb = objective.lagrangian(family, prop[:a], gamma[a:], source, target, pen, gbar=gbar)
            ba = 1e-11 * (1 + abs(ma.alpha_side))
            bb = 1e-11 * (1 + abs(mb.beta_objective))
            rej = False
            if new.alpha_side > ma.alpha_side + ba:
                rej, why = True, f"a({new.alpha_side - ma.alpha_side:.1e})"
            if new.beta_objective < mb.beta_objective - bb:
                rej, why = True, why + f"b({mb.beta_objective - new.beta_objective:.1e})"
            if not np.isfinite(new.penalized):
                rej, why = True, "inf"
        except (NeedsSmallerEta, objective.NonFiniteError) as e:
            rej, why = True, str(e)[:22]
        if rej:
            if eta <= cfg.local.eta_min * (1 + 1e-12):
                print("STALL")
                sys.exit()
            eta = max(eta * cfg.local.shrink, cfg.local.eta_min)
        else:
            gamma = prop
            eta = min(eta * cfg.local.grow, cfg.local.eta_max)
            break
    td = objective.twisted_derivatives(family, gamma[:a], gamma[a:], source, target, pen)
    bamp = [gamma[a + i] for i in [lay.discriminator.bump_slices[0][0], lay.discriminator.bump_slices[1][0]]]
    bscale = [gamma[a + lay.discriminator.bump_slices[0][2].start],
              gamma[a + lay.discriminator.bump_slices[1][2].start]]
    pamp = gamma[lay.potential.bump_slices[0][0]]
    pscale = gamma[lay.potential.bump_slices[0][2].start]
    print(f"it={it:3d} tries={tries:2d} eta={eta:8.1e} |G|={td.grad_norm:8.2e} "
          f"L={td.value.penalized:+.4f} gamp={bamp[0]:+8.2f},{bamp[1]:+8.2f} "
          f"gscl={bscale[0]:7.1f},{bscale[1]:7.1f} pamp={pamp:+7.3f} pscl={pscale:7.1f} [{why}]")
