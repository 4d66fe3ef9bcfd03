"""Reproduce the pipeline stall manually and dump the stalled state."""
import numpy as np
import sys
sys.path.insert(0, "src")

from adot.datasets import power_pair
from adot.features import AdaptiveFamily
from adot.local import SolverConfig, StallError, solve_local, implicit_step, NeedsSmallerEta
from adot import objective
from adot.transport import GlobalConfig, init_trajectory, backward_sweep
from adot.features import transport_map

X, Y, ref = power_pair(500, 0.25, seed=1)
cfg = GlobalConfig(N=10, seed=1, local=SolverConfig(tolerance=1e-6, max_iter=400))
family = AdaptiveFamily(1)
traj = init_trajectory(X, Y, cfg)
warm = None

for sweep in range(1, 6):
    sols = []
    stall = None
    for t in range(1, cfg.N + 1):
        source = traj.steps[t - 1]
        target = Y if t == cfg.N else traj.steps[t]
        w = warm[t - 1] if warm else None
        try:
            sol = solve_local(source, target, cfg.local, family=family,
                              warm=w, seed=cfg.seed * 1000003 + t)
        except StallError as e:
            print(f"sweep {sweep} step {t} STALL: |G|={e.grad_norm:.2e} iters={e.iterations}")
            stall = (sweep, t, source, target, w)
            break
        sols.append(sol)
        traj.steps[t] = transport_map(sol.alpha, source)
        print(f"sweep {sweep} step {t}: iters={sol.iterations} rej={sol.rejected_steps} "
              f"|G|={sol.final_grad_norm:.1e} hitmax={sol.diagnostics['hit_max_iter']}")
    if stall:
        sweep, t, source, target, w = stall
        # replay the local solve with instrumentation
        pen = objective.default_penalty_config(source, target, lam=cfg.local.lam)
        print(f"pen eps={pen.epsilon:.5f} D={pen.diameter:.3f}")
        rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed * 1000003 + t, spawn_key=(7,)))
        if w is not None:
            alpha, beta = np.array(w[0]), np.array(w[1])
        else:
            alpha = family.init_alpha(source, rng)
            quad, _ = objective.init_discriminator(source, target)
            beta = family.init_beta(quad, target, rng)
        gamma = np.concatenate([alpha, beta])
        a = family.alpha_size
        eta = cfg.local.eta0
        td = objective.twisted_derivatives(family, gamma[:a], gamma[a:], X=source, Y=target, cfg=pen)
        for it in range(400):
            if td.grad_norm < cfg.local.tolerance:
                print("converged", it)
                break
            gbar = td.gbar
            ok = False
            for attempt in range(80):
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
                    rej = (new.alpha_side > ma.alpha_side + ba
                           or new.beta_objective < mb.beta_objective - bb)
                    why = "a" if new.alpha_side > ma.alpha_side + ba else ("b" if rej else "")
                    if not np.isfinite(new.penalized):
                        rej = True
                except (NeedsSmallerEta, objective.NonFiniteError) as e:
                    rej, why = True, f"exc:{e}"
                if rej:
                    if eta <= cfg.local.eta_min * (1 + 1e-12):
                        print(f"STALLED it={it} |G|={td.grad_norm:.3e} why={why}")
                        i = np.argmax(np.abs(td.G))
                        print(f"  argmax G: {i} (a={a}) val={td.G[i]:.3e}")
                        print(f"  alpha={gamma[:a]}")
                        print(f"  beta={gamma[a:]}")
                        dbY = family.dis_bundle(gamma[a:], target, order=0)
                        dbT = family.dis_bundle(gamma[a:], family.map_points(gamma[:a], source), order=0)
                        print(f"  max g(y)={dbY.g.max():.2f} min g(y)={dbY.g.min():.2f}")
                        print(f"  max g(T)={dbT.g.max():.2f}")
                        sys.exit()
                    eta = max(eta * cfg.local.shrink, cfg.local.eta_min)
                else:
                    gamma = prop
                    eta = min(eta * cfg.local.grow, cfg.local.eta_max)
                    ok = True
                    break
            td = objective.twisted_derivatives(family, gamma[:a], gamma[a:], X=source, Y=target, cfg=pen)
            if it % 40 == 0:
                print(f"  it={it} |G|={td.grad_norm:.2e} eta={eta:.1e} Lpen={td.value.penalized:+.4f}")
        sys.exit()
    warm = [(s.alpha_flat, s.beta_flat) for s in sols]
    backward_sweep(traj)
print("no stall")
