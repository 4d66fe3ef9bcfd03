"""Per-step diagnosis of the K=10 chain (sweep 1)."""
import numpy as np
import sys
sys.path.insert(0, "src")

from adot.datasets import power_pair
from adot.features import AdaptiveFamily, transport_map
from adot.local import SolverConfig, solve_local
from adot.transport import GlobalConfig, init_trajectory

X, Y, ref = power_pair(500, 0.25, seed=1)
K = 10
cfg = GlobalConfig(N=K, seed=1, local=SolverConfig(tolerance=1e-4, max_iter=250))
family = AdaptiveFamily(1)
traj = init_trajectory(X, Y, cfg)
orig = [s.copy() for s in traj.steps]

for t in range(1, K + 1):
    source = traj.steps[t - 1]
    target = Y if t == K else traj.steps[t]
    sol = solve_local(source, target, cfg.local, family=family, seed=1000003 + t)
    newz = transport_map(sol.alpha, source)
    # ideal monotone map between the clouds: rank alignment
    src_sorted = np.sort(source[:, 0])
    tgt_sorted = np.sort(target[:, 0])
    ranks = np.argsort(np.argsort(source[:, 0]))
    ideal = tgt_sorted[ranks].reshape(-1, 1)
    err = float(np.mean((newz - ideal) ** 2))
    p = sol.alpha
    bump = p.bumps[0]
    print(f"t={t:2d}: it={sol.iterations:3d} rej={sol.rejected_steps:3d} "
          f"|G|={sol.final_grad_norm:.1e} wL2(vs ideal)={err:.2e} "
          f"A0={p.A0[0,0]:+.3f} a1={p.a1[0]:+.3f} amp={bump.amplitude:+.3f} "
          f"ctr={bump.center[0]:+.2f} scl={bump.scale.v:.2f} "
          f"minJac={sol.diagnostics['min_map_jacobian_eig']:+.3f} "
          f"L={sol.lagrangian_trace[-1][1]:+.5f}")
    traj.steps[t] = newz

# composed map on a grid
grid = np.linspace(X.min(), X.max(), 21).reshape(-1, 1)
Q = grid.copy()
alphas = []
# recompute with stored trajectory? redo composition quality directly:
print("\ngrid check: composed vs reference")
