"""Scratch: local solver on the fixed-point, shift, and scaling cases."""
import numpy as np
import sys, time
sys.path.insert(0, "src")

from adot.features import AdaptiveFamily, transport_map
from adot.local import SolverConfig, solve_local, fit_discriminator
from adot.objective import kl_estimate

rng = np.random.default_rng(42)

# --- case 1: X = Y ---------------------------------------------------------
X = rng.standard_normal((200, 1))
t0 = time.time()
cfg = SolverConfig(tolerance=1e-8, max_iter=300)
sol = solve_local(X, X, cfg)
print(f"[X=Y] iters={sol.iterations} rej={sol.rejected_steps} "
      f"|G|={sol.final_grad_norm:.2e} core={sol.lagrangian_trace[-1][1]:+.2e} "
      f"map_dev={sol.alpha.map_deviation():.2e}  t={time.time()-t0:.2f}s")
fam = AdaptiveFamily(1)
TX = transport_map(sol.alpha, X)
beta = fit_discriminator(TX, X, fam, SolverConfig(tolerance=1e-9, max_iter=200))
print(f"      kl={kl_estimate(fam, beta, TX, X):+.3e}")

# --- case 2: shift by 2 ----------------------------------------------------
X = rng.standard_normal((300, 1))
Y = X + 2.0
t0 = time.time()
sol = solve_local(X, Y, SolverConfig(tolerance=1e-7, max_iter=300))
TX = transport_map(sol.alpha, X)
err = np.max(np.abs(TX - (X + 2.0)))
print(f"[shift] iters={sol.iterations} rej={sol.rejected_steps} "
      f"|G|={sol.final_grad_norm:.2e} max|T-(x+2)|={err:.3e} t={time.time()-t0:.2f}s")

# --- case 3: scaling x -> 2x ----------------------------------------------
X = rng.standard_normal((300, 1))
Y = 2.0 * X
t0 = time.time()
sol = solve_local(X, Y, SolverConfig(tolerance=1e-7, max_iter=300))
TX = transport_map(sol.alpha, X)
wl2 = float(np.mean((TX - 2.0 * X) ** 2))
print(f"[scale] iters={sol.iterations} rej={sol.rejected_steps} "
      f"|G|={sol.final_grad_norm:.2e} wL2={wl2:.3e} t={time.time()-t0:.2f}s")

# --- case 4: affine 1D N(0,1)->N(2,4) same draw ----------------------------
X = rng.standard_normal((500, 1))
Y = 2.0 * X + 2.0
t0 = time.time()
sol = solve_local(X, Y, SolverConfig(tolerance=1e-7, max_iter=400))
TX = transport_map(sol.alpha, X)
wl2 = float(np.mean((TX - (2.0 * X + 2.0)) ** 2))
print(f"[affine] iters={sol.iterations} rej={sol.rejected_steps} "
      f"|G|={sol.final_grad_norm:.2e} wL2={wl2:.3e} t={time.time()-t0:.2f}s")
