"""Global transport between two sample sets via a chain of local solves.

The displacement is split over N intermediate sample clouds initialized on
straight lines between paired source and target points.  Forward sweeps
solve one local game per link and push the cloud along; backward sweeps
re-place the intermediate clouds on the straight lines between the source
and its current image, which is what makes the composition of the local
maps optimal rather than merely feasible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .features import AdaptiveFamily, PotentialParams, transport_map
from .local import SolverConfig, fit_discriminator, solve_local
from .objective import kl_estimate

__all__ = [
    "PAIRINGS",
    "Trajectory",
    "ComposedMap",
    "GlobalConfig",
    "TransportResult",
    "init_trajectory",
    "forward_sweep",
    "backward_sweep",
    "solve_transport",
    "apply_map",
    "transport_cost",
]

PAIRINGS = ("index", "sorted", "random")


@dataclass
class Trajectory:
    """Intermediate sample clouds z_0 .. z_N; z_0 is pinned to the source.

    All steps share the source's row count; after a backward sweep the
    interior rows sit exactly on the segments from z_0 to z_N.
    """

    steps: list

    def __post_init__(self):
        shapes = {s.shape for s in self.steps}
        if len(shapes) != 1:
            raise ValueError(f"trajectory steps disagree in shape: {shapes}")

    @property
    def N(self) -> int:
        return len(self.steps) - 1

    def copy(self) -> "Trajectory":
        return Trajectory([s.copy() for s in self.steps])


@dataclass
class ComposedMap:
    """Ordered local potentials whose gradient maps compose into the
    global transport map (first entry applied first)."""

    locals: list  # of PotentialParams

    def __call__(self, P: np.ndarray) -> np.ndarray:
        return apply_map(self, P)


@dataclass
class GlobalConfig:
    """Outer-loop knobs: chain length, sweep policy, pairing, and the
    local solver configuration."""

    N: int = 10
    max_sweeps: int = 5
    sweep_tol: float = 1e-3
    pairing: str = "auto"
    local: SolverConfig = field(default_factory=SolverConfig)
    seed: int = 0
    scale_form: str = "auto"   # directional in 1D, isotropic otherwise
    potential_bumps: int = 1
    discriminator_bumps: int = 2

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if self.pairing not in PAIRINGS + ("auto",):
            raise ValueError(f"pairing must be one of {PAIRINGS + ('auto',)}")


@dataclass
class TransportResult:
    composed: ComposedMap
    trajectory: Trajectory
    sweeps: int
    kl_final: float
    cost: float
    converged: bool
    local_solutions: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


def _resolve_pairing(pairing: str, n: int, m: int, d: int) -> str:
    if pairing != "auto":
        if pairing == "index" and n != m:
            raise ValueError("index pairing requires equal sample counts")
        return pairing
    if d == 1:
        return "sorted"
    return "index" if n == m else "random"


def _pair_indices(X: np.ndarray, Y: np.ndarray, pairing: str, rng) -> np.ndarray:
    """sigma: row i of X is paired with row sigma[i] of Y."""
    n, m = X.shape[0], Y.shape[0]
    if pairing == "index":
        return np.arange(n)
    if pairing == "sorted":
        # ascending order matched to ascending order; in 1D this is the
        # minimal-cost assignment
        rank = np.empty(n, dtype=int)
        rank[np.argsort(X[:, 0], kind="stable")] = np.arange(n)
        order_y = np.argsort(Y[:, 0], kind="stable")
        pos = np.minimum((rank * m) // n, m - 1)
        return order_y[pos]
    if pairing == "random":
        return rng.integers(0, m, size=n)
    raise ValueError(f"unknown pairing {pairing!r}")


def init_trajectory(X: np.ndarray, Y: np.ndarray, cfg: GlobalConfig) -> Trajectory:
    """Straight-line intermediate clouds z_t = ((N-t) x + t y_sigma)/N.

    The pairing sigma only shapes the first sweep's targets; the final
    link always targets the raw Y during the solve.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise ValueError("source and target dimension mismatch")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(3,)))
    pairing = _resolve_pairing(cfg.pairing, X.shape[0], Y.shape[0], X.shape[1])
    sigma = _pair_indices(X, Y, pairing, rng)
    Yp = Y[sigma]
    N = cfg.N
    steps = [X.copy()]
    for t in range(1, N):
        steps.append(((N - t) * X + t * Yp) / N)
    steps.append(Yp.copy())
    return Trajectory(steps)


def backward_sweep(traj: Trajectory) -> Trajectory:
    """Re-place interior clouds on the segments from z_0 to z_N (in place)."""
    N = traj.N
    z0, zN = traj.steps[0], traj.steps[N]
    for t in range(1, N):
        traj.steps[t] = ((N - t) * z0 + t * zN) / N
    return traj


def _family_for(cfg: GlobalConfig, d: int) -> AdaptiveFamily:
    kind = cfg.scale_form
    if kind == "auto":
        kind = "directional" if d == 1 else "isotropic"
    return AdaptiveFamily(d, scale_kind=kind,
                          potential_bumps=cfg.potential_bumps,
                          discriminator_bumps=cfg.discriminator_bumps)


def forward_sweep(traj: Trajectory, Y: np.ndarray, cfg: GlobalConfig,
                  warm: list | None = None,
                  family: AdaptiveFamily | None = None):
    """Solve the N local games in order and push the clouds along.

    Link t solves between the (already updated) z_{t-1} and its target,
    which is the interpolant z_t for t < N and the raw Y for the last
    link; z_t is then replaced by the solved map applied to z_{t-1}.
    Returns (ComposedMap, trajectory, local solutions).
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    N = traj.N
    family = family or _family_for(cfg, Y.shape[1])
    warm = warm or [None] * N
    locals_, solutions = [], []
    for t in range(1, N + 1):
        source = traj.steps[t - 1]
        target = Y if t == N else traj.steps[t]
        sol = solve_local(source, target, cfg.local, family=family,
                          warm_alpha=warm[t - 1], seed=cfg.seed * 1000003 + t)
        solutions.append(sol)
        locals_.append(sol.alpha)
        traj.steps[t] = transport_map(sol.alpha, source)
    return ComposedMap(locals_), traj, solutions


def apply_map(composed: ComposedMap, P: np.ndarray) -> np.ndarray:
    """Apply the local gradient maps in order to every row of P; valid on
    held-out points as well as the training source."""
    P = np.asarray(P, dtype=float)
    single = P.ndim == 1
    Q = np.atleast_2d(P).copy()
    for params in composed.locals:
        Q = transport_map(params, Q)
    return Q[0] if single else Q


def transport_cost(composed: ComposedMap, X: np.ndarray) -> float:
    """Mean squared displacement (1/n) sum |T(x_i) - x_i|^2."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.size == 0:
        raise ValueError("X must be nonempty")
    TX = apply_map(composed, X)
    return float(np.mean(np.sum((TX - X) ** 2, axis=1)))


def solve_transport(X: np.ndarray, Y: np.ndarray, cfg: GlobalConfig) -> TransportResult:
    """Alternate forward and backward sweeps until the pushed cloud stops
    moving, then score the final map."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    family = _family_for(cfg, X.shape[1])
    traj = init_trajectory(X, Y, cfg)
    warm = None
    composed = None
    solutions = []
    converged = False
    sweeps = 0
    t_start = time.time()
    for sweeps in range(1, cfg.max_sweeps + 1):
        prev_zN = traj.steps[-1].copy()
        composed, traj, solutions = forward_sweep(traj, Y, cfg, warm=warm, family=family)
        warm = [s.alpha_flat for s in solutions]
        denom = max(float(np.linalg.norm(prev_zN)), 1e-300)
        change = float(np.linalg.norm(traj.steps[-1] - prev_zN)) / denom
        if change < cfg.sweep_tol:
            converged = True
            break
        if sweeps < cfg.max_sweeps:
            backward_sweep(traj)
    TX = traj.steps[-1]
    beta = fit_discriminator(TX, Y, family, cfg.local, seed=cfg.seed)
    kl_family = AdaptiveFamily(X.shape[1], scale_kind=family.scale_kind,
                               potential_bumps=0,
                               discriminator_bumps=family.n_discriminator_bumps)
    kl_final = kl_estimate(kl_family, beta, TX, Y)
    cost = transport_cost(composed, X)
    any_hit_max = any(s.diagnostics.get("hit_max_iter") for s in solutions)
    stalled_steps = [t + 1 for t, s in enumerate(solutions)
                     if s.diagnostics.get("stalled")]
    return TransportResult(
        composed=composed,
        trajectory=traj,
        sweeps=sweeps,
        kl_final=kl_final,
        cost=cost,
        converged=converged and not any_hit_max and not stalled_steps,
        local_solutions=solutions,
        diagnostics={
            "final_change": change,
            "runtime_s": time.time() - t_start,
            "local_hit_max_iter": any_hit_max,
            "stalled_steps": stalled_steps,
            "final_discriminator": kl_family.beta_params(beta),
        },
    )
