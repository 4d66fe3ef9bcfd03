"""Local saddle-point solver for one pair of nearby sample sets.

The update is the implicit scheme

    gamma <- gamma - eta (I + eta H)^-1 G

on the sign-twisted gradient/Hessian, which interpolates between plain
simultaneous gradient play (small eta) and a Newton step (large eta).
A proposed step is accepted only if it improves both players at the mixed
evaluation points; otherwise the learning rate shrinks and the step is
retried from the same iterate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import objective
from .features import AdaptiveFamily, default_family
from .objective import PenaltyConfig, default_penalty_config

__all__ = [
    "SolverConfig",
    "LocalSolution",
    "NeedsSmallerEta",
    "StallError",
    "implicit_step",
    "solve_local",
    "fit_discriminator",
]

_COND_LIMIT = 1e14


class NeedsSmallerEta(RuntimeError):
    """The implicit system I + eta*H is singular or too ill-conditioned."""


class StallError(RuntimeError):
    """The learning rate bottomed out while steps kept being rejected.

    Raised only where no partial result can be returned; the local solver
    itself reports a stall as a solution diagnostic instead.
    """


@dataclass
class SolverConfig:
    """Knobs of the local solve: learning-rate schedule, stopping rule,
    and the penalty constants (None means derive them from the data)."""

    eta0: float = 0.1
    eta_min: float = 1e-8
    # large cap: penalty-relaxation modes carry curvature of order lam and
    # only approach their Newton limit once eta exceeds 1/lam
    eta_max: float = 1e6
    grow: float = 2.0
    shrink: float = 0.5
    # the default profile suits the sweep pipeline, where over-solving a
    # local game lets it drift onto sample-overfitting ridges; standalone
    # solves of clean problems can afford much tighter tolerances
    tolerance: float = 1e-4
    max_iter: int = 250
    penalty: PenaltyConfig | None = None
    lam: float = 1e-3
    gauss_newton: bool = False
    # rejection fires only when the violation exceeds this relative band;
    # near the saddle the compared values differ by rounding noise only
    noise_tol: float = 1e-11
    # sup-norm cap on one update, in units of (1 + data diameter); large
    # eta turns near-flat directions into eta*G kicks otherwise
    max_step_rel: float = 2.0

    def __post_init__(self):
        if not (self.eta_min <= self.eta0 <= self.eta_max):
            raise ValueError("need eta_min <= eta0 <= eta_max")
        if not (0.0 < self.shrink < 1.0 < self.grow):
            raise ValueError("need 0 < shrink < 1 < grow")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class LocalSolution:
    """Converged (or max-iteration) state of one local game."""

    alpha: object
    beta: object
    alpha_flat: np.ndarray
    beta_flat: np.ndarray
    iterations: int
    final_grad_norm: float
    lagrangian_trace: list          # (penalized, core) per accepted iterate
    rejected_steps: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return not (self.diagnostics.get("hit_max_iter", False)
                    or self.diagnostics.get("stalled", False))


def implicit_step(gamma: np.ndarray, G: np.ndarray, H: np.ndarray, eta: float) -> np.ndarray:
    """One update gamma - eta (I + eta H)^-1 G via LU with partial pivoting.

    Raises NeedsSmallerEta when the system's condition estimate exceeds
    1e14; the caller shrinks eta (I + eta H tends to I) and retries.
    """
    A = np.eye(gamma.size) + eta * H
    try:
        lu, piv = scipy.linalg.lu_factor(A)
    except scipy.linalg.LinAlgError as exc:
        raise NeedsSmallerEta(str(exc)) from exc
    anorm = np.linalg.norm(A, 1)
    rcond = scipy.linalg.lapack.dgecon(lu, anorm)[0]
    if not np.isfinite(rcond) or rcond < 1.0 / _COND_LIMIT:
        raise NeedsSmallerEta(f"condition estimate {1.0 / max(rcond, 1e-300):.2e}")
    return gamma - eta * scipy.linalg.lu_solve((lu, piv), G)


def _resolve_penalty(cfg: SolverConfig, X, Y) -> PenaltyConfig:
    if cfg.penalty is not None:
        return cfg.penalty
    return default_penalty_config(X, Y, lam=cfg.lam)


def solve_local(X: np.ndarray, Y: np.ndarray, cfg: SolverConfig,
                family: AdaptiveFamily | None = None,
                warm: tuple | None = None,
                warm_alpha: np.ndarray | None = None,
                seed: int = 0) -> LocalSolution:
    """Solve the minimax game between the samples X (source) and Y (target).

    The map starts at the identity and the test function at the
    moment-matched quadratic, so the first iterations play the purely
    Gaussian game; the adaptive bumps activate as the quadratic residual
    fades.  ``warm`` restarts from a previous (alpha, beta) flat pair;
    ``warm_alpha`` restarts the map only, with a fresh test function
    (re-solving against a slightly moved target: carrying the adversary's
    old state over would import its accumulated sample-specific features).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.size == 0 or Y.size == 0:
        raise ValueError("sample sets must be nonempty")
    if X.shape[1] != Y.shape[1]:
        raise ValueError("source and target dimension mismatch")
    d = X.shape[1]
    if family is None:
        family = default_family(d)
    pen = _resolve_penalty(cfg, X, Y)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(7,)))

    if warm is not None:
        alpha = np.asarray(warm[0], dtype=float).copy()
        beta = np.asarray(warm[1], dtype=float).copy()
    else:
        if warm_alpha is not None:
            alpha = np.asarray(warm_alpha, dtype=float).copy()
        else:
            alpha = family.init_alpha(X, rng)
        quad, _ = objective.init_discriminator(X, Y)
        beta = family.init_beta(quad, Y, rng)
    gamma = np.concatenate([alpha, beta])
    a = family.alpha_size

    td = objective.twisted_derivatives(family, gamma[:a], gamma[a:], X, Y, pen,
                                       gauss_newton=cfg.gauss_newton)
    trace = [(td.value.penalized, td.value.core)]
    eta = cfg.eta0
    rejected = 0
    iterations = 0
    saturated = td.value.saturated
    degenerate = td.value.degenerate_pair
    stalled = False
    stall_reason = ""
    best_norm, best_gamma = td.grad_norm, gamma.copy()

    for iterations in range(1, cfg.max_iter + 1):
        if td.grad_norm < cfg.tolerance or stalled:
            iterations -= 1
            break
        gbar = td.gbar
        accepted = False
        while not accepted and not stalled:
            reason = ""
            try:
                proposal = implicit_step(gamma, td.G, td.H, eta)
                if not family.admissible_step(gamma, proposal):
                    raise NeedsSmallerEta("scale-form barrier crossing")
                step_cap = cfg.max_step_rel * (1.0 + pen.diameter)
                if np.max(np.abs(proposal - gamma)) > step_cap:
                    raise NeedsSmallerEta("step exceeds trust cap")
                new = objective.lagrangian(family, proposal[:a], proposal[a:], X, Y,
                                           pen, gbar=gbar)
                mixed_alpha = objective.lagrangian(family, gamma[:a], proposal[a:], X, Y,
                                                   pen, gbar=gbar)
                mixed_beta = objective.lagrangian(family, proposal[:a], gamma[a:], X, Y,
                                                  pen, gbar=gbar)
                # minimax acceptance: each player's move must not worsen its
                # own penalized objective at the other player's new position
                band_a = cfg.noise_tol * (1.0 + abs(mixed_alpha.alpha_side))
                band_b = cfg.noise_tol * (1.0 + abs(mixed_beta.beta_objective))
                reject = (new.alpha_side > mixed_alpha.alpha_side + band_a
                          or new.beta_objective < mixed_beta.beta_objective - band_b)
                if reject:
                    reason = (
                        f"a-side {new.alpha_side:.6e} vs {mixed_alpha.alpha_side:.6e}, "
                        f"b-side {new.beta_objective:.6e} vs {mixed_beta.beta_objective:.6e}"
                    )
                if not np.isfinite(new.penalized):
                    reject = True
                    reason = "non-finite objective"
            except (NeedsSmallerEta, objective.NonFiniteError) as exc:
                reject = True
                reason = str(exc)
            if reject:
                rejected += 1
                if eta <= cfg.eta_min * (1 + 1e-12):
                    # bottomed out: hold the current iterate and stop
                    stalled = True
                    stall_reason = f"|G|={td.grad_norm:.3e}, last rejection: {reason}"
                    break
                eta = max(eta * cfg.shrink, cfg.eta_min)
            else:
                gamma = proposal
                eta = min(eta * cfg.grow, cfg.eta_max)
                accepted = True
        if not accepted:
            break
        td = objective.twisted_derivatives(family, gamma[:a], gamma[a:], X, Y, pen,
                                           gauss_newton=cfg.gauss_newton)
        trace.append((td.value.penalized, td.value.core))
        saturated = saturated or td.value.saturated
        degenerate = degenerate or td.value.degenerate_pair
        if td.grad_norm < best_norm:
            best_norm, best_gamma = td.grad_norm, gamma.copy()
    hit_max = td.grad_norm >= cfg.tolerance and iterations >= cfg.max_iter

    # a run that wanders off after approaching the saddle (overfitting
    # drift on scarce data) is rolled back to its most stationary iterate
    rolled_back = False
    if best_norm < 0.5 * td.grad_norm:
        gamma = best_gamma
        td = objective.twisted_derivatives(family, gamma[:a], gamma[a:], X, Y, pen,
                                           gauss_newton=cfg.gauss_newton)
        rolled_back = True

    alpha_flat, beta_flat = gamma[:a], gamma[a:]
    diagnostics = {
        "hit_max_iter": bool(hit_max),
        "stalled": stalled,
        "stall_reason": stall_reason,
        "rolled_back": rolled_back,
        "saturated": saturated,
        "degenerate_pair": degenerate,
        "min_map_jacobian_eig": family.map_jacobian_eigmin(alpha_flat, X),
        "final_eta": eta,
        "penalty_epsilon": pen.epsilon,
        "penalty_diameter": pen.diameter,
    }
    return LocalSolution(
        alpha=family.alpha_params(alpha_flat),
        beta=family.beta_params(beta_flat),
        alpha_flat=alpha_flat,
        beta_flat=beta_flat,
        iterations=iterations,
        final_grad_norm=td.grad_norm,
        lagrangian_trace=trace,
        rejected_steps=rejected,
        diagnostics=diagnostics,
    )


def fit_discriminator(Z: np.ndarray, Y: np.ndarray,
                      family: AdaptiveFamily | None = None,
                      cfg: SolverConfig | None = None,
                      seed: int = 0) -> np.ndarray:
    """Beta-only ascent with the map frozen; returns the flat maximizer.

    Reuses the implicit stepper on the beta block of the twisted system.
    Used to evaluate the divergence estimate between a transported sample
    and the target.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    d = Z.shape[1]
    if family is None:
        family = default_family(d)
    # the frozen map plays no role: use a bump-free potential side so the
    # beta layout matches the caller's family exactly
    family = AdaptiveFamily(d, scale_kind=family.scale_kind, potential_bumps=0,
                            discriminator_bumps=family.n_discriminator_bumps)
    cfg = cfg or SolverConfig()
    pen = _resolve_penalty(cfg, Z, Y)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(11,)))
    quad, _ = objective.init_discriminator(Z, Y)
    beta = family.init_beta(quad, Y, rng)
    alpha0 = np.zeros(family.alpha_size)
    a = family.alpha_size

    def restricted(beta_vec):
        td = objective.twisted_derivatives(family, alpha0, beta_vec, Z, Y, pen,
                                           gauss_newton=True)
        return td.G[a:], td.H[a:, a:], td.value

    G, H, val = restricted(beta)
    eta = cfg.eta0
    for _ in range(cfg.max_iter):
        if np.linalg.norm(G) < cfg.tolerance:
            break
        accepted = False
        while not accepted:
            try:
                proposal = implicit_step(beta, G, H, eta)
                if not family.admissible_beta_step(beta, proposal):
                    raise NeedsSmallerEta("scale-form barrier crossing")
                if np.max(np.abs(proposal - beta)) > cfg.max_step_rel * (1.0 + pen.diameter):
                    raise NeedsSmallerEta("step exceeds trust cap")
                new = objective.lagrangian(family, alpha0, proposal, Z, Y, pen,
                                           gbar=val.gbar)
                # plain ascent on the maximizing player's own objective
                band = cfg.noise_tol * (1.0 + abs(val.beta_objective))
                reject = new.beta_objective < val.beta_objective - band
                if not np.isfinite(new.penalized):
                    reject = True
            except (NeedsSmallerEta, objective.NonFiniteError):
                reject = True
            if reject:
                if eta <= cfg.eta_min * (1 + 1e-12):
                    return beta
                eta = max(eta * cfg.shrink, cfg.eta_min)
            else:
                beta = proposal
                eta = min(eta * cfg.grow, cfg.eta_max)
                accepted = True
        G, H, val = restricted(beta)
    return beta
