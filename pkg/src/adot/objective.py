"""The penalized sample objective of the two-player game and its exact
first and second derivatives in the flat parameter vector.

The core objective is

    L[alpha, beta] = (1/n) sum_i g(T(x_i)) - (1/m) sum_j exp(g(y_j))

with T = grad phi.  Regularization keeps the adaptive bumps on resolvable
scales: each bump contributes barrier terms in its scale magnitude and
center, and bump pairs are pushed apart.  Each player pays its own bumps'
terms, so the regularization enters the saddle objective with opposite
signs: it is added for the minimizing player and subtracted for the
maximizing one.  The potential-side terms are rescaled by the current
mean of |grad g| over the transported points (held constant in all
derivatives), which keeps them commensurate with the core term as g
collapses to zero near the solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np
from scipy.spatial import cKDTree

from .features import DiscriminatorParams, PotentialParams

__all__ = [
    "PenaltyConfig",
    "TwistedDerivatives",
    "LagrangianValue",
    "NonFiniteError",
    "default_penalty_config",
    "penalty",
    "lagrangian",
    "twisted_derivatives",
    "kl_estimate",
    "init_discriminator",
]

# e^50 ~ 5e21: still finite in double precision, far past any sane g.
G_CLAMP = 50.0

# below this squared scale magnitude the broad-bump barrier is evaluated
# at the floor instead of diverging, so a stray zero scale cannot poison
# the solve with infs
_SCALE_SQ_FLOOR = 1e-24

# the potential-side penalty is weighted by mean |grad g|, which vanishes
# at the solution; a tiny floor keeps the scale/center barriers visible to
# the dynamics so those coordinates cannot random-walk while g ~ 0
GBAR_FLOOR = 1e-6


class NonFiniteError(RuntimeError):
    """A sample produced a non-finite value; carries the offending index."""

    def __init__(self, message: str, sample_index: int):
        super().__init__(f"{message} (sample index {sample_index})")
        self.sample_index = sample_index


@dataclass
class PenaltyConfig:
    """Regularization constants: global multiplier, resolution floor, and
    data diameter."""

    lam: float = 1e-3
    epsilon: float = 0.1
    diameter: float = 1.0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.diameter <= 0:
            raise ValueError("diameter must be > 0")
        if not self.epsilon < self.diameter:
            raise ValueError("epsilon must be smaller than the data diameter")


def _median_nn(S: np.ndarray) -> float:
    S = np.atleast_2d(S)
    if S.shape[0] < 2:
        return 0.0
    dist, _ = cKDTree(S).query(S, k=2)
    return float(np.median(dist[:, 1]))


def default_penalty_config(X: np.ndarray, Y: np.ndarray, lam: float = 1e-3) -> PenaltyConfig:
    """Data-driven constants: the diameter is the diagonal of the pooled
    bounding box; the resolution floor is twice the coarser of the two
    clouds' median nearest-neighbor distances, but never below a tenth of
    the pooled spread.

    The nearest-neighbor statistic is taken per cloud, not on the pooled
    set: two nearly-coincident clouds (consecutive interpolants) pair up
    across clouds at a spacing far below either cloud's own sampling
    resolution.  The spread floor matters at large n, where the
    nearest-neighbor distance alone would license test-function features
    narrow enough to chase individual samples.
    """
    X = np.atleast_2d(X)
    Y = np.atleast_2d(Y)
    pooled = np.vstack([X, Y])
    span = pooled.max(axis=0) - pooled.min(axis=0)
    diameter = float(np.sqrt(np.sum(span ** 2)))
    if diameter <= 0:
        diameter = 1.0
    spread = float(pooled.std(axis=0).mean())
    eps = max(2.0 * max(_median_nn(X), _median_nn(Y)), 0.1 * spread)
    if eps <= 0:
        eps = 1e-3 * diameter
    eps = min(eps, 0.5 * diameter)
    return PenaltyConfig(lam=lam, epsilon=eps, diameter=diameter)


@dataclass
class TwistedDerivatives:
    """Gradient and Hessian of L with the maximization blocks sign-flipped."""

    G: np.ndarray
    H: np.ndarray
    grad_norm: float
    gbar: float
    value: "LagrangianValue"


@dataclass
class LagrangianValue:
    """Penalized objective value with its parts kept retrievable."""

    penalized: float
    core: float
    penalty_potential: float      # sum of the potential bumps' terms (unweighted)
    penalty_discriminator: float  # sum of the test-function bumps' terms
    gbar: float
    lam: float = 0.0
    saturated: bool = False
    degenerate_pair: bool = False

    @property
    def alpha_side(self) -> float:
        """Core plus the minimizing player's own weighted penalty; the
        quantity the step-acceptance rule monitors on the alpha side."""
        return self.core + self.lam * self.gbar * self.penalty_potential

    @property
    def beta_objective(self) -> float:
        """Core minus the maximizing player's own weighted penalty."""
        return self.core - self.lam * self.penalty_discriminator

    def __float__(self):
        return self.penalized


# ---------------------------------------------------------------------------
# penalty terms
# ---------------------------------------------------------------------------

def _bump_geometry(params) -> tuple[list, list]:
    centers = [b.center for b in params.bumps]
    magnitudes = [b.scale.magnitude() for b in params.bumps]
    return centers, magnitudes


def _player_penalty_value(centers, magnitudes, cfg: PenaltyConfig):
    """Sum of the four barrier terms over one player's bumps.

    Returns (value, degenerate_flag); degenerate when a bump pair sits at
    (numerically) coincident centers and the distance floor was applied.
    """
    eps, D = cfg.epsilon, cfg.diameter
    total = 0.0
    degenerate = False
    for c, s in zip(centers, magnitudes):
        s2 = max(s * s, _SCALE_SQ_FLOOR)
        total += np.exp(min((eps * s) ** 2, 500.0))
        total += 1.0 / (D * D * s2)
        total += float(np.dot(c, c)) / (D * D)
    floor2 = (1e-8 * D) ** 2
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            delta = centers[i] - centers[j]
            n2 = float(np.dot(delta, delta))
            if n2 < floor2:
                n2 = floor2
                degenerate = True
            total += eps * eps / n2
    return total, degenerate


def penalty(alpha: PotentialParams, beta: DiscriminatorParams,
            cfg: PenaltyConfig, gbar: float) -> float:
    """Total regularization magnitude lam * (g-side + gbar * phi-side).

    This is the bookkeeping total; inside the saddle objective the two
    sides enter with opposite signs (see module docstring).
    """
    if gbar < 0:
        raise ValueError("gbar must be >= 0")
    pv, _ = _player_penalty_value(*_bump_geometry(alpha), cfg)
    dv, _ = _player_penalty_value(*_bump_geometry(beta), cfg)
    return cfg.lam * (dv + gbar * pv)


def _player_penalty_derivs(layout, flat: np.ndarray, cfg: PenaltyConfig, order: int):
    """Value, gradient, and Hessian of one player's penalty sum in its
    flat parameter vector.  Amplitudes carry no penalty."""
    eps, D = cfg.epsilon, cfg.diameter
    n = flat.size
    val = 0.0
    grad = np.zeros(n) if order >= 1 else None
    hess = np.zeros((n, n)) if order >= 2 else None
    degenerate = False
    slices = layout.bump_slices
    d = layout.d
    for (amp, csl, ssl) in slices:
        theta = flat[ssl]
        c = flat[csl]
        w2 = max(float(np.dot(theta, theta)), _SCALE_SQ_FLOOR)
        # keep the barrier finite-huge so derivatives stay usable
        e1 = np.exp(min(eps * eps * w2, 500.0))
        val += e1 + 1.0 / (D * D * w2) + float(np.dot(c, c)) / (D * D)
        if order >= 1:
            g_theta = e1 * 2.0 * eps * eps * theta - 2.0 * theta / (D * D * w2 * w2)
            grad[ssl] += g_theta
            grad[csl] += 2.0 * c / (D * D)
        if order >= 2:
            P = theta.size
            outer = np.outer(theta, theta)
            h_theta = e1 * (4.0 * eps ** 4 * outer + 2.0 * eps * eps * np.eye(P))
            h_theta += 8.0 * outer / (D * D * w2 ** 3) - 2.0 * np.eye(P) / (D * D * w2 * w2)
            hess[ssl, ssl] += h_theta
            hess[csl, csl] += 2.0 * np.eye(d) / (D * D)
    floor2 = (1e-8 * D) ** 2
    for i in range(len(slices)):
        for j in range(i + 1, len(slices)):
            ci, cj = flat[slices[i][1]], flat[slices[j][1]]
            delta = ci - cj
            n2 = float(np.dot(delta, delta))
            if n2 < floor2:
                # frozen at the floor: constant contribution, no derivatives
                val += eps * eps / floor2
                degenerate = True
                continue
            val += eps * eps / n2
            if order >= 1:
                gpair = -2.0 * eps * eps * delta / n2 ** 2
                grad[slices[i][1]] += gpair
                grad[slices[j][1]] -= gpair
            if order >= 2:
                hpair = eps * eps * (
                    8.0 * np.outer(delta, delta) / n2 ** 3 - 2.0 * np.eye(d) / n2 ** 2
                )
                hess[slices[i][1], slices[i][1]] += hpair
                hess[slices[j][1], slices[j][1]] += hpair
                hess[slices[i][1], slices[j][1]] -= hpair
                hess[slices[j][1], slices[i][1]] -= hpair
    return val, grad, hess, degenerate


# ---------------------------------------------------------------------------
# Lagrangian and twisted derivatives
# ---------------------------------------------------------------------------

def _exp_clamped(g: np.ndarray):
    """exp(g) with g clamped at G_CLAMP; returns (weights, saturated)."""
    saturated = bool(np.any(g > G_CLAMP))
    return np.exp(np.minimum(g, G_CLAMP)), saturated


def _value_clamped(g: np.ndarray):
    """g clamped at G_CLAMP with the active-sample mask.

    The z-side of the objective is clamped with the same constant as the
    exponentials: otherwise the maximizer's payoff is unbounded wherever
    a transported point has no target neighbors, and the ascent climbs
    forever.  The mask makes the derivatives exact for the clamped value.
    """
    saturated = bool(np.any(g > G_CLAMP))
    return np.minimum(g, G_CLAMP), (g < G_CLAMP), saturated


def _check_finite(values: np.ndarray, what: str):
    bad = ~np.isfinite(values)
    if bad.any():
        raise NonFiniteError(f"non-finite {what}", int(np.argmax(bad)))


def lagrangian(family, alpha: np.ndarray, beta: np.ndarray,
               X: np.ndarray, Y: np.ndarray, cfg: PenaltyConfig,
               gbar: float | None = None) -> LagrangianValue:
    """Penalized objective at (alpha, beta).

    ``gbar`` may be pinned by the caller (the solver freezes it per
    iteration; the finite-difference oracles freeze it at the expansion
    point).  When None it is computed from |grad g| at the transported
    points.
    """
    T = family.map_points(alpha, X)
    db = family.dis_bundle(beta, T, order=1)
    dy = family.dis_bundle(beta, np.atleast_2d(Y), order=0)
    expg, sat_y = _exp_clamped(dy.g)
    gT, _, sat_z = _value_clamped(db.g)
    saturated = sat_y or sat_z
    core = float(gT.mean() - expg.mean())
    if gbar is None:
        gbar = max(float(np.sqrt((db.grad_z ** 2).sum(axis=1)).mean()), GBAR_FLOOR)
    pot_lay = family.layout.potential
    dis_lay = family.layout.discriminator
    pv, _, _, deg_a = _player_penalty_derivs(pot_lay, np.asarray(alpha, dtype=float), cfg, order=0)
    dv, _, _, deg_b = _player_penalty_derivs(dis_lay, np.asarray(beta, dtype=float), cfg, order=0)
    penalized = core + cfg.lam * (gbar * pv - dv)
    return LagrangianValue(
        penalized=penalized, core=core,
        penalty_potential=pv, penalty_discriminator=dv,
        gbar=gbar, lam=cfg.lam, saturated=saturated,
        degenerate_pair=deg_a or deg_b,
    )


def twisted_derivatives(family, alpha: np.ndarray, beta: np.ndarray,
                        X: np.ndarray, Y: np.ndarray, cfg: PenaltyConfig,
                        gauss_newton: bool = False,
                        gbar: float | None = None) -> TwistedDerivatives:
    """Assemble G = (dL/dalpha, -dL/dbeta) and the sign-twisted Hessian.

    The alpha-alpha block keeps the full second-order chain-rule term by
    default; ``gauss_newton`` drops the map-curvature contraction for
    robustness far from the solution.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n, m = X.shape[0], Y.shape[0]
    a, b = family.alpha_size, family.beta_size

    mb = family.map_bundle(alpha, X, order=2)
    db = family.dis_bundle(beta, mb.T, order=2)
    dy = family.dis_bundle(beta, Y, order=2)
    _check_finite(db.g, "g at transported point")
    _check_finite(dy.g, "g at target point")
    expg, sat_y = _exp_clamped(dy.g)
    gT, active, sat_z = _value_clamped(db.g)
    saturated = sat_y or sat_z

    core = float(gT.mean() - expg.mean())
    if gbar is None:
        gbar = max(float(np.sqrt((db.grad_z ** 2).sum(axis=1)).mean()), GBAR_FLOOR)

    # clamped z-side samples contribute no derivative (plateau)
    wz = active.astype(float)
    grad_a = np.einsum("n,nd,nda->a", wz, db.grad_z, mb.J) / n
    grad_b = (wz[:, None] * db.grad_p).mean(axis=0) \
        - (expg[:, None] * dy.grad_p).mean(axis=0)

    H_aa = np.einsum("n,nia,nij,njb->ab", wz, mb.J, db.hess_z, mb.J) / n
    if not gauss_newton:
        H_aa = H_aa + mb.hess_contract_mean(wz[:, None] * db.grad_z)
    H_ab = np.einsum("n,nia,nib->ab", wz, mb.J, db.grad_z_p) / n
    exp_curv = np.einsum("n,nb,nc->bc", expg, dy.grad_p, dy.grad_p) / m
    exp_curv += np.einsum("n,nbc->bc", expg, dy.hess_p) / m
    H_bb = np.einsum("n,nbc->bc", wz, db.hess_p) / n - exp_curv

    pot_lay, dis_lay = family.layout.potential, family.layout.discriminator
    pv, pg, ph, deg_a = _player_penalty_derivs(pot_lay, alpha, cfg, order=2)
    dv, dg, dh, deg_b = _player_penalty_derivs(dis_lay, beta, cfg, order=2)
    lam = cfg.lam
    grad_a = grad_a + lam * gbar * pg
    grad_b = grad_b - lam * dg
    H_aa = H_aa + lam * gbar * ph
    H_bb = H_bb - lam * dh

    G = np.concatenate([grad_a, -grad_b])
    H = np.zeros((a + b, a + b))
    H[:a, :a] = H_aa
    H[:a, a:] = H_ab
    H[a:, :a] = -H_ab.T
    H[a:, a:] = -H_bb
    if not np.all(np.isfinite(G)) or not np.all(np.isfinite(H)):
        raise NonFiniteError("non-finite derivative entry", -1)

    penalized = core + lam * (gbar * pv - dv)
    value = LagrangianValue(
        penalized=penalized, core=core,
        penalty_potential=pv, penalty_discriminator=dv,
        gbar=gbar, lam=lam, saturated=saturated, degenerate_pair=deg_a or deg_b,
    )
    return TwistedDerivatives(G=G, H=H, grad_norm=float(np.linalg.norm(G)),
                              gbar=gbar, value=value)


# ---------------------------------------------------------------------------
# divergence estimate and moment initialization
# ---------------------------------------------------------------------------

def kl_estimate(family, beta: np.ndarray, Z: np.ndarray, Y: np.ndarray) -> float:
    """Variational divergence estimate 1 + mean g(z) - mean exp(g(y)).

    The caller supplies the beta produced by a beta-only ascent with the
    map frozen; for identical sample arrays the maximized estimate is 0.
    The estimate can be negative for finite samples: restricting the test
    family makes it a lower bound up to sampling error.
    """
    gz = family.dis_bundle(beta, np.atleast_2d(Z), order=0).g
    gy = family.dis_bundle(beta, np.atleast_2d(Y), order=0).g
    expg, _ = _exp_clamped(gy)
    gzc, _, _ = _value_clamped(gz)
    return float(1.0 + gzc.mean() - expg.mean())


def _empirical_moments(S: np.ndarray):
    S = np.atleast_2d(S)
    mean = S.mean(axis=0)
    cov = np.atleast_2d(np.cov(S, rowvar=False))
    return mean, cov


def init_discriminator(X: np.ndarray, Y: np.ndarray, bumps: list | None = None):
    """Moment-matched quadratic start for g.

    Returns the g that is optimal when both samples are Gaussian:
    1/2 z.(Sy^-1 - Sx^-1) z + (Sx^-1 mx - Sy^-1 my).z
    + 1/2 (my.Sy^-1 my - mx.Sx^-1 mx), with empirical moments.  Any bumps
    passed in are attached but left inactive (their amplitudes are kept
    at zero).  Near-singular covariances are ridge-regularized.

    Returns (params, diagnostics dict).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    d = X.shape[1]
    mx, Sx = _empirical_moments(X)
    my, Sy = _empirical_moments(Y)
    diagnostics = {"ridged": False}

    def inv(S):
        if np.linalg.cond(S) > 1e12:
            diagnostics["ridged"] = True
            S = S + (1e-8 * np.trace(S) / d) * np.eye(d)
        return np.linalg.inv(S)

    Sxi, Syi = inv(Sx), inv(Sy)
    B0 = Syi - Sxi
    b1 = Sxi @ mx - Syi @ my
    b2 = 0.5 * float(my @ Syi @ my - mx @ Sxi @ mx)
    bumps = bumps or []
    for bump in bumps:
        bump.amplitude = 0.0
    params = DiscriminatorParams(B0=0.5 * (B0 + B0.T), b1=b1, b2=b2, bumps=bumps)
    return params, diagnostics
