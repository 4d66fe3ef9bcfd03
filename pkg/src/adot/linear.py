"""Restricted linear mode: both players are linear combinations of
user-supplied smooth functions.

The map is T(x) = x + sum_k alpha_k grad p_k(x) and the test function is
g(z) = sum_k beta_k f_k(z).  When the feature/potential pair is
compatible (non-singular cross-Jacobian mean matrix), the solved map
matches the empirical feature means of the transported source with the
target's, which is checkable directly.  The same solver drives this
family; there are no bumps and hence no penalties.
"""

from __future__ import annotations

from dataclasses import dataclass
import warnings

import numpy as np

__all__ = [
    "FeatureFunction",
    "LinearFamily",
    "SingularCompatibilityWarning",
    "compatibility_matrix",
    "make_linear_feature_space",
    "polynomial_feature",
]


class SingularCompatibilityWarning(UserWarning):
    """The feature/potential cross-Jacobian mean matrix is singular."""


@dataclass
class FeatureFunction:
    """A smooth scalar function with its gradient and Hessian.

    value(Z) -> (n,), grad(Z) -> (n, d), hess(Z) -> (n, d, d) for row
    inputs Z of shape (n, d).
    """

    value: callable
    grad: callable
    hess: callable
    name: str = ""


def polynomial_feature(d: int, powers) -> FeatureFunction:
    """Monomial prod_i z_i^p_i with analytic derivatives (small powers)."""
    powers = np.asarray(powers, dtype=int)
    if powers.shape != (d,):
        raise ValueError("powers must have one entry per coordinate")

    def value(Z):
        return np.prod(Z ** powers, axis=1)

    def grad(Z):
        n = Z.shape[0]
        out = np.zeros((n, d))
        for i in range(d):
            if powers[i] == 0:
                continue
            p = powers.copy()
            p[i] -= 1
            out[:, i] = powers[i] * np.prod(Z ** p, axis=1)
        return out

    def hess(Z):
        n = Z.shape[0]
        out = np.zeros((n, d, d))
        for i in range(d):
            for j in range(d):
                p = powers.copy()
                coef = p[i]
                if coef == 0:
                    continue
                p[i] -= 1
                coef *= p[j]
                if coef == 0:
                    continue
                p[j] -= 1
                out[:, i, j] = coef * np.prod(Z ** p, axis=1)
        return out

    name = "*".join(f"z{i}^{p}" for i, p in enumerate(powers) if p)
    return FeatureFunction(value, grad, hess, name or "1")


def compatibility_matrix(features: list, potentials: list, X: np.ndarray) -> np.ndarray:
    """C[k, k'] = (1/n) sum_i grad p_k(x_i) . grad f_k'(x_i)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    K = len(features)
    C = np.zeros((K, K))
    pg = [p.grad(X) for p in potentials]
    fg = [f.grad(X) for f in features]
    for k in range(K):
        for kp in range(K):
            C[k, kp] = np.mean(np.sum(pg[k] * fg[kp], axis=1))
    return C


class _LinearMapBundle:
    def __init__(self, potentials, alpha, X, order):
        X = np.atleast_2d(X)
        grads = np.stack([p.grad(X) for p in potentials], axis=2)  # (n, d, K)
        self.T = X + grads @ alpha
        self.J = grads if order >= 1 else None
        self._K = len(potentials)

    def hess_contract_mean(self, W):
        # T is linear in alpha
        return np.zeros((self._K, self._K))


class _LinearDisBundle:
    def __init__(self, features, beta, Z, order):
        Z = np.atleast_2d(Z)
        n, d = Z.shape
        K = len(features)
        vals = np.stack([f.value(Z) for f in features], axis=1)   # (n, K)
        self.g = vals @ beta
        self.grad_z = self.grad_p = None
        self.hess_z = self.hess_p = self.grad_z_p = None
        if order >= 1:
            grads = np.stack([f.grad(Z) for f in features], axis=2)  # (n, d, K)
            self.grad_z = grads @ beta
            self.grad_p = vals
            self._grads = grads
        if order >= 2:
            hesses = np.stack([f.hess(Z) for f in features], axis=3)  # (n,d,d,K)
            self.hess_z = hesses @ beta
            self.hess_p = np.zeros((n, K, K))
            self.grad_z_p = self._grads


class LinearFamily:
    """Adapter exposing the linear spaces through the solver's family
    interface.  Penalties are identically zero (no nonlinear scales)."""

    def __init__(self, features: list, potentials: list):
        if len(features) != len(potentials) or not features:
            raise ValueError("need K >= 1 features and K potentials")
        self.features = features
        self.potentials = potentials
        self.K = len(features)
        self.layout = _LinearLayout(self.K)

    @property
    def alpha_size(self):
        return self.K

    @property
    def beta_size(self):
        return self.K

    def init_alpha(self, X, rng):
        return np.zeros(self.K)

    def init_beta(self, quadratic, Y, rng):
        # moment initialization is specific to the quadratic family
        return np.zeros(self.K)

    def map_bundle(self, alpha, X, order=1):
        return _LinearMapBundle(self.potentials, np.asarray(alpha, float), X, order)

    def dis_bundle(self, beta, Z, order=1):
        return _LinearDisBundle(self.features, np.asarray(beta, float), Z, order)

    def map_points(self, alpha, X):
        return self.map_bundle(alpha, X, order=0).T

    def alpha_params(self, alpha):
        return np.asarray(alpha, dtype=float).copy()

    def beta_params(self, beta):
        return np.asarray(beta, dtype=float).copy()

    def map_jacobian_eigmin(self, alpha, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n, d = X.shape
        alpha = np.asarray(alpha, float)
        Jac = np.broadcast_to(np.eye(d), (n, d, d)).copy()
        for ak, p in zip(alpha, self.potentials):
            Jac += ak * p.hess(X)
        return float(np.linalg.eigvalsh(Jac).min())

    def admissible_step(self, gamma_old, gamma_new):
        return True

    def admissible_beta_step(self, beta_old, beta_new):
        return True


class _LinearLayout:
    """Penalty hooks for the solver: no bumps on either side."""

    def __init__(self, K):
        self.potential = _LinearPlayer(K)
        self.discriminator = _LinearPlayer(K)
        self.a = K
        self.b = K

    def flatten_potential(self, params):
        return np.asarray(params, dtype=float).copy()

    def unflatten_potential(self, v):
        return np.asarray(v, dtype=float).copy()

    def flatten_discriminator(self, params):
        return np.asarray(params, dtype=float).copy()

    def unflatten_discriminator(self, v):
        return np.asarray(v, dtype=float).copy()


class _LinearPlayer:
    def __init__(self, K):
        self.d = 0
        self.size = K
        self.bump_slices = []


def make_linear_feature_space(features: list, potentials: list,
                              X: np.ndarray | None = None):
    """Build the restricted spaces of the predetermined-feature game.

    Returns (family, C) where C is the compatibility matrix evaluated on
    X (or None when no sample is given).  A singular C is reported as a
    diagnostic warning, not a failure: it signals a degenerate choice of
    functions, under which feature-mean matching is not pinned down.
    """
    family = LinearFamily(features, potentials)
    C = None
    if X is not None:
        C = compatibility_matrix(features, potentials, X)
        if abs(np.linalg.det(C)) < 1e-12 or np.linalg.cond(C) > 1e12:
            warnings.warn(
                "compatibility matrix is singular or near-singular",
                SingularCompatibilityWarning,
            )
    return family, C
