"""Parametric families for the transport potential and its adversarial test
function, with all closed-form derivatives the saddle-point solver needs.

Two players:

* potential   phi(x) = 1/2 x.(I + A0) x + a1.x + sum_k bump_k(x)
* test fn     g(z)   = 1/2 z.B0 z + b1.z + b2 + sum_k bump_k(z)

Each Gaussian bump is ``amplitude * exp(-q(x - center) / 2)`` where q is a
nonnegative quadratic form ``q(u) = u.M u`` selected by the bump's scale
form (full matrix, isotropic, directional, or diagonal).  Because q is
quadratic in u, every space- and parameter-derivative up to second order
is available in closed form; finite differences exist only in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

__all__ = [
    "FullMatrixScale",
    "IsotropicScale",
    "DirectionalScale",
    "DiagonalScale",
    "scale_form_from_flat",
    "GaussianBump",
    "PotentialParams",
    "DiscriminatorParams",
    "PlayerLayout",
    "ParamLayout",
    "AdaptiveFamily",
    "default_family",
    "DerivativeBundle",
    "transport_map",
    "potential_value",
    "eval_discriminator",
    "derivative_bundle",
]


# ---------------------------------------------------------------------------
# scale forms
# ---------------------------------------------------------------------------

class ScaleForm:
    """Base for the quadratic form q(u) = u.M(theta) u of one bump.

    Subclasses provide the form matrix M and its first and second
    derivatives with respect to the flat scale parameters theta, which is
    all the bump kernels below need.
    """

    kind = ""

    def n_params(self, d: int) -> int:
        raise NotImplementedError

    def flat(self) -> np.ndarray:
        raise NotImplementedError

    def with_flat(self, values: np.ndarray) -> "ScaleForm":
        raise NotImplementedError

    def matrix(self, d: int) -> np.ndarray:
        """Form matrix M, shape (d, d)."""
        raise NotImplementedError

    def dmatrix(self, d: int) -> np.ndarray:
        """dM/dtheta, shape (P, d, d)."""
        raise NotImplementedError

    def d2matrix(self, d: int) -> np.ndarray:
        """d2M/dtheta2, shape (P, P, d, d)."""
        raise NotImplementedError

    def magnitude(self) -> float:
        """Scale magnitude |b| entering the penalties."""
        return float(np.sqrt(np.sum(self.flat() ** 2)))

    def check_dim(self, d: int) -> None:
        if self.flat().shape != (self.n_params(d),):
            raise ValueError(
                f"{self.kind} scale has {self.flat().size} parameters, "
                f"expected {self.n_params(d)} in dimension {d}"
            )


@dataclass
class FullMatrixScale(ScaleForm):
    """q(u) = |V u|^2 with a general d x d matrix V."""

    V: np.ndarray
    kind = "full"

    def __post_init__(self):
        self.V = np.atleast_2d(np.asarray(self.V, dtype=float))

    def n_params(self, d):
        return d * d

    def flat(self):
        return self.V.ravel().copy()

    def with_flat(self, values):
        d = self.V.shape[0]
        return FullMatrixScale(np.asarray(values, dtype=float).reshape(d, d))

    def matrix(self, d):
        return self.V.T @ self.V

    def dmatrix(self, d):
        # dM/dV_pq has entries delta_iq V_pj + V_pi delta_jq
        out = np.zeros((d * d, d, d))
        for p in range(d):
            for q in range(d):
                k = p * d + q
                out[k, q, :] += self.V[p, :]
                out[k, :, q] += self.V[p, :]
        return out

    def d2matrix(self, d):
        out = np.zeros((d * d, d * d, d, d))
        for p in range(d):
            for q in range(d):
                for s in range(d):
                    k1, k2 = p * d + q, p * d + s
                    out[k1, k2, q, s] += 1.0
                    out[k1, k2, s, q] += 1.0
        return out


@dataclass
class IsotropicScale(ScaleForm):
    """q(u) = v |u|^2 with a scalar v (enters linearly, so keep v > 0)."""

    v: float
    kind = "isotropic"

    def __post_init__(self):
        self.v = float(self.v)

    def n_params(self, d):
        return 1

    def flat(self):
        return np.array([self.v])

    def with_flat(self, values):
        return IsotropicScale(float(values[0]))

    def matrix(self, d):
        return self.v * np.eye(d)

    def dmatrix(self, d):
        return np.eye(d)[None, :, :].copy()

    def d2matrix(self, d):
        return np.zeros((1, 1, d, d))


@dataclass
class DirectionalScale(ScaleForm):
    """q(u) = (v . u)^2 with a direction vector v."""

    v: np.ndarray
    kind = "directional"

    def __post_init__(self):
        self.v = np.atleast_1d(np.asarray(self.v, dtype=float))

    def n_params(self, d):
        return d

    def flat(self):
        return self.v.copy()

    def with_flat(self, values):
        return DirectionalScale(np.asarray(values, dtype=float))

    def matrix(self, d):
        return np.outer(self.v, self.v)

    def dmatrix(self, d):
        out = np.zeros((d, d, d))
        for j in range(d):
            out[j, j, :] += self.v
            out[j, :, j] += self.v
        return out

    def d2matrix(self, d):
        out = np.zeros((d, d, d, d))
        for j in range(d):
            for k in range(d):
                out[j, k, j, k] += 1.0
                out[j, k, k, j] += 1.0
        return out


@dataclass
class DiagonalScale(ScaleForm):
    """q(u) = |D u|^2 with D = diag(entries)."""

    entries: np.ndarray
    kind = "diagonal"

    def __post_init__(self):
        self.entries = np.atleast_1d(np.asarray(self.entries, dtype=float))

    def n_params(self, d):
        return d

    def flat(self):
        return self.entries.copy()

    def with_flat(self, values):
        return DiagonalScale(np.asarray(values, dtype=float))

    def matrix(self, d):
        return np.diag(self.entries ** 2)

    def dmatrix(self, d):
        out = np.zeros((d, d, d))
        for j in range(d):
            out[j, j, j] = 2.0 * self.entries[j]
        return out

    def d2matrix(self, d):
        out = np.zeros((d, d, d, d))
        for j in range(d):
            out[j, j, j, j] = 2.0
        return out


SCALE_KINDS = {
    "full": FullMatrixScale,
    "isotropic": IsotropicScale,
    "directional": DirectionalScale,
    "diagonal": DiagonalScale,
}


def scale_form_from_flat(kind: str, d: int, values) -> ScaleForm:
    values = np.asarray(values, dtype=float)
    if kind == "full":
        return FullMatrixScale(values.reshape(d, d))
    if kind == "isotropic":
        return IsotropicScale(float(values.reshape(())))
    if kind == "directional":
        return DirectionalScale(values.reshape(d))
    if kind == "diagonal":
        return DiagonalScale(values.reshape(d))
    raise ValueError(f"unknown scale form {kind!r}")


def default_scale(kind: str, d: int, width: float = 1.0) -> ScaleForm:
    """A nondegenerate scale whose length scale is roughly ``width``."""
    if kind == "full":
        return FullMatrixScale(np.eye(d) / width)
    if kind == "isotropic":
        return IsotropicScale(1.0 / width)
    if kind == "directional":
        return DirectionalScale(np.full(d, 1.0 / width))
    if kind == "diagonal":
        return DiagonalScale(np.full(d, 1.0 / width))
    raise ValueError(f"unknown scale form {kind!r}")


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------

@dataclass
class GaussianBump:
    """One localized feature: amplitude * exp(-q(x - center)/2)."""

    amplitude: float
    center: np.ndarray
    scale: ScaleForm

    def __post_init__(self):
        self.amplitude = float(self.amplitude)
        self.center = np.atleast_1d(np.asarray(self.center, dtype=float))
        self.scale.check_dim(self.center.size)

    @property
    def d(self) -> int:
        return self.center.size

    def value(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        u = x - self.center
        M = self.scale.matrix(self.d)
        q = np.einsum("ni,ij,nj->n", u, M, u)
        return self.amplitude * np.exp(-0.5 * q)


def _symmetrize_upper(A: np.ndarray) -> np.ndarray:
    """Mirror the upper triangle onto the lower (upper is authoritative)."""
    U = np.triu(A)
    return U + np.triu(A, 1).T


@dataclass
class PotentialParams:
    """Parameters of phi(x) = 1/2 x.(I+A0)x + a1.x + bumps."""

    A0: np.ndarray
    a1: np.ndarray
    bumps: list = field(default_factory=list)

    def __post_init__(self):
        self.A0 = _symmetrize_upper(np.atleast_2d(np.asarray(self.A0, dtype=float)))
        self.a1 = np.atleast_1d(np.asarray(self.a1, dtype=float))
        d = self.a1.size
        if self.A0.shape != (d, d):
            raise ValueError(f"A0 shape {self.A0.shape} does not match a1 size {d}")
        for b in self.bumps:
            if b.d != d:
                raise ValueError("bump dimension does not match a1")

    @property
    def d(self) -> int:
        return self.a1.size

    @classmethod
    def zeros(cls, d: int, bumps: list | None = None) -> "PotentialParams":
        return cls(np.zeros((d, d)), np.zeros(d), bumps or [])

    def map_deviation(self) -> float:
        """Sup-norm of the degrees of freedom that displace the map from the
        identity (A0, a1, bump amplitudes).  Centers and scales of a bump
        with zero amplitude do not move any point."""
        vals = [np.max(np.abs(self.A0)), np.max(np.abs(self.a1))]
        vals += [abs(b.amplitude) for b in self.bumps]
        return float(max(vals))


@dataclass
class DiscriminatorParams:
    """Parameters of g(z) = 1/2 z.B0 z + b1.z + b2 + bumps."""

    B0: np.ndarray
    b1: np.ndarray
    b2: float
    bumps: list = field(default_factory=list)

    def __post_init__(self):
        self.B0 = _symmetrize_upper(np.atleast_2d(np.asarray(self.B0, dtype=float)))
        self.b1 = np.atleast_1d(np.asarray(self.b1, dtype=float))
        self.b2 = float(self.b2)
        d = self.b1.size
        if self.B0.shape != (d, d):
            raise ValueError(f"B0 shape {self.B0.shape} does not match b1 size {d}")
        for b in self.bumps:
            if b.d != d:
                raise ValueError("bump dimension does not match b1")

    @property
    def d(self) -> int:
        return self.b1.size

    @classmethod
    def zeros(cls, d: int, bumps: list | None = None) -> "DiscriminatorParams":
        return cls(np.zeros((d, d)), np.zeros(d), 0.0, bumps or [])


# ---------------------------------------------------------------------------
# flat parameter layout
# ---------------------------------------------------------------------------

@dataclass
class PlayerLayout:
    """Index map for one player's flat parameter vector.

    Order: upper-triangular entries of the symmetric matrix (row-major),
    linear vector, optional scalar offset, then per bump
    (amplitude, center, scale parameters).  Symmetric entries appear once.
    """

    d: int
    has_offset: bool
    bump_scale_kinds: list

    def __post_init__(self):
        d = self.d
        self.nsym = d * (d + 1) // 2
        self.triu = [(i, j) for i in range(d) for j in range(i, d)]
        self.sym_sl = slice(0, self.nsym)
        self.lin_sl = slice(self.nsym, self.nsym + d)
        pos = self.nsym + d
        self.offset_idx = pos if self.has_offset else None
        if self.has_offset:
            pos += 1
        self.bump_slices = []  # (amp_idx, center_slice, scale_slice)
        self.scale_nparams = []
        for kind in self.bump_scale_kinds:
            P = _scale_nparams(kind, d)
            amp = pos
            csl = slice(pos + 1, pos + 1 + d)
            ssl = slice(pos + 1 + d, pos + 1 + d + P)
            self.bump_slices.append((amp, csl, ssl))
            self.scale_nparams.append(P)
            pos += 1 + d + P
        self.size = pos

    # -- symmetric matrix <-> flat -------------------------------------
    def sym_to_flat(self, A: np.ndarray) -> np.ndarray:
        return np.array([A[i, j] for i, j in self.triu])

    def flat_to_sym(self, v: np.ndarray) -> np.ndarray:
        A = np.zeros((self.d, self.d))
        for k, (i, j) in enumerate(self.triu):
            A[i, j] = v[k]
        return _symmetrize_upper(A)

    def flatten_bumps(self, bumps) -> np.ndarray:
        parts = []
        for b in bumps:
            parts.append([b.amplitude])
            parts.append(b.center)
            parts.append(b.scale.flat())
        return np.concatenate([np.asarray(p, dtype=float) for p in parts]) if parts else np.zeros(0)

    def unflatten_bumps(self, v: np.ndarray) -> list:
        bumps = []
        for kind, (amp, csl, ssl) in zip(self.bump_scale_kinds, self.bump_slices):
            bumps.append(
                GaussianBump(
                    amplitude=float(v[amp]),
                    center=v[csl].copy(),
                    scale=scale_form_from_flat(kind, self.d, v[ssl]),
                )
            )
        return bumps


def _scale_nparams(kind: str, d: int) -> int:
    return {"full": d * d, "isotropic": 1, "directional": d, "diagonal": d}[kind]


@dataclass
class ParamLayout:
    """Joint index map for gamma = (alpha, beta)."""

    potential: PlayerLayout
    discriminator: PlayerLayout

    @property
    def a(self) -> int:
        return self.potential.size

    @property
    def b(self) -> int:
        return self.discriminator.size

    # ---- potential side ------------------------------------------------
    def flatten_potential(self, p: PotentialParams) -> np.ndarray:
        lay = self.potential
        out = np.zeros(lay.size)
        out[lay.sym_sl] = lay.sym_to_flat(p.A0)
        out[lay.lin_sl] = p.a1
        bflat = lay.flatten_bumps(p.bumps)
        if bflat.size:
            out[lay.lin_sl.stop:] = bflat
        return out

    def unflatten_potential(self, v: np.ndarray) -> PotentialParams:
        lay = self.potential
        return PotentialParams(
            A0=lay.flat_to_sym(v[lay.sym_sl]),
            a1=v[lay.lin_sl].copy(),
            bumps=lay.unflatten_bumps(v),
        )

    # ---- discriminator side ---------------------------------------------
    def flatten_discriminator(self, p: DiscriminatorParams) -> np.ndarray:
        lay = self.discriminator
        out = np.zeros(lay.size)
        out[lay.sym_sl] = lay.sym_to_flat(p.B0)
        out[lay.lin_sl] = p.b1
        out[lay.offset_idx] = p.b2
        bflat = lay.flatten_bumps(p.bumps)
        if bflat.size:
            out[lay.offset_idx + 1:] = bflat
        return out

    def unflatten_discriminator(self, v: np.ndarray) -> DiscriminatorParams:
        lay = self.discriminator
        return DiscriminatorParams(
            B0=lay.flat_to_sym(v[lay.sym_sl]),
            b1=v[lay.lin_sl].copy(),
            b2=float(v[lay.offset_idx]),
            bumps=lay.unflatten_bumps(v),
        )

    # ---- joint vector ----------------------------------------------------
    def join(self, alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
        return np.concatenate([alpha, beta])

    def split(self, gamma: np.ndarray):
        return gamma[: self.a], gamma[self.a:]


# ---------------------------------------------------------------------------
# bump kernels (vectorized over sample rows)
# ---------------------------------------------------------------------------

class _BumpFields:
    """Per-bump intermediates shared by value/derivative assembly.

    order 0: q, E, r; order 1 adds dM, dq, dr; order 2 adds d2M, d2q.
    """

    def __init__(self, bump: GaussianBump, Z: np.ndarray, order: int):
        d = bump.d
        self.bump = bump
        self.d = d
        self.u = Z - bump.center
        self.M = bump.scale.matrix(d)
        self.q = np.einsum("ni,ij,nj->n", self.u, self.M, self.u)
        self.E = np.exp(-0.5 * self.q)
        self.r = 2.0 * self.u @ self.M
        if order >= 1:
            self.dM = bump.scale.dmatrix(d)  # (P, d, d)
            self.dq = np.einsum("pij,ni,nj->np", self.dM, self.u, self.u)
            self.dr = 2.0 * np.einsum("pij,nj->nip", self.dM, self.u)
        if order >= 2:
            self.d2M = bump.scale.d2matrix(d)  # (P, P, d, d)
            self.d2q = np.einsum("pqij,ni,nj->npq", self.d2M, self.u, self.u)

    # -- values and space derivatives ------------------------------------
    def value(self):
        return self.bump.amplitude * self.E

    def grad_z(self):
        return -0.5 * self.bump.amplitude * self.E[:, None] * self.r

    def hess_z(self):
        a, E, r, M = self.bump.amplitude, self.E, self.r, self.M
        return a * E[:, None, None] * (
            0.25 * r[:, :, None] * r[:, None, :] - M[None, :, :]
        )

    # -- derivatives of the bump value wrt its own parameters ------------
    def value_param_grad(self):
        """(dv/da, dv/dc, dv/dtheta) with shapes (n,), (n,d), (n,P)."""
        a, E = self.bump.amplitude, self.E
        return E, 0.5 * a * E[:, None] * self.r, -0.5 * a * E[:, None] * self.dq

    def value_param_hess(self):
        """Within-bump Hessian of the value, shape (n, 1+d+P, 1+d+P)."""
        a, E, r, dq, M = self.bump.amplitude, self.E, self.r, self.dq, self.M
        n = E.size
        d, P = self.d, dq.shape[1]
        B = 1 + d + P
        H = np.zeros((n, B, B))
        dEc = 0.5 * E[:, None] * r                       # dE/dc
        dEt = -0.5 * E[:, None] * dq                     # dE/dtheta
        H[:, 0, 1:1 + d] = dEc
        H[:, 1:1 + d, 0] = dEc
        H[:, 0, 1 + d:] = dEt
        H[:, 1 + d:, 0] = dEt
        Ecc = a * E[:, None, None] * (
            0.25 * r[:, :, None] * r[:, None, :] - M[None, :, :]
        )
        Ect = a * E[:, None, None] * (
            -0.25 * r[:, :, None] * dq[:, None, :] + 0.5 * self.dr
        )
        Ett = a * E[:, None, None] * (
            0.25 * dq[:, :, None] * dq[:, None, :] - 0.5 * self.d2q
        )
        H[:, 1:1 + d, 1:1 + d] = Ecc
        H[:, 1:1 + d, 1 + d:] = Ect
        H[:, 1 + d:, 1:1 + d] = np.swapaxes(Ect, 1, 2)
        H[:, 1 + d:, 1 + d:] = Ett
        return H

    # -- derivatives of the bump gradient wrt its own parameters ---------
    def grad_param_jac(self):
        """d(grad_z bump)/d(params), shape (n, d, 1+d+P)."""
        a, E, r, dq = self.bump.amplitude, self.E, self.r, self.dq
        n, d = r.shape
        P = dq.shape[1]
        J = np.zeros((n, d, 1 + d + P))
        J[:, :, 0] = -0.5 * E[:, None] * r
        J[:, :, 1:1 + d] = -self.hess_z()
        J[:, :, 1 + d:] = a * E[:, None, None] * (
            0.25 * r[:, :, None] * dq[:, None, :] - 0.5 * self.dr
        )
        return J

    # -- contracted second derivative of the gradient --------------------
    def grad_param_hess_contract(self, W: np.ndarray):
        """sum_i W_i . d2(grad_z bump)_i / dp dp, per sample.

        Returns shape (n, 1+d+P, 1+d+P).  Used for the exact second-order
        chain-rule term of g(T(x)) in the potential parameters.
        """
        a, E, r, dq, dr, M = (
            self.bump.amplitude, self.E, self.r, self.dq, self.dr, self.M,
        )
        u, dM, d2M = self.u, self.dM, self.d2M
        n, d = r.shape
        P = dq.shape[1]
        wr = np.einsum("nd,nd->n", W, r)
        wrc = -2.0 * W @ M                                # w . dr/dc
        wrt = np.einsum("nd,ndp->np", W, dr)              # w . dr/dtheta
        wrct = -2.0 * np.einsum("ni,pik->nkp", W, dM)     # w . d2r/dc dtheta
        wrtt = 2.0 * np.einsum("ni,pqij,nj->npq", W, d2M, u)
        qc = -r
        # F = E * wr;  s = -(a/2) F
        Fc = E[:, None] * (-0.5 * qc * wr[:, None] + wrc)
        Ft = E[:, None] * (-0.5 * dq * wr[:, None] + wrt)
        Fcc = E[:, None, None] * (
            0.25 * qc[:, :, None] * qc[:, None, :] * wr[:, None, None]
            - M[None, :, :] * wr[:, None, None]
            - 0.5 * (qc[:, :, None] * wrc[:, None, :] + wrc[:, :, None] * qc[:, None, :])
        )
        qct = -dr                                          # d2q/dc dtheta, (n,d,P)
        Fct = E[:, None, None] * (
            0.25 * qc[:, :, None] * dq[:, None, :] * wr[:, None, None]
            - 0.5 * qct * wr[:, None, None]
            - 0.5 * qc[:, :, None] * wrt[:, None, :]
            - 0.5 * dq[:, None, :] * wrc[:, :, None]
            + wrct
        )
        Ftt = E[:, None, None] * (
            0.25 * dq[:, :, None] * dq[:, None, :] * wr[:, None, None]
            - 0.5 * self.d2q * wr[:, None, None]
            - 0.5 * (dq[:, :, None] * wrt[:, None, :] + wrt[:, :, None] * dq[:, None, :])
            + wrtt
        )
        B = 1 + d + P
        S = np.zeros((n, B, B))
        S[:, 0, 1:1 + d] = -0.5 * Fc
        S[:, 1:1 + d, 0] = -0.5 * Fc
        S[:, 0, 1 + d:] = -0.5 * Ft
        S[:, 1 + d:, 0] = -0.5 * Ft
        S[:, 1:1 + d, 1:1 + d] = -0.5 * a * Fcc
        S[:, 1:1 + d, 1 + d:] = -0.5 * a * Fct
        S[:, 1 + d:, 1:1 + d] = np.swapaxes(-0.5 * a * Fct, 1, 2)
        S[:, 1 + d:, 1 + d:] = -0.5 * a * Ftt
        return S


# ---------------------------------------------------------------------------
# bundles consumed by the objective assembly
# ---------------------------------------------------------------------------

class MapBundle:
    """Transport map values and parameter derivatives at sample points."""

    def __init__(self, family, params: PotentialParams, X: np.ndarray, order: int):
        lay = family.layout.potential
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n, d = X.shape
        self.T = X + X @ params.A0 + params.a1
        self._fields = []
        for bump in params.bumps:
            f = _BumpFields(bump, X, order)
            self._fields.append(f)
            self.T = self.T + f.grad_z()
        self.J = None
        if order >= 1:
            J = np.zeros((n, d, lay.size))
            for k, (i, j) in enumerate(lay.triu):
                if i == j:
                    J[:, i, k] = X[:, i]
                else:
                    J[:, i, k] = X[:, j]
                    J[:, j, k] = X[:, i]
            for i in range(d):
                J[:, i, lay.lin_sl.start + i] = 1.0
            for f, (amp, csl, ssl) in zip(self._fields, lay.bump_slices):
                block = f.grad_param_jac()
                J[:, :, amp] = block[:, :, 0]
                J[:, :, csl] = block[:, :, 1:1 + d]
                J[:, :, ssl] = block[:, :, 1 + d:]
            self.J = J
        self._lay = lay
        self._n = n

    def hess_contract_mean(self, W: np.ndarray) -> np.ndarray:
        """(1/n) sum_i W_i . d2 T_i / d alpha d alpha, shape (a, a).

        Zero outside the per-bump blocks: T is linear in A0, a1 and in
        each amplitude-free pairing across distinct bumps.
        """
        lay = self._lay
        out = np.zeros((lay.size, lay.size))
        for f, (amp, csl, ssl) in zip(self._fields, lay.bump_slices):
            S = f.grad_param_hess_contract(W).mean(axis=0)
            d = f.d
            idx = np.r_[amp, np.arange(csl.start, csl.stop), np.arange(ssl.start, ssl.stop)]
            out[np.ix_(idx, idx)] = S
        return out


class DiscriminatorBundle:
    """Test-function values and derivatives at sample points."""

    def __init__(self, family, params: DiscriminatorParams, Z: np.ndarray, order: int):
        lay = family.layout.discriminator
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        n, d = Z.shape
        b = lay.size
        self.g = 0.5 * np.einsum("ni,ij,nj->n", Z, params.B0, Z) + Z @ params.b1 + params.b2
        fields = [_BumpFields(bump, Z, order) for bump in params.bumps]
        for f in fields:
            self.g = self.g + f.value()
        self.grad_z = self.grad_p = None
        self.hess_z = self.hess_p = self.grad_z_p = None
        if order >= 1:
            self.grad_z = Z @ params.B0 + params.b1
            for f in fields:
                self.grad_z = self.grad_z + f.grad_z()
            gp = np.zeros((n, b))
            for k, (i, j) in enumerate(lay.triu):
                gp[:, k] = 0.5 * Z[:, i] ** 2 if i == j else Z[:, i] * Z[:, j]
            gp[:, lay.lin_sl] = Z
            gp[:, lay.offset_idx] = 1.0
            for f, (amp, csl, ssl) in zip(fields, lay.bump_slices):
                va, vc, vt = f.value_param_grad()
                gp[:, amp] = va
                gp[:, csl] = vc
                gp[:, ssl] = vt
            self.grad_p = gp
        if order >= 2:
            hz = np.broadcast_to(params.B0, (n, d, d)).copy()
            for f in fields:
                hz += f.hess_z()
            self.hess_z = hz
            hp = np.zeros((n, b, b))
            gzp = np.zeros((n, d, b))
            for k, (i, j) in enumerate(lay.triu):
                if i == j:
                    gzp[:, i, k] = Z[:, i]
                else:
                    gzp[:, i, k] = Z[:, j]
                    gzp[:, j, k] = Z[:, i]
            for i in range(d):
                gzp[:, i, lay.lin_sl.start + i] = 1.0
            for f, (amp, csl, ssl) in zip(fields, lay.bump_slices):
                vh = f.value_param_hess()
                idx = np.r_[amp, np.arange(csl.start, csl.stop), np.arange(ssl.start, ssl.stop)]
                hp[:, idx[:, None], idx[None, :]] = vh
                block = f.grad_param_jac()
                gzp[:, :, amp] = block[:, :, 0]
                gzp[:, :, csl] = block[:, :, 1:1 + d]
                gzp[:, :, ssl] = block[:, :, 1 + d:]
            self.hess_p = hp
            self.grad_z_p = gzp
        self._n = n


# ---------------------------------------------------------------------------
# the adaptive family
# ---------------------------------------------------------------------------

def default_family(d: int, potential_bumps: int = 1,
                   discriminator_bumps: int = 2) -> "AdaptiveFamily":
    """The standard family: one adaptive bump for the potential, two for
    the test function; one-dimensional bumps use the directional form
    (whose scale parameter is an inverse length, so the resolution
    barrier has its intended meaning), isotropic otherwise."""
    kind = "directional" if d == 1 else "isotropic"
    return AdaptiveFamily(d, scale_kind=kind, potential_bumps=potential_bumps,
                          discriminator_bumps=discriminator_bumps)


class AdaptiveFamily:
    """Quadratic-plus-Gaussian-bump spaces for both players.

    The number of bumps and the scale form are fixed per instance; the
    flat parameter layout is derived from them.  Default bump counts
    follow the usual configuration: one adaptive bump for the potential
    and two for the test function.
    """

    def __init__(self, d: int, scale_kind: str = "isotropic",
                 potential_bumps: int = 1, discriminator_bumps: int = 2):
        if scale_kind not in SCALE_KINDS:
            raise ValueError(f"unknown scale form {scale_kind!r}")
        self.d = d
        self.scale_kind = scale_kind
        self.n_potential_bumps = potential_bumps
        self.n_discriminator_bumps = discriminator_bumps
        self.layout = ParamLayout(
            potential=PlayerLayout(d, has_offset=False,
                                   bump_scale_kinds=[scale_kind] * potential_bumps),
            discriminator=PlayerLayout(d, has_offset=True,
                                       bump_scale_kinds=[scale_kind] * discriminator_bumps),
        )

    @property
    def alpha_size(self) -> int:
        return self.layout.a

    @property
    def beta_size(self) -> int:
        return self.layout.b

    # -- initialization helpers -----------------------------------------
    def place_bumps(self, points: np.ndarray, count: int, rng) -> list:
        """Inactive bumps near the data: amplitude 0, center at the mean
        plus a seeded jitter of 0.1 std per axis, scale 1/std."""
        points = np.atleast_2d(points)
        mean = points.mean(axis=0)
        std = points.std(axis=0)
        std = np.where(std > 1e-12, std, 1.0)
        bumps = []
        for _ in range(count):
            center = mean + 0.1 * std * rng.standard_normal(self.d)
            width = float(std.mean())
            bumps.append(GaussianBump(0.0, center, default_scale(self.scale_kind, self.d, width)))
        return bumps

    def init_alpha(self, X: np.ndarray, rng) -> np.ndarray:
        params = PotentialParams.zeros(self.d, self.place_bumps(X, self.n_potential_bumps, rng))
        return self.layout.flatten_potential(params)

    def init_beta(self, quadratic: DiscriminatorParams, Y: np.ndarray, rng) -> np.ndarray:
        params = DiscriminatorParams(
            B0=quadratic.B0, b1=quadratic.b1, b2=quadratic.b2,
            bumps=self.place_bumps(Y, self.n_discriminator_bumps, rng),
        )
        return self.layout.flatten_discriminator(params)

    # -- bundles -----------------------------------------------------------
    def map_bundle(self, alpha: np.ndarray, X: np.ndarray, order: int = 1) -> MapBundle:
        params = self.layout.unflatten_potential(np.asarray(alpha, dtype=float))
        return MapBundle(self, params, X, order)

    def dis_bundle(self, beta: np.ndarray, Z: np.ndarray, order: int = 1) -> DiscriminatorBundle:
        params = self.layout.unflatten_discriminator(np.asarray(beta, dtype=float))
        return DiscriminatorBundle(self, params, Z, order)

    def admissible_step(self, gamma_old: np.ndarray, gamma_new: np.ndarray) -> bool:
        """Isotropic scales may not change sign: the broad-bump barrier is
        infinite at v = 0, so a proposal crossing it jumps over an infinite
        wall of the objective (invisible to the value comparisons when the
        bump amplitude is ~0).  Sign-symmetric scale forms are unaffected."""
        if self.scale_kind != "isotropic":
            return True
        a = self.layout.a
        for lay, off in ((self.layout.potential, 0), (self.layout.discriminator, a)):
            for (_, _, ssl) in lay.bump_slices:
                i = off + ssl.start
                if gamma_old[i] * gamma_new[i] <= 0.0:
                    return False
        return True

    def admissible_beta_step(self, beta_old: np.ndarray, beta_new: np.ndarray) -> bool:
        """Same barrier rule restricted to the discriminator block."""
        if self.scale_kind != "isotropic":
            return True
        for (_, _, ssl) in self.layout.discriminator.bump_slices:
            if beta_old[ssl.start] * beta_new[ssl.start] <= 0.0:
                return False
        return True

    # -- structured views --------------------------------------------------
    def alpha_params(self, alpha: np.ndarray) -> PotentialParams:
        return self.layout.unflatten_potential(np.asarray(alpha, dtype=float))

    def beta_params(self, beta: np.ndarray) -> DiscriminatorParams:
        return self.layout.unflatten_discriminator(np.asarray(beta, dtype=float))

    def map_points(self, alpha: np.ndarray, X: np.ndarray) -> np.ndarray:
        return self.map_bundle(alpha, X, order=0).T

    def map_jacobian_eigmin(self, alpha: np.ndarray, X: np.ndarray) -> float:
        """Smallest eigenvalue of the spatial Jacobian I + A0 + bump
        Hessians over the sample rows; a convexity monitor for phi."""
        params = self.alpha_params(alpha)
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n, d = X.shape
        Jac = np.broadcast_to(np.eye(d) + params.A0, (n, d, d)).copy()
        for bump in params.bumps:
            Jac += _BumpFields(bump, X, 0).hess_z()
        return float(np.linalg.eigvalsh(Jac).min())


# ---------------------------------------------------------------------------
# public single-point operations
# ---------------------------------------------------------------------------

def transport_map(params: PotentialParams, x) -> np.ndarray:
    """grad phi at x; x may be a single point (d,) or rows (n, d)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    T = X + X @ params.A0 + params.a1
    for bump in params.bumps:
        T = T + _BumpFields(bump, X, 0).grad_z()
    return T[0] if single else T


def potential_value(params: PotentialParams, x) -> np.ndarray:
    """phi(x); used by the finite-difference oracles in the tests."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    v = 0.5 * np.einsum("ni,ni->n", X, X)
    v = v + 0.5 * np.einsum("ni,ij,nj->n", X, params.A0, X) + X @ params.a1
    for bump in params.bumps:
        v = v + bump.value(X)
    return float(v[0]) if single else v


def eval_discriminator(params: DiscriminatorParams, z) -> np.ndarray:
    """g(z); z may be a single point (d,) or rows (n, d)."""
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    Z = np.atleast_2d(z)
    g = 0.5 * np.einsum("ni,ij,nj->n", Z, params.B0, Z) + Z @ params.b1 + params.b2
    for bump in params.bumps:
        g = g + bump.value(Z)
    return float(g[0]) if single else g


@dataclass
class DerivativeBundle:
    """Chain-rule blocks at one source point x and one target point y."""

    T: np.ndarray                    # grad phi(x)
    grad_g_at_T: np.ndarray          # grad_z g(T)
    dT_dalpha: np.ndarray            # (d, a)
    dg_dbeta_at_T: np.ndarray        # (b,)
    d2_gT_dalpha2: np.ndarray        # (a, a)
    d2_gT_dalpha_dbeta: np.ndarray   # (a, b)
    dg_dbeta_at_y: np.ndarray | None = None       # (b,)
    d2g_dbeta2_at_y: np.ndarray | None = None     # (b, b)
    d2_expg_dbeta2_at_y: np.ndarray | None = None  # e^g (gg' + g'')


def derivative_bundle(family: AdaptiveFamily, alpha, beta, x, y=None) -> DerivativeBundle:
    """All first/second derivative blocks of the summand g(grad phi(x)) in
    the parameters, plus the e^g blocks at a target point y."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    X = np.atleast_2d(np.asarray(x, dtype=float))
    mb = family.map_bundle(alpha, X, order=2)
    db = family.dis_bundle(beta, mb.T, order=2)
    J = mb.J[0]
    gz = db.grad_z[0]
    chain = J.T @ db.hess_z[0] @ J + mb.hess_contract_mean(db.grad_z)
    cross = J.T @ db.grad_z_p[0]
    out = DerivativeBundle(
        T=mb.T[0],
        grad_g_at_T=gz,
        dT_dalpha=J,
        dg_dbeta_at_T=db.grad_p[0],
        d2_gT_dalpha2=chain,
        d2_gT_dalpha_dbeta=cross,
    )
    if y is not None:
        Y = np.atleast_2d(np.asarray(y, dtype=float))
        dy = family.dis_bundle(beta, Y, order=2)
        eg = float(np.exp(dy.g[0]))
        gp = dy.grad_p[0]
        out.dg_dbeta_at_y = gp
        out.d2g_dbeta2_at_y = dy.hess_p[0]
        out.d2_expg_dbeta2_at_y = eg * (np.outer(gp, gp) + dy.hess_p[0])
    return out
