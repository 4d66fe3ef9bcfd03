"""Seeded generators for the benchmark distributions and the closed-form
reference maps used to score recovered transports.

All generators run on numpy's counter-based Philox bit generator so that
(spec, seed) fully determines the output array, bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GENERATOR_NAME",
    "GaussianSpec",
    "MixtureSpec",
    "AnnulusSpec",
    "PowerPairSpec",
    "DatasetSpec",
    "ReferenceMap",
    "Shift",
    "AffineGaussian",
    "PowerMap",
    "generate",
    "power_pair",
    "reference_eval",
    "spec_from_dict",
]

GENERATOR_NAME = f"numpy-philox (numpy {np.__version__})"


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


# ---------------------------------------------------------------------------
# dataset specs
# ---------------------------------------------------------------------------

@dataclass
class GaussianSpec:
    mean: np.ndarray
    cov: np.ndarray
    kind = "gaussian"

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        self.cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        d = self.mean.size
        if self.cov.shape != (d, d):
            raise ValueError("covariance shape does not match mean")
        try:
            self._chol = np.linalg.cholesky(self.cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance must be symmetric positive definite") from exc

    @property
    def d(self):
        return self.mean.size

    def draw(self, n, rng):
        z = rng.standard_normal((n, self.d))
        return self.mean + z @ self._chol.T


@dataclass
class MixtureSpec:
    components: list  # of (weight, GaussianSpec)
    kind = "mixture"

    def __post_init__(self):
        w = np.array([float(c[0]) for c in self.components])
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be nonnegative and sum to 1")
        dims = {c[1].d for c in self.components}
        if len(dims) != 1:
            raise ValueError("mixture components disagree in dimension")
        self._weights = w

    @property
    def d(self):
        return self.components[0][1].d

    def draw(self, n, rng):
        # categorical first, then one shared normal draw transformed
        # per-component: deterministic and order-independent
        u = rng.random(n)
        edges = np.cumsum(self._weights)
        idx = np.searchsorted(edges, u, side="right")
        idx = np.minimum(idx, len(self.components) - 1)
        z = rng.standard_normal((n, self.d))
        out = np.empty((n, self.d))
        for k, (_, comp) in enumerate(self.components):
            sel = idx == k
            out[sel] = comp.mean + z[sel] @ comp._chol.T
        return out


@dataclass
class AnnulusSpec:
    center: np.ndarray
    r_inner: float
    r_outer: float
    kind = "annulus"

    def __post_init__(self):
        self.center = np.atleast_1d(np.asarray(self.center, dtype=float))
        self.r_inner = float(self.r_inner)
        self.r_outer = float(self.r_outer)
        if self.center.size != 2:
            raise ValueError("annulus is two-dimensional")
        if not (0.0 <= self.r_inner < self.r_outer):
            raise ValueError("need 0 <= r_inner < r_outer")

    @property
    def d(self):
        return 2

    def draw(self, n, rng):
        # area-uniform: density proportional to r, i.e. r^2 uniform
        theta = rng.random(n) * 2.0 * np.pi
        r2 = self.r_inner ** 2 + rng.random(n) * (self.r_outer ** 2 - self.r_inner ** 2)
        r = np.sqrt(r2)
        return self.center + np.column_stack([r * np.cos(theta), r * np.sin(theta)])


@dataclass
class PowerPairSpec:
    epsilon: float
    kind = "power_pair"

    def __post_init__(self):
        self.epsilon = float(self.epsilon)
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")

    @property
    def d(self):
        return 1

    def draw(self, n, rng):
        return rng.standard_normal((n, 1))


@dataclass
class DatasetSpec:
    """One dataset: distribution shape, sample count, and seed."""

    shape: object  # GaussianSpec | MixtureSpec | AnnulusSpec | PowerPairSpec
    n: int
    seed: int

    def __post_init__(self):
        self.n = int(self.n)
        self.seed = int(self.seed)
        if self.n < 1:
            raise ValueError("n must be >= 1")


def generate(spec: DatasetSpec) -> np.ndarray:
    """Draw spec.n rows; identical (spec, seed) gives identical bits."""
    return spec.shape.draw(spec.n, _rng(spec.seed))


# ---------------------------------------------------------------------------
# reference maps
# ---------------------------------------------------------------------------

class ReferenceMap:
    """Closed-form ground-truth map for scoring a recovered transport."""

    def __call__(self, x):
        return reference_eval(self, x)


@dataclass
class Shift(ReferenceMap):
    a: np.ndarray
    kind = "shift"

    def __post_init__(self):
        self.a = np.atleast_1d(np.asarray(self.a, dtype=float))


@dataclass
class AffineGaussian(ReferenceMap):
    A: np.ndarray
    b: np.ndarray
    kind = "affine"

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.atleast_1d(np.asarray(self.b, dtype=float))


@dataclass
class PowerMap(ReferenceMap):
    """x -> (1 + eps) x |x|^(eps-1), extended continuously by 0 at x = 0."""

    epsilon: float
    kind = "power"


def reference_eval(ref: ReferenceMap, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    X = np.atleast_2d(x)
    if isinstance(ref, Shift):
        out = X + ref.a
    elif isinstance(ref, AffineGaussian):
        out = X @ ref.A.T + ref.b
    elif isinstance(ref, PowerMap):
        eps = ref.epsilon
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (1.0 + eps) * X * np.abs(X) ** (eps - 1.0)
        out[X == 0.0] = 0.0
    else:
        raise TypeError(f"unknown reference map {type(ref).__name__}")
    return out[0] if single else out


def power_pair(n: int, epsilon: float, seed: int):
    """Benchmark with known answer: X standard normal in 1D and
    Y row-wise the gradient of |x|^(1+eps); returns (X, Y, reference)."""
    spec = DatasetSpec(PowerPairSpec(epsilon), n, seed)
    X = generate(spec)
    ref = PowerMap(epsilon)
    Y = reference_eval(ref, X)
    return X, Y, ref


# ---------------------------------------------------------------------------
# config-format bridge
# ---------------------------------------------------------------------------

def spec_from_dict(doc: dict) -> DatasetSpec:
    """Build a DatasetSpec from its config-file form."""
    kind = doc.get("kind")
    n = doc.get("n")
    seed = doc.get("seed")
    if kind == "gaussian":
        shape = GaussianSpec(doc["mean"], doc["cov"])
    elif kind == "mixture":
        comps = [(c["weight"], GaussianSpec(c["mean"], c["cov"]))
                 for c in doc["components"]]
        shape = MixtureSpec(comps)
    elif kind == "annulus":
        shape = AnnulusSpec(doc.get("center", [0.0, 0.0]), doc["r_inner"], doc["r_outer"])
    elif kind == "power_pair":
        shape = PowerPairSpec(doc["epsilon"])
    else:
        raise ValueError(f"unknown dataset kind {kind!r}")
    return DatasetSpec(shape, n, seed)
