"""Feature-family tests: values, analytic derivatives vs finite
differences, layout round-trips, and locality properties."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adot.features import (
    AdaptiveFamily,
    DiagonalScale,
    DirectionalScale,
    DiscriminatorParams,
    FullMatrixScale,
    GaussianBump,
    IsotropicScale,
    PotentialParams,
    derivative_bundle,
    eval_discriminator,
    potential_value,
    transport_map,
)

ALL_KINDS = ["full", "isotropic", "directional", "diagonal"]


def make_scale(kind, d, rng=None, width=1.0):
    rng = rng or np.random.default_rng(0)
    if kind == "full":
        return FullMatrixScale(np.eye(d) / width + 0.1 * rng.standard_normal((d, d)))
    if kind == "isotropic":
        return IsotropicScale(1.0 / width)
    if kind == "directional":
        return DirectionalScale(rng.uniform(0.4, 1.2, d) / width)
    if kind == "diagonal":
        return DiagonalScale(rng.uniform(0.4, 1.2, d) / width)
    raise ValueError(kind)


def random_family_state(family, rng):
    d = family.d
    alpha = 0.15 * rng.standard_normal(family.alpha_size)
    beta = 0.15 * rng.standard_normal(family.beta_size)
    lay = family.layout
    for (_, csl, ssl) in lay.potential.bump_slices:
        alpha[csl] = rng.standard_normal(d)
        alpha[ssl] = rng.uniform(0.4, 1.3, ssl.stop - ssl.start)
    for (_, csl, ssl) in lay.discriminator.bump_slices:
        beta[csl] = rng.standard_normal(d)
        beta[ssl] = rng.uniform(0.4, 1.3, ssl.stop - ssl.start)
    return alpha, beta


# ---------------------------------------------------------------------------
# transport_map
# ---------------------------------------------------------------------------

def test_zero_params_identity():
    p = PotentialParams.zeros(2)
    x = np.array([1.5, -2.0])
    assert np.array_equal(transport_map(p, x), x)


def test_pure_translation():
    p = PotentialParams(A0=[[0.0]], a1=[2.0])
    assert transport_map(p, np.array([0.7]))[0] == pytest.approx(2.7, abs=0)


def test_bump_gradient_matches_closed_form_and_fd():
    # d=1 isotropic bump: grad phi = x - a v (x-c) exp(-v (x-c)^2 / 2)
    a, v, c, x = 0.5, 1.0, 0.0, 1.0
    p = PotentialParams(A0=[[0.0]], a1=[0.0],
                        bumps=[GaussianBump(a, [c], IsotropicScale(v))])
    got = transport_map(p, np.array([x]))[0]
    expected = x - a * v * (x - c) * np.exp(-v * (x - c) ** 2 / 2)
    assert got == pytest.approx(expected, rel=1e-12)
    h = 1e-6
    fd = (potential_value(p, np.array([x + h])) - potential_value(p, np.array([x - h]))) / (2 * h)
    assert abs(got - fd) / abs(fd) < 1e-6


@pytest.mark.parametrize("d", [1, 2, 3])
def test_gradient_consistency_random(d):
    # transport_map equals the FD gradient of the potential everywhere
    rng = np.random.default_rng(d)
    for _ in range(50 // 3 + 1):
        bumps = [GaussianBump(rng.normal(), rng.standard_normal(d),
                              make_scale("isotropic", d, rng, width=rng.uniform(0.7, 2)))]
        p = PotentialParams(A0=0.2 * rng.standard_normal((d, d)),
                            a1=rng.standard_normal(d), bumps=bumps)
        x = rng.standard_normal(d)
        g = transport_map(p, x)
        h = 1e-6
        fd = np.zeros(d)
        for i in range(d):
            e = np.zeros(d)
            e[i] = h
            fd[i] = (potential_value(p, x + e) - potential_value(p, x - e)) / (2 * h)
        denom = max(np.max(np.abs(fd)), 1.0)
        assert np.max(np.abs(g - fd)) / denom < 1e-6


# ---------------------------------------------------------------------------
# eval_discriminator
# ---------------------------------------------------------------------------

def test_discriminator_zero():
    p = DiscriminatorParams.zeros(3)
    assert eval_discriminator(p, np.array([0.3, -1.0, 4.0])) == 0.0


def test_discriminator_quadratic():
    p = DiscriminatorParams(B0=[[1.0]], b1=[0.0], b2=0.0)
    assert eval_discriminator(p, np.array([2.0])) == pytest.approx(2.0)


def test_discriminator_bump_at_center_and_decay():
    bump = GaussianBump(3.0, [1.0, 1.0], IsotropicScale(2.0))
    p = DiscriminatorParams(B0=0.1 * np.eye(2), b1=[0.2, -0.1], b2=0.5, bumps=[bump])
    quad = lambda z: 0.5 * z @ p.B0 @ z + p.b1 @ z + p.b2
    z = np.array([1.0, 1.0])
    assert eval_discriminator(p, z) == pytest.approx(quad(z) + 3.0, rel=1e-12)
    far = np.array([10.0, 10.0])
    assert abs(eval_discriminator(p, far) - quad(far)) < 1e-10


# ---------------------------------------------------------------------------
# derivative_bundle
# ---------------------------------------------------------------------------

def test_bundle_beta_gradient_is_raw_features_at_zero():
    family = AdaptiveFamily(2, scale_kind="isotropic", potential_bumps=1,
                            discriminator_bumps=2)
    rng = np.random.default_rng(5)
    alpha = np.zeros(family.alpha_size)
    beta = np.zeros(family.beta_size)
    lay = family.layout
    # give the zero-amplitude bumps definite centers and scales
    for vec, player in ((alpha, lay.potential), (beta, lay.discriminator)):
        for (_, csl, ssl) in player.bump_slices:
            vec[csl] = rng.standard_normal(2)
            vec[ssl] = 1.0
    x = rng.standard_normal(2)
    bundle = derivative_bundle(family, alpha, beta, x)
    assert np.allclose(bundle.T, x)
    dis = family.beta_params(beta)
    expected = np.zeros(family.beta_size)
    k = 0
    for (i, j) in lay.discriminator.triu:
        expected[k] = 0.5 * x[i] ** 2 if i == j else x[i] * x[j]
        k += 1
    expected[lay.discriminator.lin_sl] = x
    expected[lay.discriminator.offset_idx] = 1.0
    for bump, (amp, csl, ssl) in zip(dis.bumps, lay.discriminator.bump_slices):
        u = x - bump.center
        q = u @ bump.scale.matrix(2) @ u
        expected[amp] = np.exp(-0.5 * q)  # unit-amplitude bump value
        # center/scale feature components vanish at zero amplitude
    assert np.allclose(bundle.dg_dbeta_at_T, expected, atol=1e-12)


def lagrangian_summand(family, alpha, beta, x, y):
    """g(T(x)) - exp(g(y)): the per-sample objective the bundle serves."""
    T = family.map_points(alpha, x.reshape(1, -1))[0]
    gT = family.dis_bundle(beta, T.reshape(1, -1), order=0).g[0]
    gy = family.dis_bundle(beta, y.reshape(1, -1), order=0).g[0]
    return gT - np.exp(gy)


@pytest.mark.parametrize("kind", ALL_KINDS)
@pytest.mark.parametrize("d", [1, 2])
def test_bundle_first_derivatives_match_fd(kind, d):
    rng = np.random.default_rng(hash((kind, d)) % 2 ** 31)
    family = AdaptiveFamily(d, scale_kind=kind, potential_bumps=1, discriminator_bumps=2)
    for draw in range(10):
        alpha, beta = random_family_state(family, rng)
        x = rng.standard_normal(d)
        y = rng.standard_normal(d)
        bundle = derivative_bundle(family, alpha, beta, x, y)
        h = 1e-5

        def f_alpha(a):
            return lagrangian_summand(family, a, beta, x, y)

        def f_beta(b):
            return lagrangian_summand(family, alpha, b, x, y)

        fd_a = np.zeros(family.alpha_size)
        for i in range(family.alpha_size):
            ap, am = alpha.copy(), alpha.copy()
            ap[i] += h
            am[i] -= h
            fd_a[i] = (f_alpha(ap) - f_alpha(am)) / (2 * h)
        analytic_a = bundle.dT_dalpha.T @ bundle.grad_g_at_T
        scale = max(np.max(np.abs(fd_a)), 1e-8)
        assert np.max(np.abs(fd_a - analytic_a)) / scale < 1e-5

        fd_b = np.zeros(family.beta_size)
        for i in range(family.beta_size):
            bp, bm = beta.copy(), beta.copy()
            bp[i] += h
            bm[i] -= h
            fd_b[i] = (f_beta(bp) - f_beta(bm)) / (2 * h)
        eg = np.exp(family.dis_bundle(beta, y.reshape(1, -1), order=0).g[0])
        analytic_b = bundle.dg_dbeta_at_T - eg * bundle.dg_dbeta_at_y
        scale = max(np.max(np.abs(fd_b)), 1e-8)
        assert np.max(np.abs(fd_b - analytic_b)) / scale < 1e-5


@pytest.mark.parametrize("kind", ALL_KINDS)
@pytest.mark.parametrize("d", [1, 2])
def test_bundle_second_derivatives_match_fd(kind, d):
    rng = np.random.default_rng(hash(("second", kind, d)) % 2 ** 31)
    family = AdaptiveFamily(d, scale_kind=kind, potential_bumps=1, discriminator_bumps=2)
    for draw in range(5):
        alpha, beta = random_family_state(family, rng)
        x = rng.standard_normal(d)
        y = rng.standard_normal(d)
        bundle = derivative_bundle(family, alpha, beta, x, y)
        h = 1e-5

        def grad_alpha_of_gT(a, b):
            bn = derivative_bundle(family, a, b, x)
            return bn.dT_dalpha.T @ bn.grad_g_at_T

        fd_aa = np.zeros((family.alpha_size, family.alpha_size))
        for i in range(family.alpha_size):
            ap, am = alpha.copy(), alpha.copy()
            ap[i] += h
            am[i] -= h
            fd_aa[:, i] = (grad_alpha_of_gT(ap, beta) - grad_alpha_of_gT(am, beta)) / (2 * h)
        scale = max(np.max(np.abs(fd_aa)), 1e-8)
        assert np.max(np.abs(fd_aa - bundle.d2_gT_dalpha2)) / scale < 1e-4

        fd_ab = np.zeros((family.alpha_size, family.beta_size))
        for i in range(family.beta_size):
            bp, bm = beta.copy(), beta.copy()
            bp[i] += h
            bm[i] -= h
            fd_ab[:, i] = (grad_alpha_of_gT(alpha, bp) - grad_alpha_of_gT(alpha, bm)) / (2 * h)
        scale = max(np.max(np.abs(fd_ab)), 1e-8)
        assert np.max(np.abs(fd_ab - bundle.d2_gT_dalpha_dbeta)) / scale < 1e-4

        def grad_beta_expg(b):
            bn = family.dis_bundle(b, y.reshape(1, -1), order=1)
            return np.exp(bn.g[0]) * bn.grad_p[0]

        fd_exp = np.zeros((family.beta_size, family.beta_size))
        for i in range(family.beta_size):
            bp, bm = beta.copy(), beta.copy()
            bp[i] += h
            bm[i] -= h
            fd_exp[:, i] = (grad_beta_expg(bp) - grad_beta_expg(bm)) / (2 * h)
        scale = max(np.max(np.abs(fd_exp)), 1e-8)
        assert np.max(np.abs(fd_exp - bundle.d2_expg_dbeta2_at_y)) / scale < 1e-4


def test_bundle_hessian_blocks_symmetric():
    rng = np.random.default_rng(11)
    family = AdaptiveFamily(2, scale_kind="diagonal")
    alpha, beta = random_family_state(family, rng)
    x, y = rng.standard_normal(2), rng.standard_normal(2)
    bundle = derivative_bundle(family, alpha, beta, x, y)
    assert np.allclose(bundle.d2_gT_dalpha2, bundle.d2_gT_dalpha2.T, atol=1e-12)
    assert np.allclose(bundle.d2g_dbeta2_at_y, bundle.d2g_dbeta2_at_y.T, atol=1e-12)


# ---------------------------------------------------------------------------
# layout round-trips
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("kind", ALL_KINDS)
@pytest.mark.parametrize("d", [1, 2, 3])
def test_flatten_unflatten_roundtrip(kind, d):
    rng = np.random.default_rng(hash((kind, d, "rt")) % 2 ** 31)
    family = AdaptiveFamily(d, scale_kind=kind, potential_bumps=2, discriminator_bumps=2)
    alpha, beta = random_family_state(family, rng)
    pot = family.alpha_params(alpha)
    dis = family.beta_params(beta)
    assert np.array_equal(family.layout.flatten_potential(pot), alpha)
    assert np.array_equal(family.layout.flatten_discriminator(dis), beta)


def test_symmetric_entries_not_double_counted():
    family = AdaptiveFamily(3, potential_bumps=0, discriminator_bumps=0)
    # d=3: 6 upper-triangular + 3 linear for the potential
    assert family.alpha_size == 6 + 3
    assert family.beta_size == 6 + 3 + 1
    A = np.array([[1.0, 2.0, 3.0], [0.0, 4.0, 5.0], [0.0, 0.0, 6.0]])
    p = PotentialParams(A0=A, a1=np.zeros(3))
    flat = family.layout.flatten_potential(p)
    assert np.array_equal(flat[:6], [1, 2, 3, 4, 5, 6])
    back = family.alpha_params(flat)
    assert np.array_equal(back.A0, back.A0.T)


def test_a0_upper_triangle_authoritative():
    p = PotentialParams(A0=[[1.0, 5.0], [99.0, 2.0]], a1=[0.0, 0.0])
    assert p.A0[1, 0] == 5.0


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.2, 3),
       st.floats(-10, 10))
def test_bump_locality(amplitude, center, v, x):
    bump = GaussianBump(amplitude, [center], IsotropicScale(v))
    val = bump.value(np.array([[x]]))[0]
    assert abs(val) <= abs(amplitude) + 1e-15
    # strictly below the amplitude once detectably away from the center
    if abs(x - center) > 1e-3:
        assert abs(val) < abs(amplitude) or amplitude == 0.0


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2 ** 31 - 1))
def test_identity_fixed_point_property(d, seed):
    rng = np.random.default_rng(seed)
    p = PotentialParams.zeros(d)
    X = rng.standard_normal((4, d))
    assert np.array_equal(transport_map(p, X), X)


def test_dimension_mismatch_rejected_at_construction():
    with pytest.raises(ValueError):
        PotentialParams(A0=np.zeros((2, 2)), a1=np.zeros(3))
    with pytest.raises(ValueError):
        DiscriminatorParams(B0=np.zeros((2, 2)), b1=np.zeros(2), b2=0.0,
                            bumps=[GaussianBump(1.0, [0.0], IsotropicScale(1.0))])
    with pytest.raises(ValueError):
        GaussianBump(1.0, [0.0, 0.0], DirectionalScale([1.0, 1.0, 1.0]))
