import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from slopegyre.green_kernel import (GammaTooLarge, GreenKernel, apply_char_poly, boundary_derivative, build_kernel,
                                    convolve, exp_decay_bound)
from slopegyre.munk_roots import quartic_poly, quartic_roots
from slopegyre.regime import preset, validate
from slopegyre.spectral_field import ModeSet, Profile


@pytest.fixture
def synthetic():
    return GreenKernel.from_roots([1.0, 2.0], [-1.0, -2.0], 1.0)


def test_synthetic_coefficients_against_dense_solve(synthetic):
    A = np.array([[1, 1, -1, -1], [1, 2, 1, 2], [1, 4, -1, -4], [1, 8, 1, 8]], dtype=float)
    x = np.linalg.solve(A, [0, 0, 0, 1.0])
    assert np.allclose(x[:2], [-1 / 6, 1 / 12])
    assert np.allclose(synthetic.C_plus[0, :, 0], x[:2], atol=1e-14)
    assert np.allclose(synthetic.C_minus[0, :, 0], x[2:], atol=1e-14)
    assert synthetic.lagrange_gap.max() < 1e-10


def test_scaling_in_viscosity(synthetic):
    k = GreenKernel.from_roots([1.0, 2.0], [-1.0, -2.0], 4.0)
    assert np.allclose(k.C_plus, synthetic.C_plus / 4)
    assert np.allclose(k.C_minus, synthetic.C_minus / 4)


def test_jumps_synthetic(synthetic):
    j = synthetic.jumps()[0]
    assert np.allclose(j[:3], 0, atol=1e-14)
    assert j[3] == pytest.approx(-1.0)


def test_lowfreq_coefficient_bound():
    sc = validate(preset("lowfreq"))
    rng = np.random.default_rng(3)
    modes = ModeSet(rng.uniform(-3, 3, 50), rng.uniform(0.1, 3, 50))
    k = build_kernel(quartic_roots(modes, sc.omega, sc, refs=False), sc)
    assert sc.beta * max(np.abs(k.C_plus).max(), np.abs(k.C_minus).max()) <= 10
    ns2 = sc.nu_eff * sc.s ** 2
    j = k.jumps()
    scale = np.abs(k.C_plus[..., 0]).max(axis=1)
    assert np.all(np.abs(j[:, 0]) <= 1e-10 * scale)
    assert np.allclose(j[:, 3], -1 / ns2, rtol=1e-9)
    assert k.lagrange_gap.max() < 1e-10


def test_convolve_zero(synthetic):
    S = Profile.zeros(synthetic.rates(), 1, 1)
    assert convolve(synthetic, S).is_zero()


def test_convolve_matches_quadrature(synthetic):
    S = Profile.from_terms([(3.0, [1.0])])
    out = convolve(synthetic, S)
    for z in (0.0, 0.5, 1.0, 2.0):
        g = lambda zp: synthetic.evaluate([z - zp])[0, 0].real * np.exp(-3 * zp)
        lo, _ = integrate.quad(g, 0, z) if z > 0 else (0.0, 0)
        hi, _ = integrate.quad(g, z, np.inf)
        assert abs(out(z)[0, 0] - (lo + hi)) < 1e-8


def test_convolve_polynomial_and_confluent_sources(synthetic):
    # z e^{-z} hits the kernel rate 1 exactly
    S = Profile(synthetic.rates(), {"mu1": np.array([[[0.0], [1.0]]])})
    out = convolve(synthetic, S)
    for z in (0.0, 0.7, 2.5):
        g = lambda zp: synthetic.evaluate([z - zp])[0, 0].real * zp * np.exp(-zp)
        lo = integrate.quad(g, 0, z)[0] if z > 0 else 0.0
        hi = integrate.quad(g, z, np.inf)[0]
        assert abs(out(z)[0, 0] - (lo + hi)) < 1e-8


def _random_lowfreq_modes(rng, m):
    return ModeSet(rng.uniform(-4, 4, m), rng.uniform(0.2, 4, m) * rng.choice([-1, 1], m))


def test_char_poly_recovers_source(rng):
    sc = validate(preset("lowfreq"))
    modes = _random_lowfreq_modes(rng, 100)
    k = build_kernel(quartic_roots(modes, sc.omega, sc, refs=False), sc)
    rates = dict(k.rates())
    rates["g"] = np.full((modes.M, 1), 0.4 + 0.3j)
    S = Profile(rates, {"g": np.stack([np.ones(modes.M), rng.normal(size=modes.M)], 1)[..., None]})
    psi = convolve(k, S)
    back = apply_char_poly(quartic_poly(modes, sc.omega, sc), psi)
    z = np.linspace(0.05, 3, 20)
    ref = np.abs(S(z)).max(axis=1, keepdims=True)
    assert np.abs(back(z) - S(z)).max() / ref.min() < 1e-8


@given(st.floats(0.1, 3), st.floats(-2, 2), st.floats(-2, 2))
def test_convolve_linear(gam, a, b):
    k = GreenKernel.from_roots([1.0, 2.0 + 1j], [-1.0, -2.0], 1.0)
    rates = dict(k.rates())
    rates["g"] = np.array([[gam]], complex)
    rates["h"] = np.array([[gam + 0.5]], complex)
    S1 = Profile(rates, {"g": np.array([[[1.0], [0.5]]])})
    S2 = Profile(rates, {"h": np.array([[[2.0]]])})
    z = np.linspace(0, 4, 9)
    lhs = convolve(k, S1.scale(a) + S2.scale(b))(z)
    rhs = a * convolve(k, S1)(z) + b * convolve(k, S2)(z)
    assert np.allclose(lhs, rhs, atol=1e-12)


def _dz_fd(prof, z, h=1e-4):
    return (prof(z + h) - prof(z - h)) / (2 * h)


def test_boundary_derivative_k0(synthetic):
    S = Profile.from_terms([(0.7, [1.0])])
    a = boundary_derivative(synthetic, S, 0)
    b = convolve(synthetic, S).dz()
    z = np.linspace(0, 5, 11)
    assert np.allclose(a(z), b(z), atol=1e-10)


def test_boundary_derivative_vanishing_traces(synthetic):
    S = Profile.from_terms([(1.5, [0.0, 0.0, 1.0])])
    a = boundary_derivative(synthetic, S, 1)
    b = convolve(synthetic, S.dzn(2))
    z = np.linspace(0, 5, 11)
    assert np.allclose(a(z), b(z), atol=1e-12)


def test_boundary_derivative_k2_finite_difference(synthetic):
    S = Profile.from_terms([(0.7, [1.0])])
    a = boundary_derivative(synthetic, S, 2)
    d2 = convolve(synthetic, S).dzn(2)
    z = np.linspace(0.2, 5, 9)
    assert np.allclose(a(z), _dz_fd(d2, z), atol=1e-6)


def test_exp_decay_bound(synthetic):
    C = exp_decay_bound(synthetic, 0.4)[0]
    S = Profile.from_terms([(0.4, [1.0])])
    z = np.linspace(0, 10, 201)
    assert np.all(np.abs(convolve(synthetic, S)(z)[0]) <= C * np.exp(-0.4 * z))
    with pytest.raises(GammaTooLarge):
        exp_decay_bound(synthetic, 0.6)
    assert exp_decay_bound(synthetic, 1e-3)[0] > 100 * C


def test_norm_bound():
    sc = validate(preset("lowfreq"))
    modes = ModeSet(np.array([0.5, -1.0, 2.0]), np.array([1.0, 0.5, -1.5]))
    k = build_kernel(quartic_roots(modes, sc.omega, sc, refs=False), sc)
    S = Profile(k.rates() | {"g": np.full((3, 1), 0.5)}, {"g": np.ones((3, 1, 1))})
    z = np.linspace(0, 20, 400)
    assert np.abs(convolve(k, S)(z)).max() <= 10 / sc.beta * 2.0


def test_sverdrup_interior_defect_decreases():
    # far from the layer the defect is set by viscosity alone
    out = []
    for eps in (1e-2, 1e-3, 1e-4):
        sc = validate(preset("lowfreq", eps)).replace(omega=0.0)
        k = build_kernel(quartic_roots((1.0, 1.0), 0.0, sc, refs=False), sc)
        S = Profile.from_terms([(0.3, [1.0])])
        psi = convolve(k, S)
        z = np.array([20.0])
        d = sc.beta * (sc.c * 1j * psi(z) - sc.s * psi.dz()(z)) - S(z)
        out.append(abs(d[0, 0]) / abs(S(z)[0, 0]))
    assert out[1] < out[0] / 2 and out[2] < out[1] / 2
