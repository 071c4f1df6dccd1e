import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from slopegyre import jets as J
from slopegyre.regime import preset, validate
from slopegyre.spectral_field import (AliasWarning, ForcingRecipe, ModeGrid, ModeSet, Operators, Profile,
                                      SpectralField, TailTooLarge, apply_diff, box_multiply_by_y,
                                      ingest_forcing, multiply_by_y, weighted_l2, export_profile)

SC = validate(preset("reference"))


def random_profile(rng, M=4, n=3, D=3):
    rates = {"a": J.const(rng.uniform(0.5, 2, M) + 1j * rng.normal(size=M), n),
             "b": J.const(rng.uniform(0.5, 2, M) + 1j * rng.normal(size=M), n)}
    terms = {k: rng.normal(size=(M, D, n)) + 1j * rng.normal(size=(M, D, n)) for k in rates}
    return Profile(rates, terms)


def test_dz_product_rule():
    p = Profile.from_terms([(2.0, [0.0, 1.0])])       # z e^{-2z}
    d = p.dz()
    z = np.linspace(0, 3, 7)
    assert np.allclose(d(z)[0], (1 - 2 * z) * np.exp(-2 * z))


def test_dz_matches_finite_difference(rng):
    p = random_profile(rng)
    z = np.linspace(0.1, 2.0, 9)
    h = 1e-5
    fd = (p(z + h) - p(z - h)) / (2 * h)
    assert np.allclose(p.dz()(z), fd, rtol=1e-6, atol=1e-6)


def test_d1_on_exponential():
    mu, xx = 1.3 + 0.4j, 0.7
    modes = ModeSet.single(xx, 0.5)
    ops = Operators(modes, SC)
    p = Profile.from_terms([(mu, [1.0])])
    got = ops.d1(p).trace()[0, 0]
    assert np.isclose(got, SC.c * 1j * xx + SC.s * mu)
    lap = ops.lap(p).trace()[0, 0]
    assert np.isclose(lap, mu ** 2 - (xx ** 2 + 0.25))


def test_local_global_consistency(rng):
    modes = ModeSet(rng.normal(size=4), rng.normal(size=4), np.arange(4))
    ops = Operators(modes, SC)
    p = random_profile(rng)
    s, c = SC.s, SC.c
    a = ops.d1(p).scale(c) + ops.d3(p).scale(s) - ops.dx(p)
    b = ops.d1(p).scale(-s) + ops.d3(p).scale(c) - p.dz()
    assert a.max_coef().max() < 1e-12 * ops.dx(p).max_coef().max()
    assert b.max_coef().max() < 1e-12 * p.dz().max_coef().max()


def test_linearity_of_apply_diff(rng):
    modes = ModeSet(rng.normal(size=4), rng.normal(size=4), np.arange(4))
    p, q = random_profile(rng), random_profile(rng)
    q = Profile(p.rates, q.terms)
    for sym in ("∂₁", "Δ_ν", "L̃²", "L²"):
        lhs = apply_diff(SpectralField(modes, SC.omega, [p.scale(2.0) + q]), sym, SC)[0]
        rhs = apply_diff(SpectralField(modes, SC.omega, [p]), sym, SC)[0].scale(2.0) + \
            apply_diff(SpectralField(modes, SC.omega, [q]), sym, SC)[0]
        assert (lhs - rhs).max_coef().max() < 1e-10 * lhs.max_coef().max()


def test_weighted_l2_against_quadrature(rng):
    p = random_profile(rng, M=2)
    got = weighted_l2([p], (1.0, 0.0, 1.0))
    for m in range(2):
        f = lambda z: (1 + z * z) * abs(p(np.array([z]))[m, 0]) ** 2
        want = integrate.quad(f, 0, np.inf, limit=200)[0]
        assert got[m] == pytest.approx(want, rel=1e-8)


def test_times_exp_closure(rng):
    p = random_profile(rng, M=1)
    q = p.times_exp(0.5 + 0.2j)
    z = np.linspace(0, 2, 5)
    assert np.allclose(q(z), p(z) * np.exp(-(0.5 + 0.2j) * z))


def test_mul_y_against_box_product():
    """Exact y-multiplication (derivative in xi_y) vs the pseudo-spectral box product."""
    g = ModeGrid(8.0, 24.0, 16, 128)
    n = 3
    XX, YY = g.mesh()
    eta = YY.ravel()
    spec0 = np.exp(-XX.ravel() ** 2) * np.exp(-eta ** 2)          # Gaussian in y of width ~2
    modes = ModeSet(XX.ravel(), eta, np.arange(eta.size))
    rates = {"g": J.const(np.full(eta.size, 1.0 + 0j), n)}
    coef = J.mul(J.const(np.exp(-XX.ravel() ** 2) + 0j, n), J.exp(-J.mul(J.var(eta, n), J.var(eta, n))))
    p = Profile.exp(rates, "g", coef)
    exact = p.mul_y().trace()[:, 0].reshape(g.Nx, g.Ny)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AliasWarning)
        box = box_multiply_by_y(g, spec0.reshape(g.Nx, g.Ny))
    assert np.abs(exact - box).max() < 1e-6 * np.abs(exact).max()


def test_y_twice_vs_y_squared():
    g = ModeGrid(8.0, 24.0, 8, 128)
    XX, YY = g.mesh()
    spec = np.exp(-XX ** 2 - YY ** 2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AliasWarning)
        twice = box_multiply_by_y(g, box_multiply_by_y(g, spec))
        y2 = g.to_spectral(g.to_physical(spec) * g.y[None, :] ** 2)
    assert np.abs(twice - y2).max() < 1e-9 * np.abs(y2).max()


def test_alias_warning_on_outer_third():
    g = ModeGrid(4.0, 4.0, 8, 12)
    spec = np.zeros((8, 12), complex)
    spec[0, 5] = 1.0
    with pytest.warns(AliasWarning):
        box_multiply_by_y(g, spec)


def test_roundtrip_transform(rng):
    g = ModeGrid(3.0, 5.0, 16, 24)
    f = rng.normal(size=(16, 24))
    assert np.allclose(g.to_physical(g.to_spectral(f)).real, f, atol=1e-12)


def test_forcing_reality_and_tail():
    rec = ForcingRecipe(x_kind="gaussian", y_kind="sin_exp")
    g = ModeGrid(16.0, 16.0, 64, 64)
    fo = ingest_forcing(rec, g, SC, n=1, check_tail=False)
    assert fo.reality_defect < 1e-12 or fo.report["retained"] < g.Nx * g.Ny


def test_zero_recipe():
    g = ModeGrid(8.0, 8.0, 16, 16)
    fo = ingest_forcing(ForcingRecipe(amplitude=0.0), g, SC)
    assert fo.tail_norm == 0 and not np.any(fo.f1)


def test_high_frequency_recipe_tail_too_large():
    rec = ForcingRecipe(y_kind="sin_gauss", k0=12.0, wy=2.0)
    g = ModeGrid(16.0, 16.0, 64, 256)
    with pytest.raises(TailTooLarge):
        ingest_forcing(rec, g, SC)


def test_forcing_transform_matches_fft():
    rec = ForcingRecipe(x_kind="gaussian", wx=1.5, y_kind="cos_gauss", wy=2.0)
    g = ModeGrid(12.0, 12.0, 64, 64)
    x, y = np.meshgrid(g.x, g.y, indexing="ij")
    fft = g.to_spectral(rec.physical(x, y)).ravel()
    fo = ingest_forcing(rec, g, SC, n=1, check_tail=False, kappa=2.0)
    assert np.abs(fo.f1[:, 0] - fft).max() < 1e-9 * np.abs(fft).max()


def test_export_profile(tmp_path, rng):
    p = random_profile(rng, M=2, n=1)
    modes = ModeSet(np.array([0.1, 0.2]), np.array([0.3, 0.4]), np.arange(2))
    path = tmp_path / "prof.txt"
    export_profile(str(path), modes, p, header="test")
    rows = np.loadtxt(path, comments="#")
    assert rows.shape[0] == 4
