import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from slopegyre.munk_roots import (PureImaginaryRoot, RegimeError, RootSet, SignSplitViolation, all_roots_unclassified,
                                  check_separation, cubic_residual, large_decaying_count, match_references,
                                  midfreq_asymptotics, munk_cubic, quartic_poly, quartic_roots, separation_ratio)
from slopegyre.regime import DerivedScales, FrequencyRegime, preset, validate
from slopegyre.spectral_field import ModeSet

Q = -math.pi / 4


def closed_form_scales():
    return DerivedScales.from_raw(1.0, 0.0, 0.0, 1.0, 1.0, Q)


def test_closed_form_roots():
    sc = closed_form_scales()
    rs = quartic_roots((0.0, 1.0), 0.0, sc, refs=False)
    assert np.allclose(np.sort(rs.mu_plus[0, :, 0].real), [1, math.sqrt(2)], atol=1e-12)
    assert np.allclose(np.sort(rs.mu_minus[0, :, 0].real), [-math.sqrt(2), -1], atol=1e-12)


def test_poly_matches_direct_formula(rng):
    sc = validate(preset("reference"))
    xx, yy = 0.7, -0.4
    P = quartic_poly(ModeSet.single(xx, yy), sc.omega, sc)[0, :, 0]
    s, c = sc.s, sc.c
    for mu in rng.normal(size=4) + 1j * rng.normal(size=4):
        a = c * 1j * xx + s * mu
        direct = (1j * sc.omega * (mu ** 2 - xx ** 2 - yy ** 2) + sc.beta * a
                  - (sc.nu_h * (a ** 2 - yy ** 2) + sc.nu_3 * (1j * s * xx - c * mu) ** 2) * (a ** 2 - yy ** 2))
        assert np.isclose(np.polyval(P[::-1], mu), direct)


@given(st.floats(-3, 3), st.floats(0.05, 3), st.floats(-2, 2))
def test_conjugation_symmetry(xx, yy, w):
    sc = validate(preset("reference"))
    a = np.sort_complex(all_roots_unclassified((xx, yy), w, sc)[0])
    b = np.sort_complex(np.conj(all_roots_unclassified((-xx, -yy), -w, sc)[0]))
    assert np.allclose(a, b, atol=1e-8 * np.abs(a).max())


@given(st.floats(-5, 5), st.floats(0.05, 5).map(float), st.sampled_from([1e-2, 1e-3]),
       st.floats(0.0, 1.0))
def test_sign_split_and_residual(xx, yy, eps, wfrac):
    sc = validate(preset("reference", eps))
    w = wfrac * sc.low_threshold
    rs = quartic_roots((xx, yy), w, sc, refs=False)
    assert np.all(rs.mu_plus[..., 0].real > 0)
    assert np.all(rs.mu_minus[..., 0].real < 0)
    assert rs.residual.max() < 1e-9


def test_lowfreq_references_within_15_percent():
    sc = validate(preset("reference", 1e-3)).replace(omega=0.0)
    rs = quartic_roots((1.0, 1.0), 0.0, sc)
    gaps = match_references(rs, rs.asymptotic_refs)
    assert gaps.max() < 0.15


def test_cubic_examples():
    sc = DerivedScales.from_raw(1e-2, 10.0, 0.0, 1e-2, 1e-4, -math.pi / 2 + 1e-9)
    m1, m2, neg = munk_cubic(0.0, sc)
    assert np.isclose(neg, -1, atol=1e-6)
    assert np.allclose(sorted([m1, m2], key=lambda z: z.imag), [np.exp(-1j * math.pi / 3), np.exp(1j * math.pi / 3)],
                       atol=1e-6)
    sc2 = DerivedScales.from_raw(1e-2, 10.0, 0.0, 1e-2, 1e-4, -math.pi / 6)
    roots = munk_cubic(0.0, sc2)
    assert np.allclose(np.abs(roots), 2 ** (1 / 3))
    sc3 = DerivedScales.from_raw(1e-2, 10.0, 0.0, 1e-2, 1e-4, Q)
    w = 0.5 * sc3.low_threshold
    for r in munk_cubic(w, sc3):
        assert cubic_residual(r, w, sc3) < 1e-12


def test_cubic_rejects_midfreq():
    sc = validate(preset("midfreq"))
    with pytest.raises(RegimeError):
        munk_cubic(sc.omega, sc)


def test_midfreq_sign_flip_and_quartic_fit():
    sc = validate(preset("midfreq"))
    xi = (0.05, 0.05)
    a = midfreq_asymptotics(xi, sc.omega, sc)
    b = midfreq_asymptotics(xi, -sc.omega, sc)
    assert np.allclose(a["mu_plus"], np.conj(b["mu_plus"]))
    rs = quartic_roots(xi, sc.omega, sc, refs=False)
    # leading-order asymptotics; the corrections are O(eps^(1/6)) at eps = 1e-2
    assert match_references(rs, a).max() < 0.25


def test_midfreq_xi_bound():
    sc = validate(preset("midfreq"))
    with pytest.raises(RegimeError):
        midfreq_asymptotics((100.0, 100.0), sc.omega, sc)


def test_small_root_vanishes_at_zero_xi_x():
    sc = validate(preset("midfreq"))
    rs = quartic_roots((0.0, 0.05), sc.omega, sc, refs=False)
    small = abs(rs.mu_minus[0, 0, 0])
    others = np.abs(np.r_[rs.mu_plus[0, :, 0], rs.mu_minus[0, 1, 0]]).min()
    assert small <= 0.1 * others


def test_separation_ratio_examples():
    mp = np.array([[[1.0], [2.0]]], dtype=complex)
    mm = np.array([[[-1.0], [-2.0]]], dtype=complex)
    rs = RootSet(mp, mm, FrequencyRegime.LowFreq, np.zeros((1, 4)))
    assert separation_ratio(rs)[0] == pytest.approx(0.5)
    collided = RootSet(np.array([[[1.0], [1.0 + 1e-6]]], complex), mm, FrequencyRegime.LowFreq, np.zeros((1, 4)))
    ratio, flag = check_separation(collided)
    assert flag[0]


def test_lowfreq_separation_bounded_below():
    sc = validate(preset("lowfreq")).replace(omega=0.0)
    rs = quartic_roots((1.0, 1.0), 0.0, sc, refs=False)
    ratio, flag = check_separation(rs)
    assert not flag[0]
    assert ratio[0] > 0.3


def test_east_west_count():
    sc = validate(preset("lowfreq"))
    east = sc.replace(alpha=-sc.alpha)
    xi = (0.8, 0.6)
    assert large_decaying_count(xi, sc.omega, sc)[0] == 2
    assert large_decaying_count(xi, sc.omega, east)[0] == 1


def test_western_guard():
    sc = validate(preset("lowfreq"))
    with pytest.raises(ValueError):
        quartic_roots((1.0, 1.0), sc.omega, sc.replace(alpha=-sc.alpha))
    with pytest.raises(ValueError):
        quartic_roots((1.0, 0.0), 0.0, sc)
