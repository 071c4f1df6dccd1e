"""Characteristic roots of the per-mode quasi-geostrophic operator (Munk quartic)."""
import math
from dataclasses import dataclass, field

import numpy as np

from . import jets as J
from .regime import FrequencyRegime, classify_frequency
from .spectral_field import ModeSet


class PureImaginaryRoot(ValueError):
    pass


class SignSplitViolation(ValueError):
    pass


class RegimeError(ValueError):
    pass


def poly_roots_batch(coeffs):
    """Roots of polynomials given by ascending coefficients, shape (M, d+1)."""
    coeffs = np.asarray(coeffs, dtype=complex)
    M, d1 = coeffs.shape
    d = d1 - 1
    C = np.zeros((M, d, d), dtype=complex)
    C[:, 1:, :-1] = np.eye(d - 1)
    C[:, :, -1] = -coeffs[:, :d] / coeffs[:, d:d + 1]
    return np.linalg.eigvals(C)


def _modes(xi):
    if isinstance(xi, ModeSet):
        return xi
    xi = np.asarray(xi, float)
    return ModeSet.single(xi[0], xi[1])


def quartic_poly(modes, omega, scales, n=1):
    """Coefficients (ascending in mu) of the quartic, jets in h: shape (M, 5, n)."""
    s, c = scales.s, scales.c
    one = J.const(np.ones(modes.M), n)
    ixx = modes.xx(n)
    iyy = modes.yy(n)
    a = J.poly_from(c * ixx, s * one)
    b = J.poly_from(s * ixx, -c * one)
    yy2 = J.mul(iyy, iyy)
    A2 = J.poly_add(J.poly_mul(a, a), yy2[:, None, :])
    visc = J.poly_add(scales.nu_h * A2, scales.nu_3 * J.poly_mul(b, b))
    lap = J.poly_from(J.mul(ixx, ixx) + yy2, 0 * one, one)
    P = J.poly_add(1j * omega * lap, scales.beta * a)
    P = J.poly_add(P, -J.poly_mul(visc, A2))
    return P


def quartic_residual(P0, mu):
    """|P(mu)| / sum |monomials| for scalar coefficient arrays (M, 5) and roots (M, k)."""
    pw = mu[..., None] ** np.arange(P0.shape[-1])
    terms = P0[:, None, :] * pw
    return np.abs(terms.sum(-1)) / np.abs(terms).sum(-1)


@dataclass
class RootSet:
    mu_plus: np.ndarray          # (M, 2, n) jets, Re ascending
    mu_minus: np.ndarray         # (M, 2, n) jets, Re descending (mu_1^- the small one)
    regime: FrequencyRegime
    residual: np.ndarray         # (M, 4)
    asymptotic_refs: dict = field(default_factory=dict)
    separation: np.ndarray = None

    @property
    def M(self):
        return self.mu_plus.shape[0]

    def all_roots(self):
        return np.concatenate([self.mu_plus, self.mu_minus], axis=1)

    def values(self, m=0):
        return self.mu_plus[m, :, 0], self.mu_minus[m, :, 0]

    def subset(self, sel):
        return RootSet(self.mu_plus[sel], self.mu_minus[sel], self.regime, self.residual[sel],
                       {k: v[sel] for k, v in self.asymptotic_refs.items()},
                       None if self.separation is None else self.separation[sel])


def quartic_roots(xi, omega, scales, n=1, western=True, refs=True):
    """Exact roots by companion eigensolve, lifted to jets in h by Newton steps."""
    modes = _modes(xi)
    if np.any((modes.xi_y == 0) & (omega == 0)):
        raise ValueError("(xi_y, omega) = (0, 0) excluded")
    if western and scales.s >= 0:
        raise ValueError("western solver paths need sin(alpha) < 0")
    P = quartic_poly(modes, omega, scales, n)
    P0 = P[..., 0]
    r0 = poly_roots_batch(P0)
    # polish in scalar arithmetic first
    Pc = J.poly_from(*[P0[:, k][:, None] for k in range(5)])
    r = J.newton_refine(Pc[:, None], r0[..., None], iters=3)[..., 0]
    re = r.real
    if np.any(np.abs(re) < 1e-10 * np.abs(r)):
        raise PureImaginaryRoot("root with vanishing real part")
    npos = (re > 0).sum(axis=1)
    if np.any(npos != 2):
        raise SignSplitViolation(f"sign split failed for {(npos != 2).sum()} modes")
    order = np.argsort(re, axis=1)
    rs = np.take_along_axis(r, order, axis=1)
    mu_minus0 = rs[:, [1, 0]]
    mu_plus0 = rs[:, [2, 3]]
    res = quartic_residual(P0, np.concatenate([mu_plus0, mu_minus0], axis=1))
    mu_plus = J.newton_refine(P[:, None], J.const(mu_plus0, 1) if n == 1 else _lift(mu_plus0, n))
    mu_minus = J.newton_refine(P[:, None], J.const(mu_minus0, 1) if n == 1 else _lift(mu_minus0, n))
    rs_ = RootSet(mu_plus, mu_minus, classify_frequency(scales.replace(omega=omega)), res)
    if refs:
        rs_.asymptotic_refs = reference_roots(modes, omega, scales)
    rs_.separation = separation_ratio(rs_)
    return rs_


def _lift(r0, n):
    return J.const(r0, n)


def all_roots_unclassified(xi, omega, scales):
    """Plain roots of the quartic (no sign classification), shape (M, 4)."""
    modes = _modes(xi)
    P0 = quartic_poly(modes, omega, scales, 1)[..., 0]
    return poly_roots_batch(P0)


def munk_cubic(omega, scales, check_regime=True):
    """Roots of i w~ M + s - s^2 M^3 = 0, returned as (M1+, M2+, M2-)."""
    if check_regime and classify_frequency(scales.replace(omega=omega)) == FrequencyRegime.MidFreq:
        raise RegimeError("the rescaled cubic describes the low-frequency regime only")
    s = scales.s
    wt = omega / scales.low_threshold
    roots = np.roots([-s * s, 0, 1j * wt, s])
    roots = roots[np.argsort(roots.real)]
    if s < 0:
        neg, p1, p2 = roots[0], roots[1], roots[2]
        return p1, p2, neg
    # eastern case: one decaying root, two growing ones
    return roots[2], roots[1], roots[0]


def cubic_residual(M, omega, scales):
    s = scales.s
    wt = omega / scales.low_threshold
    terms = np.array([1j * wt * M, s, -s * s * M ** 3])
    return abs(terms.sum()) / abs(terms).sum()


def lowfreq_references(modes, omega, scales):
    m1p, m2p, m2m = munk_cubic(omega, scales, check_regime=False)
    k = scales.munk_scale
    M = modes.M
    plus = np.tile(np.array([m1p, m2p]) * k, (M, 1))
    plus = plus[:, np.argsort(plus[0].real)]
    small = -1j * scales.c * modes.xi_x / scales.s
    minus = np.stack([small, np.full(M, m2m * k)], axis=1)
    return plus, minus


def midfreq_asymptotics(xi, omega, scales, check=True):
    modes = _modes(xi)
    sc = scales.replace(omega=omega)
    if check:
        if classify_frequency(sc) != FrequencyRegime.MidFreq:
            raise RegimeError("midfreq references requested outside the mid-frequency regime")
        bound = 0.1 * scales.beta ** 3 * scales.nu_eff / abs(omega) ** 4
        if np.any(np.hypot(modes.xi_x, modes.xi_y) > bound):
            raise RegimeError(f"|xi| exceeds 0.1 beta^3 nu_eff / |omega|^4 = {bound:.3g}")
    s, c = scales.s, scales.c
    sg = np.sign(omega)
    m1 = math.sqrt(abs(omega / (scales.nu_eff * s * s))) * np.exp(1j * sg * math.pi / 4)
    m2 = -scales.beta * s / (1j * omega)
    re2 = -scales.nu_eff * s ** 5 * scales.beta ** 3 / omega ** 4
    M = modes.M
    plus = np.tile(np.array([m1, m2]), (M, 1))
    minus = np.stack([-1j * c * modes.xi_x / s, np.full(M, -m1)], axis=1)
    return dict(mu_plus=plus, mu_minus=minus, re_mu2_plus=np.full(M, re2))


def reference_roots(modes, omega, scales):
    reg = classify_frequency(scales.replace(omega=omega))
    if reg == FrequencyRegime.MidFreq:
        d = midfreq_asymptotics(modes, omega, scales, check=False)
        return dict(mu_plus=d["mu_plus"], mu_minus=d["mu_minus"], kind=np.full(modes.M, "MidFreq"))
    plus, minus = lowfreq_references(modes, omega, scales)
    return dict(mu_plus=plus, mu_minus=minus, kind=np.full(modes.M, "LowFreq"))


def match_references(roots, refs):
    """Relative gaps |mu/ref - 1| after pairing each reference with its nearest exact root."""
    out = []
    for key in ("mu_plus", "mu_minus"):
        ex = roots.mu_plus[..., 0] if key == "mu_plus" else roots.mu_minus[..., 0]
        rf = refs[key]
        gaps = np.empty(rf.shape)
        for j in range(rf.shape[1]):
            d = np.abs(ex - rf[:, j:j + 1])
            k = np.argmin(d, axis=1)
            gaps[:, j] = d[np.arange(len(k)), k] / np.maximum(np.abs(rf[:, j]), 1e-300)
        out.append(gaps)
    return np.concatenate(out, axis=1)


def separation_ratio(roots):
    r = roots.all_roots()[..., 0]
    d = np.abs(r[:, :, None] - r[:, None, :])
    d[:, np.arange(4), np.arange(4)] = np.inf
    return d.min(axis=(1, 2)) / np.abs(r).max(axis=1)


def check_separation(roots, threshold=1e-3):
    """Separation ratio per mode and the flag ratio < threshold."""
    ratio = separation_ratio(roots)
    return ratio, ratio < threshold


def large_decaying_count(xi, omega, scales, factor=0.5):
    """Number of roots with Re mu >= factor (beta/nu_eff)^(1/3), per mode."""
    r = all_roots_unclassified(xi, omega, scales)
    return (r.real >= factor * scales.munk_scale).sum(axis=1)
