"""Per-mode Green function of the quartic z-operator and closed-form convolutions.

G(z) = sum_j C_j^+ exp(-mu_j^+ z) for z > 0 and sum_j C_j^- exp(-mu_j^- z) for
z < 0.  Convolution with an exponential-polynomial source stays in the class:
the upstream part keeps the source rate, the downstream part produces the
source rate plus the kernel rates (slots "mu1", "mu2").
"""
import math
from dataclasses import dataclass

import numpy as np

from . import jets as J
from .munk_roots import RootSet
from .regime import FrequencyRegime
from .spectral_field import Profile


class IllConditioned(ValueError):
    pass


class GammaTooLarge(ValueError):
    pass


class ConfluenceError(ValueError):
    pass


SLOTS = ("mu1", "mu2")


def lagrange_coefficients(mu_plus, mu_minus, nu_s2):
    """C^+ and C^- from products of inverse root gaps (jets, shape (M, 2, n))."""
    allr = np.concatenate([mu_plus, mu_minus], axis=1)
    C = np.empty_like(allr)
    for i in range(4):
        prod = None
        for j in range(4):
            if j == i:
                continue
            d = allr[:, i] - allr[:, j]
            prod = d if prod is None else J.mul(prod, d)
        C[:, i] = J.inv(prod) / nu_s2
    return C[:, :2], -C[:, 2:]


def jump_system(mu_plus, mu_minus, nu_s2):
    """Dense 4x4 system for the coefficients (scalars), rows = derivative orders."""
    M = mu_plus.shape[0]
    A = np.empty((M, 4, 4), dtype=complex)
    for k in range(4):
        A[:, k, 0:2] = mu_plus ** k
        A[:, k, 2:4] = -mu_minus ** k
    rhs = np.zeros((M, 4), dtype=complex)
    rhs[:, 3] = 1.0 / nu_s2
    return A, rhs


@dataclass
class GreenKernel:
    roots: RootSet
    C_plus: np.ndarray
    C_minus: np.ndarray
    nu_eff_s2: float
    solve_residual: np.ndarray = None
    lagrange_gap: np.ndarray = None

    @property
    def M(self):
        return self.C_plus.shape[0]

    @property
    def n(self):
        return self.C_plus.shape[-1]

    @classmethod
    def from_roots(cls, mu_plus, mu_minus, nu_eff_s2=1.0, n=1):
        """Kernel for given scalar roots (single mode), e.g. synthetic checks."""
        mp = J.const(np.atleast_2d(np.asarray(mu_plus, complex)), n)
        mm = J.const(np.atleast_2d(np.asarray(mu_minus, complex)), n)
        rs = RootSet(mp, mm, FrequencyRegime.LowFreq, np.zeros((mp.shape[0], 4)))
        return build_kernel(rs, None, nu_eff_s2=nu_eff_s2)

    def subset(self, sel):
        return GreenKernel(self.roots.subset(sel), self.C_plus[sel], self.C_minus[sel], self.nu_eff_s2,
                           None if self.solve_residual is None else self.solve_residual[sel],
                           None if self.lagrange_gap is None else self.lagrange_gap[sel])

    def rates(self):
        return {SLOTS[0]: self.roots.mu_plus[:, 0], SLOTS[1]: self.roots.mu_plus[:, 1]}

    def profile(self, rates=None):
        """G on z > 0 as a Profile in the kernel slots."""
        rates = rates if rates is not None else self.rates()
        return Profile(rates, {SLOTS[j]: self.C_plus[:, j][:, None, :] for j in range(2)})

    def evaluate(self, z, k=0):
        """d^k G / dz^k (jet order 0) at real z (either sign): (M, len(z))."""
        z = np.atleast_1d(np.asarray(z, float))
        mp, mm = self.roots.mu_plus[..., 0], self.roots.mu_minus[..., 0]
        cp, cm = self.C_plus[..., 0], self.C_minus[..., 0]
        out = np.zeros((self.M, len(z)), dtype=complex)
        pos = z >= 0
        for j in range(2):
            out[:, pos] += cp[:, j:j + 1] * (-mp[:, j:j + 1]) ** k * np.exp(-np.outer(mp[:, j], z[pos]))
            out[:, ~pos] += cm[:, j:j + 1] * (-mm[:, j:j + 1]) ** k * np.exp(-np.outer(mm[:, j], z[~pos]))
        return out

    def jumps(self):
        """[d^k G](0) = G^(k)(0+) - G^(k)(0-) for k = 0..3, shape (M, 4)."""
        return np.stack([self.evaluate([0.0], k)[:, 0] - self.evaluate([-0.0 - 1e-300], k)[:, 0]
                         for k in range(4)], axis=1)


def build_kernel(roots, scales, nu_eff_s2=None, tol=1e-8):
    if nu_eff_s2 is None:
        nu_eff_s2 = scales.nu_eff * scales.s ** 2
    Cp, Cm = lagrange_coefficients(roots.mu_plus, roots.mu_minus, nu_eff_s2)
    A, rhs = jump_system(roots.mu_plus[..., 0], roots.mu_minus[..., 0], nu_eff_s2)
    x = np.linalg.solve(A, rhs[..., None])[..., 0]
    res = np.linalg.norm(np.einsum("mij,mj->mi", A, x) - rhs, axis=1)
    res = res / (np.linalg.norm(A, axis=(1, 2)) * np.linalg.norm(x, axis=1))
    if np.any(res > tol):
        raise IllConditioned(f"jump system residual {res.max():.2e}")
    lag = np.concatenate([Cp[..., 0], Cm[..., 0]], axis=1)
    gap = np.abs(lag - x).max(axis=1) / np.abs(x).max(axis=1)
    return GreenKernel(roots, Cp, Cm, nu_eff_s2, res, gap)


def _inv_powers(a, K):
    ainv = J.inv(a)
    pw = [None, ainv]
    for _ in range(K - 1):
        pw.append(J.mul(pw[-1], ainv))
    return pw


def _falling(m, k):
    """(m + k)! / m! for an array m."""
    out = np.ones_like(m, dtype=float)
    for i in range(1, k + 1):
        out = out * (m + i)
    return out


def convolve(kernel, source, conf_tol=1e-8):
    """Closed-form int_0^inf G(z - z') S(z') dz' for an exponential-polynomial source."""
    if all(sl in source.rates for sl in SLOTS):
        rates = source.rates
    else:
        rates = dict(source.rates)
        krates = kernel.rates()
        for sl in SLOTS:
            rates.setdefault(sl, krates[sl])
    n = min(source.n, kernel.n)
    out = {}

    def add(slot, coef):
        if slot in out:
            a = out[slot]
            d = max(a.shape[1], coef.shape[1])
            t = np.zeros((a.shape[0], d, n), dtype=complex)
            t[:, :a.shape[1]] += a
            t[:, :coef.shape[1]] += coef
            out[slot] = t
        else:
            out[slot] = coef

    for slot, P in source.terms.items():
        P = P[..., :n]
        M, D = P.shape[0], P.shape[1]
        gam = rates[slot][:, :n]
        m_idx = np.arange(D)
        for j in range(2):
            # upstream part, z' > z
            cm = kernel.C_minus[:, j, :n]
            pw = _inv_powers(gam - kernel.roots.mu_minus[:, j, :n], D)
            acc = np.zeros((M, D, n), dtype=complex)
            for k in range(D):
                w = _falling(m_idx[:D - k], k)[None, :, None]
                acc[:, :D - k] += w * J.mul(P[:, k:], pw[k + 1][:, None, :])
            add(slot, J.mul(cm[:, None, :], acc))
            # downstream part, z' < z
            cp = kernel.C_plus[:, j, :n]
            sj = SLOTS[j]
            if slot == sj:
                t = np.zeros((M, D + 1, n), dtype=complex)
                t[:, 1:] = P / np.arange(1, D + 1)[None, :, None]
                add(sj, J.mul(cp[:, None, :], t))
                continue
            b = kernel.roots.mu_plus[:, j, :n] - gam
            scale = np.maximum(np.abs(kernel.roots.mu_plus[:, j, 0]), np.abs(gam[:, 0]))
            if np.any(np.abs(b[:, 0]) < conf_tol * scale):
                raise ConfluenceError(f"source slot {slot} nearly confluent with kernel root {sj}")
            pw = _inv_powers(b, D + 1)
            acc = np.zeros((M, D, n), dtype=complex)
            for k in range(D):
                w = ((-1) ** k * _falling(m_idx[:D - k], k))[None, :, None]
                acc[:, :D - k] += w * J.mul(P[:, k:], pw[k + 1][:, None, :])
            add(slot, J.mul(cp[:, None, :], acc))
            c0 = np.zeros((M, n), dtype=complex)
            for p in range(D):
                c0 -= (-1) ** p * math.factorial(p) * J.mul(P[:, p], pw[p + 1])
            add(sj, J.mul(cp, c0)[:, None, :])
    res = Profile(rates, out, source.M, n)
    return res


def boundary_derivative(kernel, source, k):
    """d_z^{k+1}(G*S) = G*d_z^{k+1}S + sum_m d_z^{k-m}G(z) d_z^m S(0)."""
    out = convolve(kernel, source.dzn(k + 1))
    G = kernel.profile(out.rates)
    for m in range(k + 1):
        tr = source.dzn(m).trace()
        out = out + G.dzn(k - m).scale(tr)
    return out


def exp_decay_bound(kernel, gamma):
    """Constant C with |G*exp(-gamma z)| <= C exp(-Re(gamma) z) for all z >= 0."""
    g = complex(gamma)
    lim = kernel.roots.mu_plus[..., 0].real.min(axis=1) / 2
    if np.any(g.real > lim):
        raise GammaTooLarge(f"Re(gamma)={g.real:.4g} exceeds min Re(mu+)/2={lim.min():.4g}")
    cmax = np.maximum(np.abs(kernel.C_plus[..., 0]).max(axis=1), np.abs(kernel.C_minus[..., 0]).max(axis=1))
    return cmax * 4 / g.real


def apply_char_poly(coeffs, prof):
    """sum_k a_k (-d_z)^k applied to a profile; coeffs jets (M, deg+1, n)."""
    out = None
    cur = prof
    for k in range(coeffs.shape[1]):
        term = cur.scale(coeffs[:, k])
        out = term if out is None else out + term
        cur = -cur.dz()
    return out
