"""Order-0 geostrophic solution (interior + Munk layer) and the order-1 corrector."""
import math
from dataclasses import dataclass, field

import numpy as np

from . import jets as J
from .green_kernel import build_kernel, convolve, exp_decay_bound, GammaTooLarge
from .munk_roots import quartic_roots
from .spectral_field import Operators, Profile


class SingularTraceSystem(ValueError):
    pass


class VerticalTraceNonzero(AssertionError):
    pass


class HypothesisViolated(ValueError):
    pass


class SolveContext:
    """Per-batch data shared by the builders: operators, roots, kernel, forcing."""

    def __init__(self, modes, scales, forcing=None, n=3, f_profiles=None, sep_threshold=1e-3):
        self.modes, self.sc, self.n = modes, scales, n
        self.ops = Operators(modes, scales)
        self.roots = quartic_roots(modes, scales.omega, scales, n=n, refs=False)
        self.kernel = build_kernel(self.roots, scales)
        self.rates = {"mu1": self.roots.mu_plus[:, 0], "mu2": self.roots.mu_plus[:, 1]}
        if f_profiles is not None:
            f1, f2 = f_profiles
            self.rates.update(f1.rates)
            f1 = Profile(self.rates, f1.terms, f1.M, f1.n)
            f2 = Profile(self.rates, f2.terms, f2.M, f2.n)
        elif forcing is not None:
            self.rates["gamma"] = J.const(np.full(modes.M, forcing.gamma), n)
            f1 = Profile.exp(self.rates, "gamma", forcing.f1[modes.index, :n])
            f2 = Profile.zeros(self.rates, modes.M, n)
        else:
            f1 = f2 = Profile.zeros(self.rates, modes.M, n)
        self.f = [f1, f2]
        self.gamma = forcing.gamma if forcing is not None else None
        self.gamma_ok = True
        if self.gamma is not None:
            try:
                exp_decay_bound(self.kernel, self.gamma)
            except GammaTooLarge:
                self.gamma_ok = False

    def zero(self, n=None):
        return Profile.zeros(self.rates, self.modes.M, self.n if n is None else n)

    def G(self, src):
        return convolve(self.kernel, src)

    def munk_layer(self, c):
        """p = sum_j c_j exp(-mu_j^+ z) from coefficient jets (M, 2, n)."""
        return (Profile.exp(self.rates, "mu1", c[:, 0]) + Profile.exp(self.rates, "mu2", c[:, 1]))

    def munk_matrix(self):
        """Trace of grad_perp exp(-mu_j z): columns (-i xi_y, c i xi_x + s mu_j)."""
        n, sc = self.n, self.sc
        iyy, ixx = self.modes.yy(n), self.modes.xx(n)
        mu = self.roots.mu_plus
        A = np.empty((self.modes.M, 2, 2, n), dtype=complex)
        A[:, 0, 0] = -iyy
        A[:, 0, 1] = -iyy
        A[:, 1, 0] = sc.c * ixx + sc.s * mu[:, 0]
        A[:, 1, 1] = sc.c * ixx + sc.s * mu[:, 1]
        return A

    def solve_munk(self, T_h, tol=1e-12):
        """Coefficients c with sum_j c_j (-i xi_y, c i xi_x + s mu_j) = -T_h (jets)."""
        A = self.munk_matrix()
        A0 = A[..., 0]
        det = A0[:, 0, 0] * A0[:, 1, 1] - A0[:, 0, 1] * A0[:, 1, 0]
        rn = np.linalg.norm(A0[:, 0], axis=1) * np.linalg.norm(A0[:, 1], axis=1)
        if np.any(np.abs(det) < tol * rn):
            raise SingularTraceSystem(f"{np.sum(np.abs(det) < tol * rn)} singular Munk trace systems")
        n = min(T_h[0].shape[-1], T_h[1].shape[-1])
        rhs = -np.stack([T_h[0][:, :n], T_h[1][:, :n]], axis=1)
        return J.solve(A[..., :n], rhs)


@dataclass
class Part:
    """Velocity, pressure and density of one origin at one order."""
    u: list
    p: Profile
    rho: Profile
    w: list = None

    def trace(self):
        return [c.trace() for c in self.u]

    def __add__(self, other):
        return Part([a + b for a, b in zip(self.u, other.u)], self.p + other.p, self.rho + other.rho)

    def scale(self, a):
        return Part([c.scale(a) for c in self.u], self.p.scale(a), self.rho.scale(a))

    def truncate(self, n):
        return Part([c.truncate(n) for c in self.u], self.p.truncate(n), self.rho.truncate(n))

    @property
    def n(self):
        return min([c.n for c in self.u] + [self.p.n, self.rho.n])


def zero_part(ctx, n=None):
    z = ctx.zero(n)
    return Part([z, z, z], z, z, [z, z])


@dataclass
class ExpansionTerm:
    k: int
    interior: Part
    munk: Part
    ekman: Part = None
    coeffs: dict = field(default_factory=dict)

    def parts(self):
        return {k: v for k, v in (("interior", self.interior), ("munk", self.munk), ("ekman", self.ekman))
                if v is not None}

    def total(self):
        out = None
        for p in self.parts().values():
            out = p if out is None else out + p
        return out


def build_order0(ctx):
    ops, sc = ctx.ops, ctx.sc
    S = ops.curl_h(ctx.f).scale(sc.beta)
    psi = ctx.G(S)
    uh = ops.grad_perp(psi)
    zero = ctx.zero()
    interior = Part([uh[0], uh[1], zero], psi, -ops.d3(psi))
    c = ctx.solve_munk([uh[0].trace(), uh[1].trace()])
    pm = ctx.munk_layer(c)
    um = ops.grad_perp(pm)
    munk = Part([um[0], um[1], zero], pm, -ops.d3(pm))
    return ExpansionTerm(0, interior, munk, None, dict(c=c))


def corrector_rhs(p0, f, ctx, commutator_factor=2.0):
    """Explicit right side of the order-1 pressure equation.

    beta L div f - beta^2 y curl f + beta^2 f1 + 2 beta y L2t p0
    + 2 beta L d2 p0 - 2 nu_h beta d2 lap_h p0, with L = d_t - Delta_nu.
    The last coefficient comes from [Delta_h, y] = 2 d2 (see the ledger).
    """
    ops, sc = ctx.ops, ctx.sc
    b = sc.beta
    divf = ops.d1(f[0]) + ops.d2(f[1])
    curlf = ops.curl_h(f)
    out = ops.L(divf).scale(b)
    out = out - ops.y(curlf).scale(b * b)
    out = out + f[0].scale(b * b)
    out = out + ops.y(ops.L2t(p0)).scale(2 * b)
    out = out + ops.L(ops.d2(p0)).scale(2 * b)
    out = out - ops.d2(ops.lap_h(p0)).scale(commutator_factor * sc.nu_h * b)
    return out


def corrector_rhs_direct(p0, f, ctx):
    """grad_perp . L1(beta f^perp + L1 grad p0) by operator composition."""
    ops, sc = ctx.ops, ctx.sc
    inner = ops.L1(ops.grad_h(p0))
    fp = ops.perp(f)
    v = [fp[0].scale(sc.beta) + inner[0], fp[1].scale(sc.beta) + inner[1]]
    return ops.curl_h(ops.L1(v))


def _profile_scale(p):
    return max(float(p.max_coef().max()), 1e-300)


def munk_inverse_explicit(ctx, T_h):
    """Coefficients from the explicit inverse of the 2x2 Munk trace matrix (jet order kept)."""
    sc, n = ctx.sc, min(T_h[0].shape[-1], T_h[1].shape[-1])
    s, c = sc.s, sc.c
    mu1, mu2 = ctx.roots.mu_plus[:, 0, :n], ctx.roots.mu_plus[:, 1, :n]
    iyy = ctx.modes.yy(n)
    ixx = ctx.modes.xx(n)
    inv_iy = J.inv(iyy)
    inv_d = J.inv(mu2 - mu1)
    cx = J.mul(c * ixx / s, inv_iy)     # c xi_x / (s xi_y)
    a11 = -J.mul(mu2, inv_iy) - cx
    a21 = J.mul(mu1, inv_iy) + cx
    r0, r1 = -T_h[0][:, :n], -T_h[1][:, :n]
    c1 = J.mul(inv_d, J.mul(a11, r0) - r1 / s)
    c2 = J.mul(inv_d, J.mul(a21, r0) + r1 / s)
    return np.stack([c1, c2], axis=1)


def build_order1(order0, ctx, trace_tol=1e-8):
    ops, sc = ctx.ops, ctx.sc
    p0 = order0.total().p
    rhs = corrector_rhs(p0, ctx.f, ctx)
    pbar = ctx.G(rhs)
    L1g = ops.L1(ops.grad_h(p0))
    fp = ops.perp(ctx.f)
    gp = ops.grad_perp(pbar)
    uh = [gp[i] - fp[i].scale(sc.beta) - L1g[i] for i in range(2)]
    u3 = -ops.d3(p0).scale(1j * sc.omega)
    tr3 = u3.trace()
    ref = max(_profile_scale(u3), 1e-300)
    if np.abs(tr3[:, 0]).max() > trace_tol * ref:
        raise VerticalTraceNonzero(f"|u3^1(0)| = {np.abs(tr3[:, 0]).max():.3e}")
    bar = Part([uh[0], uh[1], u3], pbar, -ops.d3(pbar))
    c = munk_inverse_explicit(ctx, [uh[0].trace(), uh[1].trace()])
    pm = ctx.munk_layer(c)
    um = ops.grad_perp(pm)
    munk = Part([um[0], um[1], ctx.zero(pm.n)], pm, -ops.d3(pm))
    return ExpansionTerm(1, bar, munk, None, dict(c=c, vertical_trace=np.abs(tr3[:, 0])))


def effective_traces_p1(order0, order1, ctx, ratio_max=0.5):
    """Both sides of the boundary estimates for d1 p^1 and d2 p^1 at z = 0, per mode."""
    sc, ops = ctx.sc, ctx.ops
    hyp = sc.nu_3 / (sc.nu_h ** (4 / 3) * sc.beta ** (-1 / 3))
    if hyp > ratio_max:
        raise HypothesisViolated(f"nu_3 / (nu_h^(4/3) beta^(-1/3)) = {hyp:.3g} > {ratio_max}")
    p1 = order1.total().p
    pi0 = order0.interior.p
    f1, f2 = ctx.f
    norm = sc.low_threshold
    lhs1 = ops.d1(p1).trace()[:, 0]
    rhs1 = sc.beta * f1.trace()[:, 0]
    lhs2 = ops.d2(p1).trace()[:, 0]
    mu = ctx.roots.mu_plus[..., 0]
    S0 = ops.curl_h(ctx.f).scale(sc.beta).trace()[:, 0]
    G2 = ctx.kernel.evaluate([0.0], 2)[:, 0]
    rhs2 = (sc.beta * f2.trace()[:, 0] - sc.beta * pi0.trace()[:, 0]
            + (1j * sc.omega / sc.s) * pi0.dz().trace()[:, 0]
            + 3 * sc.s ** 2 * sc.c * sc.nu_h * mu[:, 0] * mu[:, 1] * ops.dx(pi0).trace()[:, 0]
            + sc.s ** 2 * sc.nu_h * G2 * S0)
    return dict(d1_lhs=lhs1, d1_rhs=rhs1, d1_gap=np.abs(lhs1 - rhs1) / norm,
                d2_lhs=lhs2, d2_rhs=rhs2, d2_gap=np.abs(lhs2 - rhs2) / norm, hypothesis_ratio=hyp)
