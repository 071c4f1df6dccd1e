"""Tangential Fourier grid, exponential-polynomial z-profiles and operator algebra.

Every quantity is carried per tangential mode xi = (xi_x, xi_y) as a jet in an
offset h of xi_y (see ``jets``).  Multiplication by y is then i d/dh, which is
exact mode by mode.  The pseudo-spectral product on the sampled box
(``box_multiply_by_y``) is kept for sampled grid data.

A ``Profile`` stores, for a batch of M modes, a z-dependence
    sum over slots s of  P_s(z) exp(-rate_s z)
where each slot has a rate jet of shape (M, n) and polynomial coefficients of
shape (M, D, n), ascending powers of z.  Two terms in the same slot always
share the same rate, which keeps confluent Green convolutions exact.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import jets as J


class AliasWarning(UserWarning):
    pass


class H4Violation(ValueError):
    pass


class TailTooLarge(ValueError):
    pass


# ---------------------------------------------------------------- grid

@dataclass
class ModeGrid:
    """Periodic box [-Lx, Lx) x [-Ly, Ly) sampled on Nx x Ny points."""
    Lx: float
    Ly: float
    Nx: int
    Ny: int

    def __post_init__(self):
        if self.Nx % 2 or self.Ny % 2:
            raise ValueError("Nx and Ny must be even")

    @property
    def kx(self):
        return np.fft.fftfreq(self.Nx, d=1.0 / self.Nx)

    @property
    def ky(self):
        return np.fft.fftfreq(self.Ny, d=1.0 / self.Ny)

    @property
    def xi_x(self):
        return np.pi * self.kx / self.Lx

    @property
    def xi_y(self):
        return np.pi * self.ky / self.Ly

    @property
    def dxi(self):
        return (np.pi / self.Lx) * (np.pi / self.Ly)

    @property
    def parseval_weight(self):
        return self.dxi / (2 * np.pi) ** 2

    @property
    def x(self):
        return -self.Lx + 2 * self.Lx * np.arange(self.Nx) / self.Nx

    @property
    def y(self):
        return -self.Ly + 2 * self.Ly * np.arange(self.Ny) / self.Ny

    def mesh(self):
        """Wavenumber arrays of shape (Nx, Ny)."""
        return np.meshgrid(self.xi_x, self.xi_y, indexing="ij")

    # continuous-transform conventions: F(xi) ~ sum f(x_j) exp(-i xi x_j) dx dy
    def _phase(self):
        XX, YY = self.mesh()
        return np.exp(-1j * (XX * self.x[0] + YY * self.y[0]))

    def to_spectral(self, samples):
        dx, dy = 2 * self.Lx / self.Nx, 2 * self.Ly / self.Ny
        F = np.fft.fft2(samples, axes=(0, 1)) * dx * dy
        ph = self._phase()
        return F * ph.reshape(ph.shape + (1,) * (F.ndim - 2))

    def to_physical(self, spec):
        dx, dy = 2 * self.Lx / self.Nx, 2 * self.Ly / self.Ny
        ph = self._phase()
        return np.fft.ifft2(spec / ph.reshape(ph.shape + (1,) * (spec.ndim - 2)), axes=(0, 1)) / (dx * dy)

    def nyquist_mask(self):
        kx, ky = np.meshgrid(self.kx, self.ky, indexing="ij")
        return (np.abs(kx) == self.Nx // 2) | (np.abs(ky) == self.Ny // 2)

    def conj_index(self):
        """Flat indices of -xi for every grid mode."""
        ix = (-np.arange(self.Nx)) % self.Nx
        iy = (-np.arange(self.Ny)) % self.Ny
        return np.ravel_multi_index(np.meshgrid(ix, iy, indexing="ij"), (self.Nx, self.Ny)).ravel()


@dataclass
class ModeSet:
    """A batch of modes taken from a grid (flat indices) for vectorised solves."""
    xi_x: np.ndarray
    xi_y: np.ndarray
    index: np.ndarray = None

    @property
    def M(self):
        return len(self.xi_x)

    @classmethod
    def single(cls, xi_x, xi_y):
        return cls(np.atleast_1d(np.asarray(xi_x, float)), np.atleast_1d(np.asarray(xi_y, float)),
                   np.zeros(1, int))

    def subset(self, sel):
        return ModeSet(self.xi_x[sel], self.xi_y[sel], None if self.index is None else self.index[sel])

    def chunks(self, size):
        for i in range(0, self.M, size):
            yield self.subset(slice(i, i + size))

    def xx(self, n):
        return J.const(1j * self.xi_x, n)

    def yy(self, n):
        return 1j * J.var(self.xi_y, n)


# ---------------------------------------------------------------- profiles

class Profile:
    """Exponential-polynomial z-profile for a batch of modes (see module doc)."""

    def __init__(self, rates, terms, M=None, n=None):
        self.rates = rates
        self.terms = {k: np.asarray(v, dtype=complex) for k, v in terms.items()}
        if self.terms:
            v = next(iter(self.terms.values()))
            M, n = v.shape[0], v.shape[-1]
            n = min(t.shape[-1] for t in self.terms.values())
            self.terms = {k: t[..., :n] for k, t in self.terms.items()}
        self.M, self.n = M, n

    # construction
    @classmethod
    def zeros(cls, rates, M, n):
        return cls(rates, {}, M, n)

    @classmethod
    def exp(cls, rates, slot, coef):
        """coef(h) * exp(-rate_slot z); coef a jet (M, n)."""
        coef = np.asarray(coef, dtype=complex)
        return cls(rates, {slot: coef[:, None, :]})

    @classmethod
    def from_terms(cls, terms, n=1):
        """Single-mode profile from [(mu, [p0, p1, ...]), ...] with fresh slots."""
        rates, tt = {}, {}
        for i, (mu, coeffs) in enumerate(terms):
            key = f"t{i}"
            rates[key] = J.const(np.array([mu]), n)
            c = np.zeros((1, len(coeffs), n), dtype=complex)
            c[0, :, 0] = coeffs
            tt[key] = c
        return cls(rates, tt, 1, n)

    def copy(self):
        return Profile(self.rates, {k: v.copy() for k, v in self.terms.items()}, self.M, self.n)

    # algebra
    def truncate(self, n):
        return Profile(self.rates, {k: v[..., :n] for k, v in self.terms.items()}, self.M, min(n, self.n))

    def _combine(self, other, sign):
        if self.rates is not other.rates:
            for k in set(self.terms) & set(other.terms):
                a, b = J.match(self.rates[k], other.rates[k])
                if not np.allclose(a, b):
                    raise ValueError(f"slot {k} carries different rates")
        n = min(self.n, other.n)
        out = {}
        for k in set(self.terms) | set(other.terms):
            a = self.terms.get(k)
            b = other.terms.get(k)
            if a is None:
                out[k] = sign * b[..., :n]
            elif b is None:
                out[k] = a[..., :n].copy()
            else:
                d = max(a.shape[1], b.shape[1])
                t = np.zeros((self.M, d, n), dtype=complex)
                t[:, :a.shape[1]] += a[..., :n]
                t[:, :b.shape[1]] += sign * b[..., :n]
                out[k] = t
        rates = self.rates if self.rates is other.rates else {**other.rates, **self.rates}
        return Profile(rates, out, self.M, n)

    def __add__(self, other):
        if other is None or (isinstance(other, int) and other == 0):
            return self
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return self.scale(-1.0)

    def scale(self, a):
        """Multiply by a scalar or a jet of shape (M, n)."""
        if np.ndim(a) == 0:
            return Profile(self.rates, {k: a * v for k, v in self.terms.items()}, self.M, self.n)
        a = np.asarray(a, dtype=complex)
        out = {k: J.mul(a[:, None, :], v) for k, v in self.terms.items()}
        return Profile(self.rates, out, self.M, min(self.n, a.shape[-1]))

    __mul__ = scale

    def __rmul__(self, a):
        return self.scale(a)

    def dz(self):
        out = {}
        for k, P in self.terms.items():
            mu = self.rates[k][:, None, :P.shape[-1]]
            t = -J.mul(mu, P)
            if P.shape[1] > 1:
                t[:, :-1] += P[:, 1:] * np.arange(1, P.shape[1])[None, :, None]
            out[k] = t
        return Profile(self.rates, out, self.M, self.n)

    def dzn(self, k):
        p = self
        for _ in range(k):
            p = p.dz()
        return p

    def mul_y(self):
        """Multiplication by the transverse coordinate: i d/dh on the jets."""
        if self.n <= 1:
            raise ValueError("jet order exhausted by repeated multiplication by y")
        out = {}
        for k, P in self.terms.items():
            dmu = J.deriv(self.rates[k][:, :P.shape[-1]])
            t = np.zeros((self.M, P.shape[1] + 1, self.n - 1), dtype=complex)
            t[:, :-1] += J.deriv(P)
            t[:, 1:] -= J.mul(dmu[:, None, :], P[..., :-1])
            out[k] = 1j * t
        return Profile(self.rates, out, self.M, self.n - 1)

    def times_exp(self, gamma, tag="g"):
        """Multiply by exp(-gamma z); every slot moves to a new rate."""
        gamma = np.asarray(gamma, dtype=complex)
        if gamma.ndim == 0:
            gamma = J.const(np.full(self.M, gamma), self.n)
        rates, out = dict(self.rates), {}
        for k, P in self.terms.items():
            nk = f"{k}+{tag}"
            a, g = J.match(self.rates[k], gamma)
            rates[nk] = a + g
            out[nk] = P
        return Profile(rates, out, self.M, self.n)

    # inspection
    def trace(self):
        """Value at z = 0 as a jet (M, n)."""
        out = np.zeros((self.M, self.n), dtype=complex)
        for P in self.terms.values():
            out += P[:, 0, :self.n]
        return out

    def __call__(self, z):
        """Physical value (jet order 0) at depths z: array (M, len(z))."""
        z = np.atleast_1d(np.asarray(z, float))
        out = np.zeros((self.M, len(z)), dtype=complex)
        for k, P in self.terms.items():
            poly = np.zeros((self.M, len(z)), dtype=complex)
            for d in range(P.shape[1] - 1, -1, -1):
                poly = poly * z + P[:, d, 0][:, None]
            out += poly * np.exp(-np.outer(self.rates[k][:, 0], z))
        return out

    def degree(self):
        return {k: v.shape[1] - 1 for k, v in self.terms.items()}

    def max_coef(self):
        if not self.terms:
            return np.zeros(self.M)
        return np.max([np.abs(v[..., 0]).max(axis=1) for v in self.terms.values()], axis=0)

    def is_zero(self):
        return all(not np.any(v) for v in self.terms.values())

    def subset(self, sel):
        return Profile({k: v[sel] for k, v in self.rates.items()},
                       {k: v[sel] for k, v in self.terms.items()},
                       len(np.arange(self.M)[sel]), self.n)


def zeros_like(p):
    return Profile.zeros(p.rates, p.M, p.n)


def inner_moments(sigma, m):
    """Integrals int_0^inf z^j exp(-sigma z) dz for j < m, shape (..., m)."""
    j = np.arange(m)
    fact = np.array([math.factorial(int(i)) for i in j], dtype=float)
    return fact / sigma[..., None] ** (j + 1)


def weighted_l2(profiles, weight=(1.0, 0.0, 1.0)):
    """int_0^inf w(z) sum_i |p_i(z)|^2 dz per mode (jet order 0), w a polynomial."""
    out = None
    w = np.asarray(weight, dtype=float)
    for p in profiles:
        if out is None:
            out = np.zeros(p.M)
        keys = list(p.terms)
        for a in keys:
            Pa = p.terms[a][..., 0]
            ra = p.rates[a][:, 0]
            for b in keys:
                Pb = np.conj(p.terms[b][..., 0])
                rb = np.conj(p.rates[b][:, 0])
                Da, Db = Pa.shape[1], Pb.shape[1]
                mom = inner_moments(ra + rb, Da + Db + len(w) - 1)
                C = Pa[:, :, None] * Pb[:, None, :]
                acc = np.zeros(p.M, dtype=complex)
                for i in range(Da):
                    for j in range(Db):
                        seg = mom[:, i + j:i + j + len(w)] @ w
                        acc += C[:, i, j] * seg
                out += acc.real
    return out


# ---------------------------------------------------------------- operators

class Operators:
    """Exact per-mode action of the differential operators on profiles.

    Local coordinates: d1 = c dx - s dz, d2 = dy, d3 = s dx + c dz; time
    derivative is multiplication by i omega.
    """

    def __init__(self, modes, scales):
        self.modes = modes
        self.sc = scales
        self.s, self.c = scales.s, scales.c
        self.iw = 1j * scales.omega
        self._cache = {}

    def _jet(self, name, n):
        key = (name, n)
        if key not in self._cache:
            self._cache[key] = self.modes.xx(n) if name == "x" else self.modes.yy(n)
        return self._cache[key]

    def dx(self, p):
        return p.scale(self._jet("x", p.n))

    def dy(self, p):
        return p.scale(self._jet("y", p.n))

    def dz(self, p):
        return p.dz()

    def d1(self, p):
        return self.dx(p).scale(self.c) - p.dz().scale(self.s)

    d2 = dy

    def d3(self, p):
        return self.dx(p).scale(self.s) + p.dz().scale(self.c)

    def lap_h(self, p):
        return self.d1(self.d1(p)) + self.d2(self.d2(p))

    def lap(self, p):
        return self.dx(self.dx(p)) + self.dy(self.dy(p)) + p.dz().dz()

    def lap_nu(self, p):
        return self.lap_h(p).scale(self.sc.nu_h) + self.d3(self.d3(p)).scale(self.sc.nu_3)

    def L(self, p):
        """(d_t - Delta_nu)."""
        return p.scale(self.iw) - self.lap_nu(p)

    def y(self, p):
        return p.mul_y()

    # vectors are lists of profiles
    @staticmethod
    def perp(v):
        return [-v[1], v[0]]

    def grad_h(self, p):
        return [self.d1(p), self.d2(p)]

    def grad_perp(self, p):
        return [-self.d2(p), self.d1(p)]

    def div_h(self, v):
        return self.d1(v[0]) + self.d2(v[1])

    def curl_h(self, v):
        """grad_perp . v = -d2 v1 + d1 v2."""
        return self.d1(v[1]) - self.d2(v[0])

    def div(self, u):
        return self.d1(u[0]) + self.d2(u[1]) + self.d3(u[2])

    def L1(self, v):
        """(d_t - Delta_nu) v + beta y v^perp."""
        vp = self.perp(v)
        return [self.L(v[i]) + self.y(vp[i]).scale(self.sc.beta) for i in range(2)]

    def L2t(self, p):
        return self.lap_h(p).scale(self.iw) + self.d1(p).scale(self.sc.beta) - self.lap_nu(self.lap_h(p))

    def L2(self, p):
        return self.lap(p).scale(self.iw) + self.d1(p).scale(self.sc.beta) - self.lap_nu(self.lap_h(p))


SYMBOLS = {
    "dx": "dx", "dy": "dy", "dz": "dz", "d1": "d1", "d2": "d2", "d3": "d3",
    "lap_h": "lap_h", "lap": "lap", "lap_nu": "lap_nu", "L1": "L1", "L2t": "L2t", "L2": "L2",
    "∂_x": "dx", "∂_y": "dy", "∂_z": "dz", "∂₁": "d1", "∂₂": "d2", "∂₃": "d3",
    "Δ_h": "lap_h", "Δ": "lap", "Δ_ν": "lap_nu", "L¹": "L1", "L̃²": "L2t", "L²": "L2",
}


@dataclass
class SpectralField:
    modes: ModeSet
    omega: float
    comps: list
    kind: str = "scalar"

    def __getitem__(self, i):
        return self.comps[i]


def apply_diff(fld, op_symbol, scales):
    ops = Operators(fld.modes, scales)
    name = SYMBOLS[op_symbol]
    if name == "L1":
        if fld.kind != "horizontal":
            raise ValueError("L1 acts on horizontal vector fields")
        return SpectralField(fld.modes, fld.omega, ops.L1(fld.comps), fld.kind)
    f = getattr(ops, name)
    return SpectralField(fld.modes, fld.omega, [f(c) for c in fld.comps], fld.kind)


def multiply_by_y(fld):
    return SpectralField(fld.modes, fld.omega, [c.mul_y() for c in fld.comps], fld.kind)


def box_multiply_by_y(grid, spec, axis_y=1):
    """Pseudo-spectral product with the sampled sawtooth coordinate of the box.

    ``spec`` has the grid's (Nx, Ny) leading axes; trailing axes are carried
    through (e.g. z-polynomial coefficients).
    """
    spec = np.asarray(spec, dtype=complex)
    amp = np.abs(spec).reshape(spec.shape[0], spec.shape[1], -1).max(axis=(0, 2))
    ky = np.abs(grid.ky)
    outer = ky > grid.Ny / 3
    if amp.max() > 0 and amp[outer].max() > 1e-12 * amp.max():
        warnings.warn("transverse spectrum reaches the outer third of the grid", AliasWarning, stacklevel=2)
    phys = grid.to_physical(spec)
    y = grid.y.reshape((1, -1) + (1,) * (spec.ndim - 2))
    return grid.to_spectral(phys * y)


# ---------------------------------------------------------------- forcing

@dataclass
class ForcingRecipe:
    """f = (A X(x) Y(y) exp(-gamma z), 0, 0) in the slope-aligned coordinates."""
    amplitude: float = 1.0
    x_kind: str = "gaussian"      # gaussian: exp(-(x/wx)^2); exponential: exp(-|x|/wx); zero
    wx: float = 1.0
    y_kind: str = "sin_exp"       # sin_exp, cos_exp, gaussian, sin_gauss
    k0: float = math.pi / 2
    Ly_decay: float = 4.0
    wy: float = 1.0
    gamma: float = 1.0
    x0: float = 0.0

    def physical(self, x, y, z=0.0):
        A = self.amplitude
        if self.x_kind == "gaussian":
            X = np.exp(-((x - self.x0) / self.wx) ** 2)
        elif self.x_kind == "exponential":
            X = np.exp(-np.abs(x - self.x0) / self.wx)
        else:
            X = 0 * x
        if self.y_kind == "sin_exp":
            Y = np.sin(self.k0 * y) * np.exp(-np.abs(y) / self.Ly_decay)
        elif self.y_kind == "cos_exp":
            Y = np.cos(self.k0 * y) * np.exp(-np.abs(y) / self.Ly_decay)
        elif self.y_kind == "gaussian":
            Y = np.exp(-(y / self.wy) ** 2)
        elif self.y_kind == "sin_gauss":
            Y = np.sin(self.k0 * y) * np.exp(-(y / self.wy) ** 2)
        elif self.y_kind == "cos_gauss":
            Y = np.cos(self.k0 * y) * np.exp(-(y / self.wy) ** 2)
        else:
            raise ValueError(self.y_kind)
        return A * X * Y * np.exp(-self.gamma * z)

    def x_hat(self, xi):
        xi = np.asarray(xi, float)
        shift = np.exp(-1j * xi * self.x0)
        if self.x_kind == "gaussian":
            return self.wx * math.sqrt(math.pi) * np.exp(-(self.wx * xi) ** 2 / 4) * shift
        if self.x_kind == "exponential":
            a = 1 / self.wx
            return 2 * a / (a * a + xi * xi) * shift
        return 0 * xi + 0j

    def y_hat(self, eta, n):
        """Transform in y as a jet in the offset h: shape (len(eta), n)."""
        e = J.var(np.asarray(eta, float), n)
        one = J.const(np.ones(len(eta)), n)

        def lor(shift):
            a = 1 / self.Ly_decay
            q = e - shift * one
            return 2 * a * J.inv(a * a * one + J.mul(q, q))

        def gau(shift):
            q = e - shift * one
            return self.wy * math.sqrt(math.pi) * J.exp(-(self.wy ** 2 / 4) * J.mul(q, q))

        k = self.k0
        if self.y_kind == "sin_exp":
            return (lor(k) - lor(-k)) / 2j
        if self.y_kind == "cos_exp":
            return (lor(k) + lor(-k)) / 2
        if self.y_kind == "gaussian":
            return gau(0.0)
        if self.y_kind == "sin_gauss":
            return (gau(k) - gau(-k)) / 2j
        if self.y_kind == "cos_gauss":
            return (gau(k) + gau(-k)) / 2
        raise ValueError(self.y_kind)

    def is_zero(self):
        return self.amplitude == 0 or self.x_kind == "zero"


@dataclass
class Forcing:
    """Tabulated forcing on a grid: f1 hat as jets (Nx*Ny, n) with rate gamma."""
    grid: ModeGrid
    recipe: ForcingRecipe
    f1: np.ndarray
    retained: np.ndarray
    R: float
    tail_norm: float
    tail_relative: float
    h4_sum: float
    h3_ok: bool
    reality_defect: float
    report: dict = field(default_factory=dict)

    @property
    def gamma(self):
        return self.recipe.gamma

    def profiles(self, modes, n):
        """(f1, f2) as Profiles on a ModeSet, using the slot name "gamma"."""
        rates = {"gamma": J.const(np.full(modes.M, self.gamma), n)}
        f1 = self.f1[modes.index, :n]
        return Profile.exp(rates, "gamma", f1), Profile.zeros(rates, modes.M, n)


def dealias_mask(grid, keep=2 / 3):
    """Modes inside the kept fraction of each axis (2/3 rule by default)."""
    kx, ky = np.meshgrid(grid.kx, grid.ky, indexing="ij")
    return (np.abs(kx) < keep * grid.Nx / 2) & (np.abs(ky) < keep * grid.Ny / 2)


def ingest_forcing(recipe, grid, scales, n=1, kappa=None, N_tail=0.5, Q=4.0, check_tail=True, dealias=None):
    """Tabulate the forcing on the grid, truncate at |xi| > R and check hypotheses."""
    a_b = None
    if kappa is None:
        a_b = -math.log(scales.beta) / math.log(scales.epsilon) + math.log(abs(scales.omega)) / math.log(scales.epsilon) \
            if scales.omega != 0 else -math.log(scales.beta) / math.log(scales.epsilon)
        kappa = a_b / 2
    R = scales.epsilon ** (-kappa)
    XX, YY = grid.mesh()
    xh = recipe.x_hat(grid.xi_x)
    yh = recipe.y_hat(grid.xi_y, n)
    F = recipe.amplitude * xh[:, None, None] * yh[None, :, :]
    if recipe.is_zero():
        F = np.zeros_like(F)
    F = F.reshape(grid.Nx * grid.Ny, n)
    mag = np.hypot(XX, YY).ravel()
    retained = mag <= R
    if dealias is not None:
        retained &= dealias_mask(grid, dealias).ravel()
    w = grid.parseval_weight
    total = np.sqrt(np.sum(np.abs(F[:, 0]) ** 2) * w)
    tail = np.sqrt(np.sum(np.abs(F[~retained, 0]) ** 2) * w)
    F[~retained] = 0
    tail_rel = tail / total if total > 0 else 0.0
    ci = grid.conj_index()
    F0 = F[:, 0]
    sym = np.abs(F0[ci] - np.conj(F0))
    reality = float(sym.max() / np.abs(F0).max()) if np.abs(F0).max() > 0 else 0.0
    yflat = YY.ravel()
    nz = yflat != 0
    h4 = float(np.sum(np.abs(yflat[nz]) ** (-Q) * np.abs(F0[nz]) ** 2) * w)
    if scales.omega == 0 and np.any(np.abs(F0[(yflat == 0) & retained]) > 0):
        raise H4Violation("retained xi_y = 0 mode with nonzero forcing at zero frequency")
    budget = scales.epsilon ** N_tail
    if check_tail and tail_rel > budget:
        raise TailTooLarge(f"discarded tail {tail_rel:.3e} exceeds budget eps^{N_tail}={budget:.3e}")
    h3_ok = recipe.gamma > 0
    report = dict(R=R, kappa=kappa, tail_norm=tail, tail_relative=tail_rel, budget=budget, h4_sum=h4, Q=Q,
                  reality_defect=reality, h3_gamma=recipe.gamma, retained=int(retained.sum()), dealias=dealias)
    return Forcing(grid, recipe, F, retained, R, tail, tail_rel, h4, h3_ok, reality, report)


def export_profile(path_or_file, modes, prof, header=""):
    """Columnar text: xi_x xi_y term_index Re(mu) Im(mu) coefficients (jet order 0)."""
    lines = [f"# {header}".rstrip()]
    keys = sorted(prof.terms)
    for m in range(prof.M):
        for t, k in enumerate(keys):
            mu = prof.rates[k][m, 0]
            co = " ".join(f"{c.real:.17g} {c.imag:.17g}" for c in prof.terms[k][m, :, 0])
            lines.append(f"{modes.xi_x[m]:.17g} {modes.xi_y[m]:.17g} {t} {mu.real:.17g} {mu.imag:.17g} {co}")
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w") as fh:
            fh.write(text)
