"""Ekman characteristic analysis of the f-plane system over the tilted bottom.

Two matrix forms are used.  ``mode_matrix`` is the 5x5 system in the local
frame, unknowns (U'_x, U'_y, U'_z, P, R), for a decay rate lambda.  The
global-frame operator ``global_operator`` (unknowns u1, u2, u3, p, rho) is a
matrix polynomial in d/dz with jet coefficients; the solver uses it to lift
eigenvectors to jets and to solve the forced polynomial-exponential problems
that appear at higher orders.
"""
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import jets as J
from .munk_roots import poly_roots_batch
from .regime import FrequencyRegime, classify_frequency
from .spectral_field import ModeSet, Profile


class DegenerateTilt(ValueError):
    pass


class MatchFailure(ValueError):
    pass


class NullspaceFailure(ValueError):
    pass


class InconsistentRegime(ValueError):
    pass


class DiscardReason(enum.Enum):
    RedundantWithMunk = "RedundantWithMunk"
    BetaDominates = "BetaDominates"


def _xi(xi):
    if isinstance(xi, ModeSet):
        return xi.xi_x[0], xi.xi_y[0]
    return float(xi[0]), float(xi[1])


def r_symbol(lam, xi, omega, scales):
    xx, yy = _xi(xi)
    s, c = scales.s, scales.c
    return (1j * omega - scales.nu_h * ((1j * c * xx + lam * s) ** 2 - yy ** 2)
            - scales.nu_3 * (1j * s * xx - c * lam) ** 2)


def tildes(lam, xi, scales):
    xx, _ = _xi(xi)
    s, c = scales.s, scales.c
    return s + 1j * xx * c / lam, c - 1j * xx * s / lam


def exact_determinant(lam, xi, omega, scales):
    """Left side of the exact Ekman characteristic equation (reduced 2x2 form)."""
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    _, yy = _xi(xi)
    st, ct = tildes(lam, xi, scales)
    if abs(ct) < 1e-12:
        raise DegenerateTilt("c~ vanishes")
    r = r_symbol(lam, xi, omega, scales)
    eps, d2 = scales.epsilon, scales.delta ** 2
    return r * r + 1 / eps ** 2 + (d2 * r * r + r / (1j * omega * eps ** 2)) * (st ** 2 / ct ** 2 - yy ** 2 / (lam ** 2 * ct ** 2))


def determinant_poly(modes, omega, scales, n=1):
    """Degree-6 polynomial (ascending coefficients in lambda), jets in h: (M, 7, n)."""
    s, c = scales.s, scales.c
    one = J.const(np.ones(modes.M), n)
    ixx, iyy = modes.xx(n), modes.yy(n)
    yy2 = J.mul(iyy, iyy)
    a1 = J.poly_from(c * ixx, s * one)          # d1 with d_z -> -lambda
    a3 = J.poly_from(s * ixx, -c * one)         # d3
    r = J.poly_add(1j * omega * one[:, None, :],
                   -scales.nu_h * J.poly_add(J.poly_mul(a1, a1), yy2[:, None, :]))
    r = J.poly_add(r, -scales.nu_3 * J.poly_mul(a3, a3))
    lc = J.poly_from(-1j * s * modes.xi_x[:, None] * one, c * one)     # lambda c~
    ls = J.poly_from(1j * c * modes.xi_x[:, None] * one, s * one)      # lambda s~
    eps, d2 = scales.epsilon, scales.delta ** 2
    t1 = J.poly_mul(J.poly_add(J.poly_mul(r, r), (1 / eps ** 2) * one[:, None, :]), J.poly_mul(lc, lc))
    g = J.poly_add(d2 * J.poly_mul(r, r), r / (1j * omega * eps ** 2))
    t2 = J.poly_mul(g, J.poly_add(J.poly_mul(ls, ls), yy2[:, None, :]))
    return J.poly_add(t1, t2)


def mode_matrix(lam, xi, omega, scales):
    """Local-frame 5x5 matrix acting on (U'_x, U'_y, U'_z, P, R)."""
    xx, yy = _xi(xi)
    s, c = scales.s, scales.c
    eps, d2 = scales.epsilon, scales.delta ** 2
    st, ct = tildes(lam, xi, scales)
    r = r_symbol(lam, xi, omega, scales)
    return np.array([
        [r, -c / eps, 0, lam * st * c / eps - lam * ct * s / (eps * d2), s / (eps * d2)],
        [c / eps, r, -s / eps, 1j * yy / eps, 0],
        [0, s / eps, r, -lam * st * s / eps - lam * ct * c / (eps * d2), c / (eps * d2)],
        [1j * xx, 1j * yy, -lam, 0, 0],
        [-s / eps, 0, -c / eps, 0, 1j * omega],
    ], dtype=complex)


def asymptotic_lambdas(omega, scales):
    sg = np.sign(omega)
    ne = scales.nu_eff
    l1 = np.exp(-1j * math.pi / 4 * sg) * abs(math.tan(scales.alpha)) / (math.sqrt(ne) * scales.epsilon * math.sqrt(abs(omega)))
    l2 = np.exp(1j * math.pi / 4 * sg) * math.sqrt(abs(omega)) / (math.sqrt(ne) * abs(scales.s))
    return l1, l2


def asymptotic_r(omega, scales):
    s, c, eps = scales.s, scales.c, scales.epsilon
    return 1j * s * s / (omega * eps ** 2 * c * c), -1j * omega * c * c / (s * s)


@dataclass
class EkmanMode:
    lam: complex
    r: complex
    U: np.ndarray = None
    discard: bool = False
    refs: dict = field(default_factory=dict)

    def global_velocity(self, scales):
        s, c = scales.s, scales.c
        Ux, Uy, Uz = self.U[:3]
        return np.array([c * Ux - s * Uz, Uy, s * Ux + c * Uz])


def all_layer_roots(xi, omega, scales):
    modes = xi if isinstance(xi, ModeSet) else ModeSet.single(*xi)
    P = determinant_poly(modes, omega, scales, 1)[..., 0]
    return poly_roots_batch(P)


def layer_roots(xi, omega, scales, tol=0.3, check=True):
    """Exact boundary-layer roots matched to the two asymptotic references."""
    if omega == 0:
        raise ValueError("layer roots need omega != 0")
    xx, yy = _xi(xi)
    if check:
        if abs(omega * scales.epsilon) > 0.1:
            raise ValueError("|omega eps| must be <= 0.1")
        lim = 0.1 * math.sqrt(abs(omega / scales.nu_eff))
        if math.hypot(xx, yy) > lim:
            raise ValueError(f"|xi| must be <= 0.1 |omega/nu_eff|^(1/2) = {lim:.4g}")
    roots = all_layer_roots((xx, yy), omega, scales)[0]
    l1r, l2r = asymptotic_lambdas(omega, scales)
    pos = roots[roots.real > 0]
    picks = []
    for ref in (l1r, l2r):
        rel = np.abs(pos - ref) / abs(ref)
        k = int(np.argmin(rel))
        if rel[k] > tol:
            raise MatchFailure(f"no exact root within {tol:.0%} of reference {ref:.4g}")
        picks.append(pos[k])
    l1, l2 = picks
    mode = EkmanMode(l1, r_symbol(l1, (xx, yy), omega, scales), refs=dict(lam1=l1r, lam2=l2r, roots=roots))
    return mode, l2


def reduced_matrix(lam, xi, omega, scales):
    """Reduced 2x2 system on (U'_x, U'_y)."""
    _, yy = _xi(xi)
    s, c = scales.s, scales.c
    eps, d2 = scales.epsilon, scales.delta ** 2
    st, ct = tildes(lam, xi, scales)
    r = r_symbol(lam, xi, omega, scales)
    g = d2 * r + 1 / (1j * omega * eps ** 2)     # delta^2 (r + 1/(i w eps^2 delta^2))
    A11 = r * (1 - s * st) + st * st * c / ct * g
    A12 = -c / eps + 1j * c * yy / lam * (-s * r + c * st / ct * g)
    A21 = ct / eps + 1j * yy * st / (lam * ct) * g
    A22 = r - s * 1j * yy / (eps * lam) - yy * yy * c / (lam * lam * ct) * g
    return np.array([[A11, A12], [A21, A22]])


def eigenvector_lambda1(mode, xi, omega, scales, tol=1e-3):
    xx, yy = _xi(xi)
    lam = mode.lam
    s, c, eps, d2 = scales.s, scales.c, scales.epsilon, scales.delta ** 2
    A = reduced_matrix(lam, xi, omega, scales)
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    rn = np.linalg.norm(A[0]) * np.linalg.norm(A[1])
    if abs(det) > tol * rn:
        raise NullspaceFailure(f"reduced system not singular: {abs(det) / rn:.2e}")
    Ux = 1.0
    Uy = -A[1, 0] / A[1, 1]
    Uz = (1j * xx * Ux + 1j * yy * Uy) / lam
    st, ct = tildes(lam, xi, scales)
    r = r_symbol(lam, xi, omega, scales)
    q = st * Ux + 1j * yy * c * Uy / lam
    R = q / (1j * omega * eps)
    P = eps / (lam * ct) * (d2 * r + 1 / (1j * omega * eps ** 2)) * q
    sg = np.sign(omega)
    refs = dict(Uy=1j * c ** 3 / s ** 2 * omega * eps, Uz=1j * xx / lam,
                P=np.exp(-1j * math.pi / 4 * sg) * math.sqrt(scales.nu_eff / abs(omega)) * np.sign(scales.alpha),
                R=s / (1j * omega * eps))
    out = EkmanMode(lam, r, np.array([Ux, Uy, Uz, P, R]), mode.discard, {**mode.refs, **refs})
    return out


def hydrostatic_defect(mode, xi, scales):
    _, ct = tildes(mode.lam, xi, scales)
    P, R = mode.U[3], mode.U[4]
    return abs(mode.lam * ct * P - R) / abs(R)


def balance_terms(mode, xi, omega, scales):
    """Sizes of viscous, Coriolis and pressure+stratification terms in the e_x momentum row."""
    A = mode_matrix(mode.lam, xi, omega, scales)
    U = mode.U
    visc = abs((A[0, 0] - 1j * omega) * U[0])
    cor = abs(A[0, 1] * U[1])
    pres = abs(A[0, 3] * U[3] + A[0, 4] * U[4])
    return dict(viscous=visc, coriolis=cor, pressure_stratification=pres)


def discard_rule(lambda2, munk_roots, scales, omega=None, tol=0.3):
    omega = scales.omega if omega is None else omega
    reg = classify_frequency(scales.replace(omega=omega))
    if reg == FrequencyRegime.LowFreq:
        return DiscardReason.BetaDominates
    if reg == FrequencyRegime.MidFreq:
        mp = munk_roots.mu_plus[0, :, 0]
        # the Munk root of modulus |omega/(nu_eff s^2)|^(1/2) (largest modulus)
        mu = mp[np.argmax(np.abs(mp))]
        gap = abs(lambda2 / mu - 1)
        if gap > tol:
            raise InconsistentRegime(f"|lambda2/mu1+ - 1| = {gap:.3f} > {tol}")
        return DiscardReason.RedundantWithMunk
    raise InconsistentRegime("frequency outside both asymptotic regimes")


def rejected_mode_geostrophic_defect(lam2, xi, omega, scales):
    """Nullspace vector at lambda2 normalised by U'_y = 1; defect of U_h against grad-perp P."""
    A = mode_matrix(lam2, xi, omega, scales)
    _, _, vh = np.linalg.svd(A)
    v = np.conj(vh[-1])
    v = v / v[1]
    s, c = scales.s, scales.c
    xx, yy = _xi(xi)
    st, _ = tildes(lam2, xi, scales)
    U1 = c * v[0] - s * v[2]
    Uh = np.array([U1, v[1]])
    geo = np.array([-1j * yy, lam2 * st]) * v[3]
    return np.linalg.norm(geo - Uh) / np.linalg.norm(Uh)


# ---------------------------------------------------------------- global-frame machinery

def global_operator(modes, scales, n):
    """Matrix polynomial in t = d/dz: array (M, 5, 5, 3, n), unknowns (u1, u2, u3, p, rho).

    Rows: e1 and e2 momentum (times eps), e3 momentum (times eps delta^2),
    mass (times eps), divergence.
    """
    s, c = scales.s, scales.c
    eps, d2, w = scales.epsilon, scales.delta ** 2, scales.omega
    M = modes.M
    one = J.const(np.ones(M), n)
    zero = 0 * one
    ixx, iyy = modes.xx(n), modes.yy(n)
    d1 = J.poly_from(c * ixx, -s * one)
    d2p = J.poly_from(iyy)
    d3 = J.poly_from(s * ixx, c * one)
    L = J.poly_add(1j * w * one[:, None, :],
                   -scales.nu_h * J.poly_add(J.poly_mul(d1, d1), J.poly_mul(d2p, d2p)))
    L = J.poly_add(L, -scales.nu_3 * J.poly_mul(d3, d3))
    A = np.zeros((M, 5, 5, 3, n), dtype=complex)

    def put(i, j, p):
        A[:, i, j, :p.shape[1]] = p

    put(0, 0, eps * L)
    put(0, 1, -one[:, None])
    put(0, 3, d1)
    put(1, 0, one[:, None])
    put(1, 1, eps * L)
    put(1, 3, d2p)
    put(2, 2, eps * d2 * L)
    put(2, 3, d3)
    put(2, 4, one[:, None])
    put(3, 2, -one[:, None])
    put(3, 4, 1j * w * eps * one[:, None])
    put(4, 0, d1)
    put(4, 1, d2p)
    put(4, 2, d3)
    return A


def shifted_operator(A, lam):
    """Taylor blocks A_r with A(-lam + D) = sum_r A_r D^r: (M, 3, 5, 5, n)."""
    M, _, _, D, n = A.shape
    n = min(n, lam.shape[-1])
    x0 = -lam[:, :n]
    P = A[..., :n].reshape(M, 25, D, n)
    Ps = J.poly_shift(P, x0[:, None, :])
    return np.moveaxis(Ps.reshape(M, 5, 5, D, -1), 3, 1)


def nullvector(A0):
    """Right null vector of a family of singular 5x5 jet matrices (M, 5, 5, n).

    The pivot component is fixed to one and the least informative row dropped;
    the remaining 4x4 system is solved order by order in h.
    """
    M, m, _, n = A0.shape
    u_, s_, vh = np.linalg.svd(A0[..., 0])
    v = np.conj(vh[:, -1])
    ul = u_[:, :, -1]
    j = np.argmax(np.abs(v), axis=1)
    i = np.argmax(np.abs(ul), axis=1)
    idx = np.arange(m)
    cols = np.stack([idx[idx != jj] for jj in j])
    rows = np.stack([idx[idx != ii] for ii in i])
    Ar = np.take_along_axis(A0, rows[:, :, None, None], axis=1)
    Asub = np.take_along_axis(Ar, cols[:, None, :, None], axis=2)
    rhs = -np.take_along_axis(Ar, j[:, None, None, None], axis=2)[:, :, 0]
    x = J.solve(Asub, rhs)
    out = np.zeros((M, m, x.shape[-1]), dtype=complex)
    out[np.arange(M), j, 0] = 1.0
    np.put_along_axis(out, cols[:, :, None], x, axis=1)
    return out, s_[:, -1] / s_[:, 0]


def layer_root_jets(modes, scales, n):
    """lambda_1 per mode: the Re > 0 root of largest modulus, as a jet."""
    P = determinant_poly(modes, scales.omega, scales, n)
    r0 = poly_roots_batch(P[..., 0])
    score = np.where(r0.real > 0, np.abs(r0), -np.inf)
    k = np.argmax(score, axis=1)
    lam0 = r0[np.arange(modes.M), k]
    Pc = P[..., :1]
    lam0 = J.newton_refine(Pc, lam0[:, None], iters=3)[:, 0]
    lam = J.newton_refine(P, J.const(lam0, n))
    return lam


class EkmanSolver:
    """Eigen-layer and forced polynomial-exponential solutions for a batch of modes."""

    def __init__(self, modes, scales, n, rates=None, slot="lam1"):
        self.modes, self.sc, self.n = modes, scales, n
        self.lam = layer_root_jets(modes, scales, n)
        self.slot = slot
        self.rates = rates if rates is not None else {}
        self.rates[slot] = self.lam
        self.A = global_operator(modes, scales, n)
        self.Ash = shifted_operator(self.A, self.lam)
        U, self.null_ratio = nullvector(self.Ash[:, 0])
        # normalise by the along-slope velocity U'_x = c U1 + s U3
        s, c = scales.s, scales.c
        ux = c * U[:, 0] + s * U[:, 2]
        self.U = J.mul(U, J.inv(ux)[:, None, :])

    def eigen_fields(self, coef):
        """coef * U exp(-lambda z) as five profiles (u1, u2, u3, p, rho)."""
        return [Profile.exp(self.rates, self.slot, J.mul(coef, self.U[:, i, :coef.shape[-1]])) for i in range(5)]

    def particular(self, src_h):
        """Solve the f-plane system with e1/e2 momentum sources (unscaled) in the layer slot.

        Returns five profiles with no eigen component at z = 0 (orthogonal to
        the h = 0 eigenvector) and the bordering residual.
        """
        sc = self.sc
        M = self.modes.M
        P1 = src_h[0].terms.get(self.slot)
        P2 = src_h[1].terms.get(self.slot)
        n = min(src_h[0].n, src_h[1].n)
        if P1 is None and P2 is None:
            return [Profile.zeros(self.rates, M, n) for _ in range(5)], 0.0
        Ds = max(0 if P1 is None else P1.shape[1], 0 if P2 is None else P2.shape[1])
        S = np.zeros((M, 5, Ds, n), dtype=complex)
        if P1 is not None:
            S[:, 0, :P1.shape[1]] = sc.epsilon * P1[..., :n]
        if P2 is not None:
            S[:, 1, :P2.shape[1]] = sc.epsilon * P2[..., :n]
        N = Ds
        nb = 5 * (N + 1)
        B = np.zeros((M, nb + 1, nb + 1, n), dtype=complex)
        Ash = self.Ash[..., :n]
        for m in range(N + 1):
            for r in range(Ash.shape[1]):
                if m + r > N:
                    break
                w = math.factorial(m + r) / math.factorial(m)
                B[:, 5 * m:5 * m + 5, 5 * (m + r):5 * (m + r) + 5] += w * Ash[:, r]
        rhs = np.zeros((M, nb + 1, n), dtype=complex)
        rhs[:, :5 * Ds] = S.transpose(0, 2, 1, 3).reshape(M, 5 * Ds, n)
        B0 = B[:, :nb, :nb, 0]
        # equilibrate with h = 0 row and column norms
        rs = np.ones((M, nb))
        cs = np.ones((M, nb))
        for _ in range(4):
            Bs = B0 * rs[:, :, None] * cs[:, None, :]
            rs = rs / np.sqrt(np.maximum(np.abs(Bs).max(axis=2), 1e-300))
            Bs = B0 * rs[:, :, None] * cs[:, None, :]
            cs = cs / np.sqrt(np.maximum(np.abs(Bs).max(axis=1), 1e-300))
        Bs = B0 * rs[:, :, None] * cs[:, None, :]
        u_, s_, vh = np.linalg.svd(Bs)
        left = u_[:, :, -1]
        right = np.conj(vh[:, -1])
        B[:, :nb, :nb] *= (rs[:, :, None] * cs[:, None, :])[..., None]
        B[:, :nb, nb, 0] = left
        B[:, nb, :nb, 0] = np.conj(right)
        rhs[:, :nb] *= rs[..., None]
        x = J.solve(B, rhs)
        sigma = np.abs(x[:, nb, 0]).max()
        q = x[:, :nb] * cs[..., None]
        q = q.reshape(M, N + 1, 5, -1)
        fields = [Profile(self.rates, {self.slot: q[:, :, i]}) for i in range(5)]
        return fields, sigma


def ekman_residual_profiles(fields, modes, scales, src_h=None):
    """Apply the (unscaled) f-plane system to five profiles; returns five residual profiles."""
    from .spectral_field import Operators
    ops = Operators(modes, scales)
    u1, u2, u3, p, rho = fields
    eps, d2 = scales.epsilon, scales.delta ** 2
    g1 = ops.L(u1) - u2.scale(1 / eps) + ops.d1(p).scale(1 / eps)
    g2 = ops.L(u2) + u1.scale(1 / eps) + ops.d2(p).scale(1 / eps)
    if src_h is not None:
        g1, g2 = g1 - src_h[0], g2 - src_h[1]
    g3 = ops.L(u3) + (ops.d3(p) + rho).scale(1 / (eps * d2))
    gm = rho.scale(1j * scales.omega) - u3.scale(1 / eps)
    gd = ops.d1(u1) + ops.d2(u2) + ops.d3(u3)
    return [g1, g2, g3, gm, gd]
