"""Any-order construction u_app = sum_k eps^k u^k with interior, Munk and Ekman stacks.

Every order solves the same recurrence.  Interior and Munk parts carry
w^k = L(u_h^{k-1})^perp - beta y u_h^{k-1} (plus the forcing at k = 1) and
a pressure from L2 p^k = F^k.  Ekman parts solve the exact f-plane system
with the beta y term of the previous Ekman order as source.  Boundary
coefficients are fixed afterwards so the total trace vanishes.
"""
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import jets as J
from .ekman_layer import EkmanSolver
from .qg_builder import ExpansionTerm, Part, SolveContext, SingularTraceSystem, zero_part
from .spectral_field import Profile, weighted_l2


class DepthExhausted(ValueError):
    pass


DERIVS_PER_ORDER = 5


@dataclass
class CascadeConfig:
    K: int = 3
    smoothness: int = 20
    chunk: int = 1024
    ekman: bool = True
    trace_tol: float = 1e-10


def depth_budget(smoothness):
    return (smoothness - 1) // DERIVS_PER_ORDER


def check_depth(k, smoothness):
    if k > depth_budget(smoothness):
        raise DepthExhausted(f"order {k} needs {DERIVS_PER_ORDER * k + 1} derivatives, forcing has {smoothness}")


def jet_length(K):
    # two y-multiplications per order, one more for the residual
    return 2 * K + 3


# ------------------------------------------------------------------ stacks

def _recurrence(ctx, k, hist, forcing):
    """Pressure source, w^k and the u3/rho history terms of one stack."""
    ops, sc = ctx.ops, ctx.sc
    b = sc.beta
    z = ctx.zero()
    if k == 0:
        w = [z, z]
    else:
        uh = hist[k - 1].u[:2]
        Lu = ops.perp([ops.L(c) for c in uh])
        w = [Lu[i] - ops.y(uh[i]).scale(b) for i in range(2)]
        if k == 1 and forcing:
            fp = ops.perp(ctx.f)
            w = [w[i] - fp[i].scale(b) for i in range(2)]
    Lw = ops.perp([ops.L(c) for c in w])
    F = ops.div_h([Lw[i] - ops.y(w[i]).scale(b) for i in range(2)]) if k > 0 else z
    j = k - sc.M - 1
    Lu3 = ops.L(hist[j].u[2]) if j >= 0 else None
    if Lu3 is not None:
        F = F - ops.d3(Lu3).scale(1j * sc.omega)
    if k == 0 and forcing:
        F = F + ops.curl_h(ctx.f).scale(b)
    return F, w, Lu3


def _assemble_part(ctx, k, p, w, Lu3, hist):
    ops, sc = ctx.ops, ctx.sc
    gp = ops.grad_perp(p)
    uh = [gp[i] + w[i] for i in range(2)]
    u3 = hist[k - 1].rho.scale(1j * sc.omega) if k > 0 else ctx.zero()
    rho = -ops.d3(p)
    if Lu3 is not None:
        rho = rho - Lu3
    return Part([uh[0], uh[1], u3], p, rho, w)


def interior_step(ctx, k, hist):
    """Interior part of order k from the lower interior parts (forcing enters at k = 0, 1)."""
    F, w, Lu3 = _recurrence(ctx, k, hist, True)
    part = _assemble_part(ctx, k, ctx.G(F), w, Lu3, hist)
    part.source = F
    return part


def munk_step(ctx, k, hist):
    """Particular Munk part of order k (before the layer exponentials are added)."""
    if k == 0:
        return zero_part(ctx)
    F, w, Lu3 = _recurrence(ctx, k, hist, False)
    part = _assemble_part(ctx, k, ctx.G(F), w, Lu3, hist)
    part.source = F
    return part


def munk_homogeneous(ctx, c):
    ops = ctx.ops
    p = ctx.munk_layer(c)
    u = ops.grad_perp(p)
    return Part([u[0], u[1], ctx.zero(p.n)], p, -ops.d3(p))


def ekman_source(ctx, prev):
    """-(beta/eps) y (u_{E,h}^{k-1})^perp, the only coupling between Ekman orders."""
    sc = ctx.sc
    up = ctx.ops.perp(prev.u[:2])
    return [ctx.ops.y(c).scale(-sc.beta / sc.epsilon) for c in up]


def ekman_step(ctx, k, hist):
    """Particular Ekman part of order k: zero unless an Ekman part exists at k - 1."""
    if k < 2 or hist[k - 1] is None or ctx.ekman is None:
        return None, 0.0
    src = ekman_source(ctx, hist[k - 1])
    f, sigma = ctx.ekman.particular(src)
    return Part(f[:3], f[3], f[4]), sigma


def ekman_eigen(ctx, cE):
    f = ctx.ekman.eigen_fields(cE)
    return Part(f[:3], f[3], f[4])


def close_boundary(ctx, k, interior, munk_bar, ekman_bar=None, with_ekman=True):
    """Solve c_E (vertical trace) and the two Munk coefficients (horizontal trace)."""
    tot = interior + munk_bar
    if ekman_bar is not None:
        tot = tot + ekman_bar
    T = tot.trace()
    n = min(t.shape[-1] for t in T)
    T = [t[:, :n] for t in T]
    cE = None
    ekman = ekman_bar
    if ctx.ekman is not None:
        U = ctx.ekman.U[..., :n]
        cE = -J.div(T[2], U[:, 2])
        if with_ekman and k >= 2:
            eig = ekman_eigen(ctx, cE)
            ekman = eig if ekman is None else ekman + eig
            T = [T[0] + J.mul(cE, U[:, 0]), T[1] + J.mul(cE, U[:, 1])]
    c = ctx.solve_munk(T[:2])
    munk = munk_bar + munk_homogeneous(ctx, c)
    coeffs = dict(c=c)
    if cE is not None:
        coeffs["cE"] = cE
    return ExpansionTerm(k, interior, munk, ekman, coeffs)


# ------------------------------------------------------------------ assembly

class ChunkContext(SolveContext):
    def __init__(self, modes, scales, forcing=None, n=3, f_profiles=None, ekman=True):
        super().__init__(modes, scales, forcing=forcing, n=n, f_profiles=f_profiles)
        self.ekman = None
        if ekman and scales.omega != 0:
            self.ekman = EkmanSolver(modes, scales, n, rates=self.rates)


def build_terms(ctx, K, with_ekman=True):
    hi, hm, he = [], [], []
    terms, sigmas = [], []
    for k in range(K + 1):
        ip = interior_step(ctx, k, hi)
        mb = munk_step(ctx, k, hm)
        eb, sg = ekman_step(ctx, k, he) if with_ekman else (None, 0.0)
        t = close_boundary(ctx, k, ip, mb, eb, with_ekman)
        sigmas.append(sg)
        hi.append(t.interior)
        hm.append(t.munk)
        he.append(t.ekman)
        terms.append(t)
    return terms, sigmas


@dataclass
class ChunkResult:
    modes: object
    ctx: object
    terms: list
    sigmas: list


@dataclass
class ApproximateSolution:
    """Per-chunk expansion terms and their eps-weighted sum."""
    chunks: list
    epsilon: float
    K: int
    scales: object
    grid: object = None
    runtime: float = 0.0
    info: dict = field(default_factory=dict)

    def assembled(self, chunk, origin=None, K=None):
        K = self.K if K is None else K
        out = None
        for k, t in enumerate(chunk.terms[:K + 1]):
            parts = t.parts() if origin is None else {origin: t.parts().get(origin)}
            for p in parts.values():
                if p is None:
                    continue
                q = p.scale(self.epsilon ** k)
                out = q if out is None else out + q
        return out

    def index(self):
        return np.concatenate([c.modes.index for c in self.chunks])

    def evaluate(self, comp, z, K=None):
        """Component ('u1','u2','u3','p','rho') of u_app at depths z: (M_total, len(z))."""
        rows = []
        for ch in self.chunks:
            a = self.assembled(ch, K=K)
            rows.append(_component(a, comp)(z))
        return np.concatenate(rows, axis=0)

    def boundary_defect(self):
        """max |u_app(0)| / max_z |u_app| per mode."""
        zs = np.concatenate([[0.0], np.geomspace(1e-6, 50.0, 200)])
        out = []
        for ch in self.chunks:
            a = self.assembled(ch)
            vals = np.stack([c(zs) for c in a.u], axis=0)
            mag = np.abs(vals).max(axis=(0, 2))
            tr = np.abs(vals[:, :, 0]).max(axis=0)
            out.append(tr / np.maximum(mag, 1e-300))
        return np.concatenate(out)


def _component(part, comp):
    return {"u1": part.u[0], "u2": part.u[1], "u3": part.u[2], "p": part.p, "rho": part.rho}[comp]


def assemble(forcing, scales, config=None, modes=None, K=None, epsilon=None):
    """Build all orders up to K on every retained mode with xi_y != 0."""
    config = config or CascadeConfig()
    K = config.K if K is None else K
    for k in range(K + 1):
        check_depth(k, config.smoothness)
    eps = scales.epsilon if epsilon is None else epsilon
    if modes is None:
        modes = retained_modes(forcing)
    n = jet_length(K)
    t0 = time.perf_counter()
    chunks = []
    for mc in modes.chunks(config.chunk):
        ctx = ChunkContext(mc, scales, forcing=forcing, n=n, ekman=config.ekman and K >= 2)
        terms, sig = build_terms(ctx, K, with_ekman=config.ekman)
        chunks.append(ChunkResult(mc, ctx, terms, sig))
    sol = ApproximateSolution(chunks, eps, K, scales, getattr(forcing, "grid", None))
    sol.runtime = time.perf_counter() - t0
    return sol


def retained_modes(forcing):
    from .spectral_field import ModeSet
    g = forcing.grid
    XX, YY = g.mesh()
    xx, yy = XX.ravel(), YY.ravel()
    keep = forcing.retained & (yy != 0) & (np.abs(forcing.f1[:, 0]) > 0)
    idx = np.nonzero(keep)[0]
    return ModeSet(xx[idx], yy[idx], idx)


# ------------------------------------------------------------------ residual

def system_residual(part, ctx, forcing=True):
    """Apply the full linear system to a part: (g1, g2, g3, g_rho, div)."""
    ops, sc = ctx.ops, ctx.sc
    eps, d2, b = sc.epsilon, sc.delta ** 2, sc.beta
    u1, u2, u3 = part.u
    p, rho = part.p, part.rho
    up = ops.perp([u1, u2])
    g = []
    for i, (ui, di) in enumerate(((u1, ops.d1), (u2, ops.d2))):
        gi = ops.L(ui) + up[i].scale(1 / eps) + ops.y(up[i]).scale(b) + di(p).scale(1 / eps)
        if forcing:
            gi = gi - ctx.f[i].scale(b)
        g.append(gi)
    g.append(ops.L(u3) + (ops.d3(p) + rho).scale(1 / (eps * d2)))
    g.append(rho.scale(1j * sc.omega) - u3.scale(1 / eps))
    g.append(ops.div(part.u))
    return g


@dataclass
class ResidualReport:
    """Weighted residual norms of the assembled solution, total and per origin."""
    K: int
    epsilon: float
    total: float
    per_equation: dict
    per_origin: dict
    per_mode: np.ndarray
    budget_exponent: float = None
    divergence: float = 0.0

    def as_dict(self):
        return dict(K=self.K, epsilon=self.epsilon, total=self.total, per_equation=self.per_equation,
                    per_origin=self.per_origin, divergence=self.divergence,
                    budget_exponent=self.budget_exponent)


EQUATIONS = ("horizontal", "vertical", "mass", "divergence")


def _eq_norms(g, sc):
    """int (1+z^2)|g|^2 per mode and per equation; vertical momentum weighted by delta."""
    w = (1.0, 0.0, 1.0)
    return dict(horizontal=weighted_l2(g[:2], w),
                vertical=weighted_l2([g[2].scale(sc.delta)], w),
                mass=weighted_l2([g[3]], w),
                divergence=weighted_l2([g[4]], w))


def residual(sol, K=None, weight=None):
    """Residual of the full system for u_app truncated at order K (default: all terms)."""
    K = sol.K if K is None else K
    sc = sol.scales
    wq = weight if weight is not None else (sol.grid.parseval_weight if sol.grid is not None else 1.0)
    per_eq = {e: 0.0 for e in EQUATIONS}
    per_origin = {}
    per_mode = []
    for ch in sol.chunks:
        tot = sol.assembled(ch, K=K)
        nrm = _eq_norms(system_residual(tot, ch.ctx), sc)
        pm = sum(nrm[e] for e in EQUATIONS[:3])
        per_mode.append(pm)
        for e in EQUATIONS:
            per_eq[e] += float(np.sum(nrm[e]) * wq)
        for origin in ("interior", "munk", "ekman"):
            a = sol.assembled(ch, origin, K=K)
            if a is None:
                continue
            no = _eq_norms(system_residual(a, ch.ctx, forcing=origin == "interior"), sc)
            per_origin[origin] = per_origin.get(origin, 0.0) + float(sum(np.sum(no[e]) for e in EQUATIONS[:3]) * wq)
    per_mode = np.concatenate(per_mode)
    total = float(sum(per_eq[e] for e in EQUATIONS[:3]))
    rep = ResidualReport(K, sol.epsilon, math.sqrt(total), {e: math.sqrt(v) for e, v in per_eq.items()},
                         {o: math.sqrt(v) for o, v in per_origin.items()}, np.sqrt(per_mode),
                         divergence=math.sqrt(per_eq["divergence"]))
    if total > 0:
        rep.budget_exponent = math.log(rep.total) / math.log(sol.epsilon)
    return rep


def ledger(sol):
    """Per-order norms and coefficient sizes (H1_xy L2_z proxy with the Parseval weight)."""
    wq = sol.grid.parseval_weight if sol.grid is not None else 1.0
    rows = []
    for k in range(sol.K + 1):
        row = dict(k=k, norm={}, coeff_max={})
        for origin in ("interior", "munk", "ekman"):
            acc = 0.0
            for ch in sol.chunks:
                part = ch.terms[k].parts().get(origin)
                if part is None:
                    continue
                xi2 = ch.modes.xi_x ** 2 + ch.modes.xi_y ** 2
                acc += float(np.sum((1 + xi2) * weighted_l2(part.u, (1.0,))) * wq)
            row["norm"][origin] = math.sqrt(acc) * sol.epsilon ** k
        for key in ("c", "cE"):
            vals = [np.abs(ch.terms[k].coeffs[key][..., 0]).max() for ch in sol.chunks if key in ch.terms[k].coeffs]
            if vals:
                row["coeff_max"][key] = float(max(vals))
        row["ekman_sigma"] = float(max(ch.sigmas[k] for ch in sol.chunks))
        rows.append(row)
    return rows
