"""Configuration, pipeline orchestration, field export and the separation figure."""
import argparse
import configparser
import json
import math
import os
import sys
import time
from dataclasses import MISSING, asdict, dataclass, field, fields

import numpy as np

from . import __version__
from . import regime as R
from .cascade import CascadeConfig, assemble, jet_length, ledger, residual, retained_modes, DepthExhausted
from .qg_builder import SolveContext, build_order0, build_order1
from .spectral_field import ForcingRecipe, ModeGrid, ingest_forcing


class ConfigError(ValueError):
    pass


class MissingRun(FileNotFoundError):
    pass


class GatedFailure(RuntimeError):
    pass


@dataclass
class SolveSection:
    order: int = 1
    K: int = 3
    z_samples: list = field(default_factory=lambda: [0.0, 0.1, 0.5, 1.0])
    x3: list = field(default_factory=lambda: [0.0])
    n1: int = 96
    n2: int = 128
    x1_span: float = 8.0
    chunk: int = 1024
    smoothness: int = 20
    kappa: float = None
    N_tail: float = 0.5
    dealias: float = 2 / 3
    trace_tol: float = 1e-10


@dataclass
class OutputSection:
    directory: str = "out"
    formats: list = field(default_factory=lambda: ["txt", "json"])


@dataclass
class RunConfig:
    regime: R.Parameters
    forcing: ForcingRecipe
    grid: ModeGrid
    solve: SolveSection
    output: OutputSection

    def scales(self):
        return R.validate(self.regime)

    def as_dict(self):
        d = dict(regime=self.regime.as_dict(), forcing=asdict(self.forcing), grid=asdict(self.grid),
                 solve=asdict(self.solve), output=asdict(self.output))
        d["regime"]["alpha_degrees"] = math.degrees(self.regime.alpha)
        return d


SECTIONS = ("regime", "forcing", "grid", "solve", "output")


def _typed(cls, sec):
    """Dataclass instance from a config section, converting by the default's type."""
    out = {}
    for f in fields(cls):
        if f.name not in sec:
            continue
        raw = sec[f.name]
        default = f.default_factory() if f.default is MISSING else f.default
        if isinstance(default, list):
            items = str(raw).replace(",", " ").split()
            out[f.name] = [float(t) for t in items] if default and isinstance(default[0], float) else items
        elif isinstance(default, bool):
            out[f.name] = str(raw).lower() in ("1", "true", "yes")
        elif isinstance(default, int):
            out[f.name] = int(raw)
        elif isinstance(default, float) or default is None:
            out[f.name] = float(raw)
        else:
            out[f.name] = raw
    return cls(**out)


def parse_config(text):
    cp = configparser.ConfigParser()
    cp.read_string(text)
    missing = [s for s in SECTIONS if not cp.has_section(s)]
    if missing:
        raise ConfigError(f"missing config sections: {', '.join(missing)}")
    params = R.from_section(cp["regime"])
    fsec = dict(cp["forcing"])
    forcing = _typed(ForcingRecipe, fsec)
    g = cp["grid"]
    grid = ModeGrid(float(g.get("Lx", 16.0)), float(g.get("Ly", 16.0)), int(g.get("Nx", 64)), int(g.get("Ny", 64)))
    solve = _typed(SolveSection, cp["solve"])
    if solve.dealias > 2 / 3 + 1e-12:
        raise ConfigError("dealias fraction must keep at most 2/3 of each axis")
    output = _typed(OutputSection, cp["output"])
    return RunConfig(params, forcing, grid, solve, output)


def load_config(path):
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except FileNotFoundError as exc:
        raise ConfigError(f"cannot read config {path}") from exc


def default_config(preset="reference", **over):
    """A ready RunConfig from a named regime preset (used by the figure and tests)."""
    p = R.preset(preset)
    rc = RunConfig(p, ForcingRecipe(), ModeGrid(16.0, 16.0, 64, 64), SolveSection(), OutputSection())
    for k, v in over.items():
        setattr(rc, k, v)
    return rc


EXAMPLE_CONFIG = """\
[regime]
epsilon = 0.01
a = 0.5
b = 0.0
d = 1.0
e = 2.0
alpha_degrees = -45
M = 2

[forcing]
amplitude = 1.0
x_kind = gaussian
wx = 2.0
y_kind = cos_gauss
k0 = 1.5707963267948966
wy = 3.0
gamma = 1.0

[grid]
Lx = 16
Ly = 16
Nx = 64
Ny = 64

[solve]
order = 1
K = 3
x3 = 0.0
z_samples = 0 0.1 0.5 1
n1 = 64
n2 = 96
x1_span = 8

[output]
directory = out
formats = txt json
"""


# ------------------------------------------------------------------ pipeline

def ingest(rc, scales, n):
    s = rc.solve
    return ingest_forcing(rc.forcing, rc.grid, scales, n=n, kappa=s.kappa, N_tail=s.N_tail,
                          dealias=s.dealias)


def solve_orders(forcing, scales, order=1, chunk=1024):
    modes = retained_modes(forcing)
    n = 3 if order == 1 else 1
    out = []
    for mc in modes.chunks(chunk):
        ctx = SolveContext(mc, scales, forcing=forcing, n=n)
        t0 = build_order0(ctx)
        terms = [t0]
        if order >= 1:
            terms.append(build_order1(t0, ctx))
        out.append((mc, ctx, terms))
    return out


def _stream_profiles(chunks, epsilon, order):
    for mc, ctx, terms in chunks:
        p = None
        for k, t in enumerate(terms[:order + 1]):
            q = t.total().p.scale(epsilon ** k)
            p = q if p is None else p + q
        yield mc, p


def slice_grid(scales, x3, n1, n2, x1_span, Ly):
    """x1 from the boundary point at this x3 over x1_span; x2 over the box."""
    s, c = scales.s, scales.c
    x1_wall = -c * x3 / (-s)
    x1 = x1_wall + np.linspace(0.0, x1_span, n1)
    x2 = np.linspace(-Ly, Ly, n2, endpoint=False)
    return x1, x2


def stream_slice(chunks, scales, epsilon, order, grid, x3, n1, n2, x1_span):
    """Real stream function psi = p0 + eps p1 on an (x1, x2) grid at fixed x3."""
    s, c = scales.s, scales.c
    x1, x2 = slice_grid(scales, x3, n1, n2, x1_span, grid.Ly)
    x = c * x1 + s * x3
    z = np.maximum(-s * x1 + c * x3, 0.0)
    w = grid.parseval_weight
    psi = np.zeros((n1, n2), dtype=complex)
    for mc, p in _stream_profiles(chunks, epsilon, order):
        vals = p(z) * np.exp(1j * np.outer(mc.xi_x, x))    # (M, n1)
        ey = np.exp(1j * np.outer(mc.xi_y, x2))             # (M, n2)
        psi += w * (vals.T @ ey)
    return x1, x2, psi


def write_slice(path, x3, x1, x2, psi):
    """Header then rows 'x1 x2 psi' (real part, t = 0)."""
    lines = [f"# x3={x3:.12g} nx={len(x1)} ny={len(x2)}"]
    for i, a in enumerate(x1):
        for j, b in enumerate(x2):
            lines.append(f"{a:.12e} {b:.12e} {psi[i, j].real:.12e}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_slice(path):
    with open(path) as fh:
        head = fh.readline().strip()
    meta = dict(kv.split("=") for kv in head.lstrip("# ").split())
    data = np.loadtxt(path, comments="#")
    nx, ny = int(meta["nx"]), int(meta["ny"])
    return float(meta["x3"]), data[:, 0].reshape(nx, ny)[:, 0], data[:, 1].reshape(nx, ny)[0], data[:, 2].reshape(nx, ny)


def coefficient_ledger(chunks):
    rows = []
    for mc, ctx, terms in chunks:
        for m in range(mc.M):
            row = [mc.xi_x[m], mc.xi_y[m]]
            for t in terms:
                c = t.coeffs["c"][m, :, 0]
                row += [c[0].real, c[0].imag, c[1].real, c[1].imag]
            rows.append(row)
    return np.array(rows)


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.floating, float)):
        return float(o) if math.isfinite(o) else str(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, R.FrequencyRegime):
        return o.value
    return o


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def manifest(rc, scales, extra=None):
    import scipy
    m = dict(config=rc.as_dict(), scales=scales.as_dict(),
             regime=R.classify_frequency(scales).value,
             thresholds=dict(theta_lo=scales.theta_lo, theta_hi=scales.theta_hi,
                             trace_tol=rc.solve.trace_tol, tail_exponent=rc.solve.N_tail,
                             dealias=rc.solve.dealias, singular_trace=1e-12, vertical_trace=1e-8,
                             hypothesis_ratio_max=0.5),
             versions=dict(slopegyre=__version__, numpy=np.__version__, scipy=scipy.__version__,
                           python=sys.version.split()[0]))
    if extra:
        m.update(extra)
    return m


def run_solve(rc, outdir, order=None):
    scales = rc.scales()
    order = rc.solve.order if order is None else order
    fo = ingest(rc, scales, 3)
    chunks = solve_orders(fo, scales, order, rc.solve.chunk)
    os.makedirs(outdir, exist_ok=True)
    files = []
    for x3 in rc.solve.x3:
        x1, x2, psi = stream_slice(chunks, scales, scales.epsilon, order, rc.grid, x3,
                                   rc.solve.n1, rc.solve.n2, rc.solve.x1_span)
        if not np.all(np.isfinite(psi)):
            raise GatedFailure("non-finite stream function samples")
        name = f"psi_x3_{x3:+.3f}.txt"
        write_slice(os.path.join(outdir, name), x3, x1, x2, psi)
        np.save(os.path.join(outdir, name.replace(".txt", "_complex.npy")), psi)
        files.append(name)
    led = coefficient_ledger(chunks)
    np.savetxt(os.path.join(outdir, "coefficients.txt"), led, fmt="%.12e",
               header="xi_x xi_y " + " ".join(f"Re_c1_{k} Im_c1_{k} Re_c2_{k} Im_c2_{k}" for k in range(order + 1)))
    vt = max((float(t[1].coeffs["vertical_trace"].max()) for t in (c[2] for c in chunks) if len(t) > 1), default=0.0)
    m = manifest(rc, scales, dict(command="solve", order=order, slices=files, forcing=fo.report,
                                  modes=int(sum(c[0].M for c in chunks)), max_vertical_trace=vt))
    write_json(os.path.join(outdir, "manifest.json"), m)
    return m


def run_cascade(rc, outdir, K=None):
    scales = rc.scales()
    K = rc.solve.K if K is None else K
    fo = ingest(rc, scales, jet_length(K))
    cfg = CascadeConfig(K=K, smoothness=rc.solve.smoothness, chunk=rc.solve.chunk, trace_tol=rc.solve.trace_tol)
    sol = assemble(fo, scales, cfg)
    bd = sol.boundary_defect()
    reps = [residual(sol, K=k).as_dict() for k in range(K + 1)]
    ratios = [reps[k]["total"] / reps[k - 1]["total"] if reps[k - 1]["total"] > 0 else None
              for k in range(1, K + 1)]
    rep = dict(command="cascade", K=K, ledger=ledger(sol), residuals=reps, residual_ratios=ratios,
               eps_beta=scales.epsilon * scales.beta, boundary_defect_max=float(bd.max()),
               forcing=fo.report, runtime_seconds=sol.runtime)
    os.makedirs(outdir, exist_ok=True)
    write_json(os.path.join(outdir, "cascade.json"), rep)
    lines = [f"cascade K={K} eps={scales.epsilon:g} beta={scales.beta:.4g} eps*beta={scales.epsilon * scales.beta:.4g}",
             f"boundary defect max {bd.max():.3e}"]
    for r in reps:
        lines.append(f"K={r['K']}: residual {r['total']:.4e}  per origin {json.dumps(_jsonable(r['per_origin']))}")
    for k, q in enumerate(ratios, 1):
        lines.append(f"ratio K={k}/K={k - 1}: {q:.4e}" if q is not None else f"ratio K={k}: n/a")
    with open(os.path.join(outdir, "cascade_summary.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    write_json(os.path.join(outdir, "manifest.json"), manifest(rc, scales, dict(command="cascade", K=K)))
    if bd.max() > rc.solve.trace_tol:
        raise GatedFailure(f"boundary trace {bd.max():.3e} above {rc.solve.trace_tol}")
    return rep


# ------------------------------------------------------------------ figure

FLAT_ALPHA = -math.radians(85.0)


def figure_configs(rc=None):
    """Sloped run and a near-vertical-wall reference sharing forcing, grid and exponents."""
    rc = rc or default_config("reference")
    if rc.forcing.y_kind in ("sin_exp",):
        rc.forcing = ForcingRecipe(amplitude=1.0, x_kind="gaussian", wx=2.0, y_kind="cos_gauss", wy=3.0)
    base = rc.regime.as_dict()
    flat = RunConfig(R.Parameters(**{**base, "alpha": FLAT_ALPHA}), rc.forcing, rc.grid, rc.solve, rc.output)
    return flat, rc


def main_zero_crossing(x1, x2, psi, offset_index):
    """x2 of the zero of psi(x1[i], .) closest to x2 = 0 in the column offset_index."""
    col = psi[offset_index].real
    sgn = np.sign(col)
    idx = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
    if idx.size == 0:
        return None
    roots = x2[idx] - col[idx] * (x2[idx + 1] - x2[idx]) / (col[idx + 1] - col[idx])
    return float(roots[np.argmin(np.abs(roots))])


def zero_isolines(x1, x2, psi):
    import contourpy
    a = psi.real
    if not np.any(a):
        return []
    gen = contourpy.contour_generator(x2, x1, a)
    # contourpy returns (x2, x1) pairs for this layout
    return [ln[:, ::-1] for ln in gen.lines(0.0)]


def count_gyres(psi, frac=0.3):
    """Connected regions of each sign with |psi| above frac * max|psi|."""
    from scipy import ndimage
    a = psi.real
    mx = np.abs(a).max()
    if mx == 0:
        return 0, 0
    pos = ndimage.label(a > frac * mx)[1]
    neg = ndimage.label(a < -frac * mx)[1]
    return pos, neg


def emit_separation_figure(outdir, rc=None, runs=None, image=True):
    """Two-panel stream-function comparison with the main zero-isoline of each panel."""
    flat, sloped = figure_configs(rc)
    os.makedirs(outdir, exist_ok=True)
    panels = {}
    for name, cfg in (("flat", flat), ("sloped", sloped)):
        sub = os.path.join(outdir, name)
        if runs is not None:
            if name not in runs:
                raise MissingRun(name)
            sub = runs[name]
        else:
            run_solve(cfg, sub)
        path = os.path.join(sub, f"psi_x3_{cfg.solve.x3[0]:+.3f}.txt")
        if not os.path.exists(path):
            raise MissingRun(path)
        x3, x1, x2, psi = read_slice(path)
        sc = cfg.scales()
        # column a few layer widths off the wall (in x1 units)
        width = 1.0 / (sc.munk_scale * abs(sc.s))
        col = int(np.clip(np.searchsorted(x1, x1[0] + 3 * width), 1, len(x1) - 1))
        cross = main_zero_crossing(x1, x2, psi, col)
        lines = zero_isolines(x1, x2, psi)
        pos, neg = count_gyres(psi)
        np.savetxt(os.path.join(outdir, f"{name}_psi.txt"), psi, fmt="%.10e",
                   header=f"x1 from {x1[0]:.6g} to {x1[-1]:.6g} ({len(x1)}), x2 from {x2[0]:.6g} to {x2[-1]:.6g} ({len(x2)})")
        with open(os.path.join(outdir, f"{name}_isolines.txt"), "w") as fh:
            for i, ln in enumerate(lines):
                fh.write(f"# isoline {i}\n")
                for a, b in ln:
                    fh.write(f"{a:.8e} {b:.8e}\n")
        panels[name] = dict(alpha_degrees=math.degrees(cfg.regime.alpha), crossing_x2=cross,
                            column_x1=float(x1[col]), gyres_positive=pos, gyres_negative=neg,
                            isolines=len(lines), x1=x1, x2=x2, psi=psi)
    south = None
    if panels["flat"]["crossing_x2"] is not None and panels["sloped"]["crossing_x2"] is not None:
        south = panels["sloped"]["crossing_x2"] < panels["flat"]["crossing_x2"]
    summary = {k: {kk: vv for kk, vv in v.items() if kk not in ("x1", "x2", "psi")} for k, v in panels.items()}
    summary.update(sloped_crossing_south=south, preset_note="parameters are our own choice, not published values")
    write_json(os.path.join(outdir, "figure.json"), summary)
    if image:
        _plot(panels, os.path.join(outdir, "separation.png"))
    return summary


def _plot(panels, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, axes = plt.subplots(1, 2, figsize=(10, 4.5))
    for ax, (name, p) in zip(axes, panels.items()):
        a = p["psi"].real
        lim = np.abs(a).max() or 1.0
        ax.contourf(p["x1"], p["x2"], a.T, levels=21, cmap="RdBu_r", vmin=-lim, vmax=lim)
        ax.contour(p["x1"], p["x2"], a.T, levels=[0.0], colors="k", linewidths=1.2)
        ax.set_title(f"{name} (alpha = {p['alpha_degrees']:.0f} deg)")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


# ------------------------------------------------------------------ diagnostics subcommands

def run_check(rc):
    sc = rc.scales()
    return dict(scales=sc.as_dict(), regime=R.classify_frequency(sc).value,
                eps_beta=sc.epsilon * sc.beta, hypothesis_ratio=sc.nu_3 / (sc.nu_h ** (4 / 3) * sc.beta ** (-1 / 3)))


def run_roots(rc, seed=0, draws=100):
    from .munk_roots import quartic_roots, match_references
    from .spectral_field import ModeSet
    sc = rc.scales()
    rng = np.random.default_rng(seed)
    xx = rng.uniform(-3, 3, draws)
    yy = rng.uniform(0.1, 3, draws) * rng.choice([-1, 1], draws)
    rs = quartic_roots(ModeSet(xx, yy, np.arange(draws)), sc.omega, sc)
    gaps = match_references(rs, rs.asymptotic_refs)
    return dict(regime=rs.regime.value, max_residual=float(rs.residual.max()),
                max_reference_gap=float(gaps.max()), min_separation=float(rs.separation.min()),
                xi=np.stack([xx, yy], 1), mu_plus=rs.mu_plus[..., 0], mu_minus=rs.mu_minus[..., 0])


def run_green(rc, seed=0, draws=20):
    from .green_kernel import build_kernel
    from .munk_roots import quartic_roots
    from .spectral_field import ModeSet
    sc = rc.scales()
    rng = np.random.default_rng(seed)
    xx = rng.uniform(-3, 3, draws)
    yy = rng.uniform(0.1, 3, draws)
    k = build_kernel(quartic_roots(ModeSet(xx, yy, np.arange(draws)), sc.omega, sc, refs=False), sc)
    j = k.jumps()
    return dict(C_plus=k.C_plus[..., 0], C_minus=k.C_minus[..., 0], lagrange_gap=k.lagrange_gap,
                jump3_times_nu_s2=j[:, 3] * sc.nu_eff * sc.s ** 2, continuity=np.abs(j[:, :3]).max(axis=1))


def run_ekman(rc, xi=(0.5, 0.5)):
    from .ekman_layer import layer_roots, eigenvector_lambda1, hydrostatic_defect
    sc = rc.scales()
    mode, lam2 = layer_roots(np.asarray(xi), sc.omega, sc, check=False)
    mode = eigenvector_lambda1(mode, np.asarray(xi), sc.omega, sc)
    return dict(lambda1=complex(mode.lam), lambda2=complex(lam2), U=mode.U,
                hydrostatic_defect=hydrostatic_defect(mode, np.asarray(xi), sc),
                global_velocity=mode.global_velocity(sc))


# ------------------------------------------------------------------ entry point

def build_parser():
    ap = argparse.ArgumentParser(prog="slopegyre", description="Sloped-boundary gyre asymptotics")
    ap.add_argument("--config", help="INI config file (sections regime, forcing, grid, solve, output)")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized diagnostics")
    ap.add_argument("--threads", type=int, default=None, help="BLAS threads")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("check", help="validate the regime and print derived scales")
    r = sub.add_parser("roots", help="Munk quartic roots on random modes")
    r.add_argument("--draws", type=int, default=100)
    sub.add_parser("green", help="Green kernel coefficients and jump checks")
    e = sub.add_parser("ekman", help="Ekman layer roots and eigenvector")
    e.add_argument("--xi", type=float, nargs=2, default=(0.5, 0.5))
    s = sub.add_parser("solve", help="order-0/1 stream-function slices")
    s.add_argument("--order", type=int, choices=(0, 1), default=None)
    c = sub.add_parser("cascade", help="any-order construction and residual report")
    c.add_argument("--K", type=int, default=None)
    sub.add_parser("figure", help="flat vs sloped separation figure")
    sub.add_parser("example-config", help="print an example config")
    return ap


def _limit_threads(n):
    if n is None:
        return None
    try:
        from threadpoolctl import threadpool_limits
        return threadpool_limits(limits=n)
    except ImportError:
        return None


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "example-config":
        sys.stdout.write(EXAMPLE_CONFIG)
        return 0
    _limit_threads(args.threads)
    try:
        rc = load_config(args.config) if args.config else default_config()
        if args.out:
            rc.output.directory = args.out
        out = rc.output.directory
        if args.command == "check":
            res = run_check(rc)
        elif args.command == "roots":
            res = run_roots(rc, args.seed, args.draws)
        elif args.command == "green":
            res = run_green(rc, args.seed)
        elif args.command == "ekman":
            res = run_ekman(rc, args.xi)
        elif args.command == "solve":
            res = run_solve(rc, out, args.order)
        elif args.command == "cascade":
            res = run_cascade(rc, out, args.K)
        elif args.command == "figure":
            res = emit_separation_figure(out, rc if args.config else None)
        if args.command in ("check", "roots", "green", "ekman"):
            os.makedirs(out, exist_ok=True)
            write_json(os.path.join(out, f"{args.command}.json"), res)
        print(json.dumps(_jsonable(_brief(res)), indent=2, sort_keys=True))
        return 0
    except R.RegimeViolation as exc:
        print(f"regime.RegimeViolation: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, MissingRun, GatedFailure, DepthExhausted, ValueError, ArithmeticError) as exc:
        mod = type(exc).__module__.replace("slopegyre.", "")
        print(f"{mod}.{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def _brief(res):
    if not isinstance(res, dict):
        return res
    return {k: v for k, v in res.items()
            if not (isinstance(v, np.ndarray) and v.size > 8) and k not in ("ledger", "config")}
