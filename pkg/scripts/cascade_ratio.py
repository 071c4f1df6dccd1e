"""Residual of u_app truncated at K = 0, 1, 2 (or deeper) on a LowFreq grid; prints the ratio law."""
import argparse
import json
import time

from slopegyre.cascade import CascadeConfig, assemble, jet_length, ledger, residual
from slopegyre.cli_io import _jsonable, default_config, ingest
from slopegyre.spectral_field import ModeGrid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=128, help="grid points per axis")
    ap.add_argument("--L", type=float, default=16.0, help="box half-width")
    ap.add_argument("--K", type=int, default=2)
    ap.add_argument("--epsilon", type=float, default=1e-3)
    ap.add_argument("--json", help="write the full report here")
    args = ap.parse_args()
    t0 = time.perf_counter()
    rc = default_config("lowfreq")
    rc.regime = rc.regime.with_epsilon(args.epsilon)
    rc.grid = ModeGrid(args.L, args.L, args.N, args.N)
    sc = rc.scales()
    fo = ingest(rc, sc, jet_length(args.K))
    sol = assemble(fo, sc, CascadeConfig(K=args.K))
    reps = [residual(sol, K=k) for k in range(args.K + 1)]
    print(f"eps={sc.epsilon:g} beta={sc.beta:.4g} 2*eps*beta={2 * sc.epsilon * sc.beta:.4g} "
          f"modes={sol.index().size} boundary_defect={sol.boundary_defect().max():.2e}")
    for k, r in enumerate(reps):
        line = f"K={k} residual={r.total:.4e} (eps^{r.budget_exponent:.3f})"
        if k:
            line += f" ratio={r.total / reps[k - 1].total:.4f}"
        print(line)
    for row in ledger(sol):
        print(f"order {row['k']}: norms {json.dumps(_jsonable(row['norm']))} coeffs {json.dumps(_jsonable(row['coeff_max']))}")
    print(f"runtime {time.perf_counter() - t0:.1f} s")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(_jsonable(dict(residuals=[r.as_dict() for r in reps], ledger=ledger(sol))), fh, indent=2)


if __name__ == "__main__":
    main()
