"""Exact vs asymptotic Munk roots along the epsilon ladder, both frequency regimes."""
import argparse

import numpy as np

from slopegyre.munk_roots import match_references, midfreq_asymptotics, quartic_roots
from slopegyre.regime import preset, validate
from slopegyre.spectral_field import ModeSet


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--modes", type=int, default=50)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    m = args.modes
    modes = ModeSet(rng.uniform(-3, 3, m), rng.uniform(0.2, 3, m), np.arange(m))
    print("regime   eps      max_gap   min_separation")
    for eps in (1e-2, 1e-3, 1e-4):
        sc = validate(preset("lowfreq", eps))
        rs = quartic_roots(modes, sc.omega, sc)
        print(f"LowFreq  {eps:7.0e}  {match_references(rs, rs.asymptotic_refs).max():.4f}   {rs.separation.min():.3e}")
    # mid-frequency references hold only for small |xi|
    for eps in (1e-2, 1e-3, 1e-4):
        sc = validate(preset("midfreq", eps))
        gaps = []
        for _ in range(m):
            xi = (rng.choice([-1, 1]) * rng.uniform(0.2, 1) * 0.05, rng.uniform(0.2, 1) * 0.05)
            try:
                rs = quartic_roots(xi, sc.omega, sc, refs=False)
            except ValueError:
                continue
            gaps.append(match_references(rs, midfreq_asymptotics(xi, sc.omega, sc)).max())
        print(f"MidFreq  {eps:7.0e}  {max(gaps):.4f}   ({len(gaps)} modes)")


if __name__ == "__main__":
    main()
