"""beta d1 (G*S) - S along the epsilon ladder: sup beyond 5 layer widths and at a fixed far depth."""
import argparse

import numpy as np

from slopegyre.green_kernel import build_kernel, convolve
from slopegyre.munk_roots import quartic_roots
from slopegyre.regime import preset, validate
from slopegyre.spectral_field import Profile


def defect(eps, xi, gamma):
    sc = validate(preset("lowfreq", eps)).replace(omega=0.0)
    rs = quartic_roots(xi, 0.0, sc, refs=False)
    psi = convolve(build_kernel(rs, sc), Profile.from_terms([(gamma, [1.0])]))
    mu = rs.mu_plus[0, :, 0].real.min()

    def d(z):
        z = np.atleast_1d(z)
        return sc.beta * (sc.c * 1j * xi[0] * psi(z) - sc.s * psi.dz()(z))[0] - np.exp(-gamma * z)

    z = 5 / mu + np.linspace(0, 40, 4000)
    return 5 / mu, np.abs(d(z)).max(), abs(d(20.0)[0])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--xi", type=float, nargs=2, default=(1.0, 1.0))
    ap.add_argument("--gamma", type=float, default=0.3)
    args = ap.parse_args()
    print("eps      5/Re(mu)   sup_defect   defect_at_z=20")
    for eps in (1e-2, 1e-3, 1e-4, 1e-5):
        z0, sup, far = defect(eps, tuple(args.xi), args.gamma)
        print(f"{eps:7.0e}  {z0:.4f}     {sup:.4e}   {far:.4e}")


if __name__ == "__main__":
    main()
