# Sweep the left density across the metastable branch of a van der Waals
# fluid and tabulate the front data: partner density, mass flux, surface
# frequency, and the kernel constant gamma.  Densities where the solver
# refuses are reported with the reason instead of a row of numbers.

import argparse

import numpy as np

from surfamp.phase_boundary import phase_boundary_pipeline, vdw_pressure_law


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--theta", type=float, default=0.85)
    ap.add_argument("--rho-min", type=float, default=0.26)
    ap.add_argument("--rho-max", type=float, default=0.32)
    ap.add_argument("--steps", type=int, default=13)
    ap.add_argument("--eta", type=float, default=1.0)
    args = ap.parse_args()

    law = vdw_pressure_law(args.theta)
    print(f"vdW theta={args.theta:g}, |eta|={args.eta:g}")
    print(f"{'rho_l':>8} {'rho_r':>10} {'j':>10} {'tau':>10} "
          f"{'Re gamma':>12} {'Im gamma':>12}")
    for rho_l in np.linspace(args.rho_min, args.rho_max, args.steps):
        try:
            d = phase_boundary_pipeline(law, float(rho_l), eta_norm=args.eta)
        except ValueError as err:
            print(f"{rho_l:8.4f}   -- {err}")
            continue
        g = d.gamma_kernel
        print(f"{rho_l:8.4f} {d.rho_r:10.6f} {d.j:10.6f} {d.tau:10.6f} "
              f"{g.real:12.4e} {g.imag:12.4e}")


if __name__ == "__main__":
    main()
