"""Tabulate the one-sided limits q(1, h) and q(-1, h) as h walks toward
zero, for each built-in pair kernel.  The last column is the Richardson
estimate of the mismatch at h -> 0+; a kernel is safe for the reduced
evolution when that number vanishes."""

import argparse

from surfamp.kernels import (
    check_hunter_condition,
    hiz_kernel,
    phase_boundary_pair_kernel,
    reduce_to_q,
)


def table(name, q, hs):
    print(f"\n{name}")
    print(f"{'h':>10} {'q(1,h)':>24} {'q(-1,h)':>24} {'diff':>10}")
    for h in hs:
        a, b = q(1.0, h), q(-1.0, h)
        print(f"{h:10.1e} {a.real:11.6f}{a.imag:+11.6f}j "
              f"{b.real:11.6f}{b.imag:+11.6f}j {abs(a - b):10.2e}")
    cert = check_hunter_condition(q, ell=hs[-1])
    verdict = "pass" if cert.passed else "FAIL"
    print(f"extrapolated mismatch {cert.constant:.3e}  [{verdict}]")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma", type=complex, default=1 + 2j,
                    help="coefficient for the phase-boundary kernel")
    args = ap.parse_args()

    hs = [10.0 ** (-k) for k in range(1, 7)]
    table("reduced hiz", reduce_to_q(hiz_kernel()), hs)
    table(f"phase boundary, gamma={args.gamma}",
          phase_boundary_pair_kernel(args.gamma), hs)


if __name__ == "__main__":
    main()
