"""Command line front end: ``plots <command> <run_dir> [--out dir]``.

Run directories are only ever read; figures land in ``--out`` (default:
the current directory).  Exit code 0 on success, 1 when a run directory
is missing, malformed, or reports a failed computation.
"""

import argparse
import sys

from .artifacts import ArtifactError
from .render import (
    plot_conservation,
    plot_delta_scan,
    plot_dispersion_line,
    plot_kernel_heatmap,
    plot_spectrum,
)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots",
        description="Render figures from the CSV/JSON artifacts of a run "
                    "directory.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, second=False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("run_dir", help="directory holding the run artifacts")
        if second:
            p.add_argument("second_run", nargs="?", default=None,
                           help="companion run at another step size; adds "
                                "the dt^4 reference slope")
        p.add_argument("--out", default=".", help="output directory for "
                                                  "figures (default: .)")
        return p

    add("conservation", "drift of the conserved quantities vs slow time",
        second=True)
    add("spectrum", "final |w_hat(k)| on a log axis")
    add("delta-scan", "|Delta(tau)| along the scan grid")
    add("dispersion", "the frequency ray tau = (tau/|eta|) |eta|")
    add("heatmap", "modulus and argument of a tabulated pair kernel")
    return parser


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "conservation":
            written = plot_conservation(args.run_dir, args.second_run,
                                        out_dir=args.out)
        elif args.command == "spectrum":
            written = plot_spectrum(args.run_dir, out_dir=args.out)
        elif args.command == "delta-scan":
            written = plot_delta_scan(args.run_dir, out_dir=args.out)
        elif args.command == "dispersion":
            written = plot_dispersion_line(args.run_dir, out_dir=args.out)
        else:
            written = plot_kernel_heatmap(args.run_dir, out_dir=args.out)
    except (ArtifactError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
