"""Figure builders over parsed run artifacts.

All rendering is headless and deterministic: fixed figure geometry, fixed
metadata, no timestamps.  Zero drift is clamped to machine epsilon so the
log axes stay finite on runs whose conserved quantities never move.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .artifacts import (
    ArtifactError,
    load_conservation,
    load_delta_scan,
    load_dispersion,
    load_kernel_table,
    load_spectrum,
)

EPS = float(np.finfo(float).eps)
_METADATA = {"Software": "surfplots"}


def _save(fig, out_dir, name: str) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    fig.savefig(path, dpi=150, metadata=_METADATA)
    plt.close(fig)
    return path


def _drift(values: np.ndarray) -> np.ndarray:
    return np.maximum(np.abs(values - values[0]), EPS)


def plot_conservation(run_dir, second_run=None, out_dir=".") -> list:
    """Log-scale drift of M and T against slow time.

    With a companion run at a different step size the figure overlays the
    first run's M drift scaled by (dt2/dt1)^4, which is where the second
    curve lands when the integrator is fourth order.
    """
    art = load_conservation(run_dir)
    cons = art.table("conservation")
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.semilogy(cons["s"], _drift(cons["M"]), label="|M(s) - M(0)|")
    ax.semilogy(cons["s"], _drift(cons["T"]), label="|T(s) - T(0)|")

    if second_run is not None:
        other = load_conservation(second_run)
        dt1 = art.summary.get("dt")
        dt2 = other.summary.get("dt")
        if dt1 is None or dt2 is None:
            raise ArtifactError(
                "the two-run overlay needs 'dt' in both summary files")
        ocons = other.table("conservation")
        ax.semilogy(ocons["s"], _drift(ocons["M"]),
                    label=f"|M drift|, dt={dt2:g}")
        ref = np.maximum(_drift(cons["M"]) * (dt2 / dt1) ** 4, EPS)
        ax.semilogy(cons["s"], ref, "--", color="0.4",
                    label="dt^4 reference")

    ax.set_xlabel("s")
    ax.set_ylabel("drift")
    ax.legend(loc="best")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    return [_save(fig, out_dir, "conservation.png")]


def plot_spectrum(run_dir, out_dir=".") -> list:
    art = load_spectrum(run_dir)
    spec = art.table("spectrum")
    mag = np.maximum(np.hypot(spec["re_w"], spec["im_w"]), EPS)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.semilogy(spec["k"], mag, marker="o", markersize=3, linewidth=0.8)
    ax.set_xlabel("k")
    ax.set_ylabel("|w_hat(k)|")
    label = art.summary.get("form")
    if label is not None:
        ax.set_title(f"final spectrum, form {label}")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    return [_save(fig, out_dir, "spectrum.png")]


def plot_delta_scan(run_dir, out_dir=".") -> list:
    # the dip of |Delta| along the scan marks the surface-wave frequency
    art = load_delta_scan(run_dir)
    scan = art.table("delta_scan")
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.semilogy(scan["tau"], np.maximum(scan["abs_delta"], EPS))
    dip = float(scan["tau"][int(np.argmin(scan["abs_delta"]))])
    ax.axvline(dip, linestyle="--", color="0.4", linewidth=1.0)
    ax.set_xlabel("tau")
    ax.set_ylabel("|Delta(tau)|")
    ax.set_title(f"scan minimum at tau = {dip:.6g}")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    return [_save(fig, out_dir, "delta_scan.png")]


def plot_dispersion_line(run_dir, out_dir=".") -> list:
    # tau is degree-1 homogeneous in eta, so the curve is a ray from the
    # origin; the report's single slope fixes it
    art = load_dispersion(run_dir)
    slope = float(art.summary["tau_over_eta"])
    eta = np.linspace(0.0, 2.0, 50)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(eta, slope * eta)
    ax.set_xlabel("|eta|")
    ax.set_ylabel("tau")
    route = art.summary.get("route", "")
    ax.set_title(f"{route}: tau/|eta| = {slope:.8g}".strip(": "))
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return [_save(fig, out_dir, "dispersion.png")]


def plot_kernel_heatmap(run_dir, out_dir=".") -> list:
    """Modulus and argument of q over the (k, l) grid.

    The three dashed lines are the sector boundaries k = 0, l = 0 and
    k + l = 0, where the kernel is undefined; the sampling grid is offset
    so no node sits on them.
    """
    art = load_kernel_table(run_dir)
    tab = art.table("kernel_table")
    ks = np.unique(tab["k"])
    ls = np.unique(tab["l"])
    grid = np.full((len(ls), len(ks)), np.nan, dtype=complex)
    i = np.searchsorted(ks, tab["k"])
    j = np.searchsorted(ls, tab["l"])
    grid[j, i] = tab["re_q"] + 1j * tab["im_q"]
    if np.isnan(grid).any():
        raise ArtifactError(
            f"{art.run_dir}: kernel table does not fill a rectangular grid")

    fig, axes = plt.subplots(1, 2, figsize=(10.4, 4.4))
    panels = ((np.abs(grid), "|q|", "viridis", None),
              (np.angle(grid), "arg q", "twilight", (-np.pi, np.pi)))
    for ax, (vals, title, cmap, lim) in zip(axes, panels):
        kwargs = {} if lim is None else {"vmin": lim[0], "vmax": lim[1]}
        im = ax.pcolormesh(ks, ls, vals, shading="nearest", cmap=cmap,
                           **kwargs)
        fig.colorbar(im, ax=ax)
        ax.axhline(0.0, linestyle="--", color="w", linewidth=1.0)
        ax.axvline(0.0, linestyle="--", color="w", linewidth=1.0)
        span = max(abs(ks[0]), abs(ks[-1]), abs(ls[0]), abs(ls[-1]))
        ax.plot([-span, span], [span, -span], "--", color="w", linewidth=1.0)
        ax.set_xlim(ks[0], ks[-1])
        ax.set_ylim(ls[0], ls[-1])
        ax.set_xlabel("k")
        ax.set_ylabel("l")
        ax.set_title(title)
    name = art.summary.get("kernel", {}).get("name")
    if name:
        fig.suptitle(f"pair kernel {name!r}")
    fig.tight_layout()
    return [_save(fig, out_dir, "kernel_table.png")]
