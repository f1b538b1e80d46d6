"""Readers for the CSV/JSON files a run directory publishes.

Everything here is read-only: a loader never writes into the run directory
and never mutates what it parsed.  Validation happens at load time so the
renderers can assume well-formed columns.
"""

import csv
import dataclasses
import json
from pathlib import Path

import numpy as np


class ArtifactError(ValueError):
    """A run directory is missing something or holds malformed data."""


@dataclasses.dataclass(frozen=True)
class RunArtifacts:
    """Parsed summary JSON plus named column tables from one run directory."""

    run_dir: Path
    summary: dict
    series: dict

    def table(self, name: str) -> dict:
        if name not in self.series:
            raise ArtifactError(f"{self.run_dir}: no table {name!r} loaded")
        return self.series[name]


def _read_json(path: Path) -> dict:
    if not path.is_file():
        raise ArtifactError(f"missing file: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as err:
        raise ArtifactError(f"{path}: not valid JSON ({err})") from None
    if not isinstance(obj, dict):
        raise ArtifactError(f"{path}: top level must be an object")
    return obj


def _read_table(path: Path, required: tuple) -> dict:
    if not path.is_file():
        raise ArtifactError(f"missing file: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ArtifactError(f"{path}: empty file") from None
        for col in required:
            if col not in header:
                raise ArtifactError(f"{path}: missing column {col!r} "
                                    f"(found {', '.join(header)})")
        rows = list(reader)
    if not rows:
        raise ArtifactError(f"{path}: table has a header but no rows")
    columns = {}
    for j, col in enumerate(header):
        vals = []
        for i, row in enumerate(rows):
            if len(row) != len(header):
                raise ArtifactError(
                    f"{path}: row {i + 2} has {len(row)} cells, "
                    f"expected {len(header)}")
            try:
                vals.append(float(row[j]))
            except ValueError:
                raise ArtifactError(
                    f"{path}: bad numeric cell {row[j]!r} "
                    f"(row {i + 2}, column {col!r})") from None
        columns[col] = np.array(vals)
    return columns


def _require_monotone(path: Path, columns: dict, key: str) -> None:
    t = columns[key]
    if len(t) > 1 and not np.all(np.diff(t) > 0):
        raise ArtifactError(f"{path}: column {key!r} must be strictly "
                            "increasing")


def load_conservation(run_dir) -> RunArtifacts:
    run_dir = Path(run_dir)
    path = run_dir / "conservation.csv"
    cols = _read_table(path, ("s", "M", "T", "L2", "Hsigma"))
    _require_monotone(path, cols, "s")
    summary_path = run_dir / "summary.json"
    summary = _read_json(summary_path) if summary_path.is_file() else {}
    return RunArtifacts(run_dir, summary, {"conservation": cols})


def load_spectrum(run_dir) -> RunArtifacts:
    run_dir = Path(run_dir)
    cols = _read_table(run_dir / "spectrum.csv", ("k", "re_w", "im_w"))
    summary_path = run_dir / "summary.json"
    summary = _read_json(summary_path) if summary_path.is_file() else {}
    return RunArtifacts(run_dir, summary, {"spectrum": cols})


def load_delta_scan(run_dir) -> RunArtifacts:
    run_dir = Path(run_dir)
    path = run_dir / "delta_scan.csv"
    cols = _read_table(path, ("tau", "re_delta", "im_delta", "abs_delta"))
    _require_monotone(path, cols, "tau")
    return RunArtifacts(run_dir, {}, {"delta_scan": cols})


def load_dispersion(run_dir) -> RunArtifacts:
    run_dir = Path(run_dir)
    report = _read_json(run_dir / "dispersion.json")
    if report.get("status") != "ok":
        raise ArtifactError(
            f"{run_dir}: dispersion report status is "
            f"{report.get('status')!r}, nothing to draw")
    if "tau_over_eta" not in report:
        raise ArtifactError(f"{run_dir}: dispersion report lacks "
                            "'tau_over_eta'")
    return RunArtifacts(run_dir, report, {})


def load_kernel_table(run_dir) -> RunArtifacts:
    run_dir = Path(run_dir)
    cols = _read_table(run_dir / "kernel_table.csv",
                       ("k", "l", "re_q", "im_q"))
    meta_path = run_dir / "table_meta.json"
    meta = _read_json(meta_path) if meta_path.is_file() else {}
    return RunArtifacts(run_dir, meta, {"kernel_table": cols})
