"""File formats and run manifests.

All label/matrix files are headerless CSV.  Draws files hold one partition
per row (n integer labels, any ids — they are canonicalized at load);
particles files are the same shape with L rows.  Float matrices are written
with repr-precision so a rerun with the same seed reproduces byte-identical
files.
"""

from __future__ import annotations

import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from .samples import SampleSet
from .summarize import ParticleSummary

SCHEMA_VERSION = 1
FLOAT_FMT = "%.17g"


class DataError(Exception):
    """Malformed or inconsistent input data."""


class UsageError(Exception):
    """Bad command line."""


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _loadtxt(path, dtype):
    source = sys.stdin if str(path) == "-" else path
    try:
        arr = np.loadtxt(source, delimiter=",", dtype=dtype, ndmin=2)
    except Exception as exc:  # numpy reports the offending row in the message
        raise DataError(f"cannot parse {path}: {exc}") from None
    if arr.size == 0:
        raise DataError(f"{path} is empty")
    return arr


def load_draws(path) -> SampleSet:
    """Read a draws CSV (T rows of n integer labels) into a SampleSet."""
    arr = _loadtxt(path, np.float64)
    bad = arr != np.floor(arr)
    if bad.any():
        row = int(np.argwhere(bad)[0, 0]) + 1
        raise DataError(f"{path}: non-integer label at row {row}")
    return SampleSet.from_labels(arr.astype(np.int64))


def load_data_matrix(path) -> np.ndarray:
    """Read an observations CSV (n rows of dims floats)."""
    return _loadtxt(path, np.float64)


def save_labels(path, rows: np.ndarray) -> None:
    np.savetxt(path, np.atleast_2d(rows), fmt="%d", delimiter=",")


def save_floats(path, arr: np.ndarray) -> None:
    np.savetxt(path, np.atleast_2d(arr), fmt=FLOAT_FMT, delimiter=",")


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifest(out_dir: Path, command: str, config: dict, seed,
                   inputs: dict[str, str], outputs: list[str],
                   started: float) -> None:
    from . import __version__

    write_json(out_dir / "manifest.json", {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": inputs,
        "outputs": sorted(outputs),
        "tool_version": __version__,
        "wall_clock_sec": round(time.monotonic() - started, 3),
    })


def read_manifest(out_dir) -> dict:
    path = Path(out_dir) / "manifest.json"
    if not path.exists():
        raise DataError(f"no manifest.json in {out_dir}")
    with open(path) as fh:
        return json.load(fh)


def write_summary_dir(out_dir: Path, summary: ParticleSummary, seed) -> list[str]:
    """particles.csv + assignments.csv + summary.json; returns file names."""
    save_labels(out_dir / "particles.csv",
                np.vstack([p.labels for p in summary.particles]))
    save_labels(out_dir / "assignments.csv", summary.assignments.reshape(-1, 1))
    write_json(out_dir / "summary.json", {
        "schema_version": SCHEMA_VERSION,
        "n": summary.particles[0].n,
        "T": int(summary.assignments.size),
        "L": summary.L,
        "weights": summary.weights.tolist(),
        "particle_evi": summary.particle_evi.tolist(),
        "wasserstein": summary.wasserstein,
        "cluster_counts": [p.k for p in summary.particles],
        "converged": summary.converged,
        "trace": list(summary.trace),
        "seed": seed,
    })
    return ["particles.csv", "assignments.csv", "summary.json"]


def load_summary_dir(summary_dir) -> tuple[ParticleSummary, dict]:
    """Rebuild a ParticleSummary from a summarize output directory."""
    summary_dir = Path(summary_dir)
    meta_path = summary_dir / "summary.json"
    if not meta_path.exists():
        raise DataError(f"no summary.json in {summary_dir}")
    with open(meta_path) as fh:
        meta = json.load(fh)
    particles_mat = _loadtxt(summary_dir / "particles.csv", np.int64)
    assignments = _loadtxt(summary_dir / "assignments.csv", np.int64).ravel()
    particle_set = SampleSet.from_labels(particles_mat)
    summary = ParticleSummary(
        particles=[particle_set.draw(i) for i in range(particle_set.T)],
        weights=np.asarray(meta["weights"], dtype=float),
        assignments=assignments,
        particle_evi=np.asarray(meta["particle_evi"], dtype=float),
        wasserstein=float(meta["wasserstein"]),
        trace=list(meta.get("trace", [])),
        converged=bool(meta.get("converged", False)),
    )
    if summary.L != len(summary.weights):
        raise DataError("summary.json does not match particles.csv")
    return summary, meta
