"""Run artifacts on disk: binary fields, trace CSVs, digest manifests.

Field files are flat little-endian float64 in C (axis-major) order with
a JSON sidecar header carrying shape, boundary class and domain, so any
language can read them back bit-exactly.  Every run directory gets a
manifest listing the per-file sha256 digests; ``verify_manifest``
recomputes them.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, GridMismatch, InvalidParameter
from .grid import NODAL, BoxDomain, Grid, ScalarField, make_grid

ARTIFACT_VERSION = "0.1.0"
FORMAT_VERSION = 1
OUTPUT_ROOT_ENV = "SBPBOX_OUTPUT_ROOT"

__all__ = [
    "ARTIFACT_VERSION",
    "OUTPUT_ROOT_ENV",
    "output_root",
    "prepare_run_dir",
    "save_field",
    "load_field",
    "write_trace",
    "read_trace",
    "write_json",
    "read_json",
    "write_manifest",
    "read_manifest",
    "verify_manifest",
    "sha256_file",
]


def output_root(configured: str | None = None) -> Path:
    """Environment override first, then the configured directory."""
    env = os.environ.get(OUTPUT_ROOT_ENV)
    if env:
        return Path(env)
    return Path(configured or "runs")


def prepare_run_dir(root: Path, name: str) -> Path:
    path = Path(root) / name
    path.mkdir(parents=True, exist_ok=True)
    return path


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def save_field(directory: Path, name: str, f: ScalarField) -> list[str]:
    """Write <name>.bin and <name>.json; returns the relative file names."""
    directory = Path(directory)
    if f.boundary_class == NODAL:
        data, kind = f.values, "values"
    else:
        data, kind = f.coeffs, "coeffs"
    header = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "dtype": "<f8",
        "order": "C",
        "shape": list(data.shape),
        "boundary_class": f.boundary_class,
        "node_set": f.node_set,
        "lengths": list(f.grid.lengths),
        "n": f.grid.n,
    }
    (directory / f"{name}.bin").write_bytes(
        np.ascontiguousarray(data, dtype="<f8").tobytes())
    with open(directory / f"{name}.json", "w") as fh:
        json.dump(header, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return [f"{name}.bin", f"{name}.json"]


def load_field(directory: Path, name: str, grid: Grid | None = None) -> ScalarField:
    directory = Path(directory)
    with open(directory / f"{name}.json") as fh:
        header = json.load(fh)
    if header.get("format_version") != FORMAT_VERSION:
        raise InvalidParameter(
            f"field file {name} has format version {header.get('format_version')}, "
            f"expected {FORMAT_VERSION}")
    if grid is None:
        grid = make_grid(BoxDomain(tuple(header["lengths"])), header["n"])
    elif list(grid.lengths) != header["lengths"] or grid.n != header["n"]:
        raise GridMismatch(f"field file {name} was written for a different grid")
    data = np.frombuffer((directory / f"{name}.bin").read_bytes(), dtype="<f8")
    data = data.reshape(header["shape"]).astype(float)
    if header["kind"] == "coeffs":
        return ScalarField(grid, header["boundary_class"], coeffs=data)
    return ScalarField(grid, header["boundary_class"], values=data,
                       node_set=header["node_set"])


_TRACE_COLUMNS = ("iteration", "J", "grad_norm", "omega", "mu",
                  "c1_residual", "c2_residual")


def write_trace(path: Path, trace) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_TRACE_COLUMNS)
        for row in trace:
            writer.writerow([
                row.iteration, repr(row.J), repr(row.grad_norm), repr(row.omega),
                "" if row.mu is None else repr(row.mu),
                repr(row.c1_residual), repr(row.c2_residual),
            ])


def read_trace(path: Path) -> list[dict]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append({
                "iteration": int(row["iteration"]),
                "J": float(row["J"]),
                "grad_norm": float(row["grad_norm"]),
                "omega": float(row["omega"]),
                "mu": None if row["mu"] == "" else float(row["mu"]),
                "c1_residual": float(row["c1_residual"]),
                "c2_residual": float(row["c2_residual"]),
            })
    return out


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path: Path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_manifest(directory: Path, command: str, config_text: str,
                   seed: int, wall_time_s: float, verification: list,
                   extra: dict | None = None) -> dict:
    """Digest every artifact in the directory and record the run metadata."""
    directory = Path(directory)
    files = {}
    for path in sorted(directory.rglob("*")):
        if path.is_file() and path.name != "manifest.json":
            files[str(path.relative_to(directory))] = sha256_file(path)
    manifest = {
        "artifact_version": ARTIFACT_VERSION,
        "command": command,
        "config": config_text,
        "seed": seed,
        "wall_time_s": wall_time_s,
        "verification": verification,
        "files": files,
    }
    if extra:
        manifest.update(extra)
    write_json(directory / "manifest.json", manifest)
    return manifest


def read_manifest(directory: Path) -> dict:
    path = Path(directory) / "manifest.json"
    if not path.exists():
        raise ConfigError(f"no manifest.json under {directory}")
    return read_json(path)


def verify_manifest(directory: Path) -> list[str]:
    """Names whose current digest disagrees with the manifest (empty = clean)."""
    directory = Path(directory)
    manifest = read_manifest(directory)
    bad = []
    for name, digest in manifest["files"].items():
        path = directory / name
        if not path.exists() or sha256_file(path) != digest:
            bad.append(name)
    return bad
