"""Snapshot files (CSV + PGM) and the per-run digest manifest."""
from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .grid import Grid

MANIFEST = "manifest.json"


def write_csv(values: np.ndarray, grid: Grid, path) -> Path:
    """``x,y,value`` (or ``x,value``) rows in row-major node order, 17 significant digits."""
    path = Path(path)
    coords = [c.ravel() for c in grid.coords()]
    header = ("x", "y")[: grid.dim] + ("value",)
    lines = [",".join(header)]
    flat = np.asarray(values, dtype=float).ravel()
    for i in range(flat.size):
        lines.append(",".join(f"{c[i]:.17g}" for c in coords) + f",{flat[i]:.17g}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path) -> np.ndarray:
    """Values column of a snapshot CSV, flat, in file order."""
    rows = Path(path).read_text().splitlines()[1:]
    return np.array([float(r.rsplit(",", 1)[1]) for r in rows])


def grayscale(values: np.ndarray) -> np.ndarray:
    """Affine map of [min, max] onto 0..255; constant fields become 128."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        return np.full(values.shape, 128, dtype=np.uint8)
    return np.rint(255.0 * (values - lo) / (hi - lo)).astype(np.uint8)


def write_pgm(values: np.ndarray, path) -> Path:
    """Binary 8-bit PGM; one pixel per node, rows are the first array axis."""
    path = Path(path)
    pixels = grayscale(values)
    height, width = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes(order="C"))
    return path


def write_snapshot(values: np.ndarray, grid: Grid, stem) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and ``<stem>.pgm``."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    try:
        return (
            write_csv(values, grid, stem.with_name(stem.name + ".csv")),
            write_pgm(values, stem.with_name(stem.name + ".pgm")),
        )
    except OSError as exc:
        raise OSError(f"could not write snapshot {stem}: {exc}") from exc


def snapshot_stem(directory, name: str, t: float) -> Path:
    return Path(directory) / f"{name}_t{t:010.4f}"


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir) -> Path:
    """List every artifact under ``out_dir`` with its SHA-256, sorted by path."""
    out_dir = Path(out_dir)
    entries = []
    for path in sorted(out_dir.rglob("*")):
        if path.is_file() and path.name != MANIFEST:
            entries.append({"path": path.relative_to(out_dir).as_posix(), "sha256": sha256(path)})
    target = out_dir / MANIFEST
    with open(target, "w") as fh:
        json.dump({"artifacts": entries}, fh, indent=1, sort_keys=True)
        fh.write("\n")
        fh.flush()
        os.fsync(fh.fileno())
    return target
