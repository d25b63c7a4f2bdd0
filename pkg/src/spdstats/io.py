"""Matrix CSV files and the JSON manifest tying them to group/site labels.

Matrix files hold p rows of p comma-separated decimals, no header, written
at 17 significant digits so float64 round-trips losslessly. The manifest is
{"matrix_format": "csv", "entries": [{"path", "group", "site"}]} with paths
resolved relative to the manifest's directory. Readers symmetrize (A+A^T)/2
under a relative asymmetry tolerance of 1e-8.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import ValidationError

ASYMMETRY_TOL = 1e-8


@dataclass
class ManifestEntry:
    path: str
    group: str
    site: Optional[str] = None


def write_matrix(path, a) -> None:
    np.savetxt(path, np.asarray(a, dtype=np.float64), delimiter=",", fmt="%.17g")


def read_matrix(path) -> np.ndarray:
    try:
        a = np.loadtxt(path, delimiter=",", ndmin=2)
    except OSError as exc:
        raise ValidationError(f"cannot read matrix file {path}: {exc}") from exc
    except ValueError as exc:
        raise ValidationError(f"malformed matrix file {path}: {exc}") from exc
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{path}: expected a square matrix, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{path}: matrix entries must be finite")
    asym = np.linalg.norm(a - a.T)
    if asym > ASYMMETRY_TOL * max(1.0, np.linalg.norm(a)):
        raise ValidationError(
            f"{path}: matrix is asymmetric beyond tolerance "
            f"(relative asymmetry {asym / max(1.0, np.linalg.norm(a)):.3e})"
        )
    return (a + a.T) / 2.0


def write_manifest(directory, entries: List[ManifestEntry],
                   name: str = "manifest.json") -> str:
    payload = {
        "matrix_format": "csv",
        "entries": [
            {"path": e.path, "group": e.group, "site": e.site} for e in entries
        ],
    }
    path = os.path.join(directory, name)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return path


def load_manifest(path):
    """Parse a manifest and its matrices.

    Returns (stack, groups, sites, entries) with ``stack`` shaped (N, p, p),
    symmetrized but not yet SPD-validated (sample constructors do that).
    """
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"manifest {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("matrix_format") != "csv":
        raise ValidationError(f"manifest {path}: matrix_format must be 'csv'")
    raw = payload.get("entries")
    if not isinstance(raw, list) or len(raw) == 0:
        raise ValidationError(f"manifest {path}: entries must be a nonempty list")
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict) or "path" not in item or "group" not in item:
            raise ValidationError(
                f"manifest {path}: entry {i} needs 'path' and 'group'"
            )
        entries.append(
            ManifestEntry(
                path=str(item["path"]),
                group=str(item["group"]),
                site=None if item.get("site") is None else str(item["site"]),
            )
        )
    mats = []
    for e in entries:
        full = e.path if os.path.isabs(e.path) else os.path.join(base, e.path)
        mats.append(read_matrix(full))
    dims = {m.shape for m in mats}
    if len(dims) != 1:
        raise ValidationError(
            f"manifest {path}: matrices must share one dimension, got {sorted(dims)}"
        )
    stack = np.stack(mats)
    groups = [e.group for e in entries]
    sites = [e.site for e in entries]
    return stack, groups, sites, entries
