"""Output files of a run and the manifest that pins them down."""
from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np
import shapely

from .errors import LimitShapeError, MeshMismatch
from .mesh import ScalarField, locate

logger = logging.getLogger(__name__)

MANIFEST = "manifest.txt"
SUMMARY = "summary.txt"

#16-bit graymaps use values 1..65535 inside the domain and 0 outside
PGM_MAX = 65535


def format_float(value: float) -> str:
    return f"{float(value):.17g}"


def format_cell(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return "none"
    if isinstance(value, (list, tuple)):
        return ", ".join(format_cell(v) for v in value)
    return str(value)


# Text encodings ----------------------------------------------------------------


def field_csv_text(field: ScalarField) -> str:
    lines = ["node_x,node_y,value"]
    for (x, y), v in zip(field.mesh.nodes, field.values):
        lines.append(f"{format_float(x)},{format_float(y)},{format_float(v)}")
    return "\n".join(lines) + "\n"


#inverse of field_csv_text: node coordinates and values
def parse_field_csv(text: str) -> Tuple[np.ndarray, np.ndarray]:
    rows = [line.strip() for line in text.splitlines() if line.strip()]
    if not rows or rows[0].replace(" ", "") != "node_x,node_y,value":
        raise MeshMismatch("field CSV must start with the header node_x,node_y,value")
    try:
        data = np.array([[float(cell) for cell in row.split(",")] for row in rows[1:]], dtype=float)
    except ValueError as exc:
        raise MeshMismatch(f"unreadable field CSV row: {exc}") from None
    if data.ndim != 2 or data.shape[1] != 3 or len(data) < 3:
        raise MeshMismatch("field CSV needs at least three rows of three columns")
    return data[:, :2], data[:, 2]


def rows_csv_text(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_cell(cell) for cell in row))
    return "\n".join(lines) + "\n"


def summary_text(metrics: Mapping[str, object]) -> str:
    return "".join(f"{key} = {format_cell(value)}\n" for key, value in metrics.items())


def parse_summary(text: str) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for line in text.splitlines():
        key, sep, value = line.partition(" = ")
        if sep:
            out[key] = value
    return out


#samples the field on a size x size raster over the mesh bounding box, top row = largest y
def pgm_bytes(field: ScalarField, size: int = 256) -> bytes:
    mesh = field.mesh
    lo, hi = mesh.nodes.min(axis=0), mesh.nodes.max(axis=0)
    xs = np.linspace(lo[0], hi[0], size)
    ys = np.linspace(hi[1], lo[1], size)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    gx, gy = gx.ravel(), gy.ravel()
    pixels = np.zeros(size * size, dtype=">u2")
    inside = np.flatnonzero(shapely.contains_xy(mesh.domain, gx, gy))
    vmin, vmax = float(field.values.min()), float(field.values.max())
    if len(inside):
        tri, bary = locate(mesh, np.column_stack([gx[inside], gy[inside]]))
        hit = tri >= 0
        values = np.einsum("ij,ij->i", field.values[mesh.triangles[tri[hit]]], bary[hit])
        span = vmax - vmin if vmax - vmin > 1e-12 * max(1.0, abs(vmin), abs(vmax)) else 1.0
        scaled = 1.0 + (PGM_MAX - 1.0) * (values - vmin) / span
        pixels[inside[hit]] = np.clip(np.rint(scaled), 1, PGM_MAX).astype(np.uint16)
    header = f"P5\n# scale min={format_float(vmin)} max={format_float(vmax)}\n{size} {size}\n{PGM_MAX}\n"
    return header.encode("ascii") + pixels.tobytes()


def digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


# Run directory -----------------------------------------------------------------


#writes every output of a run and records its digest for the manifest
class RunArtifacts:
    def __init__(self, out: Path) -> None:
        self.out = Path(out)
        try:
            self.out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise LimitShapeError(f"cannot create output directory {self.out}: {exc.strerror or exc}") from None
        self._entries: List[Tuple[str, str]] = []

    @property
    def files(self) -> List[str]:
        return [name for name, _ in self._entries]

    def write_bytes(self, name: str, data: bytes) -> Path:
        path = self.out / name
        path.write_bytes(data)
        self._entries = [entry for entry in self._entries if entry[0] != name]
        self._entries.append((name, digest(data)))
        logger.debug("wrote %s (%d bytes)", path, len(data))
        return path

    def write_text(self, name: str, text: str) -> Path:
        return self.write_bytes(name, text.encode("utf-8"))

    #sorted keys, two-space indent, trailing newline: stable across reruns
    def write_json(self, name: str, data: Mapping[str, object]) -> Path:
        return self.write_text(name, json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n")

    def write_field(self, name: str, field: ScalarField) -> Path:
        return self.write_text(name, field_csv_text(field))

    def write_rows(self, name: str, header: Sequence[str], rows: Iterable[Sequence[object]]) -> Path:
        return self.write_text(name, rows_csv_text(header, rows))

    def write_summary(self, metrics: Mapping[str, object]) -> Path:
        return self.write_text(SUMMARY, summary_text(metrics))

    def write_raster(self, name: str, field: ScalarField, size: int = 256) -> Path:
        return self.write_bytes(name, pgm_bytes(field, size))

    #manifest lists every emitted file in emission order; it does not list itself
    def finish(self) -> Path:
        text = "".join(f"{sha}  {name}\n" for name, sha in self._entries)
        path = self.out / MANIFEST
        path.write_text(text, encoding="utf-8")
        logger.info("wrote %d files to %s", len(self._entries), self.out)
        return path


def _json_default(value: object) -> object:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    raise TypeError(f"cannot serialise {type(value).__name__}")


#names of manifest entries whose content no longer matches the recorded digest
def verify_manifest(out: Path) -> List[str]:
    out = Path(out)
    bad: List[str] = []
    for line in (out / MANIFEST).read_text(encoding="utf-8").splitlines():
        sha, _, name = line.partition("  ")
        path = out / name
        if not path.exists() or digest(path.read_bytes()) != sha:
            bad.append(name)
    return bad


__all__ = [
    "MANIFEST",
    "PGM_MAX",
    "RunArtifacts",
    "SUMMARY",
    "digest",
    "field_csv_text",
    "format_cell",
    "format_float",
    "parse_field_csv",
    "parse_summary",
    "pgm_bytes",
    "rows_csv_text",
    "summary_text",
    "verify_manifest",
]
