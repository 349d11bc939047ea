"""On-disk formats: spectrum and report CSVs, binary grid and eigenvector containers, PNG heatmaps.

Grid container (``.tbg``)::

    8 bytes   magic b"TBGRID01"
    4 bytes   little-endian uint32, length H of the JSON header
    H bytes   UTF-8 JSON header: kind, N, R, n_q, n_p, j, i, excluded_count, ...
    8*n bytes float64 little-endian values, row-major (p rows, q fastest)
    ceil(n/8) excluded-cell bitmap, numpy.packbits order (big bit first)

Eigenvector blob (``.tbe``)::

    16 bytes  header: magic b"TBEV", uint32 N, uint32 count, uint32 precision (bytes per real part)
    right eigenvectors, ``count`` contiguous complex vectors of length N
    left eigenvectors, ``count`` contiguous complex row vectors of length N
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
import struct
from pathlib import Path

import numpy as np

from .repeller import Kind, PhaseDistribution
from .spectral import ResonanceSet
from .torus import PhaseGrid

GRID_MAGIC = b"TBGRID01"
EIGVEC_MAGIC = b"TBEV"

REPORT_COLUMNS = ("N", "R", "kind", "i", "j", "sigma", "mu", "mu_over_N", "excluded_fraction")
SPECTRUM_COLUMNS = ("index", "re_z", "im_z", "abs_z")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(x)
    return str(x)


def _write_csv(path: Path, columns, rows) -> Path:
    path = Path(path)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_bytes(buf.getvalue().encode())
    return path


def write_spectrum_csv(res: ResonanceSet, path) -> Path:
    z = res.eigenvalues
    rows = ((k + 1, float(v.real), float(v.imag), float(abs(v))) for k, v in enumerate(z))
    return _write_csv(path, SPECTRUM_COLUMNS, rows)


def read_spectrum_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([complex(float(r["re_z"]), float(r["im_z"])) for r in rows])


def write_report_csv(reports, path) -> Path:
    rows = (
        (r.N, float(r.R), r.kind, r.i, r.j, r.sigma, r.mu, r.mu_over_N, r.excluded_fraction)
        for r in reports
    )
    return _write_csv(path, REPORT_COLUMNS, rows)


def read_report_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_eigenvectors(res: ResonanceSet, path, precision: int = 8) -> Path:
    if precision not in (4, 8):
        raise ValueError("precision must be 4 or 8 bytes per real")
    dtype = np.dtype("<c16" if precision == 8 else "<c8")
    header = EIGVEC_MAGIC + struct.pack("<III", res.N, len(res), precision)
    body = (np.ascontiguousarray(res.right.T, dtype=dtype).tobytes()
            + np.ascontiguousarray(res.left, dtype=dtype).tobytes())
    Path(path).write_bytes(header + body)
    return Path(path)


def read_eigenvectors(path) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(right, left)`` with right vectors as columns and left vectors as rows."""
    raw = Path(path).read_bytes()
    if raw[:4] != EIGVEC_MAGIC:
        raise ValueError(f"{path}: not an eigenvector blob")
    N, count, precision = struct.unpack("<III", raw[4:16])
    dtype = np.dtype("<c16" if precision == 8 else "<c8")
    data = np.frombuffer(raw[16:], dtype=dtype)
    if data.size != 2 * N * count:
        raise ValueError(f"{path}: expected {2 * N * count} entries, found {data.size}")
    right = data[: N * count].reshape(count, N).T
    left = data[N * count:].reshape(count, N)
    return right, left


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (tuple, list)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Kind):
        return v.value
    return v


def write_grid(dist: PhaseDistribution, path) -> Path:
    grid = dist.grid
    header = {k: _jsonable(v) for k, v in dist.params.items()}
    header.update(kind=Kind(dist.kind).value, n_q=grid.n_q, n_p=grid.n_p, excluded_count=dist.excluded_count)
    hbytes = json.dumps(header, sort_keys=True).encode()
    mask = np.zeros(grid.shape, bool) if dist.excluded is None else dist.excluded
    payload = b"".join([
        GRID_MAGIC,
        struct.pack("<I", len(hbytes)),
        hbytes,
        np.ascontiguousarray(dist.values, dtype="<f8").tobytes(),
        np.packbits(mask.ravel()).tobytes(),
    ])
    Path(path).write_bytes(payload)
    return Path(path)


def read_grid(path) -> PhaseDistribution:
    raw = Path(path).read_bytes()
    if raw[:8] != GRID_MAGIC:
        raise ValueError(f"{path}: not a grid container")
    (hlen,) = struct.unpack("<I", raw[8:12])
    header = json.loads(raw[12:12 + hlen])
    grid = PhaseGrid(header.pop("n_q"), header.pop("n_p"))
    off = 12 + hlen
    n = grid.size
    values = np.frombuffer(raw[off:off + 8 * n], dtype="<f8").reshape(grid.shape).copy()
    bits = np.frombuffer(raw[off + 8 * n:], dtype=np.uint8)
    mask = np.unpackbits(bits)[:n].astype(bool).reshape(grid.shape)
    kind = Kind(header.pop("kind"))
    header.pop("excluded_count", None)
    return PhaseDistribution(grid, values, kind, header, mask if mask.any() else None)


def heatmap_rgba(values: np.ndarray, cmap: str = "jet") -> np.ndarray:
    """Blue-to-red color ramp over the field range, one pixel per cell, p increasing upwards."""
    from matplotlib import colormaps

    v = np.asarray(values, dtype=float)
    lo, hi = float(v.min()), float(v.max())
    t = (v - lo) / (hi - lo) if hi > lo else np.zeros_like(v)
    rgba = colormaps[cmap](t)
    return rgba[::-1]


def draw_circles(rgba: np.ndarray, grid: PhaseGrid, points, radius_cells: float = 3.0) -> np.ndarray:
    """White rings around torus points, in place on an image from :func:`heatmap_rgba`."""
    n_p, n_q = grid.shape
    kk, ii = np.mgrid[0:n_p, 0:n_q]
    for q, p in points:
        cq, cp = q * n_q - 0.5, p * n_p - 0.5
        dq = np.abs(ii - cq)
        dq = np.minimum(dq, n_q - dq)
        dp = np.abs(kk - cp)
        dp = np.minimum(dp, n_p - dp)
        r = np.hypot(dq, dp)
        ring = np.abs(r - radius_cells) < 0.75
        rgba[::-1][ring] = (1.0, 1.0, 1.0, 1.0)
    return rgba


def write_png(dist: PhaseDistribution, path, overlay=None, radius_cells: float = 3.0) -> Path:
    import matplotlib.image

    rgba = heatmap_rgba(dist.values)
    if overlay:
        draw_circles(rgba, dist.grid, overlay, radius_cells)
    matplotlib.image.imsave(Path(path), rgba, format="png")
    return Path(path)


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
