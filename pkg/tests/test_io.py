import json
import struct

import numpy as np
import pytest

from tribaker import io as tio
from tribaker.measures import MeasureReport
from tribaker.repeller import Kind, PhaseDistribution
from tribaker.torus import PhaseGrid

from conftest import phase_space, resonances


def test_spectrum_csv_round_trip(tmp_path):
    res = resonances(48, 0.1)
    path = tio.write_spectrum_csv(res, tmp_path / "s.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "index,re_z,im_z,abs_z"
    assert len(lines) == len(res) + 1
    assert np.array_equal(tio.read_spectrum_csv(path), res.eigenvalues)


@pytest.mark.parametrize("precision, tol", [(8, 0.0), (4, 1e-6)])
def test_eigenvector_blob_round_trip(tmp_path, precision, tol):
    res = resonances(27, 0.05)
    path = tio.write_eigenvectors(res, tmp_path / "v.tbe", precision)
    raw = path.read_bytes()
    assert raw[:4] == b"TBEV"
    assert struct.unpack("<III", raw[4:16]) == (27, len(res), precision)
    assert len(raw) == 16 + 2 * 27 * len(res) * 2 * precision
    right, left = tio.read_eigenvectors(path)
    assert np.abs(right - res.right).max() <= tol * np.abs(res.right).max()
    assert np.abs(left - res.left).max() <= tol * np.abs(res.left).max()


def test_eigenvector_blob_rejects_garbage(tmp_path):
    p = tmp_path / "x.tbe"
    p.write_bytes(b"NOPE" + bytes(12))
    with pytest.raises(ValueError):
        tio.read_eigenvectors(p)
    with pytest.raises(ValueError):
        tio.write_eigenvectors(resonances(27, 1.0), p, precision=2)


def test_grid_container_round_trip(tmp_path):
    res = resonances(96, 0.0)
    dist = phase_space(96, 64).scaled_lr(res, 10, 32)
    assert dist.excluded_count > 0
    path = tio.write_grid(dist, tmp_path / "g.tbg")
    raw = path.read_bytes()
    assert raw[:8] == b"TBGRID01"
    (hlen,) = struct.unpack("<I", raw[8:12])
    header = json.loads(raw[12:12 + hlen])
    assert header["kind"] == "ScaledLR" and header["n_q"] == 64 and header["n_p"] == 64
    assert header["excluded_count"] == dist.excluded_count and header["i"] == 10 and header["j"] == 32
    back = tio.read_grid(path)
    assert back.kind is Kind.SCALED_LR
    assert np.array_equal(back.values, dist.values)
    assert np.array_equal(back.excluded, dist.excluded)
    assert back.params["N"] == 96


def test_grid_container_rectangular_without_mask(tmp_path):
    g = PhaseGrid(5, 3)
    d = PhaseDistribution(g, np.arange(15.0).reshape(3, 5), Kind.HUSIMI_R, dict(N=9))
    back = tio.read_grid(tio.write_grid(d, tmp_path / "r.tbg"))
    assert back.grid == g and back.excluded is None
    assert np.array_equal(back.values, d.values)
    bad = tmp_path / "bad.tbg"
    bad.write_bytes(b"garbage!")
    with pytest.raises(ValueError):
        tio.read_grid(bad)


def test_report_csv_columns_and_nan(tmp_path):
    reports = [
        MeasureReport(48, 0.1, "ScaledLR", 6, 32, 0.25, 7.5, 0.0),
        MeasureReport(48, 0.0, "ScaledLR", 6, 32, float("nan"), float("nan"), float("nan")),
        MeasureReport(48, 0.1, "Repeller", None, 32, None, 3.0),
    ]
    path = tio.write_report_csv(reports, tmp_path / "r.csv")
    rows = tio.read_report_csv(path)
    assert tuple(rows[0]) == tio.REPORT_COLUMNS
    assert float(rows[0]["mu_over_N"]) == 7.5 / 48
    assert rows[1]["sigma"] == "nan"
    assert rows[2]["i"] == "" and rows[2]["sigma"] == ""


def test_heatmap_orientation_and_colors():
    v = np.zeros((4, 6))
    v[3, 0] = 1.0  # highest p row
    rgba = tio.heatmap_rgba(v)
    assert rgba.shape == (4, 6, 4)
    top_left = rgba[0, 0]
    assert top_left[0] > top_left[2]  # red at the maximum
    assert rgba[-1, -1][2] > rgba[-1, -1][0]  # blue at the minimum


def test_png_matches_grid_dims_and_rings(tmp_path):
    import matplotlib.image

    dist = phase_space(27, 40).resonance_husimi(resonances(27, 1.0), 1)
    path = tio.write_png(dist, tmp_path / "h.png", overlay=[(0.5, 0.5)])
    img = matplotlib.image.imread(path)
    assert img.shape[:2] == (40, 40)
    white = np.all(img[..., :3] > 0.99, axis=-1)
    rows, cols = np.nonzero(white)
    assert len(rows) > 0
    assert abs(rows.mean() - 19.5) < 1 and abs(cols.mean() - 19.5) < 1


def test_sha256_detects_change(tmp_path):
    p = tmp_path / "f"
    p.write_bytes(b"abc")
    h = tio.sha256(p)
    assert h == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    p.write_bytes(b"abd")
    assert tio.sha256(p) != h
