"""Flow color maps and jitter-curve plots rendered with Pillow."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .geometry import COL, ROW
from .jitter import MeasurementErrorModel, noisy_from_subdivisions
from .sidecar import DIRECTIONS, Sidecar


def hsv_to_rgb(h, s, v) -> np.ndarray:
    """Vectorized HSV -> RGB, all channels in [0, 1]."""
    h = np.asarray(h, dtype=np.float64) % 1.0
    s = np.asarray(s, dtype=np.float64)
    v = np.broadcast_to(np.asarray(v, dtype=np.float64), h.shape)
    i = np.floor(h * 6.0).astype(int) % 6
    f = h * 6.0 - np.floor(h * 6.0)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    choices = [
        (v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q),
    ]
    rgb = np.zeros(h.shape + (3,))
    for k, (r, g, b) in enumerate(choices):
        sel = i == k
        rgb[sel, 0] = r[sel]
        rgb[sel, 1] = g[sel]
        rgb[sel, 2] = b[sel]
    return rgb


def flow_to_rgb(flow) -> np.ndarray:
    """Color-wheel encoding: hue is direction, saturation is magnitude / max.

    Direction is measured in image axes (column offset = x, row offset = y).
    A zero field renders white.  Returns uint8 ``(H, W, 3)``.
    """
    flow = np.asarray(flow, dtype=np.float64)
    du = flow[..., COL]
    dv = flow[..., ROW]
    mag = np.hypot(du, dv)
    peak = mag.max(initial=0.0)
    sat = mag / peak if peak > 0 else np.zeros_like(mag)
    hue = (np.arctan2(dv, du) % (2 * np.pi)) / (2 * np.pi)
    rgb = hsv_to_rgb(hue, np.clip(sat, 0.0, 1.0), 1.0)
    return np.floor(rgb * 255.0 + 0.5).astype(np.uint8)


def write_flow_png(path, flow) -> Path:
    Image.fromarray(flow_to_rgb(flow)).save(path, format="PNG")
    return Path(path)


# ------------------------------------------------------------------ curves

SERIES = ("ideal", "cdsm_ideal", "noisy", "cdsm_noisy")


def curve_series(side: Sidecar, model: MeasurementErrorModel) -> dict[str, dict[str, np.ndarray]]:
    """Ideal, averaged, noisy and averaged-noisy curves for each direction.

    The sidecar rows are the M subdivision curves; row 0 is plain sampling.
    Noise for direction ``d`` uses streams ``(d, m)``.
    """
    out = {}
    for d, name in enumerate(DIRECTIONS):
        sub = side.roll if d == 0 else side.pitch
        if sub is None:
            continue
        noisy = noisy_from_subdivisions(sub, model, (d,))
        out[name] = {
            "ideal": sub[0].copy(),
            "cdsm_ideal": sub.mean(axis=0) if len(sub) > 1 else sub[0].copy(),
            "noisy": noisy[0],
            "cdsm_noisy": noisy.mean(axis=0) if len(noisy) > 1 else noisy[0],
        }
    return out


def write_series_csv(path, series: dict) -> Path:
    header = ["column"] + [f"{d}_{s}" for d in series for s in SERIES]
    width = len(next(iter(series.values()))["ideal"])
    cols = [series[d][s].tolist() for d in series for s in SERIES]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k in range(width):
            w.writerow([k + 1] + [repr(c[k]) for c in cols])
    return Path(path)


_COLORS = {"ideal": (31, 119, 180), "cdsm_ideal": (44, 160, 44), "noisy": (214, 39, 40),
           "cdsm_noisy": (148, 103, 189)}


def render_curve_plot(curves: dict[str, np.ndarray], size=(960, 480), title: str = "") -> Image.Image:
    """Minimal line plot: frame, zero line, y-range labels, one polyline per series, legend."""
    W, H = size
    left, right, top, bottom = 70, 20, 30, 40
    img = Image.new("RGB", size, "white")
    draw = ImageDraw.Draw(img)
    values = np.concatenate([np.asarray(c, dtype=np.float64) for c in curves.values()])
    lo, hi = float(values.min()), float(values.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    n = max(len(c) for c in curves.values())
    pw, ph = W - left - right, H - top - bottom

    def xy(k, v):
        x = left + (k / max(n - 1, 1)) * pw
        y = top + (hi - v) / (hi - lo) * ph
        return x, y

    draw.rectangle([left, top, W - right, H - bottom], outline="black")
    if lo < 0 < hi:
        draw.line([xy(0, 0.0), xy(n - 1, 0.0)], fill=(180, 180, 180))
    draw.text((5, top - 5), f"{hi:.3g}", fill="black")
    draw.text((5, H - bottom - 10), f"{lo:.3g}", fill="black")
    draw.text((left, H - bottom + 8), "1", fill="black")
    draw.text((W - right - 30, H - bottom + 8), str(n), fill="black")
    draw.text((left + pw // 2 - 30, H - bottom + 8), "column", fill="black")
    if title:
        draw.text((left, 8), title, fill="black")
    for name, c in curves.items():
        pts = [xy(k, float(v)) for k, v in enumerate(c)]
        draw.line(pts, fill=_COLORS.get(name, (0, 0, 0)), width=1)
    for i, name in enumerate(curves):
        y = top + 8 + 14 * i
        x = W - right - 150
        draw.line([(x, y + 5), (x + 20, y + 5)], fill=_COLORS.get(name, (0, 0, 0)), width=2)
        draw.text((x + 26, y), name, fill="black")
    return img


def write_curve_plot(path, curves: dict[str, np.ndarray], title: str = "") -> Path:
    render_curve_plot(curves, title=title).save(path, format="PNG")
    return Path(path)
