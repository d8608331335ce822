"""Stage IV imagery: colour overlays as binary PPM and SVG profile charts."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .classify import Partition
from .errors import EmptySeries, InvalidWindow, MalformedHeader
from .volume_io import netpbm_header

LUMEN_RGB = (0, 0, 255)
CALC_RGB = (255, 0, 0)


def grayscale(slice_: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """``round(255 * clamp((v - lo) / (hi - lo), 0, 1))`` with halves rounded up."""
    if not lo < hi:
        raise InvalidWindow(f"render window needs lo < hi, got lo={lo} hi={hi}")
    d = hi - lo
    v = np.clip(np.asarray(slice_, dtype=np.int64), lo, hi) - lo
    return ((510 * v + d) // (2 * d)).astype(np.uint8)


def render_overlay(slice_: np.ndarray, partitions: Iterable[Partition], window) -> np.ndarray:
    """``(height, width, 3)`` uint8 image; lumen blue, calcification red."""
    lo, hi = window
    g = grayscale(slice_, lo, hi)
    img = np.repeat(g[:, :, None], 3, axis=2)
    flat = img.reshape(-1, 3)
    for p in partitions:
        flat[p.lumen] = LUMEN_RGB
        flat[p.calc] = CALC_RGB
    return img


def ppm_bytes(img: np.ndarray) -> bytes:
    img = np.asarray(img, dtype=np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("expected an (height, width, 3) image")
    h, w, _ = img.shape
    return b"P6\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(img).tobytes()


def write_ppm(img: np.ndarray, path) -> None:
    Path(path).write_bytes(ppm_bytes(img))


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:2] != b"P6":
        raise MalformedHeader(f"{path}: not a binary PPM (P6) file")
    # the P5 header grammar is identical apart from the magic number
    w, h, maxval, offset = netpbm_header(b"P5" + data[2:], path)
    if maxval != 255:
        raise MalformedHeader(f"{path}: only maxval 255 is supported")
    payload = data[offset : offset + 3 * w * h]
    if len(payload) < 3 * w * h:
        raise MalformedHeader(f"{path}: truncated payload")
    return np.frombuffer(payload, dtype=np.uint8).reshape(h, w, 3).copy()


# --- SVG ------------------------------------------------------------------

SVG_WIDTH, SVG_HEIGHT = 800, 400
X_LEFT, X_RIGHT = 60, 780
Y_BOTTOM, Y_TOP = 360, 20
EPSILON = 1e-12


def _num(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def profile_svg(series: Sequence[float], title: str) -> str:
    values = [float(v) for v in series]
    if not values:
        raise EmptySeries("cannot plot an empty series")
    n = len(values)
    top = max(max(values), EPSILON)

    def x_of(i):
        return X_LEFT if n == 1 else X_LEFT + (X_RIGHT - X_LEFT) * i / (n - 1)

    def y_of(v):
        return Y_BOTTOM - (Y_BOTTOM - Y_TOP) * v / top

    points = " ".join(f"{_num(x_of(i))},{_num(y_of(v))}" for i, v in enumerate(values))
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_WIDTH}" '
        f'height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">',
        f'<text x="{SVG_WIDTH // 2}" y="14" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{escape(title)}</text>',
        f'<line x1="{X_LEFT}" y1="{Y_BOTTOM}" x2="{X_RIGHT}" y2="{Y_BOTTOM}" stroke="black" '
        f'stroke-width="1"/>',
        f'<line x1="{X_LEFT}" y1="{Y_TOP}" x2="{X_LEFT}" y2="{Y_BOTTOM}" stroke="black" '
        f'stroke-width="1"/>',
        f'<text x="{X_LEFT - 6}" y="{Y_BOTTOM + 4}" text-anchor="end" font-family="sans-serif" '
        f'font-size="10">{0.0:.6f}</text>',
        f'<text x="{X_LEFT - 6}" y="{Y_TOP + 4}" text-anchor="end" font-family="sans-serif" '
        f'font-size="10">{max(values):.6f}</text>',
        f'<text x="{X_LEFT}" y="{Y_BOTTOM + 16}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="10">0</text>',
        f'<text x="{X_RIGHT}" y="{Y_BOTTOM + 16}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="10">{n - 1}</text>',
        f'<polyline points={quoteattr(points)} fill="none" stroke="#d62728" stroke-width="1.5"/>',
        "</svg>",
    ]
    return "\n".join(lines) + "\n"


def plot_profile_svg(series: Sequence[float], title: str, path) -> None:
    Path(path).write_bytes(profile_svg(series, title).encode("utf-8"))
