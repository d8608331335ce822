"""Stage I: intensity window, 8-connected labelling, shape metrics, oval filter.

Components are stored as run-length encoded rows, ``runs[i] = (y, x0, x1)``
with ``x0..x1`` inclusive, in raster order. Labelling works on those runs
directly: runs are extracted per row with numpy, then merged with a
union-find in a single sweep over adjacent rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import InvalidWindow

SQRT2 = math.sqrt(2.0)

# clockwise in image coordinates (rows grow downward), starting at west
_MOORE = ((0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1))
_MOORE_INDEX = {off: i for i, off in enumerate(_MOORE)}


@dataclass(frozen=True, eq=False)
class Component:
    id: int
    slice_index: int
    runs: np.ndarray
    area: int
    bbox: Tuple[int, int, int, int]
    centroid: Tuple[float, float]

    @classmethod
    def from_runs(cls, id: int, slice_index: int, runs) -> "Component":
        runs = np.asarray(runs, dtype=np.int64).reshape(-1, 3)
        if len(runs) == 0:
            raise ValueError("component must contain at least one run")
        ys, x0, x1 = runs[:, 0].tolist(), runs[:, 1].tolist(), runs[:, 2].tolist()
        area = sx = sy = 0
        for y, a, b in zip(ys, x0, x1):
            n = b - a + 1
            area += n
            sx += (a + b) * n  # 2 * sum of x over the run
            sy += y * n
        bbox = (min(x0), min(ys), max(x1), max(ys))
        runs.flags.writeable = False
        return cls(id, slice_index, runs, area, bbox, (sx / (2 * area), sy / area))

    def coords(self) -> Tuple[np.ndarray, np.ndarray]:
        """Row and column arrays of every pixel, raster order."""
        lengths = self.runs[:, 2] - self.runs[:, 1] + 1
        ys = np.repeat(self.runs[:, 0], lengths)
        starts = np.repeat(self.runs[:, 1] - np.cumsum(lengths) + lengths, lengths)
        xs = starts + np.arange(self.area)
        return ys, xs

    def flat_indices(self, width: int) -> np.ndarray:
        ys, xs = self.coords()
        return ys * width + xs

    def local_mask(self, pad: int = 0) -> np.ndarray:
        """Boolean crop of the bounding box, optionally padded with False."""
        x0, y0, x1, y1 = self.bbox
        mask = np.zeros((y1 - y0 + 1 + 2 * pad, x1 - x0 + 1 + 2 * pad), dtype=bool)
        for y, a, b in self.runs.tolist():
            mask[y - y0 + pad, a - x0 + pad : b - x0 + pad + 1] = True
        return mask

    def translated(self, dx: int, dy: int) -> "Component":
        runs = self.runs + np.array([dy, dx, dx])
        return Component.from_runs(self.id, self.slice_index, runs)


@dataclass(frozen=True)
class ShapeMetrics:
    area: int
    perimeter: float
    circularity: float
    solidity: float
    eccentricity: float


@dataclass(frozen=True)
class OvalCriteria:
    area_min: int = 20
    area_max: int = 10000
    circularity_min: float = 0.40
    solidity_min: float = 0.85
    eccentricity_max: float = 0.95

    def validate(self) -> List[str]:
        """Return the names of fields that break their valid ranges."""
        bad = []
        if self.area_min < 1:
            bad.append("area_min")
        if self.area_max < self.area_min:
            bad += ["area_min", "area_max"]
        if self.circularity_min < 0:
            bad.append("circularity_min")
        if not 0 <= self.solidity_min <= 1:
            bad.append("solidity_min")
        if not 0 <= self.eccentricity_max <= 1:
            bad.append("eccentricity_max")
        return bad


# --- thresholding ---------------------------------------------------------


def threshold_slice(slice_: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """Boolean mask of pixels with ``lo <= v <= hi``."""
    if lo > hi:
        raise InvalidWindow(f"threshold window lo={lo} > hi={hi}")
    s = np.asarray(slice_)
    return (s >= lo) & (s <= hi)


# --- labelling ------------------------------------------------------------


def mask_runs(mask: np.ndarray) -> np.ndarray:
    """All horizontal runs of True pixels as an ``(n, 3)`` array in raster order."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    padded = np.zeros((h, w + 2), dtype=np.int8)
    padded[:, 1:-1] = mask
    edges = np.diff(padded, axis=1)
    sy, sx = np.nonzero(edges == 1)
    _, ex = np.nonzero(edges == -1)
    return np.stack([sy, sx, ex - 1], axis=1).astype(np.int64)


def _find(parent: List[int], i: int) -> int:
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        parent[i], i = root, parent[i]
    return root


def label_components(mask: np.ndarray, slice_index: int = 0) -> List[Component]:
    """Maximal 8-connected components, ids in first-encounter raster order."""
    runs = mask_runs(mask)
    n = len(runs)
    if n == 0:
        return []
    ys, x0s, x1s = runs[:, 0].tolist(), runs[:, 1].tolist(), runs[:, 2].tolist()
    parent = list(range(n))

    # runs of row y-1 occupy [prev_lo, prev_hi); sweep them alongside row y
    prev_lo = prev_hi = 0
    row_start = 0
    i = 0
    while i < n:
        y = ys[i]
        row_start = i
        while i < n and ys[i] == y:
            i += 1
        if prev_hi > prev_lo and ys[prev_lo] == y - 1:
            j = prev_lo
            for r in range(row_start, i):
                a, b = x0s[r] - 1, x1s[r] + 1
                while j < prev_hi and x1s[j] < a:
                    j += 1
                k = j
                while k < prev_hi and x0s[k] <= b:
                    ra, rb = _find(parent, r), _find(parent, k)
                    if ra != rb:
                        if ra < rb:
                            parent[rb] = ra
                        else:
                            parent[ra] = rb
                    k += 1
        prev_lo, prev_hi = row_start, i

    groups = {}
    for r in range(n):
        groups.setdefault(_find(parent, r), []).append(r)
    # dict insertion order follows the first run of each root, i.e. raster order
    return [
        Component.from_runs(cid, slice_index, runs[members])
        for cid, members in enumerate(groups.values())
    ]


# --- shape metrics --------------------------------------------------------


def trace_perimeter(mask: np.ndarray) -> float:
    """Moore-neighbour chain length of the outer boundary of a single blob.

    ``mask`` must be padded by at least one False pixel on every side and
    contain one 8-connected blob. Axial steps count 1, diagonal steps
    count sqrt(2). Tracing stops when the first move is about to repeat
    (same pixel, same backtrack), which handles one-pixel-wide limbs that
    Jacob's criterion would loop on.
    """
    ys, xs = np.nonzero(mask)
    if len(ys) == 0:
        raise ValueError("empty mask")
    start = (int(ys[0]), int(xs[0]))
    if len(ys) == 1:
        return 4.0

    def step(p, b):
        # scan clockwise from the neighbour after the backtrack pixel
        i = _MOORE_INDEX[(b[0] - p[0], b[1] - p[1])]
        prev = b
        for s in range(1, 9):
            dy, dx = _MOORE[(i + s) % 8]
            q = (p[0] + dy, p[1] + dx)
            if mask[q]:
                return q, prev
            prev = q
        raise AssertionError("isolated pixel in multi-pixel blob")

    axial = diagonal = 0
    p, b = start, (start[0], start[1] - 1)
    first = None
    limit = 8 * len(ys) + 16
    for _ in range(limit):
        q, nb = step(p, b)
        if first is None:
            first = (q, nb)
        elif (q, nb) == first and p == start:
            return axial + diagonal * SQRT2
        if q[0] != p[0] and q[1] != p[1]:
            diagonal += 1
        else:
            axial += 1
        p, b = q, nb
    raise RuntimeError("contour trace did not close")


def _hull_area2(points: List[Tuple[int, int]]) -> int:
    """Twice the convex hull area of integer points (Andrew's monotone chain)."""
    pts = sorted(set(points))
    if len(pts) < 3:
        return 0

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    area2 = 0
    for (x0, y0), (x1, y1) in zip(hull, hull[1:] + hull[:1]):
        area2 += x0 * y1 - x1 * y0
    return abs(area2)


def convex_hull_area(c: Component) -> float:
    """Area of the convex hull of the pixel squares (corner points)."""
    corners = []
    for y, a, b in c.runs.tolist():
        corners += [(a, y), (b + 1, y), (a, y + 1), (b + 1, y + 1)]
    return _hull_area2(corners) / 2.0


def _eccentricity(c: Component) -> float:
    ys, xs = c.coords()
    cx, cy = c.centroid
    dx = xs - cx
    dy = ys - cy
    mu20 = float(np.dot(dx, dx)) / c.area
    mu02 = float(np.dot(dy, dy)) / c.area
    mu11 = float(np.dot(dx, dy)) / c.area
    half_tr = (mu20 + mu02) / 2.0
    disc = math.sqrt(((mu20 - mu02) / 2.0) ** 2 + mu11**2)
    lam1, lam2 = half_tr + disc, max(half_tr - disc, 0.0)
    if lam1 <= 0.0:
        return 0.0
    return math.sqrt(max(0.0, 1.0 - lam2 / lam1))


def shape_metrics(c: Component) -> ShapeMetrics:
    if c.area == 1:
        return ShapeMetrics(1, 4.0, math.pi / 4.0, 1.0, 0.0)
    perimeter = trace_perimeter(c.local_mask(pad=1))
    circularity = 4.0 * math.pi * c.area / perimeter**2
    solidity = c.area / convex_hull_area(c)
    return ShapeMetrics(c.area, perimeter, circularity, solidity, _eccentricity(c))


def passes_ovalar(m: ShapeMetrics, crit: OvalCriteria) -> bool:
    return (
        crit.area_min <= m.area <= crit.area_max
        and m.circularity >= crit.circularity_min
        and m.solidity >= crit.solidity_min
        and m.eccentricity <= crit.eccentricity_max
    )


@dataclass(frozen=True, eq=False)
class Candidate:
    """A labelled component together with its shape metrics."""

    component: Component
    metrics: ShapeMetrics


def segment_slice(
    slice_: np.ndarray, lo: int, hi: int, slice_index: int = 0, crit: Optional[OvalCriteria] = None
) -> List[Candidate]:
    """Threshold, label and measure one slice.

    With ``crit`` given, metrics are only computed for components whose
    area already falls inside ``[area_min, area_max]``; the rest can never
    pass the oval filter and are dropped early.
    """
    comps = label_components(threshold_slice(slice_, lo, hi), slice_index)
    if crit is not None:
        comps = [c for c in comps if crit.area_min <= c.area <= crit.area_max]
    return [Candidate(c, shape_metrics(c)) for c in comps]
