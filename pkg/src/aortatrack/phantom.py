"""Synthetic vessel-tree phantoms with a per-voxel answer key.

A phantom is a list of straight tapered tube segments (a disk per slice,
centre and radius linearly interpolated between the segment's first and
last slice), optional calcified wedges carved into those disks, and
optional Gaussian noise. Labels: 0 background, 1 lumen, 2 calcification.

Geometry conventions: pixel ``(x, y)`` has its centre at integer
coordinates (column ``x``, row ``y``); a voxel belongs to a disk when its
centre satisfies ``(x - cx)^2 + (y - cy)^2 <= r^2``. Lesion angles are
``atan2(y - cy, x - cx)`` in degrees folded into ``[0, 360)``, with rows
growing downward.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Tuple

import numpy as np

from . import rng
from .errors import InvalidSpec, LengthMismatch
from .evaluation import write_counts_csv
from .volume_io import Volume

LABEL_BACKGROUND, LABEL_LUMEN, LABEL_CALC = 0, 1, 2

LABELS_NAME = "labels.raw"
COUNTS_NAME = "counts.csv"


@dataclass(frozen=True)
class VesselSegment:
    id: str
    slice_start: int
    slice_end: int
    center_start: Tuple[float, float]
    center_end: Tuple[float, float]
    radius_start: float
    radius_end: float

    def active(self, k: int) -> bool:
        return self.slice_start <= k <= self.slice_end

    def _t(self, k: int) -> float:
        span = self.slice_end - self.slice_start
        return 0.0 if span == 0 else (k - self.slice_start) / span

    def center(self, k: int) -> Tuple[float, float]:
        t = self._t(k)
        (x0, y0), (x1, y1) = self.center_start, self.center_end
        return (x0 + t * (x1 - x0), y0 + t * (y1 - y0))

    def radius(self, k: int) -> float:
        t = self._t(k)
        return self.radius_start + t * (self.radius_end - self.radius_start)


@dataclass(frozen=True)
class Lesion:
    segment_id: str
    slice_start: int
    slice_end: int
    theta_start: float
    theta_end: float
    frac_inner: float
    frac_outer: float
    intensity: int

    def fraction(self) -> float:
        """Continuous cross-section fraction covered by the wedge."""
        return (self.theta_end - self.theta_start) / 360.0 * (
            self.frac_outer**2 - self.frac_inner**2
        )


@dataclass(frozen=True)
class PhantomSpec:
    width: int
    height: int
    depth: int
    spacing: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    background_intensity: int = 100
    lumen_intensity: int = 1200
    noise_sigma: float = 0.0
    segments: Tuple[VesselSegment, ...] = ()
    lesions: Tuple[Lesion, ...] = ()
    rng_seed: int = 0

    def validate(self) -> None:
        if min(self.width, self.height, self.depth) < 1:
            raise InvalidSpec("width, height and depth must be >= 1")
        if len(self.spacing) != 3 or not all(s > 0 for s in self.spacing):
            raise InvalidSpec("spacing must be three positive numbers")
        for name in ("background_intensity", "lumen_intensity"):
            if not 0 <= getattr(self, name) <= 65535:
                raise InvalidSpec(f"{name} outside 0..65535")
        if self.lumen_intensity <= self.background_intensity:
            raise InvalidSpec("lumen_intensity must exceed background_intensity")
        if not (self.noise_sigma >= 0 and math.isfinite(self.noise_sigma)):
            raise InvalidSpec("noise_sigma must be finite and >= 0")
        if not 0 <= self.rng_seed < 2**64:
            raise InvalidSpec("rng_seed must fit in 64 bits")
        if not self.segments:
            raise InvalidSpec("phantom has no vessel segments")
        by_id = {}
        for seg in self.segments:
            if seg.id in by_id:
                raise InvalidSpec(f"duplicate segment id {seg.id!r}")
            by_id[seg.id] = seg
            if not 0 <= seg.slice_start <= seg.slice_end < self.depth:
                raise InvalidSpec(f"segment {seg.id!r}: slice range outside [0, {self.depth})")
            for k in (seg.slice_start, seg.slice_end):
                # geometry is linear in k, so checking both ends covers the segment
                (cx, cy), r = seg.center(k), seg.radius(k)
                if r <= 0:
                    raise InvalidSpec(f"segment {seg.id!r}: radius must be > 0")
                if cx - r < 0 or cy - r < 0 or cx + r > self.width - 1 or cy + r > self.height - 1:
                    raise InvalidSpec(f"segment {seg.id!r}: disk leaves the slice at slice {k}")
        for les in self.lesions:
            seg = by_id.get(les.segment_id)
            if seg is None:
                raise InvalidSpec(f"lesion references missing segment {les.segment_id!r}")
            if not seg.slice_start <= les.slice_start <= les.slice_end <= seg.slice_end:
                raise InvalidSpec(f"lesion on {les.segment_id!r}: slices outside the segment")
            if not 0 <= les.theta_start < les.theta_end <= 360:
                raise InvalidSpec(f"lesion on {les.segment_id!r}: need 0 <= theta0 < theta1 <= 360")
            if not 0 <= les.frac_inner < les.frac_outer <= 1:
                raise InvalidSpec(f"lesion on {les.segment_id!r}: need 0 <= f0 < f1 <= 1")
            if not self.lumen_intensity < les.intensity <= 65535:
                raise InvalidSpec(f"lesion on {les.segment_id!r}: intensity must exceed lumen")


@dataclass(frozen=True, eq=False)
class GroundTruth:
    labels: np.ndarray
    per_slice_vessel_count: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))

    def __eq__(self, other):
        if not isinstance(other, GroundTruth):
            return NotImplemented
        return np.array_equal(self.labels, other.labels) and np.array_equal(
            self.per_slice_vessel_count, other.per_slice_vessel_count
        )

    __hash__ = None


# --- generation -----------------------------------------------------------


def _disk_and_angles(seg: VesselSegment, k: int, ys: np.ndarray, xs: np.ndarray):
    (cx, cy), r = seg.center(k), seg.radius(k)
    dx, dy = xs - cx, ys - cy
    dist2 = dx * dx + dy * dy
    return dist2 <= r * r, dist2, dx, dy, r


def generate_phantom(spec: PhantomSpec) -> Tuple[Volume, GroundTruth]:
    spec.validate()
    ys, xs = np.mgrid[0 : spec.height, 0 : spec.width].astype(np.float64)
    intensities = np.empty((spec.depth, spec.height, spec.width), dtype=np.uint16)
    labels = np.empty_like(intensities, dtype=np.uint8)
    counts = np.zeros(spec.depth, dtype=np.int64)
    for k in range(spec.depth):
        lab = np.zeros((spec.height, spec.width), dtype=np.uint8)
        img = np.full((spec.height, spec.width), spec.background_intensity, dtype=np.float64)
        for seg in spec.segments:
            if not seg.active(k):
                continue
            counts[k] += 1
            inside, *_ = _disk_and_angles(seg, k, ys, xs)
            lab[inside & (lab == LABEL_BACKGROUND)] = LABEL_LUMEN
            img[inside & (lab == LABEL_LUMEN)] = spec.lumen_intensity
        for les in spec.lesions:
            if not les.slice_start <= k <= les.slice_end:
                continue
            seg = next(s for s in spec.segments if s.id == les.segment_id)
            inside, dist2, dx, dy, r = _disk_and_angles(seg, k, ys, xs)
            theta = np.degrees(np.arctan2(dy, dx)) % 360.0
            rho = np.sqrt(dist2) / r
            wedge = (
                inside
                & (theta >= les.theta_start)
                & (theta < les.theta_end)
                & (rho >= les.frac_inner)
                & (rho <= les.frac_outer)
            )
            lab[wedge] = LABEL_CALC
            img[wedge] = les.intensity
        if spec.noise_sigma > 0:
            noise = rng.standard_normal(spec.rng_seed ^ k, spec.width * spec.height)
            img = img + spec.noise_sigma * noise.reshape(spec.height, spec.width)
        intensities[k] = np.clip(np.rint(img), 0, 65535).astype(np.uint16)
        labels[k] = lab
    labels.flags.writeable = False
    counts.flags.writeable = False
    return Volume(intensities, spec.spacing), GroundTruth(labels, counts)


# --- ground-truth files ---------------------------------------------------


def write_ground_truth(gt: GroundTruth, directory) -> Tuple[Path, Path]:
    """Write ``labels.raw`` (u8, slice-major then row-major) and ``counts.csv``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    labels_path, counts_path = directory / LABELS_NAME, directory / COUNTS_NAME
    labels_path.write_bytes(np.ascontiguousarray(gt.labels, dtype=np.uint8).tobytes())
    write_counts_csv(gt.per_slice_vessel_count, counts_path)
    return labels_path, counts_path


def read_labels(path, depth: int, height: int, width: int) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) != depth * height * width:
        raise LengthMismatch(f"{path}: {len(data)} bytes, expected {depth * height * width}")
    return np.frombuffer(data, dtype=np.uint8).reshape(depth, height, width).copy()


# --- JSON spec files ------------------------------------------------------

_SPEC_KEYS = {f for f in PhantomSpec.__dataclass_fields__}


def spec_to_dict(spec: PhantomSpec) -> dict:
    out = asdict(spec)
    out["spacing"] = list(spec.spacing)
    for seg in out["segments"]:
        seg["center_start"] = list(seg["center_start"])
        seg["center_end"] = list(seg["center_end"])
    return out


def spec_from_dict(obj) -> PhantomSpec:
    if not isinstance(obj, dict):
        raise InvalidSpec("phantom spec must be a JSON object")
    unknown = set(obj) - _SPEC_KEYS
    if unknown:
        raise InvalidSpec(f"unknown phantom spec keys {sorted(unknown)}")
    try:
        segments = tuple(
            VesselSegment(
                id=str(s["id"]),
                slice_start=int(s["slice_start"]),
                slice_end=int(s["slice_end"]),
                center_start=tuple(float(v) for v in s["center_start"]),
                center_end=tuple(float(v) for v in s["center_end"]),
                radius_start=float(s["radius_start"]),
                radius_end=float(s["radius_end"]),
            )
            for s in obj.get("segments", [])
        )
        lesions = tuple(
            Lesion(
                segment_id=str(l["segment_id"]),
                slice_start=int(l["slice_start"]),
                slice_end=int(l["slice_end"]),
                theta_start=float(l["theta_start"]),
                theta_end=float(l["theta_end"]),
                frac_inner=float(l["frac_inner"]),
                frac_outer=float(l["frac_outer"]),
                intensity=int(l["intensity"]),
            )
            for l in obj.get("lesions", [])
        )
        spec = PhantomSpec(
            width=int(obj["width"]),
            height=int(obj["height"]),
            depth=int(obj["depth"]),
            spacing=tuple(float(v) for v in obj.get("spacing", (1.0, 1.0, 1.0))),
            background_intensity=int(obj.get("background_intensity", 100)),
            lumen_intensity=int(obj.get("lumen_intensity", 1200)),
            noise_sigma=float(obj.get("noise_sigma", 0.0)),
            segments=segments,
            lesions=lesions,
            rng_seed=int(obj.get("rng_seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidSpec(f"malformed phantom spec: {exc!r}") from None
    if any(len(s.center_start) != 2 or len(s.center_end) != 2 for s in segments):
        raise InvalidSpec("segment centres must be [x, y] pairs")
    spec.validate()
    return spec


def load_spec(path) -> PhantomSpec:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"{path}: invalid JSON ({exc})") from None
    return spec_from_dict(obj)


# --- presets --------------------------------------------------------------


def _paper_iliac() -> PhantomSpec:
    # one aorta (slices 0-99) -> two common iliacs (100-119) -> four
    # internal/external iliacs (120-159); slices 160-199 are empty
    segs = (
        VesselSegment("aorta", 0, 99, (128.0, 110.0), (128.0, 128.0), 18.0, 18.0),
        VesselSegment("left_common_iliac", 100, 119, (115.0, 128.0), (92.0, 134.0), 11.0, 11.0),
        VesselSegment("right_common_iliac", 100, 119, (141.0, 128.0), (164.0, 134.0), 11.0, 11.0),
        VesselSegment("left_internal_iliac", 120, 159, (83.0, 134.0), (62.0, 150.0), 7.0, 7.0),
        VesselSegment("left_external_iliac", 120, 159, (101.0, 134.0), (108.0, 165.0), 7.0, 7.0),
        VesselSegment("right_external_iliac", 120, 159, (155.0, 134.0), (148.0, 165.0), 7.0, 7.0),
        VesselSegment("right_internal_iliac", 120, 159, (173.0, 134.0), (194.0, 150.0), 7.0, 7.0),
    )
    return PhantomSpec(
        width=256,
        height=256,
        depth=200,
        spacing=(1.0, 1.0, 5.0),
        background_intensity=100,
        lumen_intensity=1200,
        noise_sigma=0.0,
        segments=segs,
        lesions=(),
        rng_seed=20200,
    )


def _stenosis_20() -> PhantomSpec:
    # posterior rim plaque: (120/360) * (1 - 0.4) = 0.20 of the disk
    plaque = Lesion("aorta", 96, 98, 0.0, 120.0, math.sqrt(0.4), 1.0, 2200)
    return replace(_paper_iliac(), lesions=(plaque,))


def _occlusion() -> PhantomSpec:
    vessel = VesselSegment("femoral", 0, 199, (128.0, 120.0), (128.0, 136.0), 11.0, 11.0)
    plug = Lesion("femoral", 150, 158, 0.0, 360.0, 0.0, 1.0, 2200)
    return replace(_paper_iliac(), segments=(vessel,), lesions=(plug,))


PRESETS = {
    "paper-iliac": _paper_iliac,
    "stenosis-20": _stenosis_20,
    "occlusion": _occlusion,
}


def preset(name: str) -> PhantomSpec:
    try:
        return PRESETS[name]()
    except KeyError:
        raise InvalidSpec(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
