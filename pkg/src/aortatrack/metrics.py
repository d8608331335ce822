"""Stage IV numerics: per-slice counts, stenosis, calcium sums and scores."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from .classify import Partition, partitions_by_slice
from .errors import MalformedHeader, MissingRescale
from .segment import label_components
from .volume_io import Volume

CSV_HEADER = "slice,vessel_count,lumen_px,calc_px,stenosis,calc_intensity_sum"


@dataclass(frozen=True)
class SliceMetrics:
    slice_index: int
    vessel_count: int
    lumen_px: int
    calc_px: int
    stenosis: float
    calc_intensity_sum: int


@dataclass(frozen=True)
class StenosisProfile:
    rows: Tuple[SliceMetrics, ...]

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __getitem__(self, k):
        return self.rows[k]

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]

    @property
    def stenosis(self) -> List[float]:
        return self.column("stenosis")


def stenosis_fraction(lumen_px: int, calc_px: int) -> float:
    total = lumen_px + calc_px
    return calc_px / total if total > 0 else 0.0


def compute_slice_metrics(tree, partitions: Mapping[int, Partition], volume: Volume) -> StenosisProfile:
    rows = []
    for k, nodes in enumerate(tree.nodes_by_slice):
        flat = volume.slice(k).ravel()
        lumen = calc = total = 0
        for node in nodes:
            part = partitions[node.node_id]
            lumen += len(part.lumen)
            calc += len(part.calc)
            total += int(flat[part.calc].sum(dtype=np.uint64))
        rows.append(SliceMetrics(k, len(nodes), lumen, calc, stenosis_fraction(lumen, calc), total))
    return StenosisProfile(tuple(rows))


def calcification_intensity_profile(profile: StenosisProfile) -> List[int]:
    return [r.calc_intensity_sum for r in profile]


# --- Agatston-style score -------------------------------------------------

# (lower bound of peak physical intensity, weight), ascending
AGATSTON_BANDS = ((130.0, 1), (200.0, 2), (300.0, 3), (400.0, 4))


def agatston_weight(peak: float, bands: Sequence[Tuple[float, int]] = AGATSTON_BANDS) -> int:
    weight = 0
    for lower, w in bands:
        if peak >= lower:
            weight = w
    return weight


def agatston_score(
    partitions: Iterable[Partition],
    volume: Volume,
    bands: Sequence[Tuple[float, int]] = AGATSTON_BANDS,
    min_area_mm2: float = 1.0,
) -> float:
    """Sum over slices and 8-connected calc lesions of ``area_mm2 * weight(peak)``.

    Intensities are converted to physical units with the volume's rescale;
    lesions below the first band or smaller than ``min_area_mm2`` score 0.
    """
    if volume.rescale is None:
        raise MissingRescale("Agatston scoring needs rescale slope/intercept")
    pixel_mm2 = volume.spacing[0] * volume.spacing[1]
    score = 0.0
    for k, parts in enumerate(partitions_by_slice(partitions, volume.depth)):
        if not parts:
            continue
        mask = np.zeros(volume.height * volume.width, dtype=bool)
        for p in parts:
            mask[p.calc] = True
        if not mask.any():
            continue
        physical = volume.rescale.to_physical(volume.slice(k))
        for lesion in label_components(mask.reshape(volume.height, volume.width), k):
            area = lesion.area * pixel_mm2
            if area < min_area_mm2:
                continue
            ys, xs = lesion.coords()
            score += area * agatston_weight(float(physical[ys, xs].max()), bands)
    return score


# --- CSV ------------------------------------------------------------------


def format_fraction(x: float) -> str:
    """Six decimals, ties to even, applied to the exact binary value."""
    return str(Decimal(x).quantize(Decimal("0.000001"), rounding=ROUND_HALF_EVEN))


def metrics_csv_text(profile: StenosisProfile) -> str:
    lines = [CSV_HEADER]
    for r in profile:
        lines.append(
            f"{r.slice_index},{r.vessel_count},{r.lumen_px},{r.calc_px},"
            f"{format_fraction(r.stenosis)},{r.calc_intensity_sum}"
        )
    return "\n".join(lines) + "\n"


def write_metrics_csv(profile: StenosisProfile, path) -> None:
    Path(path).write_bytes(metrics_csv_text(profile).encode("utf-8"))


def read_metrics_csv(path) -> StenosisProfile:
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or ",".join(header) != CSV_HEADER:
        raise MalformedHeader(f"{path}: expected header '{CSV_HEADER}'")
    rows = []
    try:
        for rec in reader:
            if not rec:
                continue
            k, count, lumen, calc, sten, total = rec
            rows.append(SliceMetrics(int(k), int(count), int(lumen), int(calc), float(sten), int(total)))
    except ValueError as exc:
        raise MalformedHeader(f"{path}: bad row ({exc})") from None
    return StenosisProfile(tuple(rows))
