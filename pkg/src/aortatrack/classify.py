"""Stage III: split each tracked component into lumen and calcification."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from .errors import EmptyHistogram
from .volume_io import Rescale, Volume

N_BINS = 65536

DEFAULT_RAW_THRESHOLD = 1500.0
DEFAULT_PHYSICAL_THRESHOLD = 130.0


@dataclass(frozen=True, eq=False)
class Partition:
    """Lumen and calcification pixels of one component, as flat slice indices."""

    slice_index: int
    lumen: np.ndarray
    calc: np.ndarray

    @property
    def size(self) -> int:
        return len(self.lumen) + len(self.calc)


@dataclass(frozen=True)
class ClassifyParams:
    mode: str = "fixed"
    fixed_threshold: Optional[float] = None
    separability_min: float = 0.5

    def resolved_threshold(self, rescale: Optional[Rescale]) -> float:
        """Fixed threshold in the volume's units; default depends on rescale."""
        if self.fixed_threshold is not None:
            return float(self.fixed_threshold)
        return DEFAULT_PHYSICAL_THRESHOLD if rescale is not None else DEFAULT_RAW_THRESHOLD


def otsu_threshold(hist) -> Tuple[int, float]:
    """Smallest threshold maximising the between-class variance.

    Class 0 is ``{v <= t}``, class 1 is ``{v > t}``; ``t`` ranges over
    values where class 0 is non-empty, so a single-valued histogram
    returns that value. Comparisons use exact integer arithmetic:
    ``sigma_B^2(t) = D^2 / (N^2 n0 (N - n0))`` with ``D = s0 N - n0 S``.
    Separability is ``sigma_B^2 / sigma_total^2``, 0 for a constant sample.
    """
    hist = np.asarray(hist)
    values = np.flatnonzero(hist)
    if len(values) == 0:
        raise EmptyHistogram("histogram has no mass")
    counts = hist[values].astype(np.int64).tolist()
    values = values.tolist()
    N = sum(counts)
    S = sum(v * c for v, c in zip(values, counts))
    Q = sum(v * v * c for v, c in zip(values, counts))
    var_num = N * Q - S * S  # N^2 * sigma_total^2
    best_t = values[0]
    best_num, best_den = 0, 1
    n0 = s0 = 0
    for v, c in zip(values[:-1], counts[:-1]):
        n0 += c
        s0 += v * c
        d = s0 * N - n0 * S
        num, den = d * d, n0 * (N - n0)
        if num * best_den > best_num * den:
            best_t, best_num, best_den = v, num, den
    if var_num == 0 or best_num == 0:
        return best_t, 0.0
    return best_t, float(Fraction(best_num, best_den * var_num))


def histogram(values) -> np.ndarray:
    return np.bincount(np.asarray(values, dtype=np.int64), minlength=N_BINS)


def classify_pixels(intensities, params: ClassifyParams, rescale: Optional[Rescale] = None) -> np.ndarray:
    """Boolean calcification flag per pixel of one component."""
    raw = np.asarray(intensities)
    if raw.size == 0:
        raise ValueError("component has no pixels")
    if params.mode == "fixed":
        threshold = params.resolved_threshold(rescale)
        if rescale is not None:
            return rescale.to_physical(raw) >= threshold
        return raw >= threshold
    if params.mode == "otsu":
        t, separability = otsu_threshold(histogram(raw))
        if separability < params.separability_min:
            return np.zeros(raw.shape, dtype=bool)
        return raw > t
    raise ValueError(f"unknown classify mode {params.mode!r}")


def partition_component(flat: np.ndarray, slice_: np.ndarray, slice_index: int,
                        params: ClassifyParams, rescale: Optional[Rescale] = None) -> Partition:
    calc = classify_pixels(slice_.ravel()[flat], params, rescale)
    return Partition(slice_index, flat[~calc], flat[calc])


def classify_tree(tree, volume: Volume, params: ClassifyParams = ClassifyParams()) -> Dict[int, Partition]:
    """Partition for every node of a vessel tree, keyed by node id."""
    out = {}
    for node in tree.nodes():
        flat = node.component.flat_indices(volume.width)
        out[node.node_id] = partition_component(
            flat, volume.slice(node.slice_index), node.slice_index, params, volume.rescale
        )
    return out


def partitions_by_slice(partitions: Iterable[Partition], depth: int):
    grouped = [[] for _ in range(depth)]
    for p in partitions:
        grouped[p.slice_index].append(p)
    return grouped
