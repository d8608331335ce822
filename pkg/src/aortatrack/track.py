"""Stage II: seed arteries in slice 0 and follow them caudally by overlap."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import SeedNotFound
from .segment import Candidate, Component, OvalCriteria, passes_ovalar, segment_slice
from .volume_io import Volume


@dataclass(frozen=True, eq=False)
class TrackNode:
    node_id: int
    slice_index: int
    component: Component
    parents: Tuple[int, ...] = ()
    parent_overlaps: Tuple[int, ...] = ()
    primary_parent: Optional[int] = None

    @property
    def is_seed(self) -> bool:
        return not self.parents


@dataclass
class VesselTree:
    nodes_by_slice: List[List[TrackNode]]
    branch_events: List[Tuple[int, Tuple[int, ...]]] = field(default_factory=list)
    merge_events: List[Tuple[int, Tuple[int, ...]]] = field(default_factory=list)

    @classmethod
    def build(cls, nodes_by_slice: List[List[TrackNode]]) -> "VesselTree":
        children: Dict[int, List[int]] = {}
        merges = []
        for nodes in nodes_by_slice:
            for node in nodes:
                for p in node.parents:
                    children.setdefault(p, []).append(node.node_id)
                if len(node.parents) >= 2:
                    merges.append((node.node_id, node.parents))
        branches = [(p, tuple(c)) for p, c in sorted(children.items()) if len(c) >= 2]
        return cls(nodes_by_slice, branches, merges)

    @property
    def per_slice_vessel_count(self) -> List[int]:
        return [len(nodes) for nodes in self.nodes_by_slice]

    @property
    def depth(self) -> int:
        return len(self.nodes_by_slice)

    def nodes(self):
        for nodes in self.nodes_by_slice:
            yield from nodes

    def node(self, node_id: int) -> TrackNode:
        for n in self.nodes():
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)


@dataclass(frozen=True)
class TrackParams:
    lo: int = 600
    hi: int = 4000
    criteria: OvalCriteria = OvalCriteria()
    seed_area_min: int = 100
    seed_point: Optional[Tuple[int, int]] = None
    overlap_min: int = 1
    gap_tolerance: int = 0


def _contains(c: Component, x: int, y: int) -> bool:
    runs = c.runs
    hit = (runs[:, 0] == y) & (runs[:, 1] <= x) & (runs[:, 2] >= x)
    return bool(hit.any())


def seed_arteries(
    candidates: Sequence[Candidate],
    crit: OvalCriteria,
    seed_area_min: int,
    seed_point: Optional[Tuple[int, int]] = None,
    first_id: int = 0,
) -> List[TrackNode]:
    chosen = [
        c
        for c in candidates
        if passes_ovalar(c.metrics, crit) and c.component.area >= seed_area_min
    ]
    if seed_point is not None:
        x, y = seed_point
        chosen = [c for c in chosen if _contains(c.component, x, y)]
    if not chosen:
        where = f" at seed point {seed_point}" if seed_point is not None else ""
        raise SeedNotFound(f"no oval component of area >= {seed_area_min} in slice 0{where}")
    return [
        TrackNode(first_id + i, c.component.slice_index, c.component)
        for i, c in enumerate(chosen)
    ]


def _overlap(a: Component, b: Component, width: int) -> int:
    ax0, ay0, ax1, ay1 = a.bbox
    bx0, by0, bx1, by1 = b.bbox
    if ax0 > bx1 or bx0 > ax1 or ay0 > by1 or by0 > ay1:
        return 0
    return len(
        np.intersect1d(a.flat_indices(width), b.flat_indices(width), assume_unique=True)
    )


def propagate_slice(
    prev: Sequence[TrackNode],
    candidates: Sequence[Candidate],
    crit: OvalCriteria,
    overlap_min: int = 1,
    first_id: int = 0,
    width: Optional[int] = None,
    on_candidate: Optional[Callable[[Candidate, bool, Dict[int, int]], None]] = None,
) -> List[TrackNode]:
    """Accept oval candidates overlapping a previous artery by ``overlap_min`` pixels.

    Overlap compares pixels at identical ``(x, y)``. ``width`` is only used
    to flatten coordinates; any value larger than every column works.
    """
    if width is None:
        xs = [n.component.bbox[2] for n in prev] + [c.component.bbox[2] for c in candidates]
        width = max(xs, default=0) + 1
    out = []
    for cand in candidates:
        overlaps = {}
        shape_ok = passes_ovalar(cand.metrics, crit)
        if shape_ok:
            for p in prev:
                n = _overlap(cand.component, p.component, width)
                if n >= overlap_min and n > 0:
                    overlaps[p.node_id] = n
        accepted = shape_ok and bool(overlaps)
        if on_candidate is not None:
            on_candidate(cand, accepted, overlaps)
        if not accepted:
            continue
        comp_id = {p.node_id: (p.slice_index, p.component.id) for p in prev}
        parents = tuple(sorted(overlaps))
        primary = min(parents, key=lambda q: (-overlaps[q], comp_id[q][1], -comp_id[q][0], q))
        out.append(
            TrackNode(
                first_id + len(out),
                cand.component.slice_index,
                cand.component,
                parents,
                tuple(overlaps[q] for q in parents),
                primary,
            )
        )
    return out


def segment_volume(volume: Volume, params: TrackParams, threads: int = 1) -> List[List[Candidate]]:
    """Stage I for every slice; order of results never depends on ``threads``."""

    def work(k):
        return segment_slice(volume.slice(k), params.lo, params.hi, k, params.criteria)

    if threads <= 1:
        return [work(k) for k in range(volume.depth)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, range(volume.depth)))


def track_candidates(
    per_slice: Sequence[Sequence[Candidate]],
    params: TrackParams,
    width: int,
    trace: Optional[list] = None,
) -> VesselTree:
    """Seed on slice 0 then propagate caudally through precomputed candidates.

    With ``gap_tolerance = g > 0`` a node that gets no child stays usable as
    an overlap source for up to ``g`` further slices.
    """
    crit = params.criteria

    def recorder(k):
        if trace is None:
            return None

        def record(cand, accepted, overlaps):
            c, m = cand.component, cand.metrics
            trace.append(
                {
                    "slice": k,
                    "component": c.id,
                    "area": c.area,
                    "bbox": list(c.bbox),
                    "perimeter": m.perimeter,
                    "circularity": m.circularity,
                    "solidity": m.solidity,
                    "eccentricity": m.eccentricity,
                    "oval": passes_ovalar(m, crit),
                    "overlaps": {str(q): n for q, n in sorted(overlaps.items())},
                    "accepted": accepted,
                }
            )

        return record

    seeds = seed_arteries(per_slice[0], crit, params.seed_area_min, params.seed_point)
    if trace is not None:
        seed_ids = {n.component.id for n in seeds}
        for cand in per_slice[0]:
            recorder(0)(cand, cand.component.id in seed_ids, {})
    nodes_by_slice = [seeds]
    next_id = len(seeds)
    ghosts: List[TrackNode] = []
    for k in range(1, len(per_slice)):
        prev = nodes_by_slice[-1]
        sources = list(prev) + ghosts
        new = propagate_slice(
            sources, per_slice[k], crit, params.overlap_min, next_id, width, recorder(k)
        )
        next_id += len(new)
        nodes_by_slice.append(new)
        if params.gap_tolerance > 0:
            used = {p for n in new for p in n.parents}
            ghosts = [
                s
                for s in sources
                if s.node_id not in used and s.slice_index >= k - params.gap_tolerance
            ]
    return VesselTree.build(nodes_by_slice)


def track_volume(volume: Volume, params: TrackParams = TrackParams(), threads: int = 1,
                 trace: Optional[list] = None) -> VesselTree:
    per_slice = segment_volume(volume, params, threads)
    return track_candidates(per_slice, params, volume.width, trace)
