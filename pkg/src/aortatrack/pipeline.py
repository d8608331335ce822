"""End-to-end composition of Stages I-IV and the artefacts a run writes."""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

from .classify import Partition, partition_component, partitions_by_slice
from .config import PipelineConfig
from .evaluation import write_counts_csv
from .metrics import (
    StenosisProfile,
    agatston_score,
    calcification_intensity_profile,
    compute_slice_metrics,
    write_metrics_csv,
)
from .render import plot_profile_svg, render_overlay, write_ppm
from .track import VesselTree, track_volume
from .volume_io import Volume

METRICS_NAME = "metrics.csv"
COUNTS_NAME = "counts.csv"
STENOSIS_SVG = "stenosis.svg"
CALC_SVG = "calc_intensity.svg"
MANIFEST_NAME = "run_manifest.json"
DEBUG_NAME = "debug.jsonl"


def overlay_name(k: int) -> str:
    return f"overlay_{k:06d}.ppm"


@dataclass
class PipelineResult:
    tree: VesselTree
    partitions: Dict[int, Partition]
    profile: StenosisProfile
    agatston: Optional[float]
    trace: Optional[list] = None


def _map(fn, items, threads: int) -> list:
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_pipeline(volume: Volume, config: PipelineConfig, threads: int = 1, debug: bool = False) -> PipelineResult:
    config.validate()
    trace = [] if debug else None
    tree = track_volume(volume, config.track_params, threads, trace)
    params = config.classify_params

    def classify_slice(k):
        s = volume.slice(k)
        return [
            (n.node_id, partition_component(
                n.component.flat_indices(volume.width), s, k, params, volume.rescale))
            for n in tree.nodes_by_slice[k]
        ]

    partitions = {}
    for pairs in _map(classify_slice, range(volume.depth), threads):
        partitions.update(pairs)
    profile = compute_slice_metrics(tree, partitions, volume)
    score = agatston_score(partitions.values(), volume) if volume.rescale is not None else None
    return PipelineResult(tree, partitions, profile, score, trace)


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_outputs(result: PipelineResult, volume: Volume, config: PipelineConfig, out_dir,
                  threads: int = 1, source: str = "") -> dict:
    """Write every artefact of a run plus ``run_manifest.json``; return the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(result.profile, out / METRICS_NAME)
    write_counts_csv(result.tree.per_slice_vessel_count, out / COUNTS_NAME)
    plot_profile_svg(result.profile.stenosis, "Stenosis fraction per slice", out / STENOSIS_SVG)
    plot_profile_svg(
        calcification_intensity_profile(result.profile),
        "Sum of calcification intensities per slice",
        out / CALC_SVG,
    )
    by_slice = partitions_by_slice(result.partitions.values(), volume.depth)

    def overlay(k):
        img = render_overlay(volume.slice(k), by_slice[k], config.render_window)
        write_ppm(img, out / overlay_name(k))
        return overlay_name(k)

    names = [METRICS_NAME, COUNTS_NAME, STENOSIS_SVG, CALC_SVG]
    names += _map(overlay, range(volume.depth), threads)
    if result.trace is not None:
        lines = [json.dumps(rec, sort_keys=True) for rec in result.trace]
        (out / DEBUG_NAME).write_text("\n".join(lines) + "\n", encoding="utf-8")
        names.append(DEBUG_NAME)

    echo = config.as_dict()
    echo.pop("output_dir")
    manifest = {
        "config": echo,
        "input": {
            "source": source,
            "width": volume.width,
            "height": volume.height,
            "depth": volume.depth,
            "spacing_mm": list(volume.spacing),
            "intensities_sha256": hashlib.sha256(volume.intensities.tobytes()).hexdigest(),
        },
        "agatston_score": result.agatston,
        "outputs": {name: sha256_file(out / name) for name in sorted(names)},
    }
    (out / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def verify_manifest(out_dir) -> List[str]:
    """Names of outputs whose on-disk hash disagrees with the manifest."""
    out = Path(out_dir)
    manifest = json.loads((out / MANIFEST_NAME).read_text(encoding="utf-8"))
    return [
        name for name, digest in manifest["outputs"].items()
        if not (out / name).exists() or sha256_file(out / name) != digest
    ]
