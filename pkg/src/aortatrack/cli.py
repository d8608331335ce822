"""Command-line front end: ``track``, ``phantom``, ``eval`` and ``plot``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import phantom as phantom_mod
from .config import PipelineConfig, load_config, parse_seed_point, with_overrides
from .errors import AortaTrackError
from .evaluation import compare_counts, read_counts_csv
from .metrics import calcification_intensity_profile, read_metrics_csv
from .pipeline import CALC_SVG, STENOSIS_SVG, run_pipeline, write_outputs
from .render import plot_profile_svg
from .volume_io import load_volume, write_raw_volume

VOLUME_RAW = "volume.raw"
VOLUME_JSON = "volume.json"


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aortatrack", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="track vessels and write metrics, overlays and plots")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="PGM directory, raw volume directory, or volume .json header")
    src.add_argument("--preset", help="generate a built-in phantom in memory and track it")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--seed-point", help="X,Y pixel inside the seed artery on slice 0")
    p.add_argument("--debug", action="store_true", help="also write per-candidate debug.jsonl")

    p = sub.add_parser("phantom", help="write a synthetic volume and its ground truth")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help="one of: " + ", ".join(sorted(phantom_mod.PRESETS)))
    src.add_argument("--input", help="phantom spec JSON file")
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="compare automated counts with reference counts")
    p.add_argument("auto_csv")
    p.add_argument("reference_csv")

    p = sub.add_parser("plot", help="re-emit SVG profiles from an existing metrics.csv")
    p.add_argument("--input", required=True, help="metrics.csv")
    p.add_argument("--out", required=True)
    return parser


def run_track(args) -> int:
    config = load_config(args.config) if args.config else PipelineConfig()
    seed_point = parse_seed_point(args.seed_point) if args.seed_point else None
    config = with_overrides(config, output_dir=args.out, seed_point=seed_point).validate()
    if args.preset:
        volume, _ = phantom_mod.generate_phantom(phantom_mod.preset(args.preset))
        source = f"preset:{args.preset}"
    else:
        volume = load_volume(args.input)
        source = Path(args.input).name
    result = run_pipeline(volume, config, args.threads, debug=args.debug)
    write_outputs(result, volume, config, config.output_dir, args.threads, source)
    return 0


def run_phantom(args) -> int:
    if args.preset:
        spec = phantom_mod.preset(args.preset)
    else:
        spec = phantom_mod.load_spec(args.input)
    volume, gt = phantom_mod.generate_phantom(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_raw_volume(volume, out / VOLUME_JSON, out / VOLUME_RAW)
    phantom_mod.write_ground_truth(gt, out)
    return 0


def run_eval(args) -> int:
    report = compare_counts(read_counts_csv(args.auto_csv), read_counts_csv(args.reference_csv))
    print(report.to_json())
    return 0


def run_plot(args) -> int:
    profile = read_metrics_csv(args.input)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    plot_profile_svg(profile.stenosis, "Stenosis fraction per slice", out / STENOSIS_SVG)
    plot_profile_svg(
        calcification_intensity_profile(profile),
        "Sum of calcification intensities per slice",
        out / CALC_SVG,
    )
    return 0


COMMANDS = {"track": run_track, "phantom": run_phantom, "eval": run_eval, "plot": run_plot}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (AortaTrackError, OSError) as exc:
        message = " ".join(str(exc).split())
        print(f"aortatrack {args.command}: {type(exc).__name__}: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
