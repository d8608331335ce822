"""Regenerate the pinned golden files under tests/fixtures/golden.

Run only when an output format changes on purpose:

    python3 tests/make_golden.py
"""

import shutil
import sys
import tempfile
from pathlib import Path

from aortatrack.config import PipelineConfig
from aortatrack.phantom import generate_phantom, preset
from aortatrack.pipeline import run_pipeline, write_outputs

GOLDEN = Path(__file__).parent / "fixtures" / "golden"

PINNED = {
    "paper-iliac": ["metrics.csv", "overlay_000120.ppm", "stenosis.svg", "calc_intensity.svg"],
    "stenosis-20": ["metrics.csv", "overlay_000097.ppm"],
}


def produce(name, out_dir, threads=1):
    volume, _ = generate_phantom(preset(name))
    config = PipelineConfig()
    result = run_pipeline(volume, config, threads)
    write_outputs(result, volume, config, out_dir, threads, f"preset:{name}")


def main():
    for name, files in PINNED.items():
        dest = GOLDEN / name
        dest.mkdir(parents=True, exist_ok=True)
        with tempfile.TemporaryDirectory() as tmp:
            produce(name, tmp)
            for f in files:
                shutil.copyfile(Path(tmp) / f, dest / f)
                print(dest / f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
