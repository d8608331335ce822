from __future__ import annotations

from collections import deque
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from aortatrack.config import PipelineConfig
from aortatrack.phantom import generate_phantom, preset
from aortatrack.pipeline import run_pipeline

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = FIXTURES / "golden"

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def flood_fill_components(mask):
    """Brute-force 8-connected components, discovered in raster order."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    seen = np.zeros_like(mask)
    out = []
    for y in range(h):
        for x in range(w):
            if not mask[y, x] or seen[y, x]:
                continue
            pixels = set()
            queue = deque([(y, x)])
            seen[y, x] = True
            while queue:
                cy, cx = queue.popleft()
                pixels.add((cy, cx))
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        ny, nx = cy + dy, cx + dx
                        if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not seen[ny, nx]:
                            seen[ny, nx] = True
                            queue.append((ny, nx))
            out.append(pixels)
    return out


def component_pixels(c):
    ys, xs = c.coords()
    return set(zip(ys.tolist(), xs.tolist()))


def disk_mask(size, cx, cy, r):
    ys, xs = np.mgrid[0:size, 0:size]
    return (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r


@pytest.fixture(scope="session")
def iliac():
    return generate_phantom(preset("paper-iliac"))


@pytest.fixture(scope="session")
def iliac_noisy():
    return generate_phantom(replace(preset("paper-iliac"), noise_sigma=60.0))


@pytest.fixture(scope="session")
def stenosis20():
    return generate_phantom(preset("stenosis-20"))


@pytest.fixture(scope="session")
def occlusion():
    return generate_phantom(preset("occlusion"))


@pytest.fixture(scope="session")
def stenosis20_result(stenosis20):
    volume, _ = stenosis20
    return run_pipeline(volume, PipelineConfig())


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion for the terminal summary."""
    results = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def record(name, passed, detail=""):
        results.append((name, bool(passed), detail))
        assert passed, f"{name}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_ACCEPTANCE_KEY, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in results:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
