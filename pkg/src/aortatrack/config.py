"""Pipeline configuration: a flat ``key = value`` text file.

Blank lines and ``#`` comments are ignored. Unknown keys are an error.
``none`` clears an optional value. ``seed_point`` is written ``X,Y``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional, Tuple

from .classify import ClassifyParams
from .errors import ConfigError
from .segment import OvalCriteria
from .track import TrackParams


@dataclass(frozen=True)
class PipelineConfig:
    threshold_lo: int = 600
    threshold_hi: int = 4000
    area_min: int = 20
    area_max: int = 10000
    circularity_min: float = 0.40
    solidity_min: float = 0.85
    eccentricity_max: float = 0.95
    seed_area_min: int = 100
    seed_point: Optional[Tuple[int, int]] = None
    overlap_min: int = 1
    gap_tolerance: int = 0
    classify_mode: str = "fixed"
    fixed_threshold: Optional[float] = None
    separability_min: float = 0.5
    render_lo: int = 0
    render_hi: int = 2500
    output_dir: str = "out"

    @property
    def criteria(self) -> OvalCriteria:
        return OvalCriteria(
            self.area_min, self.area_max, self.circularity_min, self.solidity_min,
            self.eccentricity_max,
        )

    @property
    def track_params(self) -> TrackParams:
        return TrackParams(
            lo=self.threshold_lo,
            hi=self.threshold_hi,
            criteria=self.criteria,
            seed_area_min=self.seed_area_min,
            seed_point=self.seed_point,
            overlap_min=self.overlap_min,
            gap_tolerance=self.gap_tolerance,
        )

    @property
    def classify_params(self) -> ClassifyParams:
        return ClassifyParams(self.classify_mode, self.fixed_threshold, self.separability_min)

    @property
    def render_window(self) -> Tuple[int, int]:
        return (self.render_lo, self.render_hi)

    def validate(self) -> "PipelineConfig":
        problems = []
        for key in ("threshold_lo", "threshold_hi", "render_lo", "render_hi"):
            if not 0 <= getattr(self, key) <= 65535:
                problems.append(f"{key} outside 0..65535")
        if self.threshold_lo > self.threshold_hi:
            problems.append("threshold_lo > threshold_hi")
        if self.render_lo >= self.render_hi:
            problems.append("render_lo >= render_hi")
        for key in dict.fromkeys(self.criteria.validate()):
            problems.append(f"{key} out of range")
        if self.seed_area_min < 0:
            problems.append("seed_area_min < 0")
        if self.overlap_min < 1:
            problems.append("overlap_min < 1")
        if self.gap_tolerance < 0:
            problems.append("gap_tolerance < 0")
        if self.classify_mode not in ("fixed", "otsu"):
            problems.append("classify_mode must be 'fixed' or 'otsu'")
        if not 0 <= self.separability_min <= 1:
            problems.append("separability_min outside [0, 1]")
        if problems:
            raise ConfigError("invalid config: " + "; ".join(problems))
        return self

    def as_dict(self) -> dict:
        d = asdict(self)
        if self.seed_point is not None:
            d["seed_point"] = list(self.seed_point)
        return d

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                v = "none"
            elif f.name == "seed_point":
                v = f"{v[0]},{v[1]}"
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


def parse_seed_point(text: str) -> Tuple[int, int]:
    try:
        x, y = (int(p) for p in text.split(","))
    except ValueError:
        raise ConfigError(f"seed_point must be 'X,Y', got {text!r}") from None
    return (x, y)


_INT_KEYS = {
    "threshold_lo", "threshold_hi", "area_min", "area_max", "seed_area_min",
    "overlap_min", "gap_tolerance", "render_lo", "render_hi",
}
_FLOAT_KEYS = {"circularity_min", "solidity_min", "eccentricity_max", "separability_min"}
_OPTIONAL_KEYS = {"seed_point", "fixed_threshold"}


def _convert(key: str, raw: str):
    if key in _OPTIONAL_KEYS and raw.lower() == "none":
        return None
    try:
        if key == "seed_point":
            return parse_seed_point(raw)
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS or key == "fixed_threshold":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None


def parse_config(text: str, source: str = "<config>") -> PipelineConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in PipelineConfig.__dataclass_fields__:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = _convert(key, raw)
    return PipelineConfig(**values)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), str(path))


def with_overrides(config: PipelineConfig, **overrides) -> PipelineConfig:
    return replace(config, **{k: v for k, v in overrides.items() if v is not None})
