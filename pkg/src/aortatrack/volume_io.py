"""Volume container and the two on-disk stack formats.

Two formats are supported:

* a directory of binary netpbm P5 slices (``*.pgm``), sorted
  lexicographically into slice order, with an optional ``volume.json``
  sidecar carrying spacing and rescale metadata;
* a raw ``uint16`` little-endian data file described by a ``volume.json``
  header.

Slice 0 is the most cranial slice.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch, LengthMismatch, MalformedHeader, MissingFiles

SIDECAR_NAME = "volume.json"

_HEADER_KEYS = {"width", "height", "depth", "spacing_mm", "rescale"}


@dataclass(frozen=True)
class Rescale:
    """Linear map from raw sample ``v`` to physical units ``slope * v + intercept``."""

    slope: float
    intercept: float

    def to_physical(self, raw):
        return self.slope * np.asarray(raw, dtype=np.float64) + self.intercept


@dataclass(frozen=True, eq=False)
class Volume:
    """Immutable stack of 16-bit slices.

    ``intensities`` has shape ``(depth, height, width)``; indexing is
    ``[slice, row, column]``. Spacing is ``(sx, sy, sz)`` in millimetres.
    """

    intensities: np.ndarray
    spacing: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    rescale: Optional[Rescale] = None

    def __post_init__(self):
        arr = np.asarray(self.intensities)
        if arr.ndim != 3:
            raise DimensionMismatch(f"volume must be 3-D, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise DimensionMismatch(f"volume dimensions must be >= 1, got {arr.shape}")
        if arr.dtype != np.uint16:
            if arr.size and (arr.min() < 0 or arr.max() > 65535):
                raise ValueError("intensities outside the uint16 range")
            arr = arr.astype(np.uint16)
        arr = np.ascontiguousarray(arr)
        if arr is self.intensities:
            arr = arr.copy()
        arr.flags.writeable = False
        spacing = tuple(float(s) for s in self.spacing)
        if len(spacing) != 3 or not all(math.isfinite(s) and s > 0 for s in spacing):
            raise ValueError(f"spacing must be three positive numbers, got {self.spacing!r}")
        object.__setattr__(self, "intensities", arr)
        object.__setattr__(self, "spacing", spacing)

    @property
    def depth(self) -> int:
        return self.intensities.shape[0]

    @property
    def height(self) -> int:
        return self.intensities.shape[1]

    @property
    def width(self) -> int:
        return self.intensities.shape[2]

    def slice(self, k: int) -> np.ndarray:
        return self.intensities[k]

    def __eq__(self, other):
        if not isinstance(other, Volume):
            return NotImplemented
        return (
            self.spacing == other.spacing
            and self.rescale == other.rescale
            and self.intensities.shape == other.intensities.shape
            and np.array_equal(self.intensities, other.intensities)
        )

    __hash__ = None


# --- sidecar header -------------------------------------------------------


def _parse_header(obj, source) -> dict:
    if not isinstance(obj, dict):
        raise MalformedHeader(f"{source}: header must be a JSON object")
    unknown = set(obj) - _HEADER_KEYS
    if unknown:
        raise MalformedHeader(f"{source}: unknown header keys {sorted(unknown)}")
    out = {}
    for key in ("width", "height", "depth"):
        value = obj.get(key)
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise MalformedHeader(f"{source}: '{key}' must be an integer >= 1")
        out[key] = value
    spacing = obj.get("spacing_mm", [1.0, 1.0, 1.0])
    if (
        not isinstance(spacing, list)
        or len(spacing) != 3
        or not all(isinstance(s, (int, float)) and not isinstance(s, bool) for s in spacing)
        or not all(math.isfinite(s) and s > 0 for s in spacing)
    ):
        raise MalformedHeader(f"{source}: 'spacing_mm' must be three positive numbers")
    out["spacing"] = tuple(float(s) for s in spacing)
    rescale = obj.get("rescale")
    if rescale is not None:
        if (
            not isinstance(rescale, dict)
            or set(rescale) != {"slope", "intercept"}
            or not all(
                isinstance(rescale[k], (int, float)) and not isinstance(rescale[k], bool)
                for k in ("slope", "intercept")
            )
        ):
            raise MalformedHeader(f"{source}: 'rescale' must be {{slope, intercept}}")
        if rescale["slope"] == 0:
            raise MalformedHeader(f"{source}: rescale slope must be nonzero")
        out["rescale"] = Rescale(float(rescale["slope"]), float(rescale["intercept"]))
    else:
        out["rescale"] = None
    return out


def _read_header(path: Path) -> dict:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedHeader(f"{path}: invalid JSON ({exc})") from None
    return _parse_header(obj, path)


def header_dict(volume: Volume) -> dict:
    header = {
        "width": volume.width,
        "height": volume.height,
        "depth": volume.depth,
        "spacing_mm": list(volume.spacing),
    }
    if volume.rescale is not None:
        header["rescale"] = {"slope": volume.rescale.slope, "intercept": volume.rescale.intercept}
    return header


# --- raw format -----------------------------------------------------------


def load_raw_volume(header_path, data_path) -> Volume:
    header = _read_header(Path(header_path))
    w, h, d = header["width"], header["height"], header["depth"]
    data = Path(data_path).read_bytes()
    expected = 2 * w * h * d
    if len(data) != expected:
        raise LengthMismatch(
            f"{data_path}: {len(data)} bytes, header {w}x{h}x{d} needs {expected}"
        )
    arr = np.frombuffer(data, dtype="<u2").astype(np.uint16).reshape(d, h, w)
    return Volume(arr, header["spacing"], header["rescale"])


def write_raw_volume(volume: Volume, header_path, data_path) -> None:
    Path(header_path).write_text(
        json.dumps(header_dict(volume), separators=(",", ":")) + "\n", encoding="utf-8"
    )
    Path(data_path).write_bytes(volume.intensities.astype("<u2").tobytes())


# --- netpbm P5 ------------------------------------------------------------

_TOKEN = re.compile(rb"\S+")


def netpbm_header(data: bytes, source) -> Tuple[int, int, int, int]:
    """Parse a P5 header; return ``(width, height, maxval, payload_offset)``."""
    if data[:2] != b"P5":
        raise MalformedHeader(f"{source}: not a binary PGM (P5) file")
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            end = data.find(b"\n", pos)
            if end < 0:
                raise MalformedHeader(f"{source}: truncated header")
            pos = end + 1
            continue
        m = _TOKEN.match(data, pos)
        if m is None:
            raise MalformedHeader(f"{source}: truncated header")
        token = m.group()
        if not token.isdigit():
            raise MalformedHeader(f"{source}: bad header token {token!r}")
        fields.append(int(token))
        pos = m.end()
    # exactly one whitespace byte separates maxval from the raster
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise MalformedHeader(f"{source}: missing whitespace after maxval")
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise MalformedHeader(f"{source}: bad dimensions {width}x{height}")
    if not 1 <= maxval <= 65535:
        raise MalformedHeader(f"{source}: maxval {maxval} outside 1..65535")
    return width, height, maxval, pos + 1


def read_pgm(path) -> np.ndarray:
    """Read one P5 file into a ``(height, width)`` uint16 array, values unscaled."""
    data = Path(path).read_bytes()
    width, height, maxval, offset = netpbm_header(data, path)
    sample = 1 if maxval < 256 else 2
    need = width * height * sample
    payload = data[offset : offset + need]
    if len(payload) < need:
        raise MalformedHeader(f"{path}: truncated payload ({len(payload)} of {need} bytes)")
    dtype = np.uint8 if sample == 1 else ">u2"
    return np.frombuffer(payload, dtype=dtype).astype(np.uint16).reshape(height, width)


def write_pgm(path, image: np.ndarray, maxval: Optional[int] = None) -> None:
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("PGM slices are 2-D")
    if maxval is None:
        maxval = 255 if image.dtype == np.uint8 else 65535
    if not 1 <= maxval <= 65535:
        raise ValueError("maxval must be in 1..65535")
    if image.size and int(image.max()) > maxval:
        raise ValueError("sample exceeds maxval")
    h, w = image.shape
    body = image.astype(np.uint8 if maxval < 256 else ">u2").tobytes()
    Path(path).write_bytes(b"P5\n%d %d\n%d\n" % (w, h, maxval) + body)


def load_pgm_stack(directory) -> Volume:
    directory = Path(directory)
    if not directory.is_dir():
        raise MissingFiles(f"{directory}: not a directory")
    files = sorted(p for p in directory.iterdir() if p.suffix == ".pgm" and p.is_file())
    if not files:
        raise MissingFiles(f"{directory}: no *.pgm files")
    slices = []
    for path in files:
        img = read_pgm(path)
        if slices and img.shape != slices[0].shape:
            raise DimensionMismatch(
                f"{path.name}: {img.shape[1]}x{img.shape[0]} differs from "
                f"{slices[0].shape[1]}x{slices[0].shape[0]}"
            )
        slices.append(img)
    spacing: Sequence[float] = (1.0, 1.0, 1.0)
    rescale = None
    sidecar = directory / SIDECAR_NAME
    if sidecar.exists():
        header = _read_header(sidecar)
        shape = (header["depth"], header["height"], header["width"])
        if shape != (len(slices),) + slices[0].shape:
            raise DimensionMismatch(f"{sidecar}: header dims disagree with the PGM stack")
        spacing, rescale = header["spacing"], header["rescale"]
    return Volume(np.stack(slices), spacing, rescale)


def load_volume(path) -> Volume:
    """Load from a P5 directory, a raw directory, or a ``.json`` header path."""
    path = Path(path)
    if path.is_dir():
        if any(p.suffix == ".pgm" for p in path.iterdir()):
            return load_pgm_stack(path)
        header = path / SIDECAR_NAME
        if header.exists():
            return load_raw_volume(header, path / "volume.raw")
        raise MissingFiles(f"{path}: no *.pgm slices and no {SIDECAR_NAME}")
    if path.suffix == ".json":
        return load_raw_volume(path, path.with_suffix(".raw"))
    raise MissingFiles(f"{path}: expected a directory or a .json header")
