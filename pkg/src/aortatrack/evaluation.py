"""Per-slice vessel-count agreement between automated and reference counts."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

from .errors import EmptyInput, LengthMismatch, MalformedHeader

COUNTS_HEADER = "slice,count"


@dataclass(frozen=True)
class AgreementReport:
    n_slices: int
    exact_match_rate: float
    mean_abs_error: float
    per_slice_diff: Tuple[int, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "exact_match_rate": round(self.exact_match_rate, 6),
                "mean_abs_error": round(self.mean_abs_error, 6),
                "n_slices": self.n_slices,
                "per_slice_diff": list(self.per_slice_diff),
            },
            separators=(",", ":"),
        )


def compare_counts(auto: Sequence[int], reference: Sequence[int]) -> AgreementReport:
    if len(auto) == 0 or len(reference) == 0:
        raise EmptyInput("count vectors must be non-empty")
    if len(auto) != len(reference):
        raise LengthMismatch(f"{len(auto)} automated counts vs {len(reference)} reference counts")
    diff = tuple(int(a) - int(r) for a, r in zip(auto, reference))
    n = len(diff)
    return AgreementReport(
        n_slices=n,
        exact_match_rate=sum(d == 0 for d in diff) / n,
        mean_abs_error=sum(abs(d) for d in diff) / n,
        per_slice_diff=diff,
    )


def read_counts_csv(path) -> List[int]:
    """Parse a ``slice,count`` file; slices must run 0, 1, 2, ... in order."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != COUNTS_HEADER:
        raise MalformedHeader(f"{path}: expected header '{COUNTS_HEADER}'")
    counts = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            k, c = (int(f) for f in line.split(","))
        except ValueError:
            raise MalformedHeader(f"{path}:{lineno}: expected 'slice,count'") from None
        if k != len(counts):
            raise MalformedHeader(f"{path}:{lineno}: slice {k} out of order")
        counts.append(c)
    return counts


def write_counts_csv(counts: Sequence[int], path) -> None:
    lines = [COUNTS_HEADER] + [f"{k},{int(c)}" for k, c in enumerate(counts)]
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
