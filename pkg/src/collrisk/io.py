"""CSV and key=value file formats used by the command-line front end."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

from .lattice import LatticeDistribution


def _read_rows(path: str | Path, expected: Sequence[str]) -> list[list[float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header[: len(expected)] != list(expected):
            raise ValueError(f"{path}: expected header {','.join(expected)}, got {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            try:
                rows.append([float(row[i]) for i in range(len(expected))])
            except (ValueError, IndexError):
                raise ValueError(f"{path}:{lineno}: malformed row {row!r}") from None
    return rows


def read_pmf(path: str | Path) -> list[tuple[float, float]]:
    return [(x, p) for x, p in _read_rows(path, ("x", "prob"))]


def read_claims(path: str | Path) -> list[float]:
    return [v for (v,) in _read_rows(path, ("claim",))]


def read_distortion(path: str | Path) -> list[tuple[float, float]]:
    return [(t, g) for t, g in _read_rows(path, ("t", "g"))]


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence]) -> int:
    """Write a header plus rows; floats use their shortest round-trip repr."""
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
            count += 1
    return count


def write_pmf(path: str | Path, d: LatticeDistribution) -> int:
    return write_csv(path, ("x", "prob"), zip(d.points.tolist(), d.masses.tolist()))


def read_config(path: str | Path) -> dict[str, str]:
    """Flat ``key=value`` file; ``#`` starts a comment line."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            out[key.strip().replace("-", "_")] = value.strip()
    return out
