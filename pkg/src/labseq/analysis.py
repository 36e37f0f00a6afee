"""GCMS post-processing: concentration/yield proportionality and run means."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

CSV_HEADER = ("label", "concentration_mg_ml", "yield_pct")


class FitError(ValueError):
    pass


class SampleFormatError(ValueError):
    pass


@dataclass(frozen=True)
class GcmsSample:
    label: str
    concentration: float            # mg/mL
    yield_pct: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.concentration) and self.concentration >= 0):
            raise ValueError(f"{self.label}: concentration must be >= 0, got {self.concentration}")
        if self.yield_pct is not None and not 0 <= self.yield_pct <= 100:
            raise ValueError(f"{self.label}: yield must lie in [0, 100], got {self.yield_pct}")


def fit_proportionality(samples: Sequence[GcmsSample]) -> float:
    """Least-squares slope k of ``concentration = k * yield`` through the origin.

    Samples without a yield are ignored.
    """
    known = [s for s in samples if s.yield_pct is not None]
    y = np.array([s.yield_pct for s in known], dtype=float)
    c = np.array([s.concentration for s in known], dtype=float)
    denom = float(y @ y)
    if denom == 0.0:
        raise FitError("need at least one sample with a non-zero yield")
    k = float(c @ y) / denom
    if not k > 0:
        raise FitError(f"fitted slope {k} is not positive")
    return k


def predict_yield(concentration: float, k: float) -> float:
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    return concentration / k


@dataclass(frozen=True)
class SampleMeans:
    count: int
    mean_concentration: float
    mean_yield: Optional[float]


def summarize(samples: Sequence[GcmsSample]) -> SampleMeans:
    if not samples:
        raise ValueError("no samples to summarize")
    conc = float(np.mean([s.concentration for s in samples]))
    yields = [s.yield_pct for s in samples if s.yield_pct is not None]
    return SampleMeans(len(samples), conc, float(np.mean(yields)) if yields else None)


def read_samples(source: Union[str, Path, io.TextIOBase]) -> list[GcmsSample]:
    """Load samples from CSV with header ``label,concentration_mg_ml,yield_pct``."""
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_samples(fh)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise SampleFormatError("empty CSV") from None
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise SampleFormatError(f"expected header {','.join(CSV_HEADER)}, got {','.join(header)}")
    samples = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise SampleFormatError(f"line {lineno}: expected 3 fields, got {len(row)}")
        label, conc, yld = (cell.strip() for cell in row)
        try:
            samples.append(GcmsSample(label, float(conc), float(yld) if yld else None))
        except ValueError as exc:
            raise SampleFormatError(f"line {lineno}: {exc}") from None
    return samples


def write_samples(samples: Iterable[GcmsSample], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for s in samples:
        writer.writerow([s.label, f"{s.concentration:g}", "" if s.yield_pct is None else f"{s.yield_pct:g}"])
