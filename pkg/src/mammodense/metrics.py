"""Pixel-count density quantification and CSV reporting."""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass, fields

import numpy as np

__all__ = [
    "DensityReport",
    "DEFAULT_EDGES",
    "density_percent",
    "categorize",
    "make_report",
    "dice",
    "reports_to_csv",
    "reports_from_csv",
]

DEFAULT_EDGES = (0.25, 0.50, 0.75)
CSV_FIELDS = ("image_id", "breast_px", "dense_px", "percent_dense", "category", "threshold_reference")


@dataclass(frozen=True)
class DensityReport:
    image_id: str
    breast_px: int
    dense_px: int
    percent_dense: float
    category: int
    threshold_reference: str

    def __post_init__(self):
        if not 0 <= self.dense_px <= self.breast_px:
            raise ValueError("dense_px must lie in [0, breast_px]")


def density_percent(dense, breast) -> float:
    """Fraction of breast pixels labelled dense."""
    dense = np.asarray(dense, dtype=bool)
    breast = np.asarray(breast, dtype=bool)
    if dense.shape != breast.shape:
        raise ValueError(f"mask shapes differ: {dense.shape} vs {breast.shape}")
    n = int(breast.sum())
    if n == 0:
        raise ValueError("breast mask is empty")
    if np.any(dense & ~breast):
        raise ValueError("dense mask is not a subset of the breast mask")
    return int(dense.sum()) / n


def categorize(percent: float, edges=DEFAULT_EDGES) -> int:
    """Density category 1..len(edges)+1; bins are right-open, 1.0 falls in the top bin."""
    if not 0 <= percent <= 1:
        raise ValueError(f"percent must lie in [0, 1], got {percent}")
    return 1 + sum(percent >= e for e in edges)


def make_report(image_id: str, dense, breast, reference: str = "max", edges=DEFAULT_EDGES) -> DensityReport:
    pct = density_percent(dense, breast)
    return DensityReport(
        image_id=image_id,
        breast_px=int(np.count_nonzero(breast)),
        dense_px=int(np.count_nonzero(dense)),
        percent_dense=pct,
        category=categorize(pct, edges),
        threshold_reference=reference,
    )


def dice(a, b) -> float:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int((a & b).sum()) / total


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in reports:
        row = list(astuple(r))
        row[3] = f"{r.percent_dense:.6f}"
        writer.writerow(row)
    return buf.getvalue()


def reports_from_csv(text: str) -> list[DensityReport]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_FIELDS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    types = {f.name: f.type for f in fields(DensityReport)}
    conv = {"int": int, "float": float, "str": str}
    return [DensityReport(**{k: conv[types[k]](v) for k, v in row.items()}) for row in reader]
