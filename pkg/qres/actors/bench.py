"""Search-time benchmarks over a grid of (keywords, SLOs, providers) cells."""

from __future__ import annotations

import csv
import itertools
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import yaml

from qres.actors.scenario import Scenario, build_scenario
from qres.errors import ConfigError
from qres.ranking import PRIORITIZED, SCHEMES
from qres.utils import get_logger, load_file

logger = get_logger(__name__)

CSV_COLUMNS = ("keywords", "slos", "providers", "scheme", "mean_ms", "stddev_ms", "reps")
MIN_FIT_POINTS = 3


@dataclass(frozen=True)
class BenchCell:
    keywords: int
    slos: int
    providers: int
    scheme: str = PRIORITIZED


@dataclass
class BenchRow:
    cell: BenchCell
    samples_ms: List[float]

    @property
    def reps(self) -> int:
        return len(self.samples_ms)

    @property
    def mean_ms(self) -> float:
        return float(np.mean(self.samples_ms))

    @property
    def stddev_ms(self) -> float:
        return float(np.std(self.samples_ms, ddof=1)) if self.reps > 1 else 0.0

    def to_csv_row(self) -> Dict[str, Any]:
        return {
            "keywords": self.cell.keywords,
            "slos": self.cell.slos,
            "providers": self.cell.providers,
            "scheme": self.cell.scheme,
            "mean_ms": f"{self.mean_ms:.3f}",
            "stddev_ms": f"{self.stddev_ms:.3f}",
            "reps": self.reps,
        }


@dataclass
class LinearFit:
    label: str
    xs: List[float]
    ys: List[float]
    slope: float
    intercept: float
    r_squared: float


@dataclass
class BenchSummary:
    # keywords -> mean time at the largest SLO count / mean time at the smallest
    slo_ratios: Dict[int, float] = field(default_factory=dict)
    keyword_fits: List[LinearFit] = field(default_factory=list)
    provider_fits: List[LinearFit] = field(default_factory=list)


def load_grid(path: str) -> List[BenchCell]:
    """Grid file: lists under ``keywords``, ``slos``, ``providers`` and optional ``schemes``."""
    try:
        raw = yaml.safe_load(load_file(path)) or {}
    except FileNotFoundError as e:
        raise ConfigError(f"Bench grid not found: {path}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"Bench grid parse error in {path}: {e}") from e
    return grid_cells(
        raw.get("keywords", []), raw.get("slos", []), raw.get("providers", [1]), raw.get("schemes", [PRIORITIZED])
    )


def grid_cells(
    keywords: Sequence[int], slos: Sequence[int], providers: Sequence[int], schemes: Sequence[str] = (PRIORITIZED,)
) -> List[BenchCell]:
    for name, values in (("keywords", keywords), ("slos", slos), ("providers", providers)):
        if not values or any(int(v) < 1 for v in values):
            raise ConfigError(f"bench grid '{name}' needs one or more positive counts")
    for s in schemes:
        if s not in SCHEMES:
            raise ConfigError(f"bench grid scheme {s!r} is not one of {SCHEMES}")
    return [
        BenchCell(int(k), int(n), int(m), s)
        for k, n, m, s in itertools.product(keywords, slos, providers, schemes)
    ]


def bench_cell(cell: BenchCell, reps: int, cfg: Optional[Dict[str, Any]] = None, seed: int = 0) -> BenchRow:
    """Time ``reps`` customer searches against one marketplace built for the cell."""
    run = build_scenario(Scenario(cell.providers, cell.slos, cell.keywords, seed=seed), cfg)
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter()
        run.search(cell.scheme)
        samples.append((time.perf_counter() - t0) * 1000.0)
    row = BenchRow(cell, samples)
    logger.info(
        "bench cell keywords=%d slos=%d providers=%d scheme=%s mean_ms=%.1f",
        cell.keywords, cell.slos, cell.providers, cell.scheme, row.mean_ms,
    )
    return row


def bench_run(
    cells: Sequence[BenchCell], reps: int, cfg: Optional[Dict[str, Any]] = None, seed: int = 0
) -> List[BenchRow]:
    if reps < 1:
        raise ValueError(f"bench needs at least one repetition, got {reps}")
    if not cells:
        raise ValueError("bench grid is empty")
    return [bench_cell(cell, reps, cfg, seed) for cell in cells]


def write_csv(rows: Sequence[BenchRow], path: str) -> str:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row.to_csv_row())
    return path


def linear_fit(label: str, xs: Sequence[float], ys: Sequence[float]) -> LinearFit:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sum((y - (slope * x + intercept)) ** 2))
    total = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - residual / total if total > 0 else 1.0
    return LinearFit(label, list(map(float, xs)), list(map(float, ys)), float(slope), float(intercept), r2)


def summarize(rows: Sequence[BenchRow]) -> BenchSummary:
    summary = BenchSummary()
    by_cell = {r.cell: r.mean_ms for r in rows}

    for (k, m, s), group in _groups(by_cell, lambda c: (c.keywords, c.providers, c.scheme)).items():
        if len(group) >= 2 and m == 1:
            lo, hi = min(group, key=lambda c: c.slos), max(group, key=lambda c: c.slos)
            if by_cell[lo] > 0:
                summary.slo_ratios[k] = by_cell[hi] / by_cell[lo]

    for (n, m, s), group in _groups(by_cell, lambda c: (c.slos, c.providers, c.scheme)).items():
        if len(group) >= MIN_FIT_POINTS:
            group.sort(key=lambda c: c.keywords)
            summary.keyword_fits.append(
                linear_fit(f"slos={n} providers={m} {s}", [c.keywords for c in group], [by_cell[c] for c in group])
            )

    for (k, n, s), group in _groups(by_cell, lambda c: (c.keywords, c.slos, c.scheme)).items():
        if len(group) >= MIN_FIT_POINTS:
            group.sort(key=lambda c: c.providers)
            summary.provider_fits.append(
                linear_fit(f"keywords={k} slos={n} {s}", [c.providers for c in group], [by_cell[c] for c in group])
            )
    return summary


def _groups(by_cell: Dict[BenchCell, float], key) -> Dict[tuple, List[BenchCell]]:
    out: Dict[tuple, List[BenchCell]] = {}
    for cell in by_cell:
        out.setdefault(key(cell), []).append(cell)
    return out
