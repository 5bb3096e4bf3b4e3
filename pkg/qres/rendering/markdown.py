"""Render rankings and benchmark reports to Markdown."""

from __future__ import annotations

import os
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

from jinja2 import Environment

from qres.utils import load_file

TEMPLATE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "templates")
ENV = Environment(autoescape=False, trim_blocks=True, lstrip_blocks=True)


def _template(name: str):
    return ENV.from_string(load_file(os.path.join(TEMPLATE_DIR, name)))


def score_decimal(score: Fraction, places: int = 4) -> str:
    return f"{float(score):.{places}f}"


def _hits(flags: Sequence[bool]) -> str:
    return "".join("x" if f else "." for f in flags) or "-"


def render_ranking_md(doc: Dict, resolved_provider: Optional[str] = None) -> str:
    """Render a ranking document (``RankingResult.to_document()`` shape).

    Raises:
        ValueError: if ``doc`` has no scheme
    """
    if not isinstance(doc, dict) or "scheme" not in doc:
        raise ValueError("ranking document needs a 'scheme'")
    rows: List[Dict] = []
    for i, rec in enumerate(doc.get("ranking", []), 1):
        score = Fraction(int(rec["score_numerator"]), int(rec["score_denominator"]))
        rows.append({
            "rank": i,
            "short_id": str(rec["anonymous_id"])[:16],
            "decimal": score_decimal(score),
            "exact": str(score),
            "hits": _hits(rec.get("hits_per_keyword", [])),
        })
    text = _template("ranking.md.j2").render(
        scheme=doc["scheme"],
        rows=rows,
        excluded=list(doc.get("excluded", [])),
        resolved_provider=resolved_provider or doc.get("resolved_provider"),
    )
    return text.strip() + "\n"


def render_bench_report(rows, summary, reps: int) -> str:
    text = _template("bench_report.md.j2").render(
        reps=reps,
        rows=[r.to_csv_row() for r in rows],
        slo_ratios=sorted(summary.slo_ratios.items()),
        keyword_fits=summary.keyword_fits,
        provider_fits=summary.provider_fits,
    )
    return text.strip() + "\n"
