from .markdown import render_bench_report, render_ranking_md, score_decimal

__all__ = ["render_bench_report", "render_ranking_md", "score_decimal"]
