"""Result persistence and comparison plots.

Everything here is a pure function of completed results: identical inputs
produce byte-identical files.  Plots are standalone SVG (no raster, no
plotting dependency) so they stay deterministic and reviewable anywhere.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple
from xml.sax.saxutils import escape

from .core import EmptySeriesError, InvalidArgumentError, OlstreamError
from .evaluate import MetricSeries, PrequentialRecord, SummaryRow

# Fixed palette; series colors are assigned by color index modulo 10.
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


class IoError(OlstreamError):
    """A file could not be written or read; carries the path."""

    def __init__(self, path, message: str):
        super().__init__(f"{path}: {message}")
        self.path = str(path)


def _format_label(value) -> str:
    if isinstance(value, bool):
        raise InvalidArgumentError("labels must be numbers")
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def _parse_label(text: str):
    if any(ch in text for ch in ".eE"):
        return float(text)
    return int(text)


RECORDS_HEADER = "step,true,pred,queried,model,stream,round"


def write_records_csv(records: Sequence[PrequentialRecord], path) -> None:
    """Persist records, ordered by (model, stream, round, step)."""
    if not records:
        raise EmptySeriesError("no records to write")
    ordered = sorted(records, key=lambda r: (r.model, r.stream, r.round_index, r.step))
    lines = [RECORDS_HEADER]
    for r in ordered:
        lines.append(",".join([
            str(r.step), _format_label(r.true_label), _format_label(r.pred_label),
            str(int(r.queried)), r.model, r.stream, str(r.round_index),
        ]))
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoError(path, str(exc)) from exc


def read_records_csv(path) -> List[PrequentialRecord]:
    """Inverse of :func:`write_records_csv`; exact round-trip."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(path, str(exc)) from exc
    lines = [line for line in text.split("\n") if line]
    if not lines or lines[0] != RECORDS_HEADER:
        raise IoError(path, "not a records CSV (bad header)")
    records = []
    for line in lines[1:]:
        step, true, pred, queried, model, stream, round_index = line.split(",")
        records.append(PrequentialRecord(
            int(step), _parse_label(true), _parse_label(pred), int(queried),
            model, stream, int(round_index)))
    return records


# ---------------------------------------------------------------------------
# Comparison SVG
# ---------------------------------------------------------------------------


@dataclass
class ComparisonSpec:
    """What to draw: labeled metric curves sharing one metric definition."""

    series: List[Tuple[str, MetricSeries, int]]  # (label, series, color index)
    title: str = ""
    x_label: str = "step"
    y_label: str = "accuracy"
    y_range: Tuple[float, float] = (0.0, 1.0)

    def validate(self) -> "ComparisonSpec":
        if not self.series:
            raise EmptySeriesError("comparison needs at least one series")
        for label, series, _ in self.series:
            if len(series) < 1:
                raise EmptySeriesError(f"series {label!r} has no points")
        if not self.y_range[1] > self.y_range[0]:
            raise InvalidArgumentError("y_range must be increasing")
        return self


_WIDTH, _HEIGHT = 800, 480
_PLOT = (60.0, 40.0, 600.0, 430.0)  # left, top, right, bottom


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_comparison_svg(spec: ComparisonSpec, path) -> None:
    """Render the comparison as a standalone SVG 1.1 document.

    One polyline per series (point count equals series length), sparse
    circular markers, axes with tick labels, and a legend mapping labels to
    palette colors.  Output bytes are a pure function of the spec.
    """
    spec.validate()
    left, top, right, bottom = _PLOT
    x_min = min(min(s.steps) for _, s, _ in spec.series)
    x_max = max(max(s.steps) for _, s, _ in spec.series)
    if x_max == x_min:
        x_max = x_min + 1
    y_min, y_max = spec.y_range

    def sx(t: float) -> float:
        return left + (t - x_min) / (x_max - x_min) * (right - left)

    def sy(v: float) -> float:
        return bottom - (v - y_min) / (y_max - y_min) * (bottom - top)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_WIDTH}" height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
    ]
    if spec.title:
        parts.append(
            f'<text x="{_fmt((left + right) / 2)}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{escape(spec.title)}</text>')

    # Axes and ticks.
    parts.append(
        f'<line x1="{_fmt(left)}" y1="{_fmt(bottom)}" x2="{_fmt(right)}" '
        f'y2="{_fmt(bottom)}" stroke="black" stroke-width="1"/>')
    parts.append(
        f'<line x1="{_fmt(left)}" y1="{_fmt(top)}" x2="{_fmt(left)}" '
        f'y2="{_fmt(bottom)}" stroke="black" stroke-width="1"/>')
    for i in range(5):
        frac = i / 4
        tx = left + frac * (right - left)
        tv = x_min + frac * (x_max - x_min)
        parts.append(
            f'<line x1="{_fmt(tx)}" y1="{_fmt(bottom)}" x2="{_fmt(tx)}" '
            f'y2="{_fmt(bottom + 5)}" stroke="black" stroke-width="1"/>')
        parts.append(
            f'<text x="{_fmt(tx)}" y="{_fmt(bottom + 20)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{int(round(tv))}</text>')
        ty = bottom - frac * (bottom - top)
        yv = y_min + frac * (y_max - y_min)
        parts.append(
            f'<line x1="{_fmt(left - 5)}" y1="{_fmt(ty)}" x2="{_fmt(left)}" '
            f'y2="{_fmt(ty)}" stroke="black" stroke-width="1"/>')
        parts.append(
            f'<text x="{_fmt(left - 9)}" y="{_fmt(ty + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{yv:.2f}</text>')
    parts.append(
        f'<text x="{_fmt((left + right) / 2)}" y="{_fmt(bottom + 38)}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="12">'
        f'{escape(spec.x_label)}</text>')
    parts.append(
        f'<text x="16" y="{_fmt((top + bottom) / 2)}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {_fmt((top + bottom) / 2)})">'
        f'{escape(spec.y_label)}</text>')

    # Curves with sparse markers, then the legend.
    for label, series, color_index in spec.series:
        color = PALETTE[color_index % len(PALETTE)]
        points = " ".join(
            f"{_fmt(sx(t))},{_fmt(sy(v))}" for t, v in zip(series.steps, series.values))
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
            f'points="{points}"/>')
        stride = max(1, len(series) // 20)
        for i in range(0, len(series), stride):
            parts.append(
                f'<circle cx="{_fmt(sx(series.steps[i]))}" '
                f'cy="{_fmt(sy(series.values[i]))}" r="2.5" fill="{color}"/>')
    for pos, (label, _, color_index) in enumerate(spec.series):
        color = PALETTE[color_index % len(PALETTE)]
        ly = top + 14 + pos * 18
        parts.append(
            f'<line x1="{_fmt(right + 12)}" y1="{_fmt(ly)}" x2="{_fmt(right + 36)}" '
            f'y2="{_fmt(ly)}" stroke="{color}" stroke-width="2"/>')
        parts.append(
            f'<text x="{_fmt(right + 42)}" y="{_fmt(ly + 4)}" '
            f'font-family="sans-serif" font-size="12">{escape(label)}</text>')

    parts.append("</svg>")
    try:
        Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoError(path, str(exc)) from exc


# ---------------------------------------------------------------------------
# Summary CSV and run manifest
# ---------------------------------------------------------------------------


SUMMARY_HEADER = "model,stream,rounds,mean_acc,std_acc,mean_macro_f1,spend"


def write_summary(rows: Sequence[SummaryRow], path) -> None:
    """Summary table with 6-decimal fixed formatting.

    ``std_acc`` is the population standard deviation over rounds.  For
    regression streams the accuracy columns carry mean absolute error.
    """
    if not rows:
        raise EmptySeriesError("no completed jobs to summarize")
    ordered = sorted(rows, key=lambda r: (r.model, r.stream))
    lines = ["# std columns use the population standard deviation", SUMMARY_HEADER]
    for r in ordered:
        lines.append(",".join([
            r.model, r.stream, str(r.rounds),
            f"{r.mean_score:.6f}", f"{r.std_score:.6f}",
            f"{r.mean_macro_f1:.6f}", f"{r.spend:.6f}",
        ]))
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoError(path, str(exc)) from exc


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(path, config_items: Dict[str, str],
                   job_statuses: Sequence[Tuple[str, str]],
                   files: Sequence[Path]) -> None:
    """Flat key-value audit file: config echo, per-job status, and the
    SHA-256 of every produced file.

    The output directory itself is deliberately not echoed, so two runs of
    the same configuration into different directories produce identical
    manifests.
    """
    lines = []
    for key in sorted(config_items):
        lines.append(f"config.{key}={config_items[key]}")
    for name, status in job_statuses:
        lines.append(f"job.{name}={status}")
    for file_path in sorted(files, key=lambda p: Path(p).name):
        lines.append(f"file.{Path(file_path).name}.sha256={sha256_file(file_path)}")
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoError(path, str(exc)) from exc
