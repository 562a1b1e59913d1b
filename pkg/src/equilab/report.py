"""Serialization of analysis results and SVG rendering.

CSV conventions are bit-exact for golden-file testing: '.' decimal, comma
separator, one header row, LF line endings, numbers formatted with 17
significant digits so they round-trip losslessly.  SVGs are assembled from
strings with fixed coordinate formatting, so identical inputs give identical
bytes; they reference no external resources.
"""
from __future__ import annotations

import json
import math
import os

from .analysis import (DetectionReport, IntervalTable, PowerSurface,
                       ScoreGrid, ConsistencyReport, reliable_table)

# 16-color palette for the function bands (fixed, documented order)
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
    "#98df8a", "#ff9896", "#c5b0d5", "#c49c94",
)

# Heatmap ramp anchors: white at power 0 through saturated red at power 1,
# with a mid anchor at power 0.5.  Piecewise-linear RGB interpolation.
RAMP_ANCHORS = ((0.0, (255, 255, 255)),
                (0.5, (251, 106, 74)),
                (1.0, (103, 0, 13)))


def fmt(x) -> str:
    """17-significant-digit decimal formatting (lossless round trip)."""
    return format(float(x), ".17g")


def ramp_color(power: float) -> str:
    """Hex color for a power value in [0, 1]."""
    p = min(1.0, max(0.0, power))
    for (p0, c0), (p1, c1) in zip(RAMP_ANCHORS, RAMP_ANCHORS[1:]):
        if p <= p1:
            t = 0.0 if p1 == p0 else (p - p0) / (p1 - p0)
            rgb = tuple(round(a + t * (b - a)) for a, b in zip(c0, c1))
            return "#{:02x}{:02x}{:02x}".format(*rgb)
    return "#{:02x}{:02x}{:02x}".format(*RAMP_ANCHORS[-1][1])


def _equit_json(width: float):
    return "perfect" if width == 0.0 else 1.0 / width


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------

def write_tables(grid: ScoreGrid, interval_table: IntervalTable,
                 power_surface: PowerSurface,
                 detection_report: DetectionReport,
                 out_dir: str,
                 consistency: ConsistencyReport | None = None,
                 manifest: dict | None = None) -> list[str]:
    """Emit quantiles.csv, intervals.csv, power.csv, and summary.json."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    alpha = interval_table.alpha

    path = os.path.join(out_dir, "quantiles.csv")
    with open(path, "w", newline="\n") as f:
        f.write("function_id,target_r2,sigma,prob,value\n")
        from .analysis import quantile
        for fi, fid in enumerate(grid.function_ids):
            for li, lv in enumerate(grid.levels[fi]):
                sigma = "inf" if math.isinf(lv.sigma) else fmt(lv.sigma)
                for p in (alpha / 2.0, 0.5, 1.0 - alpha / 2.0):
                    v = quantile(grid.scores[fi, li], p)
                    f.write(f"{fid},{fmt(lv.target_r2)},{sigma},"
                            f"{fmt(p)},{fmt(v)}\n")
    paths.append(path)

    path = os.path.join(out_dir, "intervals.csv")
    with open(path, "w", newline="\n") as f:
        f.write("kind,anchor,lo,hi,flag\n")
        for x, iv in interval_table.reliable.items():
            f.write(f"reliable,{fmt(x)},{fmt(iv.lo)},{fmt(iv.hi)},\n")
        for y, (iv, extrapolated) in interval_table.interpretable.items():
            flag = "extrapolated" if extrapolated else ""
            f.write(f"interpretable,{fmt(y)},{fmt(iv.lo)},{fmt(iv.hi)},"
                    f"{flag}\n")
    paths.append(path)

    path = os.path.join(out_dir, "power.csv")
    with open(path, "w", newline="\n") as f:
        f.write("x0,x1,power,critical_value\n")
        nl = len(power_surface.x_grid)
        if nl >= 2:
            for i0 in range(nl):
                for i1 in range(i0, nl):
                    f.write(f"{fmt(power_surface.x_grid[i0])},"
                            f"{fmt(power_surface.x_grid[i1])},"
                            f"{fmt(power_surface.power[i0, i1])},"
                            f"{fmt(power_surface.critical_values[i0])}\n")
    paths.append(path)

    summary = {
        "alpha": alpha,
        "beta": detection_report.beta,
        "worst_case_width": interval_table.worst_case_width,
        "average_case_width": interval_table.average_case_width,
        "worst_case_equitability": _equit_json(
            interval_table.worst_case_width),
        "average_case_equitability": _equit_json(
            interval_table.average_case_width),
        "score_range": list(interval_table.score_range),
        "detection_threshold": ("none-achieved"
                                if detection_report.threshold is None
                                else detection_report.threshold),
        "theorem1": (None if consistency is None else {
            "max_discrepancy_steps": (
                None if math.isnan(consistency.max_discrepancy_steps)
                else consistency.max_discrepancy_steps),
            "checked_rows": consistency.checked_rows,
            "skipped_rows": consistency.skipped_rows,
        }),
        "manifest": manifest or {},
    }
    path = os.path.join(out_dir, "summary.json")
    with open(path, "w", newline="\n") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# SVG helpers
# ---------------------------------------------------------------------------

_W, _H = 720, 520
_ML, _MR, _MT, _MB = 70, 30, 40, 55


def _c(v: float) -> str:
    return format(v, ".2f")


def _axes(parts, x_label: str, y_label: str, x_ticks, y_ticks,
          x_of, y_of, title: str):
    parts.append(f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
                 f'height="{_H - _MT - _MB}" fill="none" stroke="#000000" '
                 f'stroke-width="1"/>')
    for v, lab in x_ticks:
        px = x_of(v)
        parts.append(f'<line x1="{_c(px)}" y1="{_H - _MB}" x2="{_c(px)}" '
                     f'y2="{_H - _MB + 5}" stroke="#000000"/>')
        parts.append(f'<text x="{_c(px)}" y="{_H - _MB + 18}" '
                     f'font-size="11" text-anchor="middle">{lab}</text>')
    for v, lab in y_ticks:
        py = y_of(v)
        parts.append(f'<line x1="{_ML - 5}" y1="{_c(py)}" x2="{_ML}" '
                     f'y2="{_c(py)}" stroke="#000000"/>')
        parts.append(f'<text x="{_ML - 8}" y="{_c(py + 4)}" font-size="11" '
                     f'text-anchor="end">{lab}</text>')
    parts.append(f'<text x="{(_ML + _W - _MR) // 2}" y="{_H - 15}" '
                 f'font-size="13" text-anchor="middle">{x_label}</text>')
    parts.append(f'<text x="18" y="{(_MT + _H - _MB) // 2}" font-size="13" '
                 f'text-anchor="middle" transform="rotate(-90 18 '
                 f'{(_MT + _H - _MB) // 2})">{y_label}</text>')
    parts.append(f'<text x="{_W // 2}" y="24" font-size="14" '
                 f'text-anchor="middle">{title}</text>')


def _finish(parts, out_svg: str):
    body = "\n".join(parts)
    doc = ('<?xml version="1.0" encoding="UTF-8"?>\n'
           f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" '
           f'height="{_H}" viewBox="0 0 {_W} {_H}">\n'
           f'<rect width="{_W}" height="{_H}" fill="#ffffff"/>\n'
           f"{body}\n</svg>\n")
    with open(out_svg, "w", newline="\n") as f:
        f.write(doc)


def render_interval_plot(grid: ScoreGrid, alpha: float, out_svg: str,
                         interval_table: IntervalTable | None = None) -> None:
    """One shaded quantile band per function over the R^2 grid.

    Band edges are the alpha/2 and 1-alpha/2 quantiles of the sampling
    distribution; the widest interpretable interval is drawn as a highlighted
    horizontal segment.
    """
    from .analysis import equitability_summary, quantile
    if interval_table is None:
        interval_table = equitability_summary(grid, alpha)
    targets = grid.target_grid
    smin, smax = interval_table.score_range
    pad = 0.05 * (smax - smin) or 0.05
    ymin, ymax = smin - pad, smax + pad

    def x_of(v):
        return _ML + (v - 0.0) / 1.0 * (_W - _ML - _MR)

    def y_of(v):
        return _H - _MB - (v - ymin) / (ymax - ymin) * (_H - _MT - _MB)

    parts = []
    for fi, fid in enumerate(grid.function_ids):
        color = PALETTE[fi % len(PALETTE)]
        lo = [quantile(grid.scores[fi, li], alpha / 2.0)
              for li in range(grid.n_levels)]
        hi = [quantile(grid.scores[fi, li], 1.0 - alpha / 2.0)
              for li in range(grid.n_levels)]
        pts = [f"{_c(x_of(t))},{_c(y_of(h))}" for t, h in zip(targets, hi)]
        pts += [f"{_c(x_of(t))},{_c(y_of(l))}"
                for t, l in zip(targets[::-1], lo[::-1])]
        parts.append(f'<polygon points="{" ".join(pts)}" fill="{color}" '
                     f'fill-opacity="0.35" stroke="{color}" '
                     f'stroke-width="0.5"><title>{fid}</title></polygon>')

    widest_y, (widest_iv, _) = max(
        interval_table.interpretable.items(), key=lambda kv: kv[1][0].width)
    parts.append(f'<line x1="{_c(x_of(widest_iv.lo))}" '
                 f'y1="{_c(y_of(widest_y))}" '
                 f'x2="{_c(x_of(widest_iv.hi))}" '
                 f'y2="{_c(y_of(widest_y))}" stroke="#d62728" '
                 f'stroke-width="3"/>')

    x_ticks = [(v, format(v, ".2f")) for v in (0.0, 0.25, 0.5, 0.75, 1.0)]
    yt = [ymin + i * (ymax - ymin) / 4 for i in range(5)]
    y_ticks = [(v, format(v, ".2f")) for v in yt]
    _axes(parts, "R&#178; (property of interest)",
          f"{grid.statistic.label} score", x_ticks, y_ticks, x_of, y_of,
          f"Quantile bands and widest interpretable interval "
          f"({grid.statistic.label})")
    _finish(parts, out_svg)


def render_power_heatmap(surface: PowerSurface, out_svg: str,
                         label: str = "") -> None:
    """Lower-triangular heatmap of power over (x1, x0) grid pairs.

    x1 runs horizontally, x0 vertically (increasing upward); color follows
    the documented white-to-red ramp.  A legend bar is included.
    """
    nl = len(surface.x_grid)
    if nl == 0:
        raise ValueError("empty power surface")
    plot_w = _W - _ML - _MR - 60  # reserve room for the legend
    plot_h = _H - _MT - _MB
    cw = plot_w / nl
    ch = plot_h / nl

    def x_of(v):
        return _ML + v * plot_w

    def y_of(v):
        return _H - _MB - v * plot_h

    parts = []
    for i0 in range(nl):
        for i1 in range(i0, nl):
            p = surface.power[i0, i1]
            x = _ML + i1 * cw
            y = _H - _MB - (i0 + 1) * ch
            parts.append(f'<rect x="{_c(x)}" y="{_c(y)}" '
                         f'width="{_c(cw + 0.5)}" height="{_c(ch + 0.5)}" '
                         f'fill="{ramp_color(float(p))}"/>')

    ticks = [(0.0, "0.00"), (0.25, "0.25"), (0.5, "0.50"),
             (0.75, "0.75"), (1.0, "1.00")]
    _axes(parts, "x&#8321; (alternative R&#178;)", "x&#8320; (null R&#178;)",
          ticks, ticks, x_of, y_of,
          f"Power of most permissive right-tailed tests {label}".rstrip())

    # legend: vertical gradient bar approximated by 20 cells
    lx = _W - _MR - 40
    lh = plot_h
    for i in range(20):
        p = (i + 0.5) / 20.0
        y = _H - _MB - (i + 1) * lh / 20.0
        parts.append(f'<rect x="{lx}" y="{_c(y)}" width="18" '
                     f'height="{_c(lh / 20.0 + 0.5)}" '
                     f'fill="{ramp_color(p)}"/>')
    parts.append(f'<rect x="{lx}" y="{_MT}" width="18" height="{_c(lh)}" '
                 f'fill="none" stroke="#000000" stroke-width="0.5"/>')
    for v, lab in ((0.0, "0"), (0.5, "0.5"), (1.0, "1")):
        y = _H - _MB - v * lh
        parts.append(f'<text x="{lx + 22}" y="{_c(y + 4)}" font-size="10" '
                     f'text-anchor="start">{lab}</text>')
    parts.append(f'<text x="{lx + 9}" y="{_MT - 6}" font-size="10" '
                 f'text-anchor="middle">power</text>')
    _finish(parts, out_svg)
