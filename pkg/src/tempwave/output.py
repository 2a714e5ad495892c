"""CSV and SVG writers.

Numbers are written with 12 significant digits so that repeated runs give
byte-identical files.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .oracle import FieldTrace

__all__ = ["Table", "fmt", "emit_csv", "emit_svg", "write_rows"]

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


@dataclass
class Table:
    columns: list
    rows: list
    notes: list = field(default_factory=list)

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return "0" if v == 0 else f"{v:.12g}"
    return str(x)


def _prepare(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.exists() and not os.access(path, os.W_OK):
        raise PermissionError(f"cannot write {path}")
    return path


def write_rows(path, header, rows):
    path = _prepare(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def emit_csv(data, path):
    """Write a :class:`FieldTrace` (``t,re,im,abs``) or a :class:`Table`."""
    if isinstance(data, FieldTrace):
        v = data.values
        rows = zip(data.grid, v.real, v.imag, np.abs(v))
        return write_rows(path, ["t", "re", "im", "abs"], rows)
    if isinstance(data, Table):
        if not data.rows:
            raise ValueError("empty table")
        return write_rows(path, data.columns, data.rows)
    raise TypeError(f"cannot write {type(data).__name__} as CSV")


def emit_svg(traces, path, title="", width=720, height=360):
    """Self-contained line plot of the real part and modulus of each trace."""
    traces = list(traces)
    if not traces:
        raise ValueError("nothing to plot")
    ml, mr, mt, mb = 60, 170, 30, 40
    pw, ph = width - ml - mr, height - mt - mb
    t_lo = min(float(tr.grid[0]) for tr in traces)
    t_hi = max(float(tr.grid[-1]) for tr in traces)
    ys = np.concatenate([np.concatenate([tr.values.real, np.abs(tr.values)]) for tr in traces])
    y_lo, y_hi = float(ys.min()), float(ys.max())
    if t_hi == t_lo:
        t_hi = t_lo + 1.0
    if y_hi - y_lo < 1e-12:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def sx(t):
        return ml + (t - t_lo) / (t_hi - t_lo) * pw

    def sy(y):
        return mt + (y_hi - y) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{ml + pw / 2:.1f}" y="18" text-anchor="middle">{escape(title)}</text>')
    for tick in np.linspace(t_lo, t_hi, 5):
        x = sx(tick)
        out.append(f'<line x1="{x:.2f}" y1="{mt + ph}" x2="{x:.2f}" y2="{mt + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{mt + ph + 16}" text-anchor="middle">{tick:.3g}</text>')
    for tick in np.linspace(y_lo, y_hi, 5):
        y = sy(tick)
        out.append(f'<line x1="{ml - 4}" y1="{y:.2f}" x2="{ml}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 6}" y="{y + 4:.2f}" text-anchor="end">{tick:.3g}</text>')
    if y_lo < 0 < y_hi:
        out.append(f'<line x1="{ml}" y1="{sy(0):.2f}" x2="{ml + pw}" y2="{sy(0):.2f}" stroke="#bbbbbb"/>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 6}" text-anchor="middle">t</text>')

    legend_y = mt + 10
    for i, tr in enumerate(traces):
        color = PALETTE[i % len(PALETTE)]
        for part, values, dash in (("Re", tr.values.real, ""), ("|.|", np.abs(tr.values), ' stroke-dasharray="5,3"')):
            pts = " ".join(f"{sx(t):.2f},{sy(y):.2f}" for t, y in zip(tr.grid, values))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2"{dash} points="{pts}"/>')
            lx = ml + pw + 12
            out.append(f'<line x1="{lx}" y1="{legend_y}" x2="{lx + 22}" y2="{legend_y}" stroke="{color}"{dash}/>')
            out.append(f'<text x="{lx + 28}" y="{legend_y + 4}">{escape(part)} {escape(tr.label)}</text>')
            legend_y += 16
    out.append("</svg>")
    path = _prepare(path)
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path
