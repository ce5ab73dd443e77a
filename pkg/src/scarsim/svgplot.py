"""Minimal static SVG charts: lines, scatter points and error bars."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]


@dataclass
class _Series:
    kind: str
    x: np.ndarray
    y: np.ndarray
    label: str
    color: str
    yerr: np.ndarray | None = None


@dataclass
class Figure:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    logx: bool = False
    width: int = 640
    height: int = 420
    series: list[_Series] = field(default_factory=list)

    margin_left = 70
    margin_right = 20
    margin_top = 40
    margin_bottom = 55

    def _next_color(self) -> str:
        return PALETTE[len(self.series) % len(PALETTE)]

    def line(self, x, y, label: str = "", color: str | None = None) -> "Figure":
        self.series.append(_Series("line", np.asarray(x, float), np.asarray(y, float), label, color or self._next_color()))
        return self

    def scatter(self, x, y, label: str = "", color: str | None = None) -> "Figure":
        self.series.append(_Series("scatter", np.asarray(x, float), np.asarray(y, float), label, color or self._next_color()))
        return self

    def errorbar(self, x, y, yerr, label: str = "", color: str | None = None) -> "Figure":
        self.series.append(
            _Series("errorbar", np.asarray(x, float), np.asarray(y, float), label,
                    color or self._next_color(), np.asarray(yerr, float))
        )
        return self

    # -- geometry ---------------------------------------------------------

    def _tx(self, x: np.ndarray) -> np.ndarray:
        return np.log10(x) if self.logx else x

    def _limits(self) -> tuple[float, float, float, float]:
        xs = np.concatenate([self._tx(s.x[np.isfinite(s.x)]) for s in self.series]) if self.series else np.array([0, 1])
        ys = []
        for s in self.series:
            y = s.y[np.isfinite(s.y)]
            ys.append(y)
            if s.yerr is not None:
                ys += [y + s.yerr[np.isfinite(s.y)], y - s.yerr[np.isfinite(s.y)]]
        ys = np.concatenate(ys) if ys else np.array([0, 1])
        x0, x1 = (float(xs.min()), float(xs.max())) if xs.size else (0.0, 1.0)
        y0, y1 = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        pad = 0.05 * (y1 - y0)
        return x0, x1, y0 - pad, y1 + pad

    def to_svg(self) -> str:
        W, H = self.width, self.height
        ml, mr, mt, mb = self.margin_left, self.margin_right, self.margin_top, self.margin_bottom
        pw, ph = W - ml - mr, H - mt - mb
        x0, x1, y0, y1 = self._limits()

        def px(x):
            return ml + (self._tx(np.asarray(x, float)) - x0) / (x1 - x0) * pw

        def py(y):
            return mt + ph - (np.asarray(y, float) - y0) / (y1 - y0) * ph

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
            f'<rect width="{W}" height="{H}" fill="white"/>',
            f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        ]
        for t in _ticks(x0, x1):
            X = ml + (t - x0) / (x1 - x0) * pw
            label = _fmt_tick(10**t if self.logx else t)
            out.append(f'<line x1="{X:.2f}" y1="{mt + ph}" x2="{X:.2f}" y2="{mt + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{X:.2f}" y="{mt + ph + 18}" font-size="11" text-anchor="middle">{label}</text>')
        for t in _ticks(y0, y1):
            Y = mt + ph - (t - y0) / (y1 - y0) * ph
            out.append(f'<line x1="{ml - 5}" y1="{Y:.2f}" x2="{ml}" y2="{Y:.2f}" stroke="black"/>')
            out.append(f'<text x="{ml - 8}" y="{Y + 4:.2f}" font-size="11" text-anchor="end">{_fmt_tick(t)}</text>')

        for s in self.series:
            ok = np.isfinite(s.x) & np.isfinite(s.y)
            X, Y = px(s.x[ok]), py(s.y[ok])
            if s.kind == "line" and X.size:
                pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(X, Y))
                out.append(f'<polyline points="{pts}" fill="none" stroke="{s.color}" stroke-width="1.5"/>')
            else:
                if s.kind == "errorbar":
                    e = s.yerr[ok]
                    for a, yv, ev in zip(X, s.y[ok], e):
                        lo, hi = py(yv - ev), py(yv + ev)
                        out.append(f'<line x1="{a:.2f}" y1="{lo:.2f}" x2="{a:.2f}" y2="{hi:.2f}" stroke="{s.color}"/>')
                for a, b in zip(X, Y):
                    out.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2.5" fill="{s.color}"/>')

        for k, s in enumerate(s for s in self.series if s.label):
            Y = mt + 14 + 16 * k
            out.append(f'<rect x="{ml + pw - 150}" y="{Y - 9}" width="10" height="10" fill="{s.color}"/>')
            out.append(f'<text x="{ml + pw - 135}" y="{Y}" font-size="11">{escape(s.label)}</text>')

        out.append(f'<text x="{W / 2}" y="22" font-size="14" text-anchor="middle">{escape(self.title)}</text>')
        out.append(f'<text x="{ml + pw / 2}" y="{H - 12}" font-size="12" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(
            f'<text x="16" y="{mt + ph / 2}" font-size="12" text-anchor="middle" '
            f'transform="rotate(-90 16 {mt + ph / 2})">{escape(self.ylabel)}</text>'
        )
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_svg(), encoding="utf-8")
        return path


def _ticks(lo: float, hi: float, n: int = 6) -> Sequence[float]:
    span = hi - lo
    raw = span / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=mag)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * span:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _fmt_tick(v: float) -> str:
    return f"{v:.3g}"
