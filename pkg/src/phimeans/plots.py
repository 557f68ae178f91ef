"""Minimal SVG line charts (800x500) for solver traces and consistency curves."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 800, 500
MARGIN = dict(left=80, right=170, top=40, bottom=60)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:.3g}"


class _Axes:
    def __init__(self, xlim, ylim, logx, logy, box):
        self.logx, self.logy = logx, logy
        self.x0, self.y0, self.x1, self.y1 = box
        self.xlim = tuple(self._t(v, logx) for v in xlim)
        self.ylim = tuple(self._t(v, logy) for v in ylim)

    @staticmethod
    def _t(v, log):
        return math.log10(v) if log else v

    def px(self, x):
        a, b = self.xlim
        return self.x0 + (self._t(x, self.logx) - a) / (b - a) * (self.x1 - self.x0)

    def py(self, y):
        a, b = self.ylim
        return self.y1 - (self._t(y, self.logy) - a) / (b - a) * (self.y1 - self.y0)


def _limits(values, log):
    v = np.asarray([x for x in values if math.isfinite(x) and (x > 0 or not log)], dtype=float)
    if v.size == 0:
        return (1.0, 10.0) if log else (0.0, 1.0)
    lo, hi = float(v.min()), float(v.max())
    if log:
        lo, hi = 10 ** math.floor(math.log10(lo)), 10 ** math.ceil(math.log10(hi))
        return (lo, hi * 10) if lo == hi else (lo, hi)
    if lo == hi:
        return lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _ticks(lim, log):
    lo, hi = lim
    if log:
        return [10.0 ** k for k in range(round(math.log10(lo)), round(math.log10(hi)) + 1)]
    return list(np.linspace(lo, hi, 6))


def _frame(ax: _Axes, xlabel, ylabel, xlim, ylim) -> list:
    out = [f'<rect x="{ax.x0}" y="{ax.y0}" width="{ax.x1 - ax.x0}" height="{ax.y1 - ax.y0}" '
           'fill="none" stroke="#000"/>']
    for t in _ticks(xlim, ax.logx):
        x = _fmt(ax.px(t))
        out.append(f'<line x1="{x}" y1="{ax.y1}" x2="{x}" y2="{ax.y1 + 5}" stroke="#000"/>')
        out.append(f'<text x="{x}" y="{ax.y1 + 20}" text-anchor="middle" font-size="12">'
                   f'{_tick_label(t)}</text>')
    for t in _ticks(ylim, ax.logy):
        y = _fmt(ax.py(t))
        out.append(f'<line x1="{ax.x0 - 5}" y1="{y}" x2="{ax.x0}" y2="{y}" stroke="#000"/>')
        out.append(f'<text x="{ax.x0 - 8}" y="{y}" text-anchor="end" font-size="12" '
                   f'dominant-baseline="middle">{_tick_label(t)}</text>')
    cx = _fmt((ax.x0 + ax.x1) / 2)
    cy = _fmt((ax.y0 + ax.y1) / 2)
    out.append(f'<text x="{cx}" y="{ax.y1 + 42}" text-anchor="middle" font-size="14">'
               f'{escape(xlabel)}</text>')
    out.append(f'<text x="{ax.x0 - 60}" y="{cy}" text-anchor="middle" font-size="14" '
               f'transform="rotate(-90 {ax.x0 - 60} {cy})">{escape(ylabel)}</text>')
    return out


def _polyline(ax, xs, ys, color, dash=None) -> str:
    pts = " ".join(f"{_fmt(ax.px(x))},{_fmt(ax.py(y))}" for x, y in zip(xs, ys)
                   if math.isfinite(y) and (y > 0 or not ax.logy) and (x > 0 or not ax.logx))
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"{extra}/>'


def _legend(entries) -> list:
    out = []
    x = WIDTH - MARGIN["right"] + 15
    for i, (label, color) in enumerate(entries):
        y = MARGIN["top"] + 10 + 20 * i
        out.append(f'<line x1="{x}" y1="{y}" x2="{x + 20}" y2="{y}" stroke="{color}" '
                   'stroke-width="2"/>')
        out.append(f'<text x="{x + 26}" y="{y}" font-size="12" dominant-baseline="middle">'
                   f'{escape(label)}</text>')
    return out


def _document(title: str, body: list) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">')
    bg = f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#fff"/>'
    t = (f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" font-size="16">'
         f'{escape(title)}</text>')
    return "\n".join([head, bg, t, *body, "</svg>"]) + "\n"


def trace_svg(iterations, losses, distances, title: str = "solver trace") -> str:
    """Two panels: loss (linear) and distance to the final estimate (log) against iteration."""
    it = [float(i) for i in iterations]
    body = []
    xlim = _limits(it, False)
    plot_h = (HEIGHT - MARGIN["top"] - MARGIN["bottom"] - 40) / 2
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    top = MARGIN["top"]
    for k, (ys, label, log, color) in enumerate([
            (losses, "loss", False, COLORS[0]),
            (distances, "distance to final estimate", True, COLORS[1])]):
        ys = [float(y) for y in ys]
        ylim = _limits(ys, log)
        y0 = top + k * (plot_h + 40)
        ax = _Axes(xlim, ylim, False, log, (x0, y0, x1, y0 + plot_h))
        body += _frame(ax, "iteration" if k == 1 else "", label, xlim, ylim)
        body.append(_polyline(ax, it, ys, color))
    body += _legend([("loss", COLORS[0]), ("distance", COLORS[1])])
    return _document(title, body)


def consistency_svg(sample_sizes, curves: dict, title: str = "consistency") -> str:
    """Log-log rho_inf against n; ``curves`` maps a label to (median, p90) arrays.

    The band between median and 90th percentile is shaded.
    """
    ns = [float(n) for n in sample_sizes]
    vals = [float(v) for med, p90 in curves.values() for v in (*med, *p90)]
    xlim = _limits(ns, True)
    ylim = _limits(vals, True)
    ax = _Axes(xlim, ylim, True, True, (MARGIN["left"], MARGIN["top"], WIDTH - MARGIN["right"],
                                        HEIGHT - MARGIN["bottom"]))
    body = _frame(ax, "sample size n", "rho_inf to the population mean", xlim, ylim)
    legend = []
    for i, (label, (med, p90)) in enumerate(curves.items()):
        color = COLORS[i % len(COLORS)]
        ok = [j for j in range(len(ns)) if med[j] > 0 and p90[j] > 0]
        if ok:
            upper = [f"{_fmt(ax.px(ns[j]))},{_fmt(ax.py(p90[j]))}" for j in ok]
            lower = [f"{_fmt(ax.px(ns[j]))},{_fmt(ax.py(med[j]))}" for j in reversed(ok)]
            body.append(f'<polygon points="{" ".join(upper + lower)}" fill="{color}" '
                        'fill-opacity="0.15" stroke="none"/>')
        body.append(_polyline(ax, ns, med, color))
        body.append(_polyline(ax, ns, p90, color, dash="6,4"))
        legend += [(f"{label} median", color), (f"{label} p90 (dashed)", color)]
    return _document(title, body + _legend(legend))
