"""Static SVG plots: root loci, critical-weight sweeps and trajectories.

Output is plain text built from fixed-precision numbers, so identical data
gives byte-identical files.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["emit_svg", "render_svg"]

_W, _H = 720, 480
_MARGIN = (70, 20, 30, 50)  # left, right, top, bottom
_CLASS_COLORS = {"Oscillatory": "#1f77b4", "Unstable": "#d62728", "Degenerate": "#7f7f7f"}


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return out


def _padded(lo: float, hi: float) -> tuple[float, float]:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("cannot plot non-finite data")
    if hi == lo:
        d = abs(lo) * 0.1 or 1.0
        return lo - d, hi + d
    d = 0.05 * (hi - lo)
    return lo - d, hi + d


class _Panel:
    def __init__(self, x0, y0, w, h, xlim, ylim, xlabel, ylabel, logy=False, title=None):
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        self.logy = logy
        self.xlim = xlim
        self.ylim = ylim
        self.xlabel, self.ylabel, self.title = xlabel, ylabel, title

    def _yv(self, y):
        return math.log10(y) if self.logy else y

    def px(self, x):
        lo, hi = self.xlim
        return self.x0 + (x - lo) / (hi - lo) * self.w

    def py(self, y):
        lo, hi = self.ylim
        return self.y0 + self.h - (self._yv(y) - lo) / (hi - lo) * self.h

    def frame(self) -> list[str]:
        out = [
            f'<rect x="{_fmt(self.x0)}" y="{_fmt(self.y0)}" width="{_fmt(self.w)}" '
            f'height="{_fmt(self.h)}" fill="none" stroke="#000"/>'
        ]
        for t in _ticks(*self.xlim):
            x = self.px(t)
            yb = self.y0 + self.h
            out.append(f'<line x1="{_fmt(x)}" y1="{_fmt(yb)}" x2="{_fmt(x)}" y2="{_fmt(yb + 4)}" stroke="#000"/>')
            out.append(f'<text x="{_fmt(x)}" y="{_fmt(yb + 16)}" text-anchor="middle">{t:.4g}</text>')
        for t in _ticks(*self.ylim):
            y = self.y0 + self.h - (t - self.ylim[0]) / (self.ylim[1] - self.ylim[0]) * self.h
            label = f"1e{t:.0f}" if self.logy and float(t).is_integer() else f"{t:.4g}"
            if self.logy and not float(t).is_integer():
                continue
            out.append(f'<line x1="{_fmt(self.x0 - 4)}" y1="{_fmt(y)}" x2="{_fmt(self.x0)}" y2="{_fmt(y)}" stroke="#000"/>')
            out.append(f'<text x="{_fmt(self.x0 - 6)}" y="{_fmt(y + 4)}" text-anchor="end">{label}</text>')
        out.append(
            f'<text x="{_fmt(self.x0 + self.w / 2)}" y="{_fmt(self.y0 + self.h + 32)}" '
            f'text-anchor="middle">{escape(self.xlabel)}</text>'
        )
        cy = self.y0 + self.h / 2
        out.append(
            f'<text x="{_fmt(self.x0 - 52)}" y="{_fmt(cy)}" text-anchor="middle" '
            f'transform="rotate(-90 {_fmt(self.x0 - 52)} {_fmt(cy)})">{escape(self.ylabel)}</text>'
        )
        if self.title:
            out.append(
                f'<text x="{_fmt(self.x0 + self.w / 2)}" y="{_fmt(self.y0 - 6)}" '
                f'text-anchor="middle">{escape(self.title)}</text>'
            )
        return out

    def polyline(self, xs, ys, color="#1f77b4") -> str:
        pts = " ".join(f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in zip(xs, ys))
        return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'

    def dot(self, x, y, color) -> str:
        return f'<circle cx="{_fmt(self.px(x))}" cy="{_fmt(self.py(y))}" r="2.5" fill="{color}"/>'


def _document(height: int, body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{height}" '
        f'viewBox="0 0 {_W} {height}" font-family="sans-serif" font-size="11">'
    )
    return "\n".join([head, f'<rect width="{_W}" height="{height}" fill="#fff"/>', *body, "</svg>"]) + "\n"


def _locus(points, title) -> str:
    re = np.array([e.real for pt in points for e in pt.eigenvalues])
    im = np.array([e.imag for pt in points for e in pt.eigenvalues])
    left, right, top, bottom = _MARGIN
    panel = _Panel(
        left, top, _W - left - right, _H - top - bottom,
        _padded(re.min(), re.max()), _padded(im.min(), im.max()),
        "Re(s) [1/s]", "Im(s) [1/s]", title=title,
    )
    body = panel.frame()
    for pt in points:
        color = _CLASS_COLORS[pt.mode.value]
        body.extend(panel.dot(e.real, e.imag, color) for e in pt.eigenvalues)
    y = top + 14
    for name, color in _CLASS_COLORS.items():
        body.append(f'<circle cx="{left + 12}" cy="{y - 4}" r="4" fill="{color}"/>')
        body.append(f'<text x="{left + 20}" y="{y}">{name}</text>')
        y += 14
    return _document(_H, body)


def _rcrit(results, title) -> str:
    ok = [r for r in results if math.isfinite(r.r_crit)]
    if not ok:
        raise ValueError("no finite critical values to plot")
    v = [r.v for r in ok]
    left, right, top, bottom = _MARGIN
    ph = 200
    xlim = _padded(min(v), max(v))
    logs = [math.log10(r.r_crit) for r in ok]
    p1 = _Panel(left, top, _W - left - right, ph, xlim,
                (math.floor(min(logs)), math.ceil(max(logs)) + (min(logs) == max(logs))),
                "nominal speed [m/s]", "R_crit", logy=True, title=title)
    p2 = _Panel(left, top + ph + 70, _W - left - right, ph, xlim,
                _padded(min(r.period_at_crit for r in ok), max(r.period_at_crit for r in ok)),
                "nominal speed [m/s]", "period at R_crit [s]")
    body = p1.frame() + p2.frame()
    body.append(p1.polyline(v, [r.r_crit for r in ok]))
    body.append(p2.polyline(v, [r.period_at_crit for r in ok], "#2ca02c"))
    body.extend(p1.dot(r.v, r.r_crit, "#1f77b4") for r in ok)
    body.extend(p2.dot(r.v, r.period_at_crit, "#2ca02c") for r in ok)
    return _document(top + 2 * ph + 70 + bottom, body)


def _trajectory(data, title) -> str:
    t = np.asarray(data["t"], dtype=float)
    series = [
        (np.asarray(data["x1"], dtype=float), "speed x1 [m/s]", "#1f77b4"),
        (np.asarray(data["x2"], dtype=float), "force x2 [N]", "#ff7f0e"),
        (np.asarray(data["u"], dtype=float), "input u [N/s]", "#2ca02c"),
    ]
    left, right, top, bottom = _MARGIN
    ph, gap = 130, 45
    body = []
    xlim = (float(t[0]), float(t[-1]))
    for i, (y, label, color) in enumerate(series):
        panel = _Panel(
            left, top + i * (ph + gap), _W - left - right, ph, xlim,
            _padded(float(y.min()), float(y.max())),
            "time [s]", label, title=title if i == 0 else None,
        )
        body.extend(panel.frame())
        body.append(panel.polyline(t, y, color))
    return _document(top + 3 * ph + 2 * gap + bottom, body)


def render_svg(kind: str, data, title: str | None = None) -> str:
    """SVG text for ``kind`` in {"locus", "rcrit", "trajectory"}."""
    if data is None or len(data) == 0:
        raise ValueError("nothing to plot")
    if kind == "locus":
        return _locus(data, title)
    if kind == "rcrit":
        return _rcrit(data, title)
    if kind == "trajectory":
        if len(data["t"]) == 0:
            raise ValueError("nothing to plot")
        return _trajectory(data, title)
    raise ValueError(f"unknown plot kind {kind!r}")


def emit_svg(kind: str, data, path, title: str | None = None) -> Path:
    """Render and write; nothing is written if rendering fails."""
    text = render_svg(kind, data, title)
    path = Path(path)
    path.write_text(text)
    return path
