"""Minimal native SVG emission for sweep curves, height fields, and gaits.

No plotting dependency: figures are assembled from rectangles, polylines and
text so the output is small, deterministic, and diff-able.  Numbers are
formatted with fixed precision to keep re-runs byte-identical.
"""

from __future__ import annotations

import io

import numpy as np

# Fixed diverging color map: deep blue -> white -> deep yellow-brown.
# Positive field values map to blues, negative to yellows.
_POS_COLOR = (33, 102, 172)
_NEG_COLOR = (178, 139, 24)


def _fmt(x):
    return f"{x:.3f}".rstrip("0").rstrip(".")


def _blend(c, t):
    """Blend white toward color c by t in [0, 1]."""
    return tuple(int(round(255 + (ci - 255) * t)) for ci in c)


def _rgb(color):
    return f"rgb({color[0]},{color[1]},{color[2]})"


def field_color(value, vmax):
    """Color for one field sample given the symmetric scale limit."""
    if vmax <= 0:
        return _rgb((255, 255, 255))
    t = min(abs(value) / vmax, 1.0) ** 0.5
    return _rgb(_blend(_POS_COLOR if value >= 0 else _NEG_COLOR, t))


class SvgCanvas:
    """Fixed-size canvas mapping a data window onto a pixel viewport."""

    def __init__(self, window, width=640, height=640, margin=48):
        self.window = tuple(float(v) for v in window)  # (x0, x1, y0, y1)
        self.width = width
        self.height = height
        self.margin = margin
        self._body = io.StringIO()

    # -- coordinate mapping ----------------------------------------------

    def to_px(self, x, y):
        x0, x1, y0, y1 = self.window
        px = self.margin + (x - x0) / (x1 - x0) * (self.width - 2 * self.margin)
        py = self.height - self.margin - (y - y0) / (y1 - y0) * (
            self.height - 2 * self.margin)
        return px, py

    # -- primitives ------------------------------------------------------

    def rect(self, x, y, w, h, fill):
        px, py = self.to_px(x, y + h)
        qx, qy = self.to_px(x + w, y)
        self._body.write(
            f'<rect x="{_fmt(px)}" y="{_fmt(py)}" width="{_fmt(qx - px)}" '
            f'height="{_fmt(qy - py)}" fill="{fill}"/>\n')

    def polyline(self, pts, stroke, stroke_width=1.5, dashed=False,
                 closed=False):
        if len(pts) == 0:
            return
        coords = " ".join(
            f"{_fmt(px)},{_fmt(py)}" for px, py in (self.to_px(x, y)
                                                    for x, y in pts))
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        tag = "polygon" if closed else "polyline"
        self._body.write(
            f'<{tag} points="{coords}" fill="none" stroke="{stroke}" '
            f'stroke-width="{stroke_width}"{dash}/>\n')

    def marker(self, x, y, color, size=5.0):
        px, py = self.to_px(x, y)
        s = size
        self._body.write(
            f'<path d="M {_fmt(px - s)} {_fmt(py - s)} L {_fmt(px + s)} '
            f'{_fmt(py + s)} M {_fmt(px - s)} {_fmt(py + s)} L {_fmt(px + s)} '
            f'{_fmt(py - s)}" stroke="{color}" stroke-width="2"/>\n')

    def text(self, x, y, s, size=12, anchor="middle", color="#222"):
        px, py = self.to_px(x, y)
        self._body.write(
            f'<text x="{_fmt(px)}" y="{_fmt(py)}" font-size="{size}" '
            f'text-anchor="{anchor}" fill="{color}" '
            f'font-family="sans-serif">{s}</text>\n')

    def axes(self, xlabel="", ylabel="", n_ticks=5):
        x0, x1, y0, y1 = self.window
        ax0, ay0 = self.to_px(x0, y0)
        ax1, ay1 = self.to_px(x1, y1)
        self._body.write(
            f'<rect x="{_fmt(ax0)}" y="{_fmt(ay1)}" width="{_fmt(ax1 - ax0)}" '
            f'height="{_fmt(ay0 - ay1)}" fill="none" stroke="#222"/>\n')
        for tx in np.linspace(x0, x1, n_ticks):
            px, py = self.to_px(tx, y0)
            self._body.write(
                f'<line x1="{_fmt(px)}" y1="{_fmt(py)}" x2="{_fmt(px)}" '
                f'y2="{_fmt(py + 4)}" stroke="#222"/>\n')
            self._body.write(
                f'<text x="{_fmt(px)}" y="{_fmt(py + 16)}" font-size="10" '
                f'text-anchor="middle" font-family="sans-serif">'
                f'{tx:.2g}</text>\n')
        for ty in np.linspace(y0, y1, n_ticks):
            px, py = self.to_px(x0, ty)
            self._body.write(
                f'<line x1="{_fmt(px)}" y1="{_fmt(py)}" x2="{_fmt(px - 4)}" '
                f'y2="{_fmt(py)}" stroke="#222"/>\n')
            self._body.write(
                f'<text x="{_fmt(px - 6)}" y="{_fmt(py + 3)}" font-size="10" '
                f'text-anchor="end" font-family="sans-serif">{ty:.2g}</text>\n')
        if xlabel:
            self._body.write(
                f'<text x="{_fmt((ax0 + ax1) / 2)}" y="{_fmt(ay0 + 34)}" '
                f'font-size="12" text-anchor="middle" '
                f'font-family="sans-serif">{xlabel}</text>\n')
        if ylabel:
            cx, cy = ax0 - 34, (ay0 + ay1) / 2
            self._body.write(
                f'<text x="{_fmt(cx)}" y="{_fmt(cy)}" font-size="12" '
                f'text-anchor="middle" font-family="sans-serif" '
                f'transform="rotate(-90 {_fmt(cx)} {_fmt(cy)})">'
                f'{ylabel}</text>\n')

    def render(self):
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} '
            f'{self.height}">\n<rect width="100%" height="100%" '
            f'fill="white"/>\n' + self._body.getvalue() + "</svg>\n")


def heightfield_svg(field, contour_set=None, gaits=(), title=""):
    """Filled height-field bands with dashed zero contours and gait overlays.

    ``field`` provides phi1, phi2 axes and a (n, n) value grid; ``gaits`` is
    a sequence of (polyline, color) pairs in shape-space coordinates.
    """
    x0, x1 = field.phi1[0], field.phi1[-1]
    y0, y1 = field.phi2[0], field.phi2[-1]
    canvas = SvgCanvas((x0, x1, y0, y1))
    vals = field.values
    vmax = float(np.max(np.abs(vals))) if vals.size else 0.0
    # Coarse color cells: cap the rect count so files stay small.
    step = max(1, (len(field.phi1) - 1) // 128)
    xs = field.phi1[::step]
    ys = field.phi2[::step]
    cells = vals[::step, ::step]
    for i in range(len(xs) - 1):
        for j in range(len(ys) - 1):
            v = cells[i, j]
            canvas.rect(xs[i], ys[j], xs[i + 1] - xs[i], ys[j + 1] - ys[j],
                        field_color(v, vmax))
    if contour_set is not None:
        for poly in contour_set.contours:
            canvas.polyline(poly, "#000", stroke_width=1.5, dashed=True)
        for jx, jy in getattr(contour_set, "junctions", ()):
            canvas.marker(jx, jy, "#c00", size=4.0)
    for poly, color in gaits:
        canvas.polyline(poly, color, stroke_width=2.0)
    canvas.axes(xlabel="phi1 [rad]", ylabel="phi2 [rad]")
    if title:
        canvas.text(0.5 * (x0 + x1), y1 + 0.02 * (y1 - y0), title, size=13)
    return canvas.render()


def line_plot_svg(curves, xlabel="", ylabel="", markers=(), title=""):
    """Simple multi-curve line plot.

    ``curves`` is a sequence of (x, y, color, dashed) tuples; ``markers`` is
    a sequence of (x, y, color) extremum annotations.
    """
    all_x = np.concatenate([np.asarray(c[0], dtype=float) for c in curves])
    all_y = np.concatenate([np.asarray(c[1], dtype=float) for c in curves])
    pad_y = 0.05 * (all_y.max() - all_y.min() + 1e-12)
    window = (float(all_x.min()), float(all_x.max()),
              float(all_y.min() - pad_y), float(all_y.max() + pad_y))
    canvas = SvgCanvas(window, width=720, height=480)
    if window[2] < 0 < window[3]:
        canvas.polyline([(window[0], 0.0), (window[1], 0.0)], "#999",
                        stroke_width=0.8)
    for x, y, color, dashed in curves:
        canvas.polyline(list(zip(np.asarray(x, dtype=float),
                                 np.asarray(y, dtype=float))),
                        color, stroke_width=1.8, dashed=dashed)
    for mx, my, color in markers:
        canvas.marker(mx, my, color)
    canvas.axes(xlabel=xlabel, ylabel=ylabel)
    if title:
        canvas.text(0.5 * (window[0] + window[1]),
                    window[3] - 0.03 * (window[3] - window[2]), title, size=13)
    return canvas.render()
