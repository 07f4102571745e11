"""Static SVG display of a detection run: data, Taylor jump, error profiles."""
from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np

from .detector import profile_arrays

WIDTH, PANEL_H, MARGIN = 720, 200, 40
COLORS = {"data": "#444444", "delta_t": "#1f5fbf", "e_approx": "#777777",
          "e_combined": "#c0392b", "e_extrap": "#27ae60"}


def _scaler(lo, hi, a, b):
    span = hi - lo if hi > lo else 1.0
    return lambda v: a + (np.asarray(v) - lo) / span * (b - a)


def _polyline(parent, xs, ys, color, cls):
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys) if np.isfinite(y))
    ET.SubElement(parent, "polyline", {"class": cls, "points": pts, "fill": "none",
                                       "stroke": color, "stroke-width": "1.2"})


def render_svg(series, report):
    """Three stacked panels as an SVG string; one ``knot-marker`` line per knot."""
    cols = profile_arrays(report.profile)
    height = 3 * PANEL_H + 4 * MARGIN
    svg = ET.Element("svg", {"xmlns": "http://www.w3.org/2000/svg", "width": str(WIDTH),
                             "height": str(height), "viewBox": f"0 0 {WIDTH} {height}"})
    sx = _scaler(series.x[0], series.x[-1], MARGIN, WIDTH - MARGIN)

    panels = [
        ("data", [("data", series.x, series.y)]),
        ("taylor difference", [("delta_t", cols["zeta"], cols["delta_t"])]),
        ("errors", [(k, cols["zeta"], cols[k]) for k in ("e_approx", "e_combined", "e_extrap")]),
    ]
    for row, (title, curves) in enumerate(panels):
        top = MARGIN + row * (PANEL_H + MARGIN)
        g = ET.SubElement(svg, "g", {"class": "panel", "id": f"panel-{row}"})
        ET.SubElement(g, "rect", {"x": str(MARGIN), "y": str(top), "width": str(WIDTH - 2 * MARGIN),
                                  "height": str(PANEL_H), "fill": "none", "stroke": "#000000"})
        label = ET.SubElement(g, "text", {"x": str(MARGIN + 4), "y": str(top - 6),
                                          "font-size": "12", "font-family": "sans-serif"})
        label.text = title
        finite = np.concatenate([c[2][np.isfinite(c[2])] for c in curves] or [np.zeros(1)])
        lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
        sy = _scaler(lo, hi, top + PANEL_H, top)
        for name, xs, ys in curves:
            _polyline(g, sx(xs), sy(ys), COLORS[name], name)
        if row == 0:
            for knot in report.knots:
                x = float(sx(knot.zeta))
                color = "#c0392b" if knot.sign > 0 else "#1f5fbf"
                ET.SubElement(g, "line", {"class": "knot-marker", "x1": f"{x:.2f}", "x2": f"{x:.2f}",
                                          "y1": str(top), "y2": str(top + PANEL_H),
                                          "stroke": color, "stroke-dasharray": "4 3"})
    return ET.tostring(svg, encoding="unicode")


def write_svg(series, report, path):
    with open(path, "w") as fh:
        fh.write('<?xml version="1.0" encoding="UTF-8"?>\n')
        fh.write(render_svg(series, report))
        fh.write("\n")
