"""CSV tables, JSON traces and SVG snapshots of a run."""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from .families import OracleValue
from .ifs import format_address
from .packing import RunTrace, lower_bound

CSV_HEADER = ("k", "points", "m_tilde", "center", "witness", "d", "mass",
              "certified", "stable", "oracle", "deviation")


def fmt(x: float | None) -> str:
    """Nine significant digits, trailing zeros kept."""
    return "" if x is None else format(float(x), "#.9g")


def _flag(b: bool) -> str:
    return "true" if b else "false"


def table_rows(trace: RunTrace, oracle: OracleValue | None = None) -> list:
    if not trace.results:
        raise ValueError("empty trace")
    ref = oracle.value if oracle is not None else None
    N = trace.system.N
    rows = []
    for g in trace.results:
        dev = None if ref is None or g.m_tilde is None else g.m_tilde - ref
        common = [str(g.k), str(g.size), fmt(g.m_tilde)]
        tail = [_flag(g.stable), fmt(ref), fmt(dev)]
        if not g.candidates:
            rows.append(common + ["", "", "", "", _flag(False)] + tail)
        for c in g.candidates:
            rows.append(common + [format_address(c.center_address, N), format_address(c.witness_address, N),
                                  fmt(c.radius), fmt(c.ball_mass), _flag(c.certified)] + tail)
    return rows


def emit_table(trace: RunTrace, oracle: OracleValue | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(table_rows(trace, oracle))
    return buf.getvalue()


def trace_to_dict(trace: RunTrace, oracle: OracleValue | None = None, timings: bool = False) -> dict:
    """Plain-data view of a trace.  Wall times are omitted unless asked for
    so that identical runs serialize identically."""
    N = trace.system.N
    system = trace.system
    generations = []
    for g in trace.results:
        entry = {
            "k": g.k,
            "points": g.size,
            "m_tilde": g.m_tilde,
            "stable": g.stable,
            "certified": g.certified,
            "candidates": [{
                "center": format_address(c.center_address, N),
                "witness": format_address(c.witness_address, N),
                "d": c.radius,
                "mass": c.ball_mass,
                "value": c.value,
                "certified": c.certified,
            } for c in g.candidates],
        }
        if timings:
            entry["seconds"] = g.seconds
        generations.append(entry)
    return {
        "system": {
            "name": system.name,
            "dimension": system.dimension,
            "maps": [{"ratio": f.ratio, "orthogonal": f.orthogonal.tolist(),
                      "translation": f.translation.tolist()} for f in system.maps],
            "s": system.s,
            "r_min": system.r_min,
            "r_max": system.r_max,
        },
        "gap": {"k_used": trace.gap.k_used, "c_k": trace.gap.c_k,
                "c_tilde": trace.gap.c_tilde, "exact": trace.gap.exact},
        "tie_tol": trace.tie_tol,
        "dedupe_eps": trace.eps,
        "generations": generations,
        "stable": trace.stable,
        "lower_bound": lower_bound(trace),
        "oracle": None if oracle is None else {"value": oracle.value, "validity": oracle.validity},
    }


def emit_json(trace: RunTrace, oracle: OracleValue | None = None) -> str:
    return json.dumps(trace_to_dict(trace, oracle), indent=2, sort_keys=False) + "\n"


def emit_svg(system, state, candidates, size: int = 600) -> str:
    """SVG 1.1 picture of the points and candidate balls.

    Planar systems are drawn as dots and circles; one-dimensional ones as
    a strip with balls shown as intervals.  The viewport is the bounding
    box of the points padded by 10% on each side.
    """
    pts = np.asarray(state.points)
    if system.dimension == 3:
        raise ValueError("SVG output supports one- and two-dimensional systems only")
    if system.dimension == 1:
        pts = np.column_stack([pts[:, 0], np.zeros(len(pts))])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = max(float(np.max(hi - lo)), 1e-12)
    pad = 0.1 * span
    x0, y0 = lo[0] - pad, -(hi[1] + pad)
    width = float(hi[0] - lo[0]) + 2 * pad
    height = float(hi[1] - lo[1]) + 2 * pad
    if system.dimension == 1:
        y0, height = -pad, 2 * pad
    dot = span / 300
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" '
        f'height="{size * height / width:.0f}" viewBox="{x0:.9g} {y0:.9g} {width:.9g} {height:.9g}">',
        '<g fill="black" stroke="none">',
    ]
    out += [f'<circle cx="{x:.9g}" cy="{-y:.9g}" r="{dot:.4g}"/>' for x, y in pts]
    out.append("</g>")
    out.append(f'<g fill="none" stroke="red" stroke-width="{span / 300:.4g}">')
    for c in candidates:
        cx, cy = pts[c.center_index]
        if system.dimension == 1:
            out.append(f'<line x1="{cx - c.radius:.9g}" y1="{-pad / 2:.9g}" '
                       f'x2="{cx + c.radius:.9g}" y2="{-pad / 2:.9g}"/>')
        else:
            out.append(f'<circle cx="{cx:.9g}" cy="{-cy:.9g}" r="{c.radius:.9g}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
