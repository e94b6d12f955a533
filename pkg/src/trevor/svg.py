"""Tiny dependency-free SVG line and CDF plots for harness artifacts."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

W, H = 640, 400
PAD_L, PAD_R, PAD_T, PAD_B = 60, 140, 30, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")


def _fmt(v):
    return f"{v:.2f}"


def _scale(lo, hi):
    if hi <= lo:
        hi = lo + 1.0
    return lo, hi


def line_plot(series, title="", xlabel="", ylabel="", ylim=None):
    """Render ``{name: (x, y)}`` as an SVG document string."""
    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()]) if series else np.array([0.0, 1.0])
    ys = np.concatenate([np.asarray(y, float) for _, y in series.values()]) if series else np.array([0.0, 1.0])
    x0, x1 = _scale(float(np.nanmin(xs)), float(np.nanmax(xs)))
    y0, y1 = _scale(*(ylim or (float(np.nanmin(ys)), float(np.nanmax(ys)))))
    pw, ph = W - PAD_L - PAD_R, H - PAD_T - PAD_B

    def px(x):
        return PAD_L + (x - x0) / (x1 - x0) * pw

    def py(y):
        return PAD_T + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2 - PAD_R / 2}" y="18" text-anchor="middle">{escape(title)}</text>',
        f'<rect x="{PAD_L}" y="{PAD_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for i in range(5):
        xv = x0 + i * (x1 - x0) / 4
        yv = y0 + i * (y1 - y0) / 4
        out.append(f'<text x="{_fmt(px(xv))}" y="{PAD_T + ph + 16}" text-anchor="middle">{xv:.3g}</text>')
        out.append(f'<text x="{PAD_L - 6}" y="{_fmt(py(yv) + 4)}" text-anchor="end">{yv:.3g}</text>')
    out.append(f'<text x="{PAD_L + pw / 2}" y="{H - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{PAD_T + ph / 2}" transform="rotate(-90 14 {PAD_T + ph / 2})" '
               f'text-anchor="middle">{escape(ylabel)}</text>')
    for i, (name, (x, y)) in enumerate(series.items()):
        c = COLORS[i % len(COLORS)]
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y) if np.isfinite(b))
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{pts}"/>')
        ly = PAD_T + 14 + 18 * i
        out.append(f'<line x1="{W - PAD_R + 10}" y1="{ly - 4}" x2="{W - PAD_R + 30}" y2="{ly - 4}" stroke="{c}"/>')
        out.append(f'<text x="{W - PAD_R + 34}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cdf_points(values):
    v = np.sort(np.asarray(values, float))
    return v, np.arange(1, v.size + 1) / v.size


def cdf_plot(samples, title="", xlabel=""):
    """Empirical CDFs of ``{name: values}``."""
    return line_plot({k: cdf_points(v) for k, v in samples.items()}, title, xlabel, "CDF", ylim=(0.0, 1.0))


def bar_plot(values, title="", ylabel=""):
    """Simple bar chart of ``{label: value}``."""
    labels = list(values)
    vals = np.array([values[k] for k in labels], float)
    top = float(vals.max()) if vals.size and vals.max() > 0 else 1.0
    pw, ph = W - PAD_L - 40, H - PAD_T - PAD_B - 40
    bw = pw / max(len(labels), 1)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="18" text-anchor="middle">{escape(title)}</text>',
        f'<text x="14" y="{PAD_T + ph / 2}" transform="rotate(-90 14 {PAD_T + ph / 2})" '
        f'text-anchor="middle">{escape(ylabel)}</text>',
    ]
    for i, (lab, v) in enumerate(zip(labels, vals)):
        h = v / top * ph
        x = PAD_L + i * bw + bw * 0.1
        out.append(f'<rect x="{_fmt(x)}" y="{_fmt(PAD_T + ph - h)}" width="{_fmt(bw * 0.8)}" height="{_fmt(h)}" '
                   f'fill="{COLORS[i % len(COLORS)]}"/>')
        out.append(f'<text x="{_fmt(x + bw * 0.4)}" y="{_fmt(PAD_T + ph - h - 4)}" text-anchor="middle">{v:.3g}</text>')
        out.append(f'<text x="{_fmt(x + bw * 0.4)}" y="{PAD_T + ph + 14}" text-anchor="end" '
                   f'transform="rotate(-35 {_fmt(x + bw * 0.4)} {PAD_T + ph + 14})">{escape(str(lab))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
