"""Self-contained SVG charts (no plotting dependency)."""

import math
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _svg(width, height, body):
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n{body}</svg>\n'
    )


def bar_chart(labels, values, title="", ymax=1.0, width=640, height=360):
    left, right, top, bottom = 50, 20, 40, 60
    plot_w = width - left - right
    plot_h = height - top - bottom
    ymax = max([ymax] + [v for v in values if math.isfinite(v)])
    parts = [f'<text x="{width / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>']
    for i in range(6):
        frac = i / 5
        y = top + plot_h * (1 - frac)
        parts.append(f'<line x1="{left}" y1="{y:.1f}" x2="{width - right}" y2="{y:.1f}" stroke="#ddd"/>')
        parts.append(f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end">{ymax * frac:.2f}</text>')
    n = max(len(values), 1)
    slot = plot_w / n
    for i, (label, value) in enumerate(zip(labels, values)):
        h = plot_h * (value / ymax if math.isfinite(value) else 0.0)
        x = left + i * slot + slot * 0.15
        parts.append(
            f'<rect x="{x:.1f}" y="{top + plot_h - h:.1f}" width="{slot * 0.7:.1f}" height="{h:.1f}" '
            f'fill="{PALETTE[i % len(PALETTE)]}"/>'
        )
        cx = left + (i + 0.5) * slot
        parts.append(f'<text x="{cx:.1f}" y="{top + plot_h - h - 4:.1f}" text-anchor="middle">{value:.3f}</text>')
        parts.append(f'<text x="{cx:.1f}" y="{height - bottom + 18}" text-anchor="middle">{escape(str(label))}</text>')
    parts.append(f'<line x1="{left}" y1="{top + plot_h}" x2="{width - right}" y2="{top + plot_h}" stroke="black"/>')
    return _svg(width, height, "\n".join(parts) + "\n")


def loglog_chart(series, title="", xlabel="width", ylabel="error", width=640, height=400):
    """``series`` maps a name to ``[(x, y), ...]``; non-positive or non-finite points are dropped."""
    left, right, top, bottom = 70, 140, 40, 50
    plot_w = width - left - right
    plot_h = height - top - bottom
    pts = {k: [(x, y) for x, y in v if x > 0 and y > 0 and math.isfinite(y)] for k, v in series.items()}
    xs = [x for v in pts.values() for x, _ in v] or [1.0, 10.0]
    ys = [y for v in pts.values() for _, y in v] or [0.1, 1.0]
    lx0, lx1 = math.log10(min(xs)), math.log10(max(xs))
    ly0, ly1 = math.floor(math.log10(min(ys))), math.ceil(math.log10(max(ys)))
    lx1 = lx1 if lx1 > lx0 else lx0 + 1
    ly1 = ly1 if ly1 > ly0 else ly0 + 1

    def px(x):
        return left + plot_w * (math.log10(x) - lx0) / (lx1 - lx0)

    def py(y):
        return top + plot_h * (1 - (math.log10(y) - ly0) / (ly1 - ly0))

    parts = [f'<text x="{(left + width - right) / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>']
    for e in range(int(ly0), int(ly1) + 1):
        y = py(10.0**e)
        parts.append(f'<line x1="{left}" y1="{y:.1f}" x2="{left + plot_w}" y2="{y:.1f}" stroke="#ddd"/>')
        parts.append(f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end">1e{e}</text>')
    for x in sorted(set(xs)):
        parts.append(f'<text x="{px(x):.1f}" y="{top + plot_h + 16}" text-anchor="middle">{x:g}</text>')
    parts.append(f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>')
    for i, (name, v) in enumerate(pts.items()):
        color = PALETTE[i % len(PALETTE)]
        if v:
            path = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in sorted(v))
            parts.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
            for x, y in v:
                parts.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3" fill="{color}"/>')
        ly = top + 16 * (i + 1)
        parts.append(f'<line x1="{width - right + 10}" y1="{ly}" x2="{width - right + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{width - right + 36}" y="{ly + 4}">{escape(name)}</text>')
    parts.append(f'<text x="{left + plot_w / 2}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    parts.append(
        f'<text x="16" y="{top + plot_h / 2}" text-anchor="middle" transform="rotate(-90 16 {top + plot_h / 2})">{escape(ylabel)}</text>'
    )
    return _svg(width, height, "\n".join(parts) + "\n")
