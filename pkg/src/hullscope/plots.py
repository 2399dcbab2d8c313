"""Dependency-free SVG histograms.

Every bar carries ``data-count`` and ``data-lo``/``data-hi`` attributes so
tests can read the numbers back without parsing geometry.
"""

from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 360
MARGIN = 48
PALETTE = ("#4c72b0", "#dd8452")


def _fmt(x):
    return f"{x:.6g}"


def histogram_svg(edges, series, labels=None, title="", xlabel="distance") -> str:
    """Render one or more count series sharing ``edges`` as overlaid bars."""
    labels = labels or [f"series {i}" for i in range(len(series))]
    nb = len(edges) - 1
    top = max(max(s) for s in series) or 1
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN
    bw = pw / nb
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<title>{escape(title)}</title>',
        f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
    ]
    for si, counts in enumerate(series):
        color = PALETTE[si % len(PALETTE)]
        out.append(f'<g class="series" data-label="{escape(labels[si])}" fill="{color}" '
                   f'fill-opacity="{0.8 if len(series) == 1 else 0.55}">')
        for b, c in enumerate(counts):
            h = ph * c / top
            x = MARGIN + b * bw
            out.append(
                f'<rect class="bar" x="{x:.2f}" y="{HEIGHT - MARGIN - h:.2f}" width="{bw:.2f}" '
                f'height="{h:.2f}" data-count="{int(c)}" data-lo="{_fmt(edges[b])}" '
                f'data-hi="{_fmt(edges[b + 1])}"/>')
        out.append("</g>")
        out.append(f'<text x="{WIDTH - MARGIN}" y="{MARGIN + 16 * si}" text-anchor="end" '
                   f'font-size="11" fill="{color}">{escape(labels[si])}</text>')
    out.append(f'<text x="{MARGIN}" y="{HEIGHT - MARGIN + 16}" font-size="10">{_fmt(edges[0])}</text>')
    out.append(f'<text x="{WIDTH - MARGIN}" y="{HEIGHT - MARGIN + 16}" text-anchor="end" '
               f'font-size="10">{_fmt(edges[-1])}</text>')
    out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle" font-size="12">'
               f'{escape(xlabel)}</text>')
    out.append(f'<text x="{MARGIN - 6}" y="{MARGIN}" text-anchor="end" font-size="10">{top}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def read_svg_counts(svg: str) -> dict:
    """Bar counts per series label, as emitted by :func:`histogram_svg`."""
    import xml.etree.ElementTree as ET

    root = ET.fromstring(svg)
    ns = {"s": "http://www.w3.org/2000/svg"}
    out = {}
    for g in root.findall("s:g", ns):
        out[g.get("data-label")] = [int(r.get("data-count")) for r in g.findall("s:rect", ns)]
    return out
