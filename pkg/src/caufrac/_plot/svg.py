"""Standalone SVG renderings of fraction histograms and scatter plots."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from lxml.etree import (
    Element,
    SubElement,
    _Element,  # pyright: ignore [reportPrivateUsage]
    tostring,
)

SVG_NAMESPACE = "http://www.w3.org/2000/svg"

WIDTH = 400
HEIGHT = 300
MARGIN = 40
BAR_FILL = "#4c72b0"
POINT_FILL = "#dd8452"


def _tag(name: str) -> str:
    return f"{{{SVG_NAMESPACE}}}{name}"


def _number(value: float) -> str:
    return f"{value:.2f}"


@dataclass(frozen=True)
class Axes:
    """Map data coordinates into the plot area below the title."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def x(self, value: float) -> float:
        span = (self.x_max - self.x_min) or 1.0
        return MARGIN + (value - self.x_min) / span * (WIDTH - 2 * MARGIN)

    def y(self, value: float) -> float:
        span = (self.y_max - self.y_min) or 1.0
        return HEIGHT - MARGIN - (value - self.y_min) / span * (HEIGHT - 2 * MARGIN)


def _element(
    parent: _Element, name: str, text: str | None = None, **attrib: str
) -> _Element:
    # font_size="10" becomes font-size="10"
    element = SubElement(
        parent, _tag(name), {k.replace("_", "-"): v for k, v in attrib.items()}
    )
    if text is not None:
        element.text = text
    return element


def _canvas(title: str) -> _Element:
    root = Element(
        _tag("svg"),
        {
            "width": str(WIDTH),
            "height": str(HEIGHT),
            "viewBox": f"0 0 {WIDTH} {HEIGHT}",
        },
        nsmap={None: SVG_NAMESPACE},
    )
    _element(root, "title", title)
    _element(
        root,
        "text",
        title,
        x=str(WIDTH // 2),
        y=str(MARGIN // 2),
        font_size="14",
        text_anchor="middle",
    )
    return root


def _draw_axes(
    root: _Element,
    axes: Axes,
    x_ticks: Sequence[float],
    y_ticks: Sequence[float],
    x_label: str,
    y_label: str,
) -> None:
    group = _element(root, "g", stroke="black", stroke_width="1")
    _element(
        group,
        "line",
        x1=_number(axes.x(axes.x_min)),
        y1=_number(axes.y(axes.y_min)),
        x2=_number(axes.x(axes.x_max)),
        y2=_number(axes.y(axes.y_min)),
    )
    _element(
        group,
        "line",
        x1=_number(axes.x(axes.x_min)),
        y1=_number(axes.y(axes.y_min)),
        x2=_number(axes.x(axes.x_min)),
        y2=_number(axes.y(axes.y_max)),
    )

    labels = _element(root, "g", font_size="10")
    for tick in x_ticks:
        _element(
            labels,
            "text",
            f"{tick:g}",
            x=_number(axes.x(tick)),
            y=_number(axes.y(axes.y_min) + 14),
            text_anchor="middle",
        )
    for tick in y_ticks:
        _element(
            labels,
            "text",
            f"{tick:g}",
            x=_number(axes.x(axes.x_min) - 6),
            y=_number(axes.y(tick) + 3),
            text_anchor="end",
        )

    _element(
        labels,
        "text",
        x_label,
        x=str(WIDTH // 2),
        y=str(HEIGHT - 6),
        text_anchor="middle",
    )
    _element(
        labels,
        "text",
        y_label,
        x="12",
        y=str(HEIGHT // 2),
        text_anchor="middle",
        transform=f"rotate(-90 12 {HEIGHT // 2})",
    )


def _serialize(root: _Element) -> bytes:
    return tostring(root, pretty_print=True, xml_declaration=True, encoding="UTF-8")


def histogram_svg(
    title: str, edges: Sequence[float], counts: Sequence[int], y_max: int
) -> bytes:
    """Bar chart of binned fractions.

    Args:
        title: Heading of the chart
        edges: Bin edges on [0, 1]
        counts: Models per bin
        y_max: Top of the count axis, shared between charts that are compared

    """
    root = _canvas(title)
    top = max(y_max, 1)
    axes = Axes(0.0, 1.0, 0.0, float(top))

    bars = _element(root, "g", fill=BAR_FILL)
    for left, right, count in zip(edges, edges[1:], counts, strict=True):
        if count == 0:
            continue
        _element(
            bars,
            "rect",
            x=_number(axes.x(left)),
            y=_number(axes.y(count)),
            width=_number(axes.x(right) - axes.x(left)),
            height=_number(axes.y(0) - axes.y(count)),
        )

    _draw_axes(
        root,
        axes,
        x_ticks=[0.0, 0.25, 0.5, 0.75, 1.0],
        y_ticks=sorted({0, top // 2, top}),
        x_label="causal fraction",
        y_label="models",
    )
    return _serialize(root)


def scatter_svg(
    title: str, points: Sequence[tuple[int, float]], x_label: str
) -> bytes:
    """Fractions against a count of ambiguous words, one circle per model."""
    root = _canvas(title)
    x_max = max((float(x) for x, _ in points), default=0.0)
    axes = Axes(-0.5, max(x_max, 2.0) + 0.5, 0.0, 1.0)

    group = _element(root, "g", fill=POINT_FILL, fill_opacity="0.7")
    for x, y in points:
        _element(group, "circle", cx=_number(axes.x(x)), cy=_number(axes.y(y)), r="4")

    _draw_axes(
        root,
        axes,
        x_ticks=[float(k) for k in range(int(max(x_max, 2.0)) + 1)],
        y_ticks=[0.0, 0.5, 1.0],
        x_label=x_label,
        y_label="causal fraction",
    )
    return _serialize(root)
