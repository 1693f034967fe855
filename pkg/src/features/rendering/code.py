"""
Placement Rendering
-------------------
title: Placement Rendering
description: Static SVG of a placement with rows, blockages and cells coloured by height
authors: Placement Team
date_created: 2026-08-24
dependencies:
  - core.code
  - matplotlib

Scale is fixed at 4 px per site and 10 px per row. Output bytes depend only
on the placement: the SVG hash salt is pinned and the date is dropped.
"""

import io
import logging
from typing import Dict

import matplotlib

matplotlib.use("Agg")

from matplotlib import rc_context  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from src.features.core.code import Placement  # noqa: E402

logger = logging.getLogger(__name__)

PX_PER_SITE = 4
PX_PER_ROW = 10
DPI = 72

PALETTE: Dict[int, str] = {1: "#4C72B0", 2: "#55A868", 3: "#C44E52", 4: "#8172B2"}
DEFAULT_COLOUR = "#CCB974"
FIXED_COLOUR = "#555555"
BLOCKAGE_COLOUR = "#BBBBBB"
ROW_LINE_COLOUR = "#DDDDDD"

SVG_RC = {"svg.hashsalt": "mgl-legalizer", "svg.fonttype": "none"}


def colour_for(height: int) -> str:
    return PALETTE.get(height, DEFAULT_COLOUR)


def _header() -> str:
    entries = " ".join(f"h{h}={c}" for h, c in sorted(PALETTE.items()))
    return (
        f"<!-- {PX_PER_SITE} px per site, {PX_PER_ROW} px per row; palette {entries} "
        f"other={DEFAULT_COLOUR} fixed={FIXED_COLOUR} blockage={BLOCKAGE_COLOUR} -->\n"
    )


def render_svg(p: Placement) -> str:
    """SVG document for ``p``; row 0 is drawn at the bottom."""
    grid = p.grid
    width_in = max(grid.num_sites, 1) * PX_PER_SITE / DPI
    height_in = max(grid.num_rows, 1) * PX_PER_ROW / DPI

    with rc_context(SVG_RC):
        fig = Figure(figsize=(width_in, height_in), dpi=DPI)
        ax = fig.add_axes([0, 0, 1, 1])
        ax.set_xlim(0, grid.num_sites)
        ax.set_ylim(0, grid.num_rows)
        ax.set_axis_off()

        if grid.num_rows > 1:
            ax.hlines(range(1, grid.num_rows), 0, grid.num_sites, colors=ROW_LINE_COLOUR, linewidths=0.5)

        for i, b in enumerate(grid.blockages):
            ax.add_patch(Rectangle(
                (b.start, b.row), b.end - b.start, 1,
                facecolor=BLOCKAGE_COLOUR, edgecolor="none", gid=f"block-{i}",
            ))

        for c in sorted(p.cells, key=lambda c: c.id):
            face = FIXED_COLOUR if c.fixed else colour_for(c.h)
            ax.add_patch(Rectangle(
                (c.cx, c.cy), c.w, c.h,
                facecolor=face, edgecolor="black", linewidth=0.3,
                alpha=1.0 if c.legalized else 0.5, gid=f"cell-{c.name}",
            ))

        buf = io.StringIO()
        fig.savefig(buf, format="svg", dpi=DPI, metadata={"Date": None})

    svg = buf.getvalue()
    at = svg.find("<svg")
    logger.debug("rendered %d cells, %d blockages", len(p.cells), len(grid.blockages))
    return svg[:at] + _header() + svg[at:]
