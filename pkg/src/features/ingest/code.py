"""
Placement File Format
---------------------
title: Placement Ingest
description: Parses and writes the line-oriented placement format
authors: Placement Team
date_created: 2026-08-04
dependencies:
  - core.code
  - core.errors

Format (UTF-8, whitespace separated, '#' starts a comment):

    GRID numRows rowHeight siteWidth numSites firstRail
    BLOCK row start end
    CELL name gx gy w h rail fixed [x y]

The optional trailing ``x y`` of a CELL line is the legalized position.
"""

import logging
import math
from typing import List, Optional, Tuple, Union

from src.features.core.code import Blockage, Cell, Placement, Rail, SiteGrid
from src.features.core.errors import DuplicateIdError, FormatSyntaxError, SemanticError

logger = logging.getLogger(__name__)

# (token text, 1-based column)
Token = Tuple[str, int]


def _tokenize(line: str) -> List[Token]:
    body = line.split("#", 1)[0]
    tokens: List[Token] = []
    i = 0
    n = len(body)
    while i < n:
        if body[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not body[j].isspace():
            j += 1
        tokens.append((body[i:j], i + 1))
        i = j
    return tokens


def _int(tok: Token, lineno: int) -> int:
    text, col = tok
    try:
        return int(text)
    except ValueError:
        raise FormatSyntaxError(f"expected an integer, got {text!r}", lineno, col) from None


def _real(tok: Token, lineno: int) -> float:
    text, col = tok
    try:
        value = float(text)
    except ValueError:
        raise FormatSyntaxError(f"expected a number, got {text!r}", lineno, col) from None
    if not math.isfinite(value):
        raise SemanticError(f"non-finite value {text!r}", lineno, col)
    return value


def _rail(tok: Token, lineno: int, allowed: Tuple[str, ...]) -> Rail:
    text, col = tok
    if text not in allowed:
        raise SemanticError(f"invalid rail {text!r}, expected one of {', '.join(allowed)}", lineno, col)
    return Rail(text)


def _expect_count(tokens: List[Token], counts: Tuple[int, ...], lineno: int) -> None:
    if len(tokens) not in counts:
        keyword = tokens[0][0]
        expected = " or ".join(str(c - 1) for c in counts)
        col = tokens[-1][1] if len(tokens) > counts[-1] else None
        raise FormatSyntaxError(
            f"{keyword} takes {expected} fields, got {len(tokens) - 1}", lineno, col
        )


def parse_placement(text: Union[str, bytes]) -> Placement:
    """Parse a placement file.

    Raises FormatSyntaxError, SemanticError or DuplicateIdError with the
    offending line and column.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")

    grid_fields: Optional[Tuple[int, float, float, int, Rail]] = None
    block_lines: List[Tuple[int, int, Blockage]] = []
    cells: List[Cell] = []
    names = {}

    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = _tokenize(line)
        if not tokens:
            continue
        keyword, kw_col = tokens[0]

        if keyword == "GRID":
            if grid_fields is not None:
                raise FormatSyntaxError("duplicate GRID line", lineno, kw_col)
            _expect_count(tokens, (6,), lineno)
            num_rows = _int(tokens[1], lineno)
            row_height = _real(tokens[2], lineno)
            site_width = _real(tokens[3], lineno)
            num_sites = _int(tokens[4], lineno)
            first_rail = _rail(tokens[5], lineno, ("P", "G"))
            for value, tok in ((num_rows, tokens[1]), (row_height, tokens[2]),
                               (site_width, tokens[3]), (num_sites, tokens[4])):
                if value <= 0:
                    raise SemanticError(f"{tok[0]} must be positive", lineno, tok[1])
            grid_fields = (num_rows, row_height, site_width, num_sites, first_rail)

        elif keyword == "BLOCK":
            _expect_count(tokens, (4,), lineno)
            row = _int(tokens[1], lineno)
            start = _int(tokens[2], lineno)
            end = _int(tokens[3], lineno)
            if end <= start:
                raise SemanticError("blockage end must exceed start", lineno, tokens[3][1])
            block_lines.append((lineno, tokens[1][1], Blockage(row, start, end)))

        elif keyword == "CELL":
            _expect_count(tokens, (8, 10), lineno)
            name, name_col = tokens[1]
            gx = _real(tokens[2], lineno)
            gy = _real(tokens[3], lineno)
            w = _int(tokens[4], lineno)
            h = _int(tokens[5], lineno)
            rail = _rail(tokens[6], lineno, ("P", "G", "ANY"))
            fixed_text, fixed_col = tokens[7]
            if w <= 0:
                raise SemanticError(f"width must be positive, got {w}", lineno, tokens[4][1])
            if h <= 0:
                raise SemanticError(f"height must be positive, got {h}", lineno, tokens[5][1])
            if fixed_text not in ("0", "1"):
                raise SemanticError(f"fixed flag must be 0 or 1, got {fixed_text!r}", lineno, fixed_col)
            fixed = fixed_text == "1"
            if name in names:
                raise DuplicateIdError(
                    f"cell {name!r} already defined on line {names[name]}", lineno, name_col
                )
            names[name] = lineno

            cx: Optional[float] = None
            cy: Optional[int] = None
            legalized = False
            if fixed:
                if not gy.is_integer():
                    raise SemanticError("fixed cell needs an integral row", lineno, tokens[3][1])
                if len(tokens) == 10:
                    raise SemanticError("fixed cell takes no legalized position", lineno, tokens[8][1])
                cx, cy = gx, int(gy)
            elif len(tokens) == 10:
                cx = float(_int(tokens[8], lineno))
                cy = _int(tokens[9], lineno)
                legalized = True
            cells.append(Cell(
                id=len(cells), name=name, gx=gx, gy=gy, w=w, h=h, rail=rail,
                fixed=fixed, cx=cx, cy=cy, legalized=legalized,
            ))

        else:
            raise FormatSyntaxError(f"unknown keyword {keyword!r}", lineno, kw_col)

    if grid_fields is None:
        raise FormatSyntaxError("missing GRID line")
    num_rows, row_height, site_width, num_sites, first_rail = grid_fields
    for lineno, col, b in block_lines:
        if not (0 <= b.row < num_rows) or b.start < 0 or b.end > num_sites:
            raise SemanticError(f"blockage {b.row} {b.start} {b.end} outside the grid", lineno, col)

    grid = SiteGrid(
        num_rows=num_rows,
        num_sites=num_sites,
        row_height=row_height,
        site_width=site_width,
        first_rail=first_rail,
        blockages=tuple(b for _, _, b in block_lines),
    )
    logger.debug("parsed %d cells on a %dx%d grid", len(cells), num_rows, num_sites)
    return Placement(grid, cells)


def format_number(value: float) -> str:
    """Shortest exact text for ``value``; integral values lose the fraction."""
    value = float(value)
    if value.is_integer():
        return str(int(value))
    return repr(value)


def write_placement(p: Placement) -> str:
    """Serialize ``p``; cells are written in id order."""
    g = p.grid
    lines = [
        f"GRID {g.num_rows} {format_number(g.row_height)} {format_number(g.site_width)} "
        f"{g.num_sites} {g.first_rail.value}"
    ]
    for b in g.blockages:
        lines.append(f"BLOCK {b.row} {b.start} {b.end}")
    for c in sorted(p.cells, key=lambda c: c.id):
        line = (
            f"CELL {c.name} {format_number(c.gx)} {format_number(c.gy)} {c.w} {c.h} "
            f"{c.rail.value} {1 if c.fixed else 0}"
        )
        if c.legalized and not c.fixed:
            line += f" {int(c.cx)} {int(c.cy)}"
        lines.append(line)
    return "\n".join(lines) + "\n"
