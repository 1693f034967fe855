"""
Core Model
----------
title: Core Model
description: Cells, the site grid, placements, displacement metrics and legality checks
authors: Placement Team
date_created: 2026-08-03
dependencies:
  - errors.py
"""

import copy as _copy
import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple

from .errors import DuplicateIdError, EmptyPlacement


class Rail(str, Enum):
    """Power/ground rail required at a cell's bottom edge."""
    P = "P"
    G = "G"
    ANY = "ANY"


@dataclass(frozen=True)
class Blockage:
    """Blocked half-open site range [start, end) in one row."""
    row: int
    start: int
    end: int


def _normalize_blockages(blockages: Iterable[Blockage]) -> Tuple[Blockage, ...]:
    """Sort blockages and merge overlapping or touching ranges per row."""
    per_row: Dict[int, List[Tuple[int, int]]] = defaultdict(list)
    for b in blockages:
        if b.end > b.start:
            per_row[b.row].append((b.start, b.end))
    merged: List[Blockage] = []
    for row in sorted(per_row):
        spans = sorted(per_row[row])
        lo, hi = spans[0]
        for start, end in spans[1:]:
            if start <= hi:
                hi = max(hi, end)
            else:
                merged.append(Blockage(row, lo, hi))
                lo, hi = start, end
        merged.append(Blockage(row, lo, hi))
    return tuple(merged)


@dataclass(frozen=True)
class SiteGrid:
    """The row/site lattice of the chip.

    Rails alternate from ``first_rail`` on even rows. ``row_height`` and
    ``site_width`` are length units only used to scale displacement.
    """
    num_rows: int
    num_sites: int
    row_height: float = 1.0
    site_width: float = 1.0
    first_rail: Rail = Rail.P
    blockages: Tuple[Blockage, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "first_rail", Rail(self.first_rail))
        object.__setattr__(self, "blockages", _normalize_blockages(self.blockages))

    @property
    def site_ratio(self) -> float:
        return site_ratio(self)

    def rail_of(self, row: int) -> Rail:
        return rail_of(self, row)

    def blocked_by_row(self) -> Dict[int, List[Tuple[int, int]]]:
        """Blocked ranges keyed by row, sorted and disjoint."""
        out: Dict[int, List[Tuple[int, int]]] = defaultdict(list)
        for b in self.blockages:
            out[b.row].append((b.start, b.end))
        return dict(out)


def rail_of(grid: SiteGrid, row: int) -> Rail:
    """Rail at the bottom of ``row``: ``first_rail`` on even rows."""
    if row % 2 == 0:
        return grid.first_rail
    return Rail.G if grid.first_rail == Rail.P else Rail.P


def site_ratio(grid: SiteGrid) -> float:
    """Horizontal scale turning site distances into row heights."""
    return grid.site_width / grid.row_height


@dataclass
class Cell:
    """A placeable rectangle.

    ``gx``/``gy`` are the global-placement origin, ``cx``/``cy`` the current
    bottom-left corner. ``id`` is the ordinal used for every tie-break and
    ``name`` is the label carried by the placement file.
    """
    id: int
    name: str
    gx: float
    gy: float
    w: int
    h: int
    rail: Rail = Rail.ANY
    fixed: bool = False
    cx: Optional[float] = None
    cy: Optional[int] = None
    legalized: bool = False

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"cell {self.name}: width and height must be >= 1")
        self.rail = Rail(self.rail)
        if self.cx is None:
            self.cx = float(self.gx)
        if self.cy is None:
            self.cy = int(round(self.gy))
        if self.fixed:
            self.legalized = True

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def rows(self) -> range:
        return range(self.cy, self.cy + self.h)

    @property
    def right(self) -> float:
        return self.cx + self.w


@dataclass
class Placement:
    """A grid plus its cells, in input order."""
    grid: SiteGrid
    cells: List[Cell] = field(default_factory=list)

    def __post_init__(self):
        seen_ids = set()
        seen_names = set()
        for c in self.cells:
            if c.id in seen_ids:
                raise DuplicateIdError(f"duplicate cell id {c.id}")
            if c.name in seen_names:
                raise DuplicateIdError(f"duplicate cell name {c.name!r}")
            seen_ids.add(c.id)
            seen_names.add(c.name)

    @property
    def H(self) -> int:
        """Largest cell height (0 for an empty placement)."""
        return max((c.h for c in self.cells), default=0)

    def movable(self) -> List[Cell]:
        return [c for c in self.cells if not c.fixed]

    def by_id(self) -> Dict[int, Cell]:
        return {c.id: c for c in self.cells}

    def height_classes(self) -> Dict[int, List[Cell]]:
        """Movable cells grouped by height."""
        classes: Dict[int, List[Cell]] = defaultdict(list)
        for c in self.movable():
            classes[c.h].append(c)
        return dict(classes)

    def copy(self) -> "Placement":
        return Placement(self.grid, [_copy.copy(c) for c in self.cells])


@dataclass(frozen=True)
class Displacement:
    """Per-cell displacement and the aggregate metrics, in row heights."""
    per_cell: Dict[int, float]
    sam: float
    max_disp: float
    per_height: Dict[int, float]


@dataclass(frozen=True, order=True)
class Violation:
    """One legality violation; ``cells`` holds sorted cell ids."""
    kind: str
    cells: Tuple[int, ...]
    detail: str = ""


def manhattan_displacement(cell: Cell, ratio: float = 1.0) -> float:
    """Displacement of ``cell`` in row heights; ``ratio`` scales the x term."""
    return abs(cell.cx - cell.gx) * ratio + abs(cell.cy - cell.gy)


def average_displacement(p: Placement) -> Displacement:
    """Average displacement per height class, then across classes, over H.

    Fixed cells are left out; so are empty height classes.
    """
    classes = p.height_classes()
    if not classes:
        raise EmptyPlacement("placement has no movable cells")
    ratio = site_ratio(p.grid)
    per_cell = {c.id: manhattan_displacement(c, ratio) for c in p.movable()}
    per_height = {
        h: math.fsum(per_cell[c.id] for c in members) / len(members)
        for h, members in sorted(classes.items())
    }
    big_h = max(classes)
    sam = math.fsum(per_height.values()) / big_h
    return Displacement(
        per_cell=per_cell,
        sam=sam,
        max_disp=max(per_cell.values()),
        per_height=per_height,
    )


def _overlap_pairs(cells: List[Cell]) -> List[Tuple[int, int]]:
    """Overlapping id pairs found with one sweep per row."""
    rows: Dict[int, List[Tuple[float, float, int]]] = defaultdict(list)
    for c in cells:
        for r in c.rows:
            rows[r].append((c.cx, c.cx + c.w, c.id))
    pairs = set()
    for r in rows:
        active: List[Tuple[float, int]] = []
        for start, end, cid in sorted(rows[r]):
            active = [(e, other) for e, other in active if e > start]
            for _, other in active:
                pairs.add((min(cid, other), max(cid, other)))
            active.append((end, cid))
    return sorted(pairs)


def check_legal(p: Placement) -> List[Violation]:
    """Every legality violation of ``p``, sorted by (kind, cells)."""
    grid = p.grid
    blocked = grid.blocked_by_row()
    violations: List[Violation] = []
    for c in p.cells:
        if c.cx < 0 or c.cx + c.w > grid.num_sites or c.cy < 0 or c.cy + c.h > grid.num_rows:
            violations.append(Violation("out_of_bounds", (c.id,), f"({c.cx}, {c.cy})"))
        if c.fixed:
            continue
        if not float(c.cx).is_integer():
            violations.append(Violation("off_site", (c.id,), f"x={c.cx}"))
        if c.rail != Rail.ANY and rail_of(grid, c.cy) != c.rail:
            violations.append(Violation("rail_mismatch", (c.id,), f"row {c.cy}"))
        for r in c.rows:
            hit = next(
                (s for s, e in blocked.get(r, ()) if s < c.cx + c.w and c.cx < e),
                None,
            )
            if hit is not None:
                violations.append(Violation("blockage", (c.id,), f"row {r}"))
                break
    for a, b in _overlap_pairs(p.cells):
        violations.append(Violation("overlap", (a, b)))
    return sorted(violations)
