"""
Local Region
------------
title: Local Region
description: Windows around a target, local segments, local cells and their density
authors: Placement Team
date_created: 2026-08-05
dependencies:
  - core.code
  - core.errors
"""

import logging
import math
from bisect import bisect_left, insort
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Tuple

from src.features.core.code import Cell, Placement, SiteGrid
from src.features.core.errors import EmptyRegion, FallbackRequired

logger = logging.getLogger(__name__)

Interval = Tuple[int, int]


@dataclass(frozen=True)
class WindowConfig:
    window_rows: int = 10
    window_sites: int = 100
    expand_factor: int = 2
    max_expand: int = 4


@dataclass(frozen=True)
class Window:
    """Half-open rows [row_lo, row_hi) and sites [site_lo, site_hi)."""
    row_lo: int
    row_hi: int
    site_lo: int
    site_hi: int

    @property
    def rows(self) -> range:
        return range(self.row_lo, self.row_hi)

    def intersects(self, other: "Window") -> bool:
        return (self.row_lo < other.row_hi and other.row_lo < self.row_hi
                and self.site_lo < other.site_hi and other.site_lo < self.site_hi)

    def contains(self, x: float, y: int, w: int, h: int) -> bool:
        return (self.site_lo <= x and x + w <= self.site_hi
                and self.row_lo <= y and y + h <= self.row_hi)


@dataclass(frozen=True)
class LocalCell:
    """Snapshot of a local cell: current corner, size and global origin."""
    id: int
    x: float
    y: int
    w: int
    h: int
    gx: float
    gy: float

    @property
    def rows(self) -> range:
        return range(self.y, self.y + self.h)


@dataclass(frozen=True)
class LocalSegment:
    """Longest free run [lo, hi) of one window row; ``cells`` ordered by x."""
    row: int
    lo: int
    hi: int
    cells: Tuple[int, ...] = ()

    @property
    def length(self) -> int:
        return self.hi - self.lo


@dataclass
class LocalRegion:
    """Segments and local cells of one window.

    Immutable by convention: it is a snapshot of the placement at
    extraction time and can be shipped to worker processes.
    """
    window: Window
    grid: SiteGrid
    segments: Tuple[LocalSegment, ...]
    local_cells: Dict[int, LocalCell]
    density: float
    _by_row: Dict[int, LocalSegment] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._by_row = {s.row: s for s in self.segments}

    def segment(self, row: int) -> Optional[LocalSegment]:
        return self._by_row.get(row)

    @cached_property
    def baseline(self) -> float:
        """Summed horizontal displacement of the local cells as they stand."""
        return sum(abs(c.x - c.gx) for c in self.local_cells.values())

    @cached_property
    def vertical(self) -> float:
        return sum(abs(c.y - c.gy) for c in self.local_cells.values())

    def cell_bounds(self, cell_id: int) -> Tuple[int, int]:
        """Tightest segment bounds over the rows a local cell spans."""
        c = self.local_cells[cell_id]
        segs = [self._by_row[r] for r in c.rows]
        return max(s.lo for s in segs), min(s.hi for s in segs)


def _merge(intervals: Iterable[Interval]) -> List[Interval]:
    out: List[Interval] = []
    for lo, hi in sorted(intervals):
        if hi <= lo:
            continue
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def _free_runs(lo: int, hi: int, blocked: List[Interval]) -> List[Interval]:
    """Runs of [lo, hi) not covered by the sorted disjoint ``blocked``."""
    runs: List[Interval] = []
    cursor = lo
    for b_lo, b_hi in blocked:
        if b_hi <= cursor:
            continue
        if b_lo >= hi:
            break
        if b_lo > cursor:
            runs.append((cursor, b_lo))
        cursor = max(cursor, b_hi)
    if cursor < hi:
        runs.append((cursor, hi))
    return runs


class RowIndex:
    """Per-row x-sorted lists of legalized movable cells.

    Fixed cells are folded into the blocked ranges together with the grid
    blockages.
    """

    def __init__(self, grid: SiteGrid):
        self.grid = grid
        self._rows: List[List[Tuple[float, int]]] = [[] for _ in range(grid.num_rows)]
        self._cells: Dict[int, Cell] = {}
        self._blocked: Dict[int, List[Interval]] = grid.blocked_by_row()
        self.max_width = 0

    @classmethod
    def from_placement(cls, p: Placement) -> "RowIndex":
        index = cls(p.grid)
        fixed_spans: Dict[int, List[Interval]] = {}
        for c in p.cells:
            if c.fixed:
                span = (int(math.floor(c.cx)), int(math.ceil(c.cx + c.w)))
                for r in c.rows:
                    if 0 <= r < p.grid.num_rows:
                        fixed_spans.setdefault(r, []).append(span)
            elif c.legalized:
                index.add(c)
        for r, spans in fixed_spans.items():
            index._blocked[r] = _merge(index._blocked.get(r, []) + spans)
        return index

    def blocked(self, row: int) -> List[Interval]:
        return self._blocked.get(row, [])

    def row_entries(self, row: int) -> List[Tuple[float, int]]:
        return self._rows[row]

    def cell(self, cell_id: int) -> Cell:
        return self._cells[cell_id]

    def __contains__(self, cell_id: int) -> bool:
        return cell_id in self._cells

    def add(self, c: Cell) -> None:
        self._cells[c.id] = c
        self.max_width = max(self.max_width, c.w)
        for r in c.rows:
            insort(self._rows[r], (c.cx, c.id))

    def remove(self, c: Cell) -> None:
        for r in c.rows:
            row = self._rows[r]
            i = bisect_left(row, (c.cx, c.id))
            if i < len(row) and row[i][1] == c.id:
                del row[i]
        self._cells.pop(c.id, None)

    def move(self, c: Cell, new_x: float) -> None:
        self.remove(c)
        c.cx = new_x
        self.add(c)

    def cells_in(self, row: int, lo: float, hi: float) -> List[Cell]:
        """Indexed cells whose footprint in ``row`` meets [lo, hi)."""
        entries = self._rows[row]
        i = bisect_left(entries, (lo - self.max_width, -1))
        out = []
        while i < len(entries) and entries[i][0] < hi:
            c = self._cells[entries[i][1]]
            if c.cx + c.w > lo:
                out.append(c)
            i += 1
        return out


def build_window(target: Cell, cfg: WindowConfig, grid: SiteGrid) -> Window:
    """Window of cfg size centred on the target, stretched to hold it, clipped."""
    x = min(max(target.cx, 0.0), max(grid.num_sites - target.w, 0))
    y = min(max(target.cy, 0), max(grid.num_rows - target.h, 0))
    row_lo = y - cfg.window_rows // 2
    row_hi = max(row_lo + cfg.window_rows, y + target.h)
    site_lo = int(math.floor(x)) - cfg.window_sites // 2
    site_hi = max(site_lo + cfg.window_sites, int(math.ceil(x + target.w)))
    return Window(
        row_lo=max(0, row_lo),
        row_hi=min(grid.num_rows, row_hi),
        site_lo=max(0, site_lo),
        site_hi=min(grid.num_sites, site_hi),
    )


def _grow(lo: int, hi: int, factor: int, limit: int) -> Tuple[int, int]:
    size = (hi - lo) * factor
    new_lo = lo - (size - (hi - lo)) // 2
    new_lo = max(0, min(new_lo, limit - size))
    return new_lo, min(limit, new_lo + size)


def expand_window(window: Window, cfg: WindowConfig, grid: SiteGrid, expansions_done: int = 0) -> Window:
    """Grow both dimensions by ``cfg.expand_factor`` around the same centre.

    Raises FallbackRequired once ``cfg.max_expand`` expansions were used.
    """
    if expansions_done >= cfg.max_expand:
        raise FallbackRequired(f"window expanded {expansions_done} times")
    row_lo, row_hi = _grow(window.row_lo, window.row_hi, cfg.expand_factor, grid.num_rows)
    site_lo, site_hi = _grow(window.site_lo, window.site_hi, cfg.expand_factor, grid.num_sites)
    return Window(row_lo, row_hi, site_lo, site_hi)


def _pick_run(runs: List[Interval], ref: float) -> Optional[Interval]:
    """Longest run; ties go to the run nearer ``ref``, then the rightmost."""
    best = None
    best_key = None
    for lo, hi in runs:
        dist = max(lo - ref, 0.0, ref - hi)
        key = (-(hi - lo), dist, -lo)
        if best_key is None or key < best_key:
            best, best_key = (lo, hi), key
    return best


def extract_local_region(
    placement: Placement,
    window: Window,
    *,
    index: Optional[RowIndex] = None,
    target: Optional[Cell] = None,
) -> LocalRegion:
    """Segments and local cells of ``window``.

    Only legalized movable cells take part. A cell that reaches into a
    segment without fitting entirely inside the segments is an obstacle and
    shortens the run; this repeats until nothing changes.
    """
    if index is None:
        index = RowIndex.from_placement(placement)
    if target is not None:
        ref = min(max(target.cx, window.site_lo), window.site_hi) + target.w / 2.0
    else:
        ref = (window.site_lo + window.site_hi) / 2.0

    candidates: Dict[int, Cell] = {}
    for r in window.rows:
        for c in index.cells_in(r, window.site_lo, window.site_hi):
            candidates[c.id] = c
    if target is not None:
        candidates.pop(target.id, None)
    ordered = [candidates[k] for k in sorted(candidates)]

    obstacles: Dict[int, List[Interval]] = {}
    obstacle_ids = set()
    while True:
        spans: Dict[int, Interval] = {}
        for r in window.rows:
            blocked = _merge(index.blocked(r) + obstacles.get(r, []))
            run = _pick_run(_free_runs(window.site_lo, window.site_hi, blocked), ref)
            if run is not None:
                spans[r] = run

        local: List[Cell] = []
        fresh: List[Cell] = []
        for c in ordered:
            if c.id in obstacle_ids:
                continue
            inside = all(
                r in spans and spans[r][0] <= c.cx and c.cx + c.w <= spans[r][1]
                for r in c.rows
            )
            if inside:
                local.append(c)
            elif any(r in spans and spans[r][0] < c.cx + c.w and c.cx < spans[r][1] for r in c.rows):
                fresh.append(c)
        if not fresh:
            break
        for c in fresh:
            obstacle_ids.add(c.id)
            span = (int(math.floor(c.cx)), int(math.ceil(c.cx + c.w)))
            for r in c.rows:
                obstacles.setdefault(r, []).append(span)

    if not spans:
        raise EmptyRegion(f"no free run in window {window}")

    members: Dict[int, List[LocalCell]] = {r: [] for r in spans}
    local_cells: Dict[int, LocalCell] = {}
    for c in local:
        snap = LocalCell(c.id, c.cx, c.cy, c.w, c.h, c.gx, c.gy)
        local_cells[c.id] = snap
        for r in c.rows:
            members[r].append(snap)
    segments = tuple(
        LocalSegment(r, lo, hi, tuple(m.id for m in sorted(members[r], key=lambda m: (m.x, m.id))))
        for r, (lo, hi) in sorted(spans.items())
    )
    capacity = sum(s.length for s in segments)
    density = sum(c.w * c.h for c in local_cells.values()) / capacity
    return LocalRegion(window, placement.grid, segments, local_cells, density)
