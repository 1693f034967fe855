"""
Cell Shifting
-------------
title: Cell Shifting
description: Trial insertion of a target and overlap removal by pushing cells away from it
authors: Placement Team
date_created: 2026-08-10
dependencies:
  - core.code
  - region.code

Two shifters compute the same fixpoint. ``sacs_shift`` visits the cells once
in x order (right to left for the left phase) and pushes each neighbour as
soon as its pusher is final. ``multi_pass_shift`` sweeps every row until a
sweep changes nothing and is kept as the reference.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Set, Tuple

from src.features.core.code import Cell, Rail, rail_of
from src.features.core.errors import OutOfSegment, RailMismatch, SegmentOverflow
from src.features.region.code import LocalRegion

logger = logging.getLogger(__name__)


class Direction(str, Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class SortedCells:
    """Local cells ascending by (x, bottom row, id)."""
    order: Tuple[int, ...]
    direction: Direction

    def traversal(self) -> Tuple[int, ...]:
        if self.direction is Direction.LEFT:
            return tuple(reversed(self.order))
        return self.order


@dataclass
class SegmentCursor:
    """Per-row pointer to the next neighbour slot and a done flag."""
    csp: Dict[int, int]
    cse: Dict[int, bool]
    lengths: Dict[int, int]
    direction: Direction
    advances: int = 0

    @classmethod
    def start(cls, rows: Mapping[int, List[int]], direction: Direction) -> "SegmentCursor":
        lengths = {r: len(ids) for r, ids in rows.items()}
        if direction is Direction.LEFT:
            csp = {r: n - 1 for r, n in lengths.items()}
        else:
            csp = {r: 0 for r in lengths}
        cse = {r: n == 0 for r, n in lengths.items()}
        return cls(csp, cse, lengths, direction)

    def advance(self, row: int, slot: int) -> None:
        """Move past ``slot`` of ``row``; a finished row stays finished."""
        if self.cse[row]:
            return
        self.advances += 1
        if self.direction is Direction.LEFT:
            self.csp[row] = min(self.csp[row], slot - 1)
            self.cse[row] = self.csp[row] < 0
        else:
            self.csp[row] = max(self.csp[row], slot + 1)
            self.cse[row] = self.csp[row] >= self.lengths[row]


@dataclass
class ShiftResult:
    """Positions after one phase.

    ``positions`` is in emission order for the single-pass shifter.
    """
    positions: Dict[int, float]
    moved: Set[int]
    pass_count: int
    cursor_advances: int = 0


@dataclass
class TrialCopy:
    """Scratch state of a region with the target inserted at a gap."""
    region: LocalRegion
    target_id: int
    xt: float
    bottom_row: int
    gaps: Dict[int, int]
    rows: Dict[int, List[int]]
    positions: Dict[int, float]
    widths: Dict[int, int]
    cell_rows: Dict[int, Tuple[int, ...]]
    slots: Dict[Tuple[int, int], int] = field(default_factory=dict)
    bounds: Dict[int, Tuple[int, int]] = field(default_factory=dict)


def default_gaps(region: LocalRegion, target: Cell, xt: float, bottom_row: int) -> Dict[int, int]:
    """Gap per target row: after every cell whose centre lies left of the target's."""
    centre = xt + target.w / 2.0
    gaps = {}
    for r in range(bottom_row, bottom_row + target.h):
        seg = region.segment(r)
        cells = seg.cells if seg is not None else ()
        gaps[r] = sum(
            1 for cid in cells
            if region.local_cells[cid].x + region.local_cells[cid].w / 2.0 < centre
        )
    return gaps


def trial_insert(
    region: LocalRegion,
    target: Cell,
    xt: float,
    bottom_row: int,
    gaps: Optional[Mapping[int, int]] = None,
) -> TrialCopy:
    """Copy of ``region`` with ``target`` inserted at (xt, bottom_row).

    Raises RailMismatch for a row of the wrong rail and OutOfSegment when
    the footprint leaves a spanned segment.
    """
    if target.rail != Rail.ANY and rail_of(region.grid, bottom_row) != target.rail:
        raise RailMismatch(f"row {bottom_row} does not carry rail {target.rail.value}")
    target_rows = tuple(range(bottom_row, bottom_row + target.h))
    for r in target_rows:
        seg = region.segment(r)
        if seg is None or xt < seg.lo or xt + target.w > seg.hi:
            raise OutOfSegment(f"target at x={xt} leaves the segment of row {r}")
    if gaps is None:
        gaps = default_gaps(region, target, xt, bottom_row)

    rows: Dict[int, List[int]] = {}
    for seg in region.segments:
        ids = list(seg.cells)
        if seg.row in gaps:
            ids.insert(gaps[seg.row], target.id)
        rows[seg.row] = ids

    cells = region.local_cells
    positions = {cid: c.x for cid, c in cells.items()}
    positions[target.id] = xt
    widths = {cid: c.w for cid, c in cells.items()}
    widths[target.id] = target.w
    cell_rows = {cid: tuple(c.rows) for cid, c in cells.items()}
    cell_rows[target.id] = target_rows

    copy = TrialCopy(
        region=region, target_id=target.id, xt=xt, bottom_row=bottom_row,
        gaps=dict(gaps), rows=rows, positions=positions, widths=widths, cell_rows=cell_rows,
    )
    for r, ids in rows.items():
        for i, cid in enumerate(ids):
            copy.slots[(cid, r)] = i
    for cid in cells:
        copy.bounds[cid] = region.cell_bounds(cid)
    segs = [region.segment(r) for r in target_rows]
    copy.bounds[target.id] = (max(s.lo for s in segs), min(s.hi for s in segs))
    return copy


def sort_cells(copy: TrialCopy, direction: Direction) -> SortedCells:
    cells = copy.region.local_cells
    order = sorted(cells, key=lambda cid: (cells[cid].x, cells[cid].y, cid))
    return SortedCells(tuple(order), direction)


def _moved(copy: TrialCopy, pos: Dict[int, float]) -> Set[int]:
    return {cid for cid, x in pos.items() if cid != copy.target_id and x != copy.positions[cid]}


def _check_overflow(copy: TrialCopy, pos: Dict[int, float], moved: Set[int]) -> None:
    for cid in sorted(moved):
        lo, hi = copy.bounds[cid]
        if pos[cid] < lo or pos[cid] + copy.widths[cid] > hi:
            raise SegmentOverflow(
                f"cell {cid} pushed to x={pos[cid]} outside [{lo}, {hi}) at xt={copy.xt}"
            )


def sacs_shift(copy: TrialCopy, direction: Direction) -> ShiftResult:
    """Single traversal: the target first, then the cells in C_sort order.

    A cell's position is final when it is reached, so it is emitted right
    away and only then pushes its neighbour on the far side.
    """
    left = direction is Direction.LEFT
    pos = dict(copy.positions)
    cursor = SegmentCursor.start(copy.rows, direction)
    emitted: Dict[int, float] = {}
    target = copy.target_id
    for cid in (target,) + sort_cells(copy, direction).traversal():
        here = pos[cid]
        emitted[cid] = here
        for row in copy.cell_rows[cid]:
            ids = copy.rows[row]
            slot = copy.slots[(cid, row)]
            cursor.advance(row, slot)
            j = slot - 1 if left else slot + 1
            if j < 0 or j >= len(ids) or ids[j] == target:
                continue
            nb = ids[j]
            if left:
                limit = here - copy.widths[nb]
                if limit < pos[nb]:
                    pos[nb] = limit
            else:
                limit = here + copy.widths[cid]
                if limit > pos[nb]:
                    pos[nb] = limit
    moved = _moved(copy, pos)
    _check_overflow(copy, pos, moved)
    return ShiftResult(positions=emitted, moved=moved, pass_count=1, cursor_advances=cursor.advances)


def multi_pass_shift(copy: TrialCopy, direction: Direction) -> ShiftResult:
    """Sweep rows bottom to top, away from the target, until a sweep is clean."""
    left = direction is Direction.LEFT
    pos = dict(copy.positions)
    target = copy.target_id
    rows = sorted(copy.rows)
    passes = 0
    while True:
        passes += 1
        changed = False
        for row in rows:
            ids = copy.rows[row]
            if left:
                for i in range(len(ids) - 2, -1, -1):
                    nb, pusher = ids[i], ids[i + 1]
                    if nb == target:
                        continue
                    limit = pos[pusher] - copy.widths[nb]
                    if limit < pos[nb]:
                        pos[nb] = limit
                        changed = True
            else:
                for i in range(1, len(ids)):
                    nb, pusher = ids[i], ids[i - 1]
                    if nb == target:
                        continue
                    limit = pos[pusher] + copy.widths[pusher]
                    if limit > pos[nb]:
                        pos[nb] = limit
                        changed = True
        if not changed:
            break
    moved = _moved(copy, pos)
    _check_overflow(copy, pos, moved)
    return ShiftResult(positions=pos, moved=moved, pass_count=passes)


def combine_phases(copy: TrialCopy, left: ShiftResult, right: ShiftResult) -> Dict[int, float]:
    """Final positions: left-phase moves, right-phase moves, the rest unchanged."""
    both = left.moved & right.moved
    if both:
        raise SegmentOverflow(f"cells {sorted(both)} pushed in both directions")
    out = dict(copy.positions)
    for cid in right.moved:
        out[cid] = right.positions[cid]
    for cid in left.moved:
        out[cid] = left.positions[cid]
    return out


def shift_both_phases(
    copy: TrialCopy, concurrent: bool = False
) -> Tuple[ShiftResult, ShiftResult, Dict[int, float]]:
    """Run both phases with ``sacs_shift``, on two threads when ``concurrent``."""
    if concurrent:
        with ThreadPoolExecutor(max_workers=2) as pool:
            left_future = pool.submit(sacs_shift, copy, Direction.LEFT)
            right_future = pool.submit(sacs_shift, copy, Direction.RIGHT)
            left, right = left_future.result(), right_future.result()
    else:
        left = sacs_shift(copy, Direction.LEFT)
        right = sacs_shift(copy, Direction.RIGHT)
    return left, right, combine_phases(copy, left, right)
