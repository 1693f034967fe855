"""
Legalizer
---------
title: Legalizer
description: Drives ordering, region extraction, position search and commit until every cell is placed
authors: Placement Team
date_created: 2026-08-18
dependencies:
  - ordering.code
  - region.code
  - fop.code
  - shift.code
  - tenacity
"""

import heapq
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from tenacity import RetryError, Retrying, before_sleep_log, retry_if_exception_type, stop_after_attempt

from src.features.core.code import Cell, Placement, Rail, average_displacement, rail_of
from src.features.core.errors import (
    EmptyPlacement,
    EmptyRegion,
    FallbackRequired,
    NoFeasiblePoint,
    SegmentOverflow,
    SnapInfeasible,
    Unlegalizable,
)
from src.features.fop.code import (
    InsertionPoint,
    build_displacement_curves,
    find_optimal_position,
    make_executor,
)
from src.features.fop.oracle import positional_oracle
from src.features.ordering.code import DensityCache, initial_order, pre_move
from src.features.region.code import (
    LocalRegion,
    RowIndex,
    Window,
    build_window,
    expand_window,
    extract_local_region,
)
from src.features.shift.code import TrialCopy, shift_both_phases, trial_insert
from .config import LegalizeConfig

logger = logging.getLogger(__name__)

STAGES = ("region", "fop", "commit")

# failures that a larger window can cure
RETRYABLE = (NoFeasiblePoint, EmptyRegion, SnapInfeasible, SegmentOverflow)


@dataclass
class RunReport:
    sam: float = 0.0
    max_disp: float = 0.0
    per_height_sam: Dict[int, float] = field(default_factory=dict)
    cells_legalized: int = 0
    fallbacks_used: int = 0
    expansions: int = 0
    insertion_points_evaluated: int = 0
    stage_times_ms: Dict[str, float] = field(default_factory=dict)
    runtime_ms: float = 0.0


def snap_position(region: LocalRegion, target: Cell, ip: InsertionPoint, x_star: float) -> float:
    """Integer x for the target: floor or ceil of ``x_star``, whichever scores lower.

    Ties go to the one nearer the target's gx, then the smaller.
    """
    lo, hi = math.ceil(ip.x_lo), math.floor(ip.x_hi)
    if lo > hi:
        raise SnapInfeasible(f"no integer site in [{ip.x_lo}, {ip.x_hi}]")
    curves = build_displacement_curves(region, target, ip)
    options = {min(max(math.floor(x_star), lo), hi), min(max(math.ceil(x_star), lo), hi)}
    best = min(options, key=lambda x: (curves.evaluate(x), abs(x - target.gx), x))
    return float(best)


def commit_insertion(
    placement: Placement,
    region: LocalRegion,
    target: Cell,
    ip: InsertionPoint,
    x_star: float,
    *,
    index: Optional[RowIndex] = None,
    lookup: Optional[Dict[int, Cell]] = None,
    concurrent: bool = False,
) -> Placement:
    """Insert ``target`` at the snapped ``x_star`` and push its neighbours.

    With an integer target x every pushed cell lands on an integer site. If
    the shifted positions still miss a site or collide, one ``reshift`` pass
    repairs them; SnapInfeasible only when that fails too. Nothing is
    written unless the final positions check out.
    """
    if lookup is None:
        lookup = placement.by_id()
    xt = snap_position(region, target, ip, x_star)
    copy = trial_insert(region, target, xt, ip.bottom_row, gaps=ip.gap_map)
    _, _, positions = shift_both_phases(copy, concurrent=concurrent)
    try:
        updates = _checked_updates(copy, positions, lookup)
    except SnapInfeasible as err:
        logger.debug("re-shifting around %s: %s", target.name, err)
        positions = reshift(copy, positions, lookup)
        updates = _checked_updates(copy, positions, lookup)

    for cell, x in updates:
        if index is not None:
            index.move(cell, x)
        else:
            cell.cx = x
    placed = lookup[target.id]
    placed.cx = float(positions[target.id])
    placed.cy = ip.bottom_row
    placed.legalized = True
    if index is not None:
        index.add(placed)
    logger.debug("placed %s at (%s, %d), moved %d cells", placed.name, placed.cx, ip.bottom_row, len(updates))
    return placement


def _checked_updates(copy: TrialCopy, positions: Dict[int, float],
                     lookup: Dict[int, Cell]) -> List[Tuple[Cell, float]]:
    """Moved cells and their new x; SnapInfeasible for any off-site, out-of-segment or overlapping cell."""
    updates: List[Tuple[Cell, float]] = []
    for cid, x in positions.items():
        cell = lookup[cid]
        lo, hi = copy.bounds[cid]
        if cid == copy.target_id:
            if not float(x).is_integer() or x < lo or x + cell.w > hi:
                raise SnapInfeasible(f"target {cell.name} would land at x={x}")
            continue
        if x == cell.cx:
            continue
        if not float(x).is_integer() or x < lo or x + cell.w > hi:
            raise SnapInfeasible(f"cell {cell.name} would land at x={x}")
        updates.append((cell, x))
    _check_rows(copy.rows, positions, copy.widths)
    return updates


def reshift(copy: TrialCopy, positions: Dict[int, float], lookup: Dict[int, Cell]) -> Dict[int, float]:
    """One left-to-right pass that puts every cell of ``copy`` on a site.

    Each cell takes the floor or ceil of its x, whichever is nearer its
    global x (the smaller on a tie), then moves right until it clears its
    left neighbour in every row. Cells are taken once all their left
    neighbours are done, lowest x first.
    """
    lefts: Dict[int, List[int]] = {cid: [] for cid in positions}
    waiting: Dict[int, int] = {cid: 0 for cid in positions}
    rights: Dict[int, List[int]] = {cid: [] for cid in positions}
    for ids in copy.rows.values():
        for a, b in zip(ids, ids[1:]):
            if a not in lefts[b]:
                lefts[b].append(a)
                rights[a].append(b)
                waiting[b] += 1

    ready = [(positions[cid], cid) for cid, n in waiting.items() if n == 0]
    heapq.heapify(ready)
    out: Dict[int, float] = {}
    while ready:
        x, cid = heapq.heappop(ready)
        gx = lookup[cid].gx
        new_x = min({math.floor(x), math.ceil(x)}, key=lambda v: (abs(v - gx), v))
        for a in lefts[cid]:
            new_x = max(new_x, out[a] + copy.widths[a])
        out[cid] = float(new_x)
        for b in rights[cid]:
            waiting[b] -= 1
            if waiting[b] == 0:
                heapq.heappush(ready, (positions[b], b))
    return out


def _check_rows(rows: Dict[int, List[int]], positions: Dict[int, float], widths: Dict[int, int]) -> None:
    for r, ids in rows.items():
        for a, b in zip(ids, ids[1:]):
            if positions[a] + widths[a] > positions[b]:
                raise SnapInfeasible(f"cells {a} and {b} overlap in row {r} after shifting")


def _free_intervals(index: RowIndex, row: int, num_sites: int) -> List[Tuple[int, int]]:
    taken = list(index.blocked(row))
    for x, cid in index.row_entries(row):
        c = index.cell(cid)
        taken.append((int(math.floor(x)), int(math.ceil(x + c.w))))
    taken.sort()
    free = []
    cursor = 0
    for lo, hi in taken:
        if lo > cursor:
            free.append((cursor, lo))
        cursor = max(cursor, hi)
    if cursor < num_sites:
        free.append((cursor, num_sites))
    return free


def _intersect(a: List[Tuple[int, int]], b: List[Tuple[int, int]]) -> List[Tuple[int, int]]:
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo < hi:
            out.append((lo, hi))
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return out


def greedy_slot(index: RowIndex, target: Cell) -> Optional[Tuple[int, int]]:
    """Nearest free aligned slot: rows by |row - gy|, then sites by |x - gx|."""
    grid = index.grid
    rows = [
        r for r in range(grid.num_rows - target.h + 1)
        if target.rail == Rail.ANY or rail_of(grid, r) == target.rail
    ]
    rows.sort(key=lambda r: (abs(r - target.gy), r))
    for r in rows:
        free = _free_intervals(index, r, grid.num_sites)
        for rr in range(r + 1, r + target.h):
            free = _intersect(free, _free_intervals(index, rr, grid.num_sites))
        best = None
        for lo, hi in free:
            if hi - lo < target.w:
                continue
            for x in (math.floor(target.gx), math.ceil(target.gx)):
                x = min(max(x, lo), hi - target.w)
                key = (abs(x - target.gx), x)
                if best is None or key < best:
                    best = key
        if best is not None:
            return best[1], r
    return None


class Legalizer:
    """One legalization run over a working copy of the input placement."""

    def __init__(self, placement: Placement, cfg: Optional[LegalizeConfig] = None):
        self.cfg = cfg or LegalizeConfig()
        self.placement = pre_move(placement)
        self.grid = self.placement.grid
        self.lookup = self.placement.by_id()
        self.index = RowIndex.from_placement(self.placement)
        self.densities = DensityCache(self._density)
        self.report = RunReport(stage_times_ms={s: 0.0 for s in STAGES})
        self._pool = None

    def _density(self, cell_id: int) -> Tuple[float, Window]:
        cell = self.lookup[cell_id]
        window = build_window(cell, self.cfg.window, self.grid)
        try:
            region = extract_local_region(self.placement, window, index=self.index, target=cell)
        except EmptyRegion:
            return 0.0, window
        return region.density, window

    def _timed(self, stage: str, started: float) -> float:
        now = time.perf_counter()
        self.report.stage_times_ms[stage] += (now - started) * 1000.0
        return now

    def _try_window(self, target: Cell, window: Window) -> None:
        started = time.perf_counter()
        region = extract_local_region(self.placement, window, index=self.index, target=target)
        started = self._timed("region", started)
        result = find_optimal_position(
            region, target, self.cfg.parallelism,
            prune=self.cfg.prune, executor=self.cfg.executor, pool=self._pool,
        )
        self.report.insertion_points_evaluated += result.evaluated
        if self.cfg.oracle_check:
            _, oracle_v = positional_oracle(region, target, result.point)
            if abs(oracle_v - result.v_star) > 1e-9 * max(1.0, abs(oracle_v)):
                logger.warning(
                    "oracle disagrees for %s: curve %.12g, oracle %.12g",
                    target.name, result.v_star, oracle_v,
                )
        started = self._timed("fop", started)
        commit_insertion(
            self.placement, region, target, result.point, result.x_star,
            index=self.index, lookup=self.lookup, concurrent=self.cfg.parallel_phases,
        )
        self._timed("commit", started)

    def place(self, target: Cell) -> Window:
        """Place one target, growing its window on failure; returns the last window."""
        window = build_window(target, self.cfg.window, self.grid)
        retrying = Retrying(
            stop=stop_after_attempt(self.cfg.max_expand + 1),
            retry=retry_if_exception_type(RETRYABLE),
            before_sleep=before_sleep_log(logger, logging.DEBUG),
        )
        try:
            for attempt in retrying:
                with attempt:
                    done = attempt.retry_state.attempt_number - 1
                    if done:
                        window = expand_window(window, self.cfg.window, self.grid, done - 1)
                        self.report.expansions += 1
                    self._try_window(target, window)
            return window
        except RetryError as err:
            raise FallbackRequired(f"no feasible point for {target.name} after expansion") from err

    def fallback(self, target: Cell) -> None:
        slot = greedy_slot(self.index, target)
        if slot is None:
            raise Unlegalizable(f"no free slot for cell {target.name}")
        x, row = slot
        target.cx = float(x)
        target.cy = row
        target.legalized = True
        self.index.add(target)
        self.report.fallbacks_used += 1
        logger.warning("fallback placed %s at (%d, %d)", target.name, x, row)

    def run(self) -> Tuple[Placement, RunReport]:
        started = time.perf_counter()
        state = initial_order(self.placement, self.cfg.ws)
        logger.info(
            "legalizing %d of %d cells on a %dx%d grid",
            state.remaining(), len(self.placement.cells), self.grid.num_rows, self.grid.num_sites,
        )
        if self.cfg.parallelism > 1:
            self._pool = make_executor(self.cfg.executor, self.cfg.parallelism)
        try:
            for cid in state.consume(self.densities):
                target = self.lookup[cid]
                self.densities.discard(cid)
                try:
                    window = self.place(target)
                except FallbackRequired:
                    self.fallback(target)
                    window = build_window(target, self.cfg.window, self.grid)
                self.densities.invalidate(window)
        finally:
            if self._pool is not None:
                self._pool.shutdown()
                self._pool = None

        report = self.report
        try:
            disp = average_displacement(self.placement)
            report.sam = disp.sam
            report.max_disp = disp.max_disp
            report.per_height_sam = disp.per_height
        except EmptyPlacement:
            pass
        report.cells_legalized = sum(1 for c in self.placement.movable() if c.legalized)
        report.runtime_ms = (time.perf_counter() - started) * 1000.0
        report.stage_times_ms = {k: round(v, 3) for k, v in report.stage_times_ms.items()}
        logger.info(
            "legalized %d cells: sam=%.6f max=%.4f fallbacks=%d expansions=%d in %.1f ms",
            report.cells_legalized, report.sam, report.max_disp,
            report.fallbacks_used, report.expansions, report.runtime_ms,
        )
        return self.placement, report


def legalize(placement: Placement, cfg: Optional[LegalizeConfig] = None) -> Tuple[Placement, RunReport]:
    """Legalize a copy of ``placement``; the input is left untouched."""
    return Legalizer(placement, cfg).run()
