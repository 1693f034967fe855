"""
Optimal Position Search
-----------------------
title: Optimal Position Search
description: Insertion points, displacement curves and the best target position in a region
authors: Placement Team
date_created: 2026-08-12
dependencies:
  - core.code
  - region.code
  - fop.pipeline

An insertion point picks one gap per target row. For every local cell it
also records how far it sits from the target along the widest push chain:
``left_chain[c]`` is the summed width from c's left edge to the target's
left edge, ``right_chain[c]`` the summed width from the target's left edge
to c's left edge. With those, each cell's displacement is a piecewise
linear function of the target x with at most two kinks.
"""

import logging
import math
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field
from heapq import heappop, heappush
from itertools import accumulate
from typing import Dict, List, Optional, Sequence, Tuple

from src.features.core.code import Cell, Rail, rail_of, site_ratio
from src.features.core.errors import NoFeasiblePoint
from src.features.region.code import LocalRegion
from .pipeline import Breakpoint, fused_forward_backward, sort_breakpoints

logger = logging.getLogger(__name__)

# fewer candidates per worker than this are searched in-process
MIN_SHARE = 8


@dataclass(frozen=True)
class InsertionInterval:
    """Gap ``gap`` of a row: between the cell before it and the cell after it."""
    row: int
    lo: float
    hi: float
    gap: int


@dataclass(frozen=True)
class InsertionPoint:
    bottom_row: int
    intervals: Tuple[InsertionInterval, ...]
    x_lo: float
    x_hi: float
    left_chain: Dict[int, int] = field(hash=False)
    right_chain: Dict[int, int] = field(hash=False)
    index: int = 0

    @property
    def gap_map(self) -> Dict[int, int]:
        return {iv.row: iv.gap for iv in self.intervals}


@dataclass(frozen=True)
class _Candidate:
    """Gap combination before chains are resolved; bounds are per-row compression limits."""
    index: int
    bottom_row: int
    gaps: Tuple[int, ...]
    lo_bound: int
    hi_bound: int


class _Tables:
    """Per-region lookups shared by every candidate of one search.

    ``slots[c][r]`` is the position of cell c in row r, ``prefix[r]`` the
    running width sum of row r and ``bounds[c]`` the segment bounds of c.
    """

    def __init__(self, region: LocalRegion):
        cells = region.local_cells
        self.slots: Dict[int, Dict[int, int]] = {cid: {} for cid in cells}
        self.row_cells: Dict[int, Tuple[int, ...]] = {}
        self.prefix: Dict[int, List[int]] = {}
        for seg in region.segments:
            for i, cid in enumerate(seg.cells):
                self.slots[cid][seg.row] = i
            self.row_cells[seg.row] = seg.cells
            self.prefix[seg.row] = [0] + list(accumulate(cells[cid].w for cid in seg.cells))
        self.bounds: Dict[int, Tuple[int, int]] = {cid: region.cell_bounds(cid) for cid in cells}


def _candidates(region: LocalRegion, target: Cell, tables: _Tables) -> List[_Candidate]:
    """Rows x bottom gaps x compatible gaps above, in that loop order."""
    out: List[_Candidate] = []
    h, w = target.h, target.w
    window = region.window
    for bottom in range(window.row_lo, window.row_hi - h + 1):
        if target.rail != Rail.ANY and rail_of(region.grid, bottom) != target.rail:
            continue
        rows = list(range(bottom, bottom + h))
        segs = [region.segment(r) for r in rows]
        if any(s is None or s.length - tables.prefix[s.row][-1] < w for s in segs):
            continue

        def descend(level: int, chosen: List[int], lo_b: float, hi_b: float) -> None:
            if level == h:
                out.append(_Candidate(len(out), bottom, tuple(chosen), int(lo_b), int(hi_b)))
                return
            seg = segs[level]
            pre = tables.prefix[seg.row]
            g_min, g_max = 0, len(seg.cells)
            if level > 0:
                below = segs[level - 1].row
                for i, cid in enumerate(seg.cells):
                    j = tables.slots[cid].get(below)
                    if j is None:
                        continue
                    if j < chosen[-1]:
                        g_min = max(g_min, i + 1)
                    else:
                        g_max = min(g_max, i)
            for g in range(g_min, g_max + 1):
                lo = max(lo_b, seg.lo + pre[g])
                hi = min(hi_b, seg.hi - w - (pre[-1] - pre[g]))
                if lo <= hi:
                    descend(level + 1, chosen + [g], lo, hi)

        descend(0, [], -math.inf, math.inf)
    return out


def _past_gap(own: Dict[int, int], gaps: Sequence[Tuple[int, int]]) -> bool:
    for r, g in gaps:
        i = own.get(r)
        if i is not None and i >= g:
            return True
    return False


def _before_gap(own: Dict[int, int], gaps: Sequence[Tuple[int, int]]) -> bool:
    for r, g in gaps:
        i = own.get(r)
        if i is not None and i < g:
            return True
    return False


def _resolve(region: LocalRegion, target: Cell, cand: _Candidate, tables: _Tables) -> Optional[InsertionPoint]:
    """Push chains and the exact feasible range of a candidate, or None."""
    cells = region.local_cells
    slots = tables.slots
    row_cells = tables.row_cells
    gaps = tuple(zip(range(cand.bottom_row, cand.bottom_row + target.h), cand.gaps))
    lo_bound, hi_bound = cand.lo_bound, cand.hi_bound

    # left chain, visited by descending x so every D is final when popped
    floor_x = -math.inf
    ceil_x = math.inf
    depth: Dict[int, int] = {}
    heap: List[Tuple[float, int]] = []
    for r, g in gaps:
        if g > 0:
            a = row_cells[r][g - 1]
            if a not in depth:
                heappush(heap, (-cells[a].x, a))
                depth[a] = cells[a].w
    left: Dict[int, int] = {}
    while heap:
        cid = heappop(heap)[1]
        c = cells[cid]
        d = depth[cid]
        if c.x + d <= lo_bound:
            continue
        own = slots[cid]
        if _past_gap(own, gaps):
            # it sits right of the target in another row: it must not be pushed
            floor_x = max(floor_x, c.x + d)
            continue
        left[cid] = d
        for r, i in own.items():
            if i == 0:
                continue
            e = row_cells[r][i - 1]
            nd = d + cells[e].w
            known = depth.get(e)
            if known is None:
                heappush(heap, (-cells[e].x, e))
                depth[e] = nd
            elif nd > known:
                depth[e] = nd

    # right chain, by ascending x
    reach: Dict[int, int] = {}
    heap = []
    w = target.w
    for r, g in gaps:
        ids = row_cells[r]
        if g < len(ids):
            b = ids[g]
            if b not in reach:
                heappush(heap, (cells[b].x, b))
                reach[b] = w
    right: Dict[int, int] = {}
    while heap:
        cid = heappop(heap)[1]
        c = cells[cid]
        e_c = reach[cid]
        if c.x - e_c >= hi_bound:
            continue
        if cid in left:
            return None
        own = slots[cid]
        if _before_gap(own, gaps):
            ceil_x = min(ceil_x, c.x - e_c)
            continue
        right[cid] = e_c
        ne = e_c + c.w
        for r, i in own.items():
            ids = row_cells[r]
            if i + 1 >= len(ids):
                continue
            e = ids[i + 1]
            known = reach.get(e)
            if known is None:
                heappush(heap, (cells[e].x, e))
                reach[e] = ne
            elif ne > known:
                reach[e] = ne

    segs = [region.segment(r) for r, _ in gaps]
    # truncated chain cells are only unmoved inside the compression bounds
    x_lo = max(max(s.lo for s in segs), floor_x, lo_bound)
    x_hi = min(min(s.hi for s in segs) - w, ceil_x, hi_bound)
    bounds = tables.bounds
    for cid, d in left.items():
        v = bounds[cid][0] + d
        if v > x_lo:
            x_lo = v
    for cid, e_c in right.items():
        v = bounds[cid][1] - cells[cid].w - e_c
        if v < x_hi:
            x_hi = v
    if x_lo > x_hi:
        return None

    intervals = []
    for seg, g in zip(segs, cand.gaps):
        ids = seg.cells
        lo = cells[ids[g - 1]].x + cells[ids[g - 1]].w if g > 0 else seg.lo
        hi = cells[ids[g]].x if g < len(ids) else seg.hi
        intervals.append(InsertionInterval(seg.row, float(lo), float(hi), g))
    return InsertionPoint(
        bottom_row=cand.bottom_row,
        intervals=tuple(intervals),
        x_lo=float(x_lo),
        x_hi=float(x_hi),
        left_chain=left,
        right_chain=right,
        index=cand.index,
    )


def enumerate_insertion_points(region: LocalRegion, target: Cell) -> List[InsertionPoint]:
    """Every feasible insertion point of ``target`` in ``region``, in enumeration order."""
    tables = _Tables(region)
    points = []
    for cand in _candidates(region, target, tables):
        ip = _resolve(region, target, cand, tables)
        if ip is not None:
            points.append(ip)
    return points


# (current x, gx, chain offset) of one chained cell
Term = Tuple[float, float, int]


@dataclass
class CurveSet:
    """Breakpoints of the summed curve plus the per-cell terms behind them.

    ``left`` cells sit at ``min(cur, x - d)`` and ``right`` cells at
    ``max(cur, x + e)`` when the target is at x.
    """
    breakpoints: List[Breakpoint]
    target_gx: float
    left: List[Term]
    right: List[Term]
    constant: float
    x_lo: float
    x_hi: float

    def evaluate(self, xt: float) -> float:
        total = self.constant + abs(xt - self.target_gx)
        for cur, gx, d in self.left:
            total += abs(min(cur, xt - d) - gx)
        for cur, gx, e_c in self.right:
            total += abs(max(cur, xt + e_c) - gx)
        return total


def build_displacement_curves(region: LocalRegion, target: Cell, ip: InsertionPoint) -> CurveSet:
    """Target V plus one or two kinks per chained cell, clamped into [x_lo, x_hi]."""
    lo, hi = ip.x_lo, ip.x_hi
    bps = [Breakpoint(min(max(target.gx, lo), hi), -1, 1)]
    append = bps.append
    cells = region.local_cells
    constant = region.baseline
    left: List[Term] = []
    chain = ip.left_chain
    for cid in sorted(chain):
        c = cells[cid]
        d = chain[cid]
        cur, gx = c.x, c.gx
        threshold = min(max(cur + d, lo), hi)
        if gx < cur:
            append(Breakpoint(min(max(gx + d, lo), hi), -1, 1))
            append(Breakpoint(threshold, 0, -1))
        else:
            append(Breakpoint(threshold, -1, 0))
        left.append((cur, gx, d))
        constant -= abs(cur - gx)
    right: List[Term] = []
    chain = ip.right_chain
    for cid in sorted(chain):
        c = cells[cid]
        e_c = chain[cid]
        cur, gx = c.x, c.gx
        threshold = min(max(cur - e_c, lo), hi)
        if gx > cur:
            append(Breakpoint(threshold, 1, 0))
            append(Breakpoint(min(max(gx - e_c, lo), hi), -1, 1))
        else:
            append(Breakpoint(threshold, 0, 1))
        right.append((cur, gx, e_c))
        constant -= abs(cur - gx)
    return CurveSet(bps, target.gx, left, right, constant, lo, hi)


@dataclass(frozen=True)
class FopResult:
    """Best insertion: ``v_star`` in row heights, ``curve_value`` in sites."""
    point: InsertionPoint
    x_star: float
    v_star: float
    curve_value: float
    evaluated: int = 0

    @property
    def key(self) -> Tuple[float, float, int, int]:
        return (self.v_star, self.x_star, self.point.bottom_row, self.point.index)


def evaluate_point(region: LocalRegion, target: Cell, ip: InsertionPoint, ratio: float) -> FopResult:
    curves = build_displacement_curves(region, target, ip)
    x_star, value = fused_forward_backward(
        sort_breakpoints(curves.breakpoints), curves.evaluate, ip.x_lo, ip.x_hi
    )
    v_star = ratio * value + abs(ip.bottom_row - target.gy) + region.vertical
    return FopResult(ip, x_star, v_star, value)


def _prune_limit(best: FopResult) -> float:
    return best.v_star + 1e-9 * max(1.0, abs(best.v_star))


def _evaluate_share(
    region: LocalRegion,
    target: Cell,
    cands: Sequence[_Candidate],
    bounds: Optional[Sequence[float]],
    ratio: float,
    tables: Optional[_Tables] = None,
) -> Tuple[Optional[FopResult], int]:
    """Best result over ``cands``; with ``bounds`` (ascending, aligned with
    ``cands``) it stops at the first candidate that cannot beat its best."""
    if tables is None:
        tables = _Tables(region)
    best: Optional[FopResult] = None
    limit = math.inf
    evaluated = 0
    for i, cand in enumerate(cands):
        if bounds is not None and bounds[i] > limit:
            break
        ip = _resolve(region, target, cand, tables)
        if ip is None:
            continue
        evaluated += 1
        result = evaluate_point(region, target, ip, ratio)
        if best is None or result.key < best.key:
            best = result
            limit = _prune_limit(best)
    return best, evaluated


def _lower_bounds(region: LocalRegion, target: Cell, cands: Sequence[_Candidate],
                  ratio: float, tables: _Tables) -> List[float]:
    """Bound no evaluation can beat: the target's own distance to its
    compression range plus every cell's distance to the range it can reach."""
    floor = 0.0
    for cid, c in region.local_cells.items():
        lo, hi = tables.bounds[cid]
        floor += max(lo - c.gx, 0.0, c.gx - (hi - c.w))
    base = region.vertical
    return [
        ratio * (max(cand.lo_bound - target.gx, 0.0, target.gx - cand.hi_bound) + floor)
        + abs(cand.bottom_row - target.gy) + base
        for cand in cands
    ]


def make_executor(kind: str, workers: int) -> Executor:
    if kind == "thread":
        return ThreadPoolExecutor(max_workers=workers)
    return ProcessPoolExecutor(max_workers=workers)


def find_optimal_position(
    region: LocalRegion,
    target: Cell,
    parallelism: int = 1,
    *,
    prune: bool = True,
    executor: str = "process",
    pool: Optional[Executor] = None,
    ratio: Optional[float] = None,
) -> FopResult:
    """Best (point, x) over every insertion point of ``region``.

    Candidates are dealt round-robin (in bound order when pruning) to
    ``parallelism`` workers, one task and one copy of the region each.
    Smaller value wins; ties go to smaller x, then lower bottom row, then
    enumeration index, so the answer does not depend on ``parallelism``.
    Raises NoFeasiblePoint when nothing fits.
    """
    if ratio is None:
        ratio = site_ratio(region.grid)
    tables = _Tables(region)
    cands = _candidates(region, target, tables)
    if not cands:
        raise NoFeasiblePoint(f"no candidate gap for cell {target.name}")

    bounds: Optional[List[float]] = None
    if prune:
        raw = _lower_bounds(region, target, cands, ratio, tables)
        order = sorted(range(len(cands)), key=lambda i: (raw[i], i))
        cands = [cands[i] for i in order]
        bounds = [raw[i] for i in order]

    workers = max(1, parallelism)
    if workers == 1 or len(cands) < workers * MIN_SHARE:
        best, evaluated = _evaluate_share(region, target, cands, bounds, ratio, tables)
    else:
        owned = None
        if pool is None:
            pool = owned = make_executor(executor, workers)
        shared = tables if isinstance(pool, ThreadPoolExecutor) else None
        try:
            futures = [
                pool.submit(_evaluate_share, region, target, cands[i::workers],
                            bounds[i::workers] if bounds is not None else None, ratio, shared)
                for i in range(workers)
            ]
            results = [f.result() for f in futures]
        finally:
            if owned is not None:
                owned.shutdown()
        best, evaluated = None, 0
        for result, count in results:
            evaluated += count
            if result is not None and (best is None or result.key < best.key):
                best = result

    if best is None:
        raise NoFeasiblePoint(f"no feasible insertion point for cell {target.name}")
    return FopResult(best.point, best.x_star, best.v_star, best.curve_value, evaluated)
