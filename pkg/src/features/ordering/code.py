"""
Target Ordering
---------------
title: Target Ordering
description: Pre-move to the nearest legal rows and the sliding-window density order of targets
authors: Placement Team
date_created: 2026-08-07
dependencies:
  - core.code
  - region.code
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Tuple

from src.features.core.code import Cell, Placement, Rail, SiteGrid, rail_of
from src.features.core.errors import Exhausted, NoLegalRow
from src.features.region.code import Window

logger = logging.getLogger(__name__)

DensityOf = Callable[[int], float]


def nearest_legal_row(grid: SiteGrid, gy: float, h: int, rail: Rail) -> int:
    """Row closest to ``gy`` that fits ``h`` rows and carries ``rail``; ties go down."""
    lo, hi = 0, grid.num_rows - h
    if hi < lo:
        raise NoLegalRow(f"a cell of height {h} does not fit {grid.num_rows} rows")
    g = min(max(gy, lo), hi)
    base = int(math.floor(g))
    candidates = {base - 1, base, base + 1, base + 2, lo, lo + 1, hi, hi - 1}
    best: Optional[Tuple[float, int]] = None
    for r in candidates:
        if r < lo or r > hi:
            continue
        if rail != Rail.ANY and rail_of(grid, r) != rail:
            continue
        key = (abs(r - gy), r)
        if best is None or key < best:
            best = key
    if best is None:
        raise NoLegalRow(f"no row carries rail {rail.value} for height {h}")
    return best[1]


def pre_move(p: Placement) -> Placement:
    """Copy of ``p`` with every unlegalized movable cell on its nearest legal row.

    x stays at the global position; overlaps are allowed.
    """
    out = p.copy()
    for c in out.cells:
        if c.fixed or c.legalized:
            continue
        c.cy = nearest_legal_row(out.grid, c.gy, c.h, c.rail)
    return out


@dataclass
class OrderState:
    """Targets in consumption order with a sliding window of width ``ws``.

    ``sequence[cur_idx]`` is the next target. Its successor is fixed as the
    following one; the rest of the window is reordered on every step.
    """
    sequence: List[int]
    ws: int = 8
    cur_idx: int = 0
    next_fixed: Optional[int] = None

    def __post_init__(self):
        if self.ws < 2:
            raise ValueError("ws must be at least 2")

    def remaining(self) -> int:
        return len(self.sequence) - self.cur_idx

    def consume(self, density_of: DensityOf) -> Iterator[int]:
        while self.remaining():
            yield next_target(self, density_of)


def order_key(c: Cell) -> Tuple[int, int, int]:
    return (-c.area, -c.h, c.id)


def initial_order(p: Placement, ws: int = 8) -> OrderState:
    """Unlegalized movable cells, larger area first, then taller, then lower id."""
    targets = sorted((c for c in p.cells if not c.fixed and not c.legalized), key=order_key)
    return OrderState([c.id for c in targets], ws=ws)


def next_target(state: OrderState, density_of: DensityOf) -> int:
    """Pop the current target and reorder the window behind its successor."""
    if state.cur_idx >= len(state.sequence):
        raise Exhausted("no targets left")
    seq = state.sequence
    cur = state.cur_idx
    end = min(cur + state.ws, len(seq))
    tail = seq[cur + 2:end]
    if len(tail) > 1:
        densities = {cid: density_of(cid) for cid in tail}
        seq[cur + 2:end] = sorted(tail, key=lambda cid: -densities[cid])
    state.next_fixed = seq[cur + 1] if cur + 1 < len(seq) else None
    state.cur_idx += 1
    return seq[cur]


class DensityCache:
    """Lazy per-target density, dropped when a committed window overlaps it."""

    def __init__(self, compute: Callable[[int], Tuple[float, Window]]):
        self._compute = compute
        self._entries: Dict[int, Tuple[float, Window]] = {}
        self.hits = 0
        self.misses = 0

    def __call__(self, cell_id: int) -> float:
        entry = self._entries.get(cell_id)
        if entry is None:
            self.misses += 1
            entry = self._compute(cell_id)
            self._entries[cell_id] = entry
        else:
            self.hits += 1
        return entry[0]

    def discard(self, cell_id: int) -> None:
        self._entries.pop(cell_id, None)

    def invalidate(self, window: Window) -> int:
        stale = [cid for cid, (_, w) in self._entries.items() if w.intersects(window)]
        for cid in stale:
            del self._entries[cid]
        return len(stale)
