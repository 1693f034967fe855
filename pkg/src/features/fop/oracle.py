"""
Positional Oracle
-----------------
title: Positional Oracle
description: Brute-force check of the curve engine by shifting at every candidate x
authors: Placement Team
date_created: 2026-08-14
dependencies:
  - shift.code
  - fop.code

Slow by construction; used by tests and by the ``--oracle-check`` flag.
"""

from typing import List, Optional, Tuple

import numpy as np

from src.features.core.code import Cell, site_ratio
from src.features.region.code import LocalRegion
from src.features.shift.code import shift_both_phases, trial_insert
from .code import InsertionPoint, build_displacement_curves


def total_displacement(region: LocalRegion, target: Cell, ip: InsertionPoint, xt: float,
                       ratio: Optional[float] = None) -> float:
    """Summed displacement, in row heights, after shifting with the target at ``xt``."""
    if ratio is None:
        ratio = site_ratio(region.grid)
    copy = trial_insert(region, target, xt, ip.bottom_row, gaps=ip.gap_map)
    _, _, positions = shift_both_phases(copy)
    horizontal = abs(xt - target.gx)
    for cid, c in region.local_cells.items():
        horizontal += abs(positions[cid] - c.gx)
    return ratio * horizontal + abs(ip.bottom_row - target.gy) + region.vertical


def candidate_positions(region: LocalRegion, target: Cell, ip: InsertionPoint, step: float) -> List[float]:
    """Grid points of [x_lo, x_hi] plus every breakpoint, sorted and unique."""
    xs = set(np.arange(ip.x_lo, ip.x_hi, step).tolist()) if step > 0 else set()
    xs.update((ip.x_lo, ip.x_hi))
    xs.update(b.x for b in build_displacement_curves(region, target, ip).breakpoints)
    return sorted(x for x in xs if ip.x_lo <= x <= ip.x_hi)


def positional_oracle(region: LocalRegion, target: Cell, ip: InsertionPoint, step: float = 0.25,
                      ratio: Optional[float] = None) -> Tuple[float, float]:
    """Minimum of ``total_displacement`` over the candidate positions; ties to the left."""
    best: Optional[Tuple[float, float]] = None
    for xt in candidate_positions(region, target, ip, step):
        v = total_displacement(region, target, ip, xt, ratio)
        if best is None or v < best[1]:
            best = (xt, v)
    return best
