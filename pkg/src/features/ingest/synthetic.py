"""
Synthetic Benchmarks
--------------------
title: Synthetic Benchmarks
description: Seeded generator of mixed-cell-height placements at a requested density
authors: Placement Team
date_created: 2026-08-17
dependencies:
  - core.code
  - numpy

Cells are first packed legally (skyline packing), spread to fill the grid and
then perturbed with Gaussian noise, so every instance is legalizable while
the global positions still overlap the way global placement output does.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.features.core.code import Blockage, Cell, Placement, Rail, SiteGrid, rail_of
from src.features.core.errors import ConfigError, InfeasibleSpec

logger = logging.getLogger(__name__)

DEFAULT_HEIGHT_MIX = {1: 0.80, 2: 0.12, 3: 0.04, 4: 0.04}
MAX_WIDTH = 8
# largest accepted gap between requested and generated density on a given grid
DENSITY_TOLERANCE = 0.02


@dataclass
class SyntheticSpec:
    """What to generate.

    ``num_rows``/``num_sites`` are derived from ``density`` when omitted.
    With both given, ``num_cells`` may be left out: cells are then drawn
    until their area reaches ``density`` of the free sites.
    ``jitter`` is the standard deviation of the x noise in sites and
    ``row_jitter`` that of the y noise in rows.
    """
    num_cells: Optional[int] = None
    density: float = 0.6
    height_mix: Dict[int, float] = field(default_factory=lambda: dict(DEFAULT_HEIGHT_MIX))
    num_rows: Optional[int] = None
    num_sites: Optional[int] = None
    rng_seed: int = 0
    blockage_fraction: float = 0.0
    jitter: float = 3.0
    row_jitter: float = 0.6
    row_height: float = 2.0
    site_width: float = 0.2
    first_rail: Rail = Rail.P

    def validate(self) -> None:
        problems = []
        if self.num_cells is None:
            if self.num_rows is None:
                problems.append("num_cells is required unless num_rows and num_sites are given")
        elif self.num_cells < 0:
            problems.append("num_cells must be >= 0")
        if not 0.0 < self.density < 1.0:
            problems.append("density must lie in (0, 1)")
        if not self.height_mix or any(h < 1 for h in self.height_mix):
            problems.append("height_mix needs heights >= 1")
        elif abs(sum(self.height_mix.values()) - 1.0) > 1e-9 or min(self.height_mix.values()) < 0:
            problems.append("height_mix probabilities must be >= 0 and sum to 1")
        if not 0.0 <= self.blockage_fraction < 1.0:
            problems.append("blockage_fraction must lie in [0, 1)")
        if (self.num_rows is None) != (self.num_sites is None):
            problems.append("give both num_rows and num_sites or neither")
        if problems:
            raise ConfigError("; ".join(problems))


def _skyline_pack(heights: np.ndarray, widths: np.ndarray, num_rows: int) -> Tuple[np.ndarray, np.ndarray, int]:
    """Pack cells left to right, each at the lowest reachable frontier."""
    frontier = np.zeros(num_rows, dtype=np.int64)
    xs = np.zeros(len(heights), dtype=np.int64)
    ys = np.zeros(len(heights), dtype=np.int64)
    for i, (h, w) in enumerate(zip(heights.tolist(), widths.tolist())):
        if h == 1:
            r = int(np.argmin(frontier))
            x = int(frontier[r])
        else:
            band = sliding_window_view(frontier, h).max(axis=1)
            r = int(np.argmin(band))
            x = int(band[r])
        xs[i] = x
        ys[i] = r
        frontier[r:r + h] = x + w
    return xs, ys, int(frontier.max(initial=0))


def _place_blockages(rng: np.random.Generator, grid_rows: int, grid_sites: int,
                     occupied: Dict[int, List[Tuple[int, int]]], target: int) -> List[Blockage]:
    """Block ``target`` sites taken from whitespace only."""
    blockages: List[Blockage] = []
    remaining = target
    for row in rng.permutation(grid_rows).tolist():
        if remaining <= 0:
            break
        cursor = 0
        gaps = []
        for start, end in sorted(occupied.get(row, [])):
            if start > cursor:
                gaps.append((cursor, start))
            cursor = max(cursor, end)
        if cursor < grid_sites:
            gaps.append((cursor, grid_sites))
        for lo, hi in gaps:
            if remaining <= 0:
                break
            length = min(hi - lo, remaining, int(rng.integers(1, 12)))
            offset = int(rng.integers(0, hi - lo - length + 1))
            blockages.append(Blockage(row, lo + offset, lo + offset + length))
            remaining -= length
    return blockages


def _sample_to_area(rng: np.random.Generator, pool: np.ndarray, probs: np.ndarray,
                    target_area: float) -> Tuple[np.ndarray, np.ndarray]:
    """Heights and widths of the shortest draw whose area lands nearest ``target_area``."""
    if target_area <= 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    mean_area = float((pool * probs).sum()) * (MAX_WIDTH + 1) / 2.0
    batch = int(1.2 * target_area / mean_area) + 32
    heights = np.zeros(0, dtype=np.int64)
    widths = np.zeros(0, dtype=np.int64)
    while int((heights * widths).sum()) < target_area:
        heights = np.concatenate([heights, rng.choice(pool, size=batch, p=probs)])
        widths = np.concatenate([widths, rng.integers(1, MAX_WIDTH + 1, size=batch)])
    cum = np.cumsum(heights * widths)
    n = int(np.searchsorted(cum, target_area))
    if n > 0 and target_area - cum[n - 1] <= cum[n] - target_area:
        return heights[:n], widths[:n]
    return heights[:n + 1], widths[:n + 1]


def _check_density(spec: SyntheticSpec, total_area: int, n: int, num_rows: int, num_sites: int) -> None:
    """On a given grid the drawn cells must fill it to the requested density."""
    sites = num_rows * num_sites
    blocked = int(round(spec.blockage_fraction * sites))
    if total_area + blocked > sites:
        raise InfeasibleSpec(f"cell area {total_area} does not fit a {num_rows}x{num_sites} grid")
    actual = total_area / (sites - blocked)
    if abs(actual - spec.density) > DENSITY_TOLERANCE:
        raise ConfigError(
            f"{n} cells fill {actual:.4f} of a {num_rows}x{num_sites} grid, not {spec.density}; "
            f"leave num_cells out to derive it from the density"
        )


def generate_synthetic(spec: SyntheticSpec) -> Placement:
    """Build a deterministic synthetic placement from ``spec``."""
    spec.validate()
    rng = np.random.default_rng(spec.rng_seed)
    heights_pool = np.array(sorted(spec.height_mix), dtype=np.int64)
    probs = np.array([spec.height_mix[h] for h in sorted(spec.height_mix)], dtype=float)
    probs = probs / probs.sum()

    free_fraction = 1.0 - spec.blockage_fraction
    if spec.num_cells is None:
        free = spec.num_rows * spec.num_sites * free_fraction
        heights, widths = _sample_to_area(rng, heights_pool, probs, spec.density * free)
    else:
        n = spec.num_cells
        heights = rng.choice(heights_pool, size=n, p=probs) if n else np.zeros(0, dtype=np.int64)
        widths = rng.integers(1, MAX_WIDTH + 1, size=n)
    n = len(heights)
    total_area = int((heights * widths).sum())
    max_h = int(heights.max(initial=int(heights_pool.max())))

    if spec.num_rows is None:
        aspect = spec.row_height / spec.site_width
        needed = total_area / (spec.density * free_fraction)
        num_rows = max(max_h, int(round(math.sqrt(needed / aspect))), 1)
        num_sites = max(MAX_WIDTH, int(math.ceil(needed / num_rows)))
    else:
        num_rows, num_sites = spec.num_rows, spec.num_sites
        if num_rows < max_h:
            raise InfeasibleSpec(f"{num_rows} rows cannot hold cells of height {max_h}")
        _check_density(spec, total_area, n, num_rows, num_sites)

    order = rng.permutation(n)
    xs = np.zeros(n, dtype=np.int64)
    ys = np.zeros(n, dtype=np.int64)
    packed_x, packed_y, extent = _skyline_pack(heights[order], widths[order], num_rows)
    xs[order] = packed_x
    ys[order] = packed_y

    if spec.num_rows is None:
        num_sites = max(num_sites, extent)
    blocked_target = int(round(spec.blockage_fraction * num_rows * num_sites))
    if total_area + blocked_target > num_rows * num_sites or extent > num_sites:
        raise InfeasibleSpec(
            f"cell area {total_area} does not fit a {num_rows}x{num_sites} grid"
        )

    # spread the packing over the full width; floor keeps every gap non-negative
    if extent > 0:
        scale = num_sites / extent
        xs = np.floor(xs * scale).astype(np.int64)

    occupied: Dict[int, List[Tuple[int, int]]] = {}
    for i in range(n):
        for r in range(int(ys[i]), int(ys[i] + heights[i])):
            occupied.setdefault(r, []).append((int(xs[i]), int(xs[i] + widths[i])))
    blockages = _place_blockages(rng, num_rows, num_sites, occupied, blocked_target)

    grid = SiteGrid(
        num_rows=num_rows,
        num_sites=num_sites,
        row_height=spec.row_height,
        site_width=spec.site_width,
        first_rail=spec.first_rail,
        blockages=tuple(blockages),
    )

    noise_x = rng.normal(0.0, spec.jitter, size=n)
    noise_y = rng.normal(0.0, spec.row_jitter, size=n)
    cells: List[Cell] = []
    for i in range(n):
        h = int(heights[i])
        w = int(widths[i])
        row = int(ys[i])
        rail = rail_of(grid, row) if h % 2 == 0 else Rail.ANY
        gx = float(np.clip(xs[i] + noise_x[i], 0.0, num_sites - w))
        gy = float(np.clip(row + noise_y[i], 0.0, num_rows - h))
        cells.append(Cell(
            id=i, name=f"c{i}", gx=round(gx, 3), gy=round(gy, 3), w=w, h=h, rail=rail,
        ))

    placement = Placement(grid, cells)
    logger.info(
        "generated %d cells on %dx%d grid (density %.3f, seed %d)",
        n, num_rows, num_sites, measured_density(placement), spec.rng_seed,
    )
    return placement


def measured_density(p: Placement) -> float:
    """Total movable cell area over free (unblocked) area."""
    g = p.grid
    blocked = sum(b.end - b.start for b in g.blockages)
    fixed = sum(c.area for c in p.cells if c.fixed)
    free = g.num_rows * g.num_sites - blocked - fixed
    if free <= 0:
        return 0.0
    return sum(c.area for c in p.movable()) / free
