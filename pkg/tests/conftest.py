import os
import random

import pytest

from src.features.core.code import Cell, Placement, Rail, SiteGrid
from src.features.ingest.synthetic import SyntheticSpec, generate_synthetic
from src.features.region.code import Window, extract_local_region


def pytest_configure(config):
    """Configure test environment."""
    os.environ['TESTING'] = 'true'
    os.environ.setdefault('LEGALIZER_LOG_FORMAT', 'text')


def random_legal_placement(rng, num_rows, num_sites, attempts, max_h=3, max_w=5, first_rail=Rail.P):
    """Non-overlapping legalized cells dropped at random sites; gx/gy jitter around them."""
    grid = SiteGrid(num_rows=num_rows, num_sites=num_sites, first_rail=first_rail)
    taken = set()
    cells = []
    for _ in range(attempts):
        h = rng.randint(1, max_h)
        w = rng.randint(1, max_w)
        if h > num_rows or w > num_sites:
            continue
        x = rng.randint(0, num_sites - w)
        y = rng.randint(0, num_rows - h)
        footprint = {(r, s) for r in range(y, y + h) for s in range(x, x + w)}
        if footprint & taken:
            continue
        taken |= footprint
        cid = len(cells)
        cells.append(Cell(
            id=cid, name=f"c{cid}", gx=x + rng.uniform(-3, 3), gy=y + rng.uniform(-0.5, 0.5),
            w=w, h=h, cx=x, cy=y, legalized=True,
        ))
    return Placement(grid, cells)


@pytest.fixture
def rng():
    """Seeded generator so every randomised test is reproducible."""
    return random.Random(20240917)


@pytest.fixture
def make_placement():
    return random_legal_placement


@pytest.fixture
def make_region():
    """Factory for a random dense region covering a whole small grid."""
    def make(rng, num_rows=None, num_sites=None, attempts=None):
        num_rows = num_rows or rng.randint(1, 4)
        num_sites = num_sites or rng.randint(12, 40)
        attempts = attempts or rng.randint(2, 3 * num_rows * num_sites // 4)
        p = random_legal_placement(rng, num_rows, num_sites, attempts)
        return extract_local_region(p, Window(0, num_rows, 0, num_sites))
    return make


@pytest.fixture
def make_target():
    """Factory for an unlegalized target that fits the given region's rows."""
    def make(rng, region, max_w=4):
        num_rows = region.grid.num_rows
        h = rng.randint(1, min(2, num_rows))
        return Cell(
            id=10_000, name="target", gx=rng.uniform(0, region.grid.num_sites - 1),
            gy=rng.uniform(0, num_rows - h), w=rng.randint(1, max_w), h=h,
        )
    return make


@pytest.fixture
def pair_file(tmp_path):
    """Placement file with two legalized cells and one target to insert between them."""
    path = tmp_path / "pair.pl"
    path.write_text(
        "GRID 1 1 1 20 P\n"
        "CELL A 4 0 3 1 ANY 0 4 0\n"
        "CELL B 8 0 3 1 ANY 0 8 0\n"
        "CELL T 6 0 4 1 ANY 0\n"
    )
    return path


@pytest.fixture
def overlapping_file(tmp_path):
    path = tmp_path / "overlap.pl"
    path.write_text(
        "GRID 2 1 1 20 P\n"
        "CELL A 4 0 3 1 ANY 0 4 0\n"
        "CELL B 5 0 3 1 ANY 0 5 0\n"
    )
    return path


@pytest.fixture
def synthetic_placement():
    return generate_synthetic(SyntheticSpec(num_cells=250, density=0.55, rng_seed=9))


def pytest_unconfigure(config):
    """Clean up test environment."""
    os.environ.pop('TESTING', None)
