"""
Run Reports
-----------
title: Run Reports
description: JSON run reports through marshmallow schemas, plus placement statistics
authors: Placement Team
date_created: 2026-08-19
dependencies:
  - core.code
  - marshmallow
"""

import json
from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, Iterable, List

from marshmallow import Schema, fields

from src.features.core.code import Placement, Violation
from .synthetic import measured_density

if TYPE_CHECKING:
    from src.features.legalizer.code import RunReport


class ViolationSchema(Schema):
    kind = fields.Str()
    cells = fields.List(fields.Int())
    detail = fields.Str()


class RunReportSchema(Schema):
    """Key set of the report document."""
    sam = fields.Float()
    max_disp = fields.Float(data_key="maxDisp")
    per_height_sam = fields.Dict(keys=fields.Str(), values=fields.Float(), data_key="perHeightSam")
    cells_legalized = fields.Int(data_key="cellsLegalized")
    fallbacks_used = fields.Int(data_key="fallbacksUsed")
    expansions = fields.Int()
    insertion_points_evaluated = fields.Int(data_key="insertionPointsEvaluated")
    stage_times_ms = fields.Dict(keys=fields.Str(), values=fields.Float(), data_key="stageTimesMs")
    runtime_ms = fields.Float(data_key="runtimeMs")
    violations = fields.List(fields.Nested(ViolationSchema))


@dataclass
class _ReportView:
    """RunReport plus the violations list, shaped for the schema."""
    sam: float
    max_disp: float
    per_height_sam: Dict[int, float]
    cells_legalized: int
    fallbacks_used: int
    expansions: int
    insertion_points_evaluated: int
    stage_times_ms: Dict[str, float]
    runtime_ms: float
    violations: List[Violation]


def report_to_dict(report: "RunReport", violations: Iterable[Violation] = ()) -> dict:
    view = _ReportView(
        sam=report.sam,
        max_disp=report.max_disp,
        per_height_sam=report.per_height_sam,
        cells_legalized=report.cells_legalized,
        fallbacks_used=report.fallbacks_used,
        expansions=report.expansions,
        insertion_points_evaluated=report.insertion_points_evaluated,
        stage_times_ms=report.stage_times_ms,
        runtime_ms=report.runtime_ms,
        violations=list(violations),
    )
    return RunReportSchema().dump(view)


def format_report(report: "RunReport", violations: Iterable[Violation] = ()) -> str:
    """Report as a JSON document with sorted keys."""
    return json.dumps(report_to_dict(report, violations), indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class PlacementStats:
    num_rows: int
    num_sites: int
    cells: int
    movable: int
    fixed: int
    legalized: int
    per_height: Dict[int, int]
    density: float
    blocked_sites: int

    @property
    def fully_legalized(self) -> bool:
        return self.movable > 0 and self.legalized == self.movable

    def lines(self) -> List[str]:
        out = [
            f"grid: {self.num_rows} rows x {self.num_sites} sites",
            f"cells: {self.cells} ({self.movable} movable, {self.fixed} fixed)",
            f"legalized: {self.legalized}/{self.movable}",
            f"density: {self.density:.4f}",
            f"blocked sites: {self.blocked_sites}",
        ]
        for h, count in sorted(self.per_height.items()):
            out.append(f"height {h}: {count}")
        return out


def placement_stats(p: Placement) -> PlacementStats:
    movable = p.movable()
    per_height: Dict[int, int] = {}
    for c in movable:
        per_height[c.h] = per_height.get(c.h, 0) + 1
    return PlacementStats(
        num_rows=p.grid.num_rows,
        num_sites=p.grid.num_sites,
        cells=len(p.cells),
        movable=len(movable),
        fixed=len(p.cells) - len(movable),
        legalized=sum(1 for c in movable if c.legalized),
        per_height=per_height,
        density=measured_density(p),
        blocked_sites=sum(b.end - b.start for b in p.grid.blockages),
    )
