"""
Breakpoint Pipeline
-------------------
title: Breakpoint Pipeline
description: Minimum of a summed piecewise-linear curve from its breakpoints
authors: Placement Team
date_created: 2026-08-12
dependencies:
  - core.errors

Two equivalent evaluations are provided. The six-step one (sort, merge,
right-slope prefixes, left-slope suffixes, values, argmin) materialises
each stage. ``fused_forward_backward`` folds them into one forward pass and
one backward pass. Both build every value with the same expressions, so
their results agree bit for bit.

Conventions: the right-slope prefix at i includes i, the left-slope suffix
at j includes j, and the slope of the gap after i is prefix[i] +
suffix[i + 1]. Values are anchored by evaluating the curves directly at the
first merged breakpoint. Ties go to the leftmost x.
"""

from dataclasses import dataclass
from operator import itemgetter
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

from src.features.core.errors import EmptyCurve

EPS = 1e-9


class Breakpoint(NamedTuple):
    """A kink at ``x``: ``slope_l`` applies to every gap left of it, ``slope_r`` right of it."""
    x: float
    slope_l: int
    slope_r: int


@dataclass
class MergedBreakpoint:
    x: float
    slope_l: int
    slope_r: int
    slopes_r_prefix: int = 0
    slopes_l_suffix: int = 0
    value: float = float("nan")


Evaluate = Callable[[float], float]
_by_x = itemgetter(0)


def sort_breakpoints(bps: Sequence[Breakpoint]) -> List[Breakpoint]:
    return sorted(bps, key=_by_x)


def merge_breakpoints(sorted_bps: Sequence[Breakpoint], eps: float = EPS) -> List[MergedBreakpoint]:
    """Collapse runs whose consecutive gaps are within ``eps``; x is the run's first."""
    merged: List[MergedBreakpoint] = []
    prev_x = None
    for b in sorted_bps:
        if merged and b.x - prev_x <= eps:
            m = merged[-1]
            m.slope_l += b.slope_l
            m.slope_r += b.slope_r
        else:
            merged.append(MergedBreakpoint(b.x, b.slope_l, b.slope_r))
        prev_x = b.x
    return merged


def sum_slopes_r(merged: List[MergedBreakpoint]) -> List[MergedBreakpoint]:
    running = 0
    for m in merged:
        running = running + m.slope_r
        m.slopes_r_prefix = running
    return merged


def sum_slopes_l(merged: List[MergedBreakpoint]) -> List[MergedBreakpoint]:
    running = 0
    for m in reversed(merged):
        running = running + m.slope_l
        m.slopes_l_suffix = running
    return merged


def gap_slopes(merged: Sequence[MergedBreakpoint]) -> List[int]:
    """Slope of the curve between consecutive merged breakpoints."""
    return [merged[i].slopes_r_prefix + merged[i + 1].slopes_l_suffix for i in range(len(merged) - 1)]


def calculate_value(
    merged: List[MergedBreakpoint],
    evaluate: Optional[Evaluate] = None,
    x_lo: Optional[float] = None,
    x_hi: Optional[float] = None,
) -> Tuple[float, float]:
    """Values at every merged breakpoint and at both range ends; the minimum wins.

    Without ``evaluate`` values are relative to the first breakpoint.
    """
    n = len(merged)
    if n == 0:
        raise EmptyCurve("no breakpoints to evaluate")
    xs = [m.x for m in merged]
    if x_lo is None:
        x_lo = xs[0]
    if x_hi is None:
        x_hi = xs[-1]

    v_r = [0.0] * n
    for i in range(1, n):
        v_r[i] = v_r[i - 1] + merged[i - 1].slopes_r_prefix * (xs[i] - xs[i - 1])
    v_l = [0.0] * n
    for i in range(n - 2, -1, -1):
        v_l[i] = v_l[i + 1] - merged[i + 1].slopes_l_suffix * (xs[i + 1] - xs[i])
    s = [v_r[i] + v_l[i] for i in range(n)]
    s_lo = s[0] - merged[0].slopes_l_suffix * (xs[0] - x_lo)
    s_hi = s[n - 1] + merged[n - 1].slopes_r_prefix * (x_hi - xs[n - 1])

    anchor = (evaluate(xs[0]) if evaluate is not None else 0.0) - s[0]
    for i in range(n):
        merged[i].value = anchor + s[i]

    best_x, best_s = x_lo, s_lo
    for x, v in zip(xs, s):
        if v < best_s:
            best_x, best_s = x, v
    if s_hi < best_s:
        best_x, best_s = x_hi, s_hi
    return best_x, anchor + best_s


def six_op(
    bps: Sequence[Breakpoint],
    evaluate: Optional[Evaluate] = None,
    x_lo: Optional[float] = None,
    x_hi: Optional[float] = None,
    eps: float = EPS,
) -> Tuple[float, float]:
    """Reference evaluation through the six separate stages."""
    merged = merge_breakpoints(sort_breakpoints(bps), eps)
    sum_slopes_r(merged)
    sum_slopes_l(merged)
    return calculate_value(merged, evaluate, x_lo, x_hi)


def fused_forward_backward(
    sorted_bps: Sequence[Breakpoint],
    evaluate: Optional[Evaluate] = None,
    x_lo: Optional[float] = None,
    x_hi: Optional[float] = None,
    eps: float = EPS,
) -> Tuple[float, float]:
    """Forward pass (merge, right prefixes, right values) then backward pass
    (merge, left suffixes, left values, argmin) over sorted breakpoints.
    """
    # forward: one record per merged group
    fwd_x: List[float] = []
    fwd_prefix: List[int] = []
    fwd_vr: List[float] = []
    prefix = 0
    group_r = 0
    prev_x = None
    for x, _, slope_r in sorted_bps:
        if fwd_x and x - prev_x <= eps:
            group_r += slope_r
        else:
            if fwd_x:
                prefix = prefix + group_r
                fwd_prefix.append(prefix)
            v_r = 0.0 if not fwd_x else fwd_vr[-1] + fwd_prefix[-1] * (x - fwd_x[-1])
            fwd_x.append(x)
            fwd_vr.append(v_r)
            group_r = slope_r
        prev_x = x
    if not fwd_x:
        raise EmptyCurve("no breakpoints to evaluate")
    prefix = prefix + group_r
    fwd_prefix.append(prefix)

    n = len(fwd_x)
    if x_lo is None:
        x_lo = fwd_x[0]
    if x_hi is None:
        x_hi = fwd_x[-1]

    # backward: regroup from the right with the same boundaries
    best_x = x_hi
    best_s = (fwd_vr[n - 1] + 0.0) + fwd_prefix[n - 1] * (x_hi - fwd_x[n - 1])
    j = n
    v_l = 0.0
    suffix_next = 0
    group_l = 0
    s_0 = 0.0
    prev_x = None
    for x, slope_l, _ in reversed(sorted_bps):
        if prev_x is not None and prev_x - x <= eps:
            group_l += slope_l
            prev_x = x
            continue
        if prev_x is not None:
            suffix_next = suffix_next + group_l
        j -= 1
        if j == n - 1:
            v_l = 0.0
        else:
            v_l = v_l - suffix_next * (fwd_x[j + 1] - fwd_x[j])
        s_j = fwd_vr[j] + v_l
        if s_j <= best_s:
            best_x, best_s = fwd_x[j], s_j
        s_0 = s_j
        group_l = slope_l
        prev_x = x
    suffix_0 = suffix_next + group_l
    s_lo = s_0 - suffix_0 * (fwd_x[0] - x_lo)
    if s_lo <= best_s:
        best_x, best_s = x_lo, s_lo

    anchor = (evaluate(fwd_x[0]) if evaluate is not None else 0.0) - s_0
    return best_x, anchor + best_s
