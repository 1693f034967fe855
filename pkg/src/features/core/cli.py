#!/usr/bin/env python3
"""
Command Line
------------
title: Command Line
description: mgl-legalize commands: legalize, check, stats, svg and bench
authors: Placement Team
date_created: 2026-08-21
dependencies:
  - click
  - python-dotenv
  - python-json-logger
  - numpy

Exit codes: 0 on success, 1 when violations remain, 2 on any error.
"""

import functools
import logging
import os
from dataclasses import replace
from logging.config import dictConfig
from typing import Any, Dict, List, Optional

import click
import numpy as np
from dotenv import load_dotenv

from src.features.core.code import average_displacement, check_legal
from src.features.core.errors import LegalizerError
from src.features.ingest.code import parse_placement, write_placement
from src.features.ingest.report import format_report, placement_stats
from src.features.ingest.synthetic import SyntheticSpec, generate_synthetic
from src.features.legalizer.code import legalize
from src.features.legalizer.config import load_config
from src.features.rendering.code import render_svg

logger = logging.getLogger(__name__)

EXIT_VIOLATIONS = 1
EXIT_ERROR = 2

DEFAULT_BENCH_SIZES = "10000,20000,40000,80000,160000"


def configure_logging(level: Optional[str] = None, fmt: Optional[str] = None) -> None:
    """Console logging on stderr, plain text or JSON."""
    level = (level or os.getenv("LEGALIZER_LOG_LEVEL", "INFO")).upper()
    fmt = (fmt or os.getenv("LEGALIZER_LOG_FORMAT", "text")).lower()
    dictConfig({
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': {
            'text': {
                'format': '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            },
            'json': {
                '()': 'pythonjsonlogger.jsonlogger.JsonFormatter',
                'format': '%(asctime)s %(name)s %(levelname)s %(message)s',
            },
        },
        'handlers': {
            'console': {
                'class': 'logging.StreamHandler',
                'stream': 'ext://sys.stderr',
                'formatter': 'json' if fmt == 'json' else 'text',
            }
        },
        'root': {
            'level': level,
            'handlers': ['console']
        }
    })


def handle_errors(func):
    """Turn library and I/O errors into a one-line diagnostic and exit code 2."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (LegalizerError, ValueError, OSError) as e:
            logger.debug("command failed", exc_info=True)
            click.echo(f"error: {e}", err=True)
            click.get_current_context().exit(EXIT_ERROR)
    return wrapper


def config_options(func):
    """Flags that override LegalizeConfig fields."""
    options = [
        click.option('--window-rows', type=int, default=None, help='Window height in rows'),
        click.option('--window-sites', type=int, default=None, help='Window width in sites'),
        click.option('--ws', type=int, default=None, help='Ordering window size (>= 2)'),
        click.option('--expand-factor', type=int, default=None, help='Window growth factor per expansion'),
        click.option('--max-expand', type=int, default=None, help='Expansions before the greedy fallback'),
        click.option('--parallel-ip', 'parallelism', type=int, default=None,
                     help='Workers evaluating insertion points'),
        click.option('--executor', type=click.Choice(['thread', 'process']), default=None,
                     help='Worker pool kind'),
        click.option('--oracle-check/--no-oracle-check', default=None,
                     help='Cross-check every target against the positional oracle'),
        click.option('--seed', 'rng_seed', type=int, default=None, help='Random seed'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _overrides(kwargs: Dict[str, Any]) -> Dict[str, Any]:
    keys = ('window_rows', 'window_sites', 'ws', 'expand_factor', 'max_expand',
            'parallelism', 'executor', 'oracle_check', 'rng_seed')
    return {k: kwargs[k] for k in keys if kwargs.get(k) is not None}


@click.group()
@click.option('--log-level', default=None,
              type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False),
              help='Log level (default LEGALIZER_LOG_LEVEL or INFO)')
@click.option('--env-file', type=click.Path(dir_okay=False), default=None,
              help='.env file with LEGALIZER_* settings')
@click.pass_context
def cli(ctx, log_level, env_file):
    """Mixed-cell-height standard cell legalizer."""
    if env_file:
        load_dotenv(env_file, override=False)
    configure_logging(log_level)
    ctx.ensure_object(dict)
    ctx.obj['env_file'] = env_file


@cli.command('legalize')
@click.argument('infile', type=click.File('r'))
@click.option('-o', '--output', type=click.File('w'), default='-', help='Legalized placement (default stdout)')
@click.option('--report', 'report_path', type=click.Path(dir_okay=False), default=None,
              help='Write the JSON run report here')
@config_options
@click.pass_context
@handle_errors
def legalize_cmd(ctx, infile, output, report_path, **kwargs):
    """Legalize a placement file."""
    cfg = load_config(env_file=ctx.obj.get('env_file'), overrides=_overrides(kwargs))
    placement = parse_placement(infile.read())
    result, report = legalize(placement, cfg)
    violations = check_legal(result)
    output.write(write_placement(result))
    if report_path:
        with open(report_path, 'w') as f:
            f.write(format_report(report, violations))
    if violations:
        logger.error("%d violations remain after legalization", len(violations))
        ctx.exit(EXIT_VIOLATIONS)


@cli.command('check')
@click.argument('infile', type=click.File('r'))
@click.pass_context
@handle_errors
def check_cmd(ctx, infile):
    """List legality violations; exit 0 iff there are none."""
    placement = parse_placement(infile.read())
    names = {c.id: c.name for c in placement.cells}
    violations = check_legal(placement)
    for v in violations:
        cells = ','.join(names[i] for i in v.cells)
        click.echo(f"{v.kind} {cells} {v.detail}".rstrip())
    if violations:
        ctx.exit(EXIT_VIOLATIONS)
    click.echo("legal")


@cli.command('stats')
@click.argument('infile', type=click.File('r'))
@handle_errors
def stats_cmd(infile):
    """Cell counts, density and, for a finished placement, displacement."""
    placement = parse_placement(infile.read())
    stats = placement_stats(placement)
    for line in stats.lines():
        click.echo(line)
    if stats.fully_legalized:
        disp = average_displacement(placement)
        click.echo(f"sam: {disp.sam:.6f}")
        click.echo(f"max displacement: {disp.max_disp:.6f}")
        for h, value in sorted(disp.per_height.items()):
            click.echo(f"sam height {h}: {value:.6f}")


@cli.command('svg')
@click.argument('infile', type=click.File('r'))
@click.option('-o', '--output', type=click.File('w'), default='-', help='SVG file (default stdout)')
@handle_errors
def svg_cmd(infile, output):
    """Render a placement as SVG."""
    output.write(render_svg(parse_placement(infile.read())))


def _parse_sizes(value: str) -> List[int]:
    try:
        sizes = [int(s) for s in value.split(',') if s.strip()]
    except ValueError:
        raise click.BadParameter(f"not a comma-separated list of integers: {value}")
    if not sizes or any(s <= 0 for s in sizes):
        raise click.BadParameter("sizes must be positive")
    return sizes


def fit_exponent(sizes: List[int], runtimes: List[float]) -> Optional[float]:
    """Slope of log runtime against log size, or None with fewer than two points."""
    if len(sizes) < 2:
        return None
    k, _ = np.polyfit(np.log(sizes), np.log(np.maximum(runtimes, 1e-9)), 1)
    return float(k)


@cli.command('bench')
@click.option('--sizes', default=DEFAULT_BENCH_SIZES, show_default=True, help='Comma-separated cell counts')
@click.option('--density', type=float, default=0.6, show_default=True, help='Target placement density')
@click.option('--speedup', is_flag=True, default=False,
              help='Also run every size on two process workers and print the speedup')
@config_options
@click.pass_context
@handle_errors
def bench_cmd(ctx, sizes, density, speedup, **kwargs):
    """Legalize synthetic instances of growing size and fit runtime ~ n^k."""
    cfg = load_config(env_file=ctx.obj.get('env_file'), overrides=_overrides(kwargs))
    counts = _parse_sizes(sizes)
    header = f"{'size':>8} {'runtimeMs':>12} {'sam':>12} {'fallbacks':>9}"
    if speedup:
        cfg = replace(cfg, parallelism=1)
        header += f" {'parallelMs':>12} {'speedup':>8}"
    click.echo(header)
    runtimes = []
    for n in counts:
        placement = generate_synthetic(SyntheticSpec(num_cells=n, density=density, rng_seed=cfg.rng_seed))
        _, report = legalize(placement, cfg)
        runtimes.append(report.runtime_ms)
        line = f"{n:>8} {report.runtime_ms:>12.1f} {report.sam:>12.6f} {report.fallbacks_used:>9}"
        if speedup:
            _, par = legalize(placement, replace(cfg, parallelism=2, executor="process"))
            line += f" {par.runtime_ms:>12.1f} {report.runtime_ms / max(par.runtime_ms, 1e-9):>8.2f}"
        click.echo(line)
    k = fit_exponent(counts, runtimes)
    if k is not None:
        click.echo(f"k = {k:.3f}")


if __name__ == '__main__':
    cli()
