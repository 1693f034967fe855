"""
Legalizer Configuration
-----------------------
title: Legalizer Configuration
description: LegalizeConfig loaded from LEGALIZER_* variables or a .env file, validated by marshmallow
authors: Placement Team
date_created: 2026-08-18
dependencies:
  - python-dotenv
  - marshmallow
"""

import logging
import os
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Mapping, Optional

from dotenv import load_dotenv
from marshmallow import Schema, ValidationError, post_load, validate
from marshmallow import fields as mfields

from src.features.core.errors import ConfigError
from src.features.region.code import WindowConfig

logger = logging.getLogger(__name__)

ENV_PREFIX = "LEGALIZER_"

# env names that differ from the field name
ENV_ALIASES = {"parallelism": "PARALLEL_IP", "rng_seed": "SEED"}


@dataclass(frozen=True)
class LegalizeConfig:
    window_rows: int = 10
    window_sites: int = 100
    ws: int = 8
    expand_factor: int = 2
    max_expand: int = 4
    parallelism: int = 1
    executor: str = "process"
    rng_seed: int = 0
    oracle_check: bool = False
    prune: bool = True
    parallel_phases: bool = False

    @property
    def window(self) -> WindowConfig:
        return WindowConfig(self.window_rows, self.window_sites, self.expand_factor, self.max_expand)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class LegalizeConfigSchema(Schema):
    window_rows = mfields.Int(validate=validate.Range(min=1))
    window_sites = mfields.Int(validate=validate.Range(min=1))
    ws = mfields.Int(validate=validate.Range(min=2))
    expand_factor = mfields.Int(validate=validate.Range(min=1))
    max_expand = mfields.Int(validate=validate.Range(min=0))
    parallelism = mfields.Int(validate=validate.Range(min=1))
    executor = mfields.Str(validate=validate.OneOf(["thread", "process"]))
    rng_seed = mfields.Int(validate=validate.Range(min=0))
    oracle_check = mfields.Bool()
    prune = mfields.Bool()
    parallel_phases = mfields.Bool()

    @post_load
    def make_config(self, data, **kwargs) -> LegalizeConfig:
        return LegalizeConfig(**data)


def env_name(field_name: str) -> str:
    return ENV_PREFIX + ENV_ALIASES.get(field_name, field_name.upper())


def load_config(
    env_file: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> LegalizeConfig:
    """Defaults, then LEGALIZER_* variables, then non-None ``overrides``.

    Raises ConfigError naming every invalid field.
    """
    if env_file:
        load_dotenv(env_file, override=False)
    env = os.environ if environ is None else environ
    raw: Dict[str, Any] = {}
    for f in fields(LegalizeConfig):
        name = env_name(f.name)
        if name in env:
            raw[f.name] = env[name]
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    try:
        cfg = LegalizeConfigSchema().load(raw)
    except ValidationError as err:
        detail = "; ".join(f"{k}: {', '.join(map(str, v))}" for k, v in sorted(err.messages.items()))
        raise ConfigError(f"invalid configuration: {detail}") from err
    logger.debug("configuration %s", cfg.to_dict())
    return cfg
