"""
Runtime settings and experiment configuration
"""

import os
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

DEFAULT_TAIL_DEPTH = 40
DEFAULT_INTERVAL_PREC = 128
DEFAULT_BITS = 100_000

ENV_TAIL_DEPTH = "DAL_PRECISION_BITS"
ENV_INTERVAL_PREC = "DAL_INTERVAL_PREC"
ENV_WORKERS = "DAL_WORKERS"
ENV_BITS = "DAL_RANDOM_BITS"


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}")


class Settings(BaseModel):
    """Numeric defaults shared by every operation"""

    model_config = ConfigDict(frozen=True)

    tail_depth: int = Field(DEFAULT_TAIL_DEPTH, ge=0)
    interval_prec: int = Field(DEFAULT_INTERVAL_PREC, ge=53)
    bits: int = Field(DEFAULT_BITS, ge=64)
    workers: int = Field(1, ge=1)

    @classmethod
    def from_env(cls) -> "Settings":
        """
        Build settings from the environment; DAL_PRECISION_BITS overrides the tail depth
        and DAL_RANDOM_BITS the size of random samples
        """
        return cls(
            tail_depth=_env_int(ENV_TAIL_DEPTH, DEFAULT_TAIL_DEPTH),
            interval_prec=_env_int(ENV_INTERVAL_PREC, DEFAULT_INTERVAL_PREC),
            bits=_env_int(ENV_BITS, DEFAULT_BITS),
            workers=_env_int(ENV_WORKERS, 1),
        )


class ExperimentConfig(BaseModel):
    """Everything a Monte Carlo run depends on; echoed into the JSON summary"""

    model_config = ConfigDict(frozen=True)

    master_seed: int = Field(0, ge=0, lt=2**64)
    trials: int = Field(200, ge=1)
    digits_n: int = Field(10_000, ge=1)
    bits_B: int = Field(DEFAULT_BITS, ge=64)
    max_bit_doublings: int = Field(3, ge=0)
    tail_depth: int = Field(DEFAULT_TAIL_DEPTH, ge=0)
    interval_prec: int = Field(DEFAULT_INTERVAL_PREC, ge=53)
    workers: int = Field(1, ge=1)

    # pre-registered tolerances
    mean_tolerance_g: float = Field(0.01, gt=0)
    mean_tolerance_i: float = Field(0.02, gt=0)
    mean_tolerance_levy: float = Field(0.012, gt=0)
    trial_tolerance_g: float = Field(0.02, gt=0)
    trial_tolerance_i: float = Field(0.02, gt=0)
    trial_tolerance_levy: float = Field(0.03, gt=0)
    pass_fraction: float = Field(0.95, gt=0, le=1)
    pair_gap_bound: float = Field(10.0, gt=0)

    alpha_override: Optional[str] = None
    beta_override: Optional[str] = None
    output: Optional[str] = None

    @field_validator("alpha_override", "beta_override")
    @classmethod
    def _strip_override(cls, value: Optional[str]) -> Optional[str]:
        if value is None:
            return None
        value = value.strip()
        return value or None

    @classmethod
    def with_settings(cls, settings: Settings, **overrides) -> "ExperimentConfig":
        """Seed an experiment config from the environment settings"""
        base = {
            "tail_depth": settings.tail_depth,
            "interval_prec": settings.interval_prec,
            "bits_B": settings.bits,
            "workers": settings.workers,
        }
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**base)
