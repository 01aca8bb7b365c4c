"""Python bindings for the lifelong Bayesian RL toolkit."""

from ._core import (
    BoxJumpEnv,
    ConfigError,
    GridworldEnv,
    backward,
    boxjump_obstacles,
    coin_table,
    complexity_profile,
    confidence,
    coverage_probability,
    min_sample_complexity,
    report,
    run,
    validate_config,
    value_iteration,
)

__all__ = [
    "BoxJumpEnv",
    "ConfigError",
    "GridworldEnv",
    "backward",
    "boxjump_obstacles",
    "coin_table",
    "complexity_profile",
    "confidence",
    "coverage_probability",
    "min_sample_complexity",
    "report",
    "run",
    "validate_config",
    "value_iteration",
]
