"""CLI subcommands; each module exposes ``register(subparsers, common)``."""

from __future__ import annotations

from ctis.errors import ConfigError


def parse_int_list(text: str, what: str) -> list[int]:
    """``"1,5,25"`` -> ``[1, 5, 25]`` (every value must be >= 1)."""
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"{what} must be a comma-separated list of integers: {text!r}") from exc
    if not values or any(v < 1 for v in values):
        raise ConfigError(f"{what} must be positive integers: {text!r}")
    return values


def parse_names(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]
