"""Flat ``key = value`` pipeline configuration."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import get_type_hints

METHODS = ("ppne-fast", "ppne-exact", "random", "degree", "betweenness", "dice")


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    method: str = "ppne-fast"
    embedding: str = "deepwalk"
    window: int = 10
    negatives: float = 1.0
    dim: int = 128
    iterations: int = 100
    sample_size: int = 10_000
    batch_size: int = 1
    k_exponent: float = 1.0
    seed: int = 0
    ppos_fraction: float = 0.1
    eval_every: int = 100
    labels_path: str | None = None
    edges_path: str | None = None
    pairs_path: str | None = None
    out_dir: str = "out"
    # keys below extend the core set
    budget: int | None = None
    num_clusters: int | None = None
    stop_privacy_gain: float | None = None
    workers: int = 1
    eigen_m: int | None = None
    eigen_tol: float = 1e-10
    grad_window: int | None = None
    refresh_every: int = 1
    deletion_share: float = 0.5
    wall_clock: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {', '.join(METHODS)}, got {self.method!r}")
        if self.embedding not in ("deepwalk", "line"):
            raise ConfigError(f"embedding must be deepwalk or line, got {self.embedding!r}")
        if self.eval_every < 1:
            raise ConfigError("eval_every must be >= 1")
        if not 0 < self.ppos_fraction < 1:
            raise ConfigError("ppos_fraction must lie in (0, 1)")
        if self.iterations < 0 or self.workers < 1:
            raise ConfigError("iterations must be >= 0 and workers >= 1")
        if min(self.window, self.dim, self.batch_size, self.sample_size, self.refresh_every) < 1:
            raise ConfigError("window, dim, batch_size, sample_size and refresh_every must be >= 1")
        if self.negatives < 1 or self.k_exponent < 0:
            raise ConfigError("negatives must be >= 1 and k_exponent >= 0")
        if self.method == "ppne-fast" and self.sample_size < self.batch_size:
            raise ConfigError("sample_size must be >= batch_size")


def _base_type(hint) -> type:
    args = [a for a in getattr(hint, "__args__", ()) if a is not type(None)]
    return args[0] if args else hint


def field_types() -> dict[str, type]:
    hints = get_type_hints(PipelineConfig)
    return {f.name: _base_type(hints[f.name]) for f in dataclasses.fields(PipelineConfig)}


def _defaults() -> dict:
    return {f.name: f.default for f in dataclasses.fields(PipelineConfig)}


def convert(key: str, raw: str):
    types = field_types()
    if key not in types:
        raise ConfigError(f"unknown config key {key!r}")
    kind = types[key]
    text = raw.strip()
    if text.lower() in ("", "none"):
        if _defaults()[key] is None:
            return None
        raise ConfigError(f"config key {key!r} needs a value")
    try:
        if kind is bool:
            if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return text.lower() in ("true", "1", "yes")
        if kind is int:
            number = float(text.replace(",", "").replace("_", ""))
            if not number.is_integer():
                raise ValueError(text)
            return int(number)
        if kind is float:
            value = text[:-1] if text.endswith("%") else text
            return float(value) / (100.0 if text.endswith("%") else 1.0)
        return text
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot read {raw!r} as {kind.__name__}") from None


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = convert(key, value)
    return values


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> PipelineConfig:
    """File values first, then non-None overrides (command-line flags) on top."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = set(merged) - set(field_types())
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    return PipelineConfig(**merged)
