"""Experiment configuration: a flat ``key = value`` text file.

Lines starting with ``#`` are comments.  Lists are comma separated.  Keys
are the ExperimentConfig field names (dashes and underscores both accepted);
CLI flags override file values.  ``ILWLAB_OUTPUT_DIR`` sets the default
output directory.
"""
from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field
from typing import Optional

OUTPUT_ENV = "ILWLAB_OUTPUT_DIR"
DEFAULT_OUTPUT = "ilwlab-out"


class ConfigError(ValueError):
    pass


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT


def _fmt_float(x: float) -> str:
    if x == math.inf:
        return "inf"
    return repr(float(x))


@dataclass
class ExperimentConfig:
    experiment: str = "default"
    k: int = 3
    N: int = 16
    delta: float = 2.0
    deltas: list = field(default_factory=lambda: [2.0, 8.0, 32.0, 128.0])
    K: float = 1.0
    A: float = 1.0
    samples: int = 100_000
    T: float = 1.0
    dt: Optional[float] = None
    cfl: float = 0.03
    s: float = -0.5
    eps: float = 0.25
    seed: int = 0
    output_dir: str = dataclasses.field(default_factory=default_output_dir)

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                text = "none"
            elif isinstance(v, list):
                text = ",".join(_fmt_float(x) for x in v)
            elif isinstance(v, float):
                text = _fmt_float(v)
            else:
                text = str(v)
            lines.append(f"{f.name} = {text}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        return cls(**parse_config(text))

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        # JSON has no inf
        d["deltas"] = [_fmt_float(x) if x == math.inf else x for x in self.deltas]
        return d


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _convert(name: str, raw: str):
    raw = raw.strip()
    f = _FIELDS[name]
    if name == "deltas":
        return [float(x) for x in raw.split(",") if x.strip()]
    if raw.lower() == "none":
        if name != "dt":
            raise ConfigError(f"{name} cannot be none")
        return None
    kind = f.type if isinstance(f.type, str) else f.type.__name__
    try:
        if kind == "int":
            return int(raw)
        if kind in ("float", "Optional[float]"):
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc
    return raw


def parse_config(text: str) -> dict:
    """Parse key = value lines into a dict of typed values (unknown keys raise)."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _convert(key, value)
    return out


def load_config(path: str) -> dict:
    with open(path) as fh:
        return parse_config(fh.read())
