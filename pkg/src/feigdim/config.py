"""Run configuration: bundled per-degree profiles, key=value files, flag overrides."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import ParseError


@dataclass(frozen=True)
class RunConfig:
    degree_d: int = 2
    truncation_N: int = 20
    rho: float = 1.25
    radius: float = 1e-9
    seed: float = -1.5          # coefficient of x**d in the Newton seed 1 + seed*x**d
    generations: int = 20
    newton_tol: float = 1e-13
    inverse_tol: float = 1e-14
    partition_tol: float = 1e-12
    max_depth: int = 24
    margin: float = 1e-6
    t_max: float = 0.999
    width_limit: float = 1e-8
    grid: int = 16
    threads: int = 1
    out: str = "."
    ball: str = ""
    cert: str = ""

    def __post_init__(self):
        if self.degree_d not in (2, 3, 4):
            raise ValueError("degree_d must be 2, 3 or 4")
        for name in ("newton_tol", "inverse_tol", "partition_tol", "rho", "width_limit"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.radius >= 0:
            raise ValueError("radius must be nonnegative")
        if self.truncation_N < 5:
            raise ValueError("truncation_N must be at least 5")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if self.max_depth < 0 or self.grid < 1 or self.threads < 1:
            raise ValueError("max_depth, grid and threads must be positive")

    @property
    def ball_path(self) -> Path:
        return Path(self.ball) if self.ball else Path(self.out) / f"ball_d{self.degree_d}.txt"

    @property
    def cert_path(self) -> Path:
        return Path(self.cert) if self.cert else Path(self.out) / f"cert_d{self.degree_d}.json"

    @property
    def dimension_path(self) -> Path:
        return Path(self.out) / f"dimension_d{self.degree_d}.csv"

    @property
    def figures_dir(self) -> Path:
        return Path(self.out) / f"figures_d{self.degree_d}"


# Degree 40/120/160 in x corresponds to 20/40/40 coefficients in u = x**d.
PROFILES = {
    2: dict(degree_d=2, truncation_N=20, rho=1.25, seed=-1.5, newton_tol=1e-13, max_depth=24),
    3: dict(degree_d=3, truncation_N=40, rho=1.2, seed=-1.4, newton_tol=1e-11, max_depth=24),
    4: dict(degree_d=4, truncation_N=40, rho=1.01, seed=-1.6, newton_tol=1e-8, max_depth=30),
}

_TYPES = {f.name: f.type for f in fields(RunConfig)}
_CASTS = {"int": int, "float": float, "str": str}


def _cast(key, value, line=None):
    kind = _TYPES[key]
    try:
        if key == "threads" and value.strip().lower() == "auto":
            return os.cpu_count() or 1
        return _CASTS[kind](value.strip())
    except ValueError:
        raise ParseError(f"bad value {value!r}", line, key) from None


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment.  Unknown keys are errors."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected key = value", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "degree":
            key = "degree_d"
        if key == "truncation":
            key = "truncation_N"
        if key not in _TYPES:
            raise ParseError("unknown key", lineno, key)
        out[key] = _cast(key, value, lineno)
    return out


def build_config(degree: int | None, file_values: dict, overrides: dict) -> RunConfig:
    """Profile for the degree, then the config file, then command-line overrides."""
    degree = overrides.get("degree_d") or file_values.get("degree_d") or degree
    if degree is None:
        raise ValueError("degree is required")
    values = dict(PROFILES[int(degree)]) if int(degree) in PROFILES else {"degree_d": degree}
    values.update(file_values)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


def config_text(cfg: RunConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in asdict(cfg).items())

