"""Experiment configuration in a flat ``section.key = value`` text format.

Sections map onto dataclasses: ``train`` (TrainConfig), ``metric``
(MetricConfig), ``ace`` (AceConfig), ``ablate`` (AblateConfig) and ``scm``
(ScmConfig). The single ``run.seed`` drives both data generation and
training. Unknown keys are rejected and every value is range-checked by the
target dataclass when the file is parsed.
"""
from __future__ import annotations

import dataclasses
import platform
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import SPEC_VERSION, __version__
from .errors import ConfigError, ParseError
from .metrics import MetricConfig
from .model.train import TrainConfig
from .synthgen import ScmConfig


@dataclass(frozen=True)
class AceConfig:
    B: int = 1000
    alpha: float = 0.05
    fairness_threshold: float = 0.5
    mc_grid: tuple = ("small", "large")
    # protocol used when the ace command generates its own data
    n_train: int = 64000
    epochs: int = 2

    def __post_init__(self):
        object.__setattr__(self, "mc_grid", tuple(self.mc_grid))
        if self.B < 1:
            raise ConfigError("ace.B must be >= 1")
        if not 0 < self.alpha < 1:
            raise ConfigError("ace.alpha must lie in (0, 1)")
        if not self.fairness_threshold > 0:
            raise ConfigError("ace.fairness_threshold must be positive")
        if not self.mc_grid or len(set(self.mc_grid)) != len(self.mc_grid):
            raise ConfigError("ace.mc_grid must list distinct presets")
        if self.n_train < 1 or self.epochs < 1:
            raise ConfigError("ace.n_train and ace.epochs must be positive")


@dataclass(frozen=True)
class AblateConfig:
    seeds: tuple = (0, 1, 2, 3, 4)

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("ablate.seeds must list distinct seeds")
        if min(self.seeds) < 0:
            raise ConfigError("ablate.seeds must be non-negative")


SECTIONS = {
    "train": TrainConfig,
    "metric": MetricConfig,
    "ace": AceConfig,
    "ablate": AblateConfig,
    "scm": ScmConfig,
}
# seeds are owned by run.seed
HIDDEN_KEYS = {"train": {"seed"}, "scm": {"seed"}}


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)
    metric: MetricConfig = field(default_factory=MetricConfig)
    ace: AceConfig = field(default_factory=AceConfig)
    ablate: AblateConfig = field(default_factory=AblateConfig)
    scm: ScmConfig = field(default_factory=ScmConfig)

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("run.seed must be an unsigned 64-bit integer")

    @property
    def train_config(self) -> TrainConfig:
        return replace(self.train, seed=self.seed)

    @property
    def scm_config(self) -> ScmConfig:
        return replace(self.scm, seed=self.seed)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed)

    def to_text(self) -> str:
        lines = [f"run.seed = {self.seed}"]
        for name in SECTIONS:
            obj = getattr(self, name)
            for f in fields(obj):
                if f.name not in HIDDEN_KEYS.get(name, ()):
                    lines.append(f"{name}.{f.name} = {_format(getattr(obj, f.name))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        return parse_config(text)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        return parse_config(text)


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):
            return "; ".join(", ".join(_format(x) for x in inner) for inner in v)
        return ", ".join(_format(x) for x in v)
    return str(v)


def _coerce(raw: str, default, key: str):
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low not in ("true", "false"):
                raise ValueError(f"expected true or false, got {raw!r}")
            return low == "true"
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, str):
            return raw
        if isinstance(default, tuple):
            if default and isinstance(default[0], tuple):
                proto = default[0][0]
                return tuple(tuple(_coerce(x.strip(), proto, key) for x in part.split(","))
                             for part in raw.split(";"))
            proto = default[0] if default else ""
            return tuple(_coerce(x.strip(), proto, key) for x in raw.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None
    raise ConfigError(f"{key}: unsupported value type")


def parse_config(text: str) -> ExperimentConfig:
    """Parse ``section.key = value`` lines; ``#`` starts a comment."""
    values: dict[str, dict] = {name: {} for name in SECTIONS}
    seed = 0
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'section.key = value', got {raw.strip()!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        section, _, name = key.partition(".")
        if key == "run.seed":
            seed = _coerce(value, 0, key)
            continue
        cls = SECTIONS.get(section)
        known = {f.name: f for f in fields(cls)} if cls else {}
        if not name or name not in known or name in HIDDEN_KEYS.get(section, ()):
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        default = known[name].default
        if default is dataclasses.MISSING:
            default = known[name].default_factory()
        values[section][name] = _coerce(value, default, key)
    try:
        parts = {name: cls(**values[name]) for name, cls in SECTIONS.items()}
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return ExperimentConfig(seed=seed, **parts)


def version_string() -> str:
    """Package version in git-describe style."""
    return f"v{__version__}"


@dataclass
class RunRecord:
    """Everything needed to rerun a command: config snapshot, seed and data references."""

    command: str
    config: str
    seed: int
    data: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    history: str | None = None
    ace: dict | None = None
    wall_clock_seconds: float = 0.0
    version: str = field(default_factory=version_string)

    def to_json(self) -> dict:
        return {
            "spec_version": SPEC_VERSION,
            "command": self.command,
            "version": self.version,
            "config": self.config,
            "seed": self.seed,
            "data": self.data,
            "metrics": self.metrics,
            "history": self.history,
            "ace": self.ace,
            "wall_clock_seconds": self.wall_clock_seconds,
            "environment": {"python": platform.python_version(), "numpy": np.__version__},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RunRecord":
        return cls(obj["command"], obj["config"], obj["seed"], obj.get("data", {}), obj.get("metrics", {}),
                   obj.get("history"), obj.get("ace"), obj.get("wall_clock_seconds", 0.0),
                   obj.get("version", version_string()))

    @property
    def experiment_config(self) -> ExperimentConfig:
        return parse_config(self.config)
