"""Run configuration: loss weights, loop parameters, generator sizes and
backend settings in one YAML file. Defaults are the published constants
(loss weights, eta=15, Phase-2 temperature 0.3)."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import yaml

from .datagen import GeneratorSizes
from .errors import ConfigError
from .losses import LossWeights

FEEDBACK_MODES = ("binary", "detailed")


@dataclass(frozen=True)
class LoopConfig:
    eta: int = 15
    feedback_mode: str = "detailed"
    temperature: float = 0.3
    timeout: float = 60.0
    max_retries: int = 2
    concurrency: int = 1
    # passed through to an external trainer untouched
    epochs_reasoning: int = 1
    epochs_final: int = 1
    trainer_hook_url: Optional[str] = None

    def __post_init__(self):
        if self.eta < 1:
            raise ValueError("eta must be at least 1")
        if self.feedback_mode not in FEEDBACK_MODES:
            raise ValueError(f"feedback_mode must be one of {FEEDBACK_MODES}")
        if self.temperature < 0:
            raise ValueError("temperature must be nonnegative")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be nonnegative")
        if self.concurrency < 1:
            raise ValueError("concurrency must be at least 1")


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "scripted"
    url: Optional[str] = None
    model: str = "default"
    api_key: Optional[str] = field(default=None, repr=False)
    max_tokens: int = 2048
    phase1_temperature: float = 0.7

    def __post_init__(self):
        if self.kind not in ("scripted", "http", "oracle"):
            raise ValueError("kind must be scripted, http or oracle")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")


@dataclass(frozen=True)
class RunConfig:
    weights: LossWeights = LossWeights()
    loop: LoopConfig = LoopConfig()
    generator: GeneratorSizes = GeneratorSizes()
    backend: BackendConfig = BackendConfig()
    seed: int = 0


EXAMPLE_CONFIG = """\
# stripscot run configuration. Every key is optional; omitted keys keep
# their defaults. Unknown keys are rejected.
seed: 0
weights:
  alpha_precond: 1.0    # precondition violation penalty
  alpha_effect: 1.0     # incorrect effect penalty
  alpha_goal: 1.5       # unmet goal penalty
  lambda_feedback: 0.1  # weight of the feedback term in the step loss
  beta: 2.0             # fixed penalty for an invalid plan
  alpha: 0.5            # weight of the validity cross-entropy
  bce_epsilon: 1.0e-6   # probability clamp for the cross-entropy
loop:
  eta: 15               # max generate/validate/re-prompt iterations
  feedback_mode: detailed   # or: binary
  temperature: 0.3
  timeout: 60.0
  max_retries: 2
  concurrency: 1
  epochs_reasoning: 1   # handed to the external trainer, unused here
  epochs_final: 1
  trainer_hook_url: null    # POST target for per-iteration dataset manifests
generator:
  blocks: [2, 5]        # int or [lo, hi]
  cities: [1, 2]
  locations_per_city: 2
  packages: [1, 2]
  trucks: 2
  airplanes: 1
backend:
  kind: scripted        # scripted | http | oracle
  url: null             # or set MODEL_API_URL
  model: default
  max_tokens: 2048
  phase1_temperature: 0.7   # sampling temperature for Phase-1 style prompts
"""


def _coerce(value: Any, default: Any, path: str, allow_range: bool = False) -> Any:
    if allow_range and isinstance(value, list):
        if len(value) != 2 or not all(isinstance(v, int) and not isinstance(v, bool)
                                      for v in value) or value[0] > value[1]:
            raise ConfigError(path, "expected an integer or [lo, hi]")
        return tuple(value)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(path, "expected a boolean")
    elif isinstance(default, (int, tuple)):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, "expected an integer")
    elif isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, "expected a number")
        return float(value)
    elif isinstance(default, str) or default is None:
        if value is not None and not isinstance(value, str):
            raise ConfigError(path, "expected a string")
        if value is None and default is not None:
            raise ConfigError(path, "expected a string")
    return value


def _build(cls, data: Any, path: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(path, "expected a mapping")
    defaults = cls()
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        sub = f"{path}.{key}" if path else str(key)
        if key not in known:
            raise ConfigError(sub, "unknown key")
        default = getattr(defaults, key)
        if dataclasses.is_dataclass(default):
            kwargs[key] = _build(type(default), value, sub)
        else:
            kwargs[key] = _coerce(value, default, sub, cls is GeneratorSizes)
    try:
        return cls(**kwargs)
    except ValueError as exc:
        msg = str(exc)
        first = msg.split()[0] if msg else ""
        where = (f"{path}.{first}" if path else first) if first in known else path
        raise ConfigError(where, msg) from None


def load_config(path: Union[str, Path, None] = None, env: Optional[dict] = None) -> RunConfig:
    """Read a YAML config; ``None`` gives the defaults.

    ``MODEL_API_URL`` / ``MODEL_API_KEY`` override the backend endpoint and
    credentials.
    """
    data = {}
    if path is not None:
        try:
            data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(str(path), f"not valid YAML: {exc}") from None
    cfg = _build(RunConfig, data, "")
    env = os.environ if env is None else env
    overrides = {}
    if env.get("MODEL_API_URL"):
        overrides["url"] = env["MODEL_API_URL"]
    if env.get("MODEL_API_KEY"):
        overrides["api_key"] = env["MODEL_API_KEY"]
    if overrides:
        cfg = dataclasses.replace(cfg, backend=dataclasses.replace(cfg.backend, **overrides))
    return cfg


def config_to_dict(cfg: RunConfig) -> dict:
    data = dataclasses.asdict(cfg)
    data["backend"].pop("api_key", None)
    return data
