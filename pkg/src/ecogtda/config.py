"""Pipeline configuration: a JSON document validated by pydantic models.

Every field has an explicit default, including seeds, so a configuration never
depends on the wall clock. ``dump_config(load_config(path))`` reproduces the
normalized document exactly.
"""

import json
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .hyperopt import Categorical, Integer, Real, SearchSpace
from .signal import CLASSES, VARIANTS

TUNABLE_MODELS = ("rf", "gb", "gnb")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SyntheticBlock(_Strict):
    n_channels: int = 60
    sampling_rate: float = 1200.0
    trials_per_class: dict[str, int] = Field(
        default_factory=lambda: {"Rest": 90, "Rock": 30, "Paper": 30, "Scissors": 30})
    trial_s: float = 2.0
    gap_s: tuple[float, float] = (0.0, 0.0)
    burst_amplitude: float = 1.0
    burst_channels: int = Field(20, ge=1)
    loop_amplitude: float = 1.0
    noise_level: float = 1.0
    line_noise: float = 0.5

    @field_validator("trials_per_class")
    @classmethod
    def _known_classes(cls, v):
        bad = sorted(set(v) - set(CLASSES))
        if bad:
            raise ValueError(f"unknown classes {bad}")
        return v


class RecordingBlock(_Strict):
    path: str
    events: str
    format: Literal["csv", "raw_f64"] = "raw_f64"
    sampling_rate: float = 1200.0  # used for csv only; raw_f64 carries its own

    @model_validator(mode="after")
    def _exists(self):
        for name in ("path", "events"):
            if not Path(getattr(self, name)).exists():
                raise ValueError(f"{name} {getattr(self, name)!r} does not exist")
        return self


class NotchBlock(_Strict):
    base_freq: float = 50.0
    n_harmonics: int = 6
    order: int = Field(5, ge=1)
    half_width: float = 1.0


class EmbeddingBlock(_Strict):
    tau: int = Field(1, ge=1)
    dim: int = Field(1, ge=1)
    stride: int = Field(10, ge=1)


class AmplitudeBlock(_Strict):
    p: float = Field(2.0, ge=1)
    grid_size: int = Field(100, ge=2)
    layers: int = Field(2, ge=1)
    sigma: Optional[float] = Field(None, gt=0)
    w: float = 1.0


class ParamRange(_Strict):
    type: Literal["real", "int", "categorical"]
    low: Optional[float] = None
    high: Optional[float] = None
    choices: Optional[list[Union[str, int, float]]] = None

    @model_validator(mode="after")
    def _shape(self):
        if self.type == "categorical":
            if not self.choices:
                raise ValueError("categorical range needs a non-empty choices list")
        elif self.low is None or self.high is None or not self.low < self.high:
            raise ValueError("numeric range needs low < high")
        return self

    def build(self, name):
        if self.type == "real":
            return Real(name, float(self.low), float(self.high))
        if self.type == "int":
            return Integer(name, int(self.low), int(self.high))
        return Categorical(name, tuple(self.choices))


def _r(lo, hi):
    return ParamRange(type="real", low=lo, high=hi)


def _i(lo, hi):
    return ParamRange(type="int", low=lo, high=hi)


def _c(*opts):
    return ParamRange(type="categorical", choices=list(opts))


DEFAULT_SPACES = {
    "rf": {"max_depth": _i(2, 10), "n_estimators": _i(20, 200),
           "criterion": _c("gini", "entropy"), "max_features": _r(0.02, 1.0)},
    "gb": {"max_depth": _i(2, 5), "n_estimators": _i(10, 100),
           "criterion": _c("mse", "friedman_mse"), "subsample": _r(0.3, 1.0),
           "learning_rate": _r(0.05, 0.5)},
    "gnb": {"var_smoothing": _r(1e-9, 1e-1)},
}

_PARAM_NAMES = {
    "rf": {"max_depth", "n_estimators", "criterion", "max_features"},
    "gb": {"max_depth", "n_estimators", "criterion", "subsample", "learning_rate"},
    "gnb": {"var_smoothing"},
}


class HyperoptBlock(_Strict):
    n_calls: int = Field(16, ge=2)
    n_initial: int = Field(8, ge=2)
    top_k: int = Field(4, ge=1)
    spaces: dict[str, dict[str, ParamRange]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _budget(self):
        if self.n_initial > self.n_calls:
            raise ValueError("n_initial must not exceed n_calls")
        for model, space in self.spaces.items():
            if model not in TUNABLE_MODELS:
                raise ValueError(f"spaces: unknown model {model!r}")
            bad = sorted(set(space) - _PARAM_NAMES[model])
            if bad:
                raise ValueError(f"spaces.{model}: unknown parameters {bad}")
        return self

    def space_for(self, model):
        ranges = dict(DEFAULT_SPACES[model])
        ranges.update(self.spaces.get(model, {}))
        return SearchSpace([ranges[k].build(k) for k in sorted(ranges)])


class PipelineConfig(_Strict):
    seed: int = 0
    output_dir: str = "out"
    threads: int = Field(1, ge=1)
    synthetic: Optional[SyntheticBlock] = Field(default_factory=SyntheticBlock)
    recording: Optional[RecordingBlock] = None
    variants: list[str] = Field(default_factory=lambda: ["V1", "V2", "V3", "V4"])
    window_s: float = Field(2.0, gt=0)
    notch: NotchBlock = Field(default_factory=NotchBlock)
    bands: list[tuple[float, float]] = Field(
        default_factory=lambda: [(60.0, 90.0), (110.0, 140.0), (160.0, 190.0)])
    filter_order: int = Field(4, ge=1)
    embedding: EmbeddingBlock = Field(default_factory=EmbeddingBlock)
    amplitude: AmplitudeBlock = Field(default_factory=AmplitudeBlock)
    models: list[str] = Field(default_factory=lambda: ["rf", "gb"])
    folds: int = Field(5, ge=2)
    hyperopt: HyperoptBlock = Field(default_factory=HyperoptBlock)

    @field_validator("variants")
    @classmethod
    def _variants(cls, v):
        bad = [x for x in v if x not in VARIANTS]
        if bad or not v:
            raise ValueError(f"unknown variants {bad}; expected a non-empty subset of {sorted(VARIANTS)}")
        if len(set(v)) != len(v):
            raise ValueError("variants must be unique")
        return v

    @field_validator("models")
    @classmethod
    def _models(cls, v):
        bad = [x for x in v if x not in TUNABLE_MODELS]
        if bad or not v:
            raise ValueError(f"unknown models {bad}; expected a non-empty subset of {list(TUNABLE_MODELS)}")
        if len(set(v)) != len(v):
            raise ValueError("models must be unique")
        return v

    @field_validator("bands")
    @classmethod
    def _bands(cls, v):
        if not v or any(not lo < hi for lo, hi in v):
            raise ValueError("bands must be a non-empty list of (low, high) with low < high")
        return v

    @model_validator(mode="after")
    def _source(self):
        if self.recording is not None:
            self.synthetic = None
        if self.synthetic is None and self.recording is None:
            raise ValueError("either a synthetic block or a recording block is required")
        return self


def _format_validation(err):
    parts = []
    for e in err.errors():
        loc = ".".join(str(x) for x in e["loc"]) or "<root>"
        parts.append(f"{loc}: {e['msg']}")
    return "; ".join(parts)


def parse_config(data):
    try:
        return PipelineConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(f"invalid configuration: {_format_validation(err)}") from None


def load_config(path=None):
    """Load and validate a JSON config; ``None`` gives the default configuration."""
    if path is None:
        return PipelineConfig()
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from None
    return parse_config(data)


def dump_config(cfg):
    return json.dumps(cfg.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def with_overrides(cfg, seed=None, threads=None, out=None):
    data = cfg.model_dump(mode="json")
    if seed is not None:
        data["seed"] = int(seed)
    if threads is not None:
        data["threads"] = int(threads)
    if out is not None:
        data["output_dir"] = str(out)
    return parse_config(data)
