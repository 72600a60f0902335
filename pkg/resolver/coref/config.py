import os
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from typing import Any, Mapping, Optional, Union, get_args, get_origin, get_type_hints

import yaml
from dotenv import load_dotenv

from coref.errors import ConfigurationError

load_dotenv()


class Config:
    LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO")
    LOGS_DIR = os.environ.get("LOGS_DIR")

    SEED = os.environ.get("COREF_SEED")
    DEVICE = os.environ.get("COREF_DEVICE", "cpu")


class DevelopmentConfig(Config):
    LOG_LEVEL = "DEBUG"


class ProductionConfig(Config):
    """Settings of the command line, taken from the environment as is"""


class TestingConfig(Config):
    LOG_LEVEL = "WARNING"
    LOGS_DIR = None
    DEVICE = "cpu"


SPEAKER_STRATEGIES = ("input", "feature", "none")


@dataclass
class DataConfig:
    train: Optional[str] = None
    dev: Optional[str] = None
    test: Optional[str] = None
    qa: list = field(default_factory=list)
    gap: Optional[str] = None


@dataclass
class PreprocessConfig:
    window_size: int = 512
    speaker_strategy: str = "input"
    speaker_tag_open: str = "<speaker>"
    speaker_tag_close: str = "</speaker>"
    mention_tag_open: str = "<mention>"
    mention_tag_close: str = "</mention>"

    def validate(self):
        if self.window_size < 2 or self.window_size % 2:
            raise ConfigurationError(f"preprocess.window_size must be even and >= 2, got {self.window_size}")
        if self.speaker_strategy not in SPEAKER_STRATEGIES:
            raise ConfigurationError(f"preprocess.speaker_strategy must be one of {SPEAKER_STRATEGIES}")

    @property
    def tags(self):
        return (self.speaker_tag_open, self.speaker_tag_close, self.mention_tag_open, self.mention_tag_close)


@dataclass
class EncoderConfig:
    vocab_size: int = 0
    hidden_dim: int = 128
    num_layers: int = 4
    num_heads: int = 4
    max_positions: int = 512
    dropout: float = 0.1
    vocab_max_size: int = 30000
    vocab_min_count: int = 1
    pretrained_path: Optional[str] = None

    def validate(self):
        if self.hidden_dim % self.num_heads:
            raise ConfigurationError(
                f"encoder.hidden_dim ({self.hidden_dim}) must be divisible by encoder.num_heads ({self.num_heads})")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError(f"encoder.dropout must be a probability, got {self.dropout}")


@dataclass
class ProposalConfig:
    max_span_length: int = 10
    keep_ratio: float = 0.2
    negative_ratio: float = 3.0
    within_sentence: bool = True

    def validate(self):
        if self.max_span_length < 1:
            raise ConfigurationError("proposal.max_span_length must be >= 1")
        if not 0.0 < self.keep_ratio <= 1.0:
            raise ConfigurationError(f"proposal.keep_ratio must be in (0, 1], got {self.keep_ratio}")


@dataclass
class LinkingConfig:
    antecedent_cap: int = 50
    lambda_mix: float = 0.5
    chunk_stride: Optional[int] = None
    max_query_length: int = 128
    batch_size: int = 16

    def validate(self):
        if self.antecedent_cap < 1:
            raise ConfigurationError("linking.antecedent_cap must be >= 1")
        if not 0.0 <= self.lambda_mix <= 1.0:
            raise ConfigurationError(f"linking.lambda_mix must be in [0, 1], got {self.lambda_mix}")
        if self.max_query_length < 2:
            raise ConfigurationError("linking.max_query_length must leave room for both mention tags (>= 2)")


@dataclass
class TrainConfig:
    encoder_lr: float = 1e-5
    head_lr: float = 2e-4
    weight_decay: float = 0.0
    proposal_weight: float = 0.1
    accumulation_steps: int = 1
    max_grad_norm: float = 1.0
    epochs: int = 20
    proposal_epochs: int = 5
    qa_epochs: int = 2
    freeze_encoder: bool = False
    progress: bool = True

    def validate(self):
        if self.accumulation_steps < 1:
            raise ConfigurationError("train.accumulation_steps must be >= 1")


@dataclass
class RunConfig:
    seed: int = 13
    output_dir: str = "runs/default"
    data: DataConfig = field(default_factory=DataConfig)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    proposal: ProposalConfig = field(default_factory=ProposalConfig)
    linking: LinkingConfig = field(default_factory=LinkingConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    def validate(self):
        for section in (self.preprocess, self.encoder, self.proposal, self.linking, self.train):
            section.validate()
        if self.encoder.max_positions < self.preprocess.window_size:
            raise ConfigurationError("encoder.max_positions must be >= preprocess.window_size")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def flat(self) -> dict:
        return flatten(self.to_dict())

    def set(self, key: str, value: Any):
        target = self
        parts = key.split(".")
        for part in parts[:-1]:
            if not hasattr(target, part) or not is_dataclass(getattr(target, part)):
                raise ConfigurationError(f"Unknown config section: {key}")
            target = getattr(target, part)

        name = parts[-1]
        known = {f.name: f for f in fields(target)}
        if name not in known or is_dataclass(getattr(target, name)):
            raise ConfigurationError(f"Unknown config key: {key}")

        setattr(target, name, _coerce(key, get_type_hints(type(target))[name], value))

    def update(self, values: Mapping[str, Any]):
        for key, value in flatten(values).items():
            self.set(key, value)
        return self

    def dump(self, path: str):
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w") as f:
            yaml.safe_dump(self.flat(), f, sort_keys=True)


def flatten(values: Mapping[str, Any], prefix: str = "") -> dict:
    flat = {}
    for key, value in values.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(flatten(value, prefix=f"{name}."))
        else:
            flat[name] = value
    return flat


def _parse(key: str, value: str):
    try:
        return yaml.safe_load(value)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Config key {key} got an unreadable value {value!r}") from e


def _coerce(key: str, declared, value: Any):
    """Converts value to the declared type of the key, strings only parsed for non-string keys"""

    if get_origin(declared) is Union:
        if value is None:
            return None
        declared = next(arg for arg in get_args(declared) if arg is not type(None))

    if declared is str:
        if isinstance(value, (Mapping, list, tuple)) or value is None:
            raise ConfigurationError(f"Config key {key} expects a string, got {value!r}")
        return value if isinstance(value, str) else str(value)

    if isinstance(value, str):
        value = _parse(key, value)

    if declared is bool:
        if not isinstance(value, bool):
            raise ConfigurationError(f"Config key {key} expects a boolean, got {value!r}")
        return value
    if declared in (int, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"Config key {key} expects a number, got {value!r}")
        if declared is int and not float(value).is_integer():
            raise ConfigurationError(f"Config key {key} expects an integer, got {value!r}")
        return declared(value)
    if declared is list or get_origin(declared) is list:
        values = value if isinstance(value, (list, tuple)) else [value]
        return [str(item) for item in values]
    raise ConfigurationError(f"Config key {key} has an unsupported type {declared}")


def load_config(path: Optional[str] = None, overrides: Optional[list] = None, env=Config) -> RunConfig:
    """Resolves defaults, config file, environment seed and key=value overrides"""

    config = RunConfig()

    if path:
        try:
            with open(path) as f:
                values = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigurationError(f"Unable to read config file {path}: {e}") from e
        if not isinstance(values, Mapping):
            raise ConfigurationError(f"Config file {path} must hold a mapping of keys")
        config.update(values)

    if env.SEED is not None:
        config.set("seed", env.SEED)

    for item in overrides or []:
        if "=" not in item:
            raise ConfigurationError(f"Override must look like key=value, got {item!r}")
        key, value = item.split("=", 1)
        config.set(key.strip(), value.strip())

    return config.validate()
