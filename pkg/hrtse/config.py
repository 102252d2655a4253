"""Configuration dataclasses, profiles and file/env/flag resolution."""

from __future__ import annotations

import dataclasses
import os
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, TypeVar

import yaml

from hrtse.errors import ConfigError

# Default values
DEFAULT_SAMPLE_RATE = 16000
DEFAULT_RUNS_ROOT = "./runs"
DEFAULT_CORPUS_ROOT = "./data/toy_corpus"
CORPUS_ROOT_ENV = "HRTSE_CORPUS_ROOT"
RUNS_ROOT_ENV = "HRTSE_RUNS_ROOT"
MANIFEST_NAME = "manifest.jsonl"
# Keys whose override values are file-system paths, kept verbatim
PATH_KEYS = frozenset({"root", "checkpoint", "checkpoint_dir", "manifest"})

Profile = Literal["full", "desk"]
Mode = Literal["local", "global", "hr"]
PROFILES: tuple[str, ...] = ("full", "desk")
MODES: tuple[str, ...] = ("local", "global", "hr")

T = TypeVar("T")


class _Validated:
    """Mixin giving every config an ``is_valid``/``validate`` pair."""

    def errors(self) -> list[str]:
        return []

    def is_valid(self) -> tuple[bool, list[str]]:
        """Validate config values.

        Returns:
            Tuple of (is_valid, list of error messages)
        """
        errors = self.errors()
        for f in dataclasses.fields(self):  # type: ignore[arg-type]
            value = getattr(self, f.name)
            if isinstance(value, _Validated):
                errors.extend(f"{f.name}.{e}" for e in value.errors())
        return len(errors) == 0, errors

    def validate(self):
        ok, errors = self.is_valid()
        if not ok:
            raise ConfigError(f"{type(self).__name__}: " + "; ".join(errors))
        return self


@dataclass(frozen=True)
class StftConfig(_Validated):
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE
    window_ms: float = 20.0
    hop_ms: float = 10.0
    dft_size: int = 320
    window_kind: str = "hann"

    @property
    def win_length(self) -> int:
        return round(self.sample_rate_hz * self.window_ms / 1000)

    @property
    def hop_length(self) -> int:
        return round(self.sample_rate_hz * self.hop_ms / 1000)

    @property
    def n_bins(self) -> int:
        return self.dft_size // 2 + 1

    def errors(self) -> list[str]:
        errors = []
        if self.sample_rate_hz <= 0:
            errors.append("sample_rate_hz must be positive")
        if self.dft_size < self.win_length:
            errors.append(f"dft_size {self.dft_size} is smaller than the window ({self.win_length} samples)")
        if self.hop_length <= 0 or self.win_length != 2 * self.hop_length:
            errors.append("hop must be half the window length (50% overlap)")
        if self.window_kind != "hann":
            errors.append(f"unsupported window_kind {self.window_kind!r}")
        return errors


@dataclass(frozen=True)
class FbankConfig(_Validated):
    n_mels: int = 80
    f_min_hz: float = 20.0
    f_max_hz: float = 7600.0
    log_floor: float = 1e-10
    mean_norm: bool = False

    def errors(self) -> list[str]:
        errors = []
        if self.n_mels <= 0:
            errors.append("n_mels must be positive")
        if not 0 <= self.f_min_hz < self.f_max_hz:
            errors.append("need 0 <= f_min_hz < f_max_hz")
        if self.log_floor <= 0:
            errors.append("log_floor must be positive")
        return errors


@dataclass(frozen=True)
class EcapaConfig(_Validated):
    input_dim: int = 80
    res2net_scale: int = 8
    bottleneck: int = 128
    block_channels: int = 2048
    block_kernels: tuple[int, ...] = (5, 3, 3, 3)
    block_dilations: tuple[int, ...] = (1, 2, 3, 4)
    attention_bottleneck: int = 256
    embedding_dim: int = 256
    eps: float = 1e-8

    @classmethod
    def for_profile(cls, profile: str) -> EcapaConfig:
        if profile == "full":
            return cls()
        # channels 2048 -> 256 with every ratio kept
        return cls(block_channels=256, bottleneck=16, attention_bottleneck=32)

    def errors(self) -> list[str]:
        errors = []
        if self.embedding_dim <= 0:
            errors.append("embedding_dim must be positive")
        if len(self.block_kernels) != len(self.block_dilations) or len(self.block_kernels) < 2:
            errors.append("block_kernels and block_dilations need the same length (>= 2)")
        if self.block_channels % self.res2net_scale:
            errors.append("block_channels must be divisible by res2net_scale")
        return errors


@dataclass(frozen=True)
class ArnConfig(_Validated):
    hidden: int = 32
    bidirectional: bool = True
    blocks: int = 1
    attention_heads: int = 1
    ff_mult: int = 4
    dropout: float = 0.0

    def errors(self) -> list[str]:
        errors = []
        if self.hidden <= 0:
            errors.append("hidden must be positive")
        if self.blocks < 1:
            errors.append("blocks must be >= 1")
        if self.bidirectional and self.hidden % 2:
            errors.append("bidirectional ARN needs an even hidden size")
        if self.hidden % self.attention_heads:
            errors.append("hidden must be divisible by attention_heads")
        return errors


@dataclass(frozen=True)
class LocalNetConfig(_Validated):
    encoder_channels: tuple[int, ...] = (16, 32, 64, 128)
    input_channels: int = 2
    n_bins: int = 161
    arn: ArnConfig = field(default_factory=ArnConfig)

    def errors(self) -> list[str]:
        errors = []
        if self.input_channels not in (2, 4):
            errors.append("input_channels must be 2 (text layout) or 4 (table layout)")
        return errors


@dataclass(frozen=True)
class SeparatorConfig(_Validated):
    encoder_channels: tuple[int, ...] = (16, 32, 64, 128, 256)
    kernel: tuple[int, int] = (3, 3)
    stride: tuple[int, int] = (1, 2)
    input_channels: int = 4
    n_bins: int = 161
    deepfilter_taps: tuple[int, int] = (5, 3)
    embedding_dim: int = 256
    arn: ArnConfig = field(default_factory=lambda: ArnConfig(hidden=1024))

    @property
    def output_channels(self) -> int:
        return 2 * self.deepfilter_taps[0] * self.deepfilter_taps[1]

    @property
    def bottleneck_dim(self) -> int:
        return self.encoder_channels[-1] * conv_freq_sizes(self.n_bins, len(self.encoder_channels))[-1]

    def errors(self) -> list[str]:
        errors = []
        if self.input_channels not in (3, 4):
            errors.append("input_channels must be 3 or 4")
        if tuple(self.kernel) != (3, 3) or tuple(self.stride) != (1, 2):
            errors.append("only 3x3 kernels with (1, 2) stride are supported")
        if min(self.deepfilter_taps) < 1:
            errors.append("deepfilter_taps must be positive")
        if conv_freq_sizes(self.n_bins, len(self.encoder_channels))[-1] < 1:
            errors.append("too many encoder layers for n_bins")
        if self.arn.hidden != self.bottleneck_dim:
            errors.append(f"arn.hidden {self.arn.hidden} must equal the bottleneck width {self.bottleneck_dim}")
        return errors


@dataclass(frozen=True)
class ModelConfig(_Validated):
    """Architecture of the extractor; concrete sizes come from ``profile``."""

    profile: str = "desk"
    local_input_channels: int = 2
    separator_input_channels: int = 4
    deepfilter_taps: tuple[int, int] = (5, 3)
    arn_blocks: int = 1
    local_arn_hidden: int = 32

    def separator(self) -> SeparatorConfig:
        channels = (16, 32, 64, 128, 256) if self.profile == "full" else (4, 8, 16, 32, 64)
        cfg = SeparatorConfig(
            encoder_channels=channels,
            input_channels=self.separator_input_channels,
            deepfilter_taps=tuple(self.deepfilter_taps),  # type: ignore[arg-type]
            embedding_dim=self.embedder().embedding_dim,
        )
        return dataclasses.replace(cfg, arn=ArnConfig(hidden=cfg.bottleneck_dim, blocks=self.arn_blocks))

    def local(self) -> LocalNetConfig:
        return LocalNetConfig(
            encoder_channels=self.separator().encoder_channels[:-1],
            input_channels=self.local_input_channels,
            arn=ArnConfig(hidden=self.local_arn_hidden),
        )

    def embedder(self) -> EcapaConfig:
        return EcapaConfig.for_profile(self.profile)

    def errors(self) -> list[str]:
        if self.profile not in PROFILES:
            return [f"profile must be one of {PROFILES}, got {self.profile!r}"]
        return [*self.separator().errors(), *self.local().errors(), *self.embedder().errors()]


@dataclass(frozen=True)
class LossConfig(_Validated):
    compress_p: float = 0.5
    weight_ri: float = 1.0
    weight_mag: float = 1.0
    weight_si_snr: float = 1.0
    si_snr_cap_db: float = 80.0
    eps: float = 1e-12

    def errors(self) -> list[str]:
        errors = []
        if not 0 < self.compress_p <= 1:
            errors.append("compress_p must be in (0, 1]")
        if self.si_snr_cap_db <= 0:
            errors.append("si_snr_cap_db must be positive")
        return errors


@dataclass(frozen=True)
class TsosConfig(_Validated):
    activity_floor_db: float = 40.0
    suppression_db: float = 10.0
    min_run: int = 2

    def errors(self) -> list[str]:
        if self.min_run < 1:
            return ["min_run must be >= 1"]
        return []


@dataclass(frozen=True)
class CorpusConfig(_Validated):
    root: str = DEFAULT_CORPUS_ROOT
    n_speakers: int = 8
    utts_per_speaker: int = 10
    seed: int = 7
    min_duration_s: float = 3.0
    max_duration_s: float = 6.0
    gain_db_range: tuple[float, float] = (-5.0, 5.0)
    val_utts_per_speaker: int = 1
    mixtures_per_utterance: int = 1

    def errors(self) -> list[str]:
        errors = []
        if self.n_speakers < 2:
            errors.append("n_speakers must be >= 2")
        if self.utts_per_speaker < 2 + self.val_utts_per_speaker:
            errors.append("utts_per_speaker must leave >= 2 training utterances after the validation split")
        if not 0 < self.min_duration_s <= self.max_duration_s:
            errors.append("need 0 < min_duration_s <= max_duration_s")
        return errors


@dataclass(frozen=True)
class EmbedderTrainConfig(_Validated):
    checkpoint: str = "runs/embedder.pt"
    lr: float = 1e-3
    batch_size: int = 16
    max_epochs: int = 30
    patience: int = 3
    segment_s: float = 2.0
    margin: float = 0.2
    scale: float = 30.0

    def errors(self) -> list[str]:
        errors = []
        if self.lr <= 0:
            errors.append("lr must be positive")
        if self.batch_size < 1:
            errors.append("batch_size must be >= 1")
        if self.patience < 1:
            errors.append("patience must be >= 1")
        return errors


@dataclass(frozen=True)
class TrainConfig(_Validated):
    mode: str = "hr"
    lr: float = 1e-3
    batch_size: int = 8
    plateau_epochs: int = 2
    lr_halving: bool = True
    max_epochs: int = 30
    min_lr: float = 1e-5
    betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    grad_clip: float = 5.0
    segment_s: float = 4.0
    deterministic: bool = False
    prefetch_workers: int = 0
    manifest: str = ""
    checkpoint_dir: str = "runs/hr"
    loss: LossConfig = field(default_factory=LossConfig)

    def errors(self) -> list[str]:
        errors = []
        if self.lr <= 0:
            errors.append("lr must be positive")
        if self.plateau_epochs < 1:
            errors.append("plateau_epochs must be >= 1")
        if self.mode not in MODES:
            errors.append(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.batch_size < 1:
            errors.append("batch_size must be >= 1")
        return errors


@dataclass(frozen=True)
class EvalConfig(_Validated):
    split: str = "val"
    pesq: bool = False
    workers: int = 1
    tsos: TsosConfig = field(default_factory=TsosConfig)


@dataclass(frozen=True)
class RunConfig(_Validated):
    seed: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)
    stft: StftConfig = field(default_factory=StftConfig)
    fbank: FbankConfig = field(default_factory=FbankConfig)
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    embedder: EmbedderTrainConfig = field(default_factory=EmbedderTrainConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)

    def to_dict(self) -> dict[str, Any]:
        return to_dict(self)

    def manifest_path(self) -> Path:
        """Explicit ``train.manifest`` or the manifest inside the corpus root."""
        if self.train.manifest:
            return Path(self.train.manifest)
        return Path(self.corpus.root) / MANIFEST_NAME


def conv_freq_sizes(n_bins: int, layers: int, kernel: int = 3, stride: int = 2) -> list[int]:
    """Frequency sizes after each unpadded strided conv: F' = floor((F - k) / s) + 1."""
    sizes = [n_bins]
    for _ in range(layers):
        sizes.append((sizes[-1] - kernel) // stride + 1)
    return sizes[1:]


def to_dict(config: Any) -> dict[str, Any]:
    """Plain-dict echo of a config (tuples become lists so YAML/JSON round-trip)."""

    def convert(value):
        if dataclasses.is_dataclass(value):
            return {f.name: convert(getattr(value, f.name)) for f in dataclasses.fields(value)}
        if isinstance(value, (tuple, list)):
            return [convert(v) for v in value]
        return value

    return convert(config)


def from_dict(cls: type[T], data: dict[str, Any]) -> T:
    """Build a (nested) config dataclass from a plain dict, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"{cls.__name__} expects a mapping, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}  # type: ignore[arg-type]
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        kwargs[name] = _coerce(hints[name], value, f"{cls.__name__}.{name}")
    return cls(**kwargs)


def _coerce(hint: Any, value: Any, where: str) -> Any:
    origin = typing.get_origin(hint)
    if dataclasses.is_dataclass(hint):
        return from_dict(hint, value)  # type: ignore[arg-type]
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where} expects a list")
        return tuple(value)
    if origin in (typing.Union, types.UnionType):
        return value
    if hint is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if hint is str and isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    if hint in (int, float, str, bool) and not isinstance(value, hint):
        raise ConfigError(f"{where} expects {hint.__name__}, got {value!r}")
    return value


def load_config(path: str | Path | None = None, overrides: list[str] | None = None) -> RunConfig:
    """Resolve the effective run configuration.

    Priority: defaults < config file < environment < overrides.

    Args:
        path: Optional YAML config file.
        overrides: ``section.key=value`` strings; values are parsed as YAML scalars.

    Returns:
        Validated RunConfig
    """
    data: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse {path}: {e}") from e

    corpus_root = os.environ.get(CORPUS_ROOT_ENV)
    if corpus_root:
        data.setdefault("corpus", {})["root"] = corpus_root

    for item in overrides or []:
        set_dotted(data, item)

    return from_dict(RunConfig, data).validate()


def set_dotted(data: dict[str, Any], item: str) -> None:
    """Apply one ``a.b.c=value`` override in place."""
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise ConfigError(f"override must look like section.key=value, got {item!r}")
    parts = key.strip().split(".")
    node = data
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot override below scalar {part!r}")
    if parts[-1] in PATH_KEYS:
        node[parts[-1]] = raw.strip()
        return
    try:
        node[parts[-1]] = yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ConfigError(f"bad override value {raw!r}: {e}") from e
