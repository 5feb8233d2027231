"""Line-based run configuration: ``section.key = value`` text files.

One flat namespace with dotted sections ("model.levels = 3"); '#' starts a
comment.  Unknown keys are rejected so typos cannot silently fall back to
defaults.  The same serialization is embedded in checkpoints and echoed
into every output directory.
"""

from __future__ import annotations

from dataclasses import fields

from .errors import ConfigError
from .nn.model import HourglassConfig
from .train import TrainConfig

MODEL_PREFIX = "model."
TRAIN_PREFIX = "train."

_MODEL_FIELDS = {f.name for f in fields(HourglassConfig)}
_TRAIN_FIELDS = {f.name for f in fields(TrainConfig)}


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def read_config_file(path) -> dict[str, str]:
    with open(path) as fh:
        return parse_config_text(fh.read())


def format_config(entries: dict) -> str:
    return "\n".join(f"{k} = {v}" for k, v in entries.items()) + "\n"


def _convert(value: str, target_type, key: str):
    try:
        if target_type is bool:
            if value.lower() in ("true", "1", "yes"):
                return True
            if value.lower() in ("false", "0", "no"):
                return False
            raise ValueError(value)
        if target_type is tuple:
            return tuple(int(v.strip()) for v in value.split(","))
        return target_type(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {value!r}") from exc


def _pick(entries: dict, prefix: str, known: set, type_of) -> dict:
    out = {}
    for key, value in entries.items():
        if not key.startswith(prefix):
            continue
        name = key[len(prefix) :]
        if name not in known:
            raise ConfigError(f"unknown key {key!r}")
        out[name] = _convert(str(value), type_of(name), key)
    return out


def model_config_from(entries: dict, **overrides) -> HourglassConfig:
    def type_of(name):
        types = {
            "B_in": int, "C_in": int, "num_classes": int, "levels": int,
            "channel_schedule": tuple, "blocks_per_level": int, "K": int,
            "filter_mode": str, "bottleneck_ratio": int, "skip_mode": str, "arch": str,
        }
        return types[name]

    kwargs = _pick(entries, MODEL_PREFIX, _MODEL_FIELDS, type_of)
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return HourglassConfig(**kwargs)


def train_config_from(entries: dict, **overrides) -> TrainConfig:
    def type_of(name):
        types = {
            "epochs": int, "batch_size": int, "learning_rate": float,
            "beta1": float, "beta2": float, "eps": float, "seed": int,
            "train_orientation": str, "eval_orientation": str,
        }
        return types[name]

    kwargs = _pick(entries, TRAIN_PREFIX, _TRAIN_FIELDS, type_of)
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig(**kwargs)


def validate_known_keys(entries: dict) -> None:
    """Reject any key outside the model./train. schema (plus 'epoch' metadata)."""
    for key in entries:
        if key == "epoch":
            continue
        if key.startswith(MODEL_PREFIX):
            if key[len(MODEL_PREFIX) :] not in _MODEL_FIELDS:
                raise ConfigError(f"unknown key {key!r}")
        elif key.startswith(TRAIN_PREFIX):
            if key[len(TRAIN_PREFIX) :] not in _TRAIN_FIELDS:
                raise ConfigError(f"unknown key {key!r}")
        else:
            raise ConfigError(f"unknown key {key!r}")


def config_entries(model_cfg: HourglassConfig | None, train_cfg: TrainConfig | None, epoch=None) -> dict:
    out: dict[str, str] = {}
    if model_cfg is not None:
        for f in fields(HourglassConfig):
            v = getattr(model_cfg, f.name)
            out[MODEL_PREFIX + f.name] = ",".join(str(c) for c in v) if isinstance(v, tuple) else str(v)
    if train_cfg is not None:
        for f in fields(TrainConfig):
            out[TRAIN_PREFIX + f.name] = str(getattr(train_cfg, f.name))
    if epoch is not None:
        out["epoch"] = str(epoch)
    return out
