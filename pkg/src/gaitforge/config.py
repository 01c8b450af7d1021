"""Plain-text key-value configuration files.

The grammar is a flat TOML subset, one ``key = value`` pair per line:

    # comment
    model = "purcell"        # quoted string
    cn = 2.0                 # float (also accepts ints, inf-free)
    position_weights = [0.25, 0.5, 0.25]   # list of numbers
    classical_added_mass = true            # boolean

Unknown keys are rejected so typos surface early.  See README for the full
set of recognized keys per model.
"""

from __future__ import annotations

import re

from .connection import BodyFrameSpec
from .errors import ConfigError
from .models import SwimmerModel, perfect_fluid_model, purcell_model

_MODEL_KEYS = {
    "purcell": {"l0", "l1", "l2", "ct", "cn"},
    "perfect_fluid": {"rho", "eta", "alpha", "total_length", "added_mass_form"},
}

_FRAME_KEYS = {"frame", "position_weights", "orientation_weights"}


def parse_kv(text):
    """Parse the key-value grammar into a dict."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", key):
            raise ConfigError(f"line {lineno}: bad key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = _parse_value(value.strip(), lineno)
    return out


def _parse_value(value, lineno):
    # Trailing comments are only stripped outside quoted strings.
    if not value.startswith('"'):
        value = value.split("#", 1)[0].strip()
    if value.startswith('"'):
        m = re.fullmatch(r'"([^"]*)"\s*(?:#.*)?', value)
        if not m:
            raise ConfigError(f"line {lineno}: unterminated string")
        return m.group(1)
    if value.startswith("["):
        if not value.endswith("]"):
            raise ConfigError(f"line {lineno}: unterminated list")
        inner = value[1:-1].strip()
        if not inner:
            return []
        return [_parse_scalar(item.strip(), lineno) for item in inner.split(",")]
    return _parse_scalar(value, lineno)


def _parse_scalar(value, lineno):
    if value in ("true", "false"):
        return value == "true"
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse value {value!r}") from None


def load_model_config(path) -> tuple[SwimmerModel, BodyFrameSpec]:
    """Load a swimmer model (and optional frame spec) from a config file."""
    with open(path, encoding="utf-8") as fh:
        data = parse_kv(fh.read())
    return model_from_dict(data)


def model_from_dict(data) -> tuple[SwimmerModel, BodyFrameSpec]:
    data = dict(data)
    kind = data.pop("model", None)
    if kind not in _MODEL_KEYS:
        raise ConfigError(f"config must set model = \"purcell\" or \"perfect_fluid\", got {kind!r}")

    frame = _frame_from_dict(data)
    unknown = set(data) - _MODEL_KEYS[kind]
    if unknown:
        raise ConfigError(f"unknown keys for model {kind!r}: {sorted(unknown)}")
    try:
        if kind == "purcell":
            model = purcell_model(**data)
        else:
            model = perfect_fluid_model(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return model, frame


def _frame_from_dict(data) -> BodyFrameSpec:
    kind = data.pop("frame", "middle-link")
    pw = data.pop("position_weights", None)
    ow = data.pop("orientation_weights", None)
    if kind == "middle-link":
        if pw is not None or ow is not None:
            raise ConfigError("weights are only valid with frame = \"weighted\"")
        return BodyFrameSpec.middle_link()
    if kind == "weighted":
        if pw is None or ow is None:
            raise ConfigError("frame = \"weighted\" requires position_weights and orientation_weights")
        return BodyFrameSpec.weighted(pw, ow)
    raise ConfigError(f"unknown frame kind {kind!r}")


def frame_to_config(frame: BodyFrameSpec) -> str:
    """Serialize a frame spec back into the config grammar."""
    if frame.kind == "middle-link":
        return 'frame = "middle-link"\n'
    pw = ", ".join(f"{w:.17g}" for w in frame.position_weights)
    ow = ", ".join(f"{w:.17g}" for w in frame.orientation_weights)
    return f'frame = "weighted"\nposition_weights = [{pw}]\norientation_weights = [{ow}]\n'
