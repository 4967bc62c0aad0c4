"""Service configuration: JSON file values, then environment overrides."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

from ..errors import ConfigurationError

ENV_PREFIX = "QAOABATCH_"


@dataclass
class GatewayConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    heartbeat_interval: float = 5.0
    timeout: float = 60.0
    max_attempts: int = 3
    journal: str | None = None
    profiles: str | None = None
    max_request_bytes: int = 256 << 20


@dataclass
class WorkerConfig:
    host: str = "127.0.0.1"
    port: int = 0
    capacity: int = 2
    gateway: str = "http://127.0.0.1:8080"
    heartbeat_interval: float = 5.0
    worker_id: str | None = None
    profiles: str | None = None


def _coerce(value, default, name):
    if default is None or isinstance(default, str):
        return None if value in (None, "") else str(value)
    try:
        return type(default)(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"bad value {value!r} for {name}") from None


def load_config(cls, path=None, env=None, **overrides):
    """Build ``cls`` from defaults, an optional JSON file, ``QAOABATCH_*`` env vars, then kwargs."""
    env = os.environ if env is None else env
    values = {}
    if path:
        try:
            values.update(json.loads(Path(path).read_text()))
        except (OSError, ValueError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    known = {f.name: f.default for f in fields(cls)}
    unknown = set(values) - set(known)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    for name in known:
        key = ENV_PREFIX + name.upper()
        if key in env:
            values[name] = env[key]
    values.update({k: v for k, v in overrides.items() if v is not None})
    return cls(**{k: _coerce(v, known[k], k) for k, v in values.items()})
