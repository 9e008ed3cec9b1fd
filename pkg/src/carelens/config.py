"""Service configuration: JSON key-value file with environment overrides.

Keys are grouped into sections (server, registry, chat, gateway, affect,
prompts); `CARELENS_<SECTION>_<KEY>` environment variables override file
values. Values from the environment parse as JSON when possible, else as
plain strings.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError

ENV_PREFIX = "CARELENS_"

DEFAULTS = {
    "server": {"host": "127.0.0.1", "port": 8000},
    "registry": {"path": "registry.json", "cohort": "cohort"},
    "chat": {"log_path": "chat_log.jsonl", "queries": None},
    "gateway": {"mock": True, "url": "", "key": "", "timeout_s": 30.0},
    "affect": {"hysteresis": 0.10, "dead_zone": 0.1},
    "prompts": {"history_window": 20, "attachment_cap": 4},
}


@dataclass
class AppConfig:
    sections: dict = field(default_factory=dict)

    def get(self, dotted: str, default=None):
        section, _, key = dotted.partition(".")
        return self.sections.get(section, {}).get(key, default)

    def section(self, name: str) -> dict:
        return dict(self.sections.get(name, {}))


def _merge(base: dict, extra: dict) -> dict:
    out = {k: dict(v) for k, v in base.items()}
    for section, values in extra.items():
        if not isinstance(values, dict):
            raise ConfigError(f"section {section!r} must hold key-value pairs")
        out.setdefault(section, {}).update(values)
    return out


def _env_overrides(environ) -> dict:
    overrides: dict = {}
    for name, raw in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):].lower()
        section, _, key = rest.partition("_")
        if not key:
            continue
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        overrides.setdefault(section, {})[key] = value
    return overrides


def load_config(path: Optional[str] = None, environ=None) -> AppConfig:
    sections = {k: dict(v) for k, v in DEFAULTS.items()}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                sections = _merge(sections, json.load(fh))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}")
    env = environ if environ is not None else os.environ
    sections = _merge(sections, _env_overrides(env))
    return AppConfig(sections=sections)
