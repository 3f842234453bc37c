"""Runtime configuration for the command-line tool.

Sources, lowest to highest precedence: built-in defaults, a flat key=value
config file, the UNOTE_DATA_DIR environment variable, command-line flags.
The config file deliberately allows only flat scalar keys (no sections, no
nesting), e.g.:

    # unote.toml
    data_dir = "/var/lib/unote"
    listen = "127.0.0.1:8787"
    timezone = "Europe/Paris"
    gap_merge_ms = 30000
    log_level = "INFO"
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import UnoteError
from .temporal import GAP_MERGE_MS

ENV_DATA_DIR = "UNOTE_DATA_DIR"

_KNOWN_KEYS = {"data_dir", "listen", "timezone", "gap_merge_ms", "log_level"}


@dataclass
class CliConfig:
    data_dir: Path
    listen: str = "127.0.0.1:8787"
    timezone: str = "UTC"
    gap_merge_ms: int = GAP_MERGE_MS
    log_level: str = "INFO"

    def __post_init__(self) -> None:
        self.data_dir = Path(self.data_dir)
        if self.gap_merge_ms <= 0:
            raise UnoteError(f"gap_merge_ms must be > 0, got {self.gap_merge_ms}")

    @property
    def listen_host_port(self) -> tuple[str, int]:
        host, _, port = self.listen.rpartition(":")
        if not host or not port.isdigit():
            raise UnoteError(f"bad listen address {self.listen!r}, want host:port")
        return host, int(port)


def parse_flat_config(text: str) -> dict[str, str]:
    """Parse `key = value` lines; '#' comments; optional quotes on values."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UnoteError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        if not key:
            raise UnoteError(f"config line {lineno}: empty key")
        out[key] = value
    return out


def load_config(
    config_path: Optional[Path] = None,
    data_dir: Optional[str] = None,
    listen: Optional[str] = None,
    log_level: Optional[str] = None,
) -> CliConfig:
    values: dict[str, str] = {}
    if config_path is not None:
        path = Path(config_path)
        if not path.is_file():
            raise UnoteError(f"config file not found: {path}")
        values.update(parse_flat_config(path.read_text()))
        unknown = set(values) - _KNOWN_KEYS
        if unknown:
            raise UnoteError(f"unknown config keys: {sorted(unknown)}")
    env_dir = os.environ.get(ENV_DATA_DIR)
    if env_dir:
        values["data_dir"] = env_dir
    if data_dir is not None:
        values["data_dir"] = data_dir
    if listen is not None:
        values["listen"] = listen
    if log_level is not None:
        values["log_level"] = log_level
    if "data_dir" not in values:
        values["data_dir"] = "./unote-data"
    try:
        gap = int(values.get("gap_merge_ms", GAP_MERGE_MS))
    except ValueError:
        raise UnoteError(f"gap_merge_ms is not an integer: {values['gap_merge_ms']!r}") from None
    config = CliConfig(
        data_dir=Path(values["data_dir"]),
        listen=values.get("listen", "127.0.0.1:8787"),
        timezone=values.get("timezone", "UTC"),
        gap_merge_ms=gap,
        log_level=values.get("log_level", "INFO"),
    )
    logging.basicConfig(level=getattr(logging, config.log_level.upper(), logging.INFO))
    return config
