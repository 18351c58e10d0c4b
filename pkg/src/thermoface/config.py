"""Plain key=value config files shared by the CLI, camera profiles and sidecars."""
from __future__ import annotations

from pathlib import Path

from .errors import ConfigError, FormatError


def read_kv_file(path) -> dict[str, str]:
    """Parse `key=value` lines; blank lines and # comments are ignored."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError:
        raise
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise FormatError(f"{path}:{lineno}: empty key")
        values[key] = value.strip()
    return values


def coerce_int(values: dict[str, str], key: str, default: int | None = None) -> int | None:
    if key not in values:
        return default
    try:
        return int(values[key])
    except ValueError:
        raise ConfigError(f"key {key!r} must be an integer, got {values[key]!r}") from None


def coerce_float(values: dict[str, str], key: str, default: float | None = None) -> float | None:
    if key not in values:
        return default
    try:
        return float(values[key])
    except ValueError:
        raise ConfigError(f"key {key!r} must be a number, got {values[key]!r}") from None


def coerce_bool(values: dict[str, str], key: str, default: bool | None = None) -> bool | None:
    if key not in values:
        return default
    raw = values[key].lower()
    if raw in ("1", "true", "yes", "on"):
        return True
    if raw in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"key {key!r} must be a boolean, got {values[key]!r}")
