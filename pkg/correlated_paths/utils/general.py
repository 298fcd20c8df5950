"""Parsing helpers for command-line and config values."""

import json
import subprocess  # noqa: S404
from pathlib import Path

from correlated_paths import __version__
from correlated_paths.exceptions import ValidationError

TRUTHY = {"true", "yes", "on", "1", "y", "t"}
FALSY = {"false", "no", "off", "0", "n", "f"}
CLASS_KEYS = {"k", "start", "start_node", "oriented"}


def is_truthy(value):
    """Return the boolean a config string stands for, or None if it is not a boolean word."""
    lowered = str(value).strip().lower()
    if lowered in TRUTHY:
        return True
    if lowered in FALSY:
        return False
    return None


def parse_value(raw):
    """Parse an override value: JSON first, then boolean words, then the raw string."""
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        pass
    truthy = is_truthy(raw)
    return raw if truthy is None else truthy


def parse_assignment(text):
    """Split ``dotted.key=value`` into the key and its parsed value."""
    key, sep, raw = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ValidationError(f"Override {text!r} is not of the form dotted.key=value", key=key or None)
    return key, parse_value(raw.strip())


def set_dotted(data, key, value):
    """Assign ``value`` at ``key`` (``a.b.c``) inside nested dicts, creating levels as needed."""
    parts = key.split(".")
    node = data
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ValidationError(f"Cannot set {key}: {part} is not a table", key=key)
        node = child
    node[parts[-1]] = value


def parse_coords(text):
    """Parse ``"0,0,0"`` into a coordinate list."""
    try:
        return [int(token) for token in str(text).split(",") if token.strip()]
    except ValueError as err:
        raise ValidationError(f"Invalid coordinates {text!r}", key="path_class.start_node") from err


def parse_class_spec(text):
    """Parse a path class string such as ``k=4;start=unknown;oriented=true`` into config values."""
    values = {}
    for token in str(text).split(";"):
        if not token.strip():
            continue
        key, sep, raw = token.partition("=")
        key = key.strip()
        if key not in CLASS_KEYS:
            raise ValidationError(f"Unknown path class key {key!r}; expected one of {sorted(CLASS_KEYS)}", key=key)
        if not sep:
            values[key] = True if key == "oriented" else None
            if values[key] is None:
                raise ValidationError(f"Path class key {key!r} needs a value", key=key)
            continue
        if key == "start_node":
            values[key] = parse_coords(raw)
        else:
            values[key] = parse_value(raw.strip())
    return values


def parse_float_list(text):
    """Parse ``"0,0.5,0.9"`` into a list of floats."""
    try:
        return [float(token) for token in str(text).split(",") if token.strip()]
    except ValueError as err:
        raise ValidationError(f"Invalid number list {text!r}") from err


def describe_version():
    """Return ``git describe`` output inside a checkout, ``v<version>`` otherwise."""
    try:
        completed = subprocess.run(  # noqa: S603, S607
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            check=True,
            text=True,
            timeout=5,
        )
    except (OSError, subprocess.SubprocessError):
        return f"v{__version__}"
    return completed.stdout.strip() or f"v{__version__}"
