"""
Key-Value Config Module

Parses and writes the plain-text `key = value` configuration format shared by the simulator and
the experiment harness, and maps parsed values onto config dataclasses by their declared field
types. Unknown keys are always an error.

Functions:
    parse_key_values(): Parse config text into an ordered dict of raw strings.
    read_key_value_file(): Parse a config file.
    write_key_value_file(): Write a mapping in the same format.
    apply_overrides(): Build a config dataclass from defaults plus raw string overrides.
    dataclass_to_strings(): Render a config dataclass back into raw strings.
"""

import dataclasses
from pathlib import Path
from typing import Any, Dict, Mapping, Tuple, Type, TypeVar, Union, get_args, get_origin, get_type_hints

from aeolus.errors import ConfigError

ConfigT = TypeVar("ConfigT")


def parse_key_values(text: str, source: str = "<string>") -> Dict[str, str]:
    """Parse `key = value` lines; `#` starts a comment, blank lines are skipped.

    Raises:
        ConfigError: On a line without `=`, an empty key, or a repeated key.
    """
    values: Dict[str, str] = {}
    for line_number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f'{source}:{line_number}: expected "key = value", got "{line}"')
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{line_number}: empty key")
        if key in values:
            raise ConfigError(f'{source}:{line_number}: key="{key}" is set twice')
        values[key] = value
    return values


def read_key_value_file(path: Union[str, Path]) -> Dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError(f'Config file "{path}" not found') from None
    return parse_key_values(text, source=str(path))


def write_key_value_file(path: Union[str, Path], values: Mapping[str, str]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{key} = {value}\n" for key, value in values.items()))


def _coerce(raw: str, hint: Any, key: str) -> Any:
    origin, args = get_origin(hint), get_args(hint)
    try:
        if origin is Union and type(None) in args:
            if raw.lower() in ("none", ""):
                return None
            inner = next(a for a in args if a is not type(None))
            return _coerce(raw, inner, key)
        if origin in (tuple, Tuple):
            item_type = args[0] if args else str
            return tuple(_coerce(item.strip(), item_type, key) for item in raw.split(",") if item.strip())
        if hint is bool:
            lowered = raw.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return lowered in ("true", "1", "yes")
        if hint in (int, float, str):
            return hint(raw)
    except ValueError:
        raise ConfigError(f'Config key="{key}" cannot parse value "{raw}" as {hint}') from None
    raise ConfigError(f'Config key="{key}" has an unsupported type {hint}')


def _render(value: Any) -> str:
    if isinstance(value, tuple):
        return ", ".join(_render(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def apply_overrides(
    config_type: Type[ConfigT], overrides: Mapping[str, str], base: ConfigT = None
) -> ConfigT:
    """Build a config dataclass from `base` (or the defaults) plus raw string overrides.

    Args:
        config_type (Type[ConfigT]): The config dataclass.
        overrides (Mapping[str, str]): Raw values keyed by field name.
        base (ConfigT, optional): Starting values. Defaults to the dataclass defaults.

    Raises:
        ConfigError: On an unknown key or a value that does not parse.

    Returns:
        ConfigT: The new config; its own validation runs on construction.
    """
    hints = get_type_hints(config_type)
    names = {f.name for f in dataclasses.fields(config_type)}
    unknown = sorted(set(overrides) - names)
    if unknown:
        raise ConfigError(f"Unknown {config_type.__name__} keys: {', '.join(unknown)}")
    parsed = {key: _coerce(raw, hints[key], key) for key, raw in overrides.items()}
    if base is None:
        base = config_type()
    try:
        return dataclasses.replace(base, **parsed)
    except ValueError as err:
        raise ConfigError(str(err)) from None


def dataclass_to_strings(config: Any, prefix: str = "") -> Dict[str, str]:
    """Render every field of a config dataclass as `prefix + name -> raw string`."""
    return {
        f"{prefix}{field.name}": _render(getattr(config, field.name))
        for field in dataclasses.fields(config)
    }
