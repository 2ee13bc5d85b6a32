"""Experiment config loader for geodesic-dcd.

Loads experiment documents (JSON) either from a file path or by name from
the configs bundled with the package, and layers them over defaults.
"""

import copy
import json
import os
from importlib.resources import files
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from geodesic_dcd.errors import ConfigError

CONFIG_SCHEMA_VERSION = 1

OUT_DIR_ENV = "GEODESIC_DCD_OUT"


def _bundled_dir() -> Path:
    """Locate the bundled configs directory (installed package or source tree)."""
    try:
        path = Path(str(files("geodesic_dcd") / "configs"))
        if path.exists():
            return path
    except (ModuleNotFoundError, TypeError):
        pass
    return Path(__file__).resolve().parent.parent / "configs"


def bundled_config_names() -> List[str]:
    """Names of the configs shipped with the package (without ``.json``)."""
    return sorted(p.stem for p in _bundled_dir().glob("*.json"))


def resolve_config_path(name_or_path: Union[str, Path]) -> Path:
    """Resolve ``--config`` values.

    Args:
        name_or_path: A file path, or the name of a bundled config such as ``fig5``

    Returns:
        Path to an existing JSON file

    Raises:
        ConfigError: Neither a file nor a bundled config of that name exists
    """
    path = Path(name_or_path)
    if path.is_file():
        return path

    bundled = _bundled_dir() / f"{path.stem}.json"
    if path.suffix in ("", ".json") and path.parent == Path(".") and bundled.is_file():
        return bundled

    raise ConfigError(f"config file not found: {name_or_path}", field="config")


def merge_config(defaults: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Deep-merge ``overrides`` into a copy of ``defaults``.

    Nested dicts merge key by key; any other value in ``overrides`` replaces
    the default outright (lists included).

    Args:
        defaults: Default document
        overrides: User document

    Returns:
        Merged document (inputs are not modified)
    """
    result = copy.deepcopy(defaults)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(result.get(key), dict):
            result[key] = merge_config(result[key], value)
        else:
            result[key] = copy.deepcopy(value)
    return result


def load_config(name_or_path: Union[str, Path],
                defaults: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Load an experiment document.

    Args:
        name_or_path: File path or bundled config name
        defaults: Optional defaults layered under the document

    Returns:
        The merged document. ``out_dir`` falls back to $GEODESIC_DCD_OUT.

    Raises:
        ConfigError: Missing file, invalid JSON, or unsupported schema_version

    Example:
        >>> cfg = load_config("fig5")
        >>> cfg["pipeline"]["method"]["method"]
        'NSC'
    """
    path = resolve_config_path(name_or_path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            document = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON at line {e.lineno}: {e.msg}", field=str(path))
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}", field=str(path))

    if not isinstance(document, dict):
        raise ConfigError("top level must be an object", field=str(path))

    version = document.get("schema_version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"unsupported version {version!r}", field="schema_version")

    merged = merge_config(defaults or {}, document)
    merged["schema_version"] = CONFIG_SCHEMA_VERSION
    if not merged.get("out_dir") and os.environ.get(OUT_DIR_ENV):
        merged["out_dir"] = os.environ[OUT_DIR_ENV]
    merged.setdefault("_source", str(path))
    return merged
