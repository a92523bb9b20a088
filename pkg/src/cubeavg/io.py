"""Reading configuration files and writing deterministic output.

System files (JSON or TOML)::

    {"points": ["a", "b", "c"], "weights": ["1/3", "1/3", "1/3"],
     "transformations": [{"name": "T1", "image": ["b", "c", "a"]}],
     "require_commuting": true}

Images may use point labels or integer indices.  Function files hold
``{"values": [...]}`` (a list in point order or a label -> value map) or just
the bare list.  Rationals are written as ``"p/q"`` strings.
"""

from __future__ import annotations

import json
import sys
from fractions import Fraction
from pathlib import Path

from .averages import CubeSpec
from .combinatorics import LatticeSubset
from .systems import Observable, ProbabilitySpace, System, format_rational, parse_rational, validate_system

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib


class ConfigError(ValueError):
    pass


def load_config(path) -> dict | list:
    path = Path(path)
    try:
        if path.suffix.lower() == ".toml":
            with path.open("rb") as fh:
                return tomllib.load(fh)
        with path.open() as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}") from None
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None


def _resolve_point(ref, index: dict[str, int], n: int) -> int:
    if isinstance(ref, bool):
        raise ConfigError(f"bad point reference {ref!r}")
    if isinstance(ref, int):
        if not 0 <= ref < n:
            raise ConfigError(f"point index {ref} out of range")
        return ref
    if isinstance(ref, str) and ref in index:
        return index[ref]
    raise ConfigError(f"unknown point {ref!r}")


def system_from_dict(cfg: dict, require_commuting: bool | None = None) -> System:
    try:
        points = cfg["points"]
        raw_ts = cfg["transformations"]
    except (KeyError, TypeError):
        raise ConfigError("system config needs 'points' and 'transformations'") from None
    if isinstance(points, int):
        labels = [str(k) for k in range(points)]
    else:
        labels = [str(p) for p in points]
    if len(set(labels)) != len(labels):
        raise ConfigError("duplicate point labels")
    n = len(labels)
    index = {lab: k for k, lab in enumerate(labels)}
    weights = cfg.get("weights")
    if weights is None:
        weights = [Fraction(1, n)] * n
    if len(weights) != n:
        raise ConfigError(f"{len(weights)} weights for {n} points")
    images = []
    for t in raw_ts:
        image = t["image"] if isinstance(t, dict) else t
        images.append([_resolve_point(ref, index, n) for ref in image])
    if require_commuting is None:
        require_commuting = bool(cfg.get("require_commuting", True))
    system = validate_system(weights, images, require_commuting=require_commuting)
    space = ProbabilitySpace(system.space.weights, tuple(labels))
    return System(space, system.transformations, system.commuting)


def load_system(path, require_commuting: bool | None = None) -> System:
    cfg = load_config(path)
    if not isinstance(cfg, dict):
        raise ConfigError("system config must be a mapping")
    return system_from_dict(cfg, require_commuting)


def system_to_dict(system: System) -> dict:
    labels = list(system.space.labels) if system.space.labels else [str(k) for k in range(system.size)]
    return {
        "points": labels,
        "weights": [format_rational(w) for w in system.space.weights],
        "transformations": [
            {"name": f"T{i}", "image": [labels[y] for y in t.image]}
            for i, t in enumerate(system.transformations, start=1)
        ],
        "require_commuting": system.commuting,
    }


def observable_from_data(data, system: System) -> Observable:
    if isinstance(data, dict) and "values" in data:
        data = data["values"]
    if isinstance(data, dict):
        labels = system.space.labels or tuple(str(k) for k in range(system.size))
        missing = [lab for lab in labels if lab not in data]
        if missing:
            raise ConfigError(f"function misses points {missing}")
        data = [data[lab] for lab in labels]
    if not isinstance(data, list) or len(data) != system.size:
        raise ConfigError(f"function needs {system.size} values")
    try:
        return Observable(tuple(parse_rational(v) for v in data), system.space)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(str(exc)) from None


def load_observable(ref, system: System, base: Path) -> Observable:
    if isinstance(ref, str):
        return observable_from_data(load_config(base / ref), system)
    return observable_from_data(ref, system)


def observable_to_list(f: Observable) -> list[str]:
    return [format_rational(v) for v in f.values]


def load_cube_spec(path, require_commuting: bool | None = None) -> CubeSpec:
    path = Path(path)
    cfg = load_config(path)
    if not isinstance(cfg, dict) or "system" not in cfg:
        raise ConfigError("cube spec needs a 'system' entry")
    base = path.parent
    sys_ref = cfg["system"]
    system = load_system(base / sys_ref, require_commuting) if isinstance(sys_ref, str) else (
        system_from_dict(sys_ref, require_commuting)
    )
    functions = {}
    for key, ref in (cfg.get("functions") or {}).items():
        functions[str(key)] = load_observable(ref, system, base)
    box = cfg.get("box")
    try:
        return CubeSpec(system, functions, tuple(tuple(iv) for iv in box) if box else None, cfg.get("rank_cap"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_subset(path) -> LatticeSubset:
    cfg = load_config(path)
    try:
        return LatticeSubset.from_points(cfg["moduli"], cfg.get("members", []))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad subset file: {exc}") from None


def dumps(payload) -> str:
    """Canonical JSON: sorted keys, fixed separators, trailing newline."""
    return json.dumps(payload, sort_keys=True, indent=2, default=_default) + "\n"


def _default(obj):
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, Observable):
        return observable_to_list(obj)
    if isinstance(obj, tuple):
        return list(obj)
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")
