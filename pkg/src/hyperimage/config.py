"""TOML experiment configuration.

Every table is optional; missing keys take the library defaults.  Unknown
keys are rejected so that typos surface as configuration errors.
"""

from __future__ import annotations

import sys
from dataclasses import fields
from pathlib import Path

from .detection import DetectorConfig
from .engine import BackendConfig, ConfigError, ExperimentConfig, GridConfig, MeasurementSetting
from .optics import TelescopeConfig
from .pattern import PhasePattern, generate_checkerboard, generate_cross, generate_uniform, load_pattern
from .pnm import PGMFormatError
from .spatial import Photon1Mode, SourceParams

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_TABLES = ("source", "pattern", "telescope", "detector", "setting", "grid", "backend", "geometry",
           "chsh", "fringe", "slit")


def _names(cls):
    return {f.name for f in fields(cls)}


def _check_keys(table: dict, allowed, prefix: str):
    for key in table:
        if key not in allowed:
            raise ConfigError(f"{prefix}.{key}", "unknown key")


def _build(cls, table: dict, prefix: str, **extra):
    _check_keys(table, _names(cls), prefix)
    try:
        return cls(**{**table, **extra})
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        msg = str(exc)
        name = next((k for k in table if k in msg), None)
        raise ConfigError(f"{prefix}.{name}" if name else prefix, msg) from exc


def _angle(value, name):
    if value is None or value == "absent":
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(name, f"expected degrees or 'absent', got {value!r}")
    return float(value)


def _pattern(table: dict, base: Path):
    allowed = {"kind", "path", "pitch_mm", "mapping", "threshold", "origin_mm", "square_mm", "n_squares",
               "shape", "phi", "size_mm", "arm_mm"}
    _check_keys(table, allowed, "pattern")
    kind = table.get("kind", "checkerboard" if "path" not in table else "file")
    origin = tuple(table.get("origin_mm", (0.0, 0.0)))
    try:
        if kind == "checkerboard":
            sq, n = table.get("square_mm", 1.0), table.get("n_squares", 4)
            p = generate_checkerboard(sq, n)
            return PhasePattern(p.grid, p.pitch, origin), f"checkerboard({sq}, {n})"
        if kind == "uniform":
            shape = tuple(table.get("shape", (4, 4)))
            return generate_uniform(shape, table.get("pitch_mm", 1.0), table.get("phi", 0.0), origin), f"uniform{shape}"
        if kind == "cross":
            p = generate_cross(table.get("size_mm", 4.0), table.get("arm_mm", 1.0), table.get("pitch_mm", 0.25))
            return p, "cross"
        if kind == "file":
            if "path" not in table:
                raise ConfigError("pattern.path", "required when kind = 'file'")
            if "pitch_mm" not in table:
                raise ConfigError("pattern.pitch_mm", "required when kind = 'file'")
            path = Path(table["path"])
            if not path.is_absolute():
                path = base / path
            if not path.exists():
                raise ConfigError("pattern.path", f"file not found: {path}")
            p = load_pattern(path, table["pitch_mm"], table.get("mapping", "binary"),
                             table.get("threshold", 128), origin)
            return p, str(path)
    except ConfigError:
        raise
    except PGMFormatError as exc:
        raise ConfigError("pattern.path", str(exc)) from exc
    except (TypeError, ValueError, OSError) as exc:
        raise ConfigError("pattern", str(exc)) from exc
    raise ConfigError("pattern.kind", f"expected checkerboard, uniform, cross or file, got {kind!r}")


def _setting(table: dict) -> MeasurementSetting:
    allowed = {"delta1", "delta2", "gate", "photon1_mode", "x0_mm", "y0_mm", "aperture_mm", "slit"}
    _check_keys(table, allowed, "setting")
    mode_kind = table.get("photon1_mode", "superposition")
    try:
        mode = Photon1Mode(mode_kind, table.get("x0_mm", 0.0), table.get("y0_mm", 0.0),
                           table.get("aperture_mm", 0.1), table.get("slit"))
    except (TypeError, ValueError) as exc:
        raise ConfigError("setting.photon1_mode", str(exc)) from exc
    return MeasurementSetting(
        _angle(table.get("delta1", -45.0), "setting.delta1"),
        _angle(table.get("delta2", -45.0), "setting.delta2"),
        mode,
        table.get("gate", "coincidence"),
    )


def config_from_dict(doc: dict, base_dir=".") -> tuple:
    """Build ``(ExperimentConfig, extras)`` from a parsed document.

    ``extras`` holds the per-command tables ``chsh``, ``fringe`` and ``slit``.
    """
    for key in doc:
        if key not in _TABLES and key != "seed":
            raise ConfigError(key, "unknown table")
        if key != "seed" and not isinstance(doc[key], dict):
            raise ConfigError(key, "expected a table")
    seed = doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise ConfigError("seed", f"expected a non-negative integer, got {seed!r}")
    geometry = doc.get("geometry", {})
    _check_keys(geometry, {"d1_m", "d2_m"}, "geometry")
    for key in geometry:
        if isinstance(geometry[key], bool) or not isinstance(geometry[key], (int, float)):
            raise ConfigError(f"geometry.{key}", f"expected metres, got {geometry[key]!r}")
    pattern, pattern_source = _pattern(doc.get("pattern", {}), Path(base_dir))
    telescope = doc.get("telescope", {})
    if "focal_lengths_mm" in telescope:
        telescope = {**telescope, "focal_lengths_mm": tuple(telescope["focal_lengths_mm"])}
    cfg = ExperimentConfig(
        source=_build(SourceParams, doc.get("source", {}), "source"),
        pattern=pattern,
        telescope=_build(TelescopeConfig, telescope, "telescope"),
        detector=_build(DetectorConfig, doc.get("detector", {}), "detector"),
        setting=_setting(doc.get("setting", {})),
        grid=_build(GridConfig, doc.get("grid", {}), "grid"),
        backend=_build(BackendConfig, doc.get("backend", {}), "backend"),
        d1_mm=1000.0 * float(geometry.get("d1_m", 1.247)),
        d2_mm=1000.0 * float(geometry.get("d2_m", 0.89)),
        seed=seed,
        pattern_source=pattern_source,
    )
    extras = {k: doc.get(k, {}) for k in ("chsh", "fringe", "slit")}
    _check_keys(extras["chsh"], {"angles"}, "chsh")
    _check_keys(extras["fringe"], {"delta2", "delta1"}, "fringe")
    _check_keys(extras["slit"], {"orientation", "positions_mm", "width_mm"}, "slit")
    return cfg, extras


def load_config(path) -> tuple:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError("config", f"file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"{path}: {exc}") from exc
    return config_from_dict(doc, path.parent)
