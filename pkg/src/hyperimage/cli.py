"""Command-line entry point.

Exit codes: 0 success, 1 configuration or validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__, analysis, detection, engine, pattern
from .config import config_from_dict, load_config
from .engine import ConfigError
from .pnm import PGMFormatError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _floats(text: str, name: str, count: int | None = None) -> list:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(name, f"expected comma-separated numbers, got {text!r}") from exc
    if count is not None and len(vals) != count:
        raise ConfigError(name, f"expected {count} values, got {len(vals)}")
    return vals


def _load(args):
    if args.config is None:
        return config_from_dict({})
    return load_config(args.config)


def _apply_flags(cfg: engine.ExperimentConfig, args) -> engine.ExperimentConfig:
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "backend", None):
        kind = "montecarlo" if args.backend in ("mc", "montecarlo") else "analytic"
        cfg = cfg.with_backend(kind=kind)
    if getattr(args, "n_pairs", None) is not None:
        cfg = cfg.with_backend(n_pairs=args.n_pairs)
    if getattr(args, "workers", None) is not None:
        cfg = cfg.with_backend(workers=args.workers)
    if cfg.backend.kind == "montecarlo" and cfg.seed is None:
        raise ConfigError("seed", "the montecarlo backend needs --seed (or 'seed' in the config)")
    return cfg


def _write_manifest(out: Path, command: str, cfg, outputs: list, started: float, extra=None) -> Path:
    manifest = {
        "command": command,
        "tool_version": __version__,
        "versions": {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__},
        "seed": cfg.seed if cfg is not None else None,
        "config": cfg.echo() if cfg is not None else None,
        "config_sha256": cfg.config_hash() if cfg is not None else None,
        "outputs": sorted(str(Path(p).relative_to(out)) for p in outputs),
        "wall_time_s": time.perf_counter() - started,
    }
    if extra:
        manifest.update(extra)
    path = out / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=detection._json_default)
        fh.write("\n")
    return path


def _write_json(path: Path, obj) -> Path:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=detection._json_default)
        fh.write("\n")
    return path


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


# --------------------------------------------------------------- commands

def cmd_image(args) -> int:
    started = time.perf_counter()
    cfg, _ = _load(args)
    cfg = _apply_flags(cfg, args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    res = engine.run_imaging(cfg)
    outputs = []
    for name, frame in (("raw", res.raw), ("background", res.background), ("corrected", res.corrected)):
        outputs += detection.export_frame(frame, out / name)
    report = None
    try:
        rep = analysis.level_report(res.corrected, cfg.pattern, cfg.telescope)
        report = asdict(rep)
        outputs.append(_write_json(out / "levels.json", report))
    except ValueError as exc:
        print(f"level report skipped: {exc}", file=sys.stderr)
    _write_manifest(out, "image", cfg, outputs, started)
    if report is not None:
        print(f"levels: low={report['level_low']:.6g} high={report['level_high']:.6g} "
              f"contrast={report['contrast']:.4f}")
    print(f"wrote {len(outputs)} files to {out}")
    return EXIT_OK


def cmd_chsh(args) -> int:
    started = time.perf_counter()
    cfg, extras = _load(args)
    cfg = _apply_flags(cfg, args)
    if args.angles is not None:
        angles = _floats(args.angles, "--angles", 4)
    else:
        angles = [float(a) for a in extras["chsh"].get("angles", engine.CHSH_ANGLES)]
        if len(angles) != 4:
            raise ConfigError("chsh.angles", f"expected 4 values, got {len(angles)}")
    rep = engine.run_chsh(cfg, tuple(angles))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = [
        _write_csv(out / "chsh_counts.csv", ["delta1", "delta2", "counts"], rep.table.rows),
        _write_json(out / "chsh.json", rep.to_dict()),
    ]
    _write_manifest(out, "chsh", cfg, outputs, started)
    verdict = "violated" if rep.violates_bound else "not violated"
    print(f"S = {rep.S:.6f}  |S| = {rep.abs_S:.6f}  classical bound 2 {verdict}")
    return EXIT_OK


def cmd_fringe(args) -> int:
    started = time.perf_counter()
    cfg, extras = _load(args)
    cfg = _apply_flags(cfg, args)
    table = extras["fringe"]
    delta2 = args.delta2 if args.delta2 is not None else float(table.get("delta2", 0.0))
    if args.delta1 is not None:
        sweep = _floats(args.delta1, "--delta1")
    else:
        sweep = table.get("delta1", list(np.arange(0.0, 360.0, 15.0)))
    scan = engine.run_fringe_scan(cfg, delta2, sweep)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = [_write_csv(out / "fringe.csv", ["delta1", "counts", "rate_hz"],
                          zip(scan.delta1, scan.counts, scan.rate))]
    fit = None
    try:
        fit = analysis.fit_sin2(scan.delta1, scan.counts, delta2)
        outputs.append(_write_json(out / "fringe_fit.json", asdict(fit)))
    except ValueError as exc:
        print(f"fit skipped: {exc}", file=sys.stderr)
    _write_manifest(out, "fringe", cfg, outputs, started)
    if fit is not None:
        print(f"visibility = {fit.visibility:.4f}  offset = {fit.phase_offset:.3f} deg")
    return EXIT_OK


def cmd_slit_scan(args) -> int:
    started = time.perf_counter()
    cfg, extras = _load(args)
    cfg = _apply_flags(cfg, args)
    if cfg.seed is None:
        raise ConfigError("seed", "slit scans are Monte Carlo and need --seed")
    table = extras["slit"]
    orient = args.orientation or table.get("orientation", "horizontal")
    orient = {"h": "horizontal", "v": "vertical"}.get(orient, orient)
    if args.positions is not None:
        positions = _floats(args.positions, "--positions")
    else:
        positions = table.get("positions_mm", [-1.0, -0.5, 0.0, 0.5, 1.0])
    width = args.width if args.width is not None else float(table.get("width_mm", 0.8))
    cfg = cfg.with_setting(delta1=None, delta2=None)
    scan = engine.run_slit_scan(cfg, orient, positions, width)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = zip(scan.positions, scan.mean_photon1, scan.mean_camera, scan.stderr_camera, scan.accepted)
    outputs = [
        _write_csv(out / "slit_scan.csv",
                   ["slit_mm", "mean_photon1_mm", "mean_camera_mm", "stderr_camera_mm", "accepted"], rows),
        _write_json(out / "slit_fit.json", {"orientation": orient, **asdict(scan.fit)}),
    ]
    _write_manifest(out, "slit-scan", cfg, outputs, started)
    print(f"slope = {scan.fit.slope:.5f}  intercept = {scan.fit.intercept:.5f}  r = {scan.fit.r:.5f}")
    return EXIT_OK


def cmd_pattern(args) -> int:
    try:
        return _pattern_action(args)
    except PGMFormatError as exc:
        raise ConfigError("input", str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(args.action, str(exc)) from exc


def _pattern_action(args) -> int:
    if args.action == "generate":
        if args.kind == "checkerboard":
            p = pattern.generate_checkerboard(args.square_mm, args.n_squares)
        elif args.kind == "cross":
            p = pattern.generate_cross(args.size_mm, args.arm_mm, args.pitch_mm)
        else:
            p = pattern.generate_uniform((args.n_squares, args.n_squares), args.square_mm, args.phi)
        pattern.save_pattern(p, args.output)
    else:
        src = Path(args.input)
        if not src.exists():
            raise ConfigError("input", f"file not found: {src}")
        p = pattern.load_pattern(src, args.pitch_mm, args.mapping, args.threshold)
        pattern.save_pattern(p, args.output)
    print(f"wrote {args.output} ({p.shape[1]}x{p.shape[0]} cells, pitch {p.pitch} mm)")
    return EXIT_OK


# ----------------------------------------------------------------- parser

def _common(sp, seeded=True):
    sp.add_argument("config", nargs="?", help="TOML experiment config (defaults if omitted)")
    sp.add_argument("--out", default="out", help="output directory")
    sp.add_argument("--seed", type=int, help="RNG seed (required for Monte Carlo)")
    sp.add_argument("--n-pairs", type=int, help="override backend.n_pairs")
    sp.add_argument("--workers", type=int, help="Monte Carlo worker threads")
    if seeded:
        sp.add_argument("--backend", choices=["analytic", "mc", "montecarlo"])


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hyperimage", description="Coincidence imaging with polarisation-entangled photon pairs")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("image", help="raw, background and corrected coincidence frames")
    _common(sp)
    sp.set_defaults(func=cmd_image)

    sp = sub.add_parser("chsh", help="CHSH correlation parameter")
    _common(sp)
    sp.add_argument("--angles", help="delta1,delta1',delta2,delta2' in degrees")
    sp.set_defaults(func=cmd_chsh)

    sp = sub.add_parser("fringe", help="coincidence rate versus photon-1 polariser angle")
    _common(sp)
    sp.add_argument("--delta2", type=float, help="fixed photon-2 polariser angle (deg)")
    sp.add_argument("--delta1", help="comma-separated photon-1 angles (deg)")
    sp.set_defaults(func=cmd_fringe)

    sp = sub.add_parser("slit-scan", help="photon-2 mean position versus photon-1 slit position")
    _common(sp, seeded=False)
    sp.add_argument("--orientation", choices=["h", "v", "horizontal", "vertical"])
    sp.add_argument("--positions", help="comma-separated slit positions (mm)")
    sp.add_argument("--width", type=float, help="slit width (mm)")
    sp.set_defaults(func=cmd_slit_scan)

    sp = sub.add_parser("pattern", help="generate or convert phase patterns")
    psub = sp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    g = psub.add_parser("generate")
    g.add_argument("kind", choices=["checkerboard", "cross", "uniform"])
    g.add_argument("output", help=".pgm or .csv")
    g.add_argument("--square-mm", type=float, default=1.0)
    g.add_argument("--n-squares", type=int, default=4)
    g.add_argument("--size-mm", type=float, default=4.0)
    g.add_argument("--arm-mm", type=float, default=1.0)
    g.add_argument("--pitch-mm", type=float, default=0.25)
    g.add_argument("--phi", type=float, default=0.0, help="phase of a uniform pattern (rad)")
    c = psub.add_parser("convert")
    c.add_argument("input", help=".pgm or .csv")
    c.add_argument("output", help=".pgm or .csv")
    c.add_argument("--pitch-mm", type=float, default=1.0)
    c.add_argument("--mapping", choices=["binary", "linear"], default="binary")
    c.add_argument("--threshold", type=int, default=128)
    sp.set_defaults(func=cmd_pattern)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - top-level guard maps failures to the runtime exit code
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
