"""Command-line surface.

Every subcommand accepts ``--config``, ``--seed`` and ``--out-dir``; runs
are deterministic for a given config and seed, and reports carry the fully
resolved config so any run can be replayed from its own output.  Exit codes:
0 success, 2 configuration problem, 3 analysis failure.  Failures also emit
a machine-readable JSON record on the diagnostic stream.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__, controller, perception, qkd, wm
from .config import ScenarioConfig, parse_config, parse_config_dict
from .errors import ConfigError, SagnacSimError
from .fileio import (read_trace, write_columns, write_event_log,
                     write_report, write_trace)

OUT_DIR_ENV = "SAGNACSIM_OUT_DIR"


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _load_config(args) -> ScenarioConfig:
    if args.config:
        cfg = parse_config(args.config)
    else:
        cfg = parse_config_dict({})
    if args.seed is not None:
        resolved = cfg.echo()
        resolved["seed"] = args.seed
        cfg = parse_config_dict(resolved)
    return cfg


def _out_dir(args, cfg: ScenarioConfig) -> Path:
    chosen = args.out_dir or cfg.out_dir or os.environ.get(OUT_DIR_ENV) or "."
    path = Path(chosen)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _base_report(cfg: ScenarioConfig) -> dict:
    return {
        "config": cfg.echo(),
        "seed": cfg.seed,
        "versions": {
            "sagnacsim": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }


def _record_dicts(records) -> list[dict]:
    return [asdict(r) for r in records]


def _report_dict(report: perception.LocalizationReport) -> dict:
    return {
        "nulls": [asdict(nf) for nf in report.nulls],
        "position_m": report.position_m,
        "resolution_m": report.resolution_m,
        "sigma_position_m": report.sigma_position_m,
        "path_difference_m": report.path_difference_m,
        "mirror_position_m": report.mirror_position_m,
    }


def _log_dicts(log) -> list[dict]:
    return [{
        "time_s": rec.time_s,
        "mode": rec.mode.value,
        "event": rec.event.kind.value,
        "payload": rec.event.payload,
    } for rec in log]


def _cmd_qkd(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    settings = cfg.qkd_settings()
    records = qkd.run_session(
        cfg.resolved["duration_s"], cfg.seed, cfg.source(), cfg.channel(),
        cfg.detector(), cfg.packet(), window_s=settings.window_s,
        pulses_per_window=settings.pulses_per_window,
        phase_noise_rad=settings.phase_noise_rad)
    summary = qkd.session_summary(records)
    write_columns(out / "qber_windows.csv",
                  ["window_start_s", "pulses_sent", "clicks_reflected",
                   "clicks_transmitted", "sifted_bits", "errors",
                   "qber_estimate", "raw_rate_bps"],
                  [[getattr(r, f) for r in records]
                   for f in ("window_start_s", "pulses_sent",
                             "clicks_reflected", "clicks_transmitted",
                             "sifted_bits", "errors", "qber_estimate",
                             "raw_rate_bps")])
    report = _base_report(cfg)
    report["qkd_windows"] = _record_dicts(records)
    report["summary"] = summary
    write_report(out / "report.json", report)
    _say(args, f"windows={summary['windows']} "
               f"rate={summary['mean_raw_rate_bps']:.1f} bps "
               f"qber={summary['qber_pooled']}")
    return 0


def _sweep_grid(settings) -> np.ndarray:
    return np.arange(settings.scan_min_hz,
                     settings.scan_max_hz + settings.scan_step_hz,
                     settings.scan_step_hz)


def _perceive_dynamic(cfg, event, out, args) -> dict:
    settings = cfg.perception_settings()
    channel = replace(cfg.channel(), bias_phase_rad=settings.bias_phase_rad)
    extras: dict = {}
    if event.kind.value == "pzt":
        sweep = perception.frequency_sweep(
            event, channel, _sweep_grid(settings),
            duration_s=settings.sweep_duration_s,
            sample_rate_hz=settings.sample_rate_hz,
            noise_sigma=settings.noise_sigma,
            input_power_w=settings.input_power_w, seed=cfg.seed)
        write_columns(out / "amplitude_vs_frequency.csv",
                      ["frequency_hz", "amplitude_w"],
                      [sweep.frequencies_hz, sweep.amplitudes])
        nulls = perception.find_null_frequencies(
            sweep, settings.max_harmonics,
            depth_threshold_db=settings.notch_depth_db)
    else:
        duration = max(settings.sense_duration_s,
                       32.0 * event.params.width_s + 4e-3)
        trace = perception.synthesize_trace(
            event, channel, duration, settings.sample_rate_hz,
            settings.noise_sigma, seed=cfg.seed,
            input_power_w=settings.input_power_w,
            start_s=event.start_s - duration / 2.0)
        write_trace(out / "trace.txt", trace)
        extras["trace_file"] = "trace.txt"
        nulls = perception.find_null_frequencies(
            trace, settings.max_harmonics,
            depth_threshold_db=settings.notch_depth_db)
    if nulls:
        report = perception.localization_report(
            nulls, cfg.channel(), settings.freq_resolution_hz)
        extras["localization"] = _report_dict(report)
    else:
        extras["localization"] = None
        extras["diagnostic"] = ("no null frequency reached the depth "
                                "threshold")
    return extras


def _cmd_perceive(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    events = cfg.disturbances()
    if not events:
        raise ConfigError(["perceive requires at least one disturbance "
                           "in the config"])
    event = events[0]
    report = _base_report(cfg)
    if event.is_dynamic:
        report.update(_perceive_dynamic(cfg, event, out, args))
    else:
        settings = cfg.perception_settings()
        channel = replace(cfg.channel(),
                          bias_phase_rad=settings.bias_phase_rad)
        trace = perception.synthesize_trace(
            event, channel, settings.sense_duration_s,
            settings.sample_rate_hz, settings.noise_sigma, seed=cfg.seed,
            input_power_w=settings.input_power_w)
        write_trace(out / "trace.txt", trace)
        candidate, ratio = perception.significance(trace)
        report["localization"] = None
        report["diagnostic"] = ("quasi-static disturbance leaves no "
                                "dynamic signature")
        report["significance"] = {"candidate_frequency_hz": candidate,
                                  "peak_to_floor": ratio}
    write_report(out / "report.json", report)
    loc = report.get("localization")
    _say(args, "position_m="
               + (repr(float(loc["position_m"])) if loc else "none"))
    return 0


def _cmd_localize(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    settings = cfg.perception_settings()
    trace = read_trace(args.trace)
    nulls = perception.find_null_frequencies(
        trace, settings.max_harmonics,
        depth_threshold_db=settings.notch_depth_db)
    if not nulls:
        raise SagnacSimError(
            "no null frequency found in the supplied trace")
    report_obj = perception.localization_report(
        nulls, cfg.channel(), settings.freq_resolution_hz)
    report = _base_report(cfg)
    report["trace_file"] = str(args.trace)
    report["localization"] = _report_dict(report_obj)
    write_report(out / "report.json", report)
    _say(args, f"position_m={float(report_obj.position_m)!r} "
               f"resolution_m={float(report_obj.resolution_m)!r}")
    return 0


def _cmd_wm(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    settings = cfg.wm_settings()
    if args.masses:
        try:
            masses = [float(tok) for tok in args.masses.split(",") if tok]
        except ValueError as exc:
            raise ConfigError([f"--masses: {exc}"]) from exc
        if not masses or any(m <= 0 for m in masses):
            raise ConfigError(["--masses: needs positive comma-separated "
                               "values"])
    else:
        masses = [0.1, 0.2, 0.3, 0.4, 0.5]
    readings = wm.pressure_staircase(
        masses, settings.pressure, cfg.channel(), cfg.packet(),
        settings.delta_epsilon_rad, settings.input_power_w,
        noise_sigma=settings.noise_sigma,
        samples_per_reading=settings.samples_per_reading, seed=cfg.seed)
    write_columns(out / "icr_vs_mass.csv",
                  ["mass_kg", "i_d_w", "icr", "delta_tau_s",
                   "inferred_mass_kg"],
                  [masses,
                   [r.disturbed_intensity_w for r in readings],
                   [r.contrast_ratio for r in readings],
                   [r.inferred_delay_s for r in readings],
                   [r.inferred_mass_kg for r in readings]])
    report = _base_report(cfg)
    report["wm_readings"] = [
        {"mass_kg": m, **asdict(r)} for m, r in zip(masses, readings)]
    write_report(out / "report.json", report)
    _say(args, " ".join(f"{r.inferred_delay_s:.3e}" for r in readings))
    return 0


def _cmd_integrated(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    result = controller.run_scenario(cfg.script())
    entries = _log_dicts(result.log)
    write_event_log(out / "event_log.jsonl", entries)
    write_columns(out / "qber_vs_time.csv",
                  ["window_start_s", "qber_estimate", "raw_rate_bps"],
                  [[r.window_start_s for r in result.key_records],
                   [r.qber_estimate for r in result.key_records],
                   [r.raw_rate_bps for r in result.key_records]])
    if result.wm_readings:
        write_columns(out / "wm_readings.csv",
                      ["time_s", "icr", "delta_tau_s", "inferred_mass_kg"],
                      [[r["time_s"] for r in result.wm_readings],
                       [r["contrast_ratio"] for r in result.wm_readings],
                       [r["inferred_delay_s"] for r in result.wm_readings],
                       [r["inferred_mass_kg"] for r in result.wm_readings]])
    report = _base_report(cfg)
    report["qkd_windows"] = _record_dicts(result.key_records)
    report["summary"] = qkd.session_summary(result.key_records)
    report["wm_readings"] = result.wm_readings
    report["localization_reports"] = [
        _report_dict(r) for r in result.localization_reports]
    report["event_log"] = entries
    report["final_mode"] = result.final_mode.value
    write_report(out / "report.json", report)
    _say(args, f"final_mode={result.final_mode.value} "
               f"reports={len(result.localization_reports)}")
    return 0


def _set_by_path(tree: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = tree
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError([f"--key: unknown config section {part!r}"])
        node = node[part]
    if parts[-1] not in node:
        raise ConfigError([f"--key: unknown config key {dotted!r}"])
    node[parts[-1]] = value


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    try:
        values = [float(tok) for tok in args.values.split(",") if tok]
    except ValueError as exc:
        raise ConfigError([f"--values: {exc}"]) from exc
    if not values:
        raise ConfigError(["--values: needs at least one value"])
    rows = []
    for value in values:
        resolved = cfg.echo()
        _set_by_path(resolved, args.key, value)
        point = parse_config_dict(resolved)
        settings = point.qkd_settings()
        records = qkd.run_session(
            point.resolved["duration_s"], point.seed, point.source(),
            point.channel(), point.detector(), point.packet(),
            window_s=settings.window_s,
            pulses_per_window=settings.pulses_per_window,
            phase_noise_rad=settings.phase_noise_rad)
        summary = qkd.session_summary(records)
        rows.append((value, summary["qber_pooled"],
                     summary["mean_raw_rate_bps"], summary["sifted_bits"]))
    write_columns(out / "sweep.csv",
                  [args.key, "qber_pooled", "mean_raw_rate_bps",
                   "sifted_bits"],
                  [[r[i] for r in rows] for i in range(4)])
    report = _base_report(cfg)
    report["sweep"] = {
        "key": args.key,
        "points": [{"value": v, "qber_pooled": q, "mean_raw_rate_bps": rate,
                    "sifted_bits": bits} for v, q, rate, bits in rows],
    }
    write_report(out / "report.json", report)
    _say(args, f"swept {args.key} over {len(values)} values")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sagnacsim",
        description="Simulate and analyze the loop interferometer: key "
                    "distribution, disturbance perception, localization "
                    "and quasi-static sensing.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out-dir", default=None,
                       help=f"output directory (default: config, "
                            f"then ${OUT_DIR_ENV}, then .)")
        p.add_argument("--quiet", action="store_true",
                       help="suppress progress output")

    p = sub.add_parser("qkd", help="run a key session and emit windows")
    common(p)
    p.set_defaults(fn=_cmd_qkd)

    p = sub.add_parser("perceive",
                       help="synthesize and analyze a disturbance trace")
    common(p)
    p.set_defaults(fn=_cmd_perceive)

    p = sub.add_parser("localize", help="analyze an existing trace file")
    common(p)
    p.add_argument("--trace", required=True, help="trace file to analyze")
    p.set_defaults(fn=_cmd_localize)

    p = sub.add_parser("wm", help="run a pressure staircase experiment")
    common(p)
    p.add_argument("--masses", default=None,
                   help="comma-separated masses in kg (default "
                        "0.1,0.2,0.3,0.4,0.5)")
    p.set_defaults(fn=_cmd_wm)

    p = sub.add_parser("integrated", help="run the full workflow scenario")
    common(p)
    p.set_defaults(fn=_cmd_integrated)

    p = sub.add_parser("sweep", help="sweep one named config key")
    common(p)
    p.add_argument("--key", required=True,
                   help="dotted config key, e.g. channel.loss_db")
    p.add_argument("--values", required=True,
                   help="comma-separated values to sweep")
    p.set_defaults(fn=_cmd_sweep)
    return parser


def _emit_error(kind: str, exc: Exception) -> None:
    record = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConfigError):
        record["problems"] = exc.problems
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        _emit_error("validation", exc)
        return 2
    except SagnacSimError as exc:
        _emit_error("analysis", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
