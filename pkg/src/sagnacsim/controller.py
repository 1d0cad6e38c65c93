"""Mode-switching workflow driving the other modules over a scenario
timeline.

Key distribution runs until the windowed error rate breaches its threshold;
the system then switches to perception, grades the disturbance, localizes a
significant one, files the report and waits for a reset before resuming.
Quasi-static loads never breach (they are reciprocal) and are instead picked
up by a scheduled weak-measurement poll while keys keep flowing.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import perception, qkd, wm
from .disturbance import (DisturbanceEvent, DisturbanceKind, PressureParams,
                          pressure_delay)
from .errors import InsufficientDataError, ProtocolViolationError
from .optics import LoopChannel, SpectralPacket
from .qkd import DetectorModel, SourceModel

MAX_SEED = 2**31


class SystemMode(enum.Enum):
    KEY_DISTRIBUTION = "key_distribution"
    PERCEPTION_SENSING = "perception_sensing"
    LOCALIZING = "localizing"
    REPORTING = "reporting"
    AWAIT_RESET = "await_reset"


class EventKind(enum.Enum):
    QBER_WINDOW = "qber_window"
    BREACH_DETECTED = "breach_detected"
    DISTURBANCE_SIGNIFICANT = "disturbance_significant"
    DISTURBANCE_MINOR = "disturbance_minor"
    LOCALIZATION_DONE = "localization_done"
    RESET_ISSUED = "reset_issued"


@dataclass(frozen=True)
class ControllerEvent:
    time_s: float
    kind: EventKind
    payload: dict = field(default_factory=dict)


_TRANSITIONS = {
    (SystemMode.KEY_DISTRIBUTION, EventKind.QBER_WINDOW):
        SystemMode.KEY_DISTRIBUTION,
    (SystemMode.KEY_DISTRIBUTION, EventKind.BREACH_DETECTED):
        SystemMode.PERCEPTION_SENSING,
    (SystemMode.PERCEPTION_SENSING, EventKind.DISTURBANCE_SIGNIFICANT):
        SystemMode.LOCALIZING,
    (SystemMode.PERCEPTION_SENSING, EventKind.DISTURBANCE_MINOR):
        SystemMode.KEY_DISTRIBUTION,
    (SystemMode.LOCALIZING, EventKind.LOCALIZATION_DONE):
        SystemMode.REPORTING,
    (SystemMode.AWAIT_RESET, EventKind.RESET_ISSUED):
        SystemMode.KEY_DISTRIBUTION,
}


def step(mode: SystemMode, event: ControllerEvent) -> SystemMode:
    """Advance the mode machine by one event.

    Reporting always hands over to the reset wait regardless of the event;
    every other (mode, event) pair outside the transition table is a
    protocol violation.
    """
    if mode is SystemMode.REPORTING:
        return SystemMode.AWAIT_RESET
    nxt = _TRANSITIONS.get((mode, event.kind))
    if nxt is None:
        raise ProtocolViolationError(mode.value, event.kind.value)
    return nxt


@dataclass(frozen=True)
class QkdSettings:
    window_s: float = 1.0
    pulses_per_window: int = 200_000
    phase_noise_rad: float = qkd.CALIBRATED_PHASE_NOISE_RAD
    qber_threshold: float = 0.08

    def __post_init__(self):
        if not 0.0 < self.qber_threshold < 1.0:
            raise ValueError("qber_threshold must lie in (0, 1)")
        if self.window_s <= 0 or self.pulses_per_window <= 0:
            raise ValueError("window_s and pulses_per_window must be positive")


@dataclass(frozen=True)
class PerceptionSettings:
    sample_rate_hz: float = perception.DEFAULT_SAMPLE_RATE_HZ
    sense_duration_s: float = 0.05
    sweep_duration_s: float = 0.01
    noise_sigma: float = perception.DEFAULT_NOISE_SIGMA
    input_power_w: float = perception.DEFAULT_INPUT_POWER_W
    bias_phase_rad: float = 0.5 * math.pi
    significance_threshold: float = 10.0
    scan_min_hz: float = 2000.0
    scan_max_hz: float = 75000.0
    scan_step_hz: float = 250.0
    max_harmonics: int = 3
    notch_depth_db: float = 10.0
    freq_resolution_hz: float = perception.DEFAULT_FREQ_RESOLUTION_HZ
    switch_dead_time_s: float = 1.0

    def __post_init__(self):
        if self.significance_threshold <= 0:
            raise ValueError("significance_threshold must be positive")
        if self.scan_min_hz >= self.scan_max_hz:
            raise ValueError("scan_min_hz must be below scan_max_hz")


@dataclass(frozen=True)
class WmSettings:
    delta_epsilon_rad: float = math.pi / 6.0
    delta_bias_rad: float = 0.0
    input_power_w: float = 1.0
    noise_sigma: float = 0.0019
    samples_per_reading: int = 16
    poll_interval_s: float = 60.0
    pressure: PressureParams = field(
        default_factory=lambda: PressureParams(mass_kg=0.1))


@dataclass(frozen=True)
class ScenarioScript:
    """Everything needed to replay a full scenario deterministically."""

    channel: LoopChannel
    source: SourceModel
    detector: DetectorModel
    packet: SpectralPacket
    events: tuple[DisturbanceEvent, ...]
    duration_s: float
    seed: int
    qkd: QkdSettings = field(default_factory=QkdSettings)
    perception: PerceptionSettings = field(default_factory=PerceptionSettings)
    wm: WmSettings = field(default_factory=WmSettings)

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")
        for ev in self.events:
            if not 0.0 <= ev.start_s <= self.duration_s:
                raise ValueError(
                    f"event start {ev.start_s}s outside scenario duration")
            if ev.position_m > self.channel.length_m:
                raise ValueError("event position beyond the loop length")


@dataclass
class LogRecord:
    time_s: float
    mode: SystemMode
    event: ControllerEvent


@dataclass
class ScenarioResult:
    log: list[LogRecord]
    key_records: list[qkd.SiftedKeyRecord]
    wm_readings: list[dict]
    localization_reports: list[perception.LocalizationReport]
    final_mode: SystemMode


def _active_dynamic_events(events, t0: float, t1: float):
    out = []
    for ev in events:
        if not ev.is_dynamic:
            continue
        if ev.kind is DisturbanceKind.TRANSIENT_IMPACT:
            w = ev.params.width_s
            if t0 <= ev.start_s + 6 * w and ev.start_s - 6 * w <= t1:
                out.append(ev)
        elif ev.start_s <= t1:
            out.append(ev)
    return out


def _active_pressure_delay(events, t: float) -> float:
    total = 0.0
    for ev in events:
        if ev.kind is DisturbanceKind.QUASI_STATIC_PRESSURE and ev.start_s <= t:
            total += pressure_delay(ev.params)
    return total


def _perception_target(events, t: float) -> Optional[DisturbanceEvent]:
    """Dynamic event the perception system should examine at time ``t``.

    A running sinusoidal drive takes precedence; otherwise the most recent
    transient, whose waveform the sensing window is re-centered on.
    """
    started = [ev for ev in events if ev.is_dynamic and ev.start_s <= t]
    for ev in started:
        if ev.kind is DisturbanceKind.PZT_SINUSOID:
            return ev
    if started:
        return max(started, key=lambda ev: ev.start_s)
    return None


class _ScenarioRunner:
    def __init__(self, script: ScenarioScript):
        self.script = script
        self.rng = np.random.default_rng(script.seed)
        self.mode = SystemMode.KEY_DISTRIBUTION
        self.t = 0.0
        self.log: list[LogRecord] = []
        self.key_records: list[qkd.SiftedKeyRecord] = []
        self.wm_readings: list[dict] = []
        self.reports: list[perception.LocalizationReport] = []
        self.next_poll_s = script.wm.poll_interval_s
        self.wm_cal = wm.calibrate(
            script.channel, script.packet, script.wm.delta_bias_rad,
            script.wm.input_power_w)

    def emit(self, kind: EventKind, payload: dict) -> None:
        event = ControllerEvent(time_s=self.t, kind=kind, payload=payload)
        self.log.append(LogRecord(time_s=self.t, mode=self.mode, event=event))
        self.mode = step(self.mode, event)

    def sense_channel(self) -> LoopChannel:
        return replace(self.script.channel,
                       bias_phase_rad=self.script.perception.bias_phase_rad)

    def run(self) -> ScenarioResult:
        script = self.script
        while self.t < script.duration_s - 1e-9:
            if self.mode is SystemMode.KEY_DISTRIBUTION:
                self._key_window()
            elif self.mode is SystemMode.PERCEPTION_SENSING:
                self._sense()
            elif self.mode is SystemMode.LOCALIZING:
                self._localize()
            elif self.mode is SystemMode.REPORTING:
                # Report is already filed; both manual intervention and a
                # system reset collapse to a reset request.
                self.emit(EventKind.RESET_ISSUED, {"stage": "report_closed"})
            elif self.mode is SystemMode.AWAIT_RESET:
                self.t += script.perception.switch_dead_time_s
                if self.t >= script.duration_s:
                    break
                self.emit(EventKind.RESET_ISSUED, {"stage": "rearmed"})
        return ScenarioResult(
            log=self.log,
            key_records=self.key_records,
            wm_readings=self.wm_readings,
            localization_reports=self.reports,
            final_mode=self.mode,
        )

    def _key_window(self) -> None:
        script = self.script
        t0, dt = self.t, script.qkd.window_s
        active = _active_dynamic_events(script.events, t0, t0 + dt)

        gpd_fn = None
        if active:
            channel = script.channel

            def gpd_fn(times, events=tuple(active), channel=channel):
                total = np.zeros_like(times)
                for ev in events:
                    total = total + perception.nonreciprocal_phase(
                        times, ev, channel)
                return total

        record, _ = qkd.simulate_window(
            self.rng, script.qkd.pulses_per_window, t0, dt,
            script.source, script.channel, script.detector, script.packet,
            script.qkd.phase_noise_rad, gpd_fn)
        self.key_records.append(record)
        self.t = t0 + dt
        self.emit(EventKind.QBER_WINDOW, {
            "qber": record.qber_estimate,
            "raw_rate_bps": record.raw_rate_bps,
            "sifted_bits": record.sifted_bits,
        })

        if self.t >= self.next_poll_s:
            self._wm_poll()
            self.next_poll_s += script.wm.poll_interval_s

        try:
            breach = qkd.qber_threshold_check(record,
                                              script.qkd.qber_threshold)
        except InsufficientDataError:
            return
        if breach:
            self.emit(EventKind.BREACH_DETECTED, {
                "qber": record.qber_estimate,
                "threshold": script.qkd.qber_threshold,
            })
            self.t += script.perception.switch_dead_time_s

    def _wm_poll(self) -> None:
        script = self.script
        delay = _active_pressure_delay(script.events, self.t)
        noise = script.wm.noise_sigma
        reads = script.wm.samples_per_reading

        def measure(value: float) -> float:
            if noise <= 0.0:
                return value
            draws = value * (1.0 + noise * self.rng.standard_normal(reads))
            return float(np.mean(draws))

        i1 = measure(wm.offset_intensity(
            self.wm_cal, script.wm.delta_epsilon_rad, script.packet,
            script.channel))
        i_d = measure(wm.disturbed_intensity(
            self.wm_cal, script.wm.delta_epsilon_rad, delay, script.packet,
            script.channel))
        imin = measure(self.wm_cal.min_intensity_w)
        icr = wm.contrast_ratio(i1, i_d, imin)
        inversion = wm.infer_delay(icr, script.wm.delta_epsilon_rad,
                                   script.packet.omega0)
        self.wm_readings.append({
            "time_s": self.t,
            "offset_intensity_w": i1,
            "disturbed_intensity_w": i_d,
            "contrast_ratio": icr,
            "inferred_delay_s": inversion.delay_s,
            "inferred_mass_kg": wm.mass_from_delay(inversion.delay_s,
                                                   script.wm.pressure),
            "true_delay_s": delay,
        })

    def _sense(self) -> None:
        script = self.script
        cfg = script.perception
        if cfg.sense_duration_s <= 0:
            raise InsufficientDataError(
                "perception mode entered with no sensing window configured")
        event = _perception_target(script.events, self.t)
        start = self.t
        if event is not None and \
                event.kind is DisturbanceKind.TRANSIENT_IMPACT:
            start = event.start_s - 0.5 * cfg.sense_duration_s
        trace = perception.synthesize_trace(
            event, self.sense_channel(), cfg.sense_duration_s,
            cfg.sample_rate_hz, cfg.noise_sigma,
            seed=int(self.rng.integers(0, MAX_SEED)),
            input_power_w=cfg.input_power_w, start_s=start)
        candidate_hz, ratio = perception.significance(trace)
        self.t += cfg.sense_duration_s
        if ratio > cfg.significance_threshold:
            self.emit(EventKind.DISTURBANCE_SIGNIFICANT, {
                "candidate_frequency_hz": candidate_hz,
                "peak_to_floor": ratio,
            })
        else:
            self.emit(EventKind.DISTURBANCE_MINOR, {
                "candidate_frequency_hz": candidate_hz,
                "peak_to_floor": ratio,
            })
            self.t += cfg.switch_dead_time_s

    def _localize(self) -> None:
        script = self.script
        cfg = script.perception
        event = _perception_target(script.events, self.t)
        if event is None:
            raise InsufficientDataError(
                "localization requested but no dynamic disturbance is active")
        if event.kind is DisturbanceKind.PZT_SINUSOID:
            grid = np.arange(cfg.scan_min_hz, cfg.scan_max_hz + cfg.scan_step_hz,
                             cfg.scan_step_hz)
            sweep = perception.frequency_sweep(
                event, self.sense_channel(), grid,
                duration_s=cfg.sweep_duration_s,
                sample_rate_hz=cfg.sample_rate_hz,
                noise_sigma=cfg.noise_sigma,
                input_power_w=cfg.input_power_w,
                seed=int(self.rng.integers(0, MAX_SEED)))
            nulls = perception.find_null_frequencies(
                sweep, cfg.max_harmonics,
                depth_threshold_db=cfg.notch_depth_db)
        else:
            duration = max(cfg.sense_duration_s,
                           32.0 * event.params.width_s + 4e-3)
            trace = perception.synthesize_trace(
                event, self.sense_channel(), duration, cfg.sample_rate_hz,
                cfg.noise_sigma, seed=int(self.rng.integers(0, MAX_SEED)),
                input_power_w=cfg.input_power_w,
                start_s=event.start_s - duration / 2.0)
            nulls = perception.find_null_frequencies(
                trace, cfg.max_harmonics,
                depth_threshold_db=cfg.notch_depth_db)
        if not nulls:
            raise InsufficientDataError(
                "perception flagged a significant disturbance but no null "
                "frequency was found; cannot localize")
        report = perception.localization_report(nulls, script.channel,
                                                cfg.freq_resolution_hz)
        self.reports.append(report)
        self.t += cfg.sense_duration_s
        self.emit(EventKind.LOCALIZATION_DONE, {
            "position_m": report.position_m,
            "resolution_m": report.resolution_m,
            "nulls_hz": [nf.frequency_hz for nf in report.nulls],
        })


def run_scenario(script: ScenarioScript) -> ScenarioResult:
    """Execute a scripted timeline and return the full log and results."""
    return _ScenarioRunner(script).run()
