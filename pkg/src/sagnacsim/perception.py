"""Continuous-wave perception mode: trace synthesis and null-frequency
localization.

A dynamic disturbance at position ``x`` along a loop of length ``L``
modulates the two counter-propagating waves at times offset by the transit
of the path difference ``L - 2x``.  The resulting nonreciprocal phase makes
the interferometer response vanish at the null frequencies
``f_k = k c / (n (L - 2x))``; reading one null off the spectrum inverts to
the position.  Quasi-static disturbances cancel between the directions and
leave no trace here by construction.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np
from scipy.signal import welch

from .disturbance import (DisturbanceEvent, ImpactParams, PztParams,
                          single_pass_phase)
from .errors import (AliasingError, HarmonicAmbiguityError,
                     InsufficientDataError, OutOfLoopError,
                     ReciprocalDisturbanceError, UndefinedResolutionError)
from .optics import C_VACUUM, LoopChannel

logger = logging.getLogger(__name__)

#: Default continuous-wave input power (W) of the shared source.
DEFAULT_INPUT_POWER_W = 5.645e-3

#: Default relative intensity noise of the source (power fluctuation).
DEFAULT_NOISE_SIGMA = 0.0019

#: Default sample rate able to probe nulls up to 50 kHz with margin.
DEFAULT_SAMPLE_RATE_HZ = 200e3

#: Default instrument frequency resolution (Hz) entering the resolution
#: formula.
DEFAULT_FREQ_RESOLUTION_HZ = 500.0


@dataclass(frozen=True)
class InterferenceTrace:
    """Uniformly sampled detector intensity with acquisition metadata."""

    sample_rate_hz: float
    samples: np.ndarray
    input_power_w: float
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must all be finite")
        object.__setattr__(self, "samples", samples)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate_hz


@dataclass(frozen=True)
class FrequencySweep:
    """Measured AC amplitude of the interferometer response versus drive
    frequency.

    ``noise_floor_amplitude``, when present, is the tone amplitude measured
    on a disturbance-free reference trace; a sweep whose typical response
    does not stand clear of it carries no localizable structure.
    """

    frequencies_hz: np.ndarray
    amplitudes: np.ndarray
    noise_floor_amplitude: Optional[float] = None

    def __post_init__(self):
        f = np.asarray(self.frequencies_hz, dtype=float)
        a = np.asarray(self.amplitudes, dtype=float)
        if f.shape != a.shape or f.ndim != 1 or f.size < 3:
            raise ValueError("sweep needs matching 1-D arrays of >= 3 points")
        if np.any(np.diff(f) <= 0):
            raise ValueError("sweep frequencies must be strictly ascending")
        object.__setattr__(self, "frequencies_hz", f)
        object.__setattr__(self, "amplitudes", a)


@dataclass(frozen=True)
class NullFrequency:
    """A vanishing point of the nonreciprocal response."""

    frequency_hz: float
    harmonic: int
    depth_db: float

    def __post_init__(self):
        if self.frequency_hz <= 0:
            raise ValueError("frequency_hz must be positive")
        if self.harmonic < 1:
            raise ValueError("harmonic must be >= 1")


@dataclass(frozen=True)
class LocalizationReport:
    """Position estimate with its resolution and propagated uncertainty.

    Positions are reported on the near branch (at most half the loop); the
    interferometer cannot distinguish ``x`` from ``L - x``, so the mirror
    position is carried alongside.
    """

    nulls: tuple[NullFrequency, ...]
    position_m: float
    resolution_m: float
    sigma_position_m: Optional[float]
    path_difference_m: float
    mirror_position_m: float


def _delay_lag_s(event: DisturbanceEvent, channel: LoopChannel) -> float:
    dx = channel.length_m - 2.0 * event.position_m
    return channel.refractive_index * dx / C_VACUUM


def nonreciprocal_phase(t, event: DisturbanceEvent, channel: LoopChannel):
    """Differential phase between the two directions, bias excluded.

    The clockwise wave sees the waveform at ``t`` and the counterclockwise
    wave sees it one path-difference transit later, so the net phase is
    ``w(t) - w(t - n (L - 2x) / c)``.  Zero for any constant waveform and
    exactly zero at the loop midpoint.
    """
    lag = _delay_lag_s(event, channel)
    return single_pass_phase(t, event) - single_pass_phase(
        np.asarray(t, dtype=float) - lag, event)


def effective_gpd(t, event: DisturbanceEvent, channel: LoopChannel):
    """Total time-varying global phase difference including the bias.

    Only dynamic disturbances are meaningful here: a quasi-static event
    cancels identically between the two directions and raises instead of
    silently returning the bias.
    """
    if not event.is_dynamic:
        raise ReciprocalDisturbanceError(
            "quasi-static disturbance is reciprocal; its net dynamic phase "
            "is zero by construction")
    return nonreciprocal_phase(t, event, channel) + channel.bias_phase_rad


def _required_bandwidth_hz(event: DisturbanceEvent) -> float:
    if isinstance(event.params, PztParams):
        return event.params.frequency_hz
    if isinstance(event.params, ImpactParams):
        return 0.5 / event.params.width_s
    return 0.0


def synthesize_trace(event: Optional[DisturbanceEvent], channel: LoopChannel,
                     duration_s: float, sample_rate_hz: float,
                     noise_sigma: float = DEFAULT_NOISE_SIGMA,
                     seed: Optional[int] = None, *,
                     input_power_w: float = DEFAULT_INPUT_POWER_W,
                     start_s: float = 0.0) -> InterferenceTrace:
    """Detector intensity for the reflected port under a disturbance.

    Samples ``I0 * (1 + cos(gpd(t)))`` with multiplicative Gaussian
    intensity noise; deterministic for a given seed.  Quasi-static events
    contribute nothing beyond the bias.  Raises when the sample rate cannot
    cover twice the disturbance bandwidth.
    """
    if duration_s <= 0 or sample_rate_hz <= 0:
        raise ValueError("duration_s and sample_rate_hz must be positive")
    if event is not None:
        needed = _required_bandwidth_hz(event)
        if needed > 0 and sample_rate_hz <= 2.0 * needed:
            raise AliasingError(
                f"sample rate {sample_rate_hz} Hz cannot represent a "
                f"disturbance extending to {needed} Hz")
    n = int(round(duration_s * sample_rate_hz))
    t = start_s + np.arange(n) / sample_rate_hz
    if event is not None and event.is_dynamic:
        gpd = effective_gpd(t, event, channel)
    else:
        gpd = np.full(n, channel.bias_phase_rad)
    intensity = input_power_w * (1.0 + np.cos(gpd))
    if noise_sigma > 0.0:
        rng = np.random.default_rng(seed)
        intensity = intensity * (1.0 + noise_sigma * rng.standard_normal(n))
    return InterferenceTrace(sample_rate_hz=sample_rate_hz,
                             samples=intensity,
                             input_power_w=input_power_w,
                             noise_sigma=noise_sigma)


def ac_amplitude_theory(omega_s_rad_s: float, position_m: float,
                        channel: LoopChannel, delta_d_rad: float,
                        input_power_w: float) -> float:
    """Small-signal cross-interference amplitude at the drive frequency.

    ``|I0 * delta_d * sin(omega_s n (L - 2x) / (2 c))|``: zero whenever the
    half-transit phase hits a multiple of pi, which defines the null
    frequencies.  The synthesized trace carries twice this amplitude (the
    difference of the two direction waveforms contributes a factor 2 that
    this normalized form omits); the null positions are unaffected.
    """
    dx = channel.length_m - 2.0 * position_m
    half_transit = omega_s_rad_s * channel.refractive_index * dx / (2.0 * C_VACUUM)
    return abs(input_power_w * delta_d_rad * math.sin(half_transit))


def measure_tone_amplitude(trace: InterferenceTrace,
                           frequency_hz: float) -> float:
    """Amplitude of the trace component at an arbitrary frequency.

    Hann-weighted projection onto the exact tone (not a DFT bin), so there
    is no scalloping bias; the mean is removed first to keep the large DC
    term from leaking.
    """
    x = trace.samples - trace.samples.mean()
    t = trace.times()
    w = np.hanning(x.size)
    phasor = np.exp(-2j * math.pi * frequency_hz * t)
    return 2.0 * abs(np.sum(w * x * phasor)) / w.sum()


def ac_power_at(trace: InterferenceTrace, frequency_hz: float) -> float:
    """Mean-square power of the tone at ``frequency_hz``."""
    amp = measure_tone_amplitude(trace, frequency_hz)
    return 0.5 * amp * amp


def frequency_sweep(event: DisturbanceEvent, channel: LoopChannel,
                    frequencies_hz: Sequence[float], *,
                    duration_s: float = 0.01,
                    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
                    noise_sigma: float = DEFAULT_NOISE_SIGMA,
                    input_power_w: float = DEFAULT_INPUT_POWER_W,
                    seed: Optional[int] = None) -> FrequencySweep:
    """Swept-sine response: re-drive the sinusoidal source over a frequency
    grid and record the measured tone amplitude at each point.

    This mirrors the lab procedure of exciting the same position at a
    series of frequencies.  Only sinusoidal (piezo) events can be swept.
    """
    if not isinstance(event.params, PztParams):
        raise ValueError("frequency sweeps require a sinusoidal drive")
    rng = np.random.default_rng(seed)
    freqs = np.asarray(list(frequencies_hz), dtype=float)
    amps = np.empty_like(freqs)
    for i, f in enumerate(freqs):
        drive = replace(event.params,
                        angular_frequency_rad_s=2.0 * math.pi * f)
        point = DisturbanceEvent(params=drive, position_m=event.position_m,
                                 start_s=0.0)
        trace = synthesize_trace(
            point, channel, duration_s, sample_rate_hz, noise_sigma,
            seed=int(rng.integers(0, 2**31)), input_power_w=input_power_w)
        amps[i] = measure_tone_amplitude(trace, f)
    # Reference measurement with the drive off fixes the instrument floor.
    quiet = synthesize_trace(
        None, channel, duration_s, sample_rate_hz, noise_sigma,
        seed=int(rng.integers(0, 2**31)), input_power_w=input_power_w)
    probes = freqs[:: max(1, freqs.size // 16)]
    floor = float(np.median([measure_tone_amplitude(quiet, f)
                             for f in probes]))
    return FrequencySweep(frequencies_hz=freqs, amplitudes=amps,
                          noise_floor_amplitude=floor)


def _parabolic_vertex(x_left: float, x_mid: float, x_right: float,
                      y_left: float, y_mid: float, y_right: float) -> float:
    """Vertex abscissa of the parabola through three equally spaced points."""
    denom = y_left - 2.0 * y_mid + y_right
    if denom <= 0:
        return x_mid
    shift = 0.5 * (y_left - y_right) / denom
    return x_mid + shift * (x_right - x_mid)


def _harmonic_support(base: float, freqs: list[float],
                      tolerance_hz: float) -> list[int]:
    hits = []
    for i, f in enumerate(freqs):
        k = int(round(f / base))
        if k >= 1 and abs(f - k * base) <= tolerance_hz:
            hits.append(i)
    return hits


def _assign_harmonics(freqs: list[float], depths: list[float], max_k: int,
                      tolerance_hz: float) -> list[NullFrequency]:
    """Assign harmonic indices to candidate nulls.

    A strongly driven loop can show isolated response zeros that are not
    part of the harmonic comb, so the fundamental is chosen by consensus:
    the candidate whose integer multiples explain the most detections wins
    and unexplained candidates are dropped with a diagnostic.  Two
    detections claiming the same index is a genuine ambiguity and raises.
    """
    if not freqs:
        return []
    best = max(range(len(freqs)),
               key=lambda i: (len(_harmonic_support(freqs[i], freqs,
                                                    tolerance_hz)),
                              depths[i]))
    support = _harmonic_support(freqs[best], freqs, tolerance_hz)
    dropped = [f for i, f in enumerate(freqs) if i not in support]
    if dropped:
        logger.info("dropping %d non-harmonic minima (%s Hz) against "
                    "fundamental %.1f Hz", len(dropped),
                    ", ".join(f"{f:.1f}" for f in dropped), freqs[best])
    nulls = []
    seen: dict[int, float] = {}
    for i in support:
        k = int(round(freqs[i] / freqs[best]))
        if k in seen:
            raise HarmonicAmbiguityError(
                f"nulls at {seen[k]:.1f} Hz and {freqs[i]:.1f} Hz both map "
                f"to harmonic index {k}")
        seen[k] = freqs[i]
        if k <= max_k:
            nulls.append(NullFrequency(frequency_hz=freqs[i], harmonic=k,
                                       depth_db=depths[i]))
    if not nulls:
        raise HarmonicAmbiguityError(
            f"no consistent harmonic assignment within the first {max_k} "
            "indices")
    return nulls


def _nulls_from_sweep(sweep: FrequencySweep, max_k: int,
                      depth_threshold_db: float) -> list[NullFrequency]:
    power = sweep.amplitudes ** 2
    freqs = sweep.frequencies_hz
    reference = np.median(power)
    if sweep.noise_floor_amplitude is not None:
        floor = sweep.noise_floor_amplitude ** 2
        if reference < 10.0 ** (depth_threshold_db / 10.0) * floor:
            logger.info("sweep response sits at the instrument noise floor; "
                        "no localizable structure")
            return []
    found_f: list[float] = []
    found_d: list[float] = []
    for i in range(1, power.size - 1):
        if not (power[i] <= power[i - 1] and power[i] < power[i + 1]):
            continue
        depth_db = 10.0 * math.log10(reference / power[i]) if power[i] > 0 \
            else depth_threshold_db
        if depth_db < depth_threshold_db:
            continue
        found_f.append(float(_parabolic_vertex(
            freqs[i - 1], freqs[i], freqs[i + 1],
            power[i - 1], power[i], power[i + 1])))
        found_d.append(float(depth_db))
    if not found_f:
        logger.info("no sweep minimum reaches %.1f dB below the median "
                    "response", depth_threshold_db)
        return []
    spacing = float(np.median(np.diff(freqs)))
    return _assign_harmonics(found_f, found_d, max_k,
                             tolerance_hz=2.0 * spacing)


def _nulls_from_trace(trace: InterferenceTrace, max_k: int,
                      depth_threshold_db: float,
                      lowest_expected_null_hz: Optional[float],
                      segments: int = 8) -> list[NullFrequency]:
    if lowest_expected_null_hz is not None:
        if trace.duration_s < 4.0 / lowest_expected_null_hz:
            raise InsufficientDataError(
                "trace shorter than four periods of the lowest expected "
                "null")
    n = trace.samples.size
    nperseg = max(64, 2 ** int(math.log2(2 * n / (segments + 1))))
    nperseg = min(nperseg, n)
    freqs, psd = welch(trace.samples, fs=trace.sample_rate_hz,
                       window="hann", nperseg=nperseg,
                       noverlap=nperseg // 2, detrend="constant")
    # Skip DC and window-leakage bins.
    lo = 3
    log_psd = np.full_like(psd, -np.inf)
    positive = psd > 0
    log_psd[positive] = np.log10(psd[positive])
    half_window = max(5, psd.size // 64)
    found_f: list[float] = []
    found_d: list[float] = []
    for i in range(lo + 1, psd.size - 2):
        if not (psd[i] <= psd[i - 1] and psd[i] < psd[i + 1]):
            continue
        lo_w = max(lo, i - half_window)
        hi_w = min(psd.size, i + half_window + 1)
        local_median = float(np.median(psd[lo_w:hi_w]))
        if psd[i] <= 0 or local_median <= 0:
            continue
        depth_db = 10.0 * math.log10(local_median / psd[i])
        if depth_db < depth_threshold_db:
            continue
        found_f.append(float(_parabolic_vertex(
            freqs[i - 1], freqs[i], freqs[i + 1],
            log_psd[i - 1], log_psd[i], log_psd[i + 1])))
        found_d.append(float(depth_db))
    if not found_f:
        logger.info("no spectral notch reaches %.1f dB below the local "
                    "median", depth_threshold_db)
        return []
    bin_hz = freqs[1] - freqs[0]
    return _assign_harmonics(found_f, found_d, max_k,
                             tolerance_hz=2.0 * bin_hz)


def find_null_frequencies(data: Union[InterferenceTrace, FrequencySweep],
                          max_k: int = 3, *,
                          depth_threshold_db: float = 10.0,
                          lowest_expected_null_hz: Optional[float] = None,
                          ) -> list[NullFrequency]:
    """Locate nulls of the nonreciprocal response.

    Two strategies, chosen by input type: swept-sine tables are searched
    for amplitude minima refined by a three-point parabola on the squared
    amplitude; broadband traces go through an averaged Hann-windowed
    spectrum (eight 50 %-overlapping segments) with notches taken as local
    minima at least ``depth_threshold_db`` below the local median and
    refined on the log magnitude.  Returns ascending nulls with harmonic
    indices 1..max_k; an empty list (with a logged diagnostic) when nothing
    reaches the threshold.
    """
    if isinstance(data, FrequencySweep):
        return _nulls_from_sweep(data, max_k, depth_threshold_db)
    if isinstance(data, InterferenceTrace):
        return _nulls_from_trace(data, max_k, depth_threshold_db,
                                 lowest_expected_null_hz)
    raise TypeError(f"cannot search for nulls in {type(data)!r}")


def localize(null: NullFrequency, channel: LoopChannel) -> float:
    """Position along the loop implied by a null frequency.

    ``x = (L - k c / (n f)) / 2`` on the near branch.  Frequencies below
    ``k c / (n L)`` would place the event outside the loop and raise.
    """
    floor_hz = null.harmonic * C_VACUUM / (channel.refractive_index
                                           * channel.length_m)
    if null.frequency_hz < floor_hz:
        raise OutOfLoopError(
            f"null at {null.frequency_hz:.1f} Hz (k={null.harmonic}) lies "
            f"below the in-loop floor {floor_hz:.1f} Hz")
    return float(0.5 * (channel.length_m
                        - null.harmonic * C_VACUUM
                        / (channel.refractive_index * null.frequency_hz)))


def resolution(null: NullFrequency, channel: LoopChannel,
               delta_f_hz: float = DEFAULT_FREQ_RESOLUTION_HZ) -> float:
    """Position resolution set by the instrument frequency resolution.

    ``R = (k c / n) |df / (f^2 - df^2)|``, which is algebraically the
    position span swept as the measured frequency moves across ``+-df``.
    """
    if null.frequency_hz <= delta_f_hz:
        raise UndefinedResolutionError(
            f"null frequency {null.frequency_hz} Hz is not above the "
            f"frequency resolution {delta_f_hz} Hz")
    k = null.harmonic
    f = null.frequency_hz
    return (k * C_VACUUM / channel.refractive_index) * abs(
        delta_f_hz / (f * f - delta_f_hz * delta_f_hz))


def localization_error(f_samples_hz: Sequence[float], harmonic: int,
                       channel: LoopChannel) -> float:
    """Propagated position uncertainty from repeated frequency readings.

    The frequency scatter (sample standard deviation) maps through the
    local slope ``|dx/df| = k c / (2 n f^2)`` at the sample mean.
    """
    samples = np.asarray(list(f_samples_hz), dtype=float)
    if samples.size < 2:
        raise InsufficientDataError(
            "error propagation needs at least two frequency samples")
    mean = float(samples.mean())
    sigma_f = float(samples.std(ddof=1))
    slope = harmonic * C_VACUUM / (2.0 * channel.refractive_index * mean * mean)
    return slope * sigma_f


def localization_report(nulls: Sequence[NullFrequency],
                        channel: LoopChannel,
                        delta_f_hz: float = DEFAULT_FREQ_RESOLUTION_HZ,
                        ) -> LocalizationReport:
    """Assemble the full report from a set of detected nulls.

    The position comes from the lowest harmonic; when several harmonics
    were caught, their fundamental-equivalent frequencies feed the
    propagated uncertainty.
    """
    if not nulls:
        raise InsufficientDataError("no nulls to localize from")
    ordered = sorted(nulls, key=lambda nf: nf.harmonic)
    first = ordered[0]
    x = localize(first, channel)
    fundamentals = [nf.frequency_hz / nf.harmonic for nf in ordered]
    sigma = None
    if len(fundamentals) >= 2:
        sigma = localization_error(fundamentals, 1, channel)
    return LocalizationReport(
        nulls=tuple(ordered),
        position_m=x,
        resolution_m=resolution(first, channel, delta_f_hz),
        sigma_position_m=sigma,
        path_difference_m=channel.length_m - 2.0 * x,
        mirror_position_m=channel.length_m - x,
    )


def significance(trace: InterferenceTrace,
                 min_frequency_hz: float = 50.0) -> tuple[float, float]:
    """Strongest AC component against the noise floor.

    Returns ``(candidate_frequency_hz, peak_to_floor_ratio)`` where the
    floor is the median spectral power away from DC.
    """
    n = trace.samples.size
    nperseg = max(64, 2 ** int(math.log2(max(4, 2 * n / 9))))
    nperseg = min(nperseg, n)
    freqs, psd = welch(trace.samples, fs=trace.sample_rate_hz, window="hann",
                       nperseg=nperseg, noverlap=nperseg // 2,
                       detrend="constant")
    band = freqs >= min_frequency_hz
    if not np.any(band):
        raise InsufficientDataError("trace too short for a spectral estimate")
    floor = float(np.median(psd[band]))
    idx = int(np.argmax(psd[band]))
    candidate = float(freqs[band][idx])
    peak = float(psd[band][idx])
    ratio = peak / floor if floor > 0 else math.inf
    return candidate, ratio
