"""Physical disturbance models.

Maps lab-level knobs (drive voltage, dropped mass, standing weight) onto the
phase or delay waveforms they imprint on the loop.  All waveforms are pure
functions of time and parameters.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.constants import g as STANDARD_GRAVITY

from .optics import C_VACUUM


class DisturbanceKind(enum.Enum):
    PZT_SINUSOID = "pzt"
    TRANSIENT_IMPACT = "impact"
    QUASI_STATIC_PRESSURE = "pressure"


@dataclass(frozen=True)
class PztParams:
    """Sinusoidal phase modulation from a piezo clamped on a bare segment.

    ``phase_gain_rad_per_v`` lumps the stress-optic coefficient, Young's
    modulus, piezo coefficient and modulated length into a single
    rad-per-volt calibration constant.
    """

    drive_amplitude_v: float
    angular_frequency_rad_s: float
    phase_gain_rad_per_v: float = 0.5

    def __post_init__(self):
        for name in ("drive_amplitude_v", "angular_frequency_rad_s",
                     "phase_gain_rad_per_v"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def frequency_hz(self) -> float:
        return self.angular_frequency_rad_s / (2.0 * math.pi)

    @property
    def peak_phase_rad(self) -> float:
        return self.phase_gain_rad_per_v * self.drive_amplitude_v


@dataclass(frozen=True)
class ImpactParams:
    """Point-like transient from a mass dropped onto a bare segment.

    The idealized space-time delta is realized as a unit-peak Gaussian of
    temporal width ``width_s``; the width must stay long against the transit
    time across the impacted region for both directions to see the event.
    ``impact_gain`` lumps the photoelastic coupling into rad per unit
    momentum (kg*m/s).
    """

    mass_kg: float
    drop_height_m: float
    width_s: float = 10e-6
    impact_gain: float = 10.0

    def __post_init__(self):
        for name in ("mass_kg", "drop_height_m", "width_s", "impact_gain"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def peak_phase_rad(self) -> float:
        momentum = self.mass_kg * math.sqrt(
            2.0 * STANDARD_GRAVITY * self.drop_height_m)
        return self.impact_gain * momentum


@dataclass(frozen=True)
class PressureParams:
    """Standing weight pressing a bare fiber section.

    The stress-optic coefficient converts the applied stress (weight over
    contact area) into an index change which accumulates into a group-delay
    shift over the pressed length.
    """

    mass_kg: float
    pressed_length_m: float = 0.1
    contact_area_m2: float = 1e-4
    stress_optic_per_pa: float = 3e-12

    def __post_init__(self):
        if self.mass_kg < 0:
            raise ValueError("mass_kg must be non-negative")
        for name in ("pressed_length_m", "contact_area_m2",
                     "stress_optic_per_pa"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


DisturbanceParams = Union[PztParams, ImpactParams, PressureParams]

_KIND_FOR_PARAMS = {
    PztParams: DisturbanceKind.PZT_SINUSOID,
    ImpactParams: DisturbanceKind.TRANSIENT_IMPACT,
    PressureParams: DisturbanceKind.QUASI_STATIC_PRESSURE,
}


@dataclass(frozen=True)
class DisturbanceEvent:
    """A typed disturbance at a position along the loop.

    ``position_m`` is measured from the beam splitter along the clockwise
    direction.  ``start_s`` anchors the waveform in scenario time: the piezo
    drive and standing weight act from ``start_s`` onward, the impact profile
    is centered on it.
    """

    params: DisturbanceParams
    position_m: float
    start_s: float = 0.0

    def __post_init__(self):
        if type(self.params) not in _KIND_FOR_PARAMS:
            raise TypeError(f"unsupported params type {type(self.params)!r}")
        if self.position_m < 0:
            raise ValueError("position_m must be non-negative")

    @property
    def kind(self) -> DisturbanceKind:
        return _KIND_FOR_PARAMS[type(self.params)]

    @property
    def is_dynamic(self) -> bool:
        return self.kind is not DisturbanceKind.QUASI_STATIC_PRESSURE


def pzt_phase(t, params: PztParams):
    """Phase imposed on a single pass at time ``t`` by the piezo drive.

    Linear in the drive voltage: ``gain * V0 * sin(omega_s * t)``.
    Accepts scalars or arrays.
    """
    return params.peak_phase_rad * np.sin(params.angular_frequency_rad_s * t)


def impact_phase(t, params: ImpactParams, center_s: float = 0.0):
    """Phase pulse from a transient impact, centered on ``center_s``.

    Unit-peak Gaussian of width ``width_s`` scaled by
    ``impact_gain * m * sqrt(2 g h)``; identically zero outside six widths
    from the center, which keeps every value below 1e-12 of the peak there.
    """
    t = np.asarray(t, dtype=float)
    dt = t - center_s
    out = np.where(
        np.abs(dt) <= 6.0 * params.width_s,
        params.peak_phase_rad * np.exp(-0.5 * (dt / params.width_s) ** 2),
        0.0,
    )
    return out if out.ndim else float(out)


def pressure_delay(params: PressureParams) -> float:
    """Group-delay shift (s) between polarization components under load.

    Stress-induced index change ``C * (m g / S)`` accumulated over the
    pressed length and converted to time: ``C * (m g / S) * l / c``.  A
    100 g weight over a 10 cm section gives 9.81e-18 s.
    """
    stress_pa = params.mass_kg * STANDARD_GRAVITY / params.contact_area_m2
    index_change = params.stress_optic_per_pa * stress_pa
    return index_change * params.pressed_length_m / C_VACUUM


def single_pass_phase(t, event: DisturbanceEvent):
    """Phase a single pass picks up from a dynamic event at loop time ``t``.

    Quasi-static pressure contributes no per-pass global phase; only its
    delay shift (see :func:`pressure_delay`) matters, so it returns zero.
    """
    if isinstance(event.params, PztParams):
        t = np.asarray(t, dtype=float)
        active = t >= event.start_s
        out = np.where(active, pzt_phase(t - event.start_s, event.params), 0.0)
        return out if out.ndim else float(out)
    if isinstance(event.params, ImpactParams):
        return impact_phase(t, event.params, center_s=event.start_s)
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    return out if out.ndim else 0.0
