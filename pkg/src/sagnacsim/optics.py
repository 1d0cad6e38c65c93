"""Closed-form optics of the fiber loop interferometer.

Two counter-propagating pulses pick up a global phase difference (the
communication carrier) while the two orthogonal polarization components of
each pulse accumulate a relative phase from the loop birefringence (the
quasi-static sensing carrier).  A polarization post-selection nearly
orthogonal to the prepared state turns tiny birefringence-delay changes into
large relative intensity changes at the output ports.

Everything here is pure double-precision algebra over immutable inputs.
Phases are kept in radians and never wrapped during accumulation; delays at
the attosecond scale produce phases around 1e-2 rad which must not lose
precision to modular reduction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NoSignalError

#: Speed of light in vacuum (m/s), exact by definition.
C_VACUUM = 299792458.0

#: Operating vacuum wavelength of the shared laser source (m).
DEFAULT_WAVELENGTH_M = 1550e-9


def omega_from_wavelength(wavelength_m: float) -> float:
    """Angular optical frequency (rad/s) for a vacuum wavelength."""
    if wavelength_m <= 0:
        raise ValueError(f"wavelength_m must be positive, got {wavelength_m}")
    return 2.0 * math.pi * C_VACUUM / wavelength_m


@dataclass(frozen=True)
class SpectralPacket:
    """Gaussian spectral probe.

    ``omega0`` is the central angular frequency and ``sigma`` the spectral
    standard deviation, both in rad/s.  ``sigma = 0`` is the exact
    monochromatic limit (the spectral envelope factor becomes exactly 1, no
    epsilon guards anywhere).
    """

    omega0: float
    sigma: float = 0.0

    def __post_init__(self):
        if self.omega0 <= 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")

    @classmethod
    def from_wavelength(cls, wavelength_m: float = DEFAULT_WAVELENGTH_M,
                        sigma: float = 0.0) -> "SpectralPacket":
        return cls(omega0=omega_from_wavelength(wavelength_m), sigma=sigma)


@dataclass(frozen=True)
class LoopChannel:
    """Physical state of the fiber loop.

    ``intrinsic_delay_s`` is the birefringence group delay between the two
    polarization components over one pass; ``delay_shift_s`` is the
    additional delay displacement imposed by a quasi-static disturbance.
    ``bias_phase_rad`` is the global phase difference between the two
    propagation directions set by the modulators.
    """

    length_m: float
    refractive_index: float = 1.468
    intrinsic_delay_s: float = 0.0
    delay_shift_s: float = 0.0
    bias_phase_rad: float = 0.0
    loss_db: float = 0.0

    def __post_init__(self):
        if self.length_m <= 0:
            raise ValueError(f"length_m must be positive, got {self.length_m}")
        if self.refractive_index < 1.0:
            raise ValueError(
                f"refractive_index must be >= 1, got {self.refractive_index}")
        if self.intrinsic_delay_s < 0:
            raise ValueError(
                f"intrinsic_delay_s must be >= 0, got {self.intrinsic_delay_s}")
        if self.loss_db < 0:
            raise ValueError(f"loss_db must be >= 0, got {self.loss_db}")

    @property
    def total_delay_s(self) -> float:
        return self.intrinsic_delay_s + self.delay_shift_s

    @property
    def transit_time_s(self) -> float:
        """One-way propagation time around the full loop."""
        return self.refractive_index * self.length_m / C_VACUUM


@dataclass(frozen=True)
class PostSelection:
    """Polarization analyzer setting.

    The effective angle is always ``base_angle_rad + offset_rad``; the base
    angle comes from calibration against the undisturbed loop and the offset
    is the deliberate working-point detuning.
    """

    base_angle_rad: float
    offset_rad: float = 0.0

    @property
    def angle_rad(self) -> float:
        return self.base_angle_rad + self.offset_rad


@dataclass(frozen=True)
class PortProbabilities:
    """Post-selection success probabilities at the two interferometer ports."""

    reflected: float
    transmitted: float

    def __post_init__(self):
        for name, p in (("reflected", self.reflected),
                        ("transmitted", self.transmitted)):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} probability out of range: {p}")
        if self.reflected + self.transmitted > 1.0 + 1e-12:
            raise ValueError(
                "port probabilities sum above 1: "
                f"{self.reflected} + {self.transmitted}")


def relative_phase(channel: LoopChannel, packet: SpectralPacket) -> float:
    """Relative phase between polarization components after one pass.

    Equals the central frequency times the total birefringence delay,
    ``omega0 * (intrinsic delay + disturbance delay shift)``.
    """
    return packet.omega0 * channel.total_delay_s


def _clip_unit(p: float) -> float:
    # Rounding can push an exact zero a few ulps negative (e.g. 1 + cos(pi)).
    if -1e-12 < p < 0.0:
        return 0.0
    return min(p, 1.0) if p <= 1.0 + 1e-12 else p


def post_selection_probabilities(channel: LoopChannel, packet: SpectralPacket,
                                 ps: PostSelection) -> PortProbabilities:
    """Per-photon success probabilities after path and polarization
    post-selection.

    With global phase difference ``d``, total delay ``tau`` and analyzer
    angle ``eps``::

        P_R = (1 + cos d)/4 * (1 - exp(-(sigma*tau)^2) * cos(2*(phi - eps)))
        P_T = (1 - cos d)/4 * (same spectral factor)

    where ``phi`` is :func:`relative_phase`.  These are conditional
    probabilities per photon entering the loop; source statistics, loss and
    detector efficiency are applied downstream by the key-distribution
    engine.
    """
    tau = channel.total_delay_s
    phi = packet.omega0 * tau
    envelope = math.exp(-((packet.sigma * tau) ** 2))
    spectral = 1.0 - envelope * math.cos(2.0 * (phi - ps.angle_rad))
    cos_d = math.cos(channel.bias_phase_rad)
    p_r = _clip_unit(0.25 * (1.0 + cos_d) * spectral)
    p_t = _clip_unit(0.25 * (1.0 - cos_d) * spectral)
    return PortProbabilities(reflected=p_r, transmitted=p_t)


def visibility_and_qber(p: PortProbabilities) -> tuple[float, float]:
    """Interference visibility and the bit error rate it implies.

    Visibility is the normalized port contrast ``(P_R - P_T)/(P_R + P_T)``
    and the error rate is ``(1 - visibility)/2``.  For the closed-form port
    probabilities the spectral factor cancels, so the visibility reduces to
    the cosine of the global phase difference and is untouched by
    quasi-static delay changes or the analyzer angle.
    """
    total = p.reflected + p.transmitted
    if total <= 0.0:
        raise NoSignalError(
            "both ports are dark; visibility is undefined")
    eta = (p.reflected - p.transmitted) / total
    return eta, 0.5 * (1.0 - eta)
