"""Independent reference computations used to pin expected test values.

These deliberately avoid the closed forms under test: the port probability
oracle integrates the spectral density numerically, and the Taylor bound
evaluates position differences directly.
"""
from __future__ import annotations

import math

import numpy as np

C = 299792458.0


def spectral_port_probability(delta_bias: float, omega0: float, sigma: float,
                              tau: float, epsilon: float,
                              n_points: int = 100_001) -> float:
    """Reflected-port probability by quadrature over the spectral density.

    The packet amplitude is Gaussian around ``omega0`` with amplitude width
    ``sigma`` (density width ``sigma / sqrt(2)``); each spectral component
    passes the nearly orthogonal analyzer with amplitude
    ``sin(omega tau - epsilon)``, the destructive-at-null convention.  The
    path interference contributes ``(1 + cos(delta_bias)) / 2``.
    """
    if sigma == 0.0:
        weight_mean = math.sin(omega0 * tau - epsilon) ** 2
    else:
        omega = np.linspace(omega0 - 8.0 * sigma, omega0 + 8.0 * sigma,
                            n_points)
        density = np.exp(-((omega - omega0) / sigma) ** 2)
        weighted = density * np.sin(omega * tau - epsilon) ** 2
        weight_mean = np.trapezoid(weighted, omega) / np.trapezoid(density,
                                                                   omega)
    return 0.5 * (1.0 + math.cos(delta_bias)) * float(weight_mean)


def position_from_null(f_hz: float, k: int, length_m: float,
                       index: float) -> float:
    return 0.5 * (length_m - k * C / (index * f_hz))


def two_sided_position_span(f_hz: float, k: int, length_m: float,
                            index: float, delta_f_hz: float) -> float:
    """|x(f - df) - x(f + df)|, the direct position span across the
    frequency resolution."""
    return abs(position_from_null(f_hz - delta_f_hz, k, length_m, index)
               - position_from_null(f_hz + delta_f_hz, k, length_m, index))


def first_order_span(f_hz: float, k: int, index: float,
                     delta_f_hz: float) -> float:
    """First-order Taylor estimate of the same span: 2 |dx/df| df."""
    slope = k * C / (2.0 * index * f_hz * f_hz)
    return 2.0 * slope * delta_f_hz


def exact_contrast_ratio(delta_tau: float, delta_epsilon: float,
                         omega0: float) -> float:
    shift = omega0 * delta_tau
    return (math.cos(2.0 * delta_epsilon - 2.0 * shift)
            - math.cos(2.0 * delta_epsilon)) / (
                1.0 - math.cos(2.0 * delta_epsilon))
