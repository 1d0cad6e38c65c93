"""Deterministic simulator and analysis toolkit for a fiber Sagnac loop
that interleaves phase-encoded key distribution with interferometric
disturbance sensing, null-frequency localization and weak-measurement
quasi-static metrology."""

__version__ = "0.1.0"

from .controller import (ControllerEvent, EventKind, ScenarioScript,
                         SystemMode, run_scenario, step)
from .disturbance import (DisturbanceEvent, DisturbanceKind, ImpactParams,
                          PressureParams, PztParams, impact_phase,
                          pressure_delay, pzt_phase)
from .optics import (C_VACUUM, LoopChannel, PortProbabilities, PostSelection,
                     SpectralPacket, omega_from_wavelength,
                     post_selection_probabilities, relative_phase,
                     visibility_and_qber)
from .perception import (FrequencySweep, InterferenceTrace,
                         LocalizationReport, NullFrequency,
                         ac_amplitude_theory, effective_gpd,
                         find_null_frequencies, frequency_sweep, localize,
                         localization_error, localization_report, resolution,
                         synthesize_trace)
from .qkd import (Basis, BasisBit, DetectorModel, SiftedKeyRecord,
                  SourceModel, click_probabilities, encode,
                  qber_threshold_check, run_session)
from .wm import (WmCalibration, WmReading, calibrate, contrast_ratio,
                 disturbed_intensity, infer_delay, mass_from_delay,
                 offset_intensity, pressure_staircase)

__all__ = [name for name in dir() if not name.startswith("_")]
