"""Ear-canal area functions from input impedance via the inverse Webster horn solution."""

from .calibration import (BAND, CalibrationRecord, ErrorReport, LinearFit, cross_validate,
                          find_l_lme, fit_fcut_regression, rms_errors, sweep)
from .config import INTERVAL_PRESETS, LegacyOptions, PipelineConfig, fcut_model
from .horns import (Conical, Exponential, Parabolic, SteppedTubes, TaperedParabolic, Uniform,
                    generate_area, synthesize)
from .inverse_solver import (AreaFunction, TerminationReport, invert, read_area_csv, spatial_step,
                             termination_lengths, write_area_csv)
from .pipeline import Estimate, estimate, predict_ztrans, roundtrip
from .reflectance import BlackmanWindowSpec, blackman_window, reflectance_from_impedance, surge_adjust
from .signal_core import (DEFAULT_CONSTANTS, FrequencyGrid, ImpedanceSpectrum, PhysicalConstants,
                          RealSignal, extrapolate_impedance, fft_length_for, read_impedance_csv,
                          write_impedance_csv)
from .transmission import (RigidTermination, TabulatedImpedance, TwoPortChain, chain, input_impedance,
                           segment_matrix, transfer_impedance)

__all__ = [name for name in dir() if not name.startswith("_")]
