"""Polarization-qubit storage in a dual-rail atomic frequency comb memory.

Modules: ``polarization`` (Jones calculus and qubit states), ``benchmark``
(classical measure-and-prepare fidelity for Poissonian inputs), ``memory``
(AFC comb model and echo propagation), ``detection`` (click statistics),
``tomography`` (state reconstruction and fringe fits), ``pipeline``/``cli``.
"""
from .benchmark import (SINGLE_PHOTON_BOUND, BenchmarkPoint, benchmark_curve, f_class,
                        f_class_unit_efficiency, n_min_for_efficiency, poisson_pmf, regime)
from .detection import ChannelParams, CountRecord, run_counts
from .memory import BandwidthError, MemoryParams, propagate_pulse
from .polarization import (DensityMatrix2, InvalidStateError, MeasurementSetting, PureQubit,
                           analyzer_setting, canonical_state, fidelity, projection_probability)
from .tomography import MLEConvergenceError, TomographyResult, linear_inversion, max_likelihood, reconstruct

__version__ = "0.1.0"
