"""Quantum-noise modeling for a cavity with an internal parametric squeezer.

The package computes detected noise and signal-transfer spectra of a
two-mirror cavity whose circulating field is squeezed by an internal
parametric amplifier, derives the sensitivity-bandwidth trade-off of
such a detector, and fits the model to measured squeezing spectra.

Layers
------
``optics``
    Exact frequency-domain model: closed-form detected spectra, an
    independent route that solves the quadrature input-output system
    numerically, the oscillation threshold, and the intra-cavity
    squeezing spectrum.
``rates``
    Reduced single-pole description in terms of coupling, squeezing and
    loss rates: Lorentzian spectra, closed-form bandwidth, peak
    sensitivity, enhancement gain and the standard sensitivity-bandwidth
    limit.
``analysis``
    Grid evaluation, numeric bandwidth extraction, integrated
    sensitivity, gain curves over squeeze factor and the optimal
    squeeze setting.
``fitting``
    Weighted least-squares estimation of cavity parameters from
    measured spectra, with covariance, identifiability diagnostics and
    model predictions.
``dataio`` / ``plotting`` / ``cli``
    File formats, quick-look figures and the command-line surface.
"""

from .analysis import (GainCurvePoint, OptimalSqueeze, gain_curve,
                       integrated_sensitivity, intracavity_variance,
                       numeric_bandwidth, optimal_squeeze, snr_spectrum)
from .constants import HBAR, SPEED_OF_LIGHT
from .errors import (AboveThreshold, DegenerateJacobian, InsufficientData,
                     InvalidConfig, NoCrossing, NonConvergence,
                     NumericalDomain, QuadratureFailure, SingularSystem,
                     SqzCavityError)
from .fitting import (DEFAULT_BOUNDS, MODEL_VERSION, PARAM_NAMES, FitResult,
                      MeasuredSpectrum, default_initial_guess,
                      fit_squeezing_spectrum, predict_deamplification,
                      snr_improvement)
from .optics import (IOSolution, OpticalConfig, QuadratureCoefficients,
                     exact_noise_psd, exact_signal_tf_sq, intracavity_phase_psd,
                     io_system_solve, opo_threshold, signal_transfer)
from .rates import (CavityRates, approx_noise_psd, approx_signal_tf_sq,
                    closed_form_bandwidth, enhancement_gain, peak_sensitivity,
                    rates_from_optics, standard_limit)
from .spectrum import Spectrum

__version__ = "0.1.0"

__all__ = [
    "AboveThreshold",
    "CavityRates",
    "DEFAULT_BOUNDS",
    "DegenerateJacobian",
    "FitResult",
    "GainCurvePoint",
    "HBAR",
    "InsufficientData",
    "InvalidConfig",
    "IOSolution",
    "MeasuredSpectrum",
    "MODEL_VERSION",
    "NoCrossing",
    "NonConvergence",
    "NumericalDomain",
    "OpticalConfig",
    "OptimalSqueeze",
    "PARAM_NAMES",
    "QuadratureCoefficients",
    "QuadratureFailure",
    "SingularSystem",
    "SPEED_OF_LIGHT",
    "Spectrum",
    "SqzCavityError",
    "approx_noise_psd",
    "approx_signal_tf_sq",
    "closed_form_bandwidth",
    "default_initial_guess",
    "enhancement_gain",
    "exact_noise_psd",
    "exact_signal_tf_sq",
    "fit_squeezing_spectrum",
    "gain_curve",
    "integrated_sensitivity",
    "intracavity_phase_psd",
    "intracavity_variance",
    "io_system_solve",
    "numeric_bandwidth",
    "opo_threshold",
    "optimal_squeeze",
    "peak_sensitivity",
    "predict_deamplification",
    "rates_from_optics",
    "signal_transfer",
    "snr_improvement",
    "snr_spectrum",
    "standard_limit",
]
