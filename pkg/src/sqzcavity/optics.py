"""Exact frequency-domain model of a two-mirror cavity with an internal
parametric squeezer.

The cavity couples to the outside world through the coupling mirror
(power transmissivity ``t_c_sq``), leaks through the back mirror
(``t_b_sq``) and through a lumped internal round-trip power loss
(``r_int_sq``).  A crystal inside the cavity deamplifies the detected
(phase) quadrature by ``exp(-q)`` per pass and amplifies the orthogonal
(amplitude) quadrature by ``exp(+q)``.  A displacement signal enters at
the back mirror in the phase quadrature.

All output spectra are single-sided quadrature power spectral densities
of the detected field, normalised so that vacuum (shot noise) is exactly
1.  ``length`` is the one-way optical path; a sideband at angular
frequency ``omega`` picks up ``exp(2j * omega * length / c)`` per round
trip.

Two independent routes to the same physics live here:

* ``io_system_solve`` assembles and solves the linear input-output
  relations port by port (used as the reference computation in tests),
* ``exact_noise_psd`` / ``exact_signal_tf_sq`` / ``signal_transfer``
  evaluate the closed-form solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import HBAR, SPEED_OF_LIGHT
from .errors import AboveThreshold, InvalidConfig, SingularSystem

_SINGULAR_TOL = 1e-12
# |det| of the 3x3 input-output system below which the cavity is treated
# as oscillating; the matrix entries are O(1) so this is an absolute test.


@dataclass(frozen=True)
class OpticalConfig:
    """Physical description of the squeezing cavity.

    Parameters
    ----------
    lambda0 : float
        Carrier wavelength [m].
    length : float
        One-way optical cavity length [m].
    t_c_sq : float
        Coupling mirror power transmissivity, in [0, 1).
    t_b_sq : float
        Back mirror power transmissivity, in [0, 1).
    r_int_sq : float
        Internal round-trip power loss (crystal absorption, scatter),
        in [0, 1).
    q : float
        Single-pass amplitude squeeze factor of the crystal, >= 0.
    eta_det : float
        Detection efficiency: power fraction of the cavity output that
        is registered by the detector, in [0, 1].
    p_circ : float
        Circulating carrier power inside the cavity [W], >= 0.
    """

    lambda0: float
    length: float
    t_c_sq: float
    t_b_sq: float = 0.0
    r_int_sq: float = 0.0
    q: float = 0.0
    eta_det: float = 1.0
    p_circ: float = 1.0

    def __post_init__(self):
        if not self.lambda0 > 0.0:
            raise InvalidConfig(f"lambda0 must be > 0, got {self.lambda0}")
        if not self.length > 0.0:
            raise InvalidConfig(f"length must be > 0, got {self.length}")
        for name in ("t_c_sq", "t_b_sq", "r_int_sq"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise InvalidConfig(f"{name} must be in [0, 1), got {value}")
        if not 0.0 <= self.eta_det <= 1.0:
            raise InvalidConfig(f"eta_det must be in [0, 1], got {self.eta_det}")
        if not self.q >= 0.0:
            raise InvalidConfig(f"q must be >= 0, got {self.q}")
        if not self.p_circ >= 0.0:
            raise InvalidConfig(f"p_circ must be >= 0, got {self.p_circ}")

    # amplitude-domain mirror coefficients

    @property
    def t_c(self) -> float:
        return math.sqrt(self.t_c_sq)

    @property
    def r_c(self) -> float:
        return math.sqrt(1.0 - self.t_c_sq)

    @property
    def t_b(self) -> float:
        return math.sqrt(self.t_b_sq)

    @property
    def r_b(self) -> float:
        return math.sqrt(1.0 - self.t_b_sq)

    @property
    def r_int(self) -> float:
        return math.sqrt(self.r_int_sq)

    @property
    def t_int(self) -> float:
        return math.sqrt(1.0 - self.r_int_sq)

    @property
    def t_det(self) -> float:
        return math.sqrt(self.eta_det)

    @property
    def r_det(self) -> float:
        return math.sqrt(1.0 - self.eta_det)

    # derived geometry and scales

    @property
    def loss_sq(self) -> float:
        """Total round-trip power loss excluding the coupler: r_int^2 + t_b^2."""
        return self.r_int_sq + self.t_b_sq

    @property
    def transit_time(self) -> float:
        """One-way light travel time L/c [s]."""
        return self.length / SPEED_OF_LIGHT

    @property
    def fsr_rad_s(self) -> float:
        """Free spectral range pi*c/L as an angular frequency [rad/s]."""
        return math.pi / self.transit_time

    @property
    def sensitivity_scale(self) -> float:
        """Absolute scale 8*pi*P_circ / (hbar * lambda0 * L) of the signal
        transfer, [1/(W s) * W] evaluated for the configured power."""
        return 8.0 * math.pi * self.p_circ / (HBAR * self.lambda0 * self.length)

    @property
    def survival(self) -> float:
        """Round-trip amplitude survival factor r_c * r_b * t_int."""
        return self.r_c * self.r_b * self.t_int


def opo_threshold(cfg: OpticalConfig) -> float:
    """Squeeze factor at which the cavity starts to oscillate.

    The amplified quadrature sees a round-trip amplitude gain
    ``survival * exp(2q)``; oscillation sets in when that product
    reaches 1, i.e. at ``q = -0.5 * log(r_c * r_b * t_int)``.
    """
    return -0.5 * math.log(cfg.survival)


def _check_below_threshold(cfg: OpticalConfig) -> None:
    q_th = opo_threshold(cfg)
    if cfg.q >= q_th:
        raise AboveThreshold(
            f"q = {cfg.q:g} is at or above the oscillation threshold "
            f"q_th = {q_th:g}; steady-state spectra are undefined"
        )


def _as_omega(omega):
    w = np.asarray(omega, dtype=float)
    return w, (np.ndim(omega) == 0)


def _resonance_denominator(survival, q, omega, transit_time):
    """|1 - survival * e^{-2q} e^{2i w tau}|^2 in cancellation-free form.

    With ``x = survival * exp(-2q)`` the squared modulus expands to
    ``(1 - x)^2 + 4 x sin^2(w tau)``, which stays accurate when x is
    close to 1 (high finesse, near threshold).
    """
    x = survival * np.exp(-2.0 * q)
    return (1.0 - x) ** 2 + 4.0 * x * np.sin(omega * transit_time) ** 2


def _raw_noise_psd(t_c_sq, t_b_sq, r_int_sq, eta, q, transit_time, omega):
    """Closed-form detected noise PSD without the threshold guard.

    Negative ``q`` models the pump phase flipped by 180 degrees, which
    anti-squeezes the detected quadrature.  The fitter relies on this
    staying finite for transient above-threshold iterates.
    """
    r_b_sq = 1.0 - t_b_sq
    t_int_sq = 1.0 - r_int_sq
    survival = math.sqrt((1.0 - t_c_sq) * r_b_sq * t_int_sq)
    dnm = _resonance_denominator(survival, q, omega, transit_time)
    num = (
        t_c_sq
        * eta
        * t_int_sq
        * (-np.expm1(-2.0 * q))
        * (1.0 + np.exp(-2.0 * q) * r_b_sq)
    )
    return 1.0 - num / dnm


def _raw_signal_tf_sq(t_c_sq, t_b_sq, r_int_sq, eta, q, transit_time, omega,
                      scale=1.0):
    """Closed-form |transfer|^2 without the threshold guard (scale applied)."""
    r_b_sq = 1.0 - t_b_sq
    t_int_sq = 1.0 - r_int_sq
    survival = math.sqrt((1.0 - t_c_sq) * r_b_sq * t_int_sq)
    dnm = _resonance_denominator(survival, q, omega, transit_time)
    return scale * math.exp(-2.0 * q) * t_c_sq * eta * t_int_sq / dnm


def exact_noise_psd(cfg: OpticalConfig, omega):
    """Detected quadrature noise PSD, shot noise = 1.

    Evaluates the closed-form solution of the input-output relations:

        S(w) = 1 - t_c^2 eta t_int^2 (1 - e^{-2q}) (1 + e^{-2q} r_b^2) / D(w)
        D(w) = (1 - x)^2 + 4 x sin^2(w L / c),   x = r_c r_b t_int e^{-2q}

    The PSD is even in ``omega`` and periodic with period pi*c/L.  At
    ``q = 0`` the numerator vanishes identically and the result is
    exactly 1 at every frequency.

    Parameters
    ----------
    cfg : OpticalConfig
    omega : float or ndarray
        Angular sideband frequency [rad/s].

    Raises
    ------
    AboveThreshold
        If ``cfg.q >= opo_threshold(cfg)``.
    """
    _check_below_threshold(cfg)
    w, scalar = _as_omega(omega)
    out = _raw_noise_psd(cfg.t_c_sq, cfg.t_b_sq, cfg.r_int_sq, cfg.eta_det,
                         cfg.q, cfg.transit_time, w)
    return float(out) if scalar else out


def exact_signal_tf_sq(cfg: OpticalConfig, omega):
    """Squared modulus of the displacement-to-detector transfer function.

    Absolute normalization: a displacement PSD multiplied by this
    transfer gives a detected PSD in shot noise units,

        |T(w)|^2 = (8 pi P_circ / (hbar lambda0 L))
                   * e^{-2q} t_c^2 eta t_int^2 / D(w)

    with the same resonance denominator D as ``exact_noise_psd``.

    Raises
    ------
    AboveThreshold
        If ``cfg.q >= opo_threshold(cfg)``.
    """
    _check_below_threshold(cfg)
    w, scalar = _as_omega(omega)
    out = _raw_signal_tf_sq(cfg.t_c_sq, cfg.t_b_sq, cfg.r_int_sq, cfg.eta_det,
                            cfg.q, cfg.transit_time, w,
                            scale=cfg.sensitivity_scale)
    return float(out) if scalar else out


def signal_transfer(cfg: OpticalConfig, omega):
    """Complex displacement transfer coefficient, for phase-aware consumers.

    Returned up to the global mean-field normalization (the carrier
    amplitude and wavenumber prefactor), so that

        sensitivity_scale * |signal_transfer|^2 == exact_signal_tf_sq.

    Raises
    ------
    AboveThreshold
        If ``cfg.q >= opo_threshold(cfg)``.
    """
    _check_below_threshold(cfg)
    w, scalar = _as_omega(omega)
    half_trip = np.exp(1j * w * cfg.transit_time)
    out = (cfg.t_c * cfg.t_det * cfg.t_int * math.exp(cfg.q) * half_trip
           / (math.exp(2.0 * cfg.q) - half_trip**2 * cfg.survival))
    return complex(out) if scalar else out


def intracavity_phase_psd(cfg: OpticalConfig, omega):
    """Noise PSD of the squeezed (phase) quadrature inside the cavity.

    Closed form valid for sideband frequencies well below the free
    spectral range (the round-trip phase is linearised); this is not
    enforced.  The absolute normalization carries the resonant buildup
    factor, so only ratios between configurations are meaningful.

    Raises
    ------
    AboveThreshold
        If ``cfg.q >= opo_threshold(cfg)``.
    """
    _check_below_threshold(cfg)
    w, scalar = _as_omega(omega)
    e2q = math.exp(-2.0 * cfg.q)
    r_c_sq = 1.0 - cfg.t_c_sq
    r_b_sq = 1.0 - cfg.t_b_sq
    t_int_sq = 1.0 - cfg.r_int_sq
    loop2 = cfg.r_c * cfg.r_b * t_int_sq  # two crystal passes, one mirror bounce
    num = (
        r_c_sq * cfg.r_int_sq
        + cfg.t_c_sq
        + r_c_sq * cfg.t_b_sq * t_int_sq * e2q
        + cfg.t_c_sq * r_b_sq * cfg.r_int_sq * t_int_sq * e2q**2
    )
    dnm = (1.0 - loop2 * e2q) ** 2 + 4.0 * e2q * loop2 * (w * cfg.transit_time) ** 2
    out = num / dnm
    return float(out) if scalar else out


@dataclass(frozen=True)
class QuadratureCoefficients:
    """Detected-field coefficients of one quadrature, per input port.

    Each entry is the complex amplitude that a unit-variance vacuum
    entering the named port contributes to the detected quadrature.
    ``signal`` is the response to a unit phase-quadrature displacement
    drive at the back mirror (populated for the deamplified quadrature
    only), stripped of the global mean-field normalization.
    """

    input_port: np.ndarray
    back_port: np.ndarray
    internal_loss: np.ndarray
    detection_loss: np.ndarray
    signal: np.ndarray | None = None

    def noise_psd(self) -> np.ndarray:
        """Shot-noise-normalised PSD: incoherent sum over vacuum ports."""
        return (
            np.abs(self.input_port) ** 2
            + np.abs(self.back_port) ** 2
            + np.abs(self.internal_loss) ** 2
            + np.abs(self.detection_loss) ** 2
        )


@dataclass(frozen=True)
class IOSolution:
    """Port-resolved solution of the cavity input-output relations."""

    amplitude: QuadratureCoefficients
    phase: QuadratureCoefficients
    sensitivity_scale: float

    def noise_psd(self) -> np.ndarray:
        """Detected (phase quadrature) noise PSD, vacuum = 1."""
        return self.phase.noise_psd()

    def amplitude_noise_psd(self) -> np.ndarray:
        """PSD of the orthogonal, amplified quadrature (anti-squeezing)."""
        return self.amplitude.noise_psd()

    def signal_tf_sq(self) -> np.ndarray:
        """Squared modulus of the displacement transfer, absolute scale."""
        return self.sensitivity_scale * np.abs(self.phase.signal) ** 2


def io_system_solve(cfg: OpticalConfig, omega) -> IOSolution:
    """Solve the two-photon input-output relations of the cavity.

    For each quadrature the steady-state field amplitudes
    (intra-cavity forward, intra-cavity return, detected) satisfy a
    3x3 linear system driven by the four vacuum ports and, in the
    deamplified quadrature, the displacement signal.  The system is
    assembled literally and solved port by port; nothing here reuses
    the closed-form spectra, so this function doubles as an
    independent cross-check of them.

    Parameters
    ----------
    cfg : OpticalConfig
    omega : float or ndarray
        Angular sideband frequency [rad/s].

    Returns
    -------
    IOSolution

    Raises
    ------
    SingularSystem
        If the system matrix is numerically singular, which happens
        exactly at the oscillation threshold.
    """
    w = np.asarray(omega, dtype=float)
    round_trip = np.exp(2j * w * cfg.transit_time)
    half_trip = np.exp(1j * w * cfg.transit_time)

    solved = {}
    for label, gain_sign in (("amplitude", +1.0), ("phase", -1.0)):
        pass_gain = math.exp(gain_sign * cfg.q)
        loop = cfg.t_int * cfg.r_b * round_trip * pass_gain**2
        det = 1.0 - cfg.r_c * loop
        if np.any(np.abs(det) < _SINGULAR_TOL):
            raise SingularSystem(
                f"{label} quadrature loop is singular "
                f"(|1 - r_c r_b t_int e^{{+-2q}} e^{{2i w L/c}}| < {_SINGULAR_TOL:g}); "
                "the cavity is at its oscillation threshold"
            )

        with_signal = gain_sign < 0.0
        n_ports = 5 if with_signal else 4
        mat = np.zeros(w.shape + (3, 3), dtype=complex)
        # unknowns: [forward field behind coupler, return field, detected field]
        mat[..., 0, 0] = 1.0
        mat[..., 0, 1] = -cfg.r_c
        mat[..., 1, 0] = -loop
        mat[..., 1, 1] = 1.0
        mat[..., 2, 1] = -cfg.t_det * cfg.t_c
        mat[..., 2, 2] = 1.0

        rhs = np.zeros(w.shape + (3, n_ports), dtype=complex)
        rhs[..., 0, 0] = cfg.t_c                      # input vacuum, into cavity
        rhs[..., 2, 0] = -cfg.t_det * cfg.r_c         # input vacuum, prompt reflection
        rhs[..., 1, 1] = cfg.t_int * cfg.t_b * half_trip * pass_gain
        rhs[..., 1, 2] = cfg.r_int                    # internal loss vacuum
        rhs[..., 2, 3] = cfg.r_det                    # detection loss vacuum
        if with_signal:
            rhs[..., 1, 4] = cfg.t_int * half_trip * pass_gain

        try:
            sol = np.linalg.solve(mat, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(str(exc)) from exc
        detected = sol[..., 2, :]
        solved[label] = QuadratureCoefficients(
            input_port=detected[..., 0],
            back_port=detected[..., 1],
            internal_loss=detected[..., 2],
            detection_loss=detected[..., 3],
            signal=detected[..., 4] if with_signal else None,
        )

    return IOSolution(
        amplitude=solved["amplitude"],
        phase=solved["phase"],
        sensitivity_scale=cfg.sensitivity_scale,
    )
