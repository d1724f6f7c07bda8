"""Reduced single-mode description of the squeezing cavity.

Valid when all mirror transmissivities, losses and the squeeze factor
are small and the sideband frequency is far below the free spectral
range.  Every coupling becomes a decay rate:

    gamma_c = c t_c^2 / (4 L)     output coupling
    gamma_s = q c / L             parametric (squeezer) rate
    gamma_l = c l^2 / (4 L)       round-trip loss, l^2 = r_int^2 + t_b^2

and the detected spectra are Lorentzians in the total rate
``Gamma = gamma_c + gamma_s + gamma_l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import HBAR, SPEED_OF_LIGHT
from .errors import InvalidConfig, NumericalDomain
from .optics import OpticalConfig


@dataclass(frozen=True)
class CavityRates:
    """Decay-rate description of the cavity.

    Parameters
    ----------
    gamma_c : float
        Output coupling rate [rad/s], >= 0.
    gamma_s : float
        Parametric squeezing rate [rad/s], >= 0.
    gamma_l : float
        Internal loss rate [rad/s], >= 0.
    eta : float
        Detection efficiency, in [0, 1].
    prefactor : float
        Absolute scale of the signal transfer, 8 pi P_circ/(hbar lambda L)
        for a physical cavity.  The default 1.0 is the normalized mode
        used when only ratios and shapes matter.
    """

    gamma_c: float
    gamma_s: float
    gamma_l: float
    eta: float = 1.0
    prefactor: float = 1.0

    def __post_init__(self):
        for name in ("gamma_c", "gamma_s", "gamma_l"):
            value = getattr(self, name)
            if not value >= 0.0:
                raise InvalidConfig(f"{name} must be >= 0, got {value}")
        if not 0.0 <= self.eta <= 1.0:
            raise InvalidConfig(f"eta must be in [0, 1], got {self.eta}")
        if not self.prefactor >= 0.0:
            raise InvalidConfig(f"prefactor must be >= 0, got {self.prefactor}")

    @property
    def gamma_total(self) -> float:
        """Total decay rate Gamma = gamma_c + gamma_s + gamma_l [rad/s]."""
        return self.gamma_c + self.gamma_s + self.gamma_l


def rates_from_optics(cfg: OpticalConfig) -> CavityRates:
    """Map an optical configuration onto its reduced decay rates."""
    c_over_l = SPEED_OF_LIGHT / cfg.length
    return CavityRates(
        gamma_c=0.25 * c_over_l * cfg.t_c_sq,
        gamma_s=c_over_l * cfg.q,
        gamma_l=0.25 * c_over_l * cfg.loss_sq,
        eta=cfg.eta_det,
        prefactor=cfg.sensitivity_scale,
    )


def approx_noise_psd(rates: CavityRates, omega):
    """Detected noise PSD in the reduced model, shot noise = 1.

        S(w) = 1 - 4 gamma_c gamma_s eta / (Gamma^2 + w^2)
    """
    g = rates.gamma_total
    return 1.0 - 4.0 * rates.gamma_c * rates.gamma_s * rates.eta / (
        g**2 + np.asarray(omega, dtype=float) ** 2
    )


def approx_signal_tf_sq(rates: CavityRates, omega):
    """Squared signal transfer in the reduced model.

        |T(w)|^2 = prefactor * gamma_c eta / (Gamma^2 + w^2)
    """
    g = rates.gamma_total
    return rates.prefactor * rates.gamma_c * rates.eta / (
        g**2 + np.asarray(omega, dtype=float) ** 2
    )


def closed_form_bandwidth(rates: CavityRates) -> float:
    """Half width of the detected SNR Lorentzian [rad/s].

        B = sqrt(Gamma^2 - 4 gamma_c gamma_s eta)

    Raises
    ------
    NumericalDomain
        If the radicand is not positive (degenerate or invalid rates).
    """
    radicand = rates.gamma_total**2 - 4.0 * rates.gamma_c * rates.gamma_s * rates.eta
    if radicand <= 0.0:
        raise NumericalDomain(
            f"bandwidth radicand Gamma^2 - 4 gamma_c gamma_s eta = {radicand:g} "
            "is not positive"
        )
    return math.sqrt(radicand)


def peak_sensitivity(rates: CavityRates) -> float:
    """Resonant SNR density, prefactor * gamma_c * eta / B^2."""
    b = closed_form_bandwidth(rates)
    return rates.prefactor * rates.gamma_c * rates.eta / b**2


def enhancement_gain(rates: CavityRates) -> float:
    """Sensitivity-bandwidth gain over the same cavity without the squeezer.

        G = (gamma_c + gamma_l) / B

    Equals 1 at gamma_s = 0 and exceeds 1 whenever the squeezer improves
    the integrated SNR.
    """
    return (rates.gamma_c + rates.gamma_l) / closed_form_bandwidth(rates)


def standard_limit(p_circ: float, lambda0: float, length: float) -> float:
    """Sensitivity-bandwidth bound of the passive cavity.

        S * B <= 8 pi P_circ / (hbar lambda0 L)

    reached exactly at gamma_s = gamma_l = 0, eta = 1.
    """
    if not (p_circ > 0.0 and lambda0 > 0.0 and length > 0.0):
        raise InvalidConfig(
            f"p_circ, lambda0 and length must all be > 0, got "
            f"({p_circ}, {lambda0}, {length})"
        )
    return 8.0 * math.pi * p_circ / (HBAR * lambda0 * length)
