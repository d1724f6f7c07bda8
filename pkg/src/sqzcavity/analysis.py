"""Derived quantities: SNR spectra, bandwidths, integrated sensitivity,
gain curves and the optimal squeeze factor.

Functions here accept either an :class:`~sqzcavity.optics.OpticalConfig`
(full model) or a :class:`~sqzcavity.rates.CavityRates` (reduced model)
and dispatch on the type.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad

from .constants import SPEED_OF_LIGHT
from .errors import (AboveThreshold, InvalidConfig, NoCrossing,
                     NumericalDomain, QuadratureFailure)
from .optics import (OpticalConfig, exact_noise_psd, exact_signal_tf_sq,
                     intracavity_phase_psd, opo_threshold)
from .rates import (CavityRates, approx_noise_psd, approx_signal_tf_sq,
                    closed_form_bandwidth, enhancement_gain, rates_from_optics)
from .spectrum import Spectrum

_GOLDEN_REL_TOL = 1e-8       # final golden-section bracket, relative to the span
_GOLDEN_SEED_POINTS = 64     # coarse grid used to bracket the maximum
_STATIONARY_AGREEMENT = 1e-6  # numeric vs analytic optimum, relative


def _max_workers() -> int:
    """Worker cap for internal sweeps; SQZ_CAVITY_THREADS overrides the
    hardware default."""
    env = os.environ.get("SQZ_CAVITY_THREADS")
    if env is not None:
        try:
            n = int(env)
        except ValueError as exc:
            raise InvalidConfig(
                f"SQZ_CAVITY_THREADS must be an integer, got {env!r}"
            ) from exc
        if n < 1:
            raise InvalidConfig(f"SQZ_CAVITY_THREADS must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


def _snr_functions(model):
    """Scalar-callable (noise, signal) evaluators for either model."""
    if isinstance(model, OpticalConfig):
        return (lambda w: exact_noise_psd(model, w),
                lambda w: exact_signal_tf_sq(model, w))
    if isinstance(model, CavityRates):
        return (lambda w: approx_noise_psd(model, w),
                lambda w: approx_signal_tf_sq(model, w))
    raise TypeError(f"expected OpticalConfig or CavityRates, got {type(model)!r}")


def snr_spectrum(model, omega) -> Spectrum:
    """Sample noise PSD, squared signal transfer and their ratio.

    Parameters
    ----------
    model : OpticalConfig or CavityRates
        Full cavity description (exact spectra) or reduced rates
        (Lorentzian spectra).
    omega : array_like
        Strictly increasing angular frequency grid [rad/s].

    Returns
    -------
    Spectrum
        Channels ``noise_psd``, ``signal_tf_sq`` and ``snr`` where
        ``snr = signal_tf_sq / noise_psd``.
    """
    w = np.asarray(omega, dtype=float)
    if isinstance(model, OpticalConfig):
        noise = exact_noise_psd(model, w)
        signal = exact_signal_tf_sq(model, w)
    elif isinstance(model, CavityRates):
        noise = approx_noise_psd(model, w)
        signal = approx_signal_tf_sq(model, w)
    else:
        raise TypeError(f"expected OpticalConfig or CavityRates, got {type(model)!r}")
    return Spectrum(
        omega=w,
        channels={
            "noise_psd": np.asarray(noise, dtype=float),
            "signal_tf_sq": np.asarray(signal, dtype=float),
            "snr": np.asarray(signal / noise, dtype=float),
        },
        units={
            "noise_psd": "shot-noise units",
            "signal_tf_sq": "1/(W s), scaled by 8 pi P/(hbar lambda L)",
            "snr": "1/(W s), scaled by 8 pi P/(hbar lambda L)",
        },
    )


def _bisect_to_target(fn, target, lo, hi, f_lo, f_hi, rel_tol=1e-12,
                      max_iter=200):
    # fn decreasing through target on [lo, hi]
    if not (f_lo >= target >= f_hi):
        raise NoCrossing(
            f"no downward crossing of {target:g} in [{lo:g}, {hi:g}]"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if (hi - lo) <= rel_tol * max(abs(hi), 1e-300):
            return mid
        if fn(mid) >= target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def numeric_bandwidth(spec: Spectrum, channel: str = "snr", refine=None) -> float:
    """Frequency at which a channel falls to half its first-point value.

    The grid supplies the bracket; inside the bracketing interval the
    crossing is located by bisection, either on the linear interpolant
    (default, grid-limited accuracy) or on ``refine``, a callable
    ``omega -> value`` evaluating the underlying model.

    Parameters
    ----------
    spec : Spectrum
        Grid should start at (or near) zero frequency; the first sample
        defines the peak.
    channel : str
        Channel to search, default ``"snr"``.
    refine : callable, optional
        Analytic evaluator used for the sub-grid bisection.

    Returns
    -------
    float
        Half-maximum angular frequency [rad/s].

    Raises
    ------
    NoCrossing
        If the channel never falls below half its peak on the grid.
    """
    values = spec.channel(channel)
    peak = values[0]
    target = 0.5 * peak
    below = np.nonzero(values < target)[0]
    if below.size == 0 or peak <= 0.0:
        raise NoCrossing(
            f"channel {channel!r} never falls below half its peak value "
            f"{peak:g} within the grid"
        )
    i = int(below[0])
    if i == 0:
        raise NoCrossing(f"channel {channel!r} starts below half its own peak")
    lo, hi = float(spec.omega[i - 1]), float(spec.omega[i])
    if refine is None:
        v_lo, v_hi = float(values[i - 1]), float(values[i])

        def fn(w):
            return v_lo + (v_hi - v_lo) * (w - lo) / (hi - lo)

        return _bisect_to_target(fn, target, lo, hi, v_lo, v_hi)
    return _bisect_to_target(refine, target, lo, hi, refine(lo), refine(hi))


def _quad_checked(fn, a, b, rel_tol, points=None, limit=300):
    out = quad(fn, a, b, epsabs=0.0, epsrel=rel_tol, limit=limit,
               points=points, full_output=1)
    if len(out) > 3:
        raise QuadratureFailure(f"integration on [{a:g}, {b:g}]: {out[3]}")
    value, abserr = out[0], out[1]
    if not math.isfinite(value):
        raise QuadratureFailure(f"integration on [{a:g}, {b:g}] returned {value}")
    return value, abserr


def integrated_sensitivity(model, rel_tol: float = 1e-8) -> float:
    """Frequency-integrated SNR density.

    Exact model: adaptive quadrature of ``snr(w)`` over one free
    spectral range, [0, pi c / L].  Both edges of that window sit on a
    cavity resonance, so the window holds two resonance shoulders.

    Reduced model: the SNR is the Lorentzian ``A / (B^2 + w^2)`` with
    ``A = prefactor gamma_c eta`` and ``B`` the closed-form bandwidth;
    the integral runs over [0, inf): adaptive quadrature to 100 B plus
    the analytic tail ``(A/B) (pi/2 - arctan 100)``.  The full integral
    is exactly ``(pi/2) A / B = (pi/2) S B`` (peak sensitivity times
    bandwidth times pi/2), one resonance shoulder.  The window
    conventions differ between the two models, so only ratios of values
    from the same model are meaningful; ratios cancel the constants.

    Parameters
    ----------
    model : OpticalConfig or CavityRates
    rel_tol : float
        Quadrature relative tolerance.

    Raises
    ------
    QuadratureFailure
        If the adaptive integration cannot reach ``rel_tol``.
    """
    if isinstance(model, CavityRates):
        amp = model.prefactor * model.gamma_c * model.eta
        if amp == 0.0:
            return 0.0
        width = closed_form_bandwidth(model)

        def lorentzian(w):
            return amp / (width**2 + w * w)

        cut = 100.0 * width
        value, _ = _quad_checked(lorentzian, 0.0, cut, min(rel_tol, 1e-12))
        tail = (amp / width) * (0.5 * math.pi - math.atan(cut / width))
        return value + tail

    if not isinstance(model, OpticalConfig):
        raise TypeError(f"expected OpticalConfig or CavityRates, got {type(model)!r}")

    noise_fn, signal_fn = _snr_functions(model)

    def integrand(w):
        return signal_fn(w) / noise_fn(w)

    fsr = model.fsr_rad_s
    scale = rates_from_optics(model).gamma_total
    interior = sorted({min(5.0 * scale, 0.25 * fsr),
                       min(20.0 * scale, 0.4 * fsr),
                       0.5 * fsr,
                       max(fsr - 20.0 * scale, 0.6 * fsr),
                       max(fsr - 5.0 * scale, 0.75 * fsr)})
    value, _ = _quad_checked(integrand, 0.0, fsr, rel_tol, points=interior)
    return value


def intracavity_variance(cfg: OpticalConfig, rel_tol: float = 1e-10) -> float:
    """Integral of the intra-cavity squeezed-quadrature PSD over [0, inf).

    The PSD is a Lorentzian in the sideband frequency; the integration
    variable is rescaled by its half width so the adaptive quadrature
    sees an O(1) feature.  Like the PSD itself the absolute value
    carries the resonant buildup normalization: use ratios.
    """
    e2q = math.exp(-2.0 * cfg.q)
    loop2 = cfg.r_c * cfg.r_b * (1.0 - cfg.r_int_sq)
    depth = 1.0 - loop2 * e2q
    half_width = depth / (2.0 * cfg.transit_time * math.sqrt(e2q * loop2))

    def integrand(u):
        return intracavity_phase_psd(cfg, u * half_width) * half_width

    value, _ = _quad_checked(integrand, 0.0, np.inf, rel_tol, limit=300)
    return value


@dataclass(frozen=True)
class GainCurvePoint:
    """One squeeze setting on a gain curve.

    ``detected_squeeze_db`` is the resonant noise reduction
    (10 log10 of the detected PSD, <= 0), ``gain`` the ratio of the
    integrated sensitivity to its value at q = 0, ``bandwidth`` the
    half-maximum SNR frequency [rad/s].
    """

    q: float
    detected_squeeze_db: float
    gain: float
    bandwidth: float


def _exact_snr_bandwidth(cfg: OpticalConfig) -> float:
    noise_fn, signal_fn = _snr_functions(cfg)

    def snr(w):
        return signal_fn(w) / noise_fn(w)

    hi = 0.5 * cfg.fsr_rad_s
    peak = snr(0.0)
    return _bisect_to_target(snr, 0.5 * peak, 0.0, hi, peak, snr(hi))


def gain_curve(cfg: OpticalConfig, eta_values, q_values) -> dict[float, list[GainCurvePoint]]:
    """Sensitivity gain versus squeeze factor, one curve per detection
    efficiency.

    For each ``eta`` and each ``q`` the full model is evaluated: the
    resonant squeezing level, the integrated-SNR gain relative to the
    same cavity with the squeezer off, and the SNR half-maximum
    bandwidth.  Points are computed in parallel; the worker count
    follows SQZ_CAVITY_THREADS.

    Parameters
    ----------
    cfg : OpticalConfig
        Base configuration; ``q`` and ``eta_det`` are swept.
    eta_values : iterable of float
    q_values : iterable of float
        Squeeze factors, each below ``opo_threshold(cfg)``.

    Returns
    -------
    dict
        ``eta -> list of GainCurvePoint`` ordered by q.

    Raises
    ------
    AboveThreshold
        If any requested q is not below threshold.
    """
    qs = np.unique(np.asarray(list(q_values), dtype=float))
    if qs.size == 0:
        raise InvalidConfig("q_values must be non-empty")
    if np.any(qs < 0.0):
        raise InvalidConfig("q_values must be >= 0")
    q_th = opo_threshold(cfg)
    if np.any(qs >= q_th):
        raise AboveThreshold(
            f"q grid reaches {qs.max():g}, at or above threshold {q_th:g}"
        )
    etas = [float(e) for e in eta_values]

    def one_point(eta, q, rho_off):
        c = replace(cfg, eta_det=eta, q=float(q))
        squeeze_db = 10.0 * math.log10(exact_noise_psd(c, 0.0))
        gain = integrated_sensitivity(c) / rho_off
        return GainCurvePoint(
            q=float(q),
            detected_squeeze_db=squeeze_db,
            gain=gain,
            bandwidth=_exact_snr_bandwidth(c),
        )

    curves: dict[float, list[GainCurvePoint]] = {}
    workers = min(_max_workers(), max(qs.size, 1))
    for eta in etas:
        rho_off = integrated_sensitivity(replace(cfg, eta_det=eta, q=0.0))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                points = list(pool.map(lambda q: one_point(eta, q, rho_off), qs))
        else:
            points = [one_point(eta, q, rho_off) for q in qs]
        curves[eta] = points
    return curves


@dataclass(frozen=True)
class OptimalSqueeze:
    """Result of the reduced-model gain maximization over q.

    ``loss_limited`` marks the pathological lossless case (eta = 1 and
    gamma_l = 0) where the gain grows without bound toward the
    reduced-model threshold; ``gain`` is then infinite and ``q_opt``
    is the divergence point.
    """

    q_opt: float
    gain: float
    q_stationary: float
    loss_limited: bool = False


def _golden_section_max(fn, lo, hi, rel_tol):
    # classic golden-section search for a maximum of a unimodal function
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    inv_phi_sq = inv_phi**2
    span = hi - lo
    a, b = lo, hi
    c = a + inv_phi_sq * span
    d = a + inv_phi * span
    fc, fd = fn(c), fn(d)
    while (b - a) > rel_tol * max(abs(span), 1e-300):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = a + inv_phi_sq * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def optimal_squeeze(cfg: OpticalConfig) -> OptimalSqueeze:
    """Squeeze factor maximizing the reduced-model sensitivity gain.

    The gain G = (gamma_c + gamma_l) / B is maximized where the
    bandwidth radicand B^2, a convex parabola in gamma_s, is smallest.
    The stationary point is

        gamma_s* = 2 gamma_c eta - gamma_c - gamma_l

    (clipped to 0 when negative: the squeezer cannot help).  A
    golden-section search seeded by a coarse grid confirms the
    stationary point numerically; the two must agree to 1e-6 relative.

    The minimum of B^2 equals 4 gamma_c eta (gamma_c (1 - eta) +
    gamma_l).  When eta = 1 and gamma_l = 0 it vanishes: the gain
    diverges at gamma_s = gamma_c, which is the threshold itself in
    reduced-model terms, and the result is flagged ``loss_limited``.

    Raises
    ------
    AboveThreshold
        If the cavity has no oscillation-free operating range.
    NumericalDomain
        If the numeric and analytic optima disagree.
    """
    q_th = opo_threshold(cfg)
    if q_th <= 0.0:
        raise AboveThreshold("cavity with unity round-trip survival has no "
                             "operating range below threshold")
    base = rates_from_optics(replace(cfg, q=0.0))
    g_c, g_l, eta = base.gamma_c, base.gamma_l, base.eta
    if g_c + g_l == 0.0:
        raise InvalidConfig("gain is undefined for a cavity with no decay "
                            "channels (gamma_c = gamma_l = 0)")
    q_per_rate = cfg.length / SPEED_OF_LIGHT  # q = gamma_s * L / c
    gamma_s_star = 2.0 * g_c * eta - g_c - g_l

    if gamma_s_star > 0.0 and g_c * (1.0 - eta) + g_l == 0.0:
        q_sing = gamma_s_star * q_per_rate
        return OptimalSqueeze(q_opt=q_sing, gain=math.inf,
                              q_stationary=q_sing, loss_limited=True)

    if gamma_s_star <= 0.0:
        return OptimalSqueeze(q_opt=0.0, gain=1.0, q_stationary=0.0)

    q_star = gamma_s_star * q_per_rate

    def gain_at(q):
        return enhancement_gain(rates_from_optics(replace(cfg, q=float(q))))

    q_hi = q_th * (1.0 - 1e-9)
    seeds = np.linspace(0.0, q_hi, _GOLDEN_SEED_POINTS)
    values = [gain_at(q) for q in seeds]
    best = int(np.argmax(values))
    lo = seeds[max(best - 1, 0)]
    hi = seeds[min(best + 1, seeds.size - 1)]
    q_opt = float(_golden_section_max(gain_at, lo, hi, _GOLDEN_REL_TOL))

    if abs(q_opt - q_star) > _STATIONARY_AGREEMENT * max(q_star, 1e-300):
        raise NumericalDomain(
            f"golden-section optimum {q_opt:.12g} disagrees with the "
            f"stationary point {q_star:.12g} beyond {_STATIONARY_AGREEMENT:g} "
            "relative"
        )
    return OptimalSqueeze(q_opt=q_opt, gain=gain_at(q_opt), q_stationary=q_star)
