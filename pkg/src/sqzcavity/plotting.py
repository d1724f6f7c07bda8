"""Quick-look figures rendered next to the delimited outputs.

Import of this module selects a non-interactive backend unless the
environment has already chosen one, so it is safe on headless machines.
"""

from __future__ import annotations

import os

os.environ.setdefault("MPLBACKEND", "Agg")

import matplotlib.pyplot as plt
import numpy as np

from .spectrum import Spectrum

_DPI = 150
_TWO_PI = 2.0 * np.pi


def _freq_axis(ax, freq_hz):
    ax.set_xlabel("Sideband frequency (Hz)")
    if freq_hz.size > 1 and freq_hz[0] > 0 and freq_hz[-1] / freq_hz[0] > 30:
        ax.set_xscale("log")


def save_spectrum_plot(path, spectrum: Spectrum) -> None:
    """Noise PSD (dB relative to shot noise) and SNR versus frequency."""
    freq_hz = spectrum.omega / _TWO_PI
    fig, (ax_noise, ax_snr) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    noise_db = 10.0 * np.log10(np.maximum(spectrum.channel("noise_psd"), 1e-300))
    ax_noise.plot(freq_hz, noise_db, color="tab:blue")
    ax_noise.axhline(0.0, color="gray", linestyle="--", linewidth=1,
                     label="shot noise")
    ax_noise.set_ylabel("Noise PSD (dB rel. shot)")
    ax_noise.legend()
    ax_noise.grid(alpha=0.3)
    ax_snr.plot(freq_hz, spectrum.channel("snr"), color="tab:red")
    ax_snr.set_ylabel("SNR (1/(W s))")
    ax_snr.set_yscale("log")
    ax_snr.grid(alpha=0.3)
    _freq_axis(ax_snr, freq_hz)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_fit_plot(path, measured, prediction: Spectrum,
                  anti_squeezing=None) -> None:
    """Measured points with the fitted model, and the predicted signal
    deamplification with its confidence band."""
    freq_hz = prediction.omega / _TWO_PI
    fig, (ax_fit, ax_pred) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    err = measured.sigma_db if measured.sigma_db is not None else None
    ax_fit.errorbar(measured.freq_hz, measured.psd_db, yerr=err, fmt=".",
                    color="tab:blue", markersize=4, label="measured")
    if anti_squeezing is not None:
        err_a = anti_squeezing.sigma_db
        ax_fit.errorbar(anti_squeezing.freq_hz, anti_squeezing.psd_db,
                        yerr=err_a, fmt=".", color="tab:orange", markersize=4,
                        label="measured (pump flipped)")
    ax_fit.plot(freq_hz, prediction.channel("squeezing_db_model"),
                color="black", label="fit")
    ax_fit.axhline(0.0, color="gray", linestyle="--", linewidth=1)
    ax_fit.set_ylabel("Noise PSD (dB rel. shot)")
    ax_fit.legend()
    ax_fit.grid(alpha=0.3)
    ax_pred.fill_between(freq_hz, prediction.channel("deamp_db_lo"),
                         prediction.channel("deamp_db_hi"),
                         color="gray", alpha=0.4, label="confidence band")
    ax_pred.plot(freq_hz, prediction.channel("deamp_db"), color="black",
                 label="signal deamplification")
    ax_pred.plot(freq_hz, prediction.channel("snr_gain_db"), color="tab:green",
                 label="SNR gain")
    ax_pred.set_ylabel("Level (dB)")
    ax_pred.legend()
    ax_pred.grid(alpha=0.3)
    _freq_axis(ax_pred, freq_hz)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_gain_plot(path, curves: dict) -> None:
    """Sensitivity-bandwidth gain versus detected squeezing, one line per
    detection efficiency."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for eta, points in curves.items():
        x = [pt.detected_squeeze_db for pt in points]
        y = [pt.gain for pt in points]
        ax.plot(x, y, marker=".", label=f"eta = {eta:g}")
    ax.axhline(1.0, color="gray", linestyle="--", linewidth=1)
    ax.set_xlabel("Detected squeezing at resonance (dB)")
    ax.set_ylabel("Sensitivity-bandwidth gain")
    ax.invert_xaxis()
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
