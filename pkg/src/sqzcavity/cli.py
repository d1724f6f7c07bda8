"""Command-line surface.

Subcommands compute detected spectra, fit measured squeezing data,
sweep gain curves, and report sensitivity limits.  Frequencies at this
boundary are plain Hz; the single conversion to angular frequency
happens in :func:`_omega_grid`.  Data and file paths go to standard
output, diagnostics to standard error.

Exit codes: 0 success; 2 configuration or input-data error (including
usage errors raised by the argument parser); 3 model-domain error such
as operating at or above the oscillation threshold; 4 fit
non-convergence; 5 unidentifiable fit parameters.
"""

from __future__ import annotations

import dataclasses
import functools
import json
import math
import os
import sys
from pathlib import Path

os.environ.setdefault("MPLBACKEND", "Agg")

import click
import numpy as np
from click.core import ParameterSource

from . import __version__, dataio
from .analysis import gain_curve, intracavity_variance, snr_spectrum
from .errors import (DegenerateJacobian, InsufficientData, InvalidConfig,
                     NonConvergence, SqzCavityError)
from .fitting import (PARAM_NAMES, default_initial_guess,
                      fit_squeezing_spectrum, predict_deamplification,
                      snr_improvement)
from .optics import (OpticalConfig, exact_noise_psd, intracavity_phase_psd,
                     opo_threshold)
from .rates import (closed_form_bandwidth, enhancement_gain, peak_sensitivity,
                    rates_from_optics, standard_limit)
from .spectrum import Spectrum

_CONFIG_FIELDS = ("lambda0", "length", "t_c_sq", "t_b_sq", "r_int_sq",
                  "q", "eta_det", "p_circ")

_EXIT_CONFIG = 2
_EXIT_MODEL = 3
_EXIT_NONCONVERGENCE = 4
_EXIT_DEGENERATE = 5


def _fail(code: int, exc: Exception):
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _guarded(fn):
    """Map package exceptions onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (InvalidConfig, InsufficientData) as exc:
            _fail(_EXIT_CONFIG, exc)
        except NonConvergence as exc:
            _fail(_EXIT_NONCONVERGENCE, exc)
        except DegenerateJacobian as exc:
            _fail(_EXIT_DEGENERATE, exc)
        except SqzCavityError as exc:
            _fail(_EXIT_MODEL, exc)

    return wrapper


def _cavity_options(include_q: bool = True, include_eta: bool = True):
    """Shared optical-configuration flags (defaults describe a tabletop
    example cavity); a JSON --config file fills any flag not given on
    the command line."""
    options = [
        click.option("--lambda0", type=float, default=1550e-9,
                     show_default=True, help="Carrier wavelength [m]."),
        click.option("--length", type=float, default=0.0277,
                     show_default=True, help="One-way cavity length [m]."),
        click.option("--t-c-sq", "t_c_sq", type=float, default=0.15,
                     show_default=True,
                     help="Coupling mirror power transmissivity."),
        click.option("--t-b-sq", "t_b_sq", type=float, default=0.0,
                     show_default=True,
                     help="Back mirror power transmissivity."),
        click.option("--r-int-sq", "r_int_sq", type=float, default=0.0,
                     show_default=True,
                     help="Internal round-trip power loss."),
        click.option("--p-circ", "p_circ", type=float, default=1.0,
                     show_default=True, help="Circulating carrier power [W]."),
        click.option("--config", "config_path",
                     type=click.Path(dir_okay=False, path_type=Path),
                     default=None,
                     help="JSON file of option defaults (flags win)."),
    ]
    if include_q:
        options.insert(5, click.option(
            "--q", type=float, default=0.0, show_default=True,
            help="Single-pass squeeze factor."))
    if include_eta:
        options.insert(6 if include_q else 5, click.option(
            "--eta", "eta_det", type=float, default=1.0, show_default=True,
            help="Detection efficiency."))

    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn

    return wrap


def _grid_options(fn):
    fn = click.option("--grid", "spacing", type=click.Choice(["lin", "log"]),
                      default="lin", show_default=True,
                      help="Frequency grid spacing.")(fn)
    fn = click.option("--points", type=int, default=200, show_default=True,
                      help="Number of grid points.")(fn)
    fn = click.option("--f-stop", type=float, default=2e8, show_default=True,
                      help="Last sideband frequency [Hz].")(fn)
    fn = click.option("--f-start", type=float, default=0.0, show_default=True,
                      help="First sideband frequency [Hz].")(fn)
    return fn


def _load_config_file(path: Path) -> dict:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InvalidConfig(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"config file {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise InvalidConfig(f"config file {path}: expected a JSON object")
    unknown = sorted(set(raw) - set(_CONFIG_FIELDS))
    if unknown:
        raise InvalidConfig(
            f"config file {path}: unknown keys {unknown}; "
            f"known: {list(_CONFIG_FIELDS)}"
        )
    for key, value in raw.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise InvalidConfig(
                f"config file {path}: {key} must be a number, got {value!r}"
            )
    return {k: float(v) for k, v in raw.items()}


def _resolve_cavity(ctx, config_path, **flags) -> OpticalConfig:
    """Apply precedence (flag > config file > default) and validate."""
    resolved = dict(flags)
    if config_path is not None:
        from_file = _load_config_file(config_path)
        for name, value in from_file.items():
            if name not in resolved:
                continue
            if ctx.get_parameter_source(name) != ParameterSource.COMMANDLINE:
                resolved[name] = value
    return OpticalConfig(**resolved)


def _omega_grid(f_start: float, f_stop: float, points: int, spacing: str) -> np.ndarray:
    """The one Hz -> rad/s conversion point for CLI frequency grids."""
    if points < 2:
        raise InvalidConfig(f"need at least 2 grid points, got {points}")
    if not f_start < f_stop:
        raise InvalidConfig(
            f"grid start {f_start:g} Hz must lie below stop {f_stop:g} Hz"
        )
    if f_start < 0.0:
        raise InvalidConfig(f"grid start must be >= 0, got {f_start:g}")
    if spacing == "log":
        if f_start <= 0.0:
            raise InvalidConfig("log spacing needs a positive start frequency")
        freq = np.geomspace(f_start, f_stop, points)
    else:
        freq = np.linspace(f_start, f_stop, points)
    return 2.0 * math.pi * freq


def _config_payload(cfg: OpticalConfig) -> dict:
    return {name: getattr(cfg, name) for name in _CONFIG_FIELDS}


def _rates_payload(cfg: OpticalConfig) -> dict:
    rates = rates_from_optics(cfg)
    return {
        "gamma_c_rad_s": rates.gamma_c,
        "gamma_s_rad_s": rates.gamma_s,
        "gamma_l_rad_s": rates.gamma_l,
        "gamma_total_rad_s": rates.gamma_total,
    }


def _sidecar_payload(cfg: OpticalConfig) -> dict:
    return {
        "config": _config_payload(cfg),
        "rates": _rates_payload(cfg),
        "q_threshold": opo_threshold(cfg),
        "fsr_rad_s": cfg.fsr_rad_s,
        "transit_time_s": cfg.transit_time,
        "sensitivity_scale": cfg.sensitivity_scale,
    }


def _sidecar_path(output: Path) -> Path:
    wanted = output.with_suffix(".json")
    if wanted == output:
        wanted = output.with_suffix(".meta.json")
    return wanted


@click.group()
@click.version_option(version=__version__, prog_name="sqzcavity")
def main():
    """Quantum-noise spectra, squeezing fits and sensitivity limits for a
    cavity with an internal parametric squeezer."""


@main.command("spectrum")
@click.pass_context
@_cavity_options()
@_grid_options
@click.option("--output", type=click.Path(dir_okay=False, path_type=Path),
              required=True, help="Output CSV (or JSON) path.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              default="csv", show_default=True)
@click.option("--plot/--no-plot", default=False,
              help="Also render a PNG next to the output.")
@_guarded
def cmd_spectrum(ctx, config_path, output, fmt, plot,
                 f_start, f_stop, points, spacing, **flags):
    """Detected noise PSD, signal transfer and SNR on a frequency grid."""
    cfg = _resolve_cavity(ctx, config_path, **flags)
    omega = _omega_grid(f_start, f_stop, points, spacing)
    spec = snr_spectrum(cfg, omega)
    meta = _sidecar_payload(cfg)
    if fmt == "csv":
        dataio.write_spectrum_csv(output, spec)
        sidecar = _sidecar_path(output)
        dataio.write_json(sidecar, meta)
        click.echo(str(output))
        click.echo(str(sidecar))
    else:
        payload = dict(meta)
        payload["omega_rad_s"] = [float(v) for v in spec.omega]
        for name in spec.channels:
            payload[name] = [float(v) for v in spec.channel(name)]
        dataio.write_json(output, payload)
        click.echo(str(output))
    if plot:
        from . import plotting

        png = output.with_suffix(".png")
        plotting.save_spectrum_plot(png, spec)
        click.echo(str(png))


def _parse_assignments(pairs, what: str) -> dict:
    values = {}
    for pair in pairs:
        name, sep, text = pair.partition("=")
        if not sep:
            raise InvalidConfig(f"{what} must look like NAME=VALUE, got {pair!r}")
        if name not in PARAM_NAMES:
            raise InvalidConfig(
                f"{what}: unknown parameter {name!r}; known: {list(PARAM_NAMES)}"
            )
        try:
            values[name] = float(text)
        except ValueError as exc:
            raise InvalidConfig(f"{what} {name}: {exc}") from exc
    return values


def _parse_bounds(pairs) -> dict:
    bounds = {}
    for pair in pairs:
        name, sep, text = pair.partition("=")
        lo, sep2, hi = text.partition(":")
        if not sep or not sep2:
            raise InvalidConfig(f"--bound must look like NAME=LO:HI, got {pair!r}")
        if name not in PARAM_NAMES:
            raise InvalidConfig(
                f"--bound: unknown parameter {name!r}; known: {list(PARAM_NAMES)}"
            )
        try:
            bounds[name] = (float(lo), float(hi))
        except ValueError as exc:
            raise InvalidConfig(f"--bound {name}: {exc}") from exc
    return bounds


@main.command("fit")
@click.option("--input", "input_path",
              type=click.Path(dir_okay=False, path_type=Path), required=True,
              help="Measured CSV: freq_hz,psd_db[,sigma_db].")
@click.option("--anti-squeezing", "anti_path",
              type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Companion spectrum taken with the pump phase flipped.")
@click.option("--length", type=float, required=True,
              help="One-way cavity length [m].")
@click.option("--init", "init_kv", multiple=True, metavar="NAME=VALUE",
              help="Initial value, e.g. --init t_c_sq=0.15 (repeatable).")
@click.option("--fix", "fix_kv", multiple=True, metavar="NAME=VALUE",
              help="Hold a parameter at VALUE, e.g. --fix t_c_sq=0.15.")
@click.option("--bound", "bound_kv", multiple=True, metavar="NAME=LO:HI",
              help="Override the declared bounds of one parameter.")
@click.option("--objective", type=click.Choice(["db", "linear"]), default="db",
              show_default=True)
@click.option("--n-sigma", type=float, default=2.0, show_default=True,
              help="Half width of the prediction band in standard deviations.")
@click.option("--output", type=click.Path(dir_okay=False, path_type=Path),
              required=True, help="Fit report JSON path.")
@click.option("--prediction-output", "prediction_path",
              type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Prediction CSV path [default: <output stem>_prediction.csv].")
@click.option("--points", type=int, default=200, show_default=True,
              help="Prediction grid size.")
@click.option("--plot/--no-plot", default=False,
              help="Also render a PNG next to the report.")
@_guarded
def cmd_fit(input_path, anti_path, length, init_kv, fix_kv, bound_kv,
            objective, n_sigma, output, prediction_path, points, plot):
    """Fit the squeezing-spectrum model to measured data and predict the
    signal deamplification with a confidence band."""
    data = dataio.read_measured_csv(input_path)
    anti = dataio.read_measured_csv(anti_path) if anti_path else None

    init_given = _parse_assignments(init_kv, "--init")
    fix_given = _parse_assignments(fix_kv, "--fix")
    overlap = sorted(set(init_given) & set(fix_given))
    if overlap:
        raise InvalidConfig(f"parameters given to both --init and --fix: {overlap}")
    known = {**init_given, **fix_given}
    if "t_c_sq" not in known:
        raise InvalidConfig(
            "the coupler transmissivity is needed as a starting point: pass "
            "--init t_c_sq=VALUE or --fix t_c_sq=VALUE"
        )
    init = default_initial_guess(known["t_c_sq"])
    init.update(known)
    bounds = _parse_bounds(bound_kv) or None

    fit = fit_squeezing_spectrum(data, init, bounds=bounds,
                                 fixed=tuple(sorted(fix_given)), length=length,
                                 anti_squeezing=anti, objective=objective)
    dataio.write_json(output, dataio.fit_result_payload(fit))

    grids = [data.freq_hz] + ([anti.freq_hz] if anti is not None else [])
    f_lo = min(float(g[0]) for g in grids)
    f_hi = max(float(g[-1]) for g in grids)
    grid_hz = np.geomspace(f_lo, f_hi, max(points, 2))
    band = predict_deamplification(fit, grid_hz, n_sigma=n_sigma)
    snr = snr_improvement(fit, grid_hz)
    prediction = Spectrum(
        omega=band.omega,
        channels={
            "squeezing_db_model": snr.channel("squeezing_db"),
            "deamp_db": band.channel("deamp_db"),
            "deamp_db_lo": band.channel("deamp_db_lo"),
            "deamp_db_hi": band.channel("deamp_db_hi"),
            "snr_gain_db": snr.channel("snr_gain_db"),
        },
    )
    if prediction_path is None:
        prediction_path = output.with_name(output.stem + "_prediction.csv")
    dataio.write_prediction_csv(prediction_path, grid_hz, prediction)

    run_path = output.with_name(output.stem + ".run.json")
    dataio.write_json(run_path, {
        "input": str(input_path),
        "anti_squeezing": str(anti_path) if anti_path else None,
        "length": length,
        "init": {k: float(init[k]) for k in PARAM_NAMES},
        "fixed": sorted(fix_given),
        "bounds": {k: list(v) for k, v in (bounds or {}).items()},
        "objective": objective,
        "n_sigma": n_sigma,
        "n_points": fit.n_points,
        "chi2_reduced": fit.chi2_reduced,
    })
    click.echo(str(output))
    click.echo(str(prediction_path))
    click.echo(str(run_path))
    if plot:
        from . import plotting

        png = output.with_suffix(".png")
        plotting.save_fit_plot(png, data, prediction, anti_squeezing=anti)
        click.echo(str(png))


@main.command("gain-curve")
@click.pass_context
@_cavity_options(include_q=False, include_eta=False)
@click.option("--eta", "eta_values", type=float, multiple=True,
              default=(1.0,), show_default=True,
              help="Detection efficiency (repeatable, one curve each).")
@click.option("--q-start", type=float, default=0.0, show_default=True,
              help="First squeeze factor of the sweep.")
@click.option("--q-stop", type=float, required=True,
              help="Last squeeze factor of the sweep (below threshold).")
@click.option("--q-points", type=int, default=41, show_default=True)
@click.option("--output", type=click.Path(dir_okay=False, path_type=Path),
              required=True, help="Output CSV path.")
@click.option("--plot/--no-plot", default=False,
              help="Also render a PNG next to the output.")
@_guarded
def cmd_gain_curve(ctx, config_path, eta_values, q_start, q_stop, q_points,
                   output, plot, **flags):
    """Sweep the squeeze factor: detected squeezing, sensitivity-bandwidth
    gain and bandwidth per detection efficiency."""
    cfg = _resolve_cavity(ctx, config_path, **flags)
    if q_points < 2:
        raise InvalidConfig(f"need at least 2 sweep points, got {q_points}")
    if not q_start < q_stop:
        raise InvalidConfig(
            f"sweep start {q_start:g} must lie below stop {q_stop:g}"
        )
    q_values = np.linspace(q_start, q_stop, q_points)
    curves = gain_curve(cfg, list(eta_values), q_values)
    dataio.write_gain_csv(output, curves)
    sidecar = _sidecar_path(output)
    dataio.write_json(sidecar, _sidecar_payload(cfg))
    click.echo(str(output))
    click.echo(str(sidecar))
    if plot:
        from . import plotting

        png = output.with_suffix(".png")
        plotting.save_gain_plot(png, curves)
        click.echo(str(png))


@main.command("limits")
@click.pass_context
@_cavity_options()
@click.option("--scan-points", type=int, default=200, show_default=True,
              help="Number of squeeze factors scanned for the noise floor.")
@click.option("--output", type=click.Path(dir_okay=False, path_type=Path),
              default=None, help="Report JSON path [default: stdout].")
@_guarded
def cmd_limits(ctx, config_path, scan_points, output, **flags):
    """Sensitivity-bandwidth limits, threshold, squeezing ceiling and
    intra-cavity squeezing for one cavity configuration."""
    cfg = _resolve_cavity(ctx, config_path, **flags)
    if scan_points < 2:
        raise InvalidConfig(f"need at least 2 scan points, got {scan_points}")
    rates = rates_from_optics(cfg)
    classical = dataclasses.replace(rates, gamma_s=0.0)
    bandwidth_classical = closed_form_bandwidth(classical)
    bandwidth = closed_form_bandwidth(rates)
    q_th = opo_threshold(cfg)

    q_scan = np.linspace(0.0, q_th, scan_points, endpoint=False)
    floor = min(
        float(exact_noise_psd(dataclasses.replace(cfg, q=float(qv)), 0.0))
        for qv in q_scan
    )

    cfg_off = dataclasses.replace(cfg, q=0.0)
    report = {
        "config": _config_payload(cfg),
        "rates": _rates_payload(cfg),
        "q_threshold": q_th,
        "fsr_rad_s": cfg.fsr_rad_s,
        "standard_limit": standard_limit(cfg.p_circ, cfg.lambda0, cfg.length),
        "sb_product_classical":
            peak_sensitivity(classical) * bandwidth_classical,
        "sb_product_with_squeezing": peak_sensitivity(rates) * bandwidth,
        "bandwidth_rad_s": bandwidth,
        "enhancement_gain": enhancement_gain(rates),
        "detected_sn0": float(exact_noise_psd(cfg, 0.0)),
        "detected_squeeze_db":
            10.0 * math.log10(float(exact_noise_psd(cfg, 0.0))),
        "scan_points": scan_points,
        "scan_min_detected_sn0": floor,
        "scan_max_squeeze_db": 10.0 * math.log10(floor),
        "intracavity_sn0_ratio":
            float(intracavity_phase_psd(cfg, 0.0)
                  / intracavity_phase_psd(cfg_off, 0.0)),
        "intracavity_variance_ratio":
            intracavity_variance(cfg) / intracavity_variance(cfg_off),
    }
    if output is None:
        click.echo(dataio.to_json_text(report), nl=False)
    else:
        dataio.write_json(output, report)
        click.echo(str(output))


if __name__ == "__main__":
    main()
