"""File formats: delimited spectra, measured data, gain curves, fit reports.

All text artifacts are UTF-8 with LF line endings and ``.`` decimal
separators.  Floats are written with 17 significant digits, which round
trips IEEE-754 doubles bit-exactly.  Writes go through a temporary file
in the destination directory followed by an atomic rename, so a reader
never observes a half-written file.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import InvalidConfig
from .fitting import MODEL_VERSION, FitResult, MeasuredSpectrum
from .spectrum import Spectrum

SPECTRUM_OMEGA_COLUMN = "omega_rad_s"
MEASURED_COLUMNS = ("freq_hz", "psd_db", "sigma_db")
GAIN_COLUMNS = ("eta", "q", "detected_squeeze_db", "gain", "bandwidth_rad_s")


def format_float(x: float) -> str:
    """Decimal form with 17 significant digits (lossless for doubles)."""
    return format(float(x), ".17g")


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` via a same-directory temp file + rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_spectrum_csv(path, spectrum: Spectrum) -> None:
    """Write a Spectrum as CSV: ``omega_rad_s`` plus one column per channel,
    in channel insertion order."""
    buf = io.StringIO()
    names = list(spectrum.channels)
    buf.write(",".join([SPECTRUM_OMEGA_COLUMN] + names) + "\n")
    columns = [spectrum.omega] + [spectrum.channels[n] for n in names]
    for row in zip(*columns):
        buf.write(",".join(format_float(v) for v in row) + "\n")
    atomic_write_text(path, buf.getvalue())


def read_spectrum_csv(path) -> Spectrum:
    """Read a CSV written by :func:`write_spectrum_csv`."""
    rows = _read_csv_rows(path)
    if not rows:
        raise InvalidConfig(f"{path}: empty file")
    header = rows[0]
    if not header or header[0] != SPECTRUM_OMEGA_COLUMN:
        raise InvalidConfig(
            f"{path}: first column must be {SPECTRUM_OMEGA_COLUMN!r}, "
            f"got {header[:1]!r}"
        )
    names = header[1:]
    data = _parse_rows(path, rows[1:], len(header))
    return Spectrum(
        omega=data[:, 0],
        channels={n: data[:, i + 1] for i, n in enumerate(names)},
    )


def write_measured_csv(path, measured: MeasuredSpectrum,
                       comment: str | None = None) -> None:
    """Write measured data as ``freq_hz,psd_db[,sigma_db]``; an optional
    leading ``#`` comment line carries a free-form note."""
    buf = io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    has_sigma = measured.sigma_db is not None
    names = MEASURED_COLUMNS if has_sigma else MEASURED_COLUMNS[:2]
    buf.write(",".join(names) + "\n")
    columns = [measured.freq_hz, measured.psd_db]
    if has_sigma:
        columns.append(measured.sigma_db)
    for row in zip(*columns):
        buf.write(",".join(format_float(v) for v in row) + "\n")
    atomic_write_text(path, buf.getvalue())


def read_measured_csv(path) -> MeasuredSpectrum:
    """Read measured data: header ``freq_hz,psd_db[,sigma_db]``, ``#``
    comment lines ignored anywhere."""
    rows = _read_csv_rows(path)
    if not rows:
        raise InvalidConfig(f"{path}: empty file")
    header = tuple(rows[0])
    if header not in (MEASURED_COLUMNS, MEASURED_COLUMNS[:2]):
        raise InvalidConfig(
            f"{path}: header must be freq_hz,psd_db[,sigma_db], got "
            f"{','.join(header)!r}"
        )
    data = _parse_rows(path, rows[1:], len(header))
    if data.shape[0] == 0:
        raise InvalidConfig(f"{path}: no data rows")
    sigma = data[:, 2] if len(header) == 3 else None
    return MeasuredSpectrum(freq_hz=data[:, 0], psd_db=data[:, 1], sigma_db=sigma)


def write_prediction_csv(path, freq_hz, prediction: Spectrum) -> None:
    """Write a fit-prediction table: ``freq_hz`` plus one column per
    prediction channel, in channel insertion order."""
    buf = io.StringIO()
    names = list(prediction.channels)
    buf.write(",".join(["freq_hz"] + names) + "\n")
    columns = [np.asarray(freq_hz, dtype=float)]
    columns += [prediction.channels[n] for n in names]
    for row in zip(*columns):
        buf.write(",".join(format_float(v) for v in row) + "\n")
    atomic_write_text(path, buf.getvalue())


def write_gain_csv(path, curves: dict) -> None:
    """Write gain curves as ``eta,q,detected_squeeze_db,gain,bandwidth_rad_s``,
    rows grouped by eta in mapping order, ordered by q within each group."""
    buf = io.StringIO()
    buf.write(",".join(GAIN_COLUMNS) + "\n")
    for eta, points in curves.items():
        for pt in points:
            buf.write(",".join(format_float(v) for v in (
                eta, pt.q, pt.detected_squeeze_db, pt.gain, pt.bandwidth)) + "\n")
    atomic_write_text(path, buf.getvalue())


def fit_result_payload(fit: FitResult) -> dict:
    """Flat JSON-ready view of a fit: params, row-major 4x4 covariance,
    chi2_reduced, fixed_params, bounds_hit, model_version."""
    return {
        "params": {k: float(v) for k, v in fit.params.items()},
        "covariance": [float(v) for v in np.asarray(fit.covariance).ravel()],
        "chi2_reduced": float(fit.chi2_reduced),
        "fixed_params": list(fit.fixed_params),
        "bounds_hit": list(fit.bounds_hit),
        "model_version": MODEL_VERSION,
    }


def to_json_text(obj) -> str:
    """Serialize for report files: 2-space indent, insertion-ordered keys,
    non-finite numbers rejected rather than emitted as invalid JSON."""
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    atomic_write_text(path, to_json_text(obj))


def _read_csv_rows(path) -> list[list[str]]:
    try:
        with open(path, encoding="utf-8", newline="") as handle:
            reader = csv.reader(line for line in handle
                                if line.strip() and not line.lstrip().startswith("#"))
            return [row for row in reader]
    except OSError as exc:
        raise InvalidConfig(f"cannot read {path}: {exc}") from exc


def _parse_rows(path, rows, width) -> np.ndarray:
    data = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise InvalidConfig(
                f"{path}: row {i + 2} has {len(row)} fields, expected {width}"
            )
        try:
            data[i] = [float(cell) for cell in row]
        except ValueError as exc:
            raise InvalidConfig(f"{path}: row {i + 2}: {exc}") from exc
    return data
