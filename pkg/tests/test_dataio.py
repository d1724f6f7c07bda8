"""Data exchange tests: delimited spectra and measurement files must
round-trip bit exactly, reject malformed input with located errors,
and be written atomically."""

import json
import math
import os

import numpy as np
import pytest

from sqzcavity import InvalidConfig, Spectrum
from sqzcavity.dataio import (GAIN_COLUMNS, MEASURED_COLUMNS,
                              SPECTRUM_OMEGA_COLUMN, atomic_write_text,
                              fit_result_payload, format_float,
                              read_measured_csv, read_spectrum_csv,
                              to_json_text, write_gain_csv,
                              write_measured_csv, write_prediction_csv,
                              write_spectrum_csv, write_json)
from sqzcavity.fitting import MeasuredSpectrum

AWKWARD = [1.0, -1.0, 0.1, 1e-300, 5e-324, 1.7976931348623157e308,
           math.pi, 2.0 / 3.0, 1234567890.123456]


class TestFloatFormatting:
    @pytest.mark.parametrize("value", AWKWARD)
    def test_round_trip_bit_exact(self, value):
        assert float(format_float(value)) == value

    def test_plain_integers_stay_short(self):
        assert format_float(1.0) == "1"
        assert format_float(0.0) == "0"


class TestSpectrumCsv:
    def test_header_and_round_trip(self, tmp_path):
        omega = np.geomspace(1e3, 1e10, 64)
        rng = np.random.default_rng(0)
        spec = Spectrum(omega, {"noise_psd": rng.uniform(0.2, 1.0, 64),
                                "snr": rng.uniform(0.0, 5.0, 64)},
                        units={"noise_psd": "1", "snr": "1"})
        path = tmp_path / "spec.csv"
        write_spectrum_csv(path, spec)
        header = path.read_text().splitlines()[0]
        assert header == f"{SPECTRUM_OMEGA_COLUMN},noise_psd,snr"
        back = read_spectrum_csv(path)
        np.testing.assert_array_equal(back.omega, spec.omega)
        for name in spec.channels:
            np.testing.assert_array_equal(back.channel(name),
                                          spec.channel(name))

    def test_awkward_values_survive(self, tmp_path):
        omega = np.arange(1.0, len(AWKWARD) + 1.0)
        values = np.array(AWKWARD)
        path = tmp_path / "awkward.csv"
        write_spectrum_csv(path, Spectrum(omega, {"v": values}))
        back = read_spectrum_csv(path)
        np.testing.assert_array_equal(back.channel("v"), values)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("frequency,noise\n1,2\n")
        with pytest.raises(InvalidConfig):
            read_spectrum_csv(path)

    def test_ragged_row_rejected_with_row_number(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text(f"{SPECTRUM_OMEGA_COLUMN},v\n1,2\n3\n")
        with pytest.raises(InvalidConfig, match="3"):
            read_spectrum_csv(path)


class TestMeasuredCsv:
    def test_round_trip_with_sigma_and_comment(self, tmp_path):
        freq = np.geomspace(1e6, 1e8, 16)
        measured = MeasuredSpectrum(freq, np.linspace(-5.0, 0.0, 16),
                                    sigma_db=np.full(16, 0.1))
        path = tmp_path / "meas.csv"
        write_measured_csv(path, measured, comment="synthetic run")
        text = path.read_text()
        assert text.startswith("# synthetic run\n")
        assert ",".join(MEASURED_COLUMNS) in text
        back = read_measured_csv(path)
        np.testing.assert_array_equal(back.freq_hz, measured.freq_hz)
        np.testing.assert_array_equal(back.psd_db, measured.psd_db)
        np.testing.assert_array_equal(back.sigma_db, measured.sigma_db)

    def test_round_trip_without_sigma(self, tmp_path):
        freq = np.geomspace(1e6, 1e8, 12)
        measured = MeasuredSpectrum(freq, np.zeros(12))
        path = tmp_path / "nosigma.csv"
        write_measured_csv(path, measured)
        back = read_measured_csv(path)
        assert back.sigma_db is None
        np.testing.assert_array_equal(back.freq_hz, freq)

    def test_comment_lines_and_blanks_skipped(self, tmp_path):
        path = tmp_path / "comments.csv"
        path.write_text("# a comment\n\nfreq_hz,psd_db\n"
                        "# another\n1e6,-1\n1e7,-2\n")
        back = read_measured_csv(path)
        assert len(back) == 2

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "wrong.csv"
        path.write_text("freq_hz,db\n1e6,-1\n")
        with pytest.raises(InvalidConfig):
            read_measured_csv(path)

    def test_bad_cell_rejected_with_row_number(self, tmp_path):
        path = tmp_path / "cell.csv"
        path.write_text("freq_hz,psd_db\n1e6,-1\n1e7,oops\n")
        with pytest.raises(InvalidConfig, match="3"):
            read_measured_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(InvalidConfig):
            read_measured_csv(path)

    def test_header_only_rejected(self, tmp_path):
        path = tmp_path / "headeronly.csv"
        path.write_text("freq_hz,psd_db\n")
        with pytest.raises(InvalidConfig, match="no data rows"):
            read_measured_csv(path)


class TestPredictionAndGainCsv:
    def test_prediction_columns(self, tmp_path):
        freq = np.geomspace(1e6, 1e8, 8)
        spec = Spectrum(2.0 * np.pi * freq,
                        {"deamp_db": np.zeros(8),
                         "deamp_db_lo": np.zeros(8),
                         "deamp_db_hi": np.zeros(8)})
        path = tmp_path / "pred.csv"
        write_prediction_csv(path, freq, spec)
        header = path.read_text().splitlines()[0]
        assert header == "freq_hz,deamp_db,deamp_db_lo,deamp_db_hi"

    def test_gain_rows_grouped_by_eta(self, tmp_path):
        from sqzcavity import GainCurvePoint

        curves = {0.7: [GainCurvePoint(0.0, 0.0, 1.0, 2.0e8),
                        GainCurvePoint(0.01, -1.0, 1.1, 1.9e8)],
                  0.9: [GainCurvePoint(0.0, 0.0, 1.0, 2.0e8)]}
        path = tmp_path / "gain.csv"
        write_gain_csv(path, curves)
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(GAIN_COLUMNS)
        assert len(lines) == 4
        etas = [line.split(",")[0] for line in lines[1:]]
        assert etas == ["0.69999999999999996", "0.69999999999999996",
                        "0.90000000000000002"]


class TestJson:
    def test_fit_payload_exact_keys(self):
        from sqzcavity.fitting import FitResult

        fit = FitResult(params={"q": 0.02, "t_c_sq": 0.15, "l_sq": 0.002,
                                "eta": 0.82},
                        covariance=np.eye(4) * 1e-8, chi2_reduced=1.0,
                        bounds_hit=(), fixed_params=("t_c_sq",),
                        length=0.0277, n_points=200)
        payload = fit_result_payload(fit)
        assert sorted(payload) == ["bounds_hit", "chi2_reduced", "covariance",
                                   "fixed_params", "model_version", "params"]
        assert len(payload["covariance"]) == 16
        assert payload["fixed_params"] == ["t_c_sq"]
        text = to_json_text(payload)
        assert text.endswith("\n")
        assert json.loads(text) == payload

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            to_json_text({"x": float("nan")})

    def test_write_json(self, tmp_path):
        path = tmp_path / "out.json"
        write_json(path, {"a": 1})
        assert json.loads(path.read_text()) == {"a": 1}


class TestAtomicity:
    def test_no_temp_files_left_behind(self, tmp_path):
        path = tmp_path / "out.txt"
        atomic_write_text(path, "hello\n")
        assert path.read_text() == "hello\n"
        assert os.listdir(tmp_path) == ["out.txt"]

    def test_failed_replacement_keeps_original(self, tmp_path, monkeypatch):
        path = tmp_path / "keep.txt"
        atomic_write_text(path, "original\n")

        def boom(src, dst):
            raise OSError("disk full")

        monkeypatch.setattr(os, "replace", boom)
        with pytest.raises(OSError):
            atomic_write_text(path, "replacement\n")
        monkeypatch.undo()
        assert path.read_text() == "original\n"
        assert os.listdir(tmp_path) == ["keep.txt"]
