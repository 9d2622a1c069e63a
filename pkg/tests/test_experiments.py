import json
import logging

import numpy as np
import pytest

from conftest import random_spectrum
from jtvsp import io
from jtvsp.exceptions import InputError
from jtvsp.experiments import (
    SNR_CAP_DB,
    ExperimentConfig,
    ingest,
    load_config,
    mean_metric,
    ridge_jpsd,
    run_denoising,
    run_recovery,
    snr_db,
    split,
    summarize,
    synthetic_dataset,
    tikhonov_comparison,
    write_fixture,
)
from jtvsp.graph import GraphSpectrum
from jtvsp.wiener import joint_wiener_closed_form


@pytest.fixture(scope="module")
def synthetic():
    ds, spec, _ = synthetic_dataset(8, 256, seed=0)
    return ds, spec


def write_station_files(tmp_path, ids, coords, values):
    io.write_coords(tmp_path / "coords.csv", ids, coords)
    io.write_matrix(tmp_path / "readings.csv", ids, values)
    return tmp_path / "coords.csv", tmp_path / "readings.csv"


class TestIngest:
    def test_centres_readings(self, tmp_path):
        paths = write_station_files(tmp_path, ["a", "b"], [[0, 0], [1, 0]], [[1, 3], [3, 5]])
        ds = ingest(*paths)
        np.testing.assert_array_equal(ds.readings, [[-2, 0], [0, 2]])
        assert ds.global_mean == 3.0
        assert ds.station_ids == ["a", "b"]

    def test_drops_station_with_missing_cell(self, tmp_path, caplog):
        values = np.arange(9.0).reshape(3, 3)
        values[1, 2] = np.nan
        paths = write_station_files(tmp_path, ["a", "b", "c"], np.eye(3, 2), values)
        with caplog.at_level(logging.WARNING):
            ds = ingest(*paths)
        assert ds.dropped == ["b"]
        assert ds.station_ids == ["a", "c"]
        assert "b" in caplog.text

    def test_reorders_to_coordinate_order(self, tmp_path):
        io.write_coords(tmp_path / "coords.csv", ["x", "y"], [[0, 0], [1, 1]])
        io.write_matrix(tmp_path / "readings.csv", ["y", "x"], [[10, 10], [0, 0]])
        ds = ingest(tmp_path / "coords.csv", tmp_path / "readings.csv")
        assert ds.readings[1, 0] > ds.readings[0, 0]

    def test_misaligned_ids(self, tmp_path):
        io.write_coords(tmp_path / "coords.csv", ["a", "b"], [[0, 0], [1, 1]])
        io.write_matrix(tmp_path / "readings.csv", ["a", "c"], [[1, 2], [3, 4]])
        with pytest.raises(InputError):
            ingest(tmp_path / "coords.csv", tmp_path / "readings.csv")

    def test_too_few_stations(self, tmp_path):
        paths = write_station_files(tmp_path, ["a", "b"], [[0, 0], [1, 0]], [[1, np.nan], [3, 5]])
        with pytest.raises(InputError):
            ingest(*paths)

    def test_non_numeric_cell(self, tmp_path):
        io.write_coords(tmp_path / "coords.csv", ["a", "b"], [[0, 0], [1, 1]])
        (tmp_path / "readings.csv").write_text("id,t0\na,1.0\nb,warm\n")
        with pytest.raises(InputError):
            ingest(tmp_path / "coords.csv", tmp_path / "readings.csv")

    def test_hourly_month_shape(self, tmp_path):
        rng = np.random.default_rng(0)
        ids = [f"st{i}" for i in range(32)]
        paths = write_station_files(tmp_path, ids, rng.random((32, 2)), rng.standard_normal((32, 744)))
        assert ingest(*paths).shape == (32, 744)


class TestSplit:
    def test_full(self):
        x = np.arange(20.0).reshape(2, 10)
        train, test = split(x, 1.0)
        np.testing.assert_array_equal(train, x)
        np.testing.assert_array_equal(test, x)

    def test_half_of_month(self):
        train, test = split(np.zeros((2, 744)), 0.5)
        assert train.shape[1] == 372 and test.shape[1] == 372

    def test_floor(self):
        train, test = split(np.zeros((2, 10)), 0.95)
        assert train.shape[1] == 9 and test.shape[1] == 1

    @pytest.mark.parametrize("rho", [0.0, -0.1, 1.5])
    def test_invalid_rho(self, rho):
        with pytest.raises(InputError):
            split(np.zeros((2, 10)), rho)

    def test_train_shorter_than_window(self):
        with pytest.raises(InputError):
            split(np.zeros((2, 10)), 0.5, min_train=8)


class TestSnr:
    def test_exact_is_capped(self):
        x = np.ones((2, 3))
        assert snr_db(x, x) == SNR_CAP_DB

    def test_zero_estimate(self):
        assert snr_db(np.ones((2, 3)), np.zeros((2, 3))) == pytest.approx(0.0)

    def test_known_noise_level(self):
        rng = np.random.default_rng(1)
        x = rng.choice([-1.0, 1.0], size=(100, 1000))
        sigma = 0.3
        assert snr_db(x, x + sigma * rng.standard_normal(x.shape)) == pytest.approx(-20 * np.log10(sigma), abs=0.05)

    def test_zero_reference(self):
        with pytest.raises(InputError):
            snr_db(np.zeros(3), np.ones(3))


class TestConfig:
    def test_defaults(self):
        c = ExperimentConfig()
        assert c.snr_grid[0] == -10 and c.snr_grid[-1] == 30
        assert c.mask_fraction_grid[0] == 0.1 and c.mask_fraction_grid[-1] == 0.9
        assert c.solver.tol == 1e-8 and c.solver.max_iters == 2000

    def test_validation(self):
        with pytest.raises(InputError):
            ExperimentConfig(snr_grid=[])
        with pytest.raises(InputError):
            ExperimentConfig(rho=0.0)
        with pytest.raises(InputError):
            ExperimentConfig.from_dict({"n_trails": 3})

    def test_load_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"experiment": {"rho": 0.8, "n_trials": 2},
                                    "data": {"synthetic": {"seed": 3}}}))
        config, data = load_config(path)
        assert config.rho == 0.8 and config.n_trials == 2
        assert data == {"synthetic": {"seed": 3}}

    def test_bad_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{not json")
        with pytest.raises(InputError):
            load_config(path)


class TestDenoising:
    def test_white_noise_gains_three_db(self):
        rng = np.random.default_rng(2)
        s = random_spectrum(6, seed=1)
        x = rng.standard_normal((6, 4096))
        y = x + rng.standard_normal(x.shape)
        out = joint_wiener_closed_form(1.0, np.ones(x.shape), 1.0, y, s)
        np.testing.assert_allclose(out, y / 2, atol=1e-12)
        assert snr_db(x, out) - snr_db(x, y) == pytest.approx(10 * np.log10(2), abs=0.1)

    def test_noise_free_keeps_input(self, synthetic):
        ds, spec = synthetic
        rows = run_denoising(ds, spec, ExperimentConfig(snr_grid=[np.inf], n_trials=1))
        assert mean_metric(rows, "input", np.inf) == SNR_CAP_DB
        assert mean_metric(rows, "joint", np.inf) > 200

    def test_joint_beats_disjoint(self, synthetic):
        ds, spec = synthetic
        rows = run_denoising(ds, spec, ExperimentConfig(snr_grid=[0.0], n_trials=20))
        joint = mean_metric(rows, "joint", 0.0)
        assert joint >= mean_metric(rows, "time", 0.0)
        assert joint >= mean_metric(rows, "vertex", 0.0)
        assert joint > mean_metric(rows, "input", 0.0)

    def test_deterministic(self, synthetic):
        ds, spec = synthetic
        config = ExperimentConfig(snr_grid=[5.0], n_trials=3, seed=4)
        assert run_denoising(ds, spec, config) == run_denoising(ds, spec, config)

    def test_rho_effect(self):
        ds, spec, _ = synthetic_dataset(8, 512, seed=1)
        high = run_denoising(ds, spec, ExperimentConfig(rho=0.9, snr_grid=[0.0], n_trials=10))
        low = run_denoising(ds, spec, ExperimentConfig(rho=0.1, snr_grid=[0.0], n_trials=10))
        assert mean_metric(high, "joint", 0.0) >= mean_metric(low, "joint", 0.0) - 0.5


class TestRecovery:
    def test_nothing_missing(self, synthetic):
        ds, spec = synthetic
        rows = run_recovery(ds, spec, ExperimentConfig(mask_fraction_grid=[0.0], n_trials=1))
        for method in ("joint", "time", "vertex"):
            assert mean_metric(rows, method, 0.0, "relative_error") == pytest.approx(0.0, abs=1e-12)

    def test_everything_missing_rejected(self):
        with pytest.raises(InputError):
            ExperimentConfig(mask_fraction_grid=[1.0])

    def test_joint_beats_disjoint(self, synthetic):
        ds, spec = synthetic
        rows = run_recovery(ds, spec, ExperimentConfig(mask_fraction_grid=[0.3], n_trials=20))
        joint = mean_metric(rows, "joint", 0.3, "relative_error")
        assert joint <= mean_metric(rows, "time", 0.3, "relative_error")
        assert joint <= mean_metric(rows, "vertex", 0.3, "relative_error")
        assert not any(r["metric"] == "failed" for r in rows)

    def test_monotone_in_missing_fraction(self, synthetic):
        ds, spec = synthetic
        grid = [0.1, 0.3, 0.5, 0.7, 0.9]
        rows = run_recovery(ds, spec, ExperimentConfig(mask_fraction_grid=grid, n_trials=5))
        snr = [mean_metric(rows, "joint", p) for p in grid]
        assert all(b <= a + 0.5 for a, b in zip(snr, snr[1:]))

    def test_summary_counts(self, synthetic):
        ds, spec = synthetic
        rows = run_recovery(ds, spec, ExperimentConfig(mask_fraction_grid=[0.2], n_trials=3))
        summary = {(s["method"], s["metric"]): s for s in summarize(rows)}
        assert summary[("joint", "snr_db")]["n"] == 3
        assert summary[("joint", "snr_db")]["n_failed"] == 0


class TestSynthetic:
    def test_ridge_is_non_separable(self):
        s = random_spectrum(6)
        h = ridge_jpsd(s, 16)
        assert np.linalg.matrix_rank(h, tol=1e-6) > 1
        np.testing.assert_allclose(h, h[:, (-np.arange(16)) % 16])

    def test_dataset_is_centred(self):
        ds, spec, h = synthetic_dataset(6, 64, seed=2)
        assert abs(ds.readings.mean()) < 1e-12
        assert isinstance(spec, GraphSpectrum) and h.shape == (6, 64)

    def test_tikhonov_comparison_shapes(self):
        w, tik, alphas = tikhonov_comparison(n_draws=3, alpha_grid=[0.1, 1.0])
        assert tik.shape == (2,) and np.all(np.isfinite(tik)) and w > 0

    def test_fixture_files(self, tmp_path):
        write_fixture(tmp_path, n_stations=10, n_steps=64)
        for name in ("coords.csv", "readings.csv", "noisy.csv", "masked.csv"):
            assert (tmp_path / name).exists()
        _, _, masked = io.read_matrix(tmp_path / "masked.csv")
        assert np.isnan(masked).any() and masked.shape == (10, 64)
