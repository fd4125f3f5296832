import csv
import json
import os

import numpy as np
import pytest

from cmereg.cli import main, read_dataset, write_csv


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def write_dataset(path, xs, ys):
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    if xs.shape[0] == 1:
        xs = xs.T
    if ys.shape[0] == 1:
        ys = ys.T
    header = [f"x{i}" for i in range(xs.shape[1])] + [f"y{j}" for j in range(ys.shape[1])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for xr, yr in zip(xs, ys):
            w.writerow(list(xr) + list(yr))
    return str(path)


def random_dataset(path, n=20, seed=0):
    rng = np.random.default_rng(seed)
    return write_dataset(path, rng.uniform(0, 3, (n, 2)), rng.uniform(0, 3, (n, 2)))


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def tiny_dataset(tmp_path):
    return write_dataset(tmp_path / "data.csv", [0.0, 0.5, 1.0, 1.5, 2.0],
                         [0.1, 0.4, 1.1, 1.6, 1.9])


GAUSS = {"variant": "gaussian", "bandwidth": 1.0}


class TestFit:
    def test_smoke(self, tmp_path, tiny_dataset):
        cfg = write_config(tmp_path, {"dataset": tiny_dataset, "lambda": 0.1,
                                      "x_kernel": GAUSS, "y_kernel": GAUSS})
        out = tmp_path / "out"
        assert main(["fit", "--config", cfg, "--out", str(out)]) == 0
        rows = read_rows(out / "summary.csv")
        assert len(rows) == 1
        assert rows[0]["n"] == "5"
        assert rows[0]["bound_ok"] == "1"
        coef = read_rows(out / "coefficients.csv")
        assert len(coef) == 5 and len(coef[0]) == 5

    def test_lambda_zero_rejected(self, tmp_path, tiny_dataset, capsys):
        cfg = write_config(tmp_path, {"dataset": tiny_dataset, "lambda": 0,
                                      "x_kernel": GAUSS, "y_kernel": GAUSS})
        assert main(["fit", "--config", cfg, "--out", str(tmp_path)]) == 2
        assert "lambda" in capsys.readouterr().err

    def test_missing_dataset(self, tmp_path):
        cfg = write_config(tmp_path, {"dataset": str(tmp_path / "nope.csv"), "lambda": 0.1,
                                      "x_kernel": GAUSS, "y_kernel": GAUSS})
        assert main(["fit", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_unknown_key_rejected(self, tmp_path, tiny_dataset):
        cfg = write_config(tmp_path, {"dataset": tiny_dataset, "lambda": 0.1,
                                      "x_kernel": GAUSS, "y_kernel": GAUSS, "lamda": 0.2})
        assert main(["fit", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_singular_system_exits_three(self, tmp_path):
        # linear kernel on identical points: the ridge shift underflows into
        # the all-ones Gram matrix, so the factorization hits a zero pivot
        data = write_dataset(tmp_path / "dup.csv", [1.0, 1.0, 1.0], [0.0, 1.0, 2.0])
        cfg = write_config(tmp_path, {"dataset": data, "lambda": 1e-18,
                                      "x_kernel": {"variant": "linear"},
                                      "y_kernel": {"variant": "linear"}})
        assert main(["fit", "--config", cfg, "--out", str(tmp_path)]) == 3


class TestCv:
    def base_cfg(self, dataset):
        return {"dataset": dataset, "lambdas": [0.01, 0.1, 1.0], "folds": 3,
                "seed": 0, "x_kernel": GAUSS, "y_kernel": GAUSS}

    def test_single_point_grid(self, tmp_path, tiny_dataset):
        cfg = self.base_cfg(tiny_dataset)
        cfg["lambdas"] = [0.1]
        path = write_config(tmp_path, cfg)
        out = tmp_path / "out"
        assert main(["cv", "--config", path, "--out", str(out)]) == 0
        rows = read_rows(out / "cv.csv")
        assert all(r["grid_index"] == "0" and r["best"] == "1" for r in rows)
        assert len(rows) == 3  # one per fold

    def test_rerun_byte_identical(self, tmp_path, tiny_dataset):
        path = write_config(tmp_path, self.base_cfg(tiny_dataset))
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["cv", "--config", path, "--out", str(a)]) == 0
        assert main(["cv", "--config", path, "--out", str(b)]) == 0
        assert (a / "cv.csv").read_bytes() == (b / "cv.csv").read_bytes()

    def test_best_matches_sweep_oracle(self, tmp_path):
        data = random_dataset(tmp_path / "d.csv", n=30, seed=1)
        path = write_config(tmp_path, self.base_cfg(data))
        out = tmp_path / "out"
        assert main(["cv", "--config", path, "--out", str(out)]) == 0
        rows = read_rows(out / "cv.csv")
        means = {}
        for r in rows:
            means.setdefault(int(r["grid_index"]), []).append(float(r["error"]))
        means = {g: np.mean(v) for g, v in means.items()}
        best = {int(r["grid_index"]) for r in rows if r["best"] == "1"}
        assert len(best) == 1
        assert means[best.pop()] <= 1.1 * min(means.values())

    def test_folds_validation(self, tmp_path, tiny_dataset):
        cfg = self.base_cfg(tiny_dataset)
        cfg["folds"] = 1
        assert main(["cv", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path)]) == 2
        cfg["folds"] = 10  # only 5 samples
        assert main(["cv", "--config", write_config(tmp_path, cfg, "c2.json"),
                     "--out", str(tmp_path)]) == 2


class TestSparsify:
    def test_smoke_and_schema(self, tmp_path):
        data = random_dataset(tmp_path / "d.csv", n=20, seed=2)
        cfg = write_config(tmp_path, {
            "dataset": data, "lambda": 0.1, "gammas": [0.001, 0.01, 0.1],
            "x_kernel": {"variant": "gaussian", "bandwidth": 0.3},
            "y_kernel": {"variant": "gaussian", "bandwidth": 0.3},
            "max_iter": 5000,
        })
        out = tmp_path / "out"
        assert main(["sparsify", "--config", cfg, "--out", str(out)]) == 0
        rows = read_rows(out / "sparsify.csv")
        assert [float(r["gamma"]) for r in rows] == [0.001, 0.01, 0.1]
        kls = [float(r["kl_distance"]) for r in rows]
        assert kls == sorted(kls)

    def test_unsorted_gammas(self, tmp_path, tiny_dataset):
        cfg = write_config(tmp_path, {"dataset": tiny_dataset, "lambda": 0.1,
                                      "gammas": [0.1, 0.01], "x_kernel": GAUSS, "y_kernel": GAUSS})
        assert main(["sparsify", "--config", cfg, "--out", str(tmp_path)]) == 2


class TestCompare:
    def test_gamma_zero_full_rank(self, tmp_path):
        train = random_dataset(tmp_path / "train.csv", n=20, seed=3)
        test = random_dataset(tmp_path / "test.csv", n=10, seed=4)
        cfg = write_config(tmp_path, {
            "dataset": {"train": train, "test": test},
            "lambda": 0.1, "x_bandwidth": 0.3, "y_bandwidth": 0.3,
            "gammas": [0.0], "ranks": [20], "seed": 0, "max_iter": 20000,
        })
        out = tmp_path / "out"
        assert main(["compare", "--config", cfg, "--out", str(out)]) == 0
        rows = read_rows(out / "compare.csv")
        assert {r["method"] for r in rows} == {"lasso", "cholesky"}
        for r in rows:
            assert float(r["kl_distance"]) <= 1e-6

    def test_both_data_sources_rejected(self, tmp_path, tiny_dataset):
        cfg = write_config(tmp_path, {
            "dataset": {"train": tiny_dataset, "test": tiny_dataset},
            "pendulum": {"n": 10, "n_test": 10},
            "lambda": 0.1, "gammas": [0.0], "ranks": [2], "seed": 0,
        })
        assert main(["compare", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_rank_exceeds_n(self, tmp_path, tiny_dataset):
        cfg = write_config(tmp_path, {
            "dataset": {"train": tiny_dataset, "test": tiny_dataset},
            "lambda": 0.1, "x_bandwidth": 1.0, "y_bandwidth": 1.0,
            "gammas": [0.0], "ranks": [50], "seed": 0,
        })
        assert main(["compare", "--config", cfg, "--out", str(tmp_path)]) == 2


class TestRate:
    DIST = {"px": [0.5, 0.5], "pyx": [[0.9, 0.1], [0.2, 0.8]]}

    def test_shape(self, tmp_path):
        cfg = write_config(tmp_path, dict(self.DIST, n_grid=[10, 20, 40], seeds=[0, 1]))
        out = tmp_path / "out"
        assert main(["rate", "--config", cfg, "--out", str(out)]) == 0
        rows = read_rows(out / "rate.csv")
        assert len(rows) == 6
        slope_line = (out / "slope.txt").read_text()
        assert slope_line.startswith("slope=") and slope_line.endswith("\n")

    def test_synthetic_hook_slope(self, tmp_path):
        cfg = write_config(tmp_path, dict(self.DIST, n_grid=[10, 100, 1000], seeds=[0],
                                          synthetic_excess_c=3.0))
        out = tmp_path / "out"
        assert main(["rate", "--config", cfg, "--out", str(out)]) == 0
        slope = float((out / "slope.txt").read_text().strip().split("=")[1])
        assert slope == pytest.approx(-1.0, abs=1e-6)

    def test_bad_distribution(self, tmp_path):
        cfg = write_config(tmp_path, {"px": [0.7, 0.7], "pyx": [[1.0, 0.0], [0.0, 1.0]],
                                      "n_grid": [10], "seeds": [0]})
        assert main(["rate", "--config", cfg, "--out", str(tmp_path)]) == 2


class TestPendulum:
    def test_smoke(self, tmp_path):
        cfg = write_config(tmp_path, {"n": 40, "seed": 0, "sweeps": 10,
                                      "episodes": 5, "horizon": 10})
        out = tmp_path / "out"
        assert main(["pendulum", "--config", cfg, "--out", str(out)]) == 0
        policy = read_rows(out / "policy.csv")
        assert len(policy) == 40
        returns = {r["policy"]: float(r["mean_return"]) for r in read_rows(out / "returns.csv")}
        assert set(returns) == {"learned", "random"}

    def test_seed_override_changes_output(self, tmp_path):
        cfg = write_config(tmp_path, {"n": 30, "seed": 0, "sweeps": 5,
                                      "episodes": 3, "horizon": 5})
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["pendulum", "--config", cfg, "--out", str(a)]) == 0
        assert main(["pendulum", "--config", cfg, "--out", str(b), "--seed", "1"]) == 0
        assert (a / "policy.csv").read_bytes() != (b / "policy.csv").read_bytes()


class TestPlumbing:
    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["fit", "--config", str(path), "--out", str(tmp_path)]) == 2

    def test_non_object_config(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")
        assert main(["fit", "--config", str(path), "--out", str(tmp_path)]) == 2

    def test_dataset_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        xs, ys = rng.standard_normal((7, 3)), rng.standard_normal((7, 2))
        path = write_dataset(tmp_path / "rt.csv", xs, ys)
        ts = read_dataset(path)
        np.testing.assert_allclose(np.asarray(ts.xs), xs)
        np.testing.assert_allclose(np.asarray(ts.ys), ys)

    def test_write_csv_formatting(self, tmp_path):
        path = str(tmp_path / "x.csv")
        write_csv(path, ["a", "b"], [[1, 0.5], [True, 1e-9]])
        assert open(path).read() == "a,b\n1,0.5\n1,1e-09\n"

    def test_write_csv_atomic_no_stray_tempfiles(self, tmp_path):
        path = str(tmp_path / "y.csv")
        write_csv(path, ["a"], [[1.0]])
        assert sorted(os.listdir(tmp_path)) == ["y.csv"]
