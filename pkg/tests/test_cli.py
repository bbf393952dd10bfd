import json
from pathlib import Path

import numpy as np
import pytest

from bootlasso import __version__
from bootlasso.cli import bundled_config, main, parse_sim_config
from bootlasso.errors import ConfigError
from bootlasso.io import read_csv_rows
from bootlasso.lasso import compute_lambda_grid
from bootlasso.simulation import load_diabetes_quadratic
from bootlasso.tuner import TuningConfig, run_weighted_bootstrap
from bootlasso.weights import WeightScheme

GOLDEN = Path(__file__).parent / "golden" / "cli_errors.txt"
DIABETES = Path(bundled_config()).parent / "diabetes_quadratic.csv"

TUNE = ["tune", str(DIABETES), "--response", "y", "--n-lambda", "40", "--threads", "1"]


def write(path, text):
    path.write_text(text)
    return str(path)


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def manifest(out):
    return json.loads((Path(out) / "manifest.json").read_text())


def error_cases(tmp):
    bad = write(tmp / "bad.csv", "a,b,y\n1,2,3\n2,x,4\n3,1,2\n")
    nan = write(tmp / "nan.csv", "a,b,y\n1,2,3\n2,nan,4\n3,1,2\n")
    short = write(tmp / "short.csv", "a,b,y\n1,2,3\n2,4\n")
    const = write(tmp / "const.csv", "a,b,y\n1,2,3\n1,5,4\n1,3,3\n")
    good = write(tmp / "good.csv", "a,b,y\n1,2,3\n2,5,4\n4,3,3\n5,1,0\n")
    unknown = write(tmp / "unknown.cfg", "seed = 1\nn_replications = 2\nfolds = 3\n")
    noseed = write(tmp / "noseed.cfg", "# no seed\nn_replications = 2\n")
    badval = write(tmp / "badval.cfg", "seed = 1\nb = many\n")
    noeq = write(tmp / "noeq.cfg", "seed = 1\nn_replications 2\n")
    o = str(tmp / "out")
    return {
        "non_numeric": ["tune", bad, "--response", "y", "--out", o],
        "non_finite": ["tune", nan, "--response", "y", "--out", o],
        "short_row": ["tune", short, "--response", "y", "--out", o],
        "missing_response": ["tune", good, "--response", "z", "--out", o],
        "constant_column": ["tune", const, "--response", "y", "--out", o],
        "bad_scheme": ["tune", good, "--response", "y", "--scheme", "beta:1", "--out", o],
        "all_degenerate": ["tune", good, "--response", "y", "--scheme", "mofn:0.25", "--out", o],
        "unknown_key": ["simulate", unknown, "--out", o],
        "missing_seed": ["simulate", noseed, "--out", o],
        "bad_value": ["simulate", badval, "--out", o],
        "missing_equals": ["simulate", noeq, "--out", o],
        "bad_folds": ["weights-preview", "--scheme", "kfold:1", "--n", "10", "--out", o],
        "bad_fraction": ["weights-preview", "--scheme", "mofn:0", "--n", "10", "--out", o],
    }


def load_golden():
    cases = {}
    for line in GOLDEN.read_text().splitlines():
        if line and not line.startswith("#"):
            name, code, message = line.split("\t")
            cases[name] = (int(code), message)
    return cases


class TestGoldenErrors:
    @pytest.mark.parametrize("name", sorted(load_golden()))
    def test_exit_code_and_message(self, name, tmp_path, capsys):
        code, message = load_golden()[name]
        got, _, err = run(capsys, error_cases(tmp_path)[name])
        assert got == code
        assert err.strip().replace(str(tmp_path), "<tmp>") == message

    def test_failure_still_writes_manifest(self, tmp_path, capsys):
        run(capsys, error_cases(tmp_path)["constant_column"])
        m = manifest(tmp_path / "out")
        assert m["status"] == "error" and m["exit_code"] == 3
        assert "ConstantColumn" in m["error"]

    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["tune"])
        assert err.value.code == 2


class TestTune:
    def test_byte_identical_reruns_any_thread_count(self, tmp_path, capsys):
        args = TUNE + ["--scheme", "beta:2,2", "--b", "200", "--seed", "7"]
        assert run(capsys, args + ["--out", str(tmp_path / "a")])[0] == 0
        # a later --threads overrides the one in TUNE
        assert run(capsys, args + ["--threads", "3", "--out", str(tmp_path / "b")])[0] == 0
        assert manifest(tmp_path / "b")["threads"] == 3
        for name in ("mspe_curve.csv", "tuning_result.csv", "coefficients.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_mofn_records_rho(self, tmp_path, capsys):
        run(capsys, TUNE + ["--scheme", "mofn:0.25", "--b", "20", "--out", str(tmp_path)])
        m = manifest(tmp_path)
        # m = round(0.25 * 442) = 111
        assert m["rho"] == 111 / 442
        assert abs(m["rho"] - 0.25) < 0.005
        assert m["seed"] == 0 and m["tool"] == f"bootlasso {__version__}"

    def test_kfold_rules(self, tmp_path, capsys):
        run(capsys, TUNE + ["--scheme", "kfold:10", "--b", "30", "--out", str(tmp_path)])
        header, rows = read_csv_rows(tmp_path / "tuning_result.csv")
        assert header == ["rule", "lambda", "n_nonzero", "rho", "scheme"]
        lam = {r[0]: float(r[1]) for r in rows}
        assert set(lam) == {"min", "one_se"}
        assert lam["one_se"] >= lam["min"]
        assert (tmp_path / "tuning_result.csv").read_text().startswith("# one_se")

    def test_csv_round_trip_is_exact(self, tmp_path, capsys):
        run(capsys, TUNE + ["--scheme", "paired", "--b", "10", "--seed", "4", "--out", str(tmp_path)])
        data = load_diabetes_quadratic()
        res = run_weighted_bootstrap(data, TuningConfig(WeightScheme.paired(), b=10, seed=4),
                                     grid=compute_lambda_grid(data, 40))
        header, rows = read_csv_rows(tmp_path / "mspe_curve.csv")
        got = np.array([[float(v) for v in r] for r in rows])
        np.testing.assert_array_equal(got[:, 0], res.curve.lambdas)
        np.testing.assert_array_equal(got[:, 1], res.curve.total_mspe)
        np.testing.assert_array_equal(got[:, 2], res.curve.mean_mspe)
        np.testing.assert_array_equal(got[:, 3], res.curve.se)

    def test_cv_ebic_and_truth_outputs(self, tmp_path, capsys):
        code, _, _ = run(capsys, TUNE + ["--scheme", "cv:5", "--rules", "min,one_se,ebic",
                                         "--truth", "bmi,ltg", "--out", str(tmp_path)])
        assert code == 0
        _, rows = read_csv_rows(tmp_path / "tuning_result.csv")
        assert [r[0] for r in rows] == ["min", "one_se", "ebic"]
        header, rows = read_csv_rows(tmp_path / "mcc_curve.csv")
        assert header == ["lambda", "mcc", "n_nonzero"] and len(rows) == 40

    def test_coefficients_on_raw_scale(self, tmp_path, capsys):
        csv = write(tmp_path / "lin.csv", "a,b,y\n" + "".join(
            f"{a},{b},{3 + 2 * a - b}\n" for a, b in [(0, 1), (1, 3), (2, 2), (3, 5), (4, 1), (5, 0)]))
        run(capsys, ["tune", csv, "--response", "y", "--scheme", "kfold:3", "--b", "5",
                     "--lambda-ratio", "1e-9", "--out", str(tmp_path / "o")])
        _, rows = read_csv_rows(tmp_path / "o" / "coefficients.csv")
        coef = {r[0]: float(r[1]) for r in rows}
        # noiseless data: the smallest penalty wins and recovers y = 3 + 2a - b
        assert coef["a"] == pytest.approx(2, abs=1e-3)
        assert coef["b"] == pytest.approx(-1, abs=1e-3)
        assert coef["(intercept)"] == pytest.approx(3, abs=1e-3)

    def test_rerun_reproduces(self, tmp_path, capsys):
        run(capsys, TUNE + ["--scheme", "beta:1,3", "--b", "15", "--seed", "2",
                            "--out", str(tmp_path / "a")])
        assert run(capsys, ["rerun", str(tmp_path / "a" / "manifest.json"),
                            "--out", str(tmp_path / "b")])[0] == 0
        for name in ("mspe_curve.csv", "tuning_result.csv", "coefficients.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_thread_env_override(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("BOOTLASSO_THREADS", "2")
        args = [a for a in TUNE if a not in ("--threads", "1")]
        run(capsys, args + ["--scheme", "paired", "--b", "4", "--out", str(tmp_path)])
        assert manifest(tmp_path)["threads"] == 2


class TestWeightsPreview:
    def test_kfold_step_profile(self, tmp_path, capsys):
        code, _, _ = run(capsys, ["weights-preview", "--scheme", "kfold:3", "--n", "12",
                                  "--replicates", "10", "--out", str(tmp_path)])
        assert code == 0
        header, rows = read_csv_rows(tmp_path / "training_profile.csv")
        assert header == ["rank", "mean_weight", "scheme", "rho"]
        assert [float(r[1]) for r in rows] == [0.0] * 4 + [1.0] * 8
        text = (tmp_path / "training_profile.csv").read_text()
        assert "# rho = " in text

    @pytest.mark.parametrize("scheme", ["beta:5,0.5", "paired", "mofn:0.25"])
    def test_profile_mean_is_rho(self, scheme, tmp_path, capsys):
        run(capsys, ["weights-preview", "--scheme", scheme, "--n", "40", "--out", str(tmp_path)])
        _, rows = read_csv_rows(tmp_path / "training_profile.csv")
        profile = np.array([float(r[1]) for r in rows])
        assert profile.mean() == pytest.approx(float(rows[0][3]), rel=1e-12)
        _, test_rows = read_csv_rows(tmp_path / "test_profile.csv")
        assert len(test_rows) == 40


class TestSimulate:
    def test_config_parsing(self):
        cfg = parse_sim_config(bundled_config().read_text())
        assert cfg["seed"] == 1 and cfg["n_replications"] == 5
        assert cfg["methods"][:4] == ["cv:3", "cv:5", "cv:10", "cv:loo"]
        assert sum(m.startswith("beta:") for m in cfg["methods"]) == 9

    def test_missing_seed_names_key(self):
        with pytest.raises(ConfigError, match="seed"):
            parse_sim_config("n_replications = 3\n")

    def test_small_study_is_deterministic(self, tmp_path, capsys):
        cfg = write(tmp_path / "s.cfg", "seed = 4\nn_replications = 1\ntruth_repeats = 2\n"
                    "cv_folds = 3\nmofn = 0.5\nbeta = 2,2\nb = 5\nn_lambda = 30\n")
        assert run(capsys, ["simulate", cfg, "--out", str(tmp_path / "a")])[0] == 0
        assert run(capsys, ["simulate", cfg, "--threads", "2", "--out", str(tmp_path / "b")])[0] == 0
        for name in ("cells.csv", "summary.csv", "truth.csv", "mcc_curve.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    @pytest.mark.slow
    def test_bundled_config(self, tmp_path, capsys):
        assert run(capsys, ["simulate", str(bundled_config()), "--out", str(tmp_path)])[0] == 0
        _, rows = read_csv_rows(tmp_path / "summary.csv")
        methods = {r[0] for r in rows}
        assert {"cv:3", "cv:5", "cv:10", "cv:442"} <= methods
        assert all(int(r[2]) == 5 for r in rows)


def test_version(capsys):
    with pytest.raises(SystemExit):
        main(["--version"])
    assert capsys.readouterr().out.strip() == f"bootlasso {__version__}"
