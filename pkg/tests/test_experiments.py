from __future__ import annotations

import math

import pandas as pd
import pytest

from quench_lab.errors import ConfigError
from quench_lab.experiments import (
    EXPERIMENTS,
    ExperimentConfig,
    build_config,
    experiments_frame,
    read_result,
    result_metadata,
    run_experiment,
    validate_document,
    write_result,
)


def doc(experiment: str, **parameters) -> dict:
    return {"experiment": experiment, "parameters": parameters}


def test_validation_reports_errors_and_warnings():
    report = validate_document({"experiment": "bh-variance", "parameters": {"n": 10, "nu": "fast"}, "colour": 1})
    assert report.warnings == ["unknown key colour"]
    assert report.errors == ["parameters.nu: expected number list, got str"]
    assert not report.ok

    report = validate_document({"experiment": "warp", "parameters": {}, "seed": True})
    assert any(error.startswith("seed: expected integer") for error in report.errors)
    assert any("unknown experiment 'warp'" in error for error in report.errors)

    assert validate_document({"parameters": {}}).errors == ["missing required key experiment"]
    assert validate_document({**doc("bh-variance", n=1, nu=[1]), "seed": -1}).errors == [
        "seed: expected an unsigned 64-bit integer"
    ]


def test_build_config_fills_defaults_and_applies_overrides():
    config = build_config({**doc("scaling", overlap_decay=0.9, ns=[4, 8], tfim_ns=[8]), "seed": 3, "format": "json"})
    assert config.seed == 3
    assert config.format == "json"
    assert config.parameters["dense_max_n"] == 10
    assert config.parameters["g"] == 1.0

    overridden = build_config(doc("bh-variance", n=1, nu=[1]), seed=9, output="x.csv", fmt="csv")
    assert (overridden.seed, overridden.output, overridden.format) == (9, "x.csv", "csv")

    with pytest.raises(ConfigError, match="missing required key parameters.nu"):
        build_config(doc("bh-variance", n=1))
    with pytest.raises(ConfigError):
        build_config(doc("bh-variance", n=1, nu=[1]), fmt="xml")


def test_every_experiment_is_listed():
    frame = experiments_frame()
    assert list(frame["experiment"]) == list(EXPERIMENTS)
    assert len(frame) == 9


def run(experiment: str, seed: int = 1, threads: int = 1, **parameters) -> dict[str, pd.DataFrame]:
    return run_experiment(build_config({**doc(experiment, **parameters), "seed": seed}), threads)


def test_bh_variance_experiment():
    tables = run("bh-variance", n=100, nu=[0.0, 1.0])
    frame = tables["variance"]
    assert frame["variance"].iloc[0] == 100.0
    assert frame["variance"].iloc[1] == pytest.approx(100 * -math.expm1(-2 * math.pi) / (2 * math.pi))


def test_horizon_experiment():
    tables = run("horizon", profile={"form": "exponential", "v0": 2.0, "gamma": 0.5}, times=[0.0, 1.0])
    frame = tables["horizon"]
    assert not frame["divergent"].any()
    assert frame["identity_residual"].max() < 1e-6


def test_dispersion_experiment_with_mixture():
    tables = run(
        "dispersion",
        dispersion={"template": "roton", "k_crit": 1.0, "delta": {"form": "linear", "v0": 1.0, "rate": -1.0}, "curvature": 1.0},
        times=[0.0, 2.0],
        k_max=2.0,
        coupling={"g11": 1.0, "g22": 1.0, "g12": 1.2},
        quartic=0.5,
    )
    assert list(tables["classification"]["kind"]) == ["stable", "roton"]
    mixture = tables["mixture"].iloc[0]
    assert mixture["phase"] == "phase-separated"
    assert mixture["fraction"] < 0.5


def test_scaling_experiment_skips_large_dense_chains():
    tables = run("scaling", overlap_decay=0.9, ns=[4, 8, 16], tfim_ns=[6, 64], dense_max_n=6)
    tfim = tables["tfim"]
    assert tfim["dense_gap"].iloc[0] == pytest.approx(tfim["gap"].iloc[0], rel=1e-6)
    assert math.isnan(tfim["dense_gap"].iloc[1])
    assert tables["regression"]["slope"].iloc[0] == pytest.approx(math.log(0.9))


def test_aqc_scan_experiment_is_seeded():
    a = run("aqc-scan", seed=5, n=6, m=5, points=17, policy="solution")
    b = run("aqc-scan", seed=5, n=6, m=5, points=17, policy="solution")
    assert a["scan"].equals(b["scan"])
    assert a["summary"]["min_gap"].iloc[0] > 0


@pytest.mark.parametrize("seed", [100, 101])
def test_xy_scan_in_the_initial_sector_reports_a_result(seed):
    tables = run("aqc-scan", seed=seed, n=6, m=5, points=17, scheme="xy", policy="initial")
    summary = tables["summary"].iloc[0]
    assert summary["policy"] == "initial"
    assert summary["runtime"] > 0
    if math.isinf(summary["runtime"]):
        assert summary["min_gap"] < 1e-6


def test_threads_must_be_positive():
    with pytest.raises(ConfigError):
        run("bh-variance", threads=0, n=1, nu=[1])


def test_csv_result_round_trip(tmp_path):
    config = ExperimentConfig("scaling", {"overlap_decay": 0.9}, seed=4)
    tables = {
        "first_order": pd.DataFrame({"n": [1, 2], "gap": [0.1, 1.0 / 3.0]}),
        "flags": pd.DataFrame({"ok": [True, False]}),
    }
    written = write_result(tables, tmp_path / "run.csv", "csv", result_metadata(config, tables))
    assert [path.name for path in written] == ["run.csv", "run.flags.csv"]
    assert (tmp_path / "run.csv").read_text(encoding="utf-8").startswith("# generator: quench-lab ")

    result = read_result(tmp_path / "run.csv")
    assert result.metadata["seed"] == "4"
    assert result.tables["first_order"]["gap"].iloc[1] == 1.0 / 3.0
    assert list(result.tables["flags"]["ok"]) == [True, False]


def test_json_result_round_trip(tmp_path):
    config = ExperimentConfig("bh-variance", {"n": 1}, seed=7)
    tables = {"variance": pd.DataFrame({"nu": [0.5, 2.0], "variance": [0.25, math.nan]})}
    write_result(tables, tmp_path / "out.json", "json", result_metadata(config, tables))
    result = read_result(tmp_path / "out.json")
    frame = result.tables["variance"]
    assert list(frame.columns) == ["nu", "variance"]
    assert frame["variance"].iloc[0] == 0.25
    assert math.isnan(frame["variance"].iloc[1])
    assert result.metadata["experiment"] == "bh-variance"


def test_missing_result_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_result(tmp_path / "nothing.csv")
