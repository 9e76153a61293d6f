from __future__ import annotations

import json

import pytest

from quench_lab.cli import EXIT_CONFIG_ERROR, EXIT_MODULE_ERROR, EXIT_OK, main
from quench_lab.experiments import EXPERIMENTS


def write_config(path, experiment: str, parameters: dict, **top) -> str:
    path.write_text(json.dumps({"experiment": experiment, "parameters": parameters, **top}), encoding="utf-8")
    return str(path)


def data_lines(path) -> list[str]:
    return [line for line in path.read_text(encoding="utf-8").splitlines() if not line.startswith("#")]


def test_run_writes_a_reproducible_table(tmp_path, capsys):
    config = write_config(tmp_path / "variance.json", "bh-variance", {"n": 100, "nu": [0.1, 1, 10]})
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"

    assert main(["run", "--config", config, "--out", str(first)]) == EXIT_OK
    assert main(["run", "--config", config, "--out", str(second)]) == EXIT_OK

    lines = data_lines(first)
    assert lines[0] == "nu,variance"
    assert len(lines) == 4
    assert lines == data_lines(second)
    out = capsys.readouterr().out
    assert "Experiment: bh-variance" in out
    assert f"Wrote: {first}" in out
    assert "[variance]" in out


def test_missing_parameter_is_a_config_error(tmp_path, capsys):
    config = write_config(tmp_path / "bad.json", "bh-variance", {"n": 100})
    assert main(["run", "--config", config, "--out", str(tmp_path / "x.csv")]) == EXIT_CONFIG_ERROR
    assert "error[config]: missing required key parameters.nu" in capsys.readouterr().err
    assert not (tmp_path / "x.csv").exists()


def test_out_of_domain_value_is_a_module_error(tmp_path, capsys):
    config = write_config(tmp_path / "neg.json", "bh-variance", {"n": 100, "nu": [-1]})
    assert main(["run", "--config", config, "--out", str(tmp_path / "x.csv")]) == EXIT_MODULE_ERROR
    assert "error[domain]" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "none.json")]) == EXIT_CONFIG_ERROR
    assert "error[io]" in capsys.readouterr().err


def test_invalid_json(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    assert main(["validate", "--config", str(path)]) == EXIT_CONFIG_ERROR
    assert "error[config]" in capsys.readouterr().err


def test_validate(tmp_path, capsys):
    good = write_config(tmp_path / "good.json", "bh-variance", {"n": 1, "nu": [1]})
    assert main(["validate", "--config", good]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "ok"

    extra = write_config(tmp_path / "extra.json", "bh-variance", {"n": 1, "nu": [1], "speed": 2})
    assert main(["validate", "--config", extra]) == EXIT_OK
    out = capsys.readouterr().out
    assert "warning: unknown key parameters.speed" in out
    assert out.strip().endswith("ok")

    bad = write_config(tmp_path / "bad.json", "bh-variance", {"n": 1, "nu": [1]}, seed="abc")
    assert main(["validate", "--config", bad]) == EXIT_CONFIG_ERROR
    assert "error: seed: expected integer, got str" in capsys.readouterr().out


def test_list_experiments(capsys):
    assert main(["list-experiments"]) == EXIT_OK
    out = capsys.readouterr().out
    for name in EXPERIMENTS:
        assert name in out


def test_json_output_and_show(tmp_path, capsys):
    config = write_config(tmp_path / "scaling.json", "scaling", {"overlap_decay": 0.9, "ns": [4, 8], "tfim_ns": [6]})
    assert main(["run", "--config", config, "--out", str(tmp_path / "run.json"), "--format", "json"]) == EXIT_OK
    written = sorted(path.name for path in tmp_path.glob("run*.json"))
    assert written == ["run.json", "run.regression.json", "run.tfim.json"]
    payload = json.loads((tmp_path / "run.json").read_text(encoding="utf-8"))
    assert payload["metadata"]["table"] == "first_order"
    assert payload["columns"] == ["n", "gap", "log_gap"]
    capsys.readouterr()

    assert main(["show", str(tmp_path / "run.json")]) == EXIT_OK
    shown = capsys.readouterr().out
    assert "Experiment: scaling" in shown
    assert "[tfim]" in shown


@pytest.mark.parametrize("threads", [2, 3])
def test_spinor_results_do_not_depend_on_threads(tmp_path, threads):
    parameters = {"samples": 4, "radii": [2, 3, 4, 8], "L": 16}
    config = write_config(tmp_path / "spinor.json", "spinor", parameters, seed=11)
    serial, threaded = tmp_path / "serial.csv", tmp_path / "threaded.csv"
    assert main(["run", "--config", config, "--out", str(serial)]) == EXIT_OK
    assert main(["run", "--config", config, "--out", str(threaded), "--threads", str(threads)]) == EXIT_OK
    assert data_lines(serial) == data_lines(threaded)


def test_threads_must_be_positive(tmp_path, capsys):
    config = write_config(tmp_path / "variance.json", "bh-variance", {"n": 1, "nu": [1]})
    assert main(["run", "--config", config, "--out", str(tmp_path / "x.csv"), "--threads", "0"]) == EXIT_CONFIG_ERROR
    assert "error[config]" in capsys.readouterr().err
