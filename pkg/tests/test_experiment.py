import json
from dataclasses import replace

import pytest

from lvselect import cli
from lvselect.errors import ConfigError
from lvselect.experiment import (
    config_from_dict,
    config_from_manifest,
    emit_report,
    load_manifests,
    parse_config,
    run_experiment,
    write_report,
)

SELECT_FILES = ["manifest.json", "mse_series.csv", "trace.csv",
                "trajectory_learned.tsv", "trajectory_truth.tsv"]
DIRECT_FILES = ["fit_params.csv", "loss_history.csv", "manifest.json",
                "trajectory_learned.tsv", "trajectory_truth.tsv"]
HEADERS = {
    "trace.csv": "step,name,value,active,eliminated",
    "mse_series.csv": "step,mse",
    "fit_params.csv": "name,value",
    "loss_history.csv": "epoch,data,residual,total",
    "trajectory_truth.tsv": "t\tu\tv",
    "trajectory_learned.tsv": "t\tu\tv",
}


def read_outputs(directory):
    """File bytes, with the manifest's ``out_dir`` (the only location-dependent field) dropped."""
    out = {p.name: p.read_bytes() for p in sorted(directory.iterdir())}
    manifest = json.loads(out.pop("manifest.json"))
    manifest["config"].pop("out_dir")
    out["manifest.json"] = manifest
    return out


class TestParseConfig:
    def test_minimal_full_defaults(self):
        cfg = parse_config('{"scenario": "full"}')
        assert cfg.window == (0.0, 20.0)
        assert (cfg.n_points, cfg.epsilon, cfg.hyper.epochs) == (100, 6, 5000)
        assert cfg.hyper.batch_size == 100
        assert (cfg.truth.r, cfg.truth.a1, cfg.truth.a2, cfg.truth.b1, cfg.truth.b2) == (0.5, 0.7, 0.3, 0.3, 0.6)
        assert cfg.initial == (2.0, 1.0)

    def test_late_window(self):
        assert parse_config('{"scenario": "late"}').window == (10.0, 20.0)

    def test_custom_window(self):
        cfg = parse_config('{"window": [5, 15]}')
        assert cfg.scenario == "custom" and cfg.window == (5.0, 15.0)

    @pytest.mark.parametrize("doc, key", [
        ({"scenario": "full", "n_points": -1}, "n_points"),
        ({"scenario": "full", "learning_rat": 0.1}, "learning_rat"),
        ({}, "scenario"),
        ({"scenario": "middle"}, "scenario"),
        ({"window": [5, 25]}, "window"),
        ({"scenario": "full", "epsilon": 16}, "epsilon"),
        ({"scenario": "full", "epochs": 2.5}, "epochs"),
        ({"scenario": "full", "a1": "0.7"}, "a1"),
        ({"scenario": "full", "seeds": []}, "seeds"),
        ({"scenario": "full", "nonnegativity": 1}, "nonnegativity"),
    ])
    def test_errors_name_the_key(self, doc, key):
        with pytest.raises(ConfigError) as info:
            config_from_dict(doc)
        assert info.value.key == key
        assert key in str(info.value)

    def test_not_json(self):
        with pytest.raises(ConfigError):
            parse_config("scenario = full")

    def test_to_dict_roundtrip(self):
        cfg = parse_config('{"window": [5, 15], "epsilon": 8, "seeds": [3, 4], "protect_structural": true}')
        assert config_from_dict(cfg.to_dict()) == cfg
        assert cfg.hash() == replace(cfg, out_dir="elsewhere", seeds=(9,)).hash()
        assert cfg.hash() != replace(cfg, epsilon=7).hash()


@pytest.fixture(scope="module")
def smoke_select(tmp_path_factory):
    out = tmp_path_factory.mktemp("smoke")
    cfg = config_from_dict({"scenario": "full", "epochs": 50, "seeds": [0], "out_dir": str(out)})
    (result,) = run_experiment(cfg, "select")
    return cfg, result


class TestRunExperiment:
    def test_select_smoke(self, smoke_select):
        _, result = smoke_select
        assert result.status == "ok"
        assert sorted(p.name for p in result.directory.iterdir()) == SELECT_FILES
        manifest = json.loads((result.directory / "manifest.json").read_text())
        assert len(manifest["results"]["trace"]["final_active"]) <= 6
        assert manifest["files"] == SELECT_FILES
        assert manifest["seed"] == 0 and manifest["code_version"]
        for name in SELECT_FILES:
            if name in HEADERS:
                assert (result.directory / name).read_text().splitlines()[0] == HEADERS[name]

    def test_rerun_byte_identical(self, smoke_select, tmp_path):
        cfg, result = smoke_select
        (again,) = run_experiment(replace(cfg, out_dir=str(tmp_path)), "select")
        assert read_outputs(again.directory) == read_outputs(result.directory)

    def test_manifest_alone_reruns(self, smoke_select, tmp_path):
        _, result = smoke_select
        manifest = json.loads((result.directory / "manifest.json").read_text())
        cfg = replace(config_from_manifest(manifest), out_dir=str(tmp_path))
        (again,) = run_experiment(cfg, "select")
        assert read_outputs(again.directory) == read_outputs(result.directory)

    def test_late_direct_fit_dataset(self, tmp_path):
        cfg = config_from_dict({"scenario": "late", "epochs": 3, "out_dir": str(tmp_path)})
        (result,) = run_experiment(cfg, "direct-fit")
        assert sorted(p.name for p in result.directory.iterdir()) == DIRECT_FILES
        summary = json.loads((result.directory / "manifest.json").read_text())["dataset"]
        assert summary["window"] == [10.0, 20.0]
        assert summary["n_points"] == 101 and summary["includes_initial"]
        assert 10.0 <= summary["interior_t_min"] and summary["interior_t_max"] <= 20.0
        for name in DIRECT_FILES:
            if name in HEADERS:
                assert (result.directory / name).read_text().splitlines()[0] == HEADERS[name]

    def test_bad_mode(self, tmp_path):
        with pytest.raises(ConfigError):
            run_experiment(config_from_dict({"scenario": "full", "out_dir": str(tmp_path)}), "fit")


def select_manifest(scenario, seed, first, final, active=6):
    return {"mode": "select", "scenario": scenario, "seed": seed, "status": "ok",
            "results": {"mse_series": [first, final],
                        "trace": {"final_active": ["r"] * active}}}


class TestReport:
    def test_ten_rows_with_counts(self):
        ms = [select_manifest(s, k, 1e-3, 1e-4 if s == "full" else 2e-3) for s in ("full", "late")
              for k in range(5)]
        rep = emit_report(ms)
        assert len(rep["rows"]) == 10
        assert rep["claims"]["mse_decreases[full]"] == {"satisfied": 5, "of": 5, "holds": True}
        assert rep["claims"]["mse_decreases[late]"] == {"satisfied": 0, "of": 5, "holds": False}
        assert rep["claims"]["full_below_late"]["satisfied"] == 5

    def test_single_run_unavailable(self):
        rep = emit_report([select_manifest("full", 0, 1e-3, 1e-4)])
        assert len(rep["rows"]) == 1
        assert rep["claims"]["full_below_late"] == "unavailable"
        assert rep["claims"]["direct_fit_recovery"] == "unavailable"

    def test_majority_four_of_five(self):
        full = [select_manifest("full", k, 1.0, 1e-4) for k in range(5)]
        late = [select_manifest("late", k, 1.0, 1e-3 if k < 4 else 1e-5) for k in range(5)]
        claim = emit_report(full + late)["claims"]["full_below_late"]
        assert claim == {"satisfied": 4, "of": 5, "holds": True}

    def test_two_of_five_does_not_hold(self):
        full = [select_manifest("full", k, 1.0, 1e-4) for k in range(5)]
        late = [select_manifest("late", k, 1.0, 1e-3 if k < 2 else 1e-5) for k in range(5)]
        assert emit_report(full + late)["claims"]["full_below_late"]["holds"] is False

    def test_write_and_load(self, smoke_select, tmp_path):
        cfg, _ = smoke_select
        ms = load_manifests([cfg.out_dir])
        assert len(ms) == 1
        rep = write_report(tmp_path, ms)
        assert (tmp_path / "report.md").read_text().startswith("| mode |")
        assert json.loads((tmp_path / "report.json").read_text()) == json.loads(json.dumps(rep))


class TestCli:
    def test_direct_fit_and_report(self, tmp_path, capsys):
        assert cli.main(["direct-fit", "--scenario", "late", "--seed", "1", "--seed", "2",
                         "--epochs", "2", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "direct-fit" / "late" / "seed_2" / "fit_params.csv").exists()
        assert cli.main(["report", "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "direct_fit_recovery[late]" in out
        assert (tmp_path / "report.json").exists()

    def test_config_file_and_override(self, tmp_path):
        conf = tmp_path / "c.json"
        conf.write_text(json.dumps({"window": [5, 15], "epochs": 2, "out_dir": str(tmp_path)}))
        assert cli.main(["direct-fit", "--config", str(conf)]) == 0
        assert (tmp_path / "direct-fit" / "custom" / "seed_0" / "manifest.json").exists()

    def test_select_epsilon_flag(self, tmp_path):
        assert cli.main(["select", "--epsilon", "14", "--epochs", "2", "--out", str(tmp_path),
                         "--protect-structural"]) == 0
        m = json.loads((tmp_path / "select" / "full" / "seed_0" / "manifest.json").read_text())
        assert m["config"]["epsilon"] == 14 and m["config"]["protect_structural"] is True
        assert len(m["results"]["trace"]["final_active"]) <= 14

    @pytest.mark.parametrize("text", ['{"scenario": "full", "bogus": 1}', "not json", "[1, 2]"])
    def test_bad_config_exit_2(self, tmp_path, text, capsys):
        conf = tmp_path / "c.json"
        conf.write_text(text)
        assert cli.main(["select", "--config", str(conf), "--out", str(tmp_path)]) == 2
        assert "config error" in capsys.readouterr().err

    def test_report_without_runs(self, tmp_path):
        assert cli.main(["report", "--out", str(tmp_path)]) == 1

    def test_all_seeds_failing_exit_1(self, tmp_path, monkeypatch):
        from lvselect import experiment
        from lvselect.errors import NumericalOverflow

        def boom(*a, **k):
            raise NumericalOverflow("data_mse became non-finite", term="data_mse")
        monkeypatch.setattr(experiment, "fit", boom)
        assert cli.main(["direct-fit", "--epochs", "2", "--out", str(tmp_path)]) == 1
        m = json.loads((tmp_path / "direct-fit" / "full" / "seed_0" / "manifest.json").read_text())
        assert m["status"] == "failed" and "data_mse" in m["error"]
