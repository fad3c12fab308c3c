import csv
import json

import pytest

from fleam import cli

TABLE_V_US = ("0.105", "0.372")


def run(argv, capsys):
    rc = cli.main(argv)
    out, err = capsys.readouterr()
    return rc, out, err


def test_missing_dataset_exit_2_names_flag(capsys, tmp_path):
    rc, _, err = run(["train-centralized", "--out", str(tmp_path)], capsys)
    assert rc == 2 and "--dataset" in err
    rc, _, err = run(["train-federated", "--dataset", str(tmp_path / "none.csv")], capsys)
    assert rc == 2 and "--dataset" in err


def test_effective_config_printed_first(capsys, tmp_path):
    rc, out, _ = run(["economics", "--out", str(tmp_path)], capsys)
    first = json.loads(out.splitlines()[0])
    assert rc == 0 and first["command"] == "economics" and first["classic_time"] == 1715.91


def test_config_file_layers(capsys, tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[common]\nseed = 5\n[economics]\nfleam_time = 100\nclassic_time = 200\n")
    rc, out, _ = run(["economics", "--config", str(ini), "--classic-time", "300", "--out", str(tmp_path)], capsys)
    cfg = json.loads(out.splitlines()[0])
    assert rc == 0 and (cfg["seed"], cfg["fleam_time"], cfg["classic_time"]) == (5, 100.0, 300.0)


@pytest.mark.parametrize("text", ["[economics]\nfleam_time = abc\n", "[economics]\nwhatever = 1\n"])
def test_bad_config_exit_2(capsys, tmp_path, text):
    ini = tmp_path / "c.ini"
    ini.write_text(text)
    assert run(["economics", "--config", str(ini)], capsys)[0] == 2


def test_economics_table(capsys, tmp_path):
    assert run(["economics", "--out", str(tmp_path), "--lv"], capsys)[0] == 0
    rows = list(csv.DictReader(open(tmp_path / "cost_table.csv")))
    us = next(r for r in rows if r["botnet"] == "Botnet-the U.S.")
    assert (us["classic_usd_per_sec"], us["fleam_usd_per_sec"]) == TABLE_V_US
    assert (tmp_path / "lv.csv").exists()


def test_economics_bad_prices_exit_2(capsys, tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("name,population,rental_price\nx,0,5\n")
    assert run(["economics", "--prices", str(p), "--out", str(tmp_path)], capsys)[0] == 2


def test_placement_sample(capsys, tmp_path):
    rc, out, _ = run(["placement", "--out", str(tmp_path), "--k", "2"], capsys)
    res = json.loads(out.splitlines()[-1])
    assert rc == 0 and res["covered"] == 5 and len(res["checkpoints"]) == 2
    assert (tmp_path / "centrality.csv").exists()


def test_placement_missing_topology(capsys, tmp_path):
    rc, _, err = run(["placement", "--topology", str(tmp_path / "t.txt")], capsys)
    assert rc == 2 and "--topology" in err


def test_simulate_and_report(capsys, tmp_path):
    rc, out, _ = run(["simulate-mitigation", "--out", str(tmp_path), "--trials", "100",
                      "--no-accuracy", "--curve", "100,500"], capsys)
    res = json.loads(out.splitlines()[-1])
    assert rc == 0 and 0.25 <= res["ratio_mean"] <= 0.32
    run(["economics", "--out", str(tmp_path)], capsys)
    rc, out, _ = run(["report", "--out", str(tmp_path)], capsys)
    assert rc == 0 and "report_costs.csv" in out and (tmp_path / "report_delays.csv").exists()


def test_report_without_runs_exit_2(capsys, tmp_path):
    assert run(["report", "--out", str(tmp_path)], capsys)[0] == 2


def test_training_reruns_identical_and_single_worker_matches(capsys, tmp_path, unsw_small):
    common = ["--dataset", str(unsw_small), "--subset", "3000", "--hidden", "8", "--seed", "2"]
    a, b, f = tmp_path / "a", tmp_path / "b", tmp_path / "f"
    assert run(["train-centralized", *common, "--epochs", "3", "--out", str(a)], capsys)[0] == 0
    assert run(["train-centralized", *common, "--epochs", "3", "--out", str(b)], capsys)[0] == 0
    assert (a / "centralized.csv").read_bytes() == (b / "centralized.csv").read_bytes()
    assert run(["train-federated", *common, "--workers", "1", "--rounds", "3", "--out", str(f)], capsys)[0] == 0
    assert (a / "centralized.ckpt").read_bytes() == (f / "federated.ckpt").read_bytes()
    assert (f / "shards.json").exists()


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_runtime_failure_exit_1(capsys, tmp_path, unsw_small):
    rc, _, err = run(["train-centralized", "--dataset", str(unsw_small), "--subset", "500", "--hidden", "4",
                      "--epochs", "1", "--lr", "1e308", "--batch", "1", "--out", str(tmp_path)], capsys)
    assert rc == 1 and "FloatingPointError" in err


def test_detect_synthetic(capsys, tmp_path):
    rc, out, _ = run(["detect", "--synthetic", "--out", str(tmp_path), "--epochs", "2",
                      "--baseline-windows", "100"], capsys)
    res = json.loads(out.splitlines()[-1])
    assert rc == 0 and res["windows"] == 100 and 40 <= res["anomalous"] <= 60
    assert (tmp_path / "verdicts.csv").exists()


def test_detect_requires_inputs(capsys):
    rc, _, err = run(["detect"], capsys)
    assert rc == 2 and "--benign" in err


def test_synth_unsw(capsys, tmp_path):
    assert run(["synth-unsw", "--rows", "50", "--out", str(tmp_path)], capsys)[0] == 0
    assert len((tmp_path / "unsw_synth.csv").read_text().splitlines()) == 51
