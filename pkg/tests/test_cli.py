import json

import pandas as pd
import pytest

from tests.conftest import TM_DIR
from threshold_rmab.cli import build_parser, main, resolve_config
from threshold_rmab.instances import load_instance

RUN_ARGS = ["run", "--family", "uniform", "--n", "4", "--policies", "greedy_min,random",
            "--reps", "2", "--T", "3", "--seed", "7"]


def test_run_is_reproducible(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(RUN_ARGS + ["--out", str(first)]) == 0
    assert main(RUN_ARGS + ["--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    frame = pd.read_csv(first)
    assert list(frame.columns) == ["policy", "mean_cost", "std_cost", "violation_rate"]
    assert frame["policy"].tolist() == ["greedy_min", "random"]


def test_run_writes_traces_and_chart(tmp_path):
    runs, chart = tmp_path / "runs.csv", tmp_path / "runs.svg"
    code = main(RUN_ARGS + ["--out", str(tmp_path / "agg.csv"), "--runs-out", str(runs),
                            "--svg", str(chart)])
    assert code == 0
    assert len(pd.read_csv(runs)) == 2 * 2 * 3
    assert chart.read_text().lstrip().startswith("<?xml")


def test_sweep_over_rho(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--family", "uniform", "--n", "3", "--policies", "greedy_min,all_active",
                 "--reps", "2", "--T", "2", "--vary", "rho", "--grid", "0.5,0.7,0.9",
                 "--out", str(out)])
    assert code == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["rho", "policy", "mean_cost", "std_cost", "violation_rate"]
    assert len(frame) == 6
    assert sorted(set(frame["rho"])) == [0.5, 0.7, 0.9]


def test_index_table_for_the_claim_instance(tmp_path):
    out = tmp_path / "index.csv"
    assert main(["index", "--family", "claim1", "--n", "51", "--out", str(out)]) == 0
    frame = pd.read_csv(out)
    assert len(frame) == 51
    assert frame["lambda_minus"].iloc[:50].sub(0.1).abs().max() < 1e-5
    assert frame["lambda_minus"].iloc[50] == pytest.approx(1.0, abs=1e-5)


def test_gen_writes_a_loadable_instance(tmp_path):
    out = tmp_path / "adv.json"
    assert main(["gen", "--family", "adversarial", "--n", "6", "--seed", "3", "--out", str(out)]) == 0
    assert load_instance(str(out)).n == 6


def test_reduce_reports_the_dichotomy(tmp_path):
    out = tmp_path / "report.json"
    assert main(["reduce", "--tm", str(TM_DIR / "halting.json"), "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["verdict"] == "halts"
    assert report["iff_holds"] is True


def test_exit_codes():
    assert main(["run", "--policies", "oracle", "--n", "2"]) == 2
    assert main(["run", "--beta", "1.5", "--n", "2"]) == 1
    assert main(["run", "--instance", "/nonexistent/instance.json"]) == 1
    with pytest.raises(SystemExit) as excinfo:
        main(["run", "--family", "nis"])
    assert excinfo.value.code == 2


def test_flags_override_the_config_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"reps": 3, "T": 4, "family": "claim1", "n": 5}))
    args = build_parser().parse_args(["run", "--config", str(path), "--reps", "1"])
    cfg = resolve_config(args)
    assert cfg.reps == 1
    assert cfg.T == 4
    assert cfg.family == "claim1"


def test_instance_flag_implies_the_file_family(tmp_path):
    out = tmp_path / "claim.json"
    assert main(["gen", "--family", "claim1", "--n", "5", "--out", str(out)]) == 0
    args = build_parser().parse_args(["run", "--instance", str(out)])
    assert resolve_config(args).family == "file"
