import csv
import json
import time

import numpy as np
import pytest

import mcam.pipeline as pipeline
from mcam import cli
from mcam.errors import ConfigError, NumericError
from mcam.metrics import ari
from mcam.pipeline import RunConfig, SweepSpec, cluster, run_mcam, run_sweep
from mcam.synthgen import SyntheticSpec, generate, load_labels_csv, save_labels_csv
from mcam.tensor import save_tensor


@pytest.fixture
def two_block_file(tmp_path, two_block):
    t, truth = two_block
    save_tensor(t, tmp_path / "t.t3b")
    save_labels_csv(truth.labels, tmp_path / "truth.csv")
    return tmp_path


@pytest.mark.parametrize("variant", ["mcam1", "mcam2"])
@pytest.mark.parametrize("engine", ["sc", "ap"])
def test_end_to_end_two_block(two_block, variant, engine):
    t, truth = two_block
    res = cluster(t, variant, engine, k=(2, 2, 2) if engine == "sc" else None)
    for mode in range(3):
        assert ari(truth.labels[mode], res.clustering.labels[mode]) == 1.0


def test_sc_requires_k():
    with pytest.raises(ConfigError):
        RunConfig("x.t3b", engine="sc")
    with pytest.raises(ConfigError):
        RunConfig("x.t3b", r=0)
    with pytest.raises(ConfigError):
        RunConfig("x.t3b", variant="mcam3")


def test_run_mcam_outputs(two_block_file):
    out = two_block_file / "run"
    res = run_mcam(RunConfig(str(two_block_file / "t.t3b"), "mcam2", "sc", (2, 2, 2),
                             output=str(out)))
    names = {p.name for p in out.iterdir()}
    assert {"labels.csv", "report.json", "timings.json", "labels_mode1.csv",
            "affinity_mode3.csv"} <= names
    report = json.loads((out / "report.json").read_text())
    assert [m["n_clusters"] for m in report["modes"]] == [2, 2, 2]
    assert report["config"]["variant"] == "mcam2"
    assert report["config"]["ap"]["damping"] == 0.5
    with open(out / "labels_mode2.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["index", "label"] and len(rows) == 7
    np.testing.assert_array_equal(load_labels_csv(out / "labels.csv")[0],
                                  res.clustering.labels[0])


def test_identical_config_gives_identical_report(two_block_file):
    cfg = RunConfig(str(two_block_file / "t.t3b"), output=str(two_block_file / "run"))
    names = ("report.json", "labels.csv", "affinity_mode1.csv")
    run_mcam(cfg)
    first = [(two_block_file / "run" / n).read_bytes() for n in names]
    run_mcam(cfg)
    assert first == [(two_block_file / "run" / n).read_bytes() for n in names]


def test_errors_carry_mode_context(two_block):
    t, _ = two_block
    with pytest.raises(Exception, match="mode-1"):
        cluster(t, "mcam1", "sc", k=(9, 2, 2))


def test_sweep_small(tmp_path):
    spec = SweepSpec(gammas=(40.0,), methods=("mcam1-sc", "cp-kmeans", "tucker-kmeans"),
                     repetitions=2, dims=(20, 20, 20), n_clusters=2, block_size=10,
                     r_values=(None, 1))
    res = run_sweep(spec, workers=1)
    assert [r["method"] for r in res.rows] == ["mcam1-sc", "mcam1-sc@r=1", "cp-kmeans",
                                               "tucker-kmeans"]
    assert all(r["ari_mean"] > 0.9 for r in res.rows)
    assert [r["seed"] for r in res.runs[:2]] == [0, 1]
    assert "preference" not in res.runs[0]
    res.write_csv(tmp_path / "s.csv")
    with open(tmp_path / "s.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["gamma", "method", "ari_mean", "ari_std", "nmi_mean", "nmi_std", "r_mode"]
    assert rows[3][-1] == ""


def test_sweep_parallel_matches_serial():
    spec = SweepSpec(gammas=(30.0, 40.0), methods=("mcam2-ap",), repetitions=2,
                     dims=(15, 15, 15), n_clusters=2, block_size=6)
    assert run_sweep(spec, workers=2).runs == run_sweep(spec, workers=1).runs


def test_sweep_failures_are_recorded():
    spec = SweepSpec(gammas=(40.0,), methods=("mcam1-sc",), repetitions=1, dims=(20, 20, 20),
                     n_clusters=2, block_size=8, r_values=(50,))
    res = run_sweep(spec, workers=1)
    assert "error" in res.runs[0]
    assert res.rows[0]["ari_mean"] is None


def test_sweep_validation():
    with pytest.raises(ConfigError):
        SweepSpec(gammas=(55,), methods=())
    with pytest.raises(ConfigError):
        SweepSpec(gammas=(55,), methods=("kmeans",))
    with pytest.raises(ConfigError):
        SweepSpec.from_dict({"gammas": [55], "methods": ["mcam1-sc"], "colour": 1})


def test_worker_env(monkeypatch):
    monkeypatch.setenv("MCAM_WORKERS", "3")
    assert pipeline.env_workers() == 3
    monkeypatch.setenv("MCAM_WORKERS", "many")
    with pytest.raises(ConfigError):
        pipeline.env_workers()


# command line ------------------------------------------------------------

def test_cli_generate_cluster_evaluate(tmp_path, capsys):
    data = tmp_path / "data"
    assert cli.main(["generate", "--dims", "20", "20", "20", "--n-clusters", "2",
                     "--block-size", "8", "--gamma", "60", "--seed", "1",
                     "--output", str(data)]) == 0
    assert json.loads((data / "spec.json").read_text())["seed"] == 1
    run = tmp_path / "run"
    assert cli.main(["cluster", "--input", str(data / "tensor.t3b"), "--engine", "sc",
                     "--k", "3", "3", "3", "--output", str(run)]) == 0
    assert "mode 3: r=" in capsys.readouterr().out
    assert cli.main(["evaluate", "--labels", str(run / "labels.csv"), "--truth",
                     str(data / "truth.csv"), "--tensor", str(data / "tensor.t3b"),
                     "--output", str(tmp_path / "m.json")]) == 0
    records = json.loads((tmp_path / "m.json").read_text())
    assert {r["metric"] for r in records} == {"ari", "nmi", "block_rmse"}
    assert all(r["value"] == 1.0 for r in records if r["metric"] == "ari")
    nmi_rec = next(r for r in records if r["metric"] == "nmi")
    assert nmi_rec["params"] == {"normalization": "arithmetic"}


def test_cli_sweep(tmp_path):
    spec = {"gammas": [50], "methods": ["mcam1-ap", "tucker-kmeans"], "repetitions": 1,
            "dims": [15, 15, 15], "n_clusters": 2, "block_size": 6}
    (tmp_path / "sweep.json").write_text(json.dumps(spec))
    assert cli.main(["sweep", str(tmp_path / "sweep.json"), "--output", str(tmp_path / "r.csv"),
                     "--runs", str(tmp_path / "runs.json")]) == 0
    assert len((tmp_path / "r.csv").read_text().splitlines()) == 3
    runs = json.loads((tmp_path / "runs.json").read_text())
    ap_run = next(r for r in runs if r["method"] == "mcam1-ap")
    assert len(ap_run["preference"]) == 3 and len(ap_run["converged"]) == 3
    (tmp_path / "bad.json").write_text(json.dumps({**spec, "methods": []}))
    assert cli.main(["sweep", str(tmp_path / "bad.json"), "--output", str(tmp_path / "x.csv")]) == 2


def test_cli_exit_codes(tmp_path, two_block_file, monkeypatch):
    t3b = str(two_block_file / "t.t3b")
    assert cli.main(["cluster", "--input", t3b, "--engine", "sc", "--output", str(tmp_path)]) == 2
    (tmp_path / "bad.t3b").write_bytes(b"XXXX" + bytes(40))
    assert cli.main(["cluster", "--input", str(tmp_path / "bad.t3b"),
                     "--output", str(tmp_path / "o")]) == 3
    assert cli.main(["cluster", "--input", str(tmp_path / "missing.t3b"),
                     "--output", str(tmp_path / "o")]) == 3
    assert cli.main(["evaluate", "--labels", str(two_block_file / "truth.csv")]) == 2

    def broken(*args, **kwargs):
        raise NumericError("eigensolver failed", iterations=3)

    monkeypatch.setattr(pipeline, "mode_spectra", broken)
    assert cli.main(["cluster", "--input", t3b, "--output", str(tmp_path / "n")]) == 4


def test_runtime_scaling_is_quartic_or_better():
    def timed(n):
        spec = SyntheticSpec.blocks(dims=(n, n, n), n_clusters=3, block_size=n // 4,
                                    gamma=60.0, seed=0)
        t, _ = generate(spec)
        cluster(t, "mcam1", "sc", k=(3, 3, 3))
        best = np.inf
        for _ in range(3):
            start = time.perf_counter()
            cluster(t, "mcam1", "sc", k=(3, 3, 3))
            best = min(best, time.perf_counter() - start)
        return best

    assert timed(80) / timed(40) <= 32.0
