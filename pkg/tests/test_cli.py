import json
import subprocess
import sys
from pathlib import Path

import pytest


def neuromap(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "neuromap", *args],
                          capture_output=True, text=True, cwd=cwd)


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """One generated workload reused by the downstream command tests."""
    root = tmp_path_factory.mktemp("cli")
    r = neuromap("generate", "--layers", "12,8", "--rate", "25",
                 "--duration-ms", "120", "--seed", "4", "--out", str(root))
    assert r.returncode == 0, r.stderr
    r = neuromap("partition", "--network", str(root / "network.csv"),
                 "--trace", str(root / "trace.csv"), "--n-c", "5",
                 "--out", str(root))
    assert r.returncode == 0, r.stderr
    r = neuromap("place", "--network", str(root / "network.csv"),
                 "--trace", str(root / "trace.csv"),
                 "--partition", str(root / "partition.csv"),
                 "--iterations", "10", "--particles", "6",
                 "--out", str(root))
    assert r.returncode == 0, r.stderr
    return root


class TestGenerate:
    def test_writes_files_and_reruns_identically(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            r = neuromap("generate", "--layers", "6,3", "--seed", "9",
                         "--duration-ms", "50", "--out", str(out))
            assert r.returncode == 0, r.stderr
        assert (a / "network.csv").read_bytes() == (b / "network.csv").read_bytes()
        assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()

    def test_named_workload(self, tmp_path):
        r = neuromap("generate", "--workload", "mlp-mnist-shape",
                     "--duration-ms", "1", "--rate", "0.1",
                     "--out", str(tmp_path))
        assert r.returncode == 0, r.stderr
        assert "79400 synapses" in r.stdout.replace(",", "")

    def test_needs_exactly_one_source(self, tmp_path):
        r = neuromap("generate", "--out", str(tmp_path))
        assert r.returncode == 1


class TestPartitionCmd:
    def test_report_compares_against_fill(self, workdir):
        report = (workdir / "partition_report.txt").read_text()
        assert "baseline_fill_gs=" in report
        fields = dict(line.split("=") for line in report.strip().splitlines())
        assert int(fields["gs"]) <= int(fields["baseline_fill_gs"])
        assert fields["k"] == "4"  # ceil(20 / 5)

    def test_validation_exit_code(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("# neurons=3\n0,9,5\n")
        r = neuromap("partition", "--network", str(bad), "--out", str(tmp_path))
        assert r.returncode == 2


class TestPlaceCmd:
    def test_outputs(self, workdir):
        history = (workdir / "fitness_history.csv").read_text().splitlines()
        assert history[0] == "iteration,best_fitness"
        assert len(history) == 11
        values = [float(line.split(",")[1]) for line in history[1:]]
        assert all(a >= b for a, b in zip(values, values[1:]))
        assert (workdir / "convergence.png").exists()
        assert (workdir / "mapping.csv").exists()

    def test_infeasible_mesh_exit_code(self, workdir, tmp_path):
        hw = tmp_path / "hw.txt"
        hw.write_text("mesh=1x1\nn_c=5\n")
        r = neuromap("place", "--network", str(workdir / "network.csv"),
                     "--trace", str(workdir / "trace.csv"),
                     "--partition", str(workdir / "partition.csv"),
                     "--hw", str(hw), "--iterations", "2", "--out", str(tmp_path))
        assert r.returncode == 3


class TestSimulateCmd:
    def test_outputs(self, workdir, tmp_path):
        r = neuromap("simulate", "--network", str(workdir / "network.csv"),
                     "--trace", str(workdir / "trace.csv"),
                     "--partition", str(workdir / "partition.csv"),
                     "--mapping", str(workdir / "mapping.csv"),
                     "--out", str(tmp_path))
        assert r.returncode == 0, r.stderr
        for name in ("packets.csv", "link_utilization.csv", "sim_summary.txt",
                     "metrics.txt", "delay_histogram.png", "link_heatmap.png"):
            assert (tmp_path / name).exists(), name
        metrics = dict(line.split("=")
                       for line in (tmp_path / "metrics.txt").read_text().splitlines())
        assert set(metrics) == {"n_s", "avg_latency", "total_energy_pj",
                                "isi_distortion_abs", "isi_distortion_signed",
                                "spike_disorder"}
        summary = dict(line.split("=")
                       for line in (tmp_path / "sim_summary.txt").read_text().splitlines())
        assert summary["injected"] == summary["delivered"] == summary["n_s"]


class TestExploreCmd:
    def test_three_rows(self, workdir, tmp_path):
        r = neuromap("explore", "--network", str(workdir / "network.csv"),
                     "--trace", str(workdir / "trace.csv"),
                     "--partition", str(workdir / "partition.csv"),
                     "--mapping", str(workdir / "mapping.csv"),
                     "--out", str(tmp_path))
        assert r.returncode == 0, r.stderr
        lines = (tmp_path / "explore.csv").read_text().strip().splitlines()
        assert lines[0] == "kind,avg_latency,energy,isi_distortion"
        kinds = [line.split(",")[0] for line in lines[1:]]
        assert kinds == ["xy", "northlast", "westfirst"]
        assert (tmp_path / "explore.png").exists()


class TestPipelineCmd:
    def test_end_to_end_byte_identical_rerun(self, tmp_path):
        manifest = {
            "out": "run",
            "layers": [10, 6, 4],
            "rate_hz": 20.0,
            "duration_ms": 80.0,
            "n_c": 5,
            "pso": {"particles": 5, "iterations": 8},
            "seeds": [0, 1],
            "explore": True,
        }
        mpath = tmp_path / "manifest.json"
        mpath.write_text(json.dumps(manifest))
        r1 = neuromap("pipeline", "--manifest", str(mpath))
        assert r1.returncode == 0, r1.stderr
        out = tmp_path / "run"
        files = sorted(p.relative_to(out) for p in out.rglob("*") if p.is_file())
        assert Path("manifest.json") in files
        assert Path("seed-0/metrics.txt") in files
        assert Path("seed-1/explore.csv") in files
        snapshots = {f: (out / f).read_bytes() for f in files}
        r2 = neuromap("pipeline", "--manifest", str(mpath))
        assert r2.returncode == 0, r2.stderr
        for f, blob in snapshots.items():
            assert (out / f).read_bytes() == blob, f"{f} changed between reruns"

    def test_unknown_manifest_key_rejected(self, tmp_path):
        mpath = tmp_path / "manifest.json"
        mpath.write_text(json.dumps({"out": "x", "layers": [4, 2], "typo": 1}))
        r = neuromap("pipeline", "--manifest", str(mpath))
        assert r.returncode == 2
        assert "typo" in r.stderr

    def test_manifest_missing_inputs_rejected(self, tmp_path):
        mpath = tmp_path / "manifest.json"
        mpath.write_text(json.dumps({"out": "x"}))
        r = neuromap("pipeline", "--manifest", str(mpath))
        assert r.returncode == 2


class TestUsage:
    def test_bad_flag(self):
        r = neuromap("generate", "--nope")
        assert r.returncode == 1

    def test_help(self):
        r = neuromap("--help")
        assert r.returncode == 0
        for cmd in ("generate", "partition", "place", "simulate", "explore",
                    "pipeline"):
            assert cmd in r.stdout
