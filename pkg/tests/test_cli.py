"""End-to-end CLI flows on tiny configurations."""

import json
from pathlib import Path

import numpy as np
import pytest

from ipdiff.cli import main
from ipdiff.instance import read_instance, read_pool


def run(argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    """A tiny generated + collected dataset directory."""
    data = tmp_path_factory.mktemp("data")
    assert run(["gen", "--family", "indep_set", "--nodes", "8", "--count", "4",
                "--seed", "0", "--out", data]) == 0
    assert run(["collect", "--data", data, "--pool", "5"]) == 0
    return data


@pytest.fixture(scope="module")
def ckpt(dataset, tmp_path_factory):
    """Tiny trained checkpoint directory with cisp.pt and diffusion.pt."""
    out = tmp_path_factory.mktemp("ckpt")
    cisp_dir = out / "cisp"
    assert run(["train-cisp", "--data", dataset, "--epochs", "2", "--dim", "16",
                "--batch-size", "4", "--out", cisp_dir]) == 0
    diff_dir = out / "diff"
    assert run(["train-diffusion", "--data", dataset, "--cisp", cisp_dir,
                "--epochs", "2", "--timesteps", "10", "--batch-size", "4",
                "--lam", "0", "--out", diff_dir]) == 0
    return diff_dir


class TestGen:
    def test_single_instance_file(self, tmp_path):
        target = tmp_path / "one.ip"
        assert run(["gen", "--family", "set_cover", "--rows", "4", "--cols", "6",
                    "--out", target]) == 0
        inst = read_instance(target)
        assert inst.n == 6

    def test_count_writes_directory(self, tmp_path):
        out = tmp_path / "many"
        assert run(["gen", "--family", "indep_set", "--nodes", "6", "--count", "3",
                    "--out", out]) == 0
        assert len(list(out.glob("*.ip"))) == 3
        assert (out / "manifest.json").exists()

    def test_split_directories(self, tmp_path):
        out = tmp_path / "split"
        assert run(["gen", "--family", "indep_set", "--nodes", "6", "--count", "10",
                    "--split", "--out", out]) == 0
        assert len(list((out / "train").glob("*.ip"))) == 8
        assert len(list((out / "valid").glob("*.ip"))) == 1
        assert len(list((out / "test").glob("*.ip"))) == 1

    def test_distinct_seeds_across_files(self, tmp_path):
        out = tmp_path / "many"
        run(["gen", "--family", "indep_set", "--nodes", "6", "--count", "3",
             "--out", out])
        insts = [read_instance(p) for p in sorted(out.glob("*.ip"))]
        assert len({i.name for i in insts}) == 3

    def test_bad_family_exits_2(self, tmp_path, capsys):
        assert run(["gen", "--family", "indep_set", "--nodes", "0",
                    "--out", tmp_path / "x"]) == 2
        assert "error:config" in capsys.readouterr().err


class TestCollect:
    def test_pools_written(self, dataset):
        pools = sorted(Path(dataset).glob("*.pool"))
        assert len(pools) == 4
        for pool_path in pools:
            pool = read_pool(pool_path)
            assert 1 <= len(pool) <= 5

    def test_missing_dir_exits_5(self, tmp_path, capsys):
        assert run(["collect", "--data", tmp_path / "nope"]) == 5
        assert "error:io" in capsys.readouterr().err


class TestFeaturize:
    def test_json_output(self, dataset, tmp_path):
        inst = next(Path(dataset).glob("*.ip"))
        out = tmp_path / "graph.json"
        assert run(["featurize", "--inst", inst, "--out", out]) == 0
        payload = json.loads(out.read_text())
        assert "edges" in payload

    def test_parse_error_exits_3(self, tmp_path, capsys):
        bad = tmp_path / "bad.ip"
        bad.write_text("nonsense\n")
        assert run(["featurize", "--inst", bad, "--out", tmp_path / "g.json"]) == 3
        assert "error:parse" in capsys.readouterr().err


class TestTraining:
    def test_cisp_outputs(self, ckpt):
        cisp_dir = ckpt.parent / "cisp"
        assert (cisp_dir / "cisp.pt").exists()
        assert (cisp_dir / "cisp_loss.csv").exists()
        assert (cisp_dir / "cisp_loss.png").exists()
        manifest = json.loads((cisp_dir / "manifest.json").read_text())
        assert manifest["epochs"] == 2
        assert "runtime_s" in manifest

    def test_diffusion_outputs(self, ckpt):
        assert (ckpt / "diffusion.pt").exists()
        assert (ckpt / "cisp.pt").exists()  # co-located for sampling
        assert (ckpt / "diffusion_loss.csv").exists()
        assert (ckpt / "diffusion_loss.png").exists()

    def test_frozen_without_cisp_exits_2(self, dataset, tmp_path, capsys):
        assert run(["train-diffusion", "--data", dataset, "--epochs", "1",
                    "--out", tmp_path / "d"]) == 2
        assert "error:config" in capsys.readouterr().err

    def test_no_freeze_without_cisp_trains(self, dataset, tmp_path):
        out = tmp_path / "scratch"
        assert run(["train-diffusion", "--data", dataset, "--no-freeze-encoders",
                    "--epochs", "1", "--timesteps", "5", "--dim", "16",
                    "--lam", "0", "--out", out]) == 0
        assert (out / "diffusion.pt").exists()


class TestSampleAndEval:
    def test_sample_writes_pool(self, dataset, ckpt, tmp_path):
        inst = next(Path(dataset).glob("*.ip"))
        out = tmp_path / "samples.pool"
        assert run(["sample", "--inst", inst, "--ckpt", ckpt, "--variant", "ddim",
                    "--steps", "5", "--count", "4", "--out", out]) == 0
        assert len(read_pool(out)) == 4

    def test_eval_reports_json(self, dataset, ckpt, tmp_path, capsys):
        inst = next(Path(dataset).glob("*.ip"))
        pool = tmp_path / "s.pool"
        run(["sample", "--inst", inst, "--ckpt", ckpt, "--steps", "5",
             "--count", "3", "--out", pool])
        capsys.readouterr()
        assert run(["eval", "--inst", inst, "--pool", pool, "--oracle"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["sample_count"] == 3
        assert payload["oracle_objective"] is not None

    def test_missing_ckpt_exits_5(self, dataset, tmp_path, capsys):
        inst = next(Path(dataset).glob("*.ip"))
        assert run(["sample", "--inst", inst, "--ckpt", tmp_path / "nope",
                    "--out", tmp_path / "s.pool"]) == 5
        assert "error:io" in capsys.readouterr().err


class TestReports:
    def test_ablate_outputs(self, dataset, ckpt, tmp_path):
        out = tmp_path / "ablation"
        assert run(["ablate", "--data", dataset, "--ckpt", ckpt, "--steps", "5",
                    "--s", "1.0", "--count", "2", "--out", out]) == 0
        assert (out / "ablation.csv").exists()
        assert (out / "ablation.png").exists()
        assert (out / "manifest.json").exists()

    def test_partial_outputs(self, dataset, ckpt, tmp_path):
        out = tmp_path / "partial"
        assert run(["partial", "--data", dataset, "--ckpt", ckpt, "--steps", "5",
                    "--proportion", "0.2", "--count", "2", "--out", out]) == 0
        assert (out / "partial.csv").exists()

    def test_hist_outputs(self, dataset, ckpt, tmp_path):
        inst = next(Path(dataset).glob("*.ip"))
        out = tmp_path / "hist"
        assert run(["hist", "--inst", inst, "--ckpt", ckpt, "--steps", "5",
                    "--count", "8", "--out", out]) == 0
        assert (out / "histogram.csv").exists()
        assert (out / "histogram.png").exists()
