"""Experiment harnesses and their delimited/figure outputs."""

import csv

import numpy as np
import pytest
import torch

from ipdiff.cisp import CISPConfig, train_cisp
from ipdiff.dataset import InstanceRecord
from ipdiff.diffusion import DiffusionConfig, train_joint
from ipdiff.experiments import (
    ABLATION_VARIANTS,
    export_histogram,
    oracle_optima,
    run_ablation,
    run_partial_complete,
    write_ablation_csv,
    write_curve_csv,
    write_histogram_csv,
)
from ipdiff.guidance import GuidanceConfig
from ipdiff.oracle import solve_exact
from ipdiff.plots import render_ablation_bars, render_histogram, render_loss_curve

from conftest import tiny_instance


@pytest.fixture(scope="module")
def trained():
    torch.manual_seed(0)
    records = []
    for seed in range(5):
        inst = tiny_instance(seed, "indep_set")
        records.append(InstanceRecord(inst, solve_exact(inst, pool_cap=5).solutions))
    cisp, _ = train_cisp(records, CISPConfig(dim=16, epochs=5, batch_size=5, seed=0))
    model, _ = train_joint(records, cisp, DiffusionConfig(
        dim=16, T=20, epochs=5, batch_size=5, lam=0.0, seed=0))
    return records, cisp, model


BASE = GuidanceConfig(variant="ddim", steps=10, s=1.0, gamma=0.3, eta=0.0, seed=0)


class TestOracleOptima:
    def test_values(self):
        insts = [tiny_instance(s, "indep_set") for s in range(3)]
        optima = oracle_optima(insts)
        for inst, opt in zip(insts, optima):
            assert opt == solve_exact(inst, pool_cap=1).best[1]


class TestRunAblation:
    def test_rows_and_variants(self, trained):
        records, cisp, model = trained
        insts = [r.instance for r in records[:2]]
        rows = run_ablation(insts, cisp, model, BASE, count=4)
        assert [r["variant"] for r in rows] == list(ABLATION_VARIANTS)
        no_cisp_row = rows[-1]
        assert no_cisp_row["absent"] is True
        for row in rows[:-1]:
            assert row["sample_count"] == 8
            assert 0.0 <= row["feasible_ratio"] <= 1.0

    def test_variant_configs(self, trained):
        records, cisp, model = trained
        insts = [records[0].instance]
        rows = run_ablation(insts, cisp, model, BASE, count=2)
        by_name = {r["variant"]: r for r in rows if not r["absent"]}
        assert by_name["unguided"]["s"] == 0.0
        assert by_name["constraint_guided"]["gamma"] == 0.0
        assert by_name["objective_guided"]["gamma"] == 1.0
        assert by_name["ip_guided"]["s"] == BASE.s

    def test_no_cisp_column_when_supplied(self, trained):
        records, cisp, model = trained
        insts = [records[0].instance]
        rows = run_ablation(insts, cisp, model, BASE, count=2, no_cisp=(cisp, model))
        assert rows[-1]["absent"] is False
        assert rows[-1]["sample_count"] == 2


class TestPartialComplete:
    def test_result_structure(self, trained):
        records, cisp, model = trained
        insts = [r.instance for r in records[:2]]
        res = run_partial_complete(insts, cisp, model, 0.2, BASE, count=3)
        assert res.proportion == 0.2
        assert res.direct["sample_count"] == 6
        assert res.completed["sample_count"] == 6
        # oracle completion can only help feasibility
        assert res.completed["feasible_ratio"] >= res.direct["feasible_ratio"]

    def test_bad_proportion(self, trained):
        records, cisp, model = trained
        with pytest.raises(ValueError, match="proportion"):
            run_partial_complete([records[0].instance], cisp, model, 0.0, BASE)

    def test_full_fix_keeps_sample(self, trained):
        records, cisp, model = trained
        res = run_partial_complete([records[0].instance], cisp, model, 1.0, BASE, count=3)
        assert res.completed["sample_count"] == 3


class TestExportHistogram:
    def test_objectives_only_feasible(self, trained):
        records, cisp, model = trained
        inst = records[0].instance
        objectives, opt = export_histogram(inst, cisp, model, BASE, count=6)
        assert opt == solve_exact(inst, pool_cap=1).best[1]
        assert all(np.isfinite(o) for o in objectives)
        assert len(objectives) <= 6


class TestDelimitedOutput:
    def test_ablation_csv(self, tmp_path, trained):
        records, cisp, model = trained
        rows = run_ablation([records[0].instance], cisp, model, BASE, count=2)
        path = tmp_path / "ablation.csv"
        write_ablation_csv(rows, path)
        with path.open() as fh:
            parsed = list(csv.DictReader(fh))
        assert len(parsed) == len(ABLATION_VARIANTS)
        assert parsed[0]["variant"] == "unguided"

    def test_histogram_csv(self, tmp_path):
        path = tmp_path / "hist.csv"
        write_histogram_csv([1.0, 2.0], 1.5, path)
        with path.open() as fh:
            parsed = list(csv.DictReader(fh))
        assert len(parsed) == 3
        assert parsed[-1]["is_oracle_optimum"] == "1"

    def test_curve_csv_dict_rows(self, tmp_path):
        path = tmp_path / "curve.csv"
        write_curve_csv([{"total": 1.0, "mse": 0.5}, {"total": 0.8, "mse": 0.4}], path)
        with path.open() as fh:
            parsed = list(csv.DictReader(fh))
        assert parsed[0]["total"] == "1.0"

    def test_curve_csv_scalar(self, tmp_path):
        path = tmp_path / "curve.csv"
        write_curve_csv([3.0, 2.0, 1.0], path)
        with path.open() as fh:
            parsed = list(csv.DictReader(fh))
        assert len(parsed) == 3


class TestFigures:
    def test_histogram_png(self, tmp_path):
        path = tmp_path / "h.png"
        render_histogram([1.0, 2.0, 2.5], path, oracle_objective=1.0)
        assert path.stat().st_size > 0

    def test_histogram_png_empty(self, tmp_path):
        path = tmp_path / "h.png"
        render_histogram([], path)
        assert path.stat().st_size > 0

    def test_loss_curve_png(self, tmp_path):
        path = tmp_path / "c.png"
        render_loss_curve([{"total": 1.0}, {"total": 0.5}], path)
        assert path.stat().st_size > 0

    def test_ablation_bars_png_skips_absent(self, tmp_path):
        path = tmp_path / "a.png"
        rows = [
            {"variant": "unguided", "feasible_ratio": 0.1},
            {"variant": "ip_guided_no_cisp", "absent": True},
        ]
        render_ablation_bars(rows, path)
        assert path.stat().st_size > 0
