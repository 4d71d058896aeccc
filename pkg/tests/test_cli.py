import csv
import json
from pathlib import Path

import pytest

from poregrad.cli import main

SCENE_CFG = """\
# single large-pored particle, noiseless for stable assertions
particle_count = 1
particle_diameter_range = 100 150
pore_lognormal = 25.0 0.3 10.0
pores_per_particle_range = 2 5
noise = 0
"""

ATTADJ_CFG = "residual_threshold = 0.03\n"


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """One CLI run of synth -> cutout -> segment shared by the assertions."""
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "scene.cfg"
    cfg.write_text(SCENE_CFG)
    params = root / "attadj.cfg"
    params.write_text(ATTADJ_CFG)

    assert main(["--seed", "3", "synth", "--config", str(cfg),
                 "--out", str(root / "scenes"), "--count", "2"]) == 0
    assert main(["cutout", "--in", str(root / "scenes" / "scene_0.png"),
                 "--truth", str(root / "scenes" / "scene_0_pores.png"),
                 "--out", str(root / "cuts")]) == 0
    assert main(["segment", "--model", "attadj", "--params", str(params),
                 "--in", str(root / "cuts"), "--out", str(root / "pred")]) == 0
    return root


class TestSynth:
    def test_scene_files_written(self, workdir):
        scenes = workdir / "scenes"
        for k in range(2):
            assert (scenes / f"scene_{k}.png").exists()
            assert (scenes / f"scene_{k}_particles.png").exists()
            assert (scenes / f"scene_{k}_pores.png").exists()
            geom = json.loads((scenes / f"scene_{k}.json").read_text())
            assert geom["config"]["particle_count"] == 1
            assert len(geom["particles"]) == 1


class TestCutout:
    def test_cutout_files_and_index(self, workdir):
        cuts = workdir / "cuts"
        assert (cuts / "scene_0_p0.png").exists()
        assert (cuts / "scene_0_p0_mask.png").exists()
        assert (cuts / "scene_0_p0_truth.png").exists()
        idx = json.loads((cuts / "scene_0_cutouts.json").read_text())
        meta = idx["cutouts"]["scene_0_p0"]
        assert meta["scale"] > 0
        assert len(meta["source_bbox"]) == 4


class TestFit:
    def test_fit_report_written(self, workdir, tmp_path):
        out = tmp_path / "fit.json"
        prof = tmp_path / "profile.csv"
        assert main(["fit", "--in", str(workdir / "cuts" / "scene_0_p0.png"),
                     "--mask", str(workdir / "cuts" / "scene_0_p0_mask.png"),
                     "--out", str(out), "--dump-profile", str(prof)]) == 0
        fit = json.loads(out.read_text())
        assert fit["b"] >= 0.0
        assert fit["n_bins_used"] > 50
        rows = list(csv.DictReader(open(prof)))
        assert len(rows) == 95


class TestSegmentAndEval:
    def test_segment_outputs(self, workdir):
        pred = workdir / "pred"
        assert (pred / "scene_0_p0_pores.png").exists()
        res = json.loads((pred / "scene_0_p0_result.json").read_text())
        assert res["model"] == "attadj"
        assert res["iterations_run"] >= 1
        assert "wall_time" in res

    def test_eval_json_report(self, workdir, tmp_path):
        rep = tmp_path / "report.json"
        assert main(["eval", "--pred", str(workdir / "pred"),
                     "--truth", str(workdir / "cuts"), "--report", str(rep)]) == 0
        data = json.loads(rep.read_text())
        assert data["n_cutouts"] == 1
        assert data["f1"] > 0.8  # large pores, noiseless: segmentation succeeds

    def test_eval_csv_column_order(self, workdir, tmp_path):
        rep = tmp_path / "report.csv"
        assert main(["eval", "--pred", str(workdir / "pred"),
                     "--truth", str(workdir / "cuts"), "--report", str(rep)]) == 0
        header = open(rep).readline().strip().split(",")
        assert header == ["F1", "TNR", "FPR", "FNR", "TPR", "t_mean"]

    def test_eval_without_truth_fails_with_data_error(self, workdir, tmp_path):
        bare = tmp_path / "no_truth"
        bare.mkdir()
        assert main(["eval", "--pred", str(workdir / "pred"),
                     "--truth", str(bare), "--report", str(tmp_path / "r.json")]) == 3


class TestCalibrationCommands:
    def test_gridsearch(self, workdir, tmp_path):
        out = tmp_path / "gs.json"
        assert main(["gridsearch", "--in", str(workdir / "cuts"),
                     "--sigmas", "4,8", "--offsets", "0.02,0.05",
                     "--out", str(out)]) == 0
        data = json.loads(out.read_text())
        assert data["sigma"] in (4.0, 8.0)
        assert len(data["f1_surface"]) == 2

    def test_calibrate(self, workdir, tmp_path):
        out = tmp_path / "cal.json"
        assert main(["calibrate", "--in", str(workdir / "cuts"),
                     "--thresholds", "0.03,0.05", "--out", str(out)]) == 0
        data = json.loads(out.read_text())
        assert data["residual_threshold"] in (0.03, 0.05)


class TestBench:
    def test_bench_csv(self, workdir, tmp_path):
        out = tmp_path / "bench.csv"
        params = tmp_path / "local.cfg"
        params.write_text("sigma = 4\nt_offset = 0.02\n")
        assert main(["bench", "--model", "local", "--params", str(params),
                     "--in", str(workdir / "cuts"),
                     "--sizes", "1,2", "--repeats", "2", "--out", str(out)]) == 0
        rows = list(csv.DictReader(open(out)))
        assert [int(r["n"]) for r in rows] == [1, 2]
        assert all(float(r["per_particle"]) > 0 for r in rows)


class TestErrorContracts:
    def test_missing_input_is_data_error(self, tmp_path):
        assert main(["cutout", "--in", str(tmp_path / "nope.png"),
                     "--out", str(tmp_path / "o")]) in (3, 4)

    def test_bad_params_file_is_parameter_error(self, workdir, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("no equals sign here\n")
        assert main(["segment", "--model", "local", "--params", str(bad),
                     "--in", str(workdir / "cuts"),
                     "--out", str(tmp_path / "o")]) == 2

    def test_missing_required_params_is_parameter_error(self, workdir, tmp_path):
        assert main(["segment", "--model", "attadj",
                     "--in", str(workdir / "cuts"),
                     "--out", str(tmp_path / "o")]) == 2

    def test_empty_cutout_dir_is_data_error(self, workdir, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        assert main(["segment", "--model", "attadj", "--params",
                     str(workdir / "attadj.cfg"),
                     "--in", str(empty), "--out", str(tmp_path / "o")]) == 3


class TestPlotsCommand:
    def test_pipeline_then_plots(self, tmp_path):
        out = tmp_path / "pipe"
        cfg = tmp_path / "scene.cfg"
        cfg.write_text(SCENE_CFG + "noise = 20000\n")
        assert main(["--seed", "5", "pipeline", "--out", str(out),
                     "--scenes", "4", "--config", str(cfg)]) == 0
        plots_dir = tmp_path / "plots"
        assert main(["plots", "--reports",
                     str(out / "calibration.json"), str(out / "report_attadj.json"),
                     "--out", str(plots_dir)]) == 0
        assert (plots_dir / "f1_surface.csv").exists()
        assert (plots_dir / "f1_surface.png").exists()
        assert (plots_dir / "report_attadj_radii.csv").exists()
        assert (plots_dir / "report_attadj_radii.png").exists()
