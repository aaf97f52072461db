import json
import math

import pytest

from dfvqm.errors import CorrelationError, DfvqmError, FormatError
from dfvqm.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    correlate,
    read_labeled_values,
    run_experiment_grid,
    write_scores_csv,
)
from dfvqm.synth import make_scene_clip, make_static_clip
from dfvqm.video_io import write_y4m

from conftest import noise_sequence, subsequence


def pearson_by_hand(xs, ys):
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    num = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    den = math.sqrt(sum((x - mx) ** 2 for x in xs) * sum((y - my) ** 2 for y in ys))
    return num / den


def ranks(values):
    order = sorted(range(len(values)), key=lambda i: values[i])
    out = [0.0] * len(values)
    for rank, i in enumerate(order, start=1):
        out[i] = float(rank)
    return out


class TestCorrelate:
    def test_identical_is_one(self):
        pairs = [(f"v{i}", 0.1 * i) for i in range(5)]
        result = correlate(pairs, pairs)
        assert result["pearson"] == pytest.approx(1.0, abs=1e-12)
        assert result["spearman"] == pytest.approx(1.0, abs=1e-12)
        assert result["n"] == 5

    def test_negated_is_minus_one(self):
        scores = [(f"v{i}", 0.1 * i) for i in range(5)]
        mos = [(label, -v) for label, v in scores]
        result = correlate(scores, mos)
        assert result["pearson"] == pytest.approx(-1.0, abs=1e-12)
        assert result["spearman"] == pytest.approx(-1.0, abs=1e-12)

    def test_five_point_hand_oracle(self):
        # oracle computed from the defining sums, not a statistics library
        xs = [0.21, 0.55, 0.13, 0.94, 0.47]
        ys = [1.5, 2.5, 1.0, 4.0, 3.6]
        labels = ["a", "b", "c", "d", "e"]
        result = correlate(list(zip(labels, xs)), list(zip(labels, ys)))
        assert result["pearson"] == pytest.approx(pearson_by_hand(xs, ys), abs=1e-9)
        expected_rho = pearson_by_hand(ranks(xs), ranks(ys))
        assert result["spearman"] == pytest.approx(expected_rho, abs=1e-9)

    def test_join_is_by_label(self):
        scores = [("a", 1.0), ("b", 2.0), ("c", 3.0), ("zzz", 9.9)]
        mos = [("c", 30.0), ("a", 10.0), ("b", 20.0), ("unrelated", 0.0)]
        result = correlate(scores, mos)
        assert result["n"] == 3
        assert result["pearson"] == pytest.approx(1.0, abs=1e-12)

    def test_too_few_shared_labels(self):
        with pytest.raises(CorrelationError, match="at least 3"):
            correlate([("a", 1.0), ("b", 2.0)], [("a", 1.0), ("b", 2.0)])

    def test_zero_variance_reported_not_raised(self):
        scores = [("a", 0.5), ("b", 0.5), ("c", 0.5)]
        mos = [("a", 1.0), ("b", 2.0), ("c", 3.0)]
        result = correlate(scores, mos)
        assert result["pearson"] is None
        assert "zero variance" in result["reason"]


class TestReadLabeledValues:
    def test_two_column_with_header(self, tmp_path):
        path = tmp_path / "mos.csv"
        path.write_text("label,score\nclip_a,3.5\nclip_b,4.25\n")
        assert read_labeled_values(path) == [("clip_a", 3.5), ("clip_b", 4.25)]

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(FormatError, match="empty"):
            read_labeled_values(path)

    def test_no_numeric_rows_rejected(self, tmp_path):
        path = tmp_path / "junk.csv"
        path.write_text("label,score\nfoo,bar\n")
        with pytest.raises(FormatError, match="no \\(label, value\\)"):
            read_labeled_values(path)


class TestExperimentConfig:
    def test_from_dict_round_trip(self):
        cfg = ExperimentConfig.from_dict({
            "reference_videos": ["a.y4m", "b.y4m"],
            "cases": ["2.1", "2.4"],
            "possibilities": [1, 3],
            "scenarios": ["2", "3b"],
            "seed": 7,
            "repeats": 2,
            "strategy": "adjacent_average",
        })
        assert cfg.reference_videos == ("a.y4m", "b.y4m")
        assert cfg.cases == ("2.1", "2.4")
        assert cfg.possibilities == (1, 3)
        assert cfg.scenarios == ("2", "3b")
        assert cfg.repeats == 2
        assert cfg.strategy.value == "adjacent_average"

    def test_empty_video_list_rejected(self):
        with pytest.raises(DfvqmError, match="at least one"):
            ExperimentConfig(reference_videos=())

    @pytest.mark.parametrize("bad", [
        {"scenarios": ["4"]},
        {"cases": ["9.9"]},
        {"possibilities": [5]},
        {"repeats": 0},
    ])
    def test_invalid_fields_rejected(self, bad):
        with pytest.raises(DfvqmError):
            ExperimentConfig(reference_videos=("a.y4m",), **bad)


class TestGrid:
    @pytest.fixture(scope="class")
    def static_rows(self):
        video = make_static_clip(32, 32, 120)
        cfg = ExperimentConfig(
            reference_videos=("static.y4m",),
            cases=("2.1",),
            possibilities=(1, 2),
            scenarios=("2", "3b"),
            seed=5,
        )
        return run_experiment_grid(cfg, videos=[video]), cfg

    def test_row_per_attempted_cell(self, static_rows):
        rows, cfg = static_rows
        assert len(rows) == 1 * 1 * 2 * 2  # videos x cases x possibilities x scenarios

    def test_static_possibility_mix(self, static_rows):
        # every frame pair is identical: possibility 1 always has sites,
        # possibility 2 never does
        rows, _ = static_rows
        by_poss = {(r.scenario, r.possibility): r for r in rows}
        for scenario in ("2", "3b"):
            assert by_poss[(scenario, 1)].status == "ok"
            skipped = by_poss[(scenario, 2)]
            assert skipped.status == "skipped"
            assert "no qualifying site" in skipped.reason
            assert skipped.dfvqmi is None

    def test_static_scenario2_scores_perfect(self, static_rows):
        rows, _ = static_rows
        row = next(r for r in rows if r.scenario == "2" and r.status == "ok")
        assert row.sd == pytest.approx(1.0, abs=1e-12)
        assert row.td == 0.0
        assert row.dfvqmi == pytest.approx(1.0, abs=1e-12)
        assert row.mean_ssim == pytest.approx(1.0, abs=1e-12)

    def test_bitplane_noise_lowers_score(self, static_rows):
        rows, _ = static_rows
        clean = next(r for r in rows if r.scenario == "2" and r.status == "ok")
        noisy = next(r for r in rows if r.scenario == "3b" and r.status == "ok")
        assert noisy.dfvqmi < clean.dfvqmi
        assert noisy.mean_psnr < clean.mean_psnr

    def test_csv_schema_and_reproducibility(self, tmp_path):
        video = make_scene_clip(32, 32, 120, seed=3, source_name="clip")
        cfg = ExperimentConfig(
            reference_videos=("clip.y4m",), cases=("2.1",), possibilities=(1, 4),
            scenarios=("2",), seed=11,
        )
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_scores_csv(run_experiment_grid(cfg, videos=[video]), a)
        write_scores_csv(run_experiment_grid(cfg, videos=[video]), b)
        assert a.read_bytes() == b.read_bytes()
        header = a.read_text().splitlines()[0]
        assert header == ",".join(CSV_COLUMNS)

    def test_threaded_run_matches_serial(self, tmp_path, monkeypatch):
        video = make_scene_clip(32, 32, 120, seed=4, source_name="clip")
        cfg = ExperimentConfig(
            reference_videos=("clip.y4m",), cases=("2.1", "2.3"), possibilities=(1,),
            scenarios=("2",), seed=2,
        )
        serial = run_experiment_grid(cfg, videos=[video])
        monkeypatch.setenv("VQ_THREADS", "4")
        threaded = run_experiment_grid(cfg, videos=[video])
        assert threaded == serial

    def test_experiment_csv_feeds_correlate(self, tmp_path):
        video = make_scene_clip(32, 32, 120, seed=6, source_name="clip")
        cfg = ExperimentConfig(
            reference_videos=("clip.y4m",), cases=("2.1", "2.3", "2.4"),
            possibilities=(1, 4), scenarios=("2",), seed=8,
        )
        scores_path = tmp_path / "scores.csv"
        write_scores_csv(run_experiment_grid(cfg, videos=[video]), scores_path)
        scores = read_labeled_values(scores_path)
        assert len(scores) >= 3
        assert all(label.startswith("clip/2/") for label, _ in scores)
        mos = [(label, 1.0 + 4.0 * v) for label, v in scores]
        assert correlate(scores, mos)["pearson"] == pytest.approx(1.0, abs=1e-9)


class TestRenderFigures:
    def test_writes_png_per_scenario_plus_summary(self, tmp_path):
        video = make_static_clip(32, 32, 120)
        cfg = ExperimentConfig(
            reference_videos=("static.y4m",), cases=("2.1",), possibilities=(1,),
            scenarios=("2", "3a"), seed=1,
        )
        rows = run_experiment_grid(cfg, videos=[video])
        from dfvqm.report import render_figures

        paths = render_figures(rows, tmp_path / "figs")
        assert len(paths) == 3  # one per scenario + summary
        for p in paths:
            assert p.exists() and p.stat().st_size > 0


@pytest.fixture()
def y4m_pair(tmp_path, rng):
    ref = noise_sequence(rng, 10, size=32)
    ref_path = tmp_path / "ref.y4m"
    with open(ref_path, "wb") as fh:
        write_y4m(ref, fh)
    dist = subsequence(ref, [0, 1, 2, 5, 6, 7, 8, 9])
    dist_path = tmp_path / "dist.y4m"
    with open(dist_path, "wb") as fh:
        write_y4m(dist, fh)
    return ref, ref_path, dist_path


class TestCli:
    def dispatch(self, *argv):
        from dfvqm.cli import cli_dispatch

        return cli_dispatch(list(argv))

    def test_analyze_identical_pair(self, y4m_pair, capsys):
        _, ref_path, _ = y4m_pair
        code = self.dispatch("analyze", "--ref", str(ref_path), "--dist", str(ref_path))
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["dfvqmi"] == pytest.approx(1.0, abs=1e-12)
        assert report["td"] == 0.0

    def test_align_reports_dropped_indices(self, y4m_pair, capsys):
        _, ref_path, dist_path = y4m_pair
        code = self.dispatch("align", "--ref", str(ref_path), "--dist", str(dist_path))
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["missing"] == [3, 4]
        assert payload["chunk_lengths"] == [2]
        assert payload["method"] == "exact_lis"

    def test_metrics_table(self, y4m_pair, capsys):
        _, ref_path, _ = y4m_pair
        code = self.dispatch("metrics", "--ref", str(ref_path), "--dist", str(ref_path))
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "frame,mse,psnr,ssim"
        assert len(lines) == 11
        first = lines[1].split(",")
        assert float(first[1]) == 0.0 and float(first[2]) == 100.0

    def test_longer_distorted_is_data_error(self, tmp_path, rng, capsys):
        short = noise_sequence(rng, 4, size=32)
        long = noise_sequence(rng, 6, size=32)
        a, b = tmp_path / "a.y4m", tmp_path / "b.y4m"
        with open(a, "wb") as fh:
            write_y4m(short, fh)
        with open(b, "wb") as fh:
            write_y4m(long, fh)
        code = self.dispatch("analyze", "--ref", str(a), "--dist", str(b))
        assert code == 2
        assert "m" in capsys.readouterr().err

    def test_missing_file_is_data_error(self, tmp_path):
        ghost = str(tmp_path / "ghost.y4m")
        assert self.dispatch("analyze", "--ref", ghost, "--dist", ghost) == 2

    def test_usage_errors_exit_1(self):
        assert self.dispatch("analyze") == 1  # missing required flags
        assert self.dispatch("frobnicate") == 1  # unknown subcommand

    def test_raw_input_without_geometry_is_data_error(self, tmp_path, capsys):
        raw = tmp_path / "clip.yuv"
        raw.write_bytes(bytes(32 * 32 * 3 // 2))
        code = self.dispatch("analyze", "--ref", str(raw), "--dist", str(raw))
        assert code == 2
        assert "--width" in capsys.readouterr().err

    def test_distort_round_trip_recovers_plan(self, tmp_path, capsys):
        video = make_scene_clip(32, 32, 120, seed=9)
        ref_path = tmp_path / "ref.y4m"
        with open(ref_path, "wb") as fh:
            write_y4m(video, fh)
        out_path = tmp_path / "out.y4m"
        plan_path = tmp_path / "plan.json"
        code = self.dispatch(
            "distort", "--ref", str(ref_path), "--out", str(out_path),
            "--case", "2.3", "--seed", "21", "--plan-out", str(plan_path),
        )
        assert code == 0
        plan = json.loads(plan_path.read_text())
        assert plan["case"] == "2.3"
        capsys.readouterr()
        code = self.dispatch("align", "--ref", str(ref_path), "--dist", str(out_path))
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        expected = sorted(
            i for start, length in plan["chunks"] for i in range(start, start + length)
        )
        assert payload["missing"] == expected

    def test_distort_without_action_is_data_error(self, y4m_pair, capsys):
        _, ref_path, _ = y4m_pair
        code = self.dispatch("distort", "--ref", str(ref_path), "--out", "x.y4m")
        assert code == 2
        assert "--plan, --case, or --bitplane" in capsys.readouterr().err

    def test_experiment_and_correlate_end_to_end(self, tmp_path, capsys):
        video = make_scene_clip(32, 32, 120, seed=12)
        clip_path = tmp_path / "clip.y4m"
        with open(clip_path, "wb") as fh:
            write_y4m(video, fh)
        config_path = tmp_path / "grid.json"
        config_path.write_text(json.dumps({
            "reference_videos": [str(clip_path)],
            "cases": ["2.1", "2.3"],
            "possibilities": [1, 4],
            "scenarios": ["2"],
            "seed": 3,
        }))
        scores_path = tmp_path / "scores.csv"
        figures_dir = tmp_path / "figs"
        code = self.dispatch(
            "experiment", "--config", str(config_path),
            "--output", str(scores_path), "--figures", str(figures_dir),
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "wrote 4 rows" in out
        assert scores_path.exists()
        assert list(figures_dir.glob("*.png"))

        mos_path = tmp_path / "mos.csv"
        rows = read_labeled_values(scores_path)
        mos_path.write_text("".join(f"{label},{5 * v}\n" for label, v in rows))
        code = self.dispatch(
            "correlate", "--scores", str(scores_path), "--mos", str(mos_path),
        )
        assert code == 0
        result = json.loads(capsys.readouterr().out)
        assert result["pearson"] == pytest.approx(1.0, abs=1e-9)

    def test_failed_output_leaves_no_partial_file(self, y4m_pair, tmp_path):
        _, ref_path, _ = y4m_pair
        target_dir = tmp_path / "does-not-exist"
        code = self.dispatch(
            "distort", "--ref", str(ref_path),
            "--out", str(target_dir / "out.y4m"), "--bitplane", "0",
        )
        assert code == 2
        assert not target_dir.exists()
