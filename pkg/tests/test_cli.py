"""
Tests for the trimorph command line: exit codes, JSON reports and output files.
"""

import json

import numpy as np
import pytest

from main import EXIT_INVALID, EXIT_OK, run
from src.assets.mesh_io import write_obj
from src.assets.rng import RngStream
from src.assets.tensor_io import load_array, save_array
from src.geometry.mesh import icosphere


def _report(capsys) -> dict:
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


@pytest.fixture
def render_config(temp_dir, small_model):
    path = temp_dir / "render.json"
    job = {
        "model": small_model.model_dump(),
        "camera": {"width": 8, "height": 8},
        "quadrature": {"n_samples": 8},
    }
    path.write_text(json.dumps(job))
    return path


class TestParsing:
    """Tests for argument handling and exit codes."""

    def test_version(self, capsys):
        assert run(["--version"]) == EXIT_OK
        assert "TriMorph" in capsys.readouterr().out

    def test_missing_subcommand(self):
        assert run([]) == EXIT_INVALID

    def test_unknown_flag(self):
        assert run(["estimate-jnorm", "--bogus"]) == EXIT_INVALID

    def test_unknown_subcommand(self):
        assert run(["teleport"]) == EXIT_INVALID

    def test_threads_must_be_positive(self, temp_dir):
        assert run(["estimate-jnorm", "--threads", "0", "--out", str(temp_dir)]) == EXIT_INVALID

    def test_unknown_config_key(self, temp_dir):
        path = temp_dir / "bad.json"
        path.write_text(json.dumps({"camera": {"width": 8}, "colour": "red"}))
        assert run(["render", "-c", str(path), "--out", str(temp_dir / "out")]) == EXIT_INVALID

    def test_missing_config_file(self, temp_dir):
        assert run(["train", "-c", str(temp_dir / "nope.json"), "--out", str(temp_dir)]) == EXIT_INVALID

    def test_malformed_config_file(self, temp_dir):
        path = temp_dir / "broken.json"
        path.write_text("{not json")
        assert run(["train", "-c", str(path), "--out", str(temp_dir)]) == EXIT_INVALID


class TestEstimateCommand:
    """Tests for estimate-jnorm."""

    def test_report_fields(self, capsys):
        assert run(["estimate-jnorm", "--probes", "2000", "--seed", "1"]) == EXIT_OK
        report = _report(capsys)
        assert report["dim"] == 8
        assert report["seed"] == 1
        assert report["hutchinson_relative_error"] < 0.2
        assert report["finite_difference_relative_error"] < 0.2
        assert report["hutchinson_variance"] > 0.0
        assert {"exact", "eq22", "eq23"} <= set(report)
        assert report["eq22"] == report["hutchinson"]
        assert report["eq23"] == report["finite_difference"]

    def test_seed_after_or_before_subcommand(self, capsys):
        run(["--seed", "4", "estimate-jnorm", "--probes", "50"])
        before = _report(capsys)
        run(["estimate-jnorm", "--probes", "50", "--seed", "4"])
        after = _report(capsys)
        assert before == after

    def test_mlp_map(self, capsys):
        assert run(["estimate-jnorm", "--map", "mlp", "--dim", "4", "--probes", "500"]) == EXIT_OK
        report = _report(capsys)
        assert report["map"] == "mlp"
        assert report["exact"] > 0.0

    @pytest.mark.slow
    def test_converges_with_many_draws(self, capsys):
        assert run(["estimate-jnorm", "--dim", "8", "--probes", "100000", "--seed", "7"]) == EXIT_OK
        report = _report(capsys)
        assert abs(report["eq22"] - report["exact"]) / report["exact"] < 0.02
        assert report["finite_difference_relative_error"] < 0.02


class TestDeformCommand:
    """Tests for deform."""

    def test_identity_pair(self, temp_dir, capsys):
        sphere = icosphere(2)
        write_obj(temp_dir / "obs.obj", sphere)
        write_obj(temp_dir / "canon.obj", sphere)
        points = RngStream(0).normal((50, 3))[0].astype(np.float32)
        save_array(temp_dir / "points.ntc", points)
        code = run(
            [
                "deform",
                "--obs", str(temp_dir / "obs.obj"),
                "--canon", str(temp_dir / "canon.obj"),
                "--points", str(temp_dir / "points.ntc"),
                "--out", str(temp_dir / "out"),
            ]
        )
        assert code == EXIT_OK
        report = _report(capsys)
        assert report["identity"] is True
        assert report["points"] == 50
        np.testing.assert_allclose(load_array(temp_dir / "out" / "points.ntc"), points, atol=1e-6)

    def test_topology_mismatch(self, temp_dir):
        write_obj(temp_dir / "obs.obj", icosphere(2))
        write_obj(temp_dir / "canon.obj", icosphere(1))
        save_array(temp_dir / "points.ntc", np.zeros((2, 3)))
        code = run(
            [
                "deform",
                "--obs", str(temp_dir / "obs.obj"),
                "--canon", str(temp_dir / "canon.obj"),
                "--points", str(temp_dir / "points.ntc"),
                "--out", str(temp_dir / "out"),
            ]
        )
        assert code == EXIT_INVALID


class TestRenderCommand:
    """Tests for render."""

    def test_writes_outputs(self, render_config, temp_dir, capsys):
        assert run(["render", "-c", str(render_config), "--out", str(temp_dir / "out")]) == EXIT_OK
        report = _report(capsys)
        assert report["width"] == 8
        assert set(report["files"]) >= {"features.ppm", "features.ntc", "depth.ntc"}

    def test_same_seed_same_bytes(self, render_config, temp_dir):
        run(["render", "-c", str(render_config), "--seed", "7", "--out", str(temp_dir / "a")])
        run(["render", "-c", str(render_config), "--seed", "7", "--threads", "3", "--out", str(temp_dir / "b")])
        a = (temp_dir / "a" / "features.ntc").read_bytes()
        b = (temp_dir / "b" / "features.ntc").read_bytes()
        assert a == b

    def test_different_seed_different_sample(self, render_config, temp_dir):
        run(["render", "-c", str(render_config), "--seed", "1", "--out", str(temp_dir / "a")])
        run(["render", "-c", str(render_config), "--seed", "2", "--out", str(temp_dir / "b")])
        assert (temp_dir / "a" / "features.ntc").read_bytes() != (temp_dir / "b" / "features.ntc").read_bytes()

    def test_sweep_needs_embedding(self, temp_dir, small_model):
        path = temp_dir / "sweep.json"
        path.write_text(
            json.dumps({"model": small_model.model_dump(), "camera": {"width": 8, "height": 8}, "alphas": [0, 1]})
        )
        assert run(["render", "-c", str(path), "--out", str(temp_dir / "out")]) == EXIT_INVALID

    def test_alpha_sweep(self, temp_dir, small_model, capsys):
        save_array(temp_dir / "r.ntc", np.ones(small_model.embed_dim, dtype=np.float32))
        path = temp_dir / "sweep.json"
        job = {
            "model": small_model.model_dump(),
            "camera": {"width": 8, "height": 8},
            "quadrature": {"n_samples": 8},
            "embedding": str(temp_dir / "r.ntc"),
            "alphas": [0.0, 0.5, 1.0],
        }
        path.write_text(json.dumps(job))
        assert run(["render", "-c", str(path), "--out", str(temp_dir / "out")]) == EXIT_OK
        assert "alpha_sweep.ppm" in _report(capsys)["files"]


class TestAnalyzeCommand:
    """Tests for embed-analyze."""

    def test_flags_noise_dominated_images(self, temp_dir, capsys):
        save_array(temp_dir / "images.ntc", np.array([[1.0, 0.1], [0.1, 1.0]], dtype=np.float32))
        save_array(temp_dir / "main.ntc", np.array([[1.0, 0.0]], dtype=np.float32))
        save_array(temp_dir / "noise.ntc", np.array([[0.0, 1.0]], dtype=np.float32))
        code = run(
            [
                "embed-analyze",
                "--images", str(temp_dir / "images.ntc"),
                "--main", str(temp_dir / "main.ntc"),
                "--noise", str(temp_dir / "noise.ntc"),
                "--out", str(temp_dir / "out"),
            ]
        )
        assert code == EXIT_OK
        assert _report(capsys)["flagged_count"] == 1
        assert (temp_dir / "out" / "analysis.json").exists()
