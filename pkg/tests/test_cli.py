import numpy as np
import pytest
from click.testing import CliRunner

from sketchguide.cli import main
from sketchguide.imaging import GrayImage, save_png


@pytest.fixture
def runner():
    return CliRunner()


def write_sketch(path, seed=0, size=64):
    rng = np.random.default_rng(seed)
    img = GrayImage(rng.integers(0, 256, size=(size, size)).astype(np.float64) / 255.0)
    save_png(img, path)
    return path


def fast_flags(out):
    # small geometry keeps the suite quick; still runs the whole pipeline
    return ["--out", str(out), "--steps", "2", "--iterations", "1"]


@pytest.fixture
def small_config(tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text(
        '[backend]\nworking_resolution = 64\n'
        '[pipeline]\nnum_candidates = 4\nsteps = 2\n'
    )
    return cfg


class TestGenerate:
    def test_single_input_writes_candidates_and_guidance(self, runner, tmp_path, small_config):
        sketch = write_sketch(tmp_path / "in.png")
        out = tmp_path / "out"
        result = runner.invoke(main, [
            "generate", "--config", str(small_config), "--prompt", "a cat",
            *fast_flags(out), str(sketch),
        ])
        assert result.exit_code == 0, result.output
        for i in range(4):
            assert (out / f"candidate_{i}.png").exists()
            assert (out / f"guidance_{i}.png").exists()
        assert "action=generate" in result.output
        assert "denoise_ms=" in result.output

    def test_fixed_seed_outputs_byte_identical(self, runner, tmp_path, small_config):
        sketch = write_sketch(tmp_path / "in.png")
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            result = runner.invoke(main, [
                "generate", "--config", str(small_config), "--seed", "9",
                *fast_flags(out), str(sketch),
            ])
            assert result.exit_code == 0, result.output
            outs.append(out)
        for i in range(4):
            for kind in ("candidate", "guidance"):
                a = (outs[0] / f"{kind}_{i}.png").read_bytes()
                b = (outs[1] / f"{kind}_{i}.png").read_bytes()
                assert a == b

    def test_missing_input_fails_without_outputs(self, runner, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(main, [
            "generate", *fast_flags(out), str(tmp_path / "absent.png"),
        ])
        assert result.exit_code != 0
        assert not out.exists()

    def test_batch_mode_skips_identical_second_input(self, runner, tmp_path, small_config):
        first = write_sketch(tmp_path / "a.png", seed=1)
        second = write_sketch(tmp_path / "b.png", seed=1)  # identical content
        out = tmp_path / "out"
        result = runner.invoke(main, [
            "generate", "--config", str(small_config), "--tau", "0.0",
            *fast_flags(out), str(first), str(second),
        ])
        assert result.exit_code == 0, result.output
        lines = [l for l in result.output.splitlines() if "action=" in l]
        assert "action=generate" in lines[0]
        assert "action=skip" in lines[1]
        assert "similarity=1.000000" in lines[1]
        assert "probability=1.000000" in lines[1]
        assert (out / "round_001" / "candidate_0.png").exists()
        assert not (out / "round_002").exists()

    def test_unknown_style_rejected(self, runner, tmp_path, small_config):
        sketch = write_sketch(tmp_path / "in.png")
        result = runner.invoke(main, [
            "generate", "--config", str(small_config), "--style", "cubist",
            *fast_flags(tmp_path / "out"), str(sketch),
        ])
        assert result.exit_code != 0

    def test_env_var_supplies_config(self, runner, tmp_path, small_config, monkeypatch):
        monkeypatch.setenv("GUIDANCE_CONFIG", str(small_config))
        sketch = write_sketch(tmp_path / "in.png")
        out = tmp_path / "out"
        result = runner.invoke(main, ["generate", *fast_flags(out), str(sketch)])
        assert result.exit_code == 0, result.output
        # 64x64 resolution came from the env-supplied config
        from sketchguide.imaging import load_rgb_png

        assert load_rgb_png(out / "candidate_0.png").width == 64
