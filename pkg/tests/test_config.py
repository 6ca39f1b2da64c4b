import pytest

from sketchguide.config import ServiceConfig, load_config, override
from sketchguide.scheduler import CfgMode


GOOD = """
[service]
listen = "127.0.0.1:9999"
data_dir = "/tmp/gd"

[backend]
backend = "synthetic"
backend_seed = 3
working_resolution = 256
styles = ["anime", "realistic"]

[gate]
tau = 0.9
seed = 11

[pipeline]
num_candidates = 2
steps = 3
cfg_mode = "full"
guidance_scale = 1.4
strength = 0.7

[filter]
sigma_s = 6.0
sigma_r = 0.2
iterations = 2
"""


def write(tmp_path, text):
    p = tmp_path / "config.toml"
    p.write_text(text)
    return p


class TestLoadConfig:
    def test_full_file(self, tmp_path):
        cfg = load_config(write(tmp_path, GOOD))
        assert cfg.listen == "127.0.0.1:9999"
        assert cfg.backend_seed == 3
        assert cfg.tau == 0.9
        assert cfg.num_candidates == 2
        assert cfg.pipeline_config().guidance.cfg_mode is CfgMode.FULL
        assert cfg.filter_params().iterations == 2
        assert cfg.session_config().width == 256

    def test_defaults(self):
        cfg = ServiceConfig()
        assert cfg.tau == 0.95
        assert cfg.num_candidates == 4
        assert cfg.pipeline_config().steps.steps == (1000, 750, 500, 250)

    def test_unknown_table_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="unknown config table"):
            load_config(write(tmp_path, "[nope]\nx = 1\n"))

    def test_unknown_key_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="unknown key"):
            load_config(write(tmp_path, "[gate]\ntau = 0.5\nbogus = 1\n"))

    def test_invalid_values_rejected(self):
        with pytest.raises(ValueError):
            ServiceConfig(tau=1.0)
        with pytest.raises(ValueError):
            ServiceConfig(backend="remote")  # missing remote_addr
        with pytest.raises(ValueError):
            ServiceConfig(cfg_mode="sideways")
        with pytest.raises(ValueError):
            ServiceConfig(strength=0.0)
        with pytest.raises(ValueError):
            ServiceConfig(working_resolution=100)

    def test_override_beats_file(self, tmp_path):
        cfg = load_config(write(tmp_path, GOOD))
        out = override(cfg, tau=0.5, seed=None)
        assert out.tau == 0.5
        assert out.seed == 11  # None = not overridden

    def test_override_rejects_unknown(self):
        with pytest.raises(ValueError):
            override(ServiceConfig(), nonsense=1)


class TestBuilders:
    def test_synthetic_backend(self):
        backend = ServiceConfig(backend_seed=4).build_backend()
        assert backend.seed == 4
        assert backend.descriptor.working_resolution == 512

    def test_schedule(self):
        schedule = ServiceConfig(total_steps=100).build_schedule()
        assert schedule.total_steps == 100

    def test_beta_range_feeds_schedule(self, tmp_path):
        cfg = load_config(write(tmp_path, (
            "[pipeline]\ntotal_steps = 10\nbeta_start = 0.01\nbeta_end = 0.02\n"
        )))
        schedule = cfg.build_schedule()
        assert schedule.alpha_bar[1] == 1.0 - 0.01

    def test_remote_client_knobs_accepted(self, tmp_path):
        cfg = load_config(write(tmp_path, (
            '[backend]\nbackend = "remote"\nremote_addr = "127.0.0.1:9"\n'
            "remote_timeout = 5.0\nremote_in_flight = 2\n"
        )))
        assert cfg.remote_timeout == 5.0
        assert cfg.remote_in_flight == 2
