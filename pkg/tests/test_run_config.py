import os

import pytest

from exceptions import ConfigError
from run_config import RunConfig, load_config


def test_defaults_are_valid():
    cfg = load_config()
    assert cfg.alpha == 5.0 and cfg.t_th == 5000.0
    assert cfg.node_count == 40 and cfg.max_lag == 5 and cfg.top_k == 20
    assert cfg.alpha_grid == [1, 3, 5, 7, 10, 15]
    assert cfg.to_dict()["format"] == "csv"


def test_file_then_flags_precedence(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("alpha: 7\nnode_count: 30\nformat: json\n")
    cfg = load_config(str(path), {"node-count": 25, "damping": None})
    assert cfg.alpha == 7.0
    assert cfg.node_count == 25
    assert cfg.format == "json"
    assert cfg.damping == 0.85


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("alpah: 7\n")
    with pytest.raises(ConfigError, match="alpah"):
        load_config(str(path))


@pytest.mark.parametrize("overrides", [
    {"damping": 1.5},
    {"alpha_fraction": 1.0},
    {"node_count": 1},
    {"format": "xml"},
    {"kernel_kind": "gaussian"},
    {"significance": 0.0},
    {"node_count": 3.5},
    {"alpha_grid": []},
])
def test_out_of_range_values(overrides):
    with pytest.raises(ConfigError):
        load_config(overrides=overrides)


def test_bad_config_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "absent.yaml"))
    broken = tmp_path / "broken.yaml"
    broken.write_text("alpha: [1, 2\n")
    with pytest.raises(ConfigError):
        load_config(str(broken))
    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(str(listing))


def test_bundled_config_matches_defaults():
    path = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "config.yaml")
    assert load_config(path).to_dict() == RunConfig().to_dict()
