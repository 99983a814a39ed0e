"""
Cascade Lifecycle: Run Configuration
Defaults < YAML config file < command-line flags. Every key is range-checked;
unknown keys are rejected.
"""

import logging
import os
from dataclasses import asdict, dataclass, field, fields

import yaml

from exceptions import ConfigError

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")
KERNELS = ("power_law", "empirical")


@dataclass
class RunConfig:
    # detector
    alpha: float = 5.0
    infectiousness: float = 1.0
    kernel_kind: str = "power_law"
    kernel_s0: float = 5.0
    kernel_theta: float = 0.242
    delta_k: float = 300.0
    t_th: float = 5000.0
    tg_p: float = None
    g_p: float = None
    alpha_grid: list = field(default_factory=lambda: [1, 3, 5, 7, 10, 15])
    # windows and measures
    node_count: int = 40
    top_k: int = 20
    report_windows: int = 20
    damping: float = 0.85
    pagerank_tol: float = 1e-10
    max_iter: int = 1000
    alpha_fraction: float = 0.5
    # causality / forecast
    max_lag: int = 5
    significance: float = 0.05
    # corpus
    min_size: int = 300
    workers: int = 1
    seed: int = 0
    format: str = "csv"
    # paths
    event_log: str = None
    history_graph: str = None
    output_dir: str = "results"

    def validate(self):
        checks = [
            (self.alpha > 0, "alpha must be > 0"),
            (self.infectiousness > 0, "infectiousness must be > 0"),
            (self.kernel_kind in KERNELS, f"kernel_kind must be one of {KERNELS}"),
            (self.kernel_s0 > 0, "kernel_s0 must be > 0"),
            (self.kernel_theta > 0, "kernel_theta must be > 0"),
            (self.delta_k > 0, "delta_k must be > 0"),
            (self.t_th > 0, "t_th must be > 0"),
            (self.tg_p is None or self.tg_p > 0, "tg_p must be > 0"),
            (self.g_p is None or self.g_p > 0, "g_p must be > 0"),
            (len(self.alpha_grid) > 0 and all(a > 0 for a in self.alpha_grid),
             "alpha_grid must be a nonempty list of positive values"),
            (self.node_count >= 2, "node_count must be >= 2"),
            (self.top_k >= 1, "top_k must be >= 1"),
            (self.report_windows >= 1, "report_windows must be >= 1"),
            (0 < self.damping < 1, "damping must lie in (0, 1)"),
            (self.pagerank_tol > 0, "pagerank_tol must be > 0"),
            (self.max_iter >= 1, "max_iter must be >= 1"),
            (0 < self.alpha_fraction < 1, "alpha_fraction must lie in (0, 1)"),
            (self.max_lag >= 1, "max_lag must be >= 1"),
            (0 < self.significance < 1, "significance must lie in (0, 1)"),
            (self.min_size >= 1, "min_size must be >= 1"),
            (self.workers >= 1, "workers must be >= 1"),
            (self.format in FORMATS, f"format must be one of {FORMATS}"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return self

    def to_dict(self):
        return asdict(self)


def _coerce(cfg, key, value):
    """Cast a raw value to the type of the default it replaces."""
    default = getattr(RunConfig(), key)
    if value is None or default is None or isinstance(default, str):
        return value
    try:
        if isinstance(default, bool):
            return bool(value)
        if isinstance(default, int):
            if float(value) != int(float(value)):
                raise ValueError
            return int(float(value))
        if isinstance(default, float):
            return float(value)
        if isinstance(default, list):
            return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot use {value!r}") from None
    return value


def apply_overrides(cfg, overrides):
    known = {f.name for f in fields(RunConfig)}
    for key, value in overrides.items():
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(cfg, key, _coerce(cfg, key, value))
    return cfg


def load_config(path=None, overrides=None):
    """Build a validated RunConfig from an optional YAML file and flag overrides."""
    cfg = RunConfig()
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path) as f:
            try:
                data = yaml.safe_load(f) or {}
            except yaml.YAMLError as err:
                raise ConfigError(f"invalid YAML in {path}: {err}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must contain a mapping")
        apply_overrides(cfg, data)
        logger.info("loaded config %s", path)
    if overrides:
        apply_overrides(cfg, {k: v for k, v in overrides.items() if v is not None})
    return cfg.validate()
