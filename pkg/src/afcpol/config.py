"""Run configuration: a flat TOML file with dotted section keys.

Example::

    seed = 7
    memory.comb_spacing_hz = 2e6
    channel.dark_prob_per_window = 5e-5
    run.mu_list = [0.01, 0.1, 0.4, 1.0]

Every key is optional; omitted keys take the defaults below.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .detection import ChannelParams
from .memory import MemoryParams
from .polarization import LABELS

DEFAULT_MU_LIST = (0.01, 0.04, 0.1, 0.4, 1.0, 3.5, 10.0, 36.0)
BENCHMARK_ETAS = (0.001, 0.01, 0.1, 0.25, 0.5, 1.0)
SWEEP_ETAS = (0.02, 0.08, 0.10, 0.12)


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


@dataclass(frozen=True)
class PulseConfig:
    fwhm_s: float = 140e-9
    dt_s: float = 2e-9


@dataclass(frozen=True)
class EchoConfig:
    mu: float = 0.4
    bin_s: float = 10e-9
    t_min_s: float = -500e-9
    t_max_s: float = 1500e-9


@dataclass(frozen=True)
class RunConfig:
    memory: MemoryParams = field(default_factory=MemoryParams)
    channel: ChannelParams = field(default_factory=ChannelParams)
    pulse: PulseConfig = field(default_factory=PulseConfig)
    echo: EchoConfig = field(default_factory=EchoConfig)
    mu_list: tuple = DEFAULT_MU_LIST
    tomo_mu: float = 0.4
    input_states: tuple = LABELS
    sweep_states: tuple = ("V", "D", "R")
    settings: tuple = LABELS
    seed: int = 12345
    output_dir: str = "out"
    eta_lines: tuple = BENCHMARK_ETAS
    sweep_eta_lines: tuple = SWEEP_ETAS
    benchmark_mu_min: float = 0.01
    benchmark_mu_max: float = 40.0
    benchmark_points: int = 200
    resamples: int = 100
    sigma_tech: float = 0.005
    prep_qwp_error_rad: float = 0.0
    fringe_points: int = 37
    workers: int = 1

    def __post_init__(self):
        if not self.mu_list or any(m <= 0 for m in self.mu_list):
            raise ConfigError("run.mu_list must be non-empty and positive")
        if self.tomo_mu <= 0:
            raise ConfigError("run.tomo_mu must be positive")
        for name in ("input_states", "sweep_states", "settings"):
            bad = [s for s in getattr(self, name) if s not in LABELS]
            if bad:
                raise ConfigError(f"run.{name}: unknown state label(s) {bad}; expected {LABELS}")
        if not self.eta_lines or any(not 0 < e <= 1 for e in (*self.eta_lines, *self.sweep_eta_lines)):
            raise ConfigError("benchmark efficiencies must lie in (0, 1]")
        if not 0 < self.benchmark_mu_min < self.benchmark_mu_max or self.benchmark_points < 2:
            raise ConfigError("benchmark grid must satisfy 0 < mu_min < mu_max with >= 2 points")
        if self.resamples and self.resamples < 100:
            raise ConfigError("run.resamples must be 0 (off) or >= 100")
        if self.fringe_points < 8:
            raise ConfigError("run.fringe_points must be >= 8")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)


# flat "section.key" -> RunConfig field, for the non-nested sections
_RUN_KEYS = {
    "run.mu_list": "mu_list",
    "run.tomo_mu": "tomo_mu",
    "run.input_states": "input_states",
    "run.sweep_states": "sweep_states",
    "run.settings": "settings",
    "run.resamples": "resamples",
    "run.sigma_tech": "sigma_tech",
    "run.prep_qwp_error_rad": "prep_qwp_error_rad",
    "run.fringe_points": "fringe_points",
    "benchmark.eta_lines": "eta_lines",
    "benchmark.mu_min": "benchmark_mu_min",
    "benchmark.mu_max": "benchmark_mu_max",
    "benchmark.points": "benchmark_points",
    "sweep.eta_lines": "sweep_eta_lines",
    "seed": "seed",
    "output_dir": "output_dir",
    "workers": "workers",
}
_NESTED = {"memory": MemoryParams, "channel": ChannelParams, "pulse": PulseConfig, "echo": EchoConfig}


def _flatten(data: dict, prefix: str = "") -> dict:
    flat = {}
    for k, v in data.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten(v, key + "."))
        else:
            flat[key] = v
    return flat


def config_from_dict(data: dict) -> RunConfig:
    flat = _flatten(data)
    nested = {name: {} for name in _NESTED}
    top = {}
    for key, value in flat.items():
        section, _, name = key.partition(".")
        if section in _NESTED and name:
            allowed = {f.name for f in fields(_NESTED[section])}
            if name not in allowed:
                raise ConfigError(f"unknown key {key!r}; {section} accepts {sorted(allowed)}")
            nested[section][name] = value
        elif key in _RUN_KEYS:
            top[_RUN_KEYS[key]] = tuple(value) if isinstance(value, list) else value
        else:
            raise ConfigError(f"unknown key {key!r}")
    try:
        for section, cls in _NESTED.items():
            top[section] = cls(**nested[section])
        return RunConfig(**top)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data)


def dump_config(cfg: RunConfig) -> str:
    """Flat TOML text that :func:`load_config` reads back to an equal config."""
    lines = ["# afcpol run configuration"]

    def fmt(v):
        if isinstance(v, str):
            return f'"{v}"'
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, (tuple, list)):
            return "[" + ", ".join(fmt(x) for x in v) + "]"
        return repr(v)

    for key, attr in _RUN_KEYS.items():
        lines.append(f"{key} = {fmt(getattr(cfg, attr))}")
    for section in _NESTED:
        obj = getattr(cfg, section)
        for f in fields(obj):
            lines.append(f"{section}.{f.name} = {fmt(getattr(obj, f.name))}")
    return "\n".join(lines) + "\n"
