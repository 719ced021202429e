"""Experiment configuration: a strict line-oriented text format.

Config files hold ``section.key = value`` lines (``#`` comments and blank
lines allowed). Every key must belong to the schema below; unknown keys
are hard errors so typos cannot silently fall back to defaults. Floats
serialize with repr, so parse -> serialize -> parse is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import get_type_hints

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "serialize_config",
    "load_config",
    "VARIANT_NAMES",
]

VARIANT_NAMES = ("HoNHoS", "HeNHoS", "HoNHeS", "HeNHeS")


class ConfigError(ValueError):
    """Malformed config text or out-of-schema key/value."""


@dataclass(frozen=True)
class RunSection:
    seed: int = 42
    out: str = "runs/out"
    threads: int = 1


@dataclass(frozen=True)
class NetworkSection:
    n_recurrent: int = 200
    n_outputs: int = 32
    ei_ratio: float = 0.8
    lam: float = 2.0
    c_ee: float = 0.3
    c_ei: float = 0.3
    c_ie: float = 0.3
    c_ii: float = 0.3
    c_input: float = 0.3
    w_scale: float = 6.0
    w_input_scale: float = 0.0  # 0 = follow w_scale
    w_inhib_gain: float = 2.0
    p_ir: float = 0.25
    input_fraction: float = 0.3
    taps_per_output: int = 0  # 0 = tap the whole reservoir
    grid_x: int = 0  # 0 = smallest cube holding n_recurrent
    grid_y: int = 0
    grid_z: int = 0


@dataclass(frozen=True)
class NeuronSection:
    e_tau_shape: float = 2.0
    e_tau_scale: float = 25.0
    i_tau_shape: float = 2.0
    i_tau_scale: float = 25.0
    v_th: float = 1.0
    v_reset: float = 0.0
    v_rest: float = 0.0
    r_m: float = 1.0
    refrac: float = 2.0
    readout_tau: float = 100.0
    # Read tau heterogeneity as leak-conductance variation at fixed
    # membrane capacitance: r_m scales with tau_m / mean tau, making the
    # per-spike potential kick tau-independent (the discrete update adds
    # synaptic input without the decay factor).
    r_m_follows_tau: int = 1


@dataclass(frozen=True)
class StdpSection:
    a_plus_shape: float = 2.0
    a_plus_scale: float = 0.025
    a_minus_shape: float = 2.0
    a_minus_scale: float = 0.02625
    tau_plus_shape: float = 2.0
    tau_plus_scale: float = 10.0
    tau_minus_shape: float = 2.0
    tau_minus_scale: float = 10.0
    incr_plus: float = 1.0
    incr_minus: float = 1.0
    w_max: float = 0.0  # 0 = max(1, w_scale, w_input_scale)


@dataclass(frozen=True)
class SimSection:
    dt: float = 1.0
    epochs: int = 1


@dataclass(frozen=True)
class DataSection:
    task: str = "moving_bar"
    n_classes: int = 4
    n_per_class: int = 8
    test_per_class: int = 10
    height: int = 10
    width: int = 10
    frames: int = 20
    frame_period: float = 10.0
    noise: float = 0.005
    threshold: float = 0.5
    crop_height: int = 0  # 0 = no crop
    crop_width: int = 0


@dataclass(frozen=True)
class ExperimentSection:
    repeats: int = 5
    train_fraction: float = 1.0
    variants: tuple[str, ...] = VARIANT_NAMES


@dataclass(frozen=True)
class SweepSection:
    neurons: tuple[int, ...] = (50, 100, 200, 400)
    lambdas: tuple[float, ...] = (0.5, 1.0, 2.0, 4.0)
    w_scales: tuple[float, ...] = (2.0, 4.0, 8.0, 16.0)
    train_fractions: tuple[float, ...] = (0.1, 0.25, 0.5, 1.0)
    reps: int = 5


@dataclass(frozen=True)
class BoSection:
    budget: int = 25
    n_init: int = 5
    pool_size: int = 64
    samples_per_dist: int = 128
    n_projections: int = 64
    nu: float = 1.5
    noise: float = 1e-4
    metric: str = "sliced"


@dataclass(frozen=True)
class ExperimentConfig:
    run: RunSection = field(default_factory=RunSection)
    network: NetworkSection = field(default_factory=NetworkSection)
    neuron: NeuronSection = field(default_factory=NeuronSection)
    stdp: StdpSection = field(default_factory=StdpSection)
    sim: SimSection = field(default_factory=SimSection)
    data: DataSection = field(default_factory=DataSection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    bo: BoSection = field(default_factory=BoSection)

    def with_run(self, **kwargs) -> "ExperimentConfig":
        return replace(self, run=replace(self.run, **kwargs))


_SECTIONS = {
    "run": RunSection,
    "network": NetworkSection,
    "neuron": NeuronSection,
    "stdp": StdpSection,
    "sim": SimSection,
    "data": DataSection,
    "experiment": ExperimentSection,
    "sweep": SweepSection,
    "bo": BoSection,
}

# Keys whose on-disk spelling differs from the field name.
_KEY_TO_FIELD = {("network", "lambda"): "lam"}
_FIELD_TO_KEY = {(sec, f): k for (sec, k), f in _KEY_TO_FIELD.items()}


def _parse_value(raw: str, typ, where: str):
    raw = raw.strip()
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        if typ is str:
            return raw
        if typ == tuple[str, ...]:
            return tuple(s.strip() for s in raw.split(",") if s.strip())
        if typ == tuple[int, ...]:
            return tuple(int(s) for s in raw.split(",") if s.strip())
        if typ == tuple[float, ...]:
            return tuple(float(s) for s in raw.split(",") if s.strip())
    except ValueError as err:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {typ}") from err
    raise ConfigError(f"{where}: unsupported field type {typ}")


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config(text: str) -> ExperimentConfig:
    """Parse config text, rejecting unknown sections, keys, or bad values."""
    values: dict[str, dict[str, object]] = {name: {} for name in _SECTIONS}
    hints = {name: get_type_hints(cls) for name, cls in _SECTIONS.items()}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value', got {raw_line!r}")
        key_part, value_part = line.split("=", 1)
        key_part = key_part.strip()
        if "." not in key_part:
            raise ConfigError(f"line {lineno}: key {key_part!r} missing section prefix")
        section, key = key_part.split(".", 1)
        if section not in _SECTIONS:
            raise ConfigError(f"line {lineno}: unknown section {section!r}")
        fname = _KEY_TO_FIELD.get((section, key), key)
        if fname not in hints[section]:
            raise ConfigError(f"line {lineno}: unknown key {section}.{key}")
        where = f"line {lineno} ({section}.{key})"
        values[section][fname] = _parse_value(value_part, hints[section][fname], where)

    sections = {}
    for name, cls in _SECTIONS.items():
        try:
            sections[name] = cls(**values[name])
        except (TypeError, ValueError) as err:
            raise ConfigError(f"section {name}: {err}") from err
    cfg = ExperimentConfig(**sections)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    for v in cfg.experiment.variants:
        if v not in VARIANT_NAMES:
            raise ConfigError(f"experiment.variants: unknown variant {v!r}")
    if cfg.data.task not in ("moving_bar", "jitter_pattern", "rate_pattern"):
        raise ConfigError(f"data.task: unknown task {cfg.data.task!r}")
    if cfg.bo.metric not in ("sliced", "sinkhorn"):
        raise ConfigError(f"bo.metric must be 'sliced' or 'sinkhorn', got {cfg.bo.metric!r}")
    if not (0.0 < cfg.experiment.train_fraction <= 1.0):
        raise ConfigError("experiment.train_fraction must lie in (0, 1]")
    if cfg.data.n_classes < 2:
        raise ConfigError("data.n_classes must be at least 2")


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text form: sections and keys in schema order."""
    lines = []
    for name, cls in _SECTIONS.items():
        section = getattr(cfg, name)
        for f in fields(cls):
            key = _FIELD_TO_KEY.get((name, f.name), f.name)
            lines.append(f"{name}.{key} = {_format_value(getattr(section, f.name))}")
    return "\n".join(lines) + "\n"


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
