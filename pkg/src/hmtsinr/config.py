"""Experiment configuration: sectioned ``key = value`` text files.

The same format is embedded (``# ``-prefixed) at the top of every CSV the CLI
writes, so an output file is also a valid config for re-running itself.
Lines starting with ``##`` are free-form notes and are ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .channel import CsfSplit
from .errors import ConfigError
from .hexmod import SQRT3, LatticeParams, alpha_for_rho


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _strs(text: str) -> tuple:
    return tuple(x for x in text.replace(",", " ").split())


def _opt_float(text: str):
    text = text.strip()
    return None if text in ("", "none", "auto") else float(text)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _fmt(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _opt(default=None):
    return field(default=default, metadata={"parse": _opt_float})


def _seq(default, parse=_floats):
    return field(default=default, metadata={"parse": parse})


@dataclass(frozen=True)
class SystemSection:
    T: float = 1e-4
    F: float = 25e3
    sigma: float | None = _opt()  # auto: T / (sqrt(3) F)
    n_subcarriers: int = 40
    pulse_length: int = 600
    sample_interval: float = 1e-6
    carrier_hz: float = 5e9  # provenance only; baseband results do not depend on it

    @property
    def lattice(self) -> LatticeParams:
        sigma = self.sigma if self.sigma is not None else self.T / (SQRT3 * self.F)
        return LatticeParams(self.T, self.F, sigma)


@dataclass(frozen=True)
class ChannelSection:
    split: str = "fixed_doppler"
    f_d: float | None = _opt(600.0)
    tau_rms: float | None = _opt()
    tau_max_ratio: float = 10.0
    alpha: float | None = _opt()
    path_count: int = 64

    def csf_split(self, lattice: LatticeParams) -> CsfSplit:
        alpha = self.alpha if self.alpha is not None else alpha_for_rho(lattice.rho)
        return CsfSplit(self.split, self.f_d, self.tau_rms, self.tau_max_ratio, alpha)


@dataclass(frozen=True)
class SimulationSection:
    trials: int = 10_000
    seed: int = 20240601
    workers: int = field(default=1, metadata={"runtime": True})  # never changes results
    window_m: int = 4
    window_n: int = 4
    sigma_c2: float = 1.0
    mode: str = "physical"
    eq26: str = "derived"
    exclude_coset2_origin: bool = False


SNR_GRID = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)


@dataclass(frozen=True)
class Fig2Section:
    thetas: tuple = _seq((0.1, 0.04))


@dataclass(frozen=True)
class Fig3Section:
    thetas: tuple = _seq((0.07, 0.2))
    snr_db: tuple = _seq(SNR_GRID)


@dataclass(frozen=True)
class Fig4Section:
    theta: float = 0.1
    ratios: tuple = _seq((0.5, 0.75, 1.0, 1.25, 1.5))
    snr_db: tuple = _seq(SNR_GRID)


@dataclass(frozen=True)
class Fig5Section:
    thetas: tuple = _seq((0.04, 0.07, 0.1, 0.13, 0.16, 0.2, 0.25, 0.3, 0.35))
    snr_db: float = 20.0


@dataclass(frozen=True)
class SweepSection:
    axis: str = "vartheta"
    values: tuple = _seq((0.04, 0.1, 0.2, 0.35))
    receivers: tuple = _seq(("tpr", "maxsinr", "upper_bound"), _strs)
    snr_db: float = 20.0
    theta: float = 0.1


@dataclass(frozen=True)
class RunSection:
    figure: str = ""


SECTIONS = {
    "run": RunSection,
    "system": SystemSection,
    "channel": ChannelSection,
    "simulation": SimulationSection,
    "fig2": Fig2Section,
    "fig3": Fig3Section,
    "fig4": Fig4Section,
    "fig5": Fig5Section,
    "sweep": SweepSection,
}

CHOICES = {
    ("channel", "split"): ("fixed_doppler", "fixed_delay", "matched"),
    ("simulation", "mode"): ("physical", "paper"),
    ("simulation", "eq26"): ("derived", "printed"),
    ("sweep", "axis"): ("snr_db", "vartheta", "rms_error_ratio"),
    ("run", "figure"): ("", "fig2", "fig3", "fig4", "fig5", "sweep"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    run: RunSection = field(default_factory=RunSection)
    system: SystemSection = field(default_factory=SystemSection)
    channel: ChannelSection = field(default_factory=ChannelSection)
    simulation: SimulationSection = field(default_factory=SimulationSection)
    fig2: Fig2Section = field(default_factory=Fig2Section)
    fig3: Fig3Section = field(default_factory=Fig3Section)
    fig4: Fig4Section = field(default_factory=Fig4Section)
    fig5: Fig5Section = field(default_factory=Fig5Section)
    sweep: SweepSection = field(default_factory=SweepSection)

    def to_text(self, include_runtime: bool = True) -> str:
        """Config text; ``include_runtime=False`` drops settings that cannot affect results."""
        lines = []
        for name in SECTIONS:
            lines.append(f"[{name}]")
            section = getattr(self, name)
            for f in fields(section):
                if f.metadata.get("runtime") and not include_runtime:
                    continue
                lines.append(f"{f.name} = {_fmt(getattr(section, f.name))}")
        return "\n".join(lines) + "\n"

    def updated(self, section: str, **changes) -> "ExperimentConfig":
        return replace(self, **{section: replace(getattr(self, section), **changes)})


def _convert(section: str, f, raw: str, lineno: int, source):
    try:
        if "parse" in f.metadata:
            value = f.metadata["parse"](raw)
        elif isinstance(f.default, bool):
            value = _bool(raw)
        elif isinstance(f.default, int):
            value = int(raw)
        elif isinstance(f.default, float):
            value = float(raw)
        else:
            value = raw.strip()
    except ValueError as exc:
        raise ConfigError(f"[{section}] {f.name}: {exc}", lineno, source) from None
    allowed = CHOICES.get((section, f.name))
    if allowed is not None and value not in allowed:
        raise ConfigError(f"[{section}] {f.name} must be one of {allowed}, got {value!r}", lineno, source)
    return value


def parse_config(text: str, source: str | None = None) -> ExperimentConfig:
    """Parse config text. CSV outputs are accepted: their ``# `` header is the config."""
    if text.startswith("#"):
        body = []
        for line in text.splitlines():
            if line.startswith("##"):
                body.append("")
            elif line.startswith("#"):
                body.append(line[1:])
            else:
                break
        lines = body
    else:
        lines = text.splitlines()
    values: dict[str, dict] = {}
    current = None
    for lineno, line in enumerate(lines, 1):
        stripped = line.strip()
        if not stripped or stripped.startswith(("#", ";")):
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError(f"malformed section header {stripped!r}", lineno, source)
            current = stripped[1:-1].strip()
            if current not in SECTIONS:
                raise ConfigError(f"unknown section [{current}]", lineno, source)
            values.setdefault(current, {})
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", lineno, source)
        if current is None:
            raise ConfigError("key outside of any section", lineno, source)
        key, raw = (s.strip() for s in stripped.split("=", 1))
        known = {f.name: f for f in fields(SECTIONS[current])}
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in [{current}]", lineno, source)
        if key in values[current]:
            raise ConfigError(f"duplicate key {key!r} in [{current}]", lineno, source)
        values[current][key] = _convert(current, known[key], raw, lineno, source)
    cfg = ExperimentConfig(**{name: SECTIONS[name](**vals) for name, vals in values.items()})
    validate(cfg, source)
    return cfg


def validate(cfg: ExperimentConfig, source=None):
    sysc, ch, sim = cfg.system, cfg.channel, cfg.simulation
    for name in ("T", "F", "sample_interval"):
        if not getattr(sysc, name) > 0:
            raise ConfigError(f"[system] {name} must be positive", source=source)
    if sysc.sigma is not None and not sysc.sigma > 0:
        raise ConfigError("[system] sigma must be positive", source=source)
    if sim.trials < 1 or sim.workers < 1 or ch.path_count < 1:
        raise ConfigError("trials, workers and path_count must be >= 1", source=source)
    if not 0 <= sim.seed < 2 ** 64:
        raise ConfigError("[simulation] seed must be an unsigned 64-bit integer", source=source)
    if ch.split == "fixed_doppler" and not ch.f_d:
        raise ConfigError("[channel] split = fixed_doppler needs f_d", source=source)
    if ch.split == "fixed_delay" and not ch.tau_rms:
        raise ConfigError("[channel] split = fixed_delay needs tau_rms", source=source)
    if ch.tau_max_ratio < 5:
        raise ConfigError("[channel] tau_max_ratio must be >= 5", source=source)
    thetas = (*cfg.fig2.thetas, *cfg.fig3.thetas, cfg.fig4.theta, *cfg.fig5.thetas, cfg.sweep.theta)
    if any(not 0 < t < 1 for t in thetas):
        raise ConfigError("channel spread factors must lie in (0, 1)", source=source)
    if any(not math.isfinite(v) for v in cfg.sweep.values) or not cfg.sweep.values:
        raise ConfigError("[sweep] values must be a non-empty list of numbers", source=source)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", source=str(path)) from None
    return parse_config(text, str(path))
