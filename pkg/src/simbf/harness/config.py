"""Campaign configuration.

The file is YAML.  Every scenario constant has a key and a default; keys
ending in ``_db`` / ``_dbm`` are converted to linear units here and nowhere
else.  Unknown keys are rejected so typos do not silently fall back to
defaults.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from simbf.channel import db_to_linear, dbm_to_watts, noise_variance
from simbf.errors import ConfigurationError

__all__ = [
    "SCHEMES",
    "VARIANTS",
    "ARRANGEMENTS",
    "SWEEPS",
    "Scenario",
    "Solvers",
    "Sweep",
    "CampaignConfig",
    "load_config",
    "parse_config",
    "grid_shape",
]

SCHEMES = ("sim-opt", "sim-zf", "mmimo-opt", "mmimo-zf")
VARIANTS = ("cnt-phase", "qnt-phase", "step-by-step-qnt")
ARRANGEMENTS = ("rf-ac-pc", "interlaced", "rf-pc-ac", "pc-only")
SWEEPS = ("none", "Q", "L_pc", "b", "K", "iterations")


@dataclass(frozen=True)
class Scenario:
    """Physical scenario in linear units (watts, metres, amplitude ratios)."""

    frequency: float = 28e9
    n_antennas: int = 4
    n_users: int = 8
    qx: int = 7
    qy: int = 7
    pitch_wavelengths: float = 0.5
    n_pc: int = 8
    n_ac: int = 4
    depth_wavelengths: float = 5.0  # s = depth * lambda / L
    sigma_over_spacing: float = 1.0
    meta_area_wavelengths2: float = 0.25
    bs_area_wavelengths2: float = 0.25
    bs_height: float = 10.0
    radius: float = 10.0
    total_power: float = dbm_to_watts(15.0)
    noise_var: float = noise_variance(-174.0, 10e6)
    path_loss_exponent: float = 3.5
    ref_distance: float = 1.0
    pc_amplitude: float = 0.9
    amp_min: float = db_to_linear(-22.0, amplitude=True)
    amp_max: float = db_to_linear(13.0, amplitude=True)
    bits: int = 3
    ac_phases: str = "zero"

    @property
    def n_atoms(self) -> int:
        return self.qx * self.qy

    def validate(self):
        ints = ("n_antennas", "n_users", "qx", "qy", "bits")
        for name in ints:
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.n_pc < 0 or self.n_ac < 0 or self.n_pc + self.n_ac < 1:
            raise ConfigurationError(f"need at least one layer, got n_pc={self.n_pc}, n_ac={self.n_ac}")
        positive = ("frequency", "pitch_wavelengths", "depth_wavelengths", "sigma_over_spacing",
                    "meta_area_wavelengths2", "bs_area_wavelengths2", "bs_height", "total_power",
                    "noise_var", "ref_distance", "pc_amplitude", "amp_min")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.radius < 0:
            raise ConfigurationError(f"radius must be non-negative, got {self.radius}")
        if self.amp_max < self.amp_min:
            raise ConfigurationError("amp_max must not be below amp_min")
        if self.n_antennas > self.n_users:
            raise ConfigurationError(f"cannot schedule {self.n_antennas} streams among {self.n_users} users")
        if self.n_antennas > self.n_atoms:
            raise ConfigurationError(f"{self.n_antennas} streams need at least as many meta-atoms, got {self.n_atoms}")
        if self.ac_phases not in ("zero", "random"):
            raise ConfigurationError(f"ac_phases must be 'zero' or 'random', got {self.ac_phases!r}")
        return self


@dataclass(frozen=True)
class Solvers:
    beamforming_iterations: int = 1000
    beamforming_tol: float = 1e-6
    beamforming_init: str = "matched"
    stop_on: str = "objective"
    damping: float = 0.0
    fit_iterations: int = 1000
    fit_tol: float = 1e-10
    amplitude_gradient: str = "scaled"
    zf_condition_cap: float = 1e12

    def validate(self):
        if self.beamforming_iterations < 1 or self.fit_iterations < 1:
            raise ConfigurationError("iteration budgets must be >= 1")
        return self


@dataclass(frozen=True)
class Sweep:
    name: str = "none"
    values: tuple = (None,)

    def validate(self):
        if self.name not in SWEEPS:
            raise ConfigurationError(f"unknown sweep {self.name!r}; choose from {SWEEPS}")
        if self.name != "none" and not self.values:
            raise ConfigurationError(f"sweep {self.name} needs at least one value")
        return self


@dataclass(frozen=True)
class CampaignConfig:
    scenario: Scenario = field(default_factory=Scenario)
    solvers: Solvers = field(default_factory=Solvers)
    schemes: tuple = SCHEMES
    variants: tuple = VARIANTS
    arrangements: tuple = ("rf-ac-pc",)
    sweep: Sweep = field(default_factory=Sweep)
    trials: int = 200
    seed: int = 0
    out_dir: str = "results"
    timing: bool = False
    workers: int = 1

    def validate(self):
        self.scenario.validate()
        self.solvers.validate()
        self.sweep.validate()
        for value in self.sweep.values:
            self.point(value).scenario.validate()
        _check_subset("scheme", self.schemes, SCHEMES)
        _check_subset("variant", self.variants, VARIANTS)
        _check_subset("arrangement", self.arrangements, ARRANGEMENTS)
        if self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        return self

    def point(self, value) -> "CampaignConfig":
        """Configuration at one sweep value."""
        name = self.sweep.name
        if name == "none":
            return self
        if name == "Q":
            qx, qy = grid_shape(int(value))
            return replace(self, scenario=replace(self.scenario, qx=qx, qy=qy))
        if name == "L_pc":
            return replace(self, scenario=replace(self.scenario, n_pc=int(value)))
        if name == "b":
            return replace(self, scenario=replace(self.scenario, bits=int(value)))
        if name == "K":
            return replace(self, scenario=replace(self.scenario, n_users=int(value)))
        # iterations: one budget for every iterative stage
        n = int(value)
        return replace(self, solvers=replace(self.solvers, beamforming_iterations=n, fit_iterations=n))

    def to_dict(self) -> dict:
        return asdict(self)


def _check_subset(what, chosen, allowed):
    if not chosen:
        raise ConfigurationError(f"at least one {what} is required")
    bad = [c for c in chosen if c not in allowed]
    if bad:
        raise ConfigurationError(f"unknown {what}(s) {bad}; choose from {allowed}")


def grid_shape(q: int) -> tuple[int, int]:
    """Most nearly square ``(Qx, Qy)`` with ``Qx * Qy = Q`` and ``Qx <= Qy``."""
    if q < 1:
        raise ConfigurationError(f"Q must be >= 1, got {q}")
    qx = max(d for d in range(1, math.isqrt(q) + 1) if q % d == 0)
    return qx, q // qx


# YAML keys given in logarithmic units -> (field, converter)
_SCENARIO_DB = {
    "total_power_dbm": ("total_power", dbm_to_watts),
    "amp_min_db": ("amp_min", lambda v: db_to_linear(v, amplitude=True)),
    "amp_max_db": ("amp_max", lambda v: db_to_linear(v, amplitude=True)),
}


def _scenario(raw: dict) -> Scenario:
    raw = dict(raw)
    kwargs = {}
    for key, (name, conv) in _SCENARIO_DB.items():
        if key in raw:
            kwargs[name] = conv(float(raw.pop(key)))
    psd = raw.pop("noise_psd_dbm_hz", None)
    bw = raw.pop("bandwidth_hz", None)
    if psd is not None or bw is not None:
        kwargs["noise_var"] = noise_variance(-174.0 if psd is None else float(psd), 10e6 if bw is None else float(bw))
    kwargs.update(_known(Scenario, raw, "scenario"))
    return Scenario(**kwargs)


def _known(cls, raw: dict, section: str) -> dict:
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - names)
    if unknown:
        raise ConfigurationError(f"unknown {section} key(s): {unknown}")
    types = {f.name: f.type for f in fields(cls)}
    out = {}
    for key, value in raw.items():
        kind = types[key]
        if kind in ("int", int):
            out[key] = int(value)
        elif kind in ("float", float):
            out[key] = float(value)
        else:
            out[key] = value
    return out


def parse_config(raw: dict | None) -> CampaignConfig:
    """Build and validate a :class:`CampaignConfig` from a plain mapping."""
    raw = dict(raw or {})
    kwargs = {}
    if "scenario" in raw:
        kwargs["scenario"] = _scenario(raw.pop("scenario") or {})
    if "solvers" in raw:
        kwargs["solvers"] = Solvers(**_known(Solvers, raw.pop("solvers") or {}, "solvers"))
    if "sweep" in raw:
        sw = raw.pop("sweep") or {}
        extra = set(sw) - {"name", "values"}
        if extra:
            raise ConfigurationError(f"unknown sweep key(s): {sorted(extra)}")
        name = sw.get("name", "none")
        values = tuple(sw.get("values") or ()) if name != "none" else (None,)
        kwargs["sweep"] = Sweep(name=name, values=values)
    for key in ("schemes", "variants", "arrangements"):
        if key in raw:
            kwargs[key] = tuple(raw.pop(key))
    kwargs.update(_known(CampaignConfig, raw, "top-level"))
    return CampaignConfig(**kwargs).validate()


def load_config(path) -> CampaignConfig:
    """Read a YAML file; a missing or empty file yields the defaults."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"malformed config {path}: {exc}") from exc
    if raw is not None and not isinstance(raw, dict):
        raise ConfigurationError(f"config {path} must be a mapping at top level")
    return parse_config(raw)
