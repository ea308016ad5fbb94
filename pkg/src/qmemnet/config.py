"""YAML run configuration.

Example::

    system:
      preset: atomic-network
      params: {kappa: 2.0, g: 1.0, delta: 1.0}
    input:
      kind: single_photon
      frame: primed
      coefficients: [0, 0, [0.7071067811865476, 0], [0.7071067811865476, 0]]
    schedule:
      t1: 0.0
      t2: 5.0
      store: {params: {delta: 0.0}}
    numerics:
      h: null
    outputs:
      directory: out

Complex numbers are written as ``[re, im]`` pairs (plain numbers are
accepted for real values).  An explicit system uses ``omega`` (n x n) and
``c`` (length n) instead of ``preset``.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import BlockStructureViolation, ConfigError
from .linsys import PassiveLinearSystem, build_system, df_decompose
from .presets import (
    ActiveSystemParams,
    AtomicNetworkParams,
    build_atomic_network,
    build_single_mode,
    reference_frame,
)

SYSTEM_PRESETS = ("single-mode", "atomic-network", "active-opo")
INPUT_KINDS = ("single_photon", "coherent")
FRAMES = ("node", "primed")

_PRESET_KEYS = {
    "single-mode": {"kappa"},
    "atomic-network": {"kappa", "g", "delta"},
    "active-opo": {"kappa", "epsilon"},
}


def parse_complex(value, where: str) -> complex:
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number or [re, im], got {value!r}")
    if isinstance(value, (int, float)):
        return complex(float(value), 0.0)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"{where}: expected a number or [re, im], got {value!r}")


def parse_vector(value, where: str) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{where}: expected a non-empty list of complex entries")
    return np.array([parse_complex(v, f"{where}[{i}]") for i, v in enumerate(value)])


def parse_matrix(value, where: str) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{where}: expected a list of rows")
    rows = [parse_vector(r, f"{where}[{i}]") for i, r in enumerate(value)]
    if len({len(r) for r in rows}) != 1:
        raise ConfigError(f"{where}: rows have different lengths")
    return np.array(rows)


def format_complex(z: complex):
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _number(section: dict, key: str, where: str, default=None, allow_none=False):
    if key not in section:
        return default
    v = section[key]
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def _section(raw: dict, key: str, where: str = "") -> dict:
    v = raw.get(key, {})
    if v is None:
        return {}
    if not isinstance(v, dict):
        raise ConfigError(f"{where}{key}: expected a mapping, got {type(v).__name__}")
    return v


def _check_keys(section: dict, allowed: set, where: str):
    extra = set(section) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {sorted(extra)}")


@dataclass
class SystemConfig:
    preset: str | None = None
    params: dict = field(default_factory=dict)
    omega: np.ndarray | None = None
    c: np.ndarray | None = None

    @classmethod
    def from_dict(cls, raw: dict, where: str = "system") -> "SystemConfig":
        if not isinstance(raw, dict):
            raise ConfigError(f"{where}: expected a mapping")
        _check_keys(raw, {"preset", "params", "omega", "c"}, where)
        preset = raw.get("preset")
        params = _section(raw, "params", f"{where}.")
        if preset is not None:
            if preset not in SYSTEM_PRESETS:
                raise ConfigError(f"{where}.preset: unknown preset {preset!r}; choose from {list(SYSTEM_PRESETS)}")
            _check_keys(params, _PRESET_KEYS[preset], f"{where}.params")
            clean = {k: _number(params, k, f"{where}.params") for k in params}
            return cls(preset=preset, params=clean)
        if "omega" not in raw or "c" not in raw:
            raise ConfigError(f"{where}: give either 'preset' or both 'omega' and 'c'")
        omega = parse_matrix(raw["omega"], f"{where}.omega")
        c = parse_vector(raw["c"], f"{where}.c")
        return cls(omega=omega, c=c)

    def to_dict(self) -> dict:
        if self.preset is not None:
            return {"preset": self.preset, "params": dict(self.params)}
        return {
            "omega": [[format_complex(z) for z in row] for row in self.omega],
            "c": [format_complex(z) for z in self.c],
        }

    def with_params(self, overrides: dict) -> "SystemConfig":
        if self.preset is None:
            raise ConfigError("schedule.store.params needs a preset system")
        _check_keys(overrides, _PRESET_KEYS[self.preset], "schedule.store.params")
        merged = dict(self.params)
        merged.update({k: _number(overrides, k, "schedule.store.params") for k in overrides})
        return SystemConfig(preset=self.preset, params=merged)

    def build(self) -> PassiveLinearSystem:
        if self.preset == "single-mode":
            return build_single_mode(self.params.get("kappa", 2.0))
        if self.preset == "atomic-network":
            return build_atomic_network(AtomicNetworkParams(**self.params))
        if self.preset == "active-opo":
            raise ConfigError("system.preset: active-opo is not a passive system; only 'analyze' accepts it")
        return build_system(self.omega, self.c.reshape(1, -1))


@dataclass
class InputConfig:
    kind: str = "single_photon"
    frame: str = "node"
    coefficients: np.ndarray | None = None

    @classmethod
    def from_dict(cls, raw: dict, where: str = "input") -> "InputConfig":
        _check_keys(raw, {"kind", "frame", "coefficients"}, where)
        kind = raw.get("kind", "single_photon")
        if kind not in INPUT_KINDS:
            raise ConfigError(f"{where}.kind: expected one of {list(INPUT_KINDS)}, got {kind!r}")
        frame = raw.get("frame", "node")
        if frame not in FRAMES:
            raise ConfigError(f"{where}.frame: expected one of {list(FRAMES)}, got {frame!r}")
        coeffs = raw.get("coefficients")
        if coeffs is not None:
            coeffs = parse_vector(coeffs, f"{where}.coefficients")
        return cls(kind=kind, frame=frame, coefficients=coeffs)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "frame": self.frame}
        if self.coefficients is not None:
            out["coefficients"] = [format_complex(z) for z in self.coefficients]
        return out


@dataclass
class ScheduleConfig:
    t1: float = 0.0
    t2: float = 0.0
    t_switch: float | None = None
    store: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict, where: str = "schedule") -> "ScheduleConfig":
        _check_keys(raw, {"t1", "t2", "t_switch", "store"}, where)
        t1 = _number(raw, "t1", where, 0.0)
        t2 = _number(raw, "t2", where, t1)
        ts = _number(raw, "t_switch", where, None, allow_none=True)
        store = _section(raw, "store", f"{where}.")
        _check_keys(store, {"params", "omega", "c", "preset"}, f"{where}.store")
        return cls(t1=t1, t2=t2, t_switch=ts, store=copy.deepcopy(store))

    def to_dict(self) -> dict:
        out = {"t1": self.t1, "t2": self.t2, "store": copy.deepcopy(self.store)}
        if self.t_switch is not None:
            out["t_switch"] = self.t_switch
        return out


@dataclass
class NumericsConfig:
    h: float | None = None
    t_start: float | None = None
    truncation_tol: float = 1e-8
    fidelity_threshold: float = 0.999

    @classmethod
    def from_dict(cls, raw: dict, where: str = "numerics") -> "NumericsConfig":
        _check_keys(raw, {"h", "t_start", "truncation_tol", "fidelity_threshold"}, where)
        h = _number(raw, "h", where, None, allow_none=True)
        if h is not None and h <= 0:
            raise ConfigError(f"{where}.h: step must be positive, got {h}")
        tol = _number(raw, "truncation_tol", where, 1e-8)
        if not 0 < tol < 1:
            raise ConfigError(f"{where}.truncation_tol: must lie in (0, 1), got {tol}")
        return cls(
            h=h,
            t_start=_number(raw, "t_start", where, None, allow_none=True),
            truncation_tol=tol,
            fidelity_threshold=_number(raw, "fidelity_threshold", where, 0.999),
        )

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "t_start": self.t_start,
            "truncation_tol": self.truncation_tol,
            "fidelity_threshold": self.fidelity_threshold,
        }


@dataclass
class RunConfig:
    system: SystemConfig
    input: InputConfig = field(default_factory=InputConfig)
    schedule: ScheduleConfig | None = None
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    outputs: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config: top level must be a mapping")
        _check_keys(raw, {"system", "input", "schedule", "numerics", "outputs"}, "config")
        if "system" not in raw:
            raise ConfigError("config: missing required section 'system'")
        sched = raw.get("schedule")
        outputs = _section(raw, "outputs")
        _check_keys(outputs, {"directory", "formats"}, "outputs")
        return cls(
            system=SystemConfig.from_dict(raw["system"]),
            input=InputConfig.from_dict(_section(raw, "input")),
            schedule=None if sched is None else ScheduleConfig.from_dict(_section(raw, "schedule")),
            numerics=NumericsConfig.from_dict(_section(raw, "numerics")),
            outputs=dict(outputs),
        )

    def to_dict(self) -> dict:
        out = {
            "system": self.system.to_dict(),
            "input": self.input.to_dict(),
            "numerics": self.numerics.to_dict(),
            "outputs": dict(self.outputs),
        }
        if self.schedule is not None:
            out["schedule"] = self.schedule.to_dict()
        return out

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def store_system(self) -> PassiveLinearSystem:
        if self.schedule is None:
            raise ConfigError("schedule: section required for this command")
        store = self.schedule.store
        if "omega" in store or "c" in store:
            return SystemConfig.from_dict(store, "schedule.store").build()
        return self.system.with_params(_section(store, "params", "schedule.store.")).build()

    def primed_frame(self) -> np.ndarray:
        """Basis used for ``--frame primed``.

        The fixed ensemble basis for the atomic network; otherwise the DF
        split of the storage system (or of the system itself).
        """
        if self.system.preset == "atomic-network":
            return reference_frame()
        target = self.store_system() if self.schedule is not None else self.system.build()
        try:
            return np.array(df_decompose(target).u)
        except BlockStructureViolation:
            return np.eye(target.n, dtype=complex)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f" line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"{path}:{loc} invalid YAML: {getattr(exc, 'problem', exc)}") from exc
    return RunConfig.from_dict(raw)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True)


def active_params(cfg: SystemConfig) -> ActiveSystemParams:
    return ActiveSystemParams(**cfg.params)
