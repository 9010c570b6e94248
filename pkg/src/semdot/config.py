"""Run configuration: TOML file, documented defaults, CLI overrides."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .optimize import SemdotParams
from .problems import PRESETS, UnknownPresetError


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        super().__init__(message)
        self.field = field
        self.line = line


OPTIMIZERS = ("mma", "oc", "simp-d")


@dataclass(frozen=True)
class RunConfig:
    preset: str = "mbb"
    preset_args: dict = field(default_factory=dict)
    r_min: float = 2.0
    upsilon_min: float = 1.0
    n_grid: int = 10
    beta0: float = 0.5
    lam: float = 0.5
    p: float = 1.5
    rho_min: float = 0.001
    tau: float = 0.001
    epsilon: float = 0.001
    max_iter: int = 300
    min_iter: int = 10
    mode: str = "smooth"
    optimizer: str = "mma"
    solver: str = "auto"
    out: str = "out"

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ConfigError(f"preset: unknown preset {self.preset!r}; choose from {sorted(PRESETS)}",
                              "preset")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer: must be one of {OPTIMIZERS}, got {self.optimizer!r}",
                              "optimizer")
        for name, ok, rule in _RULES:
            if not ok(getattr(self, name)):
                raise ConfigError(f"{name}: {rule}, got {getattr(self, name)!r}", name)

    def params(self) -> SemdotParams:
        return SemdotParams(r_min=self.r_min, upsilon_min=self.upsilon_min, n_grid=self.n_grid,
                            beta0=self.beta0, lam=self.lam, p=self.p, rho_min=self.rho_min,
                            tau=self.tau, epsilon=self.epsilon, max_iter=self.max_iter,
                            min_iter=self.min_iter, mode=self.mode,
                            optimizer="mma" if self.optimizer == "simp-d" else self.optimizer,
                            solver=self.solver)

    def problem(self):
        return _build_problem(self.preset, self.preset_args)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_ALIASES = {"lambda": "lam", "grid": "n_grid", "n_per_axis": "n_grid"}


_RULES = (
    ("r_min", lambda v: v >= 1, "must be >= 1 element width"),
    ("upsilon_min", lambda v: v >= 1, "must be >= 1 element width"),
    ("n_grid", lambda v: v >= 2, "must be >= 2"),
    ("beta0", lambda v: v > 0, "must be positive"),
    ("lam", lambda v: v >= 0, "must be non-negative"),
    ("p", lambda v: v >= 1, "must be >= 1"),
    ("rho_min", lambda v: 0 < v < 1, "must lie in (0, 1)"),
    ("tau", lambda v: v > 0, "must be positive"),
    ("epsilon", lambda v: v > 0, "must be positive"),
    ("max_iter", lambda v: v >= 1, "must be >= 1"),
    ("min_iter", lambda v: v >= 0, "must be >= 0"),
    ("mode", lambda v: v in ("step", "smooth"), "must be 'step' or 'smooth'"),
    ("solver", lambda v: v in ("auto", "cholmod", "superlu", "pcg"),
     "must be one of auto, cholmod, superlu, pcg"),
)


def _build_problem(name: str, args: dict):
    try:
        return PRESETS[name](**args)
    except KeyError:
        raise UnknownPresetError(name) from None
    except TypeError as exc:
        raise ConfigError(f"preset_args: {exc}", "preset_args") from None


def _coerce(name: str, value):
    f = _FIELDS[name]
    kind = f.type if isinstance(f.type, str) else f.type.__name__
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}: expected a number, got {value!r}", name)
        return float(value)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name}: expected an integer, got {value!r}", name)
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{name}: expected a string, got {value!r}", name)
        return value
    if not isinstance(value, dict):
        raise ConfigError(f"{name}: expected a table, got {value!r}", name)
    return dict(value)


def _find_line(text: str, key: str) -> int | None:
    for n, line in enumerate(text.splitlines(), 1):
        if line.split("=", 1)[0].strip() == key:
            return n
    return None


def config_from_mapping(data: dict, text: str = "") -> RunConfig:
    values = {}
    for key, value in data.items():
        name = _ALIASES.get(key, key)
        if name not in _FIELDS:
            raise ConfigError(f"{key}: unknown configuration key", key, _find_line(text, key))
        try:
            values[name] = _coerce(name, value)
        except ConfigError as exc:
            exc.line = _find_line(text, key)
            raise
    try:
        return RunConfig(**values)
    except ConfigError as exc:
        if exc.field:
            exc.line = _find_line(text, exc.field)
        raise


def load_config(path: str | Path | None = None, **overrides) -> RunConfig:
    """Parse a TOML run configuration; keyword overrides win over the file.

    Overrides set to ``None`` are ignored so CLI flags can be passed through
    unconditionally.
    """
    data, text = {}, ""
    if path is not None:
        text = Path(path).read_text()
        try:
            data = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}", line=getattr(exc, "lineno", None)) from None
    data.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_mapping(data, text)
