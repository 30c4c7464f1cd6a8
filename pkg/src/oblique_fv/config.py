"""Experiment configuration as a flat ``key = value`` text file."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

from .assembly import SCHEMES
from .cases import builtin_cases
from .grid import Domain


class ConfigError(ValueError):
    pass


def parse_dims(text: str) -> tuple[int, int, int]:
    """``"7"`` means ``(7, 7, 7)``; ``"4x5x6"`` gives explicit dims."""
    parts = text.strip().lower().split("x")
    try:
        vals = [int(p) for p in parts]
    except ValueError:
        raise ConfigError(f"bad dims {text!r}") from None
    if len(vals) == 1:
        vals *= 3
    if len(vals) != 3:
        raise ConfigError(f"dims need one or three integers, got {text!r}")
    return tuple(vals)


def parse_levels(text: str) -> list[tuple[int, int, int]]:
    items = [t for t in text.replace(";", ",").split(",") if t.strip()]
    if not items:
        raise ConfigError("levels must not be empty")
    return [parse_dims(t) for t in items]


def format_levels(levels) -> str:
    return ",".join("x".join(str(n) for n in d) for d in levels)


def _float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}") from None


@dataclass
class ExperimentConfig:
    domain: str = "cube"
    case: str = "cube_const"
    scheme: str = "central"
    levels: list = field(default_factory=lambda: [(3, 3, 3), (7, 7, 7), (15, 15, 15), (31, 31, 31)])
    amplitude: float = 0.15
    seed: int = 42
    R: float | None = None  # None: max(1, |W|_inf)
    tol: float = 1e-10
    max_iter: int | None = None  # None: 20 * number of unknowns
    output_dir: str = "results"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        try:
            self.domain = Domain.parse(self.domain).value
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        names = [c.name for c in builtin_cases()]
        if self.case not in names:
            raise ConfigError(f"unknown case {self.case!r}; known: {', '.join(names)}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        self.levels = [tuple(int(n) for n in d) for d in self.levels]
        if not self.levels or any(len(d) != 3 or min(d) < 2 for d in self.levels):
            raise ConfigError("levels must be a non-empty list of dims, each >= 2")
        if not (0.0 <= self.amplitude < 0.5):
            raise ConfigError("amplitude must lie in [0, 0.5)")
        if self.R is not None and not (math.isfinite(self.R) and self.R > 0):
            raise ConfigError("R must be positive")
        if not (self.tol > 0):
            raise ConfigError("tol must be positive")
        if self.max_iter is not None and self.max_iter < 1:
            raise ConfigError("max_iter must be positive")
        if not self.output_dir:
            raise ConfigError("output_dir must not be empty")

    # ---------------------------------------------------------------- text
    def dumps(self) -> str:
        vals = {
            "domain": self.domain, "case": self.case, "scheme": self.scheme,
            "levels": format_levels(self.levels), "amplitude": repr(float(self.amplitude)),
            "seed": str(self.seed), "R": "auto" if self.R is None else repr(float(self.R)),
            "tol": repr(float(self.tol)),
            "max_iter": "auto" if self.max_iter is None else str(self.max_iter),
            "output_dir": self.output_dir,
        }
        return "".join(f"{k} = {vals[k]}\n" for k in KEYS)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        raw: dict[str, str] = {}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {n}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in KEYS:
                raise ConfigError(f"line {n}: unknown key {key!r}")
            if key in raw:
                raise ConfigError(f"line {n}: duplicate key {key!r}")
            raw[key] = value
        return cls.from_strings(raw)

    @classmethod
    def from_strings(cls, raw: dict[str, str], base: "ExperimentConfig | None" = None):
        """Build from string values (file entries or CLI flags) on top of ``base``."""
        kw = {f.name: getattr(base, f.name) for f in fields(cls)} if base else {}
        for key, value in raw.items():
            if key not in KEYS:
                raise ConfigError(f"unknown key {key!r}")
            if key == "levels":
                kw[key] = parse_levels(value)
            elif key in ("amplitude", "tol"):
                kw[key] = _float(value)
            elif key == "R":
                kw[key] = None if value.lower() == "auto" else _float(value)
            elif key == "max_iter":
                kw[key] = None if value.lower() == "auto" else int(_float(value))
            elif key == "seed":
                try:
                    kw[key] = int(value)
                except ValueError:
                    raise ConfigError(f"seed must be an integer, got {value!r}") from None
            else:
                kw[key] = value
        return cls(**kw)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.loads(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None


KEYS = tuple(f.name for f in fields(ExperimentConfig))
