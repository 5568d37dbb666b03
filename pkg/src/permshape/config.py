"""Experiment configuration: sectioned key-value files with strict key checking."""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace

from .errors import ConfigError, DomainError
from .weights import WeightModel

ENSEMBLES = ("canonical", "grand_canonical")

_SCHEMA = {
    "model": ("family", "alpha", "j", "perturbation_c", "perturbation_beta", "theta", "table"),
    "ensemble": ("kind", "n", "t"),
    "grid": ("cuts", "x"),
    "run": ("samples", "seed", "workers", "out", "suite"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    model: WeightModel = field(default_factory=lambda: WeightModel.polylog(1.0))
    ensemble: str = "canonical"
    n: int | None = 1000
    t: float | None = None
    samples: int = 200
    cuts: tuple[int, ...] = ()
    x: tuple[float, ...] = ()
    seed: int = 0
    workers: int = 1
    out: str = "out"
    suite: str = "quick"

    def __post_init__(self):
        if self.ensemble not in ENSEMBLES:
            raise DomainError(f"ensemble must be one of {ENSEMBLES}")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def emit(self) -> str:
        lines = ["[model]"]
        for k, v in self.model.to_dict().items():
            lines.append(f"{k} = {_fmt(v)}")
        lines += ["", "[ensemble]", f"kind = {self.ensemble}"]
        if self.n is not None:
            lines.append(f"n = {self.n}")
        if self.t is not None:
            lines.append(f"t = {self.t!r}")
        lines += ["", "[grid]", f"cuts = {_fmt(list(self.cuts))}", f"x = {_fmt(list(self.x))}"]
        lines += ["", "[run]", f"samples = {self.samples}", f"seed = {self.seed}", f"workers = {self.workers}",
                  f"out = {self.out}", f"suite = {self.suite}", ""]
        return "\n".join(lines)


def _fmt(v) -> str:
    if isinstance(v, list):
        return ", ".join(_fmt(e) for e in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _locate(lines: list[str], section: str | None, key: str | None) -> tuple[int, int]:
    current = None
    for i, raw in enumerate(lines, start=1):
        s = raw.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return i, raw.index("[") + 1
            continue
        if current == section and key is not None:
            km = re.match(r"\s*([^=:\s]+)\s*[=:]", raw)
            if km and km.group(1).lower() == key:
                return i, km.start(1) + 1
    return 0, 0


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def parse_config(text: str) -> ExperimentConfig:
    """Parse configuration text; every failure raises ConfigError with line and column."""
    lines = text.splitlines()
    cp = configparser.ConfigParser(interpolation=None, strict=True, default_section="__none__")
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("key outside any section", e.lineno, 1) from None
    except configparser.ParsingError as e:
        lineno = e.errors[0][0] if e.errors else 0
        raise ConfigError("malformed line", lineno, 1) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as e:
        raise ConfigError(str(e).split(":")[-1].strip() or "duplicate entry", e.lineno or 0, 1) from None

    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", *_locate(lines, section, None))
        for key in cp[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", *_locate(lines, section, key))

    def get(section, key, conv, default=None):
        if not cp.has_option(section, key):
            return default
        try:
            return conv(cp.get(section, key).strip())
        except (ValueError, TypeError) as e:
            raise ConfigError(f"bad value for {section}.{key}: {e}", *_locate(lines, section, key)) from None

    try:
        md: dict = {"family": get("model", "family", str, "polylog")}
        for key, conv in (("alpha", float), ("j", int), ("perturbation_c", float), ("perturbation_beta", float),
                          ("theta", float), ("table", _floats)):
            val = get("model", key, conv)
            if val is not None:
                md[key] = val
        if md["family"] == "polylog":
            md.setdefault("alpha", 1.0)
        model = WeightModel.from_dict(md)
    except (DomainError, KeyError) as e:
        raise ConfigError(f"invalid model: {e}", *_locate(lines, "model", None)) from None

    kw = dict(model=model,
              ensemble=get("ensemble", "kind", str, "canonical"),
              n=get("ensemble", "n", int),
              t=get("ensemble", "t", float),
              samples=get("run", "samples", int, 200),
              cuts=get("grid", "cuts", _ints, ()),
              x=get("grid", "x", _floats, ()),
              seed=get("run", "seed", int, 0),
              workers=get("run", "workers", int, 1),
              out=get("run", "out", str, "out"),
              suite=get("run", "suite", str, "quick"))
    try:
        return ExperimentConfig(**kw)
    except DomainError as e:
        raise ConfigError(str(e), *_locate(lines, "ensemble", None)) from None


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
