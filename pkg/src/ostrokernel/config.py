"""Scenario configuration: loading, validation and Lagrangian construction.

A scenario file is YAML with top-level keys ``name``, ``pipeline``, ``hbar``,
``seed`` and ``cases``.  Each case is a mapping whose keys depend on the
pipeline; every physics constant is spelled out in the file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .errors import ConfigError
from .jet import BUILTIN_NAMES, builtin_lagrangian, expression_lagrangian

__all__ = [
    "PIPELINES",
    "ScenarioConfig",
    "load_config",
    "parse_config",
    "shipped_scenarios",
    "shipped_path",
    "Fields",
]

PIPELINES = (
    "legendre",
    "ostrogradsky",
    "action-orders",
    "stationary-phase",
    "cancellation",
    "normalization",
    "propagate",
)

# parameters that must be given explicitly for each built-in
_REQUIRED = {
    "free": ("m",),
    "harmonic": ("m", "omega"),
    "linear-potential": ("m", "force"),
    "riemann-kinetic": ("m", "alpha"),
    "pais-uhlenbeck": ("omega",),
    "quartic-accel": ("lam", "omega"),
}
_ORDER = {"free": 1, "harmonic": 1, "linear-potential": 1, "riemann-kinetic": 1, "pais-uhlenbeck": 2, "quartic-accel": 2}


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario.  ``cases`` stay plain mappings, read through :class:`Fields`."""

    name: str
    pipeline: str
    hbar: float
    seed: int
    cases: tuple
    source: str = ""


class Fields:
    """Typed accessors over a mapping that report the dotted field path on error."""

    def __init__(self, data, path):
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must be a mapping", field=path)
        self.data = data
        self.path = path

    def _p(self, key):
        return f"{self.path}.{key}" if self.path else key

    def has(self, key):
        return key in self.data

    def raw(self, key, default=...):
        if key not in self.data:
            if default is ...:
                raise ConfigError(f"missing field {self._p(key)}", field=self._p(key))
            return default
        return self.data[key]

    def sub(self, key):
        return Fields(self.raw(key), self._p(key))

    def str(self, key, default=..., choices=None):
        val = self.raw(key, default)
        if not isinstance(val, str):
            raise ConfigError(f"{self._p(key)} must be a string", field=self._p(key))
        if choices is not None and val not in choices:
            raise ConfigError(f"{self._p(key)} must be one of {', '.join(choices)}; got {val!r}", field=self._p(key))
        return val

    def float(self, key, default=..., positive=False):
        val = self.raw(key, default)
        try:
            out = float(val)
        except (TypeError, ValueError):
            raise ConfigError(f"{self._p(key)} must be a number", field=self._p(key)) from None
        if not math.isfinite(out) or (positive and not out > 0):
            raise ConfigError(f"{self._p(key)} must be a {'positive ' if positive else ''}finite number", field=self._p(key))
        return out

    def int(self, key, default=..., minimum=None):
        val = self.raw(key, default)
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"{self._p(key)} must be an integer", field=self._p(key))
        if minimum is not None and val < minimum:
            raise ConfigError(f"{self._p(key)} must be at least {minimum}", field=self._p(key))
        return val

    def floats(self, key, length=None, default=...):
        val = self.raw(key, default)
        if not isinstance(val, (list, tuple)):
            raise ConfigError(f"{self._p(key)} must be a list of numbers", field=self._p(key))
        try:
            out = [float(v) for v in val]
        except (TypeError, ValueError):
            raise ConfigError(f"{self._p(key)} must be a list of numbers", field=self._p(key)) from None
        if length is not None and len(out) != length:
            raise ConfigError(f"{self._p(key)} must have {length} entries", field=self._p(key))
        return out

    def deltas(self, key="deltas", min_points=4):
        """Step list: strictly decreasing, positive, at least ``min_points`` entries."""
        ds = self.floats(key)
        p = self._p(key)
        if not ds:
            raise ConfigError(f"{p} is empty", field=p)
        if len(ds) < min_points:
            raise ConfigError(f"{p} needs at least {min_points} entries for a slope fit", field=p)
        if any(not d > 0 for d in ds):
            raise ConfigError(f"{p} entries must be positive", field=p)
        if any(b >= a for a, b in zip(ds, ds[1:])):
            raise ConfigError(f"{p} must be strictly decreasing", field=p)
        return ds

    def band(self, key):
        lo, hi = self.floats(key, 2)
        if not lo <= hi:
            raise ConfigError(f"{self._p(key)} must be [lo, hi] with lo <= hi", field=self._p(key))
        return lo, hi

    def grid1(self, key="grid"):
        g = self.sub(key)
        n = g.int("n", minimum=2)
        if n & (n - 1):
            raise ConfigError(f"{g._p('n')} must be a power of two", field=g._p("n"))
        box = g.floats("box", 2)
        if not box[0] < box[1]:
            raise ConfigError(f"{g._p('box')} must be [lo, hi] with lo < hi", field=g._p("box"))
        return n, tuple(box)

    def grid2(self, key="grid"):
        g = self.sub(key)
        n = g.raw("n")
        if not (isinstance(n, list) and len(n) == 2 and all(isinstance(m, int) and m >= 2 and not m & (m - 1) for m in n)):
            raise ConfigError(f"{g._p('n')} must be two powers of two", field=g._p("n"))
        box = g.raw("box")
        if not (isinstance(box, list) and len(box) == 2):
            raise ConfigError(f"{g._p('box')} must be two [lo, hi] pairs", field=g._p("box"))
        out = []
        for i, b in enumerate(box):
            if not (isinstance(b, list) and len(b) == 2 and float(b[0]) < float(b[1])):
                raise ConfigError(f"{g._p('box')}[{i}] must be [lo, hi] with lo < hi", field=g._p("box"))
            out.append((float(b[0]), float(b[1])))
        return tuple(n), tuple(out)

    def lagrangian(self, key="lagrangian", order=None):
        """Build the Lagrangian described under ``key``."""
        spec = self.sub(key)
        params = spec.raw("params", {})
        if not isinstance(params, dict):
            raise ConfigError(f"{spec._p('params')} must be a mapping", field=spec._p("params"))
        for k, v in params.items():
            Fields(params, spec._p("params")).float(k)
        if spec.has("expression"):
            got = spec.int("order")
            if got not in (1, 2):
                raise ConfigError(f"{spec._p('order')} must be 1 or 2", field=spec._p("order"))
            try:
                L = expression_lagrangian(spec.str("expression"), got, params, name=spec.str("label", spec.str("expression")))
            except (ValueError, SyntaxError) as exc:
                raise ConfigError(f"{spec._p('expression')}: {exc}", field=spec._p("expression")) from None
        else:
            name = spec.str("name", choices=BUILTIN_NAMES)
            missing = [p for p in _REQUIRED[name] if p not in params]
            if missing:
                f = spec._p("params." + missing[0])
                raise ConfigError(f"missing field {f} (no hidden defaults)", field=f)
            got = _ORDER[name]
            try:
                L = builtin_lagrangian(name, params)
            except ValueError as exc:
                raise ConfigError(f"{spec._p('params')}: {exc}", field=spec._p("params")) from None
        if order is not None and got != order:
            raise ConfigError(f"{self._p(key)} must be of order {order}", field=self._p(key))
        return L


def parse_config(data, source="") -> ScenarioConfig:
    """Validate a decoded scenario mapping."""
    top = Fields(data, "")
    name = top.str("name")
    pipeline = top.str("pipeline", choices=PIPELINES)
    hbar = top.float("hbar", positive=True)
    seed = top.int("seed", minimum=0)
    cases = top.raw("cases")
    if not isinstance(cases, list) or not cases:
        raise ConfigError("cases must be a non-empty list", field="cases")
    for i, c in enumerate(cases):
        f = Fields(c, f"cases[{i}]")
        f.str("label")
    labels = [c["label"] for c in cases]
    if len(set(labels)) != len(labels):
        raise ConfigError("case labels must be unique", field="cases")
    return ScenarioConfig(name, pipeline, hbar, seed, tuple(cases), source)


def load_config(path_or_name) -> ScenarioConfig:
    """Load a scenario from a file path or the name of a shipped scenario."""
    path = Path(path_or_name)
    if not path.exists():
        shipped = shipped_path(str(path_or_name))
        if shipped is None:
            raise ConfigError(f"no such config file or shipped scenario: {path_or_name}", field="config")
        path = shipped
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}", field="config") from None
    return parse_config(data, str(path))


def _scenario_dir():
    return resources.files("ostrokernel") / "scenarios"


def shipped_scenarios():
    """Sorted names of the scenarios packaged with the library."""
    return sorted(p.name[: -len(".yaml")] for p in _scenario_dir().iterdir() if p.name.endswith(".yaml"))


def shipped_path(name):
    p = _scenario_dir() / f"{name}.yaml"
    return Path(str(p)) if p.is_file() else None
