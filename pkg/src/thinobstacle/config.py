"""Flat key=value configuration files with dotted keys.

Example::

    problem.n = 2
    problem.m = 257
    problem.A = var_diag:3
    problem.drift = constant:1,0
    problem.drift_p = 8
    boundary.kind = humps
    boundary.dimple = 0.6
    solver.relax = 1.95
    analysis.gauge_M = 0.005
    output.dir = out

Unknown keys are rejected; values are parsed as int, float, bool, comma
list, or string, in that order of preference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .fb import ClassifyConfig
from .grid import Grid
from .presets import boundary_data, coefficient_preset, drift_spec
from .solver import SignoriniProblem

__all__ = ["RunConfig", "parse_config", "load_config"]

_KNOWN_PREFIXES = ("problem.", "boundary.", "solver.", "analysis.",
                   "output.", "seed")


def _parse_value(raw: str):
    raw = raw.strip()
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    if "," in raw:
        parts = [p.strip() for p in raw.split(",")]
        try:
            return tuple(float(p) for p in parts)
        except ValueError:
            return tuple(parts)
    return raw


def parse_config(text: str) -> dict:
    """Parse flat key=value text; '#' starts a comment."""
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if not key.startswith(_KNOWN_PREFIXES):
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _parse_value(raw)
    return out


def load_config(path) -> "RunConfig":
    with open(path, encoding="utf-8") as fh:
        return RunConfig(parse_config(fh.read()))


@dataclass
class RunConfig:
    """Typed access to a parsed configuration."""

    raw: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.raw.get(key, default)

    @property
    def n(self) -> int:
        return int(self.get("problem.n", 2))

    @property
    def m(self) -> int:
        return int(self.get("problem.m", 65))

    @property
    def seed(self) -> int:
        return int(self.get("seed", 0))

    @property
    def output_dir(self) -> str:
        return str(self.get("output.dir", "."))

    def grid(self) -> Grid:
        return Grid(self.n, self.m)

    def coefficients(self):
        return coefficient_preset(str(self.get("problem.A", "identity")),
                                  self.n)

    def boundary(self):
        kind = str(self.get("boundary.kind", "regular"))
        params = {}
        for key, val in self.raw.items():
            if key.startswith("boundary.") and key != "boundary.kind":
                params[key.split(".", 1)[1]] = val
        if "nu" in params:
            params["nu"] = np.atleast_1d(np.asarray(params["nu"], dtype=float))
        if "x0" in params:
            params["x0"] = np.asarray(params["x0"], dtype=float)
        return boundary_data(kind, self.n, **params)

    def problem(self) -> SignoriniProblem:
        try:
            return SignoriniProblem(
                A=self.coefficients(),
                grid=self.grid(),
                boundary=self.boundary(),
                drift=drift_spec(self.get("problem.drift"), self.n),
                drift_p=float(self.get("problem.drift_p", 10.0)),
                name=str(self.get("problem.A", "identity")),
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

    def solver_kwargs(self) -> dict:
        kw = {
            "tol": float(self.get("solver.tol", 1e-10)),
            "max_iter": int(self.get("solver.max_iter", 200_000)),
            "relax": float(self.get("solver.relax", 1.5)),
            "warm_start": bool(self.get("solver.warm_start", True)),
        }
        backend = self.get("solver.backend")
        if backend:
            kw["backend"] = str(backend)
        return kw

    def classify_config(self) -> ClassifyConfig:
        kw = {}
        for name in ("kappa0", "alpha", "gauge_M", "band", "min_frequency",
                     "r_lo", "r_hi", "density_factor"):
            val = self.get(f"analysis.{name}")
            if val is not None:
                kw[name] = float(val)
        order = self.get("analysis.sphere_order")
        if order is not None:
            kw["sphere_order"] = int(order)
        return ClassifyConfig(**kw)
