"""Scenario configuration files.

Configs are INI files.  Every key lives in a fixed section; keys that are
omitted take the scenario's default.  A minimal file::

    [scenario]
    name = rate-sandwich

    [model]
    n = 3
    m = 0.2

    [profile]
    gamma = 2.75

See ``docs/config.md`` for the full schema.
"""
from configparser import ConfigParser, DuplicateOptionError, DuplicateSectionError
from configparser import Error as _IniError
from dataclasses import dataclass, field
import hashlib
import json
import re

from .errors import ConfigParseError, ConfigValidationError, FDELabError
from .model import validate_params

SCENARIOS = (
    "steady-oracle",
    "extinction-oracle",
    "rate-sandwich",
    "comparison",
    "cap-sweep",
    "collar-l1",
    "initial-trace",
    "asymptotic-mu0",
    "asymptotic-blowup",
    "oscillation",
    "multipoint-3d",
    "l1-contraction",
)


def _floats(text):
    text = text.strip()
    if not text:
        return ()
    return tuple(float(x) for x in re.split(r"[,\s]+", text) if x)


def _points(text):
    # "0.3 0 0; -0.3 0 0"
    return tuple(_floats(chunk) for chunk in text.split(";") if chunk.strip())


def _optional_float(text):
    text = text.strip().lower()
    return None if text in ("", "none", "auto") else float(text)


# key -> (section, parser)
SCHEMA = {
    "name": ("scenario", str),
    "seed": ("scenario", int),
    "n": ("model", int),
    "m": ("model", float),
    "mu0": ("model", float),
    "r_min": ("mesh", float),
    "R": ("mesh", float),
    "N": ("mesh", int),
    "rho": ("mesh", float),
    "refinements": ("mesh", int),
    "L": ("mesh", float),
    "cells": ("mesh", int),
    "lambda": ("profile", _optional_float),
    "gamma": ("profile", float),
    "delta1": ("profile", float),
    "inner": ("profile", str),
    "cap": ("profile", float),
    "caps": ("profile", _floats),
    "alpha1": ("profile", _optional_float),
    "radii": ("profile", _floats),
    "c": ("profile", float),
    "theta0": ("profile", float),
    "points": ("profile", _points),
    "gammas": ("profile", _floats),
    "pairs": ("profile", int),
    "T": ("time", float),
    "dt0": ("time", float),
    "dt_max": ("time", _optional_float),
    "snapshots": ("time", _floats),
    "cross_T": ("time", float),
    "rtol": ("checks", float),
    "order_ratio": ("checks", float),
    "slack": ("checks", float),
    "decade_ratio": ("checks", float),
    "collar_delta": ("checks", float),
    "collar_alpha": ("checks", float),
    "trace_delta": ("checks", _optional_float),
    "K": ("checks", _floats),
    "tol_lo": ("checks", float),
    "tol_hi": ("checks", float),
}

SECTIONS = ("scenario", "model", "mesh", "profile", "time", "checks")

_COMMON = {"seed": 0, "n": 3, "m": 0.2, "mu0": 1.0, "R": 1.0, "rho": 1.2,
           "dt_max": None}

DEFAULTS = {
    "steady-oracle": dict(r_min=1e-4, N=256, refinements=3, c=1.0, T=1.0, dt0=1e-3,
                          snapshots=(0.1, 0.25, 0.5, 0.75, 1.0),
                          rtol=0.01, order_ratio=3.0),
    "extinction-oracle": dict(r_min=1e-3, N=256, theta0=1.0, T=4.0, dt0=1e-4,
                              snapshots=(0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0),
                              rtol=0.02),
    "rate-sandwich": dict(r_min=1e-4, N=256, **{"lambda": 1.0}, gamma=2.75, delta1=0.1,
                          inner="dirichlet-power", T=1.0, dt0=1e-5,
                          snapshots=(0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0), slack=0.15),
    "comparison": dict(r_min=1e-4, N=256, pairs=10, **{"lambda": 1.0}, gamma=2.75,
                       delta1=0.1, inner="dirichlet-power", T=1.0, dt0=1e-5,
                       snapshots=(0.001, 0.01, 0.1, 0.5, 1.0), rtol=1e-10),
    "cap-sweep": dict(r_min=1e-6, N=256, **{"lambda": 1.0}, gamma=2.75, delta1=0.1,
                      inner="capped", caps=(1e2, 1e3, 1e4, 1e5), T=1.0, dt0=1e-4,
                      snapshots=(0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0),
                      rtol=1e-10, decade_ratio=5.0),
    "collar-l1": dict(r_min=1e-6, N=256, **{"lambda": 1.0}, gamma=2.75, delta1=0.1,
                      inner="capped", cap=1e6, T=1.0, dt0=1e-4,
                      snapshots=(0.001, 0.01, 0.05, 0.1, 0.2, 0.5, 1.0),
                      collar_delta=0.1, collar_alpha=3.0, slack=0.05),
    "initial-trace": dict(r_min=1e-6, N=256, **{"lambda": 1.0}, gamma=2.75, delta1=0.1,
                          inner="capped", cap=1e6, T=0.1, dt0=1e-6,
                          snapshots=(1e-4, 1e-3, 1e-2, 1e-1), trace_delta=None,
                          rtol=1e-3),
    "asymptotic-mu0": dict(r_min=1e-8, N=512, **{"lambda": None}, gamma=2.75, delta1=0.1,
                           inner="dirichlet-power", T=50.0, dt0=1e-6,
                           snapshots=(1, 2, 5, 10, 20, 30, 37.5, 40, 45, 50),
                           K=(), tol_lo=0.05, tol_hi=10.0),
    "asymptotic-blowup": dict(r_min=1e-8, N=512, **{"lambda": None}, gamma=6.0, delta1=0.1,
                              inner="dirichlet-power", T=50.0, dt0=1e-6,
                              snapshots=(1, 2, 5, 10, 20, 30, 37.5, 40, 45, 50),
                              K=(), tol_lo=0.05, tol_hi=10.0),
    "oscillation": dict(r_min=1e-8, N=512, alpha1=6.0, radii=(0.1, 0.01, 0.001),
                        T=100.0, dt0=1e-6, snapshots=(), K=()),
    "multipoint-3d": dict(L=1.0, cells=32, r_min=1e-4, N=256, gamma=2.75, delta1=0.3,
                          **{"lambda": None}, cap=1e2,
                          points=((0.3, 0.0, 0.0), (-0.3, 0.0, 0.0)),
                          gammas=(2.75, 2.75), T=0.5, cross_T=0.1, dt0=1e-5,
                          snapshots=(0.05, 0.1, 0.2, 0.3, 0.4, 0.5), rtol=0.05),
    "l1-contraction": dict(r_min=1e-6, R=50.0, N=256, **{"lambda": 1.0}, gamma=2.75,
                           delta1=0.1, inner="capped", cap=1e6, T=10.0, dt0=1e-4,
                           snapshots=(), rtol=1e-8),
}


@dataclass(frozen=True)
class Scenario:
    name: str
    params: object
    settings: dict = field(default_factory=dict)
    source: str = None

    def __getitem__(self, key):
        return self.settings[key]

    def get(self, key, default=None):
        return self.settings.get(key, default)

    def canonical(self):
        """JSON-ready dict of the fully resolved settings."""
        return {"name": self.name, "settings": _jsonify(self.settings)}

    def config_hash(self):
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_value(self, key, value):
        """Copy with one setting replaced (and re-validated)."""
        if key not in SCHEMA or key == "name":
            raise ConfigValidationError(f"unknown or fixed setting {key!r}", field=key)
        settings = dict(self.settings)
        settings[key] = _coerce(key, value)
        return build_scenario(self.name, settings, self.source)


def _jsonify(v):
    if isinstance(v, tuple):
        return [_jsonify(x) for x in v]
    return v


def _coerce(key, value):
    _, parse = SCHEMA[key]
    if isinstance(value, str):
        return parse(value)
    if parse is int:
        if float(value) != int(value):
            raise ConfigValidationError(f"expected an integer, got {value!r}", field=key)
        return int(value)
    if parse in (float, _optional_float):
        return None if value is None else float(value)
    if parse is _floats:
        return tuple(float(x) for x in value)
    return value


def _key_lines(text):
    lines = {}
    section = None
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
        elif "=" in s and not s.startswith(("#", ";")):
            key = s.split("=", 1)[0].strip()
            lines[(section, key)] = i
    return lines


def parse_config_text(text, source=None):
    cp = ConfigParser(interpolation=None)
    cp.optionxform = str  # keys are case sensitive (R vs r_min)
    try:
        cp.read_string(text, source=source or "<config>")
    except (DuplicateOptionError, DuplicateSectionError) as exc:
        raise ConfigParseError(str(exc), line=getattr(exc, "lineno", None)) from exc
    except _IniError as exc:
        raise ConfigParseError(str(exc), line=getattr(exc, "lineno", None)) from exc
    where = _key_lines(text)
    raw = {}
    for section in cp.sections():
        if section not in SECTIONS:
            raise ConfigParseError(f"unknown section [{section}]",
                                   line=_section_line(text, section))
        for key, value in cp.items(section):
            line = where.get((section, key))
            if key not in SCHEMA:
                raise ConfigParseError(f"unknown key in [{section}]", line=line, field=key)
            if SCHEMA[key][0] != section:
                raise ConfigParseError(
                    f"key belongs in [{SCHEMA[key][0]}], not [{section}]",
                    line=line, field=key)
            try:
                raw[key] = SCHEMA[key][1](value)
            except ValueError as exc:
                raise ConfigParseError(f"cannot parse {value!r}: {exc}",
                                       line=line, field=key) from exc
    name = raw.pop("name", None)
    if name is None:
        raise ConfigParseError("missing [scenario] name", field="name")
    if name not in SCENARIOS:
        raise ConfigParseError(
            f"unknown scenario {name!r}; expected one of {', '.join(SCENARIOS)}",
            line=where.get(("scenario", "name")), field="name")
    return build_scenario(name, raw, source)


def _section_line(text, section):
    for i, line in enumerate(text.splitlines(), start=1):
        if line.strip() == f"[{section}]":
            return i
    return None


def parse_config(path):
    """Read and validate a scenario config file."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config_text(text, source=str(path))


def build_scenario(name, overrides, source=None):
    if name not in SCENARIOS:
        raise ConfigParseError(f"unknown scenario {name!r}", field="name")
    settings = dict(_COMMON)
    settings.update(DEFAULTS[name])
    settings.update(overrides)
    # one canonical type per key, so equal values hash equally
    settings = {k: _coerce(k, v) for k, v in settings.items()}
    try:
        params = validate_params(settings["n"], settings["m"], settings["mu0"])
    except FDELabError as exc:
        raise ConfigValidationError(str(exc), field="m" if "m=" in str(exc) else "n") from exc
    _validate(name, params, settings)
    return Scenario(name, params, settings, source)


def _validate(name, p, s):
    low = 2.0 / (1.0 - p.m)
    if "gamma" in s and s.get("gamma") is not None and name not in ("steady-oracle",
                                                                    "extinction-oracle"):
        if not s["gamma"] > low:
            raise ConfigValidationError(
                f"gamma={s['gamma']} violates gamma > 2/(1-m) = {low:.6g}", field="gamma")
    for g in s.get("gammas", ()) or ():
        if not g > low:
            raise ConfigValidationError(
                f"gamma={g} violates gamma > 2/(1-m) = {low:.6g}", field="gammas")
    if not 0 < s["r_min"] < s["R"]:
        raise ConfigValidationError("need 0 < r_min < R", field="r_min")
    if s["N"] < 16:
        raise ConfigValidationError("N must be >= 16", field="N")
    if not 1.0 < s["rho"] <= 1.2:
        raise ConfigValidationError("rho must lie in (1, 1.2]", field="rho")
    if not s["T"] > 0:
        raise ConfigValidationError("T must be positive", field="T")
    if s.get("inner") not in (None, "capped", "dirichlet-power"):
        raise ConfigValidationError("inner must be 'capped' or 'dirichlet-power'", field="inner")
    if "delta1" in s and not 0 < s["delta1"] < min(1.0, s["R"] / 3.0):
        raise ConfigValidationError("delta1 must lie in (0, min(1, R/3))", field="delta1")
    if name == "cap-sweep":
        caps = s["caps"]
        if not caps or any(b <= a for a, b in zip(caps, caps[1:])) or caps[0] <= p.mu0:
            raise ConfigValidationError("caps must be increasing and exceed mu0", field="caps")
    if name == "oscillation":
        a1 = s.get("alpha1")
        if a1 is not None and not a1 > (p.n - 2) / p.m:
            raise ConfigValidationError(
                f"alpha1={a1} violates alpha1 > (n-2)/m = {(p.n - 2) / p.m:.6g}", field="alpha1")
        r = s["radii"]
        if len(r) < 2 or any(b >= a for a, b in zip(r, r[1:])):
            raise ConfigValidationError("radii must hold >= 2 decreasing values", field="radii")
    if name == "multipoint-3d" and p.n != 3:
        raise ConfigValidationError("the Cartesian solver is three-dimensional", field="n")
    if s.get("K"):
        if len(s["K"]) != 2 or not 0 < s["K"][0] < s["K"][1]:
            raise ConfigValidationError("K must be two radii a < b", field="K")
