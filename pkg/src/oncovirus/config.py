"""INI run/sweep configuration with a typed schema.

Sections: ``model``, ``grid``, ``numerics``, ``initial``, ``output`` and, for
sweeps, ``sweep``.  Overrides ``section.key=value`` (or a bare ``key`` when
it is unique across sections) are applied after the file is read.  Every
error names the offending ``[section] key``.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, InputError
from .integrator import default_dt
from .kernel import age_ladder
from .model import Gompertz, GridSpec, HollingII, Logistic, MassAction, ModelParams

__all__ = ["RunConfig", "SweepConfig", "SweepAxis", "InitialSpec", "load_config", "load_sweep", "SCHEMA"]

REQUIRED = object()


def _float(s: str) -> float:
    s = s.strip().lower()
    if s in ("pi", "π"):
        return math.pi
    return float(s)


def _opt_float(s: str) -> Optional[float]:
    return None if s.strip() in ("", "auto", "none") else _float(s)


def _int(s: str) -> int:
    return int(s.strip())


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> tuple[float, ...]:
    parts = [p for p in s.replace(";", ",").split(",") if p.strip()]
    return tuple(_float(p) for p in parts)


def _pair(s: str) -> tuple[float, float]:
    vals = _floats(s)
    if len(vals) == 1:
        return (vals[0], vals[0])
    if len(vals) == 2:
        return vals
    raise ValueError("expected one value or two comma-separated values")


def _choice(*options: str) -> Callable[[str], str]:
    def parse(s: str) -> str:
        v = s.strip().lower()
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return v

    return parse


def _text(s: str) -> str:
    return s.strip()


# section -> key -> (parser, default string or REQUIRED)
SCHEMA: dict[str, dict[str, tuple]] = {
    "model": {
        "growth": (_choice("logistic", "gompertz"), "logistic"),
        "b": (_float, REQUIRED),
        "d": (_float, REQUIRED),
        "eps": (_float, "1e-8"),
        "incidence": (_choice("holling", "mass_action"), "holling"),
        "beta": (_float, REQUIRED),
        "h": (_float, "0"),
        "alpha": (_float, REQUIRED),
        "kappa": (_float, REQUIRED),
        "tau": (_float, REQUIRED),
        "d1": (_float, REQUIRED),
        "d2": (_float, REQUIRED),
    },
    "grid": {
        "n_points": (_int, "129"),
        "length": (_float, "pi"),
        "eta1": (_pair, "0"),
        "eta2": (_pair, "0"),
    },
    "numerics": {
        "dt": (_opt_float, "auto"),
        "t_end": (_float, "100"),
        "sample_every": (_opt_float, "auto"),
        "snapshot_times": (_floats, ""),
        "window": (_opt_float, "auto"),
        "kernel_route": (_choice("auto", "spectral", "semigroup"), "auto"),
        "kernel_modes": (_int, "64"),
        "kernel_substeps": (_int, "4"),
        "coefficient_mode": (_choice("exact", "paper"), "exact"),
        "backend": (_choice("auto", "cython", "python"), "auto"),
        "strict": (_bool, "true"),
    },
    "initial": {
        "u_kind": (_choice("constant", "cosine", "table"), "constant"),
        "u_mean": (_float, "0.5"),
        "u_amplitude": (_float, "0"),
        "u_mode": (_int, "1"),
        "u_table": (_floats, ""),
        "v_kind": (_choice("constant", "cosine", "table"), "constant"),
        "v_mean": (_float, "0.1"),
        "v_amplitude": (_float, "0"),
        "v_mode": (_int, "1"),
        "v_table": (_floats, ""),
    },
    "output": {
        "dir": (_text, "out"),
        "dump_kernel": (_bool, "false"),
    },
    "sweep": {
        "param1": (_text, ""),
        "min1": (_opt_float, ""),
        "max1": (_opt_float, ""),
        "count1": (_int, "2"),
        "param2": (_text, ""),
        "min2": (_opt_float, ""),
        "max2": (_opt_float, ""),
        "count2": (_int, "2"),
        "simulate": (_bool, "false"),
    },
}

SWEEPABLE = ("b", "d", "beta", "h", "alpha", "kappa", "tau", "d1", "d2")
RUN_SECTIONS = ("model", "grid", "numerics", "initial", "output")


def _where(section: str, key: str) -> str:
    return f"[{section}] {key}"


def _resolve_key(dotted: str) -> tuple[str, str]:
    if "." in dotted:
        section, key = dotted.split(".", 1)
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigurationError(f"unknown override key {dotted!r}")
        return section, key
    hits = [s for s, keys in SCHEMA.items() if dotted in keys]
    if len(hits) != 1:
        raise ConfigurationError(
            f"override key {dotted!r} is " + ("unknown" if not hits else f"ambiguous (sections: {', '.join(hits)})")
        )
    return hits[0], dotted


def read_raw(path: Optional[str], overrides=(), sections=RUN_SECTIONS) -> dict[str, dict[str, str]]:
    """Return ``{section: {key: text}}`` after overrides, defaults filled in."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path!r}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigurationError(f"malformed config {path!r}: {exc}") from exc
    raw: dict[str, dict[str, str]] = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigurationError(f"unknown section [{section}]")
        for key, value in cp.items(section):
            if key not in SCHEMA[section]:
                raise ConfigurationError(f"unknown key {_where(section, key)}")
            raw.setdefault(section, {})[key] = value
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} must look like key=value")
        dotted, value = item.split("=", 1)
        section, key = _resolve_key(dotted.strip())
        raw.setdefault(section, {})[key] = value.strip()
    full: dict[str, dict[str, str]] = {}
    for section in sections:
        full[section] = {}
        for key, (_, default) in SCHEMA[section].items():
            if key in raw.get(section, {}):
                full[section][key] = raw[section][key]
            elif default is REQUIRED:
                raise ConfigurationError(f"missing required key {_where(section, key)}")
            else:
                full[section][key] = default
    return full


def _typed(raw: dict[str, dict[str, str]]) -> dict[str, dict]:
    out: dict[str, dict] = {}
    for section, keys in raw.items():
        out[section] = {}
        for key, text in keys.items():
            parser = SCHEMA[section][key][0]
            try:
                out[section][key] = parser(text)
            except ValueError as exc:
                raise ConfigurationError(f"{_where(section, key)} = {text!r}: {exc}") from None
    return out


@dataclass(frozen=True)
class InitialSpec:
    kind: str
    mean: float
    amplitude: float
    mode: int
    table: tuple[float, ...]

    def field(self, grid: GridSpec) -> np.ndarray:
        if self.kind == "constant":
            return np.full(grid.n_points, self.mean)
        if self.kind == "cosine":
            return self.mean + self.amplitude * np.cos(self.mode * math.pi * grid.x / grid.length)
        return np.asarray(self.table, dtype=float)


@dataclass(frozen=True)
class Numerics:
    dt: float
    t_end: float
    sample_every: Optional[float]
    snapshot_times: tuple[float, ...]
    window: Optional[float]
    kernel_route: str
    kernel_modes: int
    kernel_substeps: int
    coefficient_mode: str
    backend: str
    strict: bool


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    grid: GridSpec
    numerics: Numerics
    u0: InitialSpec
    v0: InitialSpec
    output_dir: str
    dump_kernel: bool
    raw: dict = field(repr=False, compare=False, default_factory=dict)

    @property
    def ages(self) -> np.ndarray:
        return age_ladder(self.params.tau, self.numerics.dt)

    def echo(self) -> str:
        """The effective configuration as INI text (defaults included)."""
        return dump_raw(self.raw)

    def with_overrides(self, overrides) -> "RunConfig":
        return build_run_config(read_raw_from(self.raw, overrides))


def dump_raw(raw: dict[str, dict[str, str]]) -> str:
    lines = []
    for section in SCHEMA:
        if section not in raw:
            continue
        lines.append(f"[{section}]")
        lines.extend(f"{key} = {raw[section][key]}" for key in SCHEMA[section] if key in raw[section])
        lines.append("")
    return "\n".join(lines)


def read_raw_from(raw: dict, overrides) -> dict:
    new = {s: dict(keys) for s, keys in raw.items()}
    for item in overrides:
        dotted, value = item.split("=", 1)
        section, key = _resolve_key(dotted.strip())
        new.setdefault(section, {})[key] = value.strip()
    return new


def build_run_config(raw: dict[str, dict[str, str]]) -> RunConfig:
    cfg = _typed({s: raw[s] for s in RUN_SECTIONS})
    m, g, nm, ini, out = (cfg[s] for s in RUN_SECTIONS)

    def guard(section, key, fn):
        try:
            return fn()
        except InputError as exc:
            raise ConfigurationError(f"{_where(section, key)}: {exc}") from None

    if m["growth"] == "logistic":
        growth = guard("model", "growth", lambda: Logistic(m["b"], m["d"]))
    else:
        growth = guard("model", "growth", lambda: Gompertz(m["b"], m["d"], m["eps"]))
    if m["incidence"] == "holling":
        incidence = guard("model", "incidence", lambda: HollingII(m["beta"], m["h"]))
    else:
        incidence = guard("model", "incidence", lambda: MassAction(m["beta"]))
    params = guard(
        "model",
        "parameters",
        lambda: ModelParams(m["d1"], m["d2"], m["alpha"], m["kappa"], m["tau"], growth, incidence, strict=nm["strict"]),
    )
    grid = guard("grid", "n_points", lambda: GridSpec(g["length"], g["n_points"], g["eta1"], g["eta2"]))

    dt = nm["dt"] if nm["dt"] is not None else default_dt(params.tau)
    if not dt > 0:
        raise ConfigurationError(f"{_where('numerics', 'dt')}: must be > 0, got {dt!r}")
    if params.tau > 0:
        q = round(params.tau / dt)
        if q < 1 or not math.isclose(q * dt, params.tau, rel_tol=1e-9, abs_tol=1e-12):
            raise ConfigurationError(
                f"{_where('numerics', 'dt')}: tau={params.tau!r} is not an integer multiple of dt={dt!r}"
            )
    if not nm["t_end"] > 0:
        raise ConfigurationError(f"{_where('numerics', 't_end')}: must be > 0")
    if nm["sample_every"] is not None and not nm["sample_every"] > 0:
        raise ConfigurationError(f"{_where('numerics', 'sample_every')}: must be > 0")
    for key in ("kernel_modes", "kernel_substeps"):
        if nm[key] < 1:
            raise ConfigurationError(f"{_where('numerics', key)}: must be >= 1")
    if nm["kernel_route"] == "spectral" and (not params.alpha_is_constant or not grid.is_neumann_v):
        raise ConfigurationError(f"{_where('numerics', 'kernel_route')}: spectral needs eta2 = 0")
    if nm["kernel_route"] != "semigroup" and nm["kernel_modes"] < 8:
        raise ConfigurationError(f"{_where('numerics', 'kernel_modes')}: must be >= 8")
    numerics = Numerics(dt=dt, **{k: v for k, v in nm.items() if k != "dt"})

    def initial(prefix):
        spec = InitialSpec(
            ini[f"{prefix}_kind"], ini[f"{prefix}_mean"], ini[f"{prefix}_amplitude"], ini[f"{prefix}_mode"], ini[f"{prefix}_table"]
        )
        if spec.kind == "table" and len(spec.table) != grid.n_points:
            raise ConfigurationError(
                f"{_where('initial', prefix + '_table')}: has {len(spec.table)} values, grid has {grid.n_points}"
            )
        if np.any(spec.field(grid) < 0):
            raise ConfigurationError(f"{_where('initial', prefix + '_kind')}: initial data must be nonnegative")
        return spec

    return RunConfig(
        params, grid, numerics, initial("u"), initial("v"), out["dir"], out["dump_kernel"], raw={s: raw[s] for s in RUN_SECTIONS}
    )


def load_config(path: Optional[str], overrides=()) -> RunConfig:
    return build_run_config(read_raw(path, overrides))


@dataclass(frozen=True)
class SweepAxis:
    name: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class SweepConfig:
    base: RunConfig
    axes: tuple[SweepAxis, ...]
    simulate: bool
    raw: dict = field(repr=False, compare=False, default_factory=dict)

    def points(self) -> list[dict[str, float]]:
        """Grid points in axis-major order (first axis varies slowest)."""
        pts: list[dict[str, float]] = [{}]
        for axis in self.axes:
            pts = [{**p, axis.name: v} for p in pts for v in axis.values]
        return pts

    def echo(self) -> str:
        return dump_raw(self.raw)


def load_sweep(path: Optional[str], overrides=()) -> SweepConfig:
    raw = read_raw(path, overrides, sections=RUN_SECTIONS + ("sweep",))
    base = build_run_config(raw)
    sw = _typed({"sweep": raw["sweep"]})["sweep"]
    axes = []
    for i in (1, 2):
        name = sw[f"param{i}"]
        if not name:
            continue
        if name not in SWEEPABLE:
            raise ConfigurationError(f"{_where('sweep', f'param{i}')}: {name!r} is not sweepable ({', '.join(SWEEPABLE)})")
        lo, hi, count = sw[f"min{i}"], sw[f"max{i}"], sw[f"count{i}"]
        if lo is None or hi is None:
            raise ConfigurationError(f"{_where('sweep', f'min{i}')}: min{i} and max{i} are required for {name}")
        if count < 2:
            raise ConfigurationError(f"{_where('sweep', f'count{i}')}: must be >= 2, got {count}")
        axes.append(SweepAxis(name, tuple(float(v) for v in np.linspace(lo, hi, count))))
    if not axes:
        raise ConfigurationError(f"{_where('sweep', 'param1')}: at least one swept parameter is required")
    if len(axes) == 2 and axes[0].name == axes[1].name:
        raise ConfigurationError(f"{_where('sweep', 'param2')}: duplicates param1")
    return SweepConfig(base, tuple(axes), sw["simulate"], raw=raw)


def point_config(base: RunConfig, point: dict[str, float]) -> RunConfig:
    """The base run with swept model keys replaced (dt re-derived if automatic)."""
    overrides = [f"model.{k}={v!r}" for k, v in point.items()]
    return base.with_overrides(overrides)
