"""Run configuration: a commented YAML file parsed into frozen dataclasses.

Example::

    grid: {L: 80pi, n: 4096}
    equation: {form: A, alpha: 1.0, mu: [0.0, 1.0]}
    initial_data: {kind: admissible, parameters: {c0: 0.01}}
    stepper: {scheme: ifrk4, dt: 1.0e-3, t_end: 0.1}
    diagnostics: {cadence: 10, delta_budget: 0.05}
    output: {directory: runs/example, snapshot_every: 0}
    seed: 0
"""

from __future__ import annotations

import cmath
import logging
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError

log = logging.getLogger(__name__)

DEFAULT_L = 80 * math.pi
DATA_KINDS = ("soliton", "admissible", "gaussian", "file")
_PI_RE = re.compile(r"^\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?\d+)?)?\s*\*?\s*pi\s*$")


@dataclass(frozen=True)
class GridSection:
    L: float = DEFAULT_L
    n: int = 4096
    edge_tol: float = 1e-5


@dataclass(frozen=True)
class EquationSection:
    form: str = "A"
    alpha: float = 1.0
    mu: tuple[float, float] = (0.0, 1.0)

    @property
    def mu_complex(self) -> complex:
        return complex(*self.mu)


@dataclass(frozen=True)
class InitialDataSection:
    kind: str = "admissible"
    parameters: dict = field(default_factory=lambda: {"c0": 0.01})


@dataclass(frozen=True)
class PicardSection:
    window: float = 0.05
    max_iters: int = 60
    contraction_tol: float = 1e-12
    max_halvings: int = 4


@dataclass(frozen=True)
class StepperSection:
    scheme: str = "ifrk4"
    dt: float = 1e-3
    t_end: float = 0.1
    dealias: bool = True
    escape_factor: float = 1e3
    picard: PicardSection = field(default_factory=PicardSection)


@dataclass(frozen=True)
class DiagnosticsSection:
    cadence: int = 10
    delta_budget: float = 0.05
    energy: bool | None = None  # None: only for the Hamiltonian form
    ledger: bool = True
    admissibility: bool = True
    ball_monitor: bool = True


@dataclass(frozen=True)
class OutputSection:
    directory: str = "runs/default"
    snapshot_every: int = 0  # in ledger samples; 0 keeps the first and last only
    formats: tuple[str, ...] = ("csv", "bin")


@dataclass(frozen=True)
class RunConfig:
    grid: GridSection = field(default_factory=GridSection)
    equation: EquationSection = field(default_factory=EquationSection)
    initial_data: InitialDataSection = field(default_factory=InitialDataSection)
    stepper: StepperSection = field(default_factory=StepperSection)
    diagnostics: DiagnosticsSection = field(default_factory=DiagnosticsSection)
    output: OutputSection = field(default_factory=OutputSection)
    seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["equation"]["mu"] = list(self.equation.mu)
        d["output"]["formats"] = list(self.output.formats)
        return d

    def with_overrides(self, **changes) -> "RunConfig":
        """Dotted-key overrides, e.g. ``{"initial_data.parameters.c0": 0.02}``."""
        d = self.to_dict()
        for key, value in changes.items():
            node = d
            *head, last = key.split(".")
            for part in head:
                node = node.setdefault(part, {})
            node[last] = value
        return from_dict(d)


# -- parsing -----------------------------------------------------------------------------


def _line_map(text: str) -> dict[tuple[str, ...], int]:
    """Map key paths to 1-based source lines."""
    out: dict[tuple[str, ...], int] = {}

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                p = path + (str(k.value),)
                out[p] = k.start_mark.line + 1
                walk(v, p)

    try:
        walk(yaml.compose(text), ())
    except yaml.YAMLError:
        pass
    return out


class _Reader:
    def __init__(self, lines: dict[tuple[str, ...], int]):
        self.lines = lines

    def fail(self, path: tuple[str, ...], msg: str):
        line = None
        for i in range(len(path), 0, -1):
            line = self.lines.get(path[:i])
            if line:
                break
        where = ".".join(path) or "<root>"
        prefix = f"line {line}: " if line else ""
        raise ConfigError(f"{prefix}{where}: {msg}")

    def number(self, value, path, *, positive=False, nonneg=False, integer=False):
        if isinstance(value, bool):
            self.fail(path, f"expected a number, got {value!r}")
        if isinstance(value, str):
            # YAML 1.1 reads exponent forms without a dot, such as 1e-6, as strings
            try:
                value = float(value)
            except ValueError:
                m = _PI_RE.match(value)
                if not m:
                    self.fail(path, f"expected a number, got {value!r}")
                value = float(m.group(1) or 1.0) * math.pi
        if not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        if integer:
            if float(value) != int(value):
                self.fail(path, f"expected an integer, got {value!r}")
            value = int(value)
        else:
            value = float(value)
        if not math.isfinite(value):
            self.fail(path, "must be finite")
        if positive and not value > 0:
            self.fail(path, f"must be positive, got {value!r}")
        if nonneg and value < 0:
            self.fail(path, f"must be non-negative, got {value!r}")
        return value

    def section(self, raw: dict, name: str) -> dict:
        sec = raw.get(name, {})
        if sec is None:
            return {}
        if not isinstance(sec, dict):
            self.fail((name,), "expected a mapping")
        return sec

    def unknown(self, sec: dict, allowed, path):
        for key in sec:
            if key not in allowed:
                self.fail(path + (str(key),), "unknown key")


def _normalize_mu(mu: complex, r: _Reader) -> tuple[float, float]:
    mod = abs(mu)
    if mod == 0:
        r.fail(("equation", "mu"), "mu must be non-zero")
    if abs(mod - 1) > 1e-9:
        log.warning("|mu| = %.12g normalised to 1", mod)
    if mod != 1:
        mu = mu / mod
    return (mu.real, mu.imag)


def from_dict(raw: Any, lines: dict | None = None) -> RunConfig:
    r = _Reader(lines or {})
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        r.fail((), "top level must be a mapping")
    r.unknown(raw, ("grid", "equation", "initial_data", "stepper", "diagnostics", "output", "seed"), ())

    g = r.section(raw, "grid")
    r.unknown(g, ("L", "n", "edge_tol"), ("grid",))
    n = r.number(g.get("n", 4096), ("grid", "n"), positive=True, integer=True)
    if n < 16 or n & (n - 1):
        r.fail(("grid", "n"), f"must be a power of two >= 16, got {n}")
    grid = GridSection(
        L=r.number(g.get("L", DEFAULT_L), ("grid", "L"), positive=True),
        n=n,
        edge_tol=r.number(g.get("edge_tol", 1e-5), ("grid", "edge_tol"), positive=True),
    )

    e = r.section(raw, "equation")
    r.unknown(e, ("form", "alpha", "mu"), ("equation",))
    form = str(e.get("form", "A")).upper()
    if form not in ("A", "B"):
        r.fail(("equation", "form"), f"must be A or B, got {e.get('form')!r}")
    mu_raw = e.get("mu", [0.0, 1.0])
    if isinstance(mu_raw, (list, tuple)) and len(mu_raw) == 2:
        mu = complex(r.number(mu_raw[0], ("equation", "mu")), r.number(mu_raw[1], ("equation", "mu")))
    elif isinstance(mu_raw, dict) and "phase" in mu_raw:
        mu = cmath.exp(1j * r.number(mu_raw["phase"], ("equation", "mu", "phase")))
    else:
        mu = complex(r.number(mu_raw, ("equation", "mu")), 0.0)
    equation = EquationSection(
        form=form,
        alpha=r.number(e.get("alpha", 1.0), ("equation", "alpha"), positive=True),
        mu=_normalize_mu(mu, r),
    )

    d = r.section(raw, "initial_data")
    r.unknown(d, ("kind", "parameters"), ("initial_data",))
    kind = d.get("kind", "admissible")
    if kind not in DATA_KINDS:
        r.fail(("initial_data", "kind"), f"must be one of {', '.join(DATA_KINDS)}, got {kind!r}")
    params = d.get("parameters") or {}
    if not isinstance(params, dict):
        r.fail(("initial_data", "parameters"), "expected a mapping")
    params = _check_data_params(kind, dict(params), r)
    initial = InitialDataSection(kind=kind, parameters=params)

    s = r.section(raw, "stepper")
    r.unknown(s, ("scheme", "dt", "t_end", "dealias", "escape_factor", "picard"), ("stepper",))
    scheme = str(s.get("scheme", "ifrk4")).lower()
    if scheme not in ("ifrk4", "picard"):
        r.fail(("stepper", "scheme"), f"must be ifrk4 or picard, got {s.get('scheme')!r}")
    p = s.get("picard") or {}
    if not isinstance(p, dict):
        r.fail(("stepper", "picard"), "expected a mapping")
    r.unknown(p, ("window", "max_iters", "contraction_tol", "max_halvings"), ("stepper", "picard"))
    pp = ("stepper", "picard")
    picard = PicardSection(
        window=r.number(p.get("window", 0.05), pp + ("window",), positive=True),
        max_iters=r.number(p.get("max_iters", 60), pp + ("max_iters",), positive=True, integer=True),
        contraction_tol=r.number(p.get("contraction_tol", 1e-12), pp + ("contraction_tol",), positive=True),
        max_halvings=r.number(p.get("max_halvings", 4), pp + ("max_halvings",), nonneg=True, integer=True),
    )
    dealias = s.get("dealias", True)
    if not isinstance(dealias, bool):
        r.fail(("stepper", "dealias"), "expected true or false")
    stepper = StepperSection(
        scheme=scheme,
        dt=r.number(s.get("dt", 1e-3), ("stepper", "dt"), positive=True),
        t_end=r.number(s.get("t_end", 0.1), ("stepper", "t_end"), nonneg=True),
        dealias=dealias,
        escape_factor=r.number(s.get("escape_factor", 1e3), ("stepper", "escape_factor"), positive=True),
        picard=picard,
    )

    q = r.section(raw, "diagnostics")
    r.unknown(q, ("cadence", "delta_budget", "energy", "ledger", "admissibility", "ball_monitor"), ("diagnostics",))
    flags = {}
    for name in ("ledger", "admissibility", "ball_monitor"):
        v = q.get(name, True)
        if not isinstance(v, bool):
            r.fail(("diagnostics", name), "expected true or false")
        flags[name] = v
    en = q.get("energy", None)
    if en is not None and not isinstance(en, bool):
        r.fail(("diagnostics", "energy"), "expected true, false or null")
    diagnostics = DiagnosticsSection(
        cadence=r.number(q.get("cadence", 10), ("diagnostics", "cadence"), positive=True, integer=True),
        delta_budget=r.number(q.get("delta_budget", 0.05), ("diagnostics", "delta_budget"), positive=True),
        energy=en,
        **flags,
    )

    o = r.section(raw, "output")
    r.unknown(o, ("directory", "snapshot_every", "formats"), ("output",))
    formats = o.get("formats", ["csv", "bin"])
    if not isinstance(formats, (list, tuple)) or any(f not in ("csv", "bin") for f in formats):
        r.fail(("output", "formats"), "expected a list drawn from [csv, bin]")
    output = OutputSection(
        directory=str(o.get("directory", "runs/default")),
        snapshot_every=r.number(o.get("snapshot_every", 0), ("output", "snapshot_every"), nonneg=True, integer=True),
        formats=tuple(formats),
    )

    seed = r.number(raw.get("seed", 0), ("seed",), nonneg=True, integer=True)
    return RunConfig(grid, equation, initial, stepper, diagnostics, output, seed)


_DATA_PARAMS = {
    "soliton": {"omega": 1.0, "c": 0.5, "branch": "generic"},
    "admissible": {"c0": 0.01},
    "gaussian": {"amplitude": 0.1, "width": 1.0, "center": 0.0, "wavenumber": 0.0},
    "file": {"path": None},
}


def _check_data_params(kind: str, params: dict, r: _Reader) -> dict:
    defaults = _DATA_PARAMS[kind]
    base = ("initial_data", "parameters")
    r.unknown(params, defaults, base)
    out = {}
    for key, default in defaults.items():
        value = params.get(key, default)
        if key == "branch":
            if value not in ("generic", "degenerate"):
                r.fail(base + (key,), "must be generic or degenerate")
            out[key] = value
        elif key == "path":
            if not value:
                r.fail(base + (key,), "file data needs a snapshot path")
            out[key] = str(value)
        else:
            out[key] = r.number(value, base + (key,), positive=key in ("c0", "width"))
    return out


def parse(text: str) -> RunConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark else ""
        raise ConfigError(f"{where}invalid YAML: {getattr(exc, 'problem', exc)}") from exc
    return from_dict(raw, _line_map(text))


def serialize(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=False)


def load(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse(text)


def default_config(**overrides) -> RunConfig:
    cfg = RunConfig()
    return cfg.with_overrides(**overrides) if overrides else cfg
