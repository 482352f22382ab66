"""Property suites run by ``gdnls verify`` and by the acceptance tests.

Each suite returns a list of :class:`PropertyResult`.  The lemma suite
compares corpus-fitted inequality constants with the stored baseline in
``baseline.json``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .diagnostics import interpolation_check, smoothing_report, weighted_ibp_check
from .evolution import EquationSpec, StepperConfig, gauge_transform, solve
from .grid import (
    ComplexField,
    Grid,
    Multiplier,
    apply_multiplier,
    bracket,
    commutation_residual,
    free_evolve,
    l2_norm,
    spectral_l2_norm,
)

SUITES = ("identities", "lemmas", "gauge", "convergence")
BASELINE_RESOURCE = "baseline.json"
BASELINE_DRIFT = 0.05

INTERPOLATION_PARAMS = ((1.0, 1.0, 0.5), (2.0, 1.0, 0.25), (1.0, 2.0, 0.75), (3.0, 2.0, 0.5))
IBP_PARAMS = ((1, 1), (2, 1), (3, 2), (2, 3), (3, 1))
SMOOTHING_T = 1.0
SMOOTHING_NT = 201


@dataclass(frozen=True)
class PropertyResult:
    name: str
    value: float
    tolerance: float
    relation: str  # "<=" or ">="
    passed: bool
    detail: str = ""

    @classmethod
    def check(cls, name: str, value: float, tolerance: float, relation: str = "<=", detail: str = ""):
        ok = value <= tolerance if relation == "<=" else value >= tolerance
        return cls(name, float(value), float(tolerance), relation, bool(ok and math.isfinite(value)), detail)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"[{mark}] {self.name}: {self.value:.3e} {self.relation} {self.tolerance:.3e}{extra}"

    def to_dict(self) -> dict:
        return asdict(self)


# -- seeded corpora ---------------------------------------------------------------------------


def random_fields(grid: Grid, count: int, seed: int) -> list[ComplexField]:
    rng = np.random.default_rng(seed)
    return [ComplexField(grid, rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)) for _ in range(count)]


CORPUS_KINDS = ("gaussian", "modulated", "gauss_poly", "rational")


def corpus(grid: Grid, size: int = 50, seed: int = 0) -> list[tuple[str, ComplexField]]:
    """Smooth, edge-decayed test functions: Gaussians, modulated Gaussians,
    polynomial-times-Gaussian and rational <x>^-p profiles."""
    rng = np.random.default_rng(seed)
    x = grid.x
    out = []
    for i in range(size):
        kind = CORPUS_KINDS[i % len(CORPUS_KINDS)]
        amp = rng.uniform(0.5, 2.0)
        width = rng.uniform(0.5, 3.0)
        center = rng.uniform(-2.0, 2.0)
        y = (x - center) / width
        if kind == "gaussian":
            vals = amp * np.exp(-(y**2))
        elif kind == "modulated":
            vals = amp * np.exp(-(y**2)) * np.exp(1j * rng.uniform(-3.0, 3.0) * x)
        elif kind == "gauss_poly":
            coeffs = rng.uniform(-1.0, 1.0, size=int(rng.integers(1, 4)) + 1)
            vals = amp * np.polyval(coeffs, y) * np.exp(-(y**2))
        else:
            vals = amp / bracket(y) ** rng.uniform(6.0, 9.0)
        out.append((f"{kind}_{i:02d}", ComplexField(grid, vals)))
    return out


def corpus_ratios(grid: Grid, size: int = 50, seed: int = 0) -> dict[str, list[float]]:
    """lhs/rhs for every corpus function and every parameter set, per inequality family."""
    fam: dict[str, list[float]] = {"interpolation": [], "interpolation_dual": [],
                                   "ibp_1": [], "ibp_2": [], "ibp_3": [], "smoothing": []}
    for _, f in corpus(grid, size, seed):
        for a, b, gamma in INTERPOLATION_PARAMS:
            lhs, rhs = interpolation_check(f, a, b, gamma)
            fam["interpolation"].append(lhs / rhs)
            lhs, rhs = interpolation_check(f, a, b, gamma, dual=True)
            fam["interpolation_dual"].append(lhs / rhs)
        for k, j in IBP_PARAMS:
            for variant in (1, 2, 3):
                lhs, rhs = weighted_ibp_check(f, k, j, variant)
                fam[f"ibp_{variant}"].append(lhs / rhs)
        fam["smoothing"].append(smoothing_report(f, SMOOTHING_T, SMOOTHING_NT).ratio)
    return fam


def calibrate(grid: Grid, size: int = 50, seed: int = 0) -> dict:
    ratios = corpus_ratios(grid, size, seed)
    return {
        "grid": {"L": grid.L, "n": grid.n},
        "corpus_size": size,
        "seed": seed,
        "smoothing": {"T": SMOOTHING_T, "nt": SMOOTHING_NT},
        "constants": {name: max(vals) for name, vals in ratios.items()},
        "min_ratios": {name: min(vals) for name, vals in ratios.items()},
    }


def load_baseline(path: str | Path | None = None) -> dict:
    if path is None:
        text = resources.files("gdnls").joinpath(BASELINE_RESOURCE).read_text()
    else:
        text = Path(path).read_text()
    return json.loads(text)


def write_baseline(path: str | Path, baseline: dict) -> None:
    Path(path).write_text(json.dumps(baseline, indent=2, sort_keys=True) + "\n")


# -- suites ---------------------------------------------------------------------------------------


def identities(grid: Grid, seed: int = 0, count: int = 100) -> list[PropertyResult]:
    fields = random_fields(grid, count, seed)
    unit = group = comp = pars = rev = 0.0
    for f in fields:
        nf = l2_norm(f)
        for t in (0.1, 1.0, 10.0):
            unit = max(unit, abs(l2_norm(free_evolve(f, t)) - nf) / nf)
            rev = max(rev, l2_norm(free_evolve(free_evolve(f, t), -t) - f) / nf)
        t1, t2 = 0.3, 1.7
        group = max(group, l2_norm(free_evolve(free_evolve(f, t1), t2) - free_evolve(f, t1 + t2)) / nf)
        da = apply_multiplier(apply_multiplier(f, Multiplier.riesz(0.5)), Multiplier.riesz(1.25))
        dab = apply_multiplier(f, Multiplier.riesz(1.75))
        comp = max(comp, l2_norm(da - dab) / l2_norm(dab))
        pars = max(pars, abs(spectral_l2_norm(f) - nf) / nf)
    out = [
        PropertyResult.check("propagator unitarity", unit, 1e-12),
        PropertyResult.check("propagator group law", group, 1e-12),
        PropertyResult.check("multiplier composition D^a D^b = D^(a+b)", comp, 1e-12),
        PropertyResult.check("Parseval", pars, 1e-12),
        PropertyResult.check("time reversal", rev, 1e-12),
    ]
    gauss = ComplexField(grid, np.exp(-grid.x**2))
    for m, tol in ((1, 1e-8), (3, 1e-6)):
        out.append(PropertyResult.check(f"commutation identity m={m}", commutation_residual(gauss, 0.5, m), tol))
        ladder = [
            commutation_residual(ComplexField(g, np.exp(-g.x**2)), 0.5, m)
            for g in (Grid(grid.L, 256), Grid(grid.L, 512), Grid(grid.L, 1024))
        ]
        worst = min(ladder[0] / ladder[1], ladder[1] / ladder[2])
        out.append(PropertyResult.check(
            f"commutation refinement m={m}", worst, 4.0, ">=",
            detail="residuals at n=256,512,1024: " + ", ".join(f"{r:.2e}" for r in ladder),
        ))
    return out


def lemmas(grid: Grid, seed: int = 0, size: int = 50, baseline: dict | None = None) -> list[PropertyResult]:
    baseline = baseline or load_baseline()
    stored = baseline["constants"]
    ratios = corpus_ratios(grid, size, seed)
    out = []
    for name, vals in ratios.items():
        c = stored[name]
        worst = max(vals)
        out.append(PropertyResult.check(
            f"{name}: max lhs/rhs vs stored constant", worst, c * (1 + BASELINE_DRIFT),
            detail=f"stored C={c:.6g}, drift {abs(worst / c - 1):.2%}",
        ))
    return out


def gauge(grid: Grid, amplitude: float = 0.3, T: float = 0.5, dt: float = 1e-3) -> list[PropertyResult]:
    u0 = ComplexField(grid, amplitude * np.exp(-grid.x**2) * np.exp(0.5j * grid.x))
    cfg = StepperConfig(dt, T, sample_every=10**9)
    u = solve(u0, EquationSpec.dnls(), cfg).final
    v = solve(gauge_transform(u0), EquationSpec.dnls_gauged(), cfg).final
    dist = l2_norm(gauge_transform(u) - v)
    return [PropertyResult.check("gauge intertwining ||G(u(T)) - v(T)||", dist, 1e-5, detail=f"T={T}")]


def richardson_slope(u0: ComplexField, eq: EquationSpec, T: float, dts=(0.01, 0.005, 0.0025)) -> tuple[float, list[float]]:
    sols = [solve(u0, eq, StepperConfig(dt, T, sample_every=10**9)).final for dt in dts]
    errs = [l2_norm(sols[i] - sols[i + 1]) for i in range(len(sols) - 1)]
    return math.log2(errs[0] / errs[1]), errs


def convergence(grid: Grid, mu: complex = 1j, amplitude: float = 0.5, T: float = 0.1) -> list[PropertyResult]:
    u0 = ComplexField(grid, amplitude * np.exp(-grid.x**2))
    slope, errs = richardson_slope(u0, EquationSpec("A", 1.0, mu), T)
    return [PropertyResult.check(
        "IFRK4 Richardson slope |p - 4|", abs(slope - 4.0), 0.3,
        detail=f"slope={slope:.4f}, self-differences " + ", ".join(f"{e:.2e}" for e in errs),
    )]


def run_suite(name: str, grid: Grid, seed: int = 0, mu: complex = 1j) -> list[PropertyResult]:
    if name == "identities":
        return identities(grid, seed)
    if name == "lemmas":
        return lemmas(grid, seed)
    if name == "gauge":
        return gauge(grid)
    if name == "convergence":
        return convergence(grid, mu)
    raise KeyError(name)
