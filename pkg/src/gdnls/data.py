"""Initial data, exact solitary waves, and the hypothesis checkers for small-data well-posedness."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Literal

import numpy as np

from .errors import ParameterError
from .grid import (
    ComplexField,
    Grid,
    bracket,
    check_edge_decay,
    cumulative_integral,
    derivative,
    sobolev_norm,
    weighted_infimum,
    weighted_lp_norm,
)

# Data decaying like <x>^-m cannot reach 1e-10 at the edge of a desk-sized
# domain; weighted checks use this looser default instead.
DATA_EDGE_TOL = 1e-5
PHASE_TAIL_TOL = 1e-10


def _as_fraction(alpha: float) -> Fraction:
    q = Fraction(alpha).limit_denominator(1_000_000)
    return q if abs(float(q) - alpha) <= 1e-12 * max(1.0, abs(alpha)) else Fraction(alpha)


def weight_exponent(alpha: float) -> int:
    """m = floor(2/alpha + 1), evaluated in exact rational arithmetic."""
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    return math.floor(2 / _as_fraction(alpha) + 1)


def regularity_indices(alpha: float) -> tuple[int, int, float]:
    """Return (m, k, s) with k = m + 3 and s = k + 1/2."""
    m = weight_exponent(alpha)
    k = m + 3
    return m, k, k + 0.5


Branch = Literal["generic", "degenerate"]


@dataclass(frozen=True)
class SolitonParams:
    alpha: float
    omega: float
    c: float
    branch: Branch = "generic"

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterError("alpha must be positive")
        if self.branch == "generic":
            if not 4 * self.omega - self.c**2 > 0:
                raise ParameterError("generic branch requires 4*omega - c^2 > 0")
        elif self.branch == "degenerate":
            if self.c <= 0:
                raise ParameterError("degenerate branch requires c > 0")
            if abs(self.omega - self.c**2 / 4) > 1e-14 * max(1.0, self.omega):
                raise ParameterError("degenerate branch requires omega = c^2/4")
        else:
            raise ParameterError(f"unknown branch {self.branch!r}")

    @classmethod
    def degenerate(cls, alpha: float, c: float) -> "SolitonParams":
        return cls(alpha, c * c / 4, c, "degenerate")


def _profile(p: SolitonParams, y: np.ndarray) -> np.ndarray:
    a, w, c = p.alpha, p.omega, p.c
    if p.branch == "degenerate":
        return (a + 2) ** (1 / a) * c ** (1 / a) * ((a * c * y / 2) ** 2 + 1) ** (-1 / a)
    gap = 4 * w - c * c
    with np.errstate(over="ignore"):
        den = 4 * np.sqrt(w) * np.cosh(a / 2 * np.sqrt(gap) * y) - 2 * c
    base = np.where(np.isfinite(den), (2 + a) * gap / den, 0.0)
    return base ** (1 / a)


def _profile_power_tail(p: SolitonParams, y0: float) -> float:
    """``int_{-inf}^{y0} phi^alpha dy`` for y0 left of the hump."""
    a, w, c = p.alpha, p.omega, p.c
    if p.branch == "degenerate":
        b = a * c / 2
        return (a + 2) * c / b * (math.atan(b * y0) + math.pi / 2)
    gap = 4 * w - c * c
    kappa = a / 2 * math.sqrt(gap)
    amp = (2 + a) * gap / (2 * math.sqrt(w))
    return amp * math.exp(kappa * y0) / kappa


def soliton_profile(p: SolitonParams, g: Grid) -> ComplexField:
    return ComplexField(g, _profile(p, g.x))


def soliton_solution(p: SolitonParams, g: Grid, t: float = 0.0) -> ComplexField:
    """Travelling wave phi(x - ct) exp i(omega t + c(x-ct)/2 - int phi^alpha / (alpha+2)).

    Exact for form A with mu = -1, i.e. ``i u_t + u_xx + i |u|^alpha u_x = 0``.
    """
    y = g.x - p.c * t
    prof = _profile(p, y)
    integral = cumulative_integral(ComplexField(g, prof**p.alpha)).real
    tail = _profile_power_tail(p, float(y[0]))
    if abs(tail) > PHASE_TAIL_TOL:
        integral = integral + tail
    phase = p.omega * t + p.c / 2 * y - integral / (p.alpha + 2)
    return ComplexField(g, prof * np.exp(1j * phase))


def admissible_datum(alpha: float, c0: float, g: Grid) -> ComplexField:
    """c0 / <x>^m with m = floor(2/alpha + 1)."""
    if not c0 > 0:
        raise ParameterError("c0 must be positive")
    m = weight_exponent(alpha)
    return ComplexField(g, c0 / bracket(g.x) ** m)


@dataclass(frozen=True)
class AdmissibilityReport:
    alpha: float
    m: int
    k: int
    s: float
    norm_sobolev: float
    norm_winf: float
    norms_wder: tuple[float, float, float]
    delta_total: float
    lambda_: float
    mizohata_sup: float
    delta_budget: float
    admissible: bool
    edge_ratio: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lambda_")
        d["norms_wder"] = list(self.norms_wder)
        return d

    def reason(self) -> str:
        if self.admissible:
            return "admissible"
        if not self.lambda_ > 0:
            return f"not admissible: lambda = {self.lambda_:g}"
        return f"not admissible: delta_total = {self.delta_total:.6g} >= {self.delta_budget:g}"


def mizohata_functional(u0: ComplexField, alpha: float, mu: complex) -> float:
    """Sup over intervals of |int Im(mu |u0|^alpha)|, i.e. max - min of the running integral."""
    im = complex(mu).imag
    if im == 0:
        return 0.0
    b = im * np.abs(u0.values) ** alpha
    running = np.concatenate(([0.0], np.cumsum(0.5 * (b[1:] + b[:-1]) * u0.grid.dx)))
    return float(running.max() - running.min())


def check_admissibility(
    u0: ComplexField,
    alpha: float,
    delta_budget: float = 0.05,
    mu: complex = 1j,
    edge_tol: float = DATA_EDGE_TOL,
) -> AdmissibilityReport:
    if not 0 < alpha <= 1:
        raise ParameterError(f"well-posedness hypotheses need alpha in (0, 1], got {alpha}")
    ratio = check_edge_decay(u0, edge_tol)
    m, k, s = regularity_indices(alpha)
    norm_s = sobolev_norm(u0, s)
    winf = weighted_lp_norm(u0, m, np.inf)
    wder = tuple(weighted_lp_norm(derivative(u0, j), m, 2) for j in (1, 2, 3))
    total = norm_s + winf + sum(wder)
    lam = weighted_infimum(u0, m)
    return AdmissibilityReport(
        alpha=alpha,
        m=m,
        k=k,
        s=s,
        norm_sobolev=norm_s,
        norm_winf=winf,
        norms_wder=wder,
        delta_total=total,
        lambda_=lam,
        mizohata_sup=mizohata_functional(u0, alpha, mu),
        delta_budget=delta_budget,
        admissible=bool(total < delta_budget and lam > 0),
        edge_ratio=ratio,
    )
