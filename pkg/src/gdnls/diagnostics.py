"""Norms, conserved quantities and inequality checks evaluated along trajectories."""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .data import regularity_indices
from .errors import ParameterError
from .grid import (
    ComplexField,
    Multiplier,
    apply_multiplier,
    bracket,
    derivative,
    l2_norm,
    sobolev_norm,
    weighted_infimum,
    weighted_lp_norm,
)

TAIL_FRACTION = 1 / 8
TAIL_ENERGY_LIMIT = 0.01


@dataclass(frozen=True)
class NormLedgerEntry:
    t: float
    mass: float
    energy: float
    linf: float
    sobolev_s: float
    winf: float
    wder_1: float
    wder_2: float
    wder_3: float
    inf_weighted: float
    # Not part of the CSV row: set when the highest tracked derivative has
    # more than 1% of its energy in the top eighth of the spectrum.
    tail_flag: bool = False

    @property
    def total(self) -> float:
        """Instantaneous part of the ball norm: H^s + weighted sup + weighted derivatives."""
        return self.sobolev_s + self.winf + self.wder_1 + self.wder_2 + self.wder_3


def energy(v: ComplexField) -> float:
    """E(v) = 1/2 int |v_x|^2 + 1/4 Im int |v|^2 conj(v) v_x."""
    vx = derivative(v).values
    vv = v.values
    dx = v.grid.dx
    kinetic = 0.5 * dx * np.sum(np.abs(vx) ** 2)
    quartic = 0.25 * dx * np.sum(np.abs(vv) ** 2 * np.conj(vv) * vx).imag
    return float(kinetic + quartic)


def mass(u: ComplexField) -> float:
    return l2_norm(u) ** 2


def spectral_tail_fraction(f: ComplexField) -> float:
    """Fraction of spectral energy carried by the top ``TAIL_FRACTION`` of |k|."""
    power = np.abs(f.hat) ** 2
    total = power.sum()
    if total == 0:
        return 0.0
    cutoff = f.grid.n / 2 * (1 - TAIL_FRACTION)
    return float(power[np.abs(f.grid.k) >= cutoff].sum() / total)


def ledger_entry(u: ComplexField, t: float, alpha: float, with_energy: bool = False) -> NormLedgerEntry:
    """Evaluate every tracked quantity at one time; ``energy`` is NaN unless requested."""
    m, k, s = regularity_indices(alpha)
    wder = [weighted_lp_norm(derivative(u, j), m, 2) for j in (1, 2, 3)]
    top = derivative(u, k + 1)
    return NormLedgerEntry(
        t=float(t),
        mass=mass(u),
        energy=energy(u) if with_energy else float("nan"),
        linf=float(np.abs(u.values).max()),
        sobolev_s=sobolev_norm(u, s),
        winf=weighted_lp_norm(u, m, np.inf),
        wder_1=wder[0],
        wder_2=wder[1],
        wder_3=wder[2],
        inf_weighted=weighted_infimum(u, m),
        tail_flag=spectral_tail_fraction(top) > TAIL_ENERGY_LIMIT,
    )


CSV_COLUMNS = (
    "t", "mass", "energy", "linf", "sobolev_s", "winf",
    "wder_1", "wder_2", "wder_3", "inf_weighted", "inside_ball", "lower_bound_ok",
)


def mixed_norm_x_t(times: Sequence[float], values: NDArray[np.complex128]) -> float:
    """L^inf_x L^2_T norm of samples ``values[time, node]`` (trapezoid rule in t)."""
    values = np.asarray(values)
    if len(times) < 2:
        return 0.0
    sq = np.trapezoid(np.abs(values) ** 2, x=np.asarray(times, dtype=float), axis=0)
    return float(np.sqrt(sq.max()))


def smoothing_norm(times: Sequence[float], fields: Sequence[NDArray[np.complex128]], grid, order: int) -> float:
    """``||d_x^order u||_{L^inf_x L^2_T}`` from stored snapshots."""
    sym = Multiplier.derivative(order).symbol(grid)
    ders = np.array([np.fft.ifft(np.fft.fft(f) * sym) for f in fields])
    return mixed_norm_x_t(times, ders)


def triple_norm(ledger: Sequence[NormLedgerEntry], mixed: float = 0.0) -> float:
    """Sup in time of the instantaneous components plus the mixed smoothing component."""
    if not ledger:
        raise ParameterError("ledger is empty")
    return max(e.total for e in ledger) + mixed


@dataclass(frozen=True)
class SmoothingReport:
    lhs_half: float
    lhs_smooth: float
    rhs: float
    ratio: float


def smoothing_report(u0: ComplexField, T: float, nt: int = 201) -> SmoothingReport:
    """Compare both sides of the homogeneous Kato smoothing estimate for the free flow."""
    rhs = l2_norm(apply_multiplier(u0, Multiplier.riesz(0.5)))
    if rhs == 0:
        raise ParameterError("smoothing report needs a non-zero datum")
    if not (T > 0 and nt >= 2):
        raise ParameterError("need T > 0 and at least two time samples")
    g = u0.grid
    times = np.linspace(0.0, T, nt)
    half_sym = Multiplier.riesz(0.5).symbol(g)
    d1 = Multiplier.derivative(1).symbol(g)
    half = 0.0
    ders = np.empty((nt, g.n), dtype=np.complex128)
    for i, t in enumerate(times):
        vh = u0.hat * np.exp(-1j * g.xi**2 * t)
        half = max(half, float(np.sqrt(g.dx * np.sum(np.abs(np.fft.ifft(vh * half_sym)) ** 2))))
        ders[i] = np.fft.ifft(vh * d1)
    smooth = mixed_norm_x_t(times, ders)
    return SmoothingReport(lhs_half=half, lhs_smooth=smooth, rhs=rhs, ratio=smooth / rhs)


def interpolation_check(
    f: ComplexField, a: float, b: float, gamma: float, dual: bool = False
) -> tuple[float, float]:
    """Both sides (right side without its constant) of the weighted interpolation inequality.

    Default: ``||J^{gamma a}(<x>^{(1-gamma) b} f)||`` vs ``||<x>^b f||^{1-gamma} ||J^a f||^gamma``.
    ``dual=True`` swaps the roles of weight and derivative:
    ``||<x>^{gamma a} J^{(1-gamma) b} f||`` vs ``||J^b f||^{1-gamma} ||<x>^a f||^gamma``.
    """
    if not (a > 0 and b > 0):
        raise ParameterError("a and b must be positive")
    if not 0 < gamma < 1:
        raise ParameterError("gamma must lie in (0, 1)")
    w = bracket(f.grid.x)
    if not dual:
        inner = ComplexField(f.grid, w ** ((1 - gamma) * b) * f.values)
        lhs = sobolev_norm(inner, gamma * a)
        rhs = weighted_lp_norm(f, b, 2) ** (1 - gamma) * sobolev_norm(f, a) ** gamma
    else:
        inner = apply_multiplier(f, Multiplier.bessel((1 - gamma) * b))
        lhs = weighted_lp_norm(inner, gamma * a, 2)
        rhs = sobolev_norm(f, b) ** (1 - gamma) * weighted_lp_norm(f, a, 2) ** gamma
    return lhs, rhs


def weighted_ibp_check(f: ComplexField, k: int, j: int, variant: int = 1) -> tuple[float, float]:
    """Squared left side and constant-free right side of a weighted integration-by-parts bound.

    All variants bound ``||<x>^k d^j f||^2``; they differ in how the weight is
    split across the ``d^{j+1} f`` and ``d^{j-1} f`` factors:
    1 -> (k, k), 2 -> (k-1, k+1), 3 -> (k+1, k-1).  The lower-order term
    ``||<x>^{k-1} d^{j-1} f||^2`` is common.
    """
    if k < 1 or j < 1 or int(k) != k or int(j) != j:
        raise ParameterError("k and j must be integers >= 1")
    if variant not in (1, 2, 3):
        raise ParameterError("variant must be 1, 2 or 3")
    up, down = {1: (k, k), 2: (k - 1, k + 1), 3: (k + 1, k - 1)}[variant]
    d_lo = derivative(f, j - 1)
    lhs = weighted_lp_norm(derivative(f, j), k, 2) ** 2
    rhs = (
        weighted_lp_norm(derivative(f, j + 1), up, 2) * weighted_lp_norm(d_lo, down, 2)
        + weighted_lp_norm(d_lo, k - 1, 2) ** 2
    )
    return lhs, rhs


@dataclass(frozen=True)
class BallVerdict:
    valid: bool
    reason: str
    inside_ball: tuple[bool, ...]
    lower_bound_ok: tuple[bool, ...]
    ball_exit_time: float | None
    lower_bound_exit_time: float | None

    @property
    def exited(self) -> bool:
        return self.ball_exit_time is not None or self.lower_bound_exit_time is not None


def ball_monitor(ledger: Sequence[NormLedgerEntry], lam: float, delta0: float) -> BallVerdict:
    """Check, per sample, total <= 2*delta0 and inf <x>^m |u| >= lam/4."""
    if not lam > 0:
        return BallVerdict(False, "lower bound lambda must be positive", (), (), None, None)
    inside = tuple(bool(e.total <= 2 * delta0) for e in ledger)
    lower = tuple(bool(e.inf_weighted >= lam / 4) for e in ledger)
    ball_exit = next((e.t for e, ok in zip(ledger, inside) if not ok), None)
    lower_exit = next((e.t for e, ok in zip(ledger, lower) if not ok), None)
    return BallVerdict(True, "", inside, lower, ball_exit, lower_exit)


def csv_row(entry: NormLedgerEntry, inside: bool | None = None, lower: bool | None = None) -> list:
    vals = [getattr(entry, f.name) for f in fields(entry) if f.name != "tail_flag"]
    return vals + [inside, lower]
