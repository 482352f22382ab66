"""Periodic grid standing in for the real line, and the Fourier-multiplier toolkit.

All spectral operations use numpy's FFT ordering.  Frequencies are
``xi_k = 2*pi*k/L`` for integer aliases ``k`` in ``{-n/2, ..., n/2-1}``.
The free Schrodinger group ``exp(it d_x^2)`` has symbol ``exp(-i xi^2 t)`` so
that plane waves ``exp(i(xi x - xi^2 t))`` solve ``u_t = i u_xx``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from .errors import EdgeDecayError, GridMismatchError, NonFiniteFieldError, ParameterError

DEFAULT_EDGE_TOL = 1e-10


def bracket(x: NDArray[np.float64] | float) -> NDArray[np.float64]:
    """Japanese bracket <x> = (1 + x^2)^(1/2)."""
    return np.sqrt(1.0 + np.square(x))


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-L/2, L/2) with ``n`` nodes."""

    L: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.L) and self.L > 0):
            raise ParameterError(f"grid length must be positive, got {self.L}")
        n = int(self.n)
        if n != self.n or n < 16 or n & (n - 1):
            raise ParameterError(f"node count must be a power of two >= 16, got {self.n}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "L", float(self.L))

    @property
    def dx(self) -> float:
        return self.L / self.n

    @cached_property
    def x(self) -> NDArray[np.float64]:
        x = -self.L / 2 + self.dx * np.arange(self.n)
        x.flags.writeable = False
        return x

    @cached_property
    def k(self) -> NDArray[np.int64]:
        """Integer wavenumber aliases in FFT order."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n).round().astype(np.int64)
        k.flags.writeable = False
        return k

    @cached_property
    def xi(self) -> NDArray[np.float64]:
        xi = 2 * np.pi / self.L * self.k
        xi.flags.writeable = False
        return xi

    @cached_property
    def nyquist(self) -> int:
        return self.n // 2

    @cached_property
    def dealias_mask(self) -> NDArray[np.bool_]:
        """Two-thirds rule: keep modes with |k| < n/3."""
        return np.abs(self.k) < self.n / 3

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.L, self.n * factor)


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex samples of a function on a :class:`Grid` (physical space)."""

    grid: Grid
    values: NDArray[np.complex128]

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != (self.grid.n,):
            raise GridMismatchError(
                f"field has shape {values.shape}, grid expects ({self.grid.n},)"
            )
        if not np.all(np.isfinite(values)):
            raise NonFiniteFieldError("field contains non-finite values")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_hat(cls, grid: Grid, hat: NDArray[np.complex128]) -> "ComplexField":
        return cls(grid, np.fft.ifft(hat))

    @classmethod
    def from_function(cls, grid: Grid, func) -> "ComplexField":
        return cls(grid, func(grid.x))

    @classmethod
    def zeros(cls, grid: Grid) -> "ComplexField":
        return cls(grid, np.zeros(grid.n, dtype=np.complex128))

    @cached_property
    def hat(self) -> NDArray[np.complex128]:
        hat = np.fft.fft(self.values)
        hat.flags.writeable = False
        return hat

    def _same_grid(self, other: "ComplexField") -> None:
        if other.grid != self.grid:
            raise GridMismatchError("fields live on different grids")

    def __add__(self, other: "ComplexField") -> "ComplexField":
        self._same_grid(other)
        return ComplexField(self.grid, self.values + other.values)

    def __sub__(self, other: "ComplexField") -> "ComplexField":
        self._same_grid(other)
        return ComplexField(self.grid, self.values - other.values)

    def __mul__(self, scalar: complex) -> "ComplexField":
        return ComplexField(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "ComplexField":
        return ComplexField(self.grid, -self.values)

    def abs(self) -> NDArray[np.float64]:
        return np.abs(self.values)

    def norm(self) -> float:
        return l2_norm(self)


MultiplierKind = Literal["derivative", "riesz", "bessel", "propagator"]


@dataclass(frozen=True)
class Multiplier:
    """A diagonal operator on Fourier modes.

    ``derivative`` is ``d_x^j`` with symbol ``(i xi)^j``; ``riesz`` is ``D^s``
    with symbol ``|xi|^s``; ``bessel`` is ``J^s`` with symbol
    ``(1 + xi^2)^(s/2)``; ``propagator`` is ``exp(it d_x^2)``.
    """

    kind: MultiplierKind
    parameter: float

    def __post_init__(self):
        if self.kind not in ("derivative", "riesz", "bessel", "propagator"):
            raise ParameterError(f"unknown multiplier kind {self.kind!r}")
        if not np.isfinite(self.parameter):
            raise ParameterError("multiplier parameter must be finite")
        if self.kind == "derivative" and (self.parameter < 0 or int(self.parameter) != self.parameter):
            raise ParameterError("derivative order must be a non-negative integer")
        if self.kind == "riesz" and self.parameter < 0:
            raise ParameterError("D^s requires s >= 0")

    @classmethod
    def derivative(cls, order: int) -> "Multiplier":
        return cls("derivative", order)

    @classmethod
    def riesz(cls, s: float) -> "Multiplier":
        return cls("riesz", s)

    @classmethod
    def bessel(cls, s: float) -> "Multiplier":
        return cls("bessel", s)

    @classmethod
    def propagator(cls, t: float) -> "Multiplier":
        return cls("propagator", t)

    def symbol(self, grid: Grid) -> NDArray[np.complex128]:
        xi = grid.xi
        p = self.parameter
        if self.kind == "derivative":
            j = int(p)
            sym = (1j * xi) ** j
            if j % 2 == 1:
                sym[grid.nyquist] = 0.0
            return sym.astype(np.complex128)
        if self.kind == "riesz":
            if p == 0:
                return np.ones(grid.n, dtype=np.complex128)
            sym = np.abs(xi) ** p
            sym[0] = 0.0
            return sym.astype(np.complex128)
        if self.kind == "bessel":
            return ((1.0 + xi**2) ** (p / 2)).astype(np.complex128)
        return np.exp(-1j * xi**2 * p)


def _check_finite(f: ComplexField) -> None:
    # ComplexField validates on construction; this guards subclasses and views.
    if not np.all(np.isfinite(f.values)):
        raise NonFiniteFieldError("field contains non-finite values")


def apply_multiplier(f: ComplexField, spec: Multiplier) -> ComplexField:
    _check_finite(f)
    return ComplexField.from_hat(f.grid, f.hat * spec.symbol(f.grid))


def derivative(f: ComplexField, order: int = 1) -> ComplexField:
    return apply_multiplier(f, Multiplier.derivative(order))


def free_evolve(f: ComplexField, t: float) -> ComplexField:
    """Apply the free Schrodinger group exp(it d_x^2)."""
    if not np.isfinite(t):
        raise ParameterError("evolution time must be finite")
    if t == 0:
        return f
    return apply_multiplier(f, Multiplier.propagator(t))


def l2_norm(f: ComplexField) -> float:
    """Rectangle-rule L^2 norm."""
    return float(np.sqrt(f.grid.dx * np.sum(np.abs(f.values) ** 2)))


def spectral_l2_norm(f: ComplexField) -> float:
    """L^2 norm evaluated from Fourier coefficients (discrete Parseval)."""
    g = f.grid
    return float(np.sqrt(g.L * np.sum(np.abs(f.hat) ** 2)) / g.n)


def weighted_lp_norm(f: ComplexField, m: float, p: float = 2) -> float:
    """``||<x>^m f||_p`` for ``p`` in {2, inf}."""
    if m < 0:
        raise ParameterError("weight exponent must be >= 0")
    weighted = bracket(f.grid.x) ** m * np.abs(f.values)
    if p == 2:
        return float(np.sqrt(f.grid.dx * np.sum(weighted**2)))
    if p == np.inf or p == "inf":
        return float(np.max(weighted))
    raise ParameterError(f"unsupported p={p!r}; use 2 or inf")


def weighted_infimum(f: ComplexField, m: float) -> float:
    """Minimum over nodes of ``<x>^m |f|``."""
    if m < 0:
        raise ParameterError("weight exponent must be >= 0")
    return float(np.min(bracket(f.grid.x) ** m * np.abs(f.values)))


def sobolev_norm(f: ComplexField, s: float) -> float:
    """``||J^s f||_2``."""
    return l2_norm(apply_multiplier(f, Multiplier.bessel(s)))


def edge_ratio(f: ComplexField, fraction: float = 1 / 64) -> float:
    """Largest modulus in the outer ``fraction`` of the domain, relative to the global maximum."""
    a = np.abs(f.values)
    peak = a.max()
    if peak == 0:
        return 0.0
    w = max(1, int(f.grid.n * fraction))
    return float(max(a[:w].max(), a[-w:].max()) / peak)


def check_edge_decay(f: ComplexField, tol: float = DEFAULT_EDGE_TOL) -> float:
    """Raise :class:`EdgeDecayError` unless the field is small near both domain edges."""
    r = edge_ratio(f)
    if r > tol:
        raise EdgeDecayError(
            f"edge amplitude {r:.3e} (relative to max) exceeds tolerance {tol:.1e}; enlarge L"
        )
    return r


def cumulative_integral(f: ComplexField) -> NDArray[np.complex128]:
    """Spectrally exact ``int_{-L/2}^{x_j} f(y) dy`` at every node.

    The zero mode integrates to a linear ramp; the rest is the periodic
    antiderivative, shifted to vanish at the left edge.
    """
    g = f.grid
    hat = np.array(f.hat)
    mean = hat[0] / g.n
    inv = np.zeros(g.n, dtype=np.complex128)
    nz = g.xi != 0
    inv[nz] = 1.0 / (1j * g.xi[nz])
    inv[g.nyquist] = 0.0
    periodic = np.fft.ifft(hat * inv)
    return periodic - periodic[0] + mean * (g.x - g.x[0])


def commutation_residual(
    f: ComplexField, t: float, m: int, edge_tol: float = DEFAULT_EDGE_TOL
) -> float:
    """``||x^m e^{it d^2} f - e^{it d^2} (x - 2it d_x)^m f||_2``.

    With the propagator symbol exp(-i xi^2 t), conjugating x by the free flow
    gives ``e^{it d^2} x e^{-it d^2} = x + 2it d_x`` (the operator commuting
    with d_t - i d_x^2), hence the minus sign when x is moved through from
    the left.  The identity is exact on the line; on the torus the residual
    measures discretisation error and is only meaningful for edge-decayed data.
    """
    if m < 0 or int(m) != m:
        raise ParameterError("m must be a non-negative integer")
    check_edge_decay(f, edge_tol)
    x = f.grid.x
    lhs = free_evolve(f, t).values * x**m
    gamma_f = f
    for _ in range(int(m)):
        gamma_f = ComplexField(f.grid, x * gamma_f.values - 2j * t * derivative(gamma_f).values)
    rhs = free_evolve(gamma_f, t).values
    return l2_norm(ComplexField(f.grid, lhs - rhs))
