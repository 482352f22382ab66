"""Time evolution of u_t = i u_xx + N(u) by integrating-factor RK4 and by Picard iteration.

Two nonlinearities are supported::

    form "A":  N(u) = mu |u|^alpha u_x
    form "B":  N(u) = mu (|u|^alpha u)_x

With alpha = 2 and mu = -1, form B is the DNLS ``i u_t + u_xx + i(|u|^2 u)_x = 0``
and form A its gauge-equivalent Hamiltonian form ``i v_t + v_xx + i|v|^2 v_x = 0``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import NonFiniteFieldError, ParameterError
from .grid import ComplexField, Grid, Multiplier, cumulative_integral, l2_norm, sobolev_norm

log = logging.getLogger(__name__)

Form = Literal["A", "B"]
Hook = Callable[[float, ComplexField], None]


@dataclass(frozen=True)
class EquationSpec:
    """Equation form, exponent and unit coefficient.

    ``nonlinear=False`` switches the nonlinearity off; it exists for tests of
    the linear machinery.
    """

    form: Form
    alpha: float
    mu: complex
    nonlinear: bool = True

    def __post_init__(self):
        if self.form not in ("A", "B"):
            raise ParameterError(f"form must be 'A' or 'B', got {self.form!r}")
        if not self.alpha > 0:
            raise ParameterError("alpha must be positive")
        object.__setattr__(self, "mu", complex(self.mu))
        if abs(abs(self.mu) - 1) > 1e-14:
            raise ParameterError(f"|mu| must be 1, got {abs(self.mu)!r}")

    @classmethod
    def dnls(cls) -> "EquationSpec":
        """i u_t + u_xx + i(|u|^2 u)_x = 0."""
        return cls("B", 2.0, -1.0)

    @classmethod
    def dnls_gauged(cls) -> "EquationSpec":
        """i v_t + v_xx + i|v|^2 v_x = 0 (Hamiltonian form)."""
        return cls("A", 2.0, -1.0)

    @property
    def is_hamiltonian(self) -> bool:
        return self.form == "A" and self.alpha == 2 and self.mu == -1

    def linear(self) -> "EquationSpec":
        return EquationSpec(self.form, self.alpha, self.mu, nonlinear=False)


@dataclass(frozen=True)
class PicardConfig:
    window: float = 0.05
    max_iters: int = 60
    contraction_tol: float = 1e-12
    max_halvings: int = 4
    fail_streak: int = 3

    def __post_init__(self):
        if not (self.window > 0 and self.contraction_tol > 0 and self.max_iters >= 1):
            raise ParameterError("Picard window, tolerance and iteration cap must be positive")


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    t_end: float
    scheme: Literal["ifrk4", "picard"] = "ifrk4"
    picard: PicardConfig = field(default_factory=PicardConfig)
    dealias: bool = True
    sample_every: int = 10
    escape_factor: float = 1e3
    max_step_halvings: int = 3

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError("dt must be positive")
        if not self.t_end >= 0:
            raise ParameterError("t_end must be non-negative")
        if self.scheme not in ("ifrk4", "picard"):
            raise ParameterError(f"unknown scheme {self.scheme!r}")
        if self.sample_every < 1:
            raise ParameterError("sample_every must be >= 1")


@dataclass
class WindowRecord:
    t0: float
    length: float
    iterations: int
    distances: list[float]
    ratios: list[float]
    converged: bool
    final_hs_distance: float = float("nan")
    failure: str = ""

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0


@dataclass
class Trajectory:
    grid: Grid
    times: list[float] = field(default_factory=list)
    fields: list[NDArray[np.complex128]] = field(default_factory=list)
    status: Literal["completed", "escaped", "contraction_failed"] = "completed"
    message: str = ""
    steps: int = 0
    rejections: int = 0
    windows: list[WindowRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.times)

    def field_at(self, i: int) -> ComplexField:
        return ComplexField(self.grid, self.fields[i])

    @property
    def final(self) -> ComplexField:
        return self.field_at(-1)

    @property
    def ok(self) -> bool:
        return self.status == "completed"

    @property
    def certified_window(self) -> float:
        good = [w.length for w in self.windows if w.converged]
        return min(good) if good else 0.0

    def metadata(self) -> dict:
        return {
            "status": self.status,
            "message": self.message,
            "steps": self.steps,
            "rejections": self.rejections,
            "samples": len(self.times),
            "certified_window": self.certified_window if self.windows else None,
            "windows": [
                {
                    "t0": w.t0,
                    "length": w.length,
                    "iterations": w.iterations,
                    "converged": w.converged,
                    "max_ratio": w.max_ratio,
                    "ratios": w.ratios,
                    "final_hs_distance": w.final_hs_distance,
                    "failure": w.failure,
                }
                for w in self.windows
            ],
        }


# -- nonlinearity ---------------------------------------------------------------


def _abs_pow(u: NDArray[np.complex128], alpha: float) -> NDArray[np.float64]:
    # 0**alpha is 0 for alpha > 0, so zeros of u need no special casing.
    return np.abs(u) ** alpha


class _Kernel:
    """Precomputed symbols for one grid and equation."""

    def __init__(self, grid: Grid, eq: EquationSpec, dealias: bool):
        self.grid = grid
        self.eq = eq
        self.d1 = Multiplier.derivative(1).symbol(grid)
        self.mask = grid.dealias_mask if dealias else None
        self.xi2 = grid.xi**2

    def nonlinear_hat(self, u: NDArray[np.complex128]) -> NDArray[np.complex128]:
        """Fourier coefficients of N(u) for physical-space samples u."""
        eq = self.eq
        if not eq.nonlinear:
            return np.zeros_like(u)
        if eq.form == "A":
            ux = np.fft.ifft(np.fft.fft(u) * self.d1)
            out = np.fft.fft(_abs_pow(u, eq.alpha) * ux)
        else:
            out = np.fft.fft(_abs_pow(u, eq.alpha) * u) * self.d1
        if self.mask is not None:
            out = out * self.mask
        return eq.mu * out


def nonlinearity(u: ComplexField, eq: EquationSpec, dealias: bool = False) -> ComplexField:
    """N(u) for the given form; products are optionally 2/3-dealiased."""
    k = _Kernel(u.grid, eq, dealias)
    return ComplexField.from_hat(u.grid, k.nonlinear_hat(u.values))


# -- integrating-factor RK4 -------------------------------------------------------


class _IFRK4:
    def __init__(self, kernel: _Kernel, dt: float):
        self.k = kernel
        self.dt = dt
        self.e_half = np.exp(-1j * kernel.xi2 * dt / 2)
        self.e_full = self.e_half**2

    def step(self, v: NDArray[np.complex128]) -> NDArray[np.complex128]:
        """Advance Fourier coefficients v by one step."""
        N = lambda w: self.k.nonlinear_hat(np.fft.ifft(w))
        dt, eh, ef = self.dt, self.e_half, self.e_full
        k1 = N(v)
        k2 = N(eh * (v + dt / 2 * k1))
        k3 = N(eh * v + dt / 2 * k2)
        k4 = N(ef * v + dt * eh * k3)
        return ef * v + dt / 6 * (ef * k1 + 2 * eh * (k2 + k3) + k4)


def step_ifrk4(u: ComplexField, eq: EquationSpec, dt: float, dealias: bool = True) -> ComplexField:
    stepper = _IFRK4(_Kernel(u.grid, eq, dealias), dt)
    v = stepper.step(np.array(u.hat))
    if not np.all(np.isfinite(v)):
        raise NonFiniteFieldError(f"IFRK4 step produced non-finite values (dt={dt:g})")
    return ComplexField.from_hat(u.grid, v)


def _run_hooks(hooks: Sequence[Hook], t: float, u: ComplexField) -> None:
    for hook in hooks:
        hook(t, u)


def _record(traj: Trajectory, hooks: Sequence[Hook], t: float, values: NDArray[np.complex128]) -> None:
    traj.times.append(t)
    traj.fields.append(np.array(values))
    _run_hooks(hooks, t, ComplexField(traj.grid, values))


def _solve_ifrk4(u0: ComplexField, eq: EquationSpec, cfg: StepperConfig, hooks: Sequence[Hook]) -> Trajectory:
    g = u0.grid
    traj = Trajectory(g)
    _record(traj, hooks, 0.0, u0.values)
    if cfg.t_end == 0:
        return traj
    nsteps = max(1, math.ceil(cfg.t_end / cfg.dt - 1e-9))
    h = cfg.t_end / nsteps
    kernel = _Kernel(g, eq, cfg.dealias)
    stepper = _IFRK4(kernel, h)
    substeppers = [_IFRK4(kernel, h / 2**j) for j in range(1, cfg.max_step_halvings + 1)]
    bound = cfg.escape_factor * max(np.abs(u0.values).max(), np.finfo(float).tiny)
    v = np.array(u0.hat)

    for step in range(1, nsteps + 1):
        v_new = stepper.step(v)
        if not np.all(np.isfinite(v_new)):
            # Divergence: retry the step with successively halved substeps.
            v_new = None
            for j, sub in enumerate(substeppers, start=1):
                traj.rejections += 1
                w = v
                for _ in range(2**j):
                    w = sub.step(w)
                if np.all(np.isfinite(w)):
                    v_new = w
                    break
            if v_new is None:
                traj.status = "escaped"
                traj.message = f"non-finite state at t={step * h:.6g}"
                traj.steps = step - 1
                return traj
        v = v_new
        t = step * h if step < nsteps else cfg.t_end
        u = np.fft.ifft(v)
        if np.abs(u).max() > bound:
            traj.status = "escaped"
            traj.message = f"sup norm exceeded {cfg.escape_factor:g} x initial at t={t:.6g}"
            traj.steps = step
            _record(traj, hooks, t, u)
            return traj
        if step % cfg.sample_every == 0 or step == nsteps:
            _record(traj, hooks, t, u)
    traj.steps = nsteps
    return traj


# -- Picard iteration on the Duhamel operator ---------------------------------------


def _sup_l2(grid: Grid, a: NDArray[np.complex128]) -> float:
    return float(np.sqrt(grid.dx * np.max(np.sum(np.abs(a) ** 2, axis=1))))


def _phi(kernel: _Kernel, times: NDArray[np.float64], traj: NDArray[np.complex128],
         u0_hat: NDArray[np.complex128]) -> NDArray[np.complex128]:
    xi2 = kernel.xi2
    # Interaction picture: g(t') = exp(-it' d^2) N(u(t')), symbol exp(+i xi^2 t').
    integrand = np.empty_like(traj)
    for j, tj in enumerate(times):
        integrand[j] = np.exp(1j * xi2 * tj) * kernel.nonlinear_hat(traj[j])
    dt = np.diff(times)[:, None]
    running = np.zeros_like(integrand)
    running[1:] = np.cumsum(0.5 * dt * (integrand[1:] + integrand[:-1]), axis=0)
    out = np.empty_like(traj)
    for j, tj in enumerate(times):
        out[j] = np.fft.ifft(np.exp(-1j * xi2 * tj) * (u0_hat + running[j]))
    return out


def picard_apply_phi(
    times: NDArray[np.float64],
    u_traj: NDArray[np.complex128],
    u0: ComplexField,
    eq: EquationSpec,
    dealias: bool = True,
) -> NDArray[np.complex128]:
    """Evaluate Phi(u)(t) = e^{it d^2} u0 + int_0^t e^{i(t-t') d^2} N(u)(t') dt' at every sample time.

    ``times`` must start at 0 and be uniformly spaced; ``u_traj[j]`` holds
    physical-space samples at ``times[j]``.  The time integral is the
    composite trapezoid rule on the sample nodes.
    """
    times = np.asarray(times, dtype=float)
    u_traj = np.asarray(u_traj, dtype=np.complex128)
    if times.ndim != 1 or times[0] != 0 or u_traj.shape != (len(times), u0.grid.n):
        raise ParameterError("trajectory must be sampled on times starting at 0, one row per time")
    return _phi(_Kernel(u0.grid, eq, dealias), times, u_traj, np.array(u0.hat))


def _free_trajectory(kernel: _Kernel, times: NDArray[np.float64], u0_hat) -> NDArray[np.complex128]:
    return np.array([np.fft.ifft(np.exp(-1j * kernel.xi2 * t) * u0_hat) for t in times])


def _picard_window(kernel, u_start, length, dt, pc: PicardConfig, t0: float, s_index: float, bound: float):
    g = kernel.grid
    nodes = max(1, round(length / dt))
    times = np.linspace(0.0, length, nodes + 1)
    u0_hat = np.fft.fft(u_start)
    U = _free_trajectory(kernel, times, u0_hat)
    rec = WindowRecord(t0=t0, length=length, iterations=0, distances=[], ratios=[], converged=False)
    streak = 0
    for it in range(1, pc.max_iters + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            U_new = _phi(kernel, times, U, u0_hat)
        rec.iterations = it
        if not np.all(np.isfinite(U_new)):
            rec.distances.append(float("inf"))
            rec.failure = "iterates diverged to non-finite values"
            return rec, times, None
        d = _sup_l2(g, U_new - U)
        if rec.distances:
            prev = rec.distances[-1]
            ratio = d / prev if prev > 0 else 0.0
            rec.ratios.append(ratio)
            streak = streak + 1 if ratio >= 1 else 0
        rec.distances.append(d)
        diff = U_new - U
        U = U_new
        if d < pc.contraction_tol:
            rec.converged = True
            rec.final_hs_distance = max(
                sobolev_norm(ComplexField(g, row), s_index) for row in diff
            ) if d > 0 else 0.0
            return rec, times, U
        if streak >= pc.fail_streak:
            rec.failure = f"ratio >= 1 for {pc.fail_streak} consecutive iterations"
            return rec, times, None
        if np.abs(U).max() > bound:
            rec.failure = "iterates left the escape bound"
            return rec, times, None
    rec.failure = f"no convergence in {pc.max_iters} iterations"
    return rec, times, None


def _solve_picard(u0: ComplexField, eq: EquationSpec, cfg: StepperConfig, hooks: Sequence[Hook]) -> Trajectory:
    from .data import regularity_indices

    g = u0.grid
    traj = Trajectory(g)
    _record(traj, hooks, 0.0, u0.values)
    kernel = _Kernel(g, eq, cfg.dealias)
    pc = cfg.picard
    s_index = regularity_indices(eq.alpha)[2]
    bound = cfg.escape_factor * max(np.abs(u0.values).max(), np.finfo(float).tiny)
    window = pc.window
    t = 0.0
    u_start = np.array(u0.values)
    step_count = 0
    eps = 1e-12 * max(1.0, cfg.t_end)
    # The halving budget is shared by the whole run, so the certified window
    # never drops below window / 2**max_halvings.
    halvings = 0
    while t < cfg.t_end - eps:
        while True:
            length = min(window, cfg.t_end - t)
            rec, times, U = _picard_window(kernel, u_start, length, cfg.dt, pc, t, s_index, bound)
            traj.windows.append(rec)
            if U is not None:
                break
            log.info("Picard window at t=%.4g of length %.4g failed: %s", t, length, rec.failure)
            halvings += 1
            if halvings > pc.max_halvings:
                traj.status = "contraction_failed"
                traj.message = (
                    f"contraction failed at t={t:.6g}: window {length:.4g} ({rec.failure}) "
                    f"after {pc.max_halvings} halvings"
                )
                traj.steps = step_count
                return traj
            window /= 2
        for j in range(1, len(times)):
            step_count += 1
            tj = t + times[j]
            last = j == len(times) - 1 and tj >= cfg.t_end - eps
            if last:
                tj = cfg.t_end
            if step_count % cfg.sample_every == 0 or last:
                _record(traj, hooks, float(tj), U[j])
        t += length
        u_start = U[-1]
    traj.steps = step_count
    return traj


def solve(
    u0: ComplexField,
    eq: EquationSpec,
    cfg: StepperConfig,
    hooks: Iterable[Hook] = (),
) -> Trajectory:
    """Evolve ``u0`` to ``cfg.t_end``, sampling every ``cfg.sample_every`` steps and at ``t_end``."""
    hooks = list(hooks)
    if cfg.scheme == "picard":
        return _solve_picard(u0, eq, cfg, hooks)
    return _solve_ifrk4(u0, eq, cfg, hooks)


def solve_picard(u0: ComplexField, eq: EquationSpec, cfg: StepperConfig, hooks: Iterable[Hook] = ()) -> Trajectory:
    return _solve_picard(u0, eq, cfg, list(hooks))


# -- gauge and residual ------------------------------------------------------------------


def gauge_transform(u: ComplexField) -> ComplexField:
    """u exp((i/2) int_{-L/2}^x |u|^2 dy)."""
    phase = cumulative_integral(ComplexField(u.grid, np.abs(u.values) ** 2)).real
    return ComplexField(u.grid, u.values * np.exp(0.5j * phase))


def residual(
    solution: Callable[[float], ComplexField],
    t: float,
    eq: EquationSpec,
    dt_fd: float = 1e-6,
) -> float:
    """L^2 norm of the equation residual of a time-parametrised candidate solution.

    Time derivative by centred differences with step ``dt_fd``; space
    derivatives spectrally; no dealiasing.
    """
    up, um, uc = solution(t + dt_fd), solution(t - dt_fd), solution(t)
    ut = (up.values - um.values) / (2 * dt_fd)
    kernel = _Kernel(uc.grid, eq, dealias=False)
    lin = 1j * np.fft.ifft(uc.hat * Multiplier.derivative(2).symbol(uc.grid))
    nl = np.fft.ifft(kernel.nonlinear_hat(uc.values))
    return l2_norm(ComplexField(uc.grid, ut - lin - nl))
