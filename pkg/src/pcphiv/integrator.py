"""Adaptive Dormand-Prince 5(4) integration of the model vector fields.

The propagated solution is 5th order, the embedded 4th order solution gives
the local error estimate, and the step size follows a PI controller. The
last stage is evaluated at the new point (FSAL), so every accepted step
yields the derivative there for free; dense output uses it for cubic
Hermite interpolation, and ``settle_to_equilibrium`` uses it as the
residual of the vector field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    InvalidParameterError,
    InvariantBreachError,
    NonSettlementError,
    StepLimitError,
    StepUnderflowError,
)
from .model import COMPARTMENTS, ModelVariant, ParameterSet, StateVector, check_variant, make_rhs

# Dormand & Prince (1980), RK5(4)7M
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6]
# 5th order weights minus 4th order weights
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 10.0
_PI_BETA = 0.04
_PI_ALPHA = 0.2 - 0.75 * _PI_BETA


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-8
    atol: float = 1e-10
    initial_step: Optional[float] = None  # None -> automatic
    max_step: float = math.inf
    max_steps: int = 200_000
    # compartments may not drop below negativity_floor * max(1, N0)
    negativity_floor: float = -1e-9

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise InvalidParameterError("tolerances must be strictly positive")
        if self.max_steps < 1:
            raise InvalidParameterError("max_steps must be >= 1")
        if not self.max_step > 0:
            raise InvalidParameterError("max_step must be positive")
        if self.initial_step is not None and not self.initial_step > 0:
            raise InvalidParameterError("initial_step must be positive")
        if self.negativity_floor > 0:
            raise InvalidParameterError("negativity_floor must be <= 0")


@dataclass
class Trajectory:
    """Accepted steps of one integration.

    ``states[i]`` and ``derivatives[i]`` belong to ``times[i]``; the first row
    is the initial condition.
    """

    times: np.ndarray
    states: np.ndarray
    derivatives: np.ndarray
    accepted: int
    rejected: int
    nfev: int
    invariant_breach: bool = False
    breaches: list = field(default_factory=list)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def final(self) -> StateVector:
        return StateVector.from_array(self.states[-1])

    def __len__(self):
        return len(self.times)

    def interpolate(self, t) -> np.ndarray:
        """Cubic Hermite dense output at time(s) ``t`` inside the span."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        ts = self.times
        if np.any(t < ts[0] - 1e-12) or np.any(t > ts[-1] + 1e-12):
            raise ValueError("interpolation outside the integrated span")
        i = np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(ts) - 2)
        h = (ts[i + 1] - ts[i])[:, None]
        s = ((t - ts[i])[:, None]) / h
        y0, y1 = self.states[i], self.states[i + 1]
        f0, f1 = self.derivatives[i], self.derivatives[i + 1]
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s**2 * (3 - 2 * s)
        h11 = s**2 * (s - 1)
        return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1

    def sample(self, step: float) -> tuple[np.ndarray, np.ndarray]:
        """Uniform grid ``0, step, 2*step, ...`` plus the end point."""
        if not step > 0:
            raise ValueError("grid step must be positive")
        t0, t1 = self.times[0], self.times[-1]
        n = int(math.floor((t1 - t0) / step + 1e-9))
        grid = t0 + step * np.arange(n + 1)
        if t1 - grid[-1] > 1e-9 * max(1.0, abs(t1)):
            grid = np.append(grid, t1)
        else:
            grid[-1] = min(grid[-1], t1)
        return grid, self.interpolate(grid)


def _rms_norm(e, scale):
    return math.sqrt(float(np.mean((e / scale) ** 2)))


def _initial_step(f, t0, y0, f0, rtol, atol, t_span):
    # Hairer, Norsett & Wanner, algorithm of section II.4
    scale = atol + rtol * np.abs(y0)
    d0 = _rms_norm(y0, scale)
    d1 = _rms_norm(f0, scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_span)
    f1 = f(t0 + h0, y0 + h0 * f0)
    d2 = _rms_norm(f1 - f0, scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, t_span)


def dopri5(
    f: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0,
    t_end: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    monitor: Optional[Callable[[float, np.ndarray], None]] = None,
    stop: Optional[Callable[[float, np.ndarray, np.ndarray], bool]] = None,
) -> Trajectory:
    """Integrate ``y' = f(t, y)`` from ``t0`` to ``t_end``.

    ``monitor(t, y)`` runs after every accepted step and may raise.
    ``stop(t, y, dy)`` ends the integration early when it returns True.
    """
    if not t_end > t0:
        raise InvalidParameterError("t_end must be greater than t0")
    y = np.array(y0, dtype=float)
    t = float(t0)
    fy = np.asarray(f(t, y), dtype=float)
    nfev = 1
    times, states, derivs = [t], [y.copy()], [fy.copy()]
    if stop is not None and stop(t, y, fy):
        return Trajectory(np.array(times), np.array(states), np.array(derivs), 0, 0, nfev)

    span = t_end - t0
    h = cfg.initial_step
    if h is None:
        h = _initial_step(f, t, y, fy, cfg.rtol, cfg.atol, span)
        nfev += 1
    h = min(h, cfg.max_step, span)
    err_prev = 1e-4
    accepted = rejected = 0
    last_rejected = False
    k = [None] * 7

    while t < t_end:
        if accepted + rejected >= cfg.max_steps:
            raise StepLimitError(f"step budget {cfg.max_steps} exhausted at t={t}")
        h_min = 16 * np.spacing(max(abs(t), 1.0))
        if h < h_min:
            raise StepUnderflowError(f"step size {h:.3e} underflow at t={t}")
        final_step = t + h >= t_end
        if final_step:
            h = t_end - t

        k[0] = fy
        for s in range(1, 7):
            acc = y.copy()
            for j, a in enumerate(_A[s]):
                if a:
                    acc += (h * a) * k[j]
            if s == 6:
                y_new = acc
                t_new = t_end if final_step else t + h
            k[s] = np.asarray(f(t + _C[s] * h, acc), dtype=float)
        nfev += 6

        err_vec = h * sum(e * kk for e, kk in zip(_E, k) if e)
        scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms_norm(err_vec, scale)

        if err <= 1.0 and math.isfinite(err):
            fac = _SAFETY * max(err, 1e-10) ** (-_PI_ALPHA) * err_prev**_PI_BETA
            fac = min(_FAC_MAX, max(_FAC_MIN, fac))
            if last_rejected:
                fac = min(fac, 1.0)
            err_prev = max(err, 1e-4)
            t, y, fy = t_new, y_new, k[6]
            accepted += 1
            last_rejected = False
            times.append(t)
            states.append(y.copy())
            derivs.append(fy.copy())
            if monitor is not None:
                monitor(t, y)
            if stop is not None and stop(t, y, fy):
                break
            h = min(h * fac, cfg.max_step)
        else:
            rejected += 1
            last_rejected = True
            if not math.isfinite(err):
                h *= _FAC_MIN
            else:
                h *= max(_FAC_MIN, _SAFETY * err ** (-1 / 5))

    return Trajectory(
        np.array(times), np.array(states), np.array(derivs), accepted, rejected, nfev
    )


class _ModelMonitor:
    """Aborts on negative undershoot, records boundedness breaches."""

    def __init__(self, p: ParameterSet, y0: np.ndarray, floor_rel: float):
        n0 = float(np.sum(y0))
        self.floor = floor_rel * max(1.0, n0)
        self.n_bound = max(n0, p.Lambda / p.mu) * (1 + 1e-6)
        self.breaches = []

    def __call__(self, t, y):
        i = int(np.argmin(y))
        if y[i] < self.floor:
            raise InvariantBreachError(
                f"{COMPARTMENTS[i]}={y[i]:.6g} below floor {self.floor:.3g} at t={t:.6g}",
                t=t,
                compartment=COMPARTMENTS[i],
                value=float(y[i]),
            )
        n = float(np.sum(y))
        if n > self.n_bound:
            self.breaches.append((float(t), "N", n))


def _prepare(variant, p, x0):
    variant = ModelVariant.parse(variant)
    y0 = np.asarray(x0, dtype=float)
    if y0.shape != (10,):
        raise ValueError(f"state must have 10 compartments, got shape {y0.shape}")
    check_variant(variant, y0)
    if np.any(y0 < 0) or not np.sum(y0) > 0:
        raise InvalidParameterError("initial state must be nonnegative with N > 0")
    return variant, y0


def integrate(
    variant: ModelVariant,
    p: ParameterSet,
    x0,
    t_end: float,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> Trajectory:
    variant, y0 = _prepare(variant, p, x0)
    if not t_end > 0:
        raise InvalidParameterError("t_end must be positive")
    mon = _ModelMonitor(p, y0, cfg.negativity_floor)
    traj = dopri5(make_rhs(variant, p), 0.0, y0, float(t_end), cfg, monitor=mon)
    traj.breaches = mon.breaches
    traj.invariant_breach = bool(mon.breaches)
    return traj


@dataclass(frozen=True)
class SettledState:
    state: StateVector
    residual: float  # max-norm of the vector field at ``state``
    t: float
    trajectory: Trajectory


def settle_tolerance(y, rtol: float = 1e-9) -> float:
    return rtol * max(1.0, float(np.max(np.abs(y))))


def settle_to_equilibrium(
    variant: ModelVariant,
    p: ParameterSet,
    x0,
    cfg: IntegratorConfig = IntegratorConfig(),
    horizon: float = 5000.0,
    residual_rtol: float = 1e-9,
) -> SettledState:
    """Integrate until ``max|f(x)| < residual_rtol * max(1, max|x|)``.

    Raises NonSettlementError (carrying the terminal state) if the target is
    not met by ``horizon`` years.
    """
    variant, y0 = _prepare(variant, p, x0)
    mon = _ModelMonitor(p, y0, cfg.negativity_floor)

    def stop(t, y, dy):
        return float(np.max(np.abs(dy))) < settle_tolerance(y, residual_rtol)

    traj = dopri5(make_rhs(variant, p), 0.0, y0, float(horizon), cfg, monitor=mon, stop=stop)
    traj.breaches = mon.breaches
    traj.invariant_breach = bool(mon.breaches)
    y, dy = traj.states[-1], traj.derivatives[-1]
    residual = float(np.max(np.abs(dy)))
    settled = SettledState(StateVector.from_array(y), residual, traj.t_end, traj)
    if residual >= settle_tolerance(y, residual_rtol):
        raise NonSettlementError(
            f"residual {residual:.3e} above target after {horizon} years",
            state=settled,
            residual=residual,
        )
    return settled
