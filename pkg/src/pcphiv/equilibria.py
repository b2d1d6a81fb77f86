"""Disease-free and endemic equilibria.

Endemic states are found numerically (settle, then damped Newton). The
published closed forms for the two sub-models are evaluated verbatim and
their residuals reported; they are audited against the numeric roots rather
than trusted.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    ConvergenceError,
    DegeneratePopulationError,
    NegativeComponentError,
    NonSettlementError,
    ThresholdError,
)
from .integrator import IntegratorConfig, settle_to_equilibrium
from .linalg import fd_jacobian
from .model import (
    COMPARTMENTS,
    ModelVariant,
    ParameterSet,
    StateVector,
    derived_rates,
    disease_free_state,
    make_rhs,
)
from .reproduction import r0, r0_hiv_closed, r0_pcp_closed

log = logging.getLogger(__name__)

# initial condition used for the published simulations
PUBLISHED_INITIAL_STATE = StateVector(
    S=10000, C=200, I_P=250, R=150, I_H=400, I_A=250, I_T=300, I_HP=350, I_AP=150, T=150
)

DISEASE_FREE = "disease-free"
ENDEMIC = "endemic"


@dataclass(frozen=True)
class EquilibriumReport:
    variant: ModelVariant
    state: StateVector
    classification: str
    residual: float  # max|f(x)|, nan if f is undefined at x
    provenance: str  # closed-form, root-find or settle
    converged: bool
    extras: dict = field(default_factory=dict)

    @property
    def interior(self) -> bool:
        """Every active compartment strictly positive."""
        return all(self.state[i] > 0 for i in self.variant.active)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "state": self.state._asdict(),
            "classification": self.classification,
            "residual": self.residual,
            "provenance": self.provenance,
            "converged": self.converged,
            "interior": self.interior,
            **({"extras": self.extras} if self.extras else {}),
        }


def residual_of(variant, p: ParameterSet, x) -> float:
    try:
        return float(np.max(np.abs(make_rhs(variant, p)(0.0, np.asarray(x, dtype=float)))))
    except DegeneratePopulationError:
        return math.nan


def _scale(x) -> float:
    return max(1.0, float(np.max(np.abs(x))))


def _classify(variant: ModelVariant, x) -> str:
    return ENDEMIC if any(x[i] != 0 for i in variant.active if COMPARTMENTS[i] != "S") else DISEASE_FREE


def project(variant, x) -> StateVector:
    """Zero the compartments a variant does not carry."""
    variant = ModelVariant.parse(variant)
    y = np.asarray(x, dtype=float).copy()
    y[list(variant.inactive)] = 0.0
    return StateVector.from_array(y)


def dfe(variant, p: ParameterSet) -> EquilibriumReport:
    variant = ModelVariant.parse(variant)
    x = disease_free_state(p)
    return EquilibriumReport(
        variant, x, DISEASE_FREE, residual_of(variant, p, x), "closed-form", True
    )


def _closed_report(variant, p, values: dict, extras: dict) -> EquilibriumReport:
    x = StateVector(**values)
    res = residual_of(variant, p, x)
    tol = 1e-8 * _scale(x)
    return EquilibriumReport(
        variant, x, ENDEMIC, res, "closed-form", bool(res < tol), extras
    )


def endemic_hiv_closed(p: ParameterSet) -> EquilibriumReport:
    """HIV sub-model endemic state from the published closed form, verbatim."""
    r0h = r0_hiv_closed(p)
    if not r0h > 1:
        raise ThresholdError(f"R0H = {r0h:.6g} <= 1: no endemic HIV equilibrium")
    d = derived_rates(p)
    q1, q2 = d.q1, d.q2
    ek, lam, mu, l1 = p.eta * p.k, p.Lambda, p.mu, p.lambda1
    g = q2 + p.a2 * l1
    n_h = lam * ek * (q1 * q2 + p.nu_a * l1) * g / (q1 * q2 * (mu * ek * g + p.nu_a * l1))
    m = mu * n_h * q1 * q2 - lam * ek * g
    values = dict(
        S=n_h * q1 * q2 / (ek * g),
        I_H=m / (q1 * ek * g),
        I_A=l1 * m / (q1 * q2 * ek * g),
        I_T=m / (mu * q1 * ek * g) * (p.tau1 + p.tau2 * l1 / q2),
    )
    return _closed_report(ModelVariant.HIV, p, values, {"N_H": n_h, "R0H": r0h})


def endemic_pcp_closed(p: ParameterSet) -> EquilibriumReport:
    """PCP sub-model endemic state from the published closed form, verbatim."""
    r0p = r0_pcp_closed(p)
    if not r0p > 1:
        raise ThresholdError(f"R0P = {r0p:.6g} <= 1: no endemic PCP equilibrium")
    d = derived_rates(p)
    k1, k2, k3 = d.k1, d.k2, d.k3
    rc, xi, lam, mu = p.rho * p.c, p.xi, p.Lambda, p.mu
    g = (1 - xi) * k1 + xi * (p.omega * k2 + p.beta)
    h = (1 - xi) * k1 + xi * p.beta
    a = rc * h * (xi * k2 * p.gamma * p.pi - k1 * k2 * k3 + p.gamma * p.epsilon * h)
    if a == 0:
        raise ZeroDivisionError("closed-form denominator A evaluates to 0")
    n_p = lam * (a + p.nu_p * rc * k3 * h * g) / (mu * a - p.nu_p * mu * k1 * k2 * k3 * h)
    m = mu * k1 * k2 * n_p - lam * rc * g
    values = dict(
        S=k1 * k2 * n_p / (rc * g),
        C=xi * k2 * k3 * m / a,
        I_P=k3 * h * m / a,
        R=m / a * (p.pi * xi * k2 + p.epsilon * h),
    )
    return _closed_report(ModelVariant.PCP, p, values, {"N_P": n_p, "A": a, "R0P": r0p})


def _polish(f, x, fx, norm, idx, max_iter=3):
    # extra full steps past the target while they keep shrinking the residual;
    # near a threshold the root is ill-conditioned and this buys digits
    for _ in range(max_iter):
        try:
            step = np.linalg.solve(fd_jacobian(f, x, idx), -fx[idx])
        except np.linalg.LinAlgError:
            break
        trial = x.copy()
        trial[idx] += step
        try:
            ft = f(trial)
        except DegeneratePopulationError:
            break
        nt = float(np.max(np.abs(ft)))
        if not nt < 0.5 * norm:
            break
        x, fx, norm = trial, ft, nt
    return x, norm


def _newton(f, x0, active, target_rtol=1e-10, max_iter=60):
    x = np.asarray(x0, dtype=float).copy()
    idx = list(active)
    fx = f(x)
    norm = float(np.max(np.abs(fx)))
    for it in range(max_iter):
        if norm < target_rtol * _scale(x):
            return (*_polish(f, x, fx, norm, idx), it)
        jac = fd_jacobian(f, x, idx)
        try:
            step = np.linalg.solve(jac, -fx[idx])
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular Newton Jacobian at iteration {it}") from exc
        alpha = 1.0
        for _ in range(40):
            trial = x.copy()
            trial[idx] += alpha * step
            try:
                ft = f(trial)
                nt = float(np.max(np.abs(ft)))
            except DegeneratePopulationError:
                nt = math.inf
            if nt < (1 - 1e-4 * alpha) * norm:
                break
            alpha *= 0.5
        else:
            raise ConvergenceError(f"line search failed at iteration {it}, residual {norm:.3e}")
        x, fx, norm = trial, ft, nt
    if norm < target_rtol * _scale(x):
        return x, norm, max_iter
    raise ConvergenceError(f"Newton did not converge: residual {norm:.3e}")


def endemic_numeric(
    variant,
    p: ParameterSet,
    seed_state=None,
    cfg: IntegratorConfig = IntegratorConfig(),
    settle_horizon: float = 2000.0,
    residual_rtol: float = 1e-10,
) -> EquilibriumReport:
    """Locate a steady state by settling the flow and polishing with Newton.

    The seed defaults to the published initial condition restricted to the
    variant. When the flow goes to the disease-free state the report is
    classified accordingly; when it goes to a boundary state (some infected
    compartments zero) the report is endemic but not interior.
    """
    variant = ModelVariant.parse(variant)
    seed = project(variant, PUBLISHED_INITIAL_STATE if seed_state is None else seed_state)
    r0_value = r0(variant, p)
    if not r0_value > 1:
        log.info("r0 = %.6g <= 1 for %s: expecting the disease-free state", r0_value, variant.value)
    try:
        settled = settle_to_equilibrium(variant, p, seed, cfg, horizon=settle_horizon)
        start = settled.state
    except NonSettlementError as exc:
        start = exc.state.state
        log.debug("settle stopped at residual %.3e; polishing with Newton", exc.residual)

    f = make_rhs(variant, p)
    rhs = lambda y: f(0.0, y)  # noqa: E731
    x, norm, iters = _newton(rhs, start.as_array(), variant.active, residual_rtol)

    # compartments that sit on an invariant face come out as roundoff around 0
    snapped = x.copy()
    snapped[np.abs(snapped) <= 1e-12 * _scale(x)] = 0.0
    snapped_norm = residual_of(variant, p, snapped)
    if snapped_norm < residual_rtol * _scale(snapped):
        x, norm = snapped, snapped_norm

    worst = int(np.argmin(x))
    if x[worst] < -1e-12:
        raise NegativeComponentError(
            f"root has {COMPARTMENTS[worst]} = {x[worst]:.6g}",
            compartment=COMPARTMENTS[worst],
            value=float(x[worst]),
        )
    x = np.maximum(x, 0.0)
    state = StateVector.from_array(x)
    return EquilibriumReport(
        variant,
        state,
        _classify(variant, x),
        norm,
        "root-find",
        True,
        {"r0": r0_value, "newton_iterations": iters},
    )


def _relative_gap(a, b, floor_rtol=1e-9) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    floor = floor_rtol * max(_scale(a), _scale(b))
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))


def closed_form_audit(p: ParameterSet, seed_state=None) -> dict:
    """Compare both published closed forms with numeric roots at ``p``.

    Entries whose threshold is not met, or whose evaluation fails, are
    recorded with the reason instead of raising.
    """
    out = {}
    for variant, closed in ((ModelVariant.HIV, endemic_hiv_closed), (ModelVariant.PCP, endemic_pcp_closed)):
        entry: dict = {}
        try:
            c = closed(p)
            entry["closed_form"] = c.state._asdict()
            entry["closed_form_residual"] = c.residual
            entry["closed_form_extras"] = c.extras
        except (ThresholdError, ZeroDivisionError) as exc:
            entry["closed_form_error"] = f"{type(exc).__name__}: {exc}"
            c = None
        try:
            n = endemic_numeric(variant, p, seed_state)
            entry["numeric"] = n.state._asdict()
            entry["numeric_residual"] = n.residual
            entry["numeric_classification"] = n.classification
        except Exception as exc:  # archived, not fatal
            entry["numeric_error"] = f"{type(exc).__name__}: {exc}"
            n = None
        if c is not None and n is not None:
            active = list(variant.active)
            entry["max_relative_discrepancy"] = _relative_gap(
                c.state.as_array()[active], n.state.as_array()[active]
            )
        out[variant.value] = entry
    return out
