"""Local stability verdicts, Routh-Hurwitz coefficients, Castillo-Chavez
conditions for the PCP sub-model, and multi-start convergence probes."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .equilibria import PUBLISHED_INITIAL_STATE, EquilibriumReport, project
from .errors import NumericalError
from .integrator import IntegratorConfig, settle_to_equilibrium
from .linalg import companion, eigenvalues, fd_jacobian
from .model import ModelVariant, ParameterSet, derived_rates, make_rhs
from .reproduction import r0, r0_hiv_closed
from .sampling import random_state

MARGINAL_BAND = 1e-9

STABLE, UNSTABLE, MARGINAL = "stable", "unstable", "marginal"


def verdict_from_real_part(max_real: float, band: float = MARGINAL_BAND) -> str:
    if max_real < -band:
        return STABLE
    if max_real > band:
        return UNSTABLE
    return MARGINAL


@dataclass(frozen=True)
class RouthHurwitz:
    a1: float
    a2: float
    a3: float

    @property
    def a1a2_minus_a3(self) -> float:
        return self.a1 * self.a2 - self.a3

    @property
    def holds(self) -> bool:
        return self.a1 > 0 and self.a2 > 0 and self.a3 > 0 and self.a1a2_minus_a3 > 0

    def to_dict(self) -> dict:
        return {"a1": self.a1, "a2": self.a2, "a3": self.a3,
                "a1a2_minus_a3": self.a1a2_minus_a3, "holds": self.holds}


@dataclass(frozen=True)
class CastilloChavezFlags:
    t1_holds: bool
    a_offdiag_nonneg: bool
    g_tilde_nonneg: bool
    samples: int
    violations: int
    A: np.ndarray
    identity_gap: float  # max |(A X2 - G) - G_tilde| over the samples

    @property
    def t2_holds(self) -> bool:
        return self.a_offdiag_nonneg and self.g_tilde_nonneg

    def to_dict(self) -> dict:
        return {
            "t1_holds": self.t1_holds,
            "a_offdiag_nonneg": self.a_offdiag_nonneg,
            "g_tilde_nonneg": self.g_tilde_nonneg,
            "t2_holds": self.t2_holds,
            "samples": self.samples,
            "violations": self.violations,
            "A": self.A.tolist(),
            "identity_gap": self.identity_gap,
        }


@dataclass(frozen=True)
class StabilityReport:
    equilibrium: EquilibriumReport
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    max_real: float
    verdict: str
    routh_hurwitz: Optional[RouthHurwitz] = None
    castillo_chavez: Optional[CastilloChavezFlags] = None

    def to_dict(self) -> dict:
        out = {
            "equilibrium": self.equilibrium.to_dict(),
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "max_real": self.max_real,
            "verdict": self.verdict,
        }
        if self.routh_hurwitz is not None:
            out["routh_hurwitz"] = self.routh_hurwitz.to_dict()
        if self.castillo_chavez is not None:
            out["castillo_chavez"] = self.castillo_chavez.to_dict()
        return out


def jacobian(variant, p: ParameterSet, x) -> np.ndarray:
    """Finite-difference Jacobian over the variant's active compartments."""
    variant = ModelVariant.parse(variant)
    f = make_rhs(variant, p)
    return fd_jacobian(lambda y: f(0.0, y), np.asarray(x, dtype=float), variant.active)


def dfe_jacobian_analytic(variant, p: ParameterSet) -> np.ndarray:
    """Closed-form Jacobian at the disease-free equilibrium."""
    variant = ModelVariant.parse(variant)
    d = derived_rates(p)
    rc, ek, xi, mu = p.rho * p.c, p.eta * p.k, p.xi, p.mu
    if variant is ModelVariant.HIV:
        return np.array([
            [-mu, -ek, -ek * p.a2, 0],
            [0, ek - d.q1, ek * p.a2, 0],
            [0, p.lambda1, -d.q2, 0],
            [0, p.tau1, p.tau2, -mu],
        ], dtype=float)
    if variant is ModelVariant.PCP:
        return np.array([
            [-mu, -rc * p.omega, -rc, p.gamma],
            [0, xi * rc * p.omega - d.k1, xi * rc, 0],
            [0, (1 - xi) * rc * p.omega + p.beta, (1 - xi) * rc - d.k2, 0],
            [0, p.pi, p.epsilon, -d.k3],
        ], dtype=float)
    J = np.zeros((10, 10))
    J[0] = [-mu, -rc * p.omega, -rc, p.gamma, -ek, -ek * p.a2, 0,
            -(rc * p.theta1 + ek * p.a1), -(rc * p.theta2 + ek * p.a3), 0]
    J[1, [1, 2, 7, 8]] = [xi * rc * p.omega - d.k1, xi * rc, xi * rc * p.theta1, xi * rc * p.theta2]
    J[2, [1, 2, 7, 8]] = [(1 - xi) * rc * p.omega + p.beta, (1 - xi) * rc - d.k2,
                          (1 - xi) * rc * p.theta1, (1 - xi) * rc * p.theta2]
    J[3, [1, 2, 3]] = [p.pi, p.epsilon, -d.k3]
    J[4, [4, 5, 7, 8]] = [ek - d.q1, ek * p.a2, ek * p.a1, ek * p.a3]
    J[5, [4, 5]] = [p.lambda1, -d.q2]
    J[6, [4, 5, 6]] = [p.tau1, p.tau2, -mu]
    J[7, 7] = -d.q3
    J[8, [7, 8]] = [p.lambda2, -d.q4]
    J[9, [7, 8, 9]] = [p.tau3, p.tau4, -mu]
    return J


def local_stability(variant, p: ParameterSet, eq: EquilibriumReport) -> StabilityReport:
    variant = ModelVariant.parse(variant)
    if not eq.converged:
        raise NumericalError("local stability needs a converged equilibrium")
    J = jacobian(variant, p, eq.state)
    w = eigenvalues(J)
    max_real = float(np.max(w.real))
    return StabilityReport(eq, J, w, max_real, verdict_from_real_part(max_real))


def routh_hurwitz_hiv(p: ParameterSet, alpha_h_star: float) -> RouthHurwitz:
    """Coefficients of the cubic factor of the HIV sub-model's endemic
    characteristic polynomial, from its expansion in the B-terms."""
    if alpha_h_star < 0:
        raise ValueError("force of infection must be nonnegative")
    d = derived_rates(p)
    q1, q2, l1 = d.q1, d.q2, p.lambda1
    ek, R = p.eta * p.k, r0_hiv_closed(p)
    al = alpha_h_star
    B1 = al + p.mu
    B2 = ek / R - q1
    B3 = ek / R
    B4 = B5 = ek * p.a2 / R
    a1 = B1 + q2 - B2
    a2 = B1 * (q2 - B2) + B3 * al - B2 * q2 - l1 * B5
    a3 = al * (B3 * q2 + B4 * l1) - B1 * (B2 * q2 + B5 * l1)
    return RouthHurwitz(a1, a2, a3)


def cubic_eigen_verdict(a1: float, a2: float, a3: float) -> bool:
    """True when every root of x^3 + a1 x^2 + a2 x + a3 has negative real part."""
    return bool(np.max(eigenvalues(companion([a1, a2, a3])).real) < 0)


def castillo_chavez_check(p: ParameterSet, samples: int = 10_000, seed: int = 0) -> CastilloChavezFlags:
    """Check the two sufficient conditions for global stability of the PCP DFE.

    Never raises on a failed condition; the flags say which ones hold.
    """
    d = derived_rates(p)
    rc, xi, om = p.rho * p.c, p.xi, p.omega
    A = np.array([
        [-d.k1 + xi * rc * om, xi * rc],
        [p.beta + (1 - xi) * rc * om, -d.k2 + (1 - xi) * rc],
    ])
    offdiag_ok = bool(A[0, 1] >= 0 and A[1, 0] >= 0)

    # (T1): disease-free subsystem dS = Lambda + gamma R - mu S, dR = -k3 R is
    # linear with a unique steady state (Lambda/mu, 0)
    t1_matrix = np.array([[-p.mu, p.gamma], [0.0, -d.k3]])
    t1_ok = bool(np.max(eigenvalues(t1_matrix).real) < 0)

    rng = np.random.default_rng(seed)
    f = make_rhs(ModelVariant.PCP, p)
    violations = 0
    gap = 0.0
    for _ in range(samples):
        x = random_state(rng, ModelVariant.PCP).as_array()
        S, C, I_P = x[0], x[1], x[2]
        N = x[:4].sum()
        pool = (om * C + I_P) * (1 - S / N)
        g_tilde = np.array([xi * rc * pool, (1 - xi) * rc * pool])
        if np.any(g_tilde < 0):
            violations += 1
        G = f(0.0, x)[[1, 2]]
        gap = max(gap, float(np.max(np.abs(A @ x[[1, 2]] - G - g_tilde))))
    return CastilloChavezFlags(t1_ok, offdiag_ok, violations == 0, samples, violations, A, gap)


def relative_distance(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-300)
    return float(np.max(np.abs(a - b))) / scale


@dataclass
class ProbeReport:
    starts: list
    terminal_states: list  # None where the start failed
    residuals: list
    errors: list  # per start, None on success
    max_pairwise_distance: float
    r0: float

    @property
    def consistent(self) -> bool:
        return all(e is None for e in self.errors) and self.max_pairwise_distance < 1e-3

    def to_dict(self) -> dict:
        return {
            "r0": self.r0,
            "starts": [list(s) for s in self.starts],
            "terminal_states": [None if s is None else list(s) for s in self.terminal_states],
            "residuals": self.residuals,
            "errors": self.errors,
            "max_pairwise_distance": self.max_pairwise_distance,
        }


def multistart_initial_states(variant, n_starts: int, seed: int = 42) -> list:
    """The published initial condition followed by random admissible states."""
    variant = ModelVariant.parse(variant)
    rng = np.random.default_rng(seed)
    starts = [project(variant, PUBLISHED_INITIAL_STATE)]
    while len(starts) < n_starts:
        starts.append(random_state(rng, variant))
    return starts[:n_starts]


def global_stability_probe(
    variant,
    p: ParameterSet,
    n_starts: int = 5,
    seed: int = 42,
    cfg: IntegratorConfig = IntegratorConfig(),
    horizon: float = 5000.0,
) -> ProbeReport:
    variant = ModelVariant.parse(variant)
    starts = multistart_initial_states(variant, n_starts, seed)
    terminals, residuals, errors = [], [], []
    for x0 in starts:
        try:
            s = settle_to_equilibrium(variant, p, x0, cfg, horizon=horizon)
            terminals.append(s.state)
            residuals.append(s.residual)
            errors.append(None)
        except NumericalError as exc:
            terminals.append(None)
            residuals.append(getattr(exc, "residual", None))
            errors.append(f"{type(exc).__name__}: {exc}")
    ok = [t for t in terminals if t is not None]
    dist = max((relative_distance(a, b) for a, b in itertools.combinations(ok, 2)), default=0.0)
    return ProbeReport(starts, terminals, residuals, errors, dist, r0(variant, p))
