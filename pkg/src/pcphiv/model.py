"""Parameters, state and vector fields of the HIV/AIDS and PCP co-infection model.

All rates are per year, populations are persons. The state is always carried
as a 10-vector in the order of ``COMPARTMENTS``; sub-models simply keep their
inactive compartments at zero.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import DegeneratePopulationError, InvalidParameterError, VariantMismatchError

COMPARTMENTS = ("S", "C", "I_P", "R", "I_H", "I_A", "I_T", "I_HP", "I_AP", "T")
IDX = {name: i for i, name in enumerate(COMPARTMENTS)}


class ModifierOrderWarning(UserWarning):
    """Infectivity modifiers violate a3 > a2 > a1 or theta2 > theta1."""


@dataclass(frozen=True)
class ParameterSet:
    Lambda: float  # recruitment, persons/year
    mu: float  # natural mortality
    nu_p: float  # PCP-induced death
    nu_a: float  # AIDS-induced death
    nu: float  # AIDS-PCP co-infection death
    lambda1: float  # I_H -> I_A progression
    lambda2: float  # I_HP -> I_AP progression
    tau1: float  # treatment of I_H
    tau2: float  # treatment of I_A
    tau3: float  # treatment of I_HP
    tau4: float  # treatment of I_AP
    beta: float  # carriers developing symptoms
    xi: float  # fraction of new PCP infections that become carriers
    pi: float  # carrier recovery
    gamma: float  # loss of protection after PCP treatment
    epsilon: float  # recovery of PCP infectives
    rho: float  # PCP transmission probability per contact
    c: float  # PCP contact rate
    omega: float  # relative infectivity of carriers
    eta: float  # HIV transmission probability per contact
    k: float  # HIV contact rate
    a1: float = 1.0  # HIV infectivity of I_HP relative to I_H
    a2: float = 1.2  # ... of I_A
    a3: float = 1.4  # ... of I_AP
    theta1: float = 1.0  # PCP infectivity of I_HP relative to I_P
    theta2: float = 1.02  # ... of I_AP

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise InvalidParameterError(f"{f.name} must be a finite number, got {v!r}")
            lo, hi = PARAMETER_BOUNDS[f.name]
            if not lo <= v <= hi:
                raise InvalidParameterError(f"{f.name}={v} outside [{lo}, {hi}]")
        if self.mu <= 0:
            raise InvalidParameterError("mu must be strictly positive")
        if self.Lambda <= 0:
            raise InvalidParameterError("Lambda must be strictly positive")
        if not (self.a3 > self.a2 > self.a1):
            warnings.warn(
                f"HIV modifiers not ordered a3 > a2 > a1: {self.a1}, {self.a2}, {self.a3}",
                ModifierOrderWarning,
                stacklevel=3,
            )
        if not self.theta2 > self.theta1:
            warnings.warn(
                f"PCP modifiers not ordered theta2 > theta1: {self.theta1}, {self.theta2}",
                ModifierOrderWarning,
                stacklevel=3,
            )

    def replace(self, **changes) -> "ParameterSet":
        unknown = set(changes) - set(PARAMETER_NAMES)
        if unknown:
            raise InvalidParameterError(f"unknown parameter(s): {sorted(unknown)}")
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


PARAMETER_NAMES = tuple(f.name for f in dataclasses.fields(ParameterSet))
_PROBABILITIES = {"xi", "rho", "eta"}
PARAMETER_BOUNDS = {
    name: (0.0, 1.0) if name in _PROBABILITIES else (0.0, math.inf) for name in PARAMETER_NAMES
}


@dataclass(frozen=True)
class DerivedRates:
    k1: float
    k2: float
    k3: float
    q1: float
    q2: float
    q3: float
    q4: float

    # the full-model NGM writes the co-infection exit rates as d1, d2
    @property
    def d1(self) -> float:
        return self.q3

    @property
    def d2(self) -> float:
        return self.q4


def derived_rates(p: ParameterSet) -> DerivedRates:
    return DerivedRates(
        k1=p.beta + p.pi + p.mu,
        k2=p.epsilon + p.mu + p.nu_p,
        k3=p.gamma + p.mu,
        q1=p.tau1 + p.lambda1 + p.mu,
        q2=p.tau2 + p.mu + p.nu_a,
        q3=p.lambda2 + p.tau3 + p.mu + p.nu_p,
        q4=p.tau4 + p.mu + p.nu,
    )


class StateVector(NamedTuple):
    S: float = 0.0
    C: float = 0.0
    I_P: float = 0.0
    R: float = 0.0
    I_H: float = 0.0
    I_A: float = 0.0
    I_T: float = 0.0
    I_HP: float = 0.0
    I_AP: float = 0.0
    T: float = 0.0

    @property
    def N(self) -> float:
        return math.fsum(self)

    @classmethod
    def from_array(cls, y: Sequence[float]) -> "StateVector":
        if len(y) != len(COMPARTMENTS):
            raise ValueError(f"expected {len(COMPARTMENTS)} compartments, got {len(y)}")
        return cls(*(float(v) for v in y))

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)

    def is_admissible(self, floor: float = 0.0) -> bool:
        return all(v >= floor for v in self) and self.N > 0


class ModelVariant(enum.Enum):
    FULL = "full"
    HIV = "hiv"
    PCP = "pcp"

    @property
    def active(self) -> tuple[int, ...]:
        return _ACTIVE[self]

    @property
    def inactive(self) -> tuple[int, ...]:
        return tuple(i for i in range(len(COMPARTMENTS)) if i not in _ACTIVE[self])

    @property
    def infected(self) -> tuple[int, ...]:
        """Active compartments other than S, R and the treated classes."""
        return tuple(i for i in self.active if COMPARTMENTS[i] not in ("S", "R", "I_T", "T"))

    @classmethod
    def parse(cls, value: "str | ModelVariant") -> "ModelVariant":
        if isinstance(value, cls):
            return value
        aliases = {"full": cls.FULL, "hiv": cls.HIV, "hivonly": cls.HIV, "pcp": cls.PCP, "pcponly": cls.PCP}
        try:
            return aliases[str(value).lower().replace("-", "").replace("_", "")]
        except KeyError:
            raise InvalidParameterError(f"unknown model variant {value!r}") from None


_ACTIVE = {
    ModelVariant.FULL: tuple(range(10)),
    ModelVariant.HIV: (IDX["S"], IDX["I_H"], IDX["I_A"], IDX["I_T"]),
    ModelVariant.PCP: (IDX["S"], IDX["C"], IDX["I_P"], IDX["R"]),
}


def _total(x) -> float:
    n = math.fsum(x)
    if not n > 0:
        raise DegeneratePopulationError(f"total population must be positive, got N={n}")
    return n


def force_pcp(p: ParameterSet, x: Sequence[float]) -> float:
    """Per-susceptible rate of acquiring PCP (frequency dependent)."""
    S, C, I_P, R, I_H, I_A, I_T, I_HP, I_AP, T = x
    return p.rho * p.c * (p.omega * C + I_P + p.theta1 * I_HP + p.theta2 * I_AP) / _total(x)


def force_hiv(p: ParameterSet, x: Sequence[float]) -> float:
    """Per-susceptible rate of acquiring HIV (frequency dependent)."""
    S, C, I_P, R, I_H, I_A, I_T, I_HP, I_AP, T = x
    return p.eta * p.k * (I_H + p.a1 * I_HP + p.a2 * I_A + p.a3 * I_AP) / _total(x)


def check_variant(variant: ModelVariant, x: Sequence[float]) -> None:
    for i in variant.inactive:
        if x[i] != 0:
            raise VariantMismatchError(
                f"{COMPARTMENTS[i]}={x[i]} must be zero for the {variant.value} variant"
            )


def make_rhs(variant: ModelVariant, p: ParameterSet) -> Callable[[float, np.ndarray], np.ndarray]:
    """Return ``f(t, y)`` for the variant, with parameters bound as locals.

    No validation happens inside ``f``; it is the integrator's hot path.
    """
    variant = ModelVariant.parse(variant)
    Lam, mu, nu_p, nu_a, nu = p.Lambda, p.mu, p.nu_p, p.nu_a, p.nu
    l1, l2, t1, t2, t3, t4 = p.lambda1, p.lambda2, p.tau1, p.tau2, p.tau3, p.tau4
    beta, xi, pi, gamma, eps = p.beta, p.xi, p.pi, p.gamma, p.epsilon
    rc, om, th1, th2 = p.rho * p.c, p.omega, p.theta1, p.theta2
    ek, a1, a2, a3 = p.eta * p.k, p.a1, p.a2, p.a3
    r = derived_rates(p)
    k1, k2, k3, q1, q2, q3, q4 = r.k1, r.k2, r.k3, r.q1, r.q2, r.q3, r.q4

    if variant is ModelVariant.FULL:

        def f(t, y):
            S, C, I_P, R, I_H, I_A, I_T, I_HP, I_AP, T = y.tolist()
            N = S + C + I_P + R + I_H + I_A + I_T + I_HP + I_AP + T
            if not N > 0:
                raise DegeneratePopulationError(f"N={N} at t={t}")
            aP = rc * (om * C + I_P + th1 * I_HP + th2 * I_AP) / N
            aH = ek * (I_H + a1 * I_HP + a2 * I_A + a3 * I_AP) / N
            return np.array((
                Lam + gamma * R - (aP + aH + mu) * S,
                xi * aP * S - (aH + k1) * C,
                (1.0 - xi) * aP * S + beta * C - (aH + k2) * I_P,
                eps * I_P + pi * C - (aH + k3) * R,
                aH * S + aH * R - (aP + q1) * I_H,
                l1 * I_H - (aP + q2) * I_A,
                t1 * I_H + t2 * I_A - mu * I_T,
                aH * (C + I_P) + aP * I_H - q3 * I_HP,
                aP * I_A + l2 * I_HP - q4 * I_AP,
                t3 * I_HP + t4 * I_AP - mu * T,
            ))

    elif variant is ModelVariant.HIV:

        def f(t, y):
            S, _, _, _, I_H, I_A, I_T, _, _, _ = y.tolist()
            N = S + I_H + I_A + I_T
            if not N > 0:
                raise DegeneratePopulationError(f"N_H={N} at t={t}")
            aH = ek * (I_H + a2 * I_A) / N
            return np.array((
                Lam - (aH + mu) * S,
                0.0, 0.0, 0.0,
                aH * S - q1 * I_H,
                l1 * I_H - q2 * I_A,
                t1 * I_H + t2 * I_A - mu * I_T,
                0.0, 0.0, 0.0,
            ))

    else:

        def f(t, y):
            S, C, I_P, R = y.tolist()[:4]
            N = S + C + I_P + R
            if not N > 0:
                raise DegeneratePopulationError(f"N_P={N} at t={t}")
            aP = rc * (om * C + I_P) / N
            return np.array((
                Lam + gamma * R - (aP + mu) * S,
                xi * aP * S - k1 * C,
                (1.0 - xi) * aP * S + beta * C - k2 * I_P,
                pi * C + eps * I_P - k3 * R,
                0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
            ))

    return f


def vector_field(variant: ModelVariant, p: ParameterSet, x: Sequence[float]) -> np.ndarray:
    """Time derivative of every compartment at state ``x``.

    The result always has ten entries; the inactive compartments of a
    sub-model get a zero derivative.
    """
    variant = ModelVariant.parse(variant)
    y = np.asarray(x, dtype=float)
    if y.shape != (10,):
        raise ValueError(f"state must have 10 compartments, got shape {y.shape}")
    check_variant(variant, y)
    _total(y)
    return make_rhs(variant, p)(0.0, y)


def population_balance(p: ParameterSet, x: Sequence[float]) -> float:
    """dN/dt implied by the demographic terms alone: recruitment minus deaths."""
    S, C, I_P, R, I_H, I_A, I_T, I_HP, I_AP, T = x
    return p.Lambda - p.mu * math.fsum(x) - p.nu_p * (I_P + I_HP) - p.nu_a * I_A - p.nu * I_AP


def disease_free_state(p: ParameterSet) -> StateVector:
    return StateVector(S=p.Lambda / p.mu)
