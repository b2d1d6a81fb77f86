"""Random parameter sets and initial states for property tests and audits."""

from __future__ import annotations

import warnings

import numpy as np

from .model import ModelVariant, ModifierOrderWarning, ParameterSet, StateVector
from .reproduction import r0_hiv_closed, r0_pcp_closed


def random_parameters(rng: np.random.Generator, spread: float = 0.5) -> ParameterSet:
    """Rates drawn uniformly within +-spread of a typical magnitude.

    Modifiers keep their published ordering. Contact rates are drawn on a
    wide range so both reproduction numbers land on either side of 1.
    """
    def u(center):
        return float(center * rng.uniform(1 - spread, 1 + spread))

    a = np.sort(rng.uniform(0.5, 2.0, size=3))
    th = np.sort(rng.uniform(0.5, 2.0, size=2))
    return ParameterSet(
        Lambda=u(2000.0),
        mu=u(0.073),
        nu_p=u(0.1),
        nu_a=u(0.333),
        nu=u(0.42),
        lambda1=u(0.08),
        lambda2=u(0.3105),
        tau1=u(0.2),
        tau2=u(0.13),
        tau3=u(0.314),
        tau4=u(0.23),
        beta=u(0.01096),
        xi=float(rng.uniform(0.05, 0.95)),
        pi=u(0.0115),
        gamma=u(0.0621),
        epsilon=u(0.2),
        rho=float(rng.uniform(0.89, 0.99)),
        c=float(rng.uniform(0.2, 10.0)),
        omega=float(rng.uniform(0.05, 1.0)),
        eta=float(rng.uniform(0.05, 0.2)),
        k=float(rng.uniform(0.5, 10.0)),
        a1=float(a[0]),
        a2=float(a[1]),
        a3=float(a[2]),
        theta1=float(th[0]),
        theta2=float(th[1]),
    )


def with_reproduction_numbers(p: ParameterSet, r0h: float | None = None, r0p: float | None = None) -> ParameterSet:
    """Rescale the contact rates k and c so the closed forms hit the targets."""
    changes = {}
    if r0h is not None:
        changes["k"] = p.k * r0h / r0_hiv_closed(p)
    if r0p is not None:
        changes["c"] = p.c * r0p / r0_pcp_closed(p)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ModifierOrderWarning)
        return p.replace(**changes)


def random_state(
    rng: np.random.Generator,
    variant=ModelVariant.FULL,
    n_range: tuple[float, float] = (5000.0, 30000.0),
) -> StateVector:
    """Uniform total in ``n_range`` split over the variant's compartments."""
    variant = ModelVariant.parse(variant)
    n = rng.uniform(*n_range)
    y = np.zeros(10)
    y[list(variant.active)] = rng.dirichlet(np.ones(len(variant.active))) * n
    return StateVector.from_array(y)
