"""Next-generation matrices and basic reproduction numbers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, SingularMatrixError
from .linalg import invert, spectral_radius
from .model import ModelVariant, ParameterSet, StateVector, derived_rates, disease_free_state

# infected compartments of each NGM, in matrix order
NGM_COMPARTMENTS = {
    ModelVariant.FULL: ("C", "I_P", "I_H", "I_A", "I_HP", "I_AP"),
    ModelVariant.HIV: ("I_H", "I_A"),
    ModelVariant.PCP: ("C", "I_P"),
}


@dataclass(frozen=True)
class NgmDecomposition:
    variant: ModelVariant
    F: np.ndarray  # new infections
    V: np.ndarray  # transfers
    dfe: StateVector
    compartments: tuple

    @property
    def K(self) -> np.ndarray:
        return self.F @ invert(self.V)


def _pcp_blocks(p: ParameterSet):
    r = derived_rates(p)
    rc = p.rho * p.c
    F = np.array([
        [p.xi * rc * p.omega, p.xi * rc],
        [(1 - p.xi) * rc * p.omega, (1 - p.xi) * rc],
    ])
    V = np.array([[r.k1, 0.0], [-p.beta, r.k2]])
    return F, V


def _hiv_blocks(p: ParameterSet):
    r = derived_rates(p)
    ek = p.eta * p.k
    F = np.array([[ek, ek * p.a2], [0.0, 0.0]])
    V = np.array([[r.q1, 0.0], [-p.lambda1, r.q2]])
    return F, V


def ngm(variant, p: ParameterSet) -> NgmDecomposition:
    variant = ModelVariant.parse(variant)
    if variant is ModelVariant.HIV:
        F, V = _hiv_blocks(p)
    elif variant is ModelVariant.PCP:
        F, V = _pcp_blocks(p)
    else:
        r = derived_rates(p)
        rc, ek = p.rho * p.c, p.eta * p.k
        xi = p.xi
        F = np.zeros((6, 6))
        F[0] = [xi * rc * p.omega, xi * rc, 0, 0, xi * rc * p.theta1, xi * rc * p.theta2]
        F[1] = [(1 - xi) * rc * p.omega, (1 - xi) * rc, 0, 0,
                (1 - xi) * rc * p.theta1, (1 - xi) * rc * p.theta2]
        F[2] = [0, 0, ek, p.a2 * ek, p.a1 * ek, p.a3 * ek]
        V = np.zeros((6, 6))
        V[0, 0] = r.k1
        V[1, 0], V[1, 1] = -p.beta, r.k2
        V[2, 2] = r.q1
        V[3, 2], V[3, 3] = -p.lambda1, r.q2
        V[4, 4] = r.d1
        V[5, 4], V[5, 5] = -p.lambda2, r.d2
    try:
        invert(V)
    except SingularMatrixError as exc:
        raise SingularMatrixError(f"transfer matrix V is singular: {exc}") from exc
    return NgmDecomposition(variant, F, V, disease_free_state(p), NGM_COMPARTMENTS[variant])


def r0_hiv_closed(p: ParameterSet) -> float:
    r = derived_rates(p)
    return p.eta * p.k * (r.q2 + p.a2 * p.lambda1) / (r.q1 * r.q2)


def r0_pcp_closed(p: ParameterSet) -> float:
    r = derived_rates(p)
    return (
        p.rho * p.c * (p.xi * (r.k2 * p.omega + p.beta) + (1 - p.xi) * r.k1) / (r.k1 * r.k2)
    )


def r0_closed(variant, p: ParameterSet) -> float:
    variant = ModelVariant.parse(variant)
    if variant is ModelVariant.HIV:
        return r0_hiv_closed(p)
    if variant is ModelVariant.PCP:
        return r0_pcp_closed(p)
    return max(r0_hiv_closed(p), r0_pcp_closed(p))


def r0(variant, p: ParameterSet) -> float:
    """Spectral radius of F V^-1.

    For the full model the result is also checked against the larger of the
    two sub-model closed forms.
    """
    variant = ModelVariant.parse(variant)
    value = spectral_radius(ngm(variant, p).K)
    if variant is ModelVariant.FULL:
        expected = max(r0_hiv_closed(p), r0_pcp_closed(p))
        if abs(value - expected) > 1e-9 * expected + 1e-14:
            raise NumericalError(
                f"NGM spectral radius {value!r} disagrees with max of closed forms {expected!r}"
            )
    return value
