"""Normalized forward sensitivity indices of R0H and R0P.

The index of R with respect to x is (dR/dx) * x / R. Each index is computed
twice: from the closed-form derivative (log-derivative of the closed form)
and by a central difference of the closed form with relative step 1e-6.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import InvalidParameterError
from .model import ParameterSet, derived_rates
from .reproduction import r0_hiv_closed, r0_pcp_closed


class Target(enum.Enum):
    R0H = "r0h"
    R0P = "r0p"

    @classmethod
    def parse(cls, value) -> "Target":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidParameterError(f"unknown sensitivity target {value!r}") from None


# parameters entering each closed form, in the published table order (mu last)
TABLE_PARAMETERS = {
    Target.R0H: ("eta", "k", "a2", "lambda1", "tau1", "tau2", "nu_a", "mu"),
    Target.R0P: ("rho", "c", "xi", "omega", "nu_p", "beta", "epsilon", "pi", "mu"),
}
# computed but not part of the published table
NOT_PUBLISHED = {"mu"}

_CLOSED_FORMS = {Target.R0H: r0_hiv_closed, Target.R0P: r0_pcp_closed}


def _analytic_r0h(p: ParameterSet, name: str) -> float:
    d = derived_rates(p)
    g = d.q2 + p.a2 * p.lambda1
    x = getattr(p, name)
    if name in ("eta", "k"):
        return 1.0
    if name == "a2":
        return p.a2 * p.lambda1 / g
    if name == "lambda1":
        return x * (p.a2 / g - 1 / d.q1)
    if name == "tau1":
        return -x / d.q1
    if name in ("tau2", "nu_a"):
        return x * (1 / g - 1 / d.q2)
    if name == "mu":
        return x * (1 / g - 1 / d.q1 - 1 / d.q2)
    return 0.0


def _analytic_r0p(p: ParameterSet, name: str) -> float:
    d = derived_rates(p)
    xi, om = p.xi, p.omega
    g = xi * (d.k2 * om + p.beta) + (1 - xi) * d.k1
    x = getattr(p, name)
    if name in ("rho", "c"):
        return 1.0
    if name == "xi":
        return x * (d.k2 * om + p.beta - d.k1) / g
    if name == "omega":
        return xi * d.k2 * om / g
    if name in ("nu_p", "epsilon"):
        return x * (xi * om / g - 1 / d.k2)
    if name == "beta":
        return x * (1 / g - 1 / d.k1)
    if name == "pi":
        return x * ((1 - xi) / g - 1 / d.k1)
    if name == "mu":
        return x * ((xi * om + 1 - xi) / g - 1 / d.k1 - 1 / d.k2)
    return 0.0


def analytic_index(target, name: str, p: ParameterSet) -> float:
    target = Target.parse(target)
    if not hasattr(p, name):
        raise InvalidParameterError(f"unknown parameter {name!r}")
    fn = _analytic_r0h if target is Target.R0H else _analytic_r0p
    return fn(p, name)


def fd_index(target, name: str, p: ParameterSet, rel_step: float = 1e-6) -> float:
    target = Target.parse(target)
    fn = _CLOSED_FORMS[target]
    x = getattr(p, name)
    h = rel_step * x
    up, down = fn(p.replace(**{name: x + h})), fn(p.replace(**{name: x - h}))
    return (up - down) / (2 * h) * x / fn(p)


@dataclass(frozen=True)
class SensitivityEntry:
    parameter: str
    index: float
    published: bool
    zero_parameter: bool = False


def sensitivity_index(target, name: str, p: ParameterSet, method: str = "central-difference") -> SensitivityEntry:
    """Index of the target R0 with respect to ``name``.

    A parameter at exactly zero gets index 0 with ``zero_parameter`` set.
    """
    target = Target.parse(target)
    if not hasattr(p, name):
        raise InvalidParameterError(f"unknown parameter {name!r}")
    if not _CLOSED_FORMS[target](p) > 0:
        raise InvalidParameterError(f"{target.name} must be positive for a sensitivity index")
    if getattr(p, name) == 0:
        return SensitivityEntry(name, 0.0, name not in NOT_PUBLISHED, zero_parameter=True)
    if method == "closed-form":
        value = analytic_index(target, name, p)
    elif method == "central-difference":
        value = fd_index(target, name, p)
    else:
        raise InvalidParameterError(f"unknown method {method!r}")
    return SensitivityEntry(name, value, name not in NOT_PUBLISHED)


@dataclass(frozen=True)
class SensitivityTable:
    target: Target
    method: str
    entries: tuple

    def as_dict(self) -> dict[str, float]:
        return {e.parameter: e.index for e in self.entries}

    def __getitem__(self, name: str) -> float:
        return self.as_dict()[name]

    def to_rows(self) -> list[dict]:
        return [
            {"parameter": e.parameter, "index": e.index, "published": e.published,
             "zero_parameter": e.zero_parameter}
            for e in self.entries
        ]


def sensitivity_table(target, p: ParameterSet, method: str = "central-difference") -> SensitivityTable:
    target = Target.parse(target)
    entries = tuple(sensitivity_index(target, n, p, method) for n in TABLE_PARAMETERS[target])
    return SensitivityTable(target, method, entries)
