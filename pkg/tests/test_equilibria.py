import numpy as np
import pytest
from scipy.integrate import solve_ivp

from pcphiv.equilibria import (
    DISEASE_FREE,
    ENDEMIC,
    PUBLISHED_INITIAL_STATE,
    closed_form_audit,
    dfe,
    endemic_hiv_closed,
    endemic_numeric,
    endemic_pcp_closed,
    residual_of,
)
from pcphiv.errors import ThresholdError
from pcphiv.model import ModelVariant, derived_rates, make_rhs
from pcphiv.sampling import random_parameters, with_reproduction_numbers


def hiv_oracle(p):
    """Endemic HIV sub-model state from the equilibrium conditions: N = R0H * S."""
    d = derived_rates(p)
    r = p.eta * p.k * (d.q2 + p.a2 * p.lambda1) / (d.q1 * d.q2)
    per_alpha = (1 + p.lambda1 / d.q2 + (p.tau1 + p.tau2 * p.lambda1 / d.q2) / p.mu) / d.q1
    alpha = (r - 1) / per_alpha
    S = p.Lambda / (alpha + p.mu)
    I_H = alpha * S / d.q1
    I_A = p.lambda1 * I_H / d.q2
    return np.array([S, 0, 0, 0, I_H, I_A, (p.tau1 * I_H + p.tau2 * I_A) / p.mu, 0, 0, 0])


def pcp_oracle(p):
    """Endemic PCP sub-model state from the equilibrium conditions: N = R0P * S."""
    d = derived_rates(p)
    xi, k1, k2, k3 = p.xi, d.k1, d.k2, d.k3
    rc = p.rho * p.c
    r = rc * (xi * (k2 * p.omega + p.beta) + (1 - xi) * k1) / (k1 * k2)
    c_per = xi / k1
    ip_per = ((1 - xi) + p.beta * c_per) / k2
    r_per = (p.pi * c_per + p.epsilon * ip_per) / k3
    alpha = (r - 1) / (c_per + ip_per + r_per)
    S = p.Lambda / (alpha + p.mu - p.gamma * alpha * r_per)
    return np.array([S, alpha * S * c_per, alpha * S * ip_per, alpha * S * r_per, 0, 0, 0, 0, 0, 0])


def test_dfe(baseline):
    rep = dfe(ModelVariant.FULL, baseline)
    assert rep.state.S == pytest.approx(2000 / 0.073)
    assert rep.classification == DISEASE_FREE
    assert rep.residual < 1e-12 * baseline.Lambda


def test_pcp_baseline_matches_oracle(baseline):
    rep = endemic_numeric(ModelVariant.PCP, baseline)
    assert rep.classification == ENDEMIC and rep.interior
    np.testing.assert_allclose(rep.state.as_array(), pcp_oracle(baseline), rtol=1e-9, atol=1e-9)
    assert rep.residual < 1e-10 * max(rep.state)


def test_hiv_baseline_matches_oracle(baseline):
    rep = endemic_numeric(ModelVariant.HIV, baseline)
    assert rep.interior
    np.testing.assert_allclose(rep.state.as_array(), hiv_oracle(baseline), rtol=1e-6, atol=1e-6)
    assert rep.state.I_H == pytest.approx(13.63, abs=0.01)


def test_full_baseline_is_hiv_free_boundary(baseline):
    rep = endemic_numeric(ModelVariant.FULL, baseline)
    assert rep.classification == ENDEMIC
    assert not rep.interior
    np.testing.assert_allclose(rep.state.as_array(), pcp_oracle(baseline), rtol=1e-9, atol=1e-9)
    assert rep.residual < 1e-10


def test_numeric_matches_long_integration(baseline):
    f = make_rhs(ModelVariant.FULL, baseline)
    ref = solve_ivp(f, (0, 3000), PUBLISHED_INITIAL_STATE.as_array(), method="LSODA", rtol=1e-10, atol=1e-10).y[:, -1]
    rep = endemic_numeric(ModelVariant.FULL, baseline)
    np.testing.assert_allclose(rep.state.as_array(), ref, rtol=1e-6, atol=1e-5)


def test_random_submodel_roots_match_oracles(rng):
    for _ in range(10):
        p = with_reproduction_numbers(random_parameters(rng), r0h=rng.uniform(1.5, 4), r0p=rng.uniform(1.5, 4))
        h = endemic_numeric(ModelVariant.HIV, p)
        np.testing.assert_allclose(h.state.as_array(), hiv_oracle(p), rtol=1e-7, atol=1e-7)
        c = endemic_numeric(ModelVariant.PCP, p)
        np.testing.assert_allclose(c.state.as_array(), pcp_oracle(p), rtol=1e-7, atol=1e-7)


def test_below_threshold_goes_disease_free(baseline):
    p = with_reproduction_numbers(baseline, r0h=0.5)
    rep = endemic_numeric(ModelVariant.HIV, p)
    assert rep.classification == DISEASE_FREE
    assert rep.state.S == pytest.approx(p.Lambda / p.mu, rel=1e-9)


def test_closed_forms_threshold(baseline):
    with pytest.raises(ThresholdError):
        endemic_hiv_closed(with_reproduction_numbers(baseline, r0h=0.8))
    with pytest.raises(ThresholdError):
        endemic_pcp_closed(with_reproduction_numbers(baseline, r0p=0.8))


def test_closed_forms_disagree_with_roots(baseline):
    # the displayed formulas do not solve the steady-state equations
    hiv = endemic_hiv_closed(baseline)
    assert not hiv.converged
    assert min(hiv.state) < 0
    pcp = endemic_pcp_closed(baseline)
    assert not pcp.converged
    assert pcp.residual > 1.0


def test_audit_report(baseline):
    rep = closed_form_audit(baseline)
    for key in ("hiv", "pcp"):
        assert "numeric" in rep[key]
        assert rep[key]["max_relative_discrepancy"] > 0.1


def test_residual_nan_for_nonpositive_total(baseline):
    x = np.zeros(10)
    x[0] = -1.0
    assert np.isnan(residual_of(ModelVariant.FULL, baseline, x))
