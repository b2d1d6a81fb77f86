import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from pcphiv.equilibria import PUBLISHED_INITIAL_STATE
from pcphiv.errors import InvalidParameterError, NonSettlementError, StepLimitError
from pcphiv.integrator import IntegratorConfig, dopri5, integrate, settle_to_equilibrium
from pcphiv.model import ModelVariant, StateVector, make_rhs
from pcphiv.sampling import random_parameters, random_state


def test_exponential_decay():
    traj = dopri5(lambda t, y: -y, 0.0, np.array([1.0]), 1.0, IntegratorConfig())
    assert traj.t_end == 1.0
    assert traj.states[-1, 0] == pytest.approx(math.exp(-1), abs=1e-7)


def test_fifth_order_convergence():
    # fixed steps via a huge tolerance window: compare errors at h and h/2
    def err(h):
        cfg = IntegratorConfig(rtol=1e3, atol=1e3, initial_step=h, max_step=h)
        traj = dopri5(lambda t, y: np.array([y[1], -y[0]]), 0.0, np.array([0.0, 1.0]), 1.0, cfg)
        return abs(traj.states[-1, 0] - math.sin(1.0))

    order = math.log2(err(0.1) / err(0.05))
    assert 4.5 < order < 5.8


def test_dense_output_between_nodes():
    traj = dopri5(lambda t, y: -y, 0.0, np.array([1.0]), 5.0, IntegratorConfig())
    grid, ys = traj.sample(0.1)
    assert len(grid) == 51 and grid[-1] == 5.0
    np.testing.assert_allclose(ys[:, 0], np.exp(-grid), atol=1e-6)


def test_susceptible_only_decay(baseline):
    # no infection: S(t) = L/mu + (S0 - L/mu) e^{-mu t}
    x0 = StateVector(S=1000.0)
    traj = integrate(ModelVariant.FULL, baseline, x0, 50.0)
    L, mu = baseline.Lambda, baseline.mu
    expect = L / mu + (1000.0 - L / mu) * math.exp(-mu * 50.0)
    assert traj.final.S == pytest.approx(expect, rel=1e-7)


@pytest.mark.parametrize("variant", list(ModelVariant))
def test_agrees_with_independent_solver(baseline, variant):
    x0 = random_state(np.random.default_rng(7), variant)
    ours = integrate(variant, baseline, x0, 30.0).final.as_array()
    f = make_rhs(variant, baseline)
    ref = solve_ivp(f, (0, 30.0), x0.as_array(), method="DOP853", rtol=1e-12, atol=1e-12).y[:, -1]
    np.testing.assert_allclose(ours, ref, rtol=1e-6, atol=1e-6)


def test_nonnegative_and_bounded(rng):
    for _ in range(100):
        p = random_parameters(rng)
        x0 = random_state(rng)
        traj = integrate(ModelVariant.FULL, p, x0, 20.0)
        assert traj.states.min() >= -1e-9 * max(1.0, x0.N)
        bound = max(x0.N, p.Lambda / p.mu) * (1 + 1e-6)
        assert traj.states.sum(axis=1).max() <= bound
        assert not traj.invariant_breach


def test_step_limit(baseline):
    with pytest.raises(StepLimitError):
        integrate(ModelVariant.FULL, baseline, PUBLISHED_INITIAL_STATE, 100.0, IntegratorConfig(max_steps=5))


def test_bad_inputs(baseline):
    with pytest.raises(InvalidParameterError):
        integrate(ModelVariant.FULL, baseline, PUBLISHED_INITIAL_STATE, -1.0)
    with pytest.raises(InvalidParameterError):
        integrate(ModelVariant.FULL, baseline, PUBLISHED_INITIAL_STATE._replace(C=-5.0), 1.0)


def test_settle_pcp(baseline):
    x0 = PUBLISHED_INITIAL_STATE
    s = settle_to_equilibrium(ModelVariant.FULL, baseline, x0)
    assert s.residual < 1e-9 * max(1.0, max(s.state))
    assert s.t < 5000.0


def test_settle_reports_terminal_state(baseline):
    x0 = StateVector(S=20000.0, I_H=100.0)
    with pytest.raises(NonSettlementError) as info:
        settle_to_equilibrium(ModelVariant.HIV, baseline, x0, horizon=10.0)
    assert info.value.state.t == pytest.approx(10.0)
