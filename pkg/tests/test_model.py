import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcphiv.equilibria import PUBLISHED_INITIAL_STATE
from pcphiv.errors import DegeneratePopulationError, InvalidParameterError, VariantMismatchError
from pcphiv.model import (
    COMPARTMENTS,
    IDX,
    ModelVariant,
    ModifierOrderWarning,
    ParameterSet,
    StateVector,
    derived_rates,
    disease_free_state,
    force_hiv,
    force_pcp,
    population_balance,
    vector_field,
)
from pcphiv.sampling import random_parameters, random_state


def test_derived_rates_baseline(baseline):
    d = derived_rates(baseline)
    assert d.k1 == pytest.approx(0.09546, abs=1e-12)
    assert d.q1 == pytest.approx(0.353, abs=1e-12)
    assert d.q2 == pytest.approx(0.536, abs=1e-12)
    assert d.k2 == pytest.approx(0.2 + 0.073 + 0.1)
    assert d.q4 == pytest.approx(0.23 + 0.073 + 0.42)


def test_derived_rates_only_mu():
    zero = {n: 0.0 for n in ParameterSet.__dataclass_fields__}
    zero.update(Lambda=1.0, mu=1.0, a1=1.0, a2=1.0, a3=1.0, theta1=1.0, theta2=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ModifierOrderWarning)
        d = derived_rates(ParameterSet(**zero))
    assert (d.k1, d.k2, d.k3, d.q1, d.q2, d.q3, d.q4) == (1, 1, 1, 1, 1, 1, 1)


@pytest.mark.parametrize("name,value", [("mu", 0.0), ("beta", -0.1), ("xi", 1.5), ("rho", math.nan), ("Lambda", 0.0)])
def test_invalid_parameters_rejected(baseline, name, value):
    with pytest.raises(InvalidParameterError):
        baseline.replace(**{name: value})


def test_unknown_parameter_rejected(baseline):
    with pytest.raises(InvalidParameterError):
        baseline.replace(sigma=1.0)


def test_modifier_order_warns(baseline):
    with pytest.warns(ModifierOrderWarning):
        baseline.replace(a3=1.0)


def test_force_examples(baseline):
    p = baseline.replace(rho=1.0, c=3.5)
    x = StateVector(S=850.0, C=100.0, I_P=50.0)
    assert force_pcp(p, x) == pytest.approx(3.5 * (41.026 + 50) / 1000, rel=1e-12)
    assert force_pcp(p, x) == pytest.approx(0.3185910, abs=5e-8)
    assert force_hiv(baseline, PUBLISHED_INITIAL_STATE) == pytest.approx(0.3 * 1260 / 12200, rel=1e-12)
    assert force_hiv(baseline, PUBLISHED_INITIAL_STATE) == pytest.approx(0.0309836, abs=5e-8)


def test_force_published_state_against_direct_formula(baseline):
    S, C, I_P, R, I_H, I_A, I_T, I_HP, I_AP, T = PUBLISHED_INITIAL_STATE
    N = 12200.0
    p = baseline
    expect = p.rho * p.c * (p.omega * C + I_P + p.theta1 * I_HP + p.theta2 * I_AP) / N
    assert force_pcp(p, PUBLISHED_INITIAL_STATE) == pytest.approx(expect, rel=1e-14)


def test_empty_pools_give_zero_force(baseline):
    x = StateVector(S=100.0, R=5.0, I_T=3.0, T=1.0)
    assert force_pcp(baseline, x) == 0.0
    assert force_hiv(baseline, x) == 0.0


def test_zero_population_is_an_error(baseline):
    with pytest.raises(DegeneratePopulationError):
        force_pcp(baseline, StateVector())
    with pytest.raises(DegeneratePopulationError):
        vector_field(ModelVariant.FULL, baseline, StateVector())


def test_variant_mismatch(baseline):
    with pytest.raises(VariantMismatchError):
        vector_field(ModelVariant.HIV, baseline, PUBLISHED_INITIAL_STATE)


def test_dfe_is_steady(baseline):
    for v in ModelVariant:
        dx = vector_field(v, baseline, disease_free_state(baseline))
        assert np.max(np.abs(dx)) < 1e-12 * baseline.Lambda


def test_conservation_identity(rng):
    for _ in range(1000):
        p = random_parameters(rng)
        x = random_state(rng)
        dx = vector_field(ModelVariant.FULL, p, x)
        assert abs(math.fsum(dx) - population_balance(p, x)) < 1e-12 * max(1.0, p.Lambda)


@settings(max_examples=200, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    zero=st.integers(0, 9),
)
def test_boundary_repulsion(seed, zero):
    rng = np.random.default_rng(seed)
    p = random_parameters(rng)
    y = random_state(rng).as_array()
    y[zero] = 0.0
    assert vector_field(ModelVariant.FULL, p, y)[zero] >= 0.0


def test_disease_free_set_is_invariant(rng):
    infected = [IDX[c] for c in COMPARTMENTS if c not in ("S", "I_T", "T")]
    for _ in range(100):
        p = random_parameters(rng)
        y = np.zeros(10)
        y[[0, 6, 9]] = rng.uniform(1, 1e4, 3)
        assert np.all(vector_field(ModelVariant.FULL, p, y)[infected] == 0.0)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(1e-3, 1e3))
def test_force_homogeneity(seed, scale):
    rng = np.random.default_rng(seed)
    p = random_parameters(rng)
    x = random_state(rng).as_array()
    assert force_pcp(p, x * scale) == pytest.approx(force_pcp(p, x), rel=1e-12)
    assert force_hiv(p, x * scale) == pytest.approx(force_hiv(p, x), rel=1e-12)


def test_full_matches_submodels_on_their_faces(rng):
    for _ in range(50):
        p = random_parameters(rng)
        for v in (ModelVariant.HIV, ModelVariant.PCP):
            x = random_state(rng, v)
            full = vector_field(ModelVariant.FULL, p, x)
            sub = vector_field(v, p, x)
            np.testing.assert_allclose(full[list(v.active)], sub[list(v.active)], rtol=1e-12, atol=1e-9)


def test_state_vector_helpers():
    x = PUBLISHED_INITIAL_STATE
    assert x.N == 12200.0
    assert StateVector.from_array(x.as_array()) == x
    assert x.is_admissible()
    assert not x._replace(C=-1.0).is_admissible()


def test_variant_parse():
    assert ModelVariant.parse("HIV") is ModelVariant.HIV
    with pytest.raises(InvalidParameterError):
        ModelVariant.parse("tb")


def test_parameter_set_roundtrip(baseline):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert ParameterSet(**baseline.as_dict()) == baseline
