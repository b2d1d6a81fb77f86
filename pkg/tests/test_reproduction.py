import numpy as np
import pytest

from pcphiv.linalg import spectral_radius
from pcphiv.model import ModelVariant
from pcphiv.reproduction import ngm, r0, r0_closed, r0_hiv_closed, r0_pcp_closed
from pcphiv.sampling import random_parameters


def test_baseline_values(baseline):
    assert r0_hiv_closed(baseline) == pytest.approx(1.0021, abs=5e-4)
    assert r0_pcp_closed(baseline) == pytest.approx(11.6601, abs=5e-4)
    # hand arithmetic: 0.3 * (0.536 + 1.2 * 0.08) / (0.353 * 0.536)
    assert r0_hiv_closed(baseline) == pytest.approx(0.3 * 0.632 / (0.353 * 0.536), rel=1e-14)
    assert r0(ModelVariant.FULL, baseline) == pytest.approx(r0_pcp_closed(baseline), rel=1e-12)


def test_ngm_matches_closed_forms(rng):
    for _ in range(1000):
        p = random_parameters(rng)
        for v in (ModelVariant.HIV, ModelVariant.PCP):
            value = r0_closed(v, p)
            assert abs(spectral_radius(ngm(v, p).K) - value) <= 1e-10 * (1 + value)
        full = r0(ModelVariant.FULL, p)
        assert full == pytest.approx(max(r0_hiv_closed(p), r0_pcp_closed(p)), rel=1e-9)


def test_ngm_shapes(baseline):
    assert ngm("hiv", baseline).K.shape == (2, 2)
    assert ngm("pcp", baseline).K.shape == (2, 2)
    d = ngm("full", baseline)
    assert d.K.shape == (6, 6)
    assert d.compartments == ("C", "I_P", "I_H", "I_A", "I_HP", "I_AP")
    assert np.all(d.F >= 0)


@pytest.mark.parametrize("name,sign", [("k", 1), ("a2", 1), ("tau1", -1), ("nu_a", -1)])
def test_r0h_monotone(baseline, name, sign):
    x = getattr(baseline, name)
    lo, hi = r0_hiv_closed(baseline.replace(**{name: 0.9 * x})), r0_hiv_closed(baseline.replace(**{name: 1.1 * x}))
    assert sign * (hi - lo) > 0


@pytest.mark.parametrize("name,sign", [("c", 1), ("omega", 1), ("xi", 1), ("epsilon", -1), ("pi", -1)])
def test_r0p_monotone(baseline, name, sign):
    x = getattr(baseline, name)
    lo, hi = r0_pcp_closed(baseline.replace(**{name: 0.9 * x})), r0_pcp_closed(baseline.replace(**{name: 1.1 * x}))
    assert sign * (hi - lo) > 0


def test_zero_contact_gives_zero(baseline):
    p = baseline.replace(k=0.0, c=0.0)
    assert r0(ModelVariant.FULL, p) == 0.0


def test_transfer_matrices_invertible(rng):
    # V is triangular with diagonal entries >= mu > 0
    for _ in range(100):
        p = random_parameters(rng)
        for v in ModelVariant:
            d = ngm(v, p)
            np.testing.assert_allclose(d.V @ np.linalg.inv(d.V), np.eye(len(d.V)), atol=1e-9)
