import math

import numpy as np
import pytest

from steerlab.errors import ConfigError, UnstableConfig
from steerlab.model import CascadeConfig, ChannelParams, OscillatorParams
from steerlab.steady_state import bare_variance, bare_variance_asymptote, rwa_moments

from conftest import HOT, hot_pair

# 50-digit evaluations of the closed form, rounded to 17 digits
FROZEN = {
    0.35: dict(var_m=0.88467653966730118, var_p=0.88467653966730118, cov=-0.68819072607275861, bare=0.88467653966730118),
    0.30: dict(var_m=0.88467653966730118, var_p=0.98931893626856941, cov=-0.68489842669312182, bare=1.6827542592039017),
    0.40: dict(var_m=0.88467653966730118, var_p=0.9151621531445516, cov=-0.70439054935096769, bare=0.64275518940286373),
}


@pytest.mark.parametrize("tp", sorted(FROZEN))
def test_c50_moments_match_frozen_values(tp):
    m = rwa_moments(hot_pair(theta_plus=tp * math.pi))
    ref = FROZEN[tp]
    assert m.var_xm == pytest.approx(ref["var_m"], rel=1e-13)
    assert m.var_xp == pytest.approx(ref["var_p"], rel=1e-13)
    assert m.cov_xx == pytest.approx(ref["cov"], rel=1e-13)
    assert m.bare_var_p == pytest.approx(ref["bare"], rel=1e-13)


def test_lossy_frozen_value():
    m = rwa_moments(hot_pair(theta_plus=0.3 * math.pi, epsilon=0.2))
    assert m.var_xp == pytest.approx(1.1280060008556359, rel=1e-13)
    assert m.cov_xx == pytest.approx(-0.61259177590739075, rel=1e-13)


def test_full_loss_removes_correlations():
    m = rwa_moments(hot_pair(theta_plus=0.3 * math.pi, epsilon=1.0))
    assert m.cov_xx == 0.0
    assert m.var_xp == m.bare_var_p


def test_uncoupled_upstream_is_thermal():
    c = CascadeConfig(OscillatorParams(0.0, 0.7, 2.0, 3.0), OscillatorParams(5.0, 1.2, 1.0, 1.0), ChannelParams())
    m = rwa_moments(c)
    assert m.cov_xx == 0.0
    assert m.var_xm == pytest.approx(3.5, rel=1e-15)


def test_rwa_symmetries(c50_config):
    m = rwa_moments(c50_config)
    assert m.var_xm == m.var_pm and m.var_xp == m.var_pp
    assert m.cov_xx + m.cov_pp == 0.0


def test_nonzero_phi_is_rejected():
    with pytest.raises(ConfigError):
        rwa_moments(hot_pair(phi=0.1))


def test_unstable_is_rejected():
    with pytest.raises(UnstableConfig):
        rwa_moments(hot_pair(theta_plus=0.1))


def test_bare_variance_limits():
    assert bare_variance(OscillatorParams(0.0, 1.0, 2.0, 4.0)) == pytest.approx(4.5)
    big = OscillatorParams.from_cooperativity(1e8, math.pi / 2, **HOT)
    assert bare_variance(big) == pytest.approx(0.5, rel=1e-6)


def test_bare_variance_approaches_asymptote():
    th = 0.35 * math.pi
    target = bare_variance_asymptote(th)
    assert target == pytest.approx(0.8507, abs=1e-4)
    gaps = [abs(bare_variance(OscillatorParams.from_cooperativity(c, th, **HOT)) - target) for c in (1e2, 1e3, 1e4, 1e5)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] / target < 1e-3


def test_bare_variance_rejects_unstable():
    with pytest.raises(UnstableConfig):
        bare_variance(OscillatorParams(10.0, 0.0, 1.0, 0.0))


def test_covariance_matrix_layout(c50_config):
    m = rwa_moments(c50_config)
    v = m.covariance_matrix()
    assert np.allclose(v, v.T)
    assert v[0, 2] == m.cov_xx and v[1, 3] == m.cov_pp
    assert v[0, 1] == 0 and v[2, 3] == 0 and v[0, 3] == 0 and v[1, 2] == 0
