"""Randomized invariants of the steady state and steering parameters (1000 configs each)."""

import math
from dataclasses import replace

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from steerlab.cli import oracle_deviation
from steerlab.dynamics_oracle import heisenberg_min_eig, lyapunov_covariance
from steerlab.model import ChannelParams
from steerlab.steady_state import rwa_moments
from steerlab.steering import (
    THRESHOLD,
    decomposed_e_minus,
    decomposed_e_plus,
    optimal_gains,
    steering_from_covariance,
    steering_parameters,
)

from conftest import oscillators, stable_configs

N = 1000
many = settings(max_examples=N, deadline=None)


@many
@given(stable_configs())
def test_lyapunov_matches_closed_form(c):
    assert oracle_deviation(c) <= 1e-8


@many
@given(stable_configs(random_phi=True))
def test_rwa_symmetries_of_lyapunov_state(c):
    v = lyapunov_covariance(c)
    scale = np.sqrt(np.outer(np.diag(v), np.diag(v)))
    assert abs(v[0, 0] - v[1, 1]) <= 1e-9 * v[0, 0]
    assert abs(v[2, 2] - v[3, 3]) <= 1e-9 * v[2, 2]
    # cross quadratures within one oscillator vanish
    assert abs(v[0, 1]) <= 1e-9 * scale[0, 1] and abs(v[2, 3]) <= 1e-9 * scale[2, 3]
    if c.channel.phi == 0.0:
        assert abs(v[0, 2] + v[1, 3]) <= 1e-9 * scale[0, 2]
        assert abs(v[0, 3]) <= 1e-9 * scale[0, 3]


@many
@given(stable_configs(random_phi=True))
def test_heisenberg_condition(c):
    v = lyapunov_covariance(c)
    assert heisenberg_min_eig(v) >= -1e-9 * np.abs(v).max()


@many
@given(stable_configs())
def test_bare_variance_decomposition(c):
    m = rwa_moments(c)
    rep = steering_parameters(m)
    fw = m.loss_weighted_f
    scale = m.var_xp + m.var_xm + abs(fw * m.cov_xx)
    assert abs(decomposed_e_plus(m.bare_var_p, m.var_xm, m.cov_xx, fw) - rep.e_plus_given_minus) <= 1e-9 * scale
    if m.cov_xx != 0.0:
        assert abs(decomposed_e_minus(m.bare_var_p, m.var_xm, m.cov_xx, fw) - rep.e_minus_given_plus) <= 1e-9 * scale


@many
@given(stable_configs())
def test_ratio_and_correlation_identities(c):
    m = rwa_moments(c)
    rep = steering_parameters(m)
    rho2 = m.cov_xx**2 / (m.var_xm * m.var_xp)
    # E+|- = var(X+) (1 - rho^2) and E-|+ = var(X-) (1 - rho^2)
    tol = 1e-9 * max(1.0, rho2 / max(1.0 - rho2, 1e-300))
    assert abs(rep.e_plus_given_minus / m.var_xp - (1.0 - rho2)) <= tol * (1.0 - rho2) + 1e-12
    assert abs(rep.e_minus_given_plus / m.var_xm - (1.0 - rho2)) <= tol * (1.0 - rho2) + 1e-12
    if rep.e_minus_given_plus > 1e-12 * m.var_xm:
        assert math.isclose(rep.ratio, m.var_xp / m.var_xm, rel_tol=1e-8)


@many
@given(stable_configs(), st.sampled_from([-1e-3, 1e-3]))
def test_gains_are_optimal(c, rel):
    v = lyapunov_covariance(c)
    gx, gp = optimal_gains(rwa_moments(c))

    def inferred(var_t, var_s, cov, g, sign):
        return var_t - 2 * sign * g * cov + g * g * var_s

    for (t, s, g, sign) in ((2, 0, gx, 1.0), (3, 1, gp, -1.0)):
        best = inferred(v[t, t], v[s, s], v[t, s], g, sign)
        dg = rel * max(abs(g), 1e-6)
        moved = inferred(v[t, t], v[s, s], v[t, s], g + dg, sign)
        assert moved >= best - 1e-10 * v[t, t]
        # the excess is the curvature term; rounding of v[t, t] sets the floor
        assert abs((moved - best) - dg * dg * v[s, s]) <= 1e-8 * v[t, t] + 1e-6 * dg * dg * v[s, s]


@many
@given(stable_configs(random_phi=True), oscillators())
def test_upstream_block_ignores_downstream(c, other):
    v1 = lyapunov_covariance(c)
    if other.gamma0 - other.gamma * math.cos(2 * other.theta) < 1e-3 * max(other.gamma, other.gamma0):
        return
    v2 = lyapunov_covariance(replace(c, second=other))
    assert np.allclose(v1[:2, :2], v2[:2, :2], rtol=1e-10, atol=0)


@many
@given(stable_configs(), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_loss_only_weakens_steering(c, e1, e2):
    lo, hi = sorted((e1, e2))
    r_lo = steering_parameters(rwa_moments(replace(c, channel=ChannelParams(lo))))
    r_hi = steering_parameters(rwa_moments(replace(c, channel=ChannelParams(hi))))
    m_lo = rwa_moments(replace(c, channel=ChannelParams(lo)))
    m_hi = rwa_moments(replace(c, channel=ChannelParams(hi)))
    assert abs(m_hi.cov_xx) <= abs(m_lo.cov_xx) * (1 + 1e-12)
    # every direction steered at the larger loss is steered at the smaller one
    assert int(r_hi.classification) & ~int(r_lo.classification) == 0 or (
        min(r_hi.e_plus_given_minus, r_hi.e_minus_given_plus) > THRESHOLD * (1 - 1e-9)
    )


@many
@given(stable_configs())
def test_general_covariance_route_agrees(c):
    rep = steering_parameters(rwa_moments(c))
    e_pm, e_mp = steering_from_covariance(lyapunov_covariance(c))
    v = rwa_moments(c)
    assert abs(e_pm - rep.e_plus_given_minus) <= 1e-7 * v.var_xp
    assert abs(e_mp - rep.e_minus_given_plus) <= 1e-7 * v.var_xm


def test_tiny_angle_coupling_survives_underflow():
    from steerlab.model import CascadeConfig, OscillatorParams

    c = CascadeConfig(OscillatorParams(0.5, 0.0, 1.0, 0.0), OscillatorParams(0.5, 1.2e-228, 1.0, 0.0), ChannelParams())
    v = lyapunov_covariance(c)
    assert v[0, 2] != 0.0
    assert oracle_deviation(c) <= 1e-8


def test_cancelled_covariance_compared_on_term_scale():
    from steerlab.model import CascadeConfig, OscillatorParams

    c = CascadeConfig(OscillatorParams(0.5, 1.5707963267948963, 1.0, 0.0), OscillatorParams(0.5, 0.0, 1.0, 0.0), ChannelParams())
    assert oracle_deviation(c) <= 1e-8
