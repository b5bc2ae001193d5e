import math

import numpy as np
import pytest
from hypothesis import strategies as st

from steerlab.model import TWO_PI, CascadeConfig, ChannelParams, OscillatorParams, derived_rates

HOT = dict(gamma0=TWO_PI * 0.1, nbar=1e5)
VACUUM = dict(gamma0=TWO_PI * 20e3, nbar=0.0)


def hot_pair(c_minus=50.0, c_plus=50.0, theta_minus=0.35 * math.pi, theta_plus=0.35 * math.pi, epsilon=0.0, phi=0.0):
    return CascadeConfig(
        OscillatorParams.from_cooperativity(c_minus, theta_minus, **HOT),
        OscillatorParams.from_cooperativity(c_plus, theta_plus, **HOT),
        ChannelParams(epsilon, phi),
    )


@pytest.fixture
def c50_config():
    return hot_pair()


@st.composite
def oscillators(draw):
    gamma0 = 10.0 ** draw(st.floats(-2.0, 4.0))
    nbar = draw(st.one_of(st.just(0.0), st.floats(1e-2, 1e5)))
    coop = 10.0 ** draw(st.floats(-2.0, 3.0))
    theta = draw(st.floats(0.0, 0.5 * math.pi))
    return OscillatorParams.from_cooperativity(coop, theta, gamma0, nbar)


def _stable(p, margin=1e-3):
    return derived_rates(p).gamma_total >= margin * max(p.gamma, p.gamma0)


@st.composite
def stable_configs(draw, random_phi=False):
    first = draw(oscillators().filter(_stable))
    second = draw(oscillators().filter(_stable))
    eps = draw(st.floats(0.0, 1.0))
    phi = draw(st.floats(-math.pi, math.pi)) if random_phi else 0.0
    return CascadeConfig(first, second, ChannelParams(eps, phi))


def rel_close(a, b, rtol):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.all(np.abs(a - b) <= rtol * np.maximum(np.abs(b), 1e-300))
