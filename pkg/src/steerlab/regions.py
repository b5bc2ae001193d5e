"""Boundaries of steering regions along one cooperativity ratio."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .optimize import scenario_config
from .steady_state import moments_arrays
from .steering import THRESHOLD, steering_arrays


def _two_way_margin(scenario, c_minus, theta_minus, theta_plus, epsilon, log_ratio):
    """max(E+|-, E-|+) - 1/2 on an array of log10(C+/C-); negative means two-way."""
    base = scenario_config(scenario, c_minus, theta_minus=theta_minus, theta_plus=theta_plus, epsilon=epsilon)
    m, p = base.first, base.second
    gp = c_minus * 10.0 ** np.asarray(log_ratio, dtype=float) * p.gamma_tilde0
    with np.errstate(divide="ignore", invalid="ignore"):
        var_m, var_p, cov, _, _, gt_p, _ = moments_arrays(
            m.gamma, m.theta, m.gamma0, m.nbar, gp, p.theta, p.gamma0, p.nbar, epsilon
        )
        e_pm, e_mp = steering_arrays(var_m, var_p, cov)
    out = np.maximum(e_pm, e_mp) - THRESHOLD
    return np.where(gt_p > 0.0, out, np.inf)


def two_way_band(
    c_minus: float,
    theta_minus: float,
    theta_plus: float,
    scenario: str = "hot_hot",
    epsilon: float = 0.0,
    ratio_range: tuple[float, float] = (1e-3, 1e3),
    points: int = 4001,
) -> list[tuple[float, float]]:
    """Intervals of C+/C- with two-way steering at fixed C- and angles.

    A log grid locates sign changes; each edge is refined with Brent's method
    to 1e-12 in log10 of the ratio.  Open ends at the range limits are
    reported as the limits themselves.
    """
    lr = np.linspace(math.log10(ratio_range[0]), math.log10(ratio_range[1]), points)
    f = lambda x: float(_two_way_margin(scenario, c_minus, theta_minus, theta_plus, epsilon, x))  # noqa: E731
    vals = _two_way_margin(scenario, c_minus, theta_minus, theta_plus, epsilon, lr)
    inside = vals < 0.0
    bands, start = [], None
    for i in range(points):
        if inside[i] and start is None:
            start = lr[0] if i == 0 else brentq(f, lr[i - 1], lr[i], xtol=1e-12) if np.isfinite(vals[i - 1]) else lr[i]
        if start is not None and (not inside[i] or i == points - 1):
            if inside[i]:
                end = lr[i]
            else:
                end = brentq(f, lr[i - 1], lr[i], xtol=1e-12) if np.isfinite(vals[i]) else lr[i - 1]
            bands.append((10.0 ** start, 10.0 ** end))
            start = None
    return bands
