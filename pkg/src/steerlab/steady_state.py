"""Closed-form RWA steady-state second moments of the cascaded pair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, UnstableConfig
from .model import CascadeConfig, OscillatorParams, derived_rates, require_valid


@dataclass(frozen=True)
class SteadyStateMoments:
    var_xm: float
    var_pm: float
    var_xp: float
    var_pp: float
    cov_xx: float
    cov_pp: float
    bare_var_p: float
    # sqrt(1 - epsilon) * f, kept so the bare-variance decomposition can be checked
    loss_weighted_f: float = 0.0

    def covariance_matrix(self) -> np.ndarray:
        """4x4 symmetrized covariance in the basis (X-, P-, X+, P+)."""
        v = np.zeros((4, 4))
        v[0, 0], v[1, 1], v[2, 2], v[3, 3] = self.var_xm, self.var_pm, self.var_xp, self.var_pp
        v[0, 2] = v[2, 0] = self.cov_xx
        v[1, 3] = v[3, 1] = self.cov_pp
        return v


def moments_arrays(gamma_m, theta_m, gamma0_m, nbar_m, gamma_p, theta_p, gamma0_p, nbar_p, epsilon):
    """Vectorized steady-state moments; every argument broadcasts.

    Returns ``(var_m, var_p, cov_xx, bare_p, gamma_tot_m, gamma_tot_p, R)``.
    Unstable entries are not masked here; callers check the damping rates.
    The evaluation order (upstream variance, then covariance, then
    downstream variance) is fixed so results are reproducible.
    """
    gtot_m = gamma0_m - gamma_m * np.cos(2.0 * theta_m)
    gtot_p = gamma0_p - gamma_p * np.cos(2.0 * theta_p)
    gt0_m = gamma0_m * (nbar_m + 0.5)
    gt0_p = gamma0_p * (nbar_p + 0.5)
    # R = sqrt(GB- GP+) - sqrt(GB+ GP-) in amplitude form (no underflow, exact 0 at equal angles)
    r = np.sqrt(gamma_m) * np.sqrt(gamma_p) * (np.sin(theta_m) * np.cos(theta_p) - np.sin(theta_p) * np.cos(theta_m))
    t = np.sqrt(1.0 - epsilon)

    var_m = (gamma_m / 2.0 + gt0_m) / gtot_m
    cov = -t * (np.sqrt(gamma_p * gamma_m) * np.sin(theta_p + theta_m) - 2.0 * r * var_m) / (gtot_p + gtot_m)
    bare_p = (gamma_p / 2.0 + gt0_p) / gtot_p
    var_p = (gamma_p / 2.0 + gt0_p + 2.0 * t * r * cov) / gtot_p
    return var_m, var_p, cov, bare_p, gtot_m, gtot_p, r


def rwa_moments(c: CascadeConfig) -> SteadyStateMoments:
    """Steady-state variances and cross covariance within the RWA.

    Only the optimal quadrature phase phi = 0 has a closed form; use
    :mod:`steerlab.dynamics_oracle` for other phases.
    """
    require_valid(c)
    if c.channel.phi != 0.0:
        raise ConfigError("closed-form moments require channel.phi == 0; use the Lyapunov oracle")
    m, p = c.first, c.second
    var_m, var_p, cov, bare_p, _, gtot_p, r = moments_arrays(
        m.gamma, m.theta, m.gamma0, m.nbar, p.gamma, p.theta, p.gamma0, p.nbar, c.channel.epsilon
    )
    return SteadyStateMoments(
        var_xm=float(var_m),
        var_pm=float(var_m),
        var_xp=float(var_p),
        var_pp=float(var_p),
        cov_xx=float(cov),
        cov_pp=-float(cov),
        bare_var_p=float(bare_p),
        loss_weighted_f=float(np.sqrt(1.0 - c.channel.epsilon) * 2.0 * r / gtot_p),
    )


def covariance_term_scale(c: CascadeConfig) -> float:
    """Magnitude of the terms that cancel in the closed-form cross covariance.

    The closed form is accurate relative to this scale, not to |cov| itself,
    when the two numerator terms nearly cancel.
    """
    m, p = c.first, c.second
    rm, rp = derived_rates(m), derived_rates(p)
    var_m = (m.gamma / 2.0 + rm.gamma_tilde0) / rm.gamma_total
    r = np.sqrt(m.gamma) * np.sqrt(p.gamma) * abs(np.sin(m.theta - p.theta))
    terms = np.sqrt(m.gamma) * np.sqrt(p.gamma) * abs(np.sin(m.theta + p.theta)) + 2.0 * r * var_m
    return float(np.sqrt(1.0 - c.channel.epsilon) * terms / (rm.gamma_total + rp.gamma_total))


def bare_variance(p: OscillatorParams) -> float:
    """(Gamma/2 + gamma_tilde0) / gamma: light back-action plus bath, no correlations."""
    r = derived_rates(p)
    if not r.gamma_total > 0.0:
        raise UnstableConfig(f"total damping {r.gamma_total!r} <= 0")
    return (p.gamma / 2.0 + r.gamma_tilde0) / r.gamma_total


def bare_variance_asymptote(theta: float) -> float:
    """Large-cooperativity, optically dominated limit -1/(2 cos 2theta), theta > pi/4."""
    return -1.0 / (2.0 * np.cos(2.0 * theta))
