"""Reid-type EPR steering parameters from second moments."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateVariance, DivisionByZeroRatio, InternalConsistencyError
from .steady_state import SteadyStateMoments

THRESHOLD = 0.5
_NEG_GUARD = 1e-12


class Steering(enum.IntEnum):
    """Direction classes; the integer value is the CSV class code."""

    NoSteering = 0
    OneWayMinusToPlus = 1
    OneWayPlusToMinus = 2
    TwoWay = 3


@dataclass(frozen=True)
class SteeringReport:
    e_plus_given_minus: float
    e_minus_given_plus: float
    gain_x: float
    gain_p: float
    classification: Steering
    ratio: Optional[float]
    # gains for inferring the "-" oscillator from the "+" one
    reverse_gain_x: float = 0.0
    reverse_gain_p: float = 0.0
    rwa_symmetric: bool = True


def classify(e_pm: float, e_mp: float) -> Steering:
    """Strict comparison against 1/2: a value exactly at the bound does not steer.

    ``e_pm`` small means the "-" oscillator steers the "+" one.
    """
    down = e_pm < THRESHOLD
    up = e_mp < THRESHOLD
    if down and up:
        return Steering.TwoWay
    if down:
        return Steering.OneWayMinusToPlus
    if up:
        return Steering.OneWayPlusToMinus
    return Steering.NoSteering


def classify_codes(e_pm, e_mp):
    """Vectorized :func:`classify` returning integer class codes."""
    e_pm = np.asarray(e_pm)
    e_mp = np.asarray(e_mp)
    return (e_pm < THRESHOLD).astype(int) * 1 + (e_mp < THRESHOLD).astype(int) * 2


def optimal_gains(m: SteadyStateMoments) -> tuple[float, float]:
    """Gains minimizing Delta(X+ - g_x X-) and Delta(P+ + g_p P-)."""
    if m.var_xm <= 0.0 or m.var_pm <= 0.0:
        raise DegenerateVariance("upstream variance must be positive")
    return m.cov_xx / m.var_xm, -m.cov_pp / m.var_pm


def inferred_variance(var_target, var_meas, cov):
    """var_target - cov^2/var_meas, the residual variance after optimal linear inference."""
    return var_target - cov * cov / var_meas


def _guard(e: float, scale: float, what: str) -> float:
    if e >= 0.0:
        return e
    if e > -_NEG_GUARD * max(1.0, scale):
        return 0.0
    raise InternalConsistencyError(f"{what} = {e!r} is negative; moments are unphysical")


def steering_parameters(m: SteadyStateMoments) -> SteeringReport:
    """Both steering parameters, gains and direction class from RWA moments.

    Uses the variance form, which coincides with the Reid uncertainty
    product when X and P statistics are symmetric; ``rwa_symmetric`` records
    whether that held for the given moments.
    """
    if m.var_xm <= 0.0 or m.var_xp <= 0.0:
        raise DegenerateVariance("variances must be positive")
    gx, gp = optimal_gains(m)
    e_pm = _guard(inferred_variance(m.var_xp, m.var_xm, m.cov_xx), m.var_xp, "E+|-")
    e_mp = _guard(inferred_variance(m.var_xm, m.var_xp, m.cov_xx), m.var_xm, "E-|+")
    symmetric = (
        math.isclose(m.var_xm, m.var_pm, rel_tol=1e-12)
        and math.isclose(m.var_xp, m.var_pp, rel_tol=1e-12)
        and math.isclose(m.cov_xx, -m.cov_pp, rel_tol=1e-12, abs_tol=1e-300)
    )
    ratio = e_pm / e_mp if e_mp > 0.0 else None
    return SteeringReport(
        e_plus_given_minus=e_pm,
        e_minus_given_plus=e_mp,
        gain_x=gx,
        gain_p=gp,
        classification=classify(e_pm, e_mp),
        ratio=ratio,
        reverse_gain_x=m.cov_xx / m.var_xp,
        reverse_gain_p=-m.cov_pp / m.var_pp,
        rwa_symmetric=symmetric,
    )


def steering_ratio(m: SteadyStateMoments) -> float:
    """E+|- / E-|+, which reduces to var(X+)/var(X-)."""
    rep = steering_parameters(m)
    if rep.e_minus_given_plus <= 0.0 or m.var_xm <= 0.0:
        raise DivisionByZeroRatio("E-|+ or var(X-) is zero")
    ratio = rep.e_plus_given_minus / rep.e_minus_given_plus
    direct = m.var_xp / m.var_xm
    if not math.isclose(ratio, direct, rel_tol=1e-10):
        raise InternalConsistencyError(f"steering ratio {ratio!r} != variance ratio {direct!r}")
    return ratio


def steering_arrays(var_m, var_p, cov):
    """Vectorized (E+|-, E-|+) for RWA-symmetric moments."""
    c2 = cov * cov
    return var_p - c2 / var_m, var_m - c2 / var_p


def decomposed_e_plus(bare_p, var_m, cov, loss_weighted_f):
    """E+|- written as bare variance minus a correlation term including interference."""
    # bare - cov^2 (1/var_m - f_w/cov), expanded so cov = 0 is allowed
    return bare_p - cov * cov / var_m + loss_weighted_f * cov


def decomposed_e_minus(bare_p, var_m, cov, loss_weighted_f):
    return var_m - cov * cov / (bare_p + loss_weighted_f * cov)


def steering_from_covariance(v: np.ndarray) -> tuple[float, float]:
    """Reid uncertainty products (E+|-, E-|+) for a general 4x4 covariance.

    Basis (X-, P-, X+, P+).  Each quadrature is inferred from the matching
    quadrature of the other oscillator with its own optimal gain; no RWA
    symmetry is assumed, so this applies to conditional covariances.
    """
    v = np.asarray(v, dtype=float)
    xm, pm, xp, pp = 0, 1, 2, 3

    def inf(t, s):
        if v[s, s] <= 0.0:
            raise DegenerateVariance("variance of the measured quadrature is zero")
        return _guard(inferred_variance(v[t, t], v[s, s], v[t, s]), v[t, t], "inferred variance")

    e_pm = math.sqrt(inf(xp, xm) * inf(pp, pm))
    e_mp = math.sqrt(inf(xm, xp) * inf(pm, pp))
    return e_pm, e_mp
