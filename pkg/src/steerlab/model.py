"""Oscillator/channel parameters and the rates derived from them.

All rates are angular frequencies (rad/s). Config layers convert ``*_hz``
inputs with a factor 2*pi before they reach these types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import (
    ChannelLossOutOfRange,
    ConfigError,
    CooperativityUndefined,
    NegativeRate,
    UnstableConfig,
)

TWO_PI = 2.0 * math.pi

# |Omega| must exceed this multiple of max(Gamma, gamma_tilde0) before the RWA
# is considered safe.
RWA_FACTOR = 100.0


@dataclass(frozen=True)
class OscillatorParams:
    """One oscillator's light coupling and thermal environment.

    ``gamma`` is the total light coupling Gamma, ``theta`` the interaction
    angle splitting it into beam-splitter and parametric parts, ``gamma0``
    the intrinsic damping and ``nbar`` the bath occupation.  ``omega_eff``
    is optional; its sign encodes the sign of the effective mass.
    """

    gamma: float
    theta: float
    gamma0: float
    nbar: float
    omega_eff: Optional[float] = None

    @classmethod
    def from_cooperativity(cls, cooperativity, theta, gamma0, nbar, omega_eff=None):
        gt0 = gamma0 * (nbar + 0.5)
        if gt0 == 0.0 and cooperativity != 0.0:
            raise CooperativityUndefined(
                "cannot set Gamma from a cooperativity when gamma0*(nbar+1/2) = 0"
            )
        return cls(cooperativity * gt0, theta, gamma0, nbar, omega_eff)

    @property
    def gamma_tilde0(self) -> float:
        return self.gamma0 * (self.nbar + 0.5)

    @property
    def cooperativity(self) -> float:
        return derived_rates(self).cooperativity

    def with_cooperativity(self, cooperativity: float) -> "OscillatorParams":
        return replace(self, gamma=cooperativity * self.gamma_tilde0)


@dataclass(frozen=True)
class ChannelParams:
    epsilon: float = 0.0
    phi: float = 0.0


@dataclass(frozen=True)
class CascadeConfig:
    """Upstream ``first`` (the "-" oscillator), downstream ``second`` ("+")."""

    first: OscillatorParams
    second: OscillatorParams
    channel: ChannelParams = field(default_factory=ChannelParams)

    def swapped(self) -> "CascadeConfig":
        """Same hardware with the cascade order reversed."""
        return CascadeConfig(self.second, self.first, self.channel)


@dataclass(frozen=True)
class DerivedRates:
    gamma_B: float
    gamma_P: float
    gamma_opt: float
    gamma_total: float
    gamma_tilde0: float
    cooperativity: float
    cooperativity_defined: bool = True


def derived_rates(p: OscillatorParams) -> DerivedRates:
    """Split Gamma into beam-splitter/parametric parts and derive damping rates.

    A bath with zero decoherence but nonzero coupling has no finite
    cooperativity; it is reported as ``inf`` with ``cooperativity_defined``
    set to False so sweeps do not pick up NaNs.
    """
    # both shares as products keep full relative accuracy near theta = 0 and pi/2;
    # their sum then equals gamma to within one ulp
    gamma_b = p.gamma * math.sin(p.theta) ** 2
    gamma_p = p.gamma * math.cos(p.theta) ** 2
    gamma_opt = -p.gamma * math.cos(2.0 * p.theta)
    gt0 = p.gamma0 * (p.nbar + 0.5)
    if gt0 > 0.0:
        coop, defined = p.gamma / gt0, True
    elif p.gamma > 0.0:
        coop, defined = math.inf, False
    else:
        coop, defined = 0.0, True
    return DerivedRates(
        gamma_B=gamma_b,
        gamma_P=gamma_p,
        gamma_opt=gamma_opt,
        gamma_total=p.gamma0 + gamma_opt,
        gamma_tilde0=gt0,
        cooperativity=coop,
        cooperativity_defined=defined,
    )


def coupling_amplitudes(p: OscillatorParams) -> tuple[float, float]:
    """(sqrt(Gamma_B), sqrt(Gamma_P)) as sqrt(Gamma) sin(theta), sqrt(Gamma) cos(theta).

    Taking the root before squaring the trig factor avoids underflow of
    Gamma sin^2(theta) at tiny angles, where the amplitude is still representable.
    """
    g = math.sqrt(p.gamma)
    return g * math.sin(p.theta), g * math.cos(p.theta)


def _r_factors(c: CascadeConfig) -> tuple[float, float, float]:
    """sqrt(G- G+) and the angle factors of R and of its partner sum S."""
    m, p = c.first, c.second
    sm, cm, sp, cp = math.sin(m.theta), math.cos(m.theta), math.sin(p.theta), math.cos(p.theta)
    return math.sqrt(m.gamma) * math.sqrt(p.gamma), sm * cp - sp * cm, sm * cp + sp * cm


def cascade_couplings(c: CascadeConfig) -> tuple[float, float]:
    """(R, S) = (r1 - r2, r1 + r2) with r1 = sqrt(GB- GP+), r2 = sqrt(GB+ GP-)."""
    g, d, s = _r_factors(c)
    return g * d, g * s


def cooperativity_strict(p: OscillatorParams) -> float:
    """Cooperativity, raising instead of returning the ``inf`` sentinel."""
    r = derived_rates(p)
    if not r.cooperativity_defined:
        raise CooperativityUndefined("gamma_tilde0 = 0 with Gamma > 0")
    return r.cooperativity


def total_damping(gamma, theta, gamma0):
    """gamma0 - Gamma*cos(2 theta); works elementwise on arrays."""
    return gamma0 - gamma * np.cos(2.0 * theta)


def directional_coupling(c: CascadeConfig) -> tuple[float, float]:
    """Return (R, f) with R the induced one-way coupling and f = 2R/gamma_plus."""
    rp = derived_rates(c.second)
    if not rp.gamma_total > 0.0:
        raise UnstableConfig(f"downstream total damping {rp.gamma_total!r} <= 0")
    r = cascade_couplings(c)[0]
    return r, 2.0 * r / rp.gamma_total


def directional_coupling_trig(gamma_m, theta_m, gamma_p, theta_p):
    """Closed trigonometric form -sqrt(G+ G-) sin(theta+ - theta-)."""
    return -np.sqrt(gamma_p * gamma_m) * np.sin(theta_p - theta_m)


@dataclass(frozen=True)
class Issue:
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[Issue, ...] = ()
    warnings: tuple[Issue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self) -> list[str]:
        return [i.code for i in self.errors]

    def raise_first(self) -> None:
        """Raise the exception type matching the first hard error, if any."""
        if not self.errors:
            return
        issue = self.errors[0]
        exc = {
            "UnstableConfig": UnstableConfig,
            "ChannelLossOutOfRange": ChannelLossOutOfRange,
            "NegativeRate": NegativeRate,
        }.get(issue.code, ConfigError)
        raise exc(issue.message)


def _check_oscillator(label, p, errors):
    for name in ("gamma", "theta", "gamma0", "nbar"):
        v = getattr(p, name)
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            errors.append(Issue("NonFinite", f"{label}.{name} is not a finite number: {v!r}"))
            return False
    for name in ("gamma", "gamma0", "nbar"):
        if getattr(p, name) < 0:
            errors.append(Issue("NegativeRate", f"{label}.{name} must be >= 0"))
    if not 0.0 <= p.theta <= math.pi / 2:
        errors.append(Issue("ThetaOutOfRange", f"{label}.theta must lie in [0, pi/2]"))
    return True


def validate(c: CascadeConfig, rwa_factor: float = RWA_FACTOR) -> ValidationReport:
    """Collect hard errors and soft warnings for a cascade configuration.

    Never raises for finite inputs.
    """
    errors: list[Issue] = []
    warnings: list[Issue] = []
    finite = [
        _check_oscillator("first", c.first, errors),
        _check_oscillator("second", c.second, errors),
    ]
    eps = c.channel.epsilon
    if not math.isfinite(eps) or not 0.0 <= eps <= 1.0:
        errors.append(Issue("ChannelLossOutOfRange", f"channel.epsilon={eps!r} not in [0, 1]"))
    if not math.isfinite(c.channel.phi):
        errors.append(Issue("NonFinite", "channel.phi is not finite"))

    for label, p, ok in (("first", c.first, finite[0]), ("second", c.second, finite[1])):
        if not ok:
            continue
        r = derived_rates(p)
        if not r.gamma_total > 0.0:
            errors.append(
                Issue(
                    "UnstableConfig",
                    f"{label}: total damping gamma0 + Gamma_B - Gamma_P = {r.gamma_total:.6g} <= 0",
                )
            )
        if p.omega_eff is not None:
            scale = max(p.gamma, r.gamma_tilde0)
            if abs(p.omega_eff) < rwa_factor * scale:
                warnings.append(
                    Issue(
                        "RWAQuestionable",
                        f"{label}: |omega_eff| = {abs(p.omega_eff):.4g} < {rwa_factor:g} x {scale:.4g}",
                    )
                )

    om, op = c.first.omega_eff, c.second.omega_eff
    if om is not None and op is not None:
        if not math.isclose(abs(om), abs(op), rel_tol=1e-9) or np.sign(om) != -np.sign(op) or om == 0:
            errors.append(
                Issue("OmegaMismatch", "omega_eff must have equal magnitude and opposite signs")
            )
    return ValidationReport(tuple(errors), tuple(warnings))


def require_valid(c: CascadeConfig) -> None:
    validate(c).raise_first()
