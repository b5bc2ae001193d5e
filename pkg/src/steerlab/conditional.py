"""Conditional steady state under continuous homodyne monitoring of the output light.

The field leaving the downstream oscillator is detected; the lost fraction
epsilon is not.  Homodyne detection at angle ``vartheta`` of the broadband
field, demodulated at the oscillator frequency, yields two commuting
channels per arm:

    m  = e^{-i vartheta} b_u,out + e^{i vartheta} b_l,out^+
    y1 = Re m,   y2 = Im m

Several angles split the field equally between arms, each arm seeing
efficiency eta/k.  The conditional covariance is the stabilizing solution of
the filter Riccati equation with correlated process/measurement noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .dynamics_oracle import NOISE_CHANNELS, _complex_block, langevin_coefficients, solve_lyapunov, DriftDiffusion
from .errors import ConfigError, RiccatiNoPSDSolution
from .model import CascadeConfig, coupling_amplitudes, require_valid
from .steering import steering_from_covariance


@dataclass(frozen=True)
class MeasurementModel:
    monitored_quadratures: tuple[float, ...] = (0.0, math.pi / 2)
    efficiency: float = 1.0

    def check(self) -> None:
        if not 0.0 <= self.efficiency <= 1.0:
            raise ConfigError(f"efficiency {self.efficiency!r} not in [0, 1]")
        if len(self.monitored_quadratures) == 0:
            raise ConfigError("at least one homodyne angle is required")


@dataclass(frozen=True)
class ConditionalResult:
    v_unconditional: np.ndarray
    v_conditional: np.ndarray
    e_pm_uncond: float
    e_mp_uncond: float
    e_pm_cond: float
    e_mp_cond: float
    d_pm: float
    d_mp: float
    measurement: MeasurementModel = field(default_factory=MeasurementModel)


@dataclass(frozen=True)
class OutputModel:
    """dX = A X dt + G dW,  dy = C X dt + F dW,  Var(dW) = diag(q) dt."""

    a: np.ndarray
    g: np.ndarray
    q: np.ndarray
    c: np.ndarray
    f: np.ndarray

    @property
    def d(self) -> np.ndarray:
        return self.g @ np.diag(self.q) @ self.g.T

    @property
    def n(self) -> np.ndarray:
        return self.g @ np.diag(self.q) @ self.f.T

    @property
    def m(self) -> np.ndarray:
        return self.f @ np.diag(self.q) @ self.f.T


def _homodyne_rows(cfg: CascadeConfig, angle: float) -> tuple[np.ndarray, np.ndarray]:
    """Signal (2x4) and noise (2x12) coefficients of the two channels at one angle."""
    bm, pm = coupling_amplitudes(cfg.first)
    bp, pp = coupling_amplitudes(cfg.second)
    t, s = math.sqrt(1.0 - cfg.channel.epsilon), math.sqrt(cfg.channel.epsilon)
    e = complex(math.cos(cfg.channel.phi), math.sin(cfg.channel.phi))
    w = complex(math.cos(angle), -math.sin(angle))  # e^{-i vartheta}
    ch = {name: i for i, name in enumerate(NOISE_CHANNELS)}

    # b_u,out = t e (b_u + i sqrt(GP-) a-^+) + s b_u' + i sqrt(GB+) a+
    # b_l,out = t e (b_l + i sqrt(GB-) a-)   + s b_l' + i sqrt(GP+) a+^+
    # m = w b_u,out + conj(w) b_l,out^+ ; each term enters as k z + l conj(z)
    sig = np.zeros((2, 4))
    noise = np.zeros((2, len(NOISE_CHANNELS)))

    def add_state(col, k, l):
        sig[:, col:col + 2] += _complex_block(k, l) / math.sqrt(2.0)

    def add_noise(mode, k, l):
        blk = _complex_block(k, l) / math.sqrt(2.0)
        noise[:, ch["x_" + mode]] += blk[:, 0]
        noise[:, ch["p_" + mode]] += blk[:, 1]

    add_state(0, 0.0, w * t * e * 1j * pm)
    add_state(2, w * 1j * bp, 0.0)
    add_state(0, 0.0, (w * t * e * 1j * bm).conjugate())
    add_state(2, (w * 1j * pp).conjugate(), 0.0)

    add_noise("u", w * t * e, 0.0)
    add_noise("u'", w * s, 0.0)
    add_noise("l", 0.0, (w * t * e).conjugate())
    add_noise("l'", 0.0, (w * s).conjugate())
    return sig, noise


def input_output_model(cfg: CascadeConfig, meas: MeasurementModel = MeasurementModel()) -> OutputModel:
    """Linear state-space model of the oscillators and the detected output.

    Detector inefficiency is folded into the signal and the correlated
    noise; the measurement noise covariance stays I/2 per channel.
    """
    require_valid(cfg)
    meas.check()
    a, g, q = langevin_coefficients(cfg)
    k = len(meas.monitored_quadratures)
    scale = math.sqrt(meas.efficiency / k)
    rows_c, rows_f = [], []
    for ang in meas.monitored_quadratures:
        sc, sf = _homodyne_rows(cfg, ang)
        rows_c.append(scale * sc)
        rows_f.append(scale * sf)
    return OutputModel(a, g, q, np.vstack(rows_c), np.vstack(rows_f))


def _detection_noise(om: OutputModel) -> np.ndarray:
    # the splitter and detector loss are unitary on field plus vacuum ports, so the
    # total shot noise of the arms is always I/2; only N carries system correlations
    return 0.5 * np.eye(om.c.shape[0])


def riccati_residual(om: OutputModel, v: np.ndarray) -> np.ndarray:
    mm = _detection_noise(om)
    k = (v @ om.c.T + om.n) @ np.linalg.inv(mm)
    return om.a @ v + v @ om.a.T + om.d - k @ (om.c @ v + om.n.T)


def solve_filter_riccati(
    om: OutputModel, rtol: float = 1e-10, newton_steps: int = 8, backward: bool = False
) -> np.ndarray:
    """Stabilizing solution of A V + V A^T + D - (V C^T + N) M^-1 (C V + N^T) = 0.

    scipy's Schur-based solver gives the start; Newton-Kleinman steps refine
    it until the residual is below ``rtol`` |D| (or the backward-error level
    rtol (|D| + 2 |A| |V|) when ``backward`` is set).
    """
    a, d, n, c = om.a, om.d, om.n, om.c
    mm = _detection_noise(om)
    scale = np.linalg.norm(d)
    try:
        v = scipy.linalg.solve_continuous_are(a.T, c.T, d, mm, s=n)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise RiccatiNoPSDSolution(f"Riccati solver failed: {exc}") from exc
    v = 0.5 * (v + v.T)
    minv = np.linalg.inv(mm)

    def bound(v):
        extra = 2.0 * np.linalg.norm(a) * np.linalg.norm(v) if backward else 0.0
        return rtol * max(scale + extra, 1e-300)

    for _ in range(newton_steps):
        if np.linalg.norm(riccati_residual(om, v)) <= bound(v):
            break
        k = (v @ c.T + n) @ minv
        acl = a - k @ c
        rhs = d + k @ mm @ k.T - n @ k.T - k @ n.T
        v = scipy.linalg.solve_continuous_lyapunov(acl, -rhs)
        v = 0.5 * (v + v.T)
    res = np.linalg.norm(riccati_residual(om, v))
    if not np.all(np.isfinite(v)) or res > bound(v):
        raise RiccatiNoPSDSolution(f"Riccati residual {res:.3e} > {bound(v):.3e}")
    if np.linalg.eigvalsh(v).min() < -1e-12 * np.abs(v).max():
        raise RiccatiNoPSDSolution("Riccati solution is not positive semidefinite")
    return v


def relative_improvement(e_u: float, e_c: float) -> float:
    return (e_u - e_c) / e_u


def solve_conditional(
    cfg: CascadeConfig, meas: MeasurementModel = MeasurementModel(), backward: bool = True
) -> ConditionalResult:
    """Unconditional vs conditional steering for one measurement model.

    Residual tolerances default to the backward-error level because
    optimized operating points often have rates spread over many decades.
    """
    om = input_output_model(cfg, meas)
    v_u = solve_lyapunov(DriftDiffusion(om.a, om.d), backward=backward)
    if meas.efficiency == 0.0 or not np.any(om.c):
        v_c = v_u.copy()
    else:
        v_c = solve_filter_riccati(om, backward=backward)
    e_pm_u, e_mp_u = steering_from_covariance(v_u)
    e_pm_c, e_mp_c = steering_from_covariance(v_c)
    return ConditionalResult(
        v_unconditional=v_u,
        v_conditional=v_c,
        e_pm_uncond=e_pm_u,
        e_mp_uncond=e_mp_u,
        e_pm_cond=e_pm_c,
        e_mp_cond=e_mp_c,
        d_pm=relative_improvement(e_pm_u, e_pm_c),
        d_mp=relative_improvement(e_mp_u, e_mp_c),
        measurement=meas,
    )


def best_conditional(
    cfg: CascadeConfig,
    efficiency: float = 1.0,
    angles: Sequence[float] = tuple(np.linspace(0.0, math.pi, 8, endpoint=False)),
    backward: bool = True,
) -> tuple[ConditionalResult, ConditionalResult]:
    """Largest improvement per direction over dual-rail and single-angle homodyne.

    Returns ``(best_for_e_pm, best_for_e_mp)``.
    """
    models = [MeasurementModel((0.0, math.pi / 2), efficiency)]
    models += [MeasurementModel((float(a),), efficiency) for a in angles]
    results = [solve_conditional(cfg, m, backward) for m in models]
    best_pm = max(results, key=lambda r: r.d_pm)
    best_mp = max(results, key=lambda r: r.d_mp)
    return best_pm, best_mp
