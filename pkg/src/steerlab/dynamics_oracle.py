"""Linear-Gaussian oracle for the cascaded dynamics.

Two independent routes to the steady state:

* :func:`build_drift_diffusion` + :func:`solve_lyapunov` give the exact
  stationary covariance of the quadrature Langevin system;
* :func:`simulate_sde` integrates the complex amplitude equations driven by
  raw white-noise streams (the upstream light noise is reused downstream)
  and never looks at the diffusion matrix.

Basis order is (X-, P-, X+, P+) throughout.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import ConfigError, NotHurwitz, SolverSingular, StiffStep, UnstableConfig
from .model import CascadeConfig, cascade_couplings, coupling_amplitudes, derived_rates, require_valid

log = logging.getLogger(__name__)

# symplectic form for (X-, P-, X+, P+)
SYMPLECTIC = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class DriftDiffusion:
    a_matrix: np.ndarray
    d_matrix: np.ndarray


def build_drift_diffusion(c: CascadeConfig) -> DriftDiffusion:
    """Drift A and symmetrized diffusion D of the quadrature Langevin equations.

    The downstream oscillator is driven by the upstream quadratures through
    the loss-weighted coupling, rotated by the channel phase; the shared
    light noise produces the off-diagonal diffusion block.
    """
    require_valid(c)
    rm, rp = derived_rates(c.first), derived_rates(c.second)
    t = math.sqrt(1.0 - c.channel.epsilon)
    cphi, sphi = math.cos(c.channel.phi), math.sin(c.channel.phi)
    # R = r1 - r2 enters with phase e^{-i phi} on r1 and e^{+i phi} on r2; s = r1 + r2
    r, s = cascade_couplings(c)

    a = np.zeros((4, 4))
    a[0, 0] = a[1, 1] = -rm.gamma_total / 2.0
    a[2, 2] = a[3, 3] = -rp.gamma_total / 2.0
    a[2:, :2] = t * np.array([[r * cphi, -s * sphi], [-s * sphi, -r * cphi]])

    d = np.zeros((4, 4))
    d[0, 0] = d[1, 1] = c.first.gamma / 2.0 + rm.gamma_tilde0
    d[2, 2] = d[3, 3] = c.second.gamma / 2.0 + rp.gamma_tilde0
    cross = 0.5 * t * np.array([[-s * cphi, r * sphi], [r * sphi, s * cphi]])
    d[:2, 2:] = cross
    d[2:, :2] = cross.T

    if np.any(np.linalg.eigvals(a).real >= 0.0):
        raise UnstableConfig("drift matrix is not Hurwitz")
    return DriftDiffusion(a, d)


def is_hurwitz(a: np.ndarray) -> bool:
    return bool(np.all(np.linalg.eigvals(a).real < 0.0))


def lyapunov_residual(a, v, d) -> float:
    return float(np.linalg.norm(a @ v + v @ a.T + d))


def solve_lyapunov(dd: DriftDiffusion, rtol: float = 1e-10, backward: bool = False) -> np.ndarray:
    """Stationary covariance V solving A V + V A^T + D = 0.

    The residual must satisfy |A V + V A^T + D| <= rtol |D|.  With
    ``backward=True`` the bound is relaxed to rtol (|D| + 2 |A| |V|), the
    backward-error level, for badly scaled drifts where the strict bound is
    below the rounding error of the residual itself.
    """
    a, d = dd.a_matrix, dd.d_matrix
    if not is_hurwitz(a):
        raise NotHurwitz("drift has an eigenvalue with non-negative real part")
    try:
        v = scipy.linalg.solve_continuous_lyapunov(a, -d)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverSingular(str(exc)) from exc
    v = 0.5 * (v + v.T)
    scale = np.linalg.norm(d)
    if backward:
        scale += 2.0 * np.linalg.norm(a) * np.linalg.norm(v)
    res = lyapunov_residual(a, v, d)
    if not np.all(np.isfinite(v)) or res > rtol * max(scale, 1e-300):
        raise SolverSingular(f"Lyapunov residual {res:.3e} exceeds {rtol:g} x {scale:.3e}")
    return v


def lyapunov_covariance(c: CascadeConfig, backward: bool = False) -> np.ndarray:
    return solve_lyapunov(build_drift_diffusion(c), backward=backward)


def heisenberg_min_eig(v: np.ndarray) -> float:
    """Smallest eigenvalue of V + (i/2) sigma; >= 0 for a physical state."""
    return float(np.linalg.eigvalsh(v + 0.5j * SYMPLECTIC).min())


# ----------------------------------------------------------------------------
# Monte Carlo
# ----------------------------------------------------------------------------

# raw noise channels, each a real Wiener process
NOISE_CHANNELS = (
    "x_l", "p_l", "x_u", "p_u",          # light vacuum shared by both oscillators
    "x_l'", "p_l'", "x_u'", "p_u'",      # vacuum entering through the loss
    "x_in-", "p_in-", "x_in+", "p_in+",  # thermal baths
)


@dataclass(frozen=True)
class SimulationSpec:
    dt: float
    t_end: float
    n_traj: int = 64
    seed: int = 0
    burn_in_fraction: float = 0.2
    scheme: str = "euler"  # or "midpoint" (covariance-exact for linear systems)
    batch_size: int = 256
    chunk_steps: int = 2048


@dataclass(frozen=True)
class SimulationResult:
    covariance: np.ndarray
    stderr: np.ndarray
    n_samples: int


def default_dt(c: CascadeConfig) -> float:
    rm, rp = derived_rates(c.first), derived_rates(c.second)
    fastest = max(rm.gamma_total, rp.gamma_total, c.first.gamma, c.second.gamma)
    return 0.01 / fastest


def _complex_block(k: complex, l: complex) -> np.ndarray:
    """Real 2x2 map of z -> k z + l conj(z) for z = (X + iP)/sqrt(2)."""
    return np.array(
        [
            [(k + l).real, -(k - l).imag],
            [(k + l).imag, (k - l).real],
        ]
    )


def langevin_coefficients(c: CascadeConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Real drift, noise-input matrix and per-channel noise intensity.

    Built directly from the complex amplitude equations:

        da-/dt = -g-/2 a- + i(sqrt(GB-) b_l + sqrt(GP-) b_u^+) + sqrt(g0-) a_in-
        da+/dt = -g+/2 a+ + t (r1 e^{-i phi} - r2 e^{i phi}) a-^+
                 + i t (sqrt(GB+) e^{i phi} b_u + sqrt(GP+) e^{-i phi} b_l^+)
                 + i s (sqrt(GB+) b_u' + sqrt(GP+) b_l'^+) + sqrt(g0+) a_in+

    with t = sqrt(1 - eps), s = sqrt(eps).  Each bosonic noise b is split as
    (x + i p)/sqrt(2) over the raw channels in :data:`NOISE_CHANNELS`.
    Returns ``(A, G, q)`` with dX = A X dt + G dW, Var(dW_k) = q_k dt.
    """
    rm, rp = derived_rates(c.first), derived_rates(c.second)
    eps, phi = c.channel.epsilon, c.channel.phi
    t, s = math.sqrt(1.0 - eps), math.sqrt(eps)
    e = complex(math.cos(phi), math.sin(phi))
    ch = {name: i for i, name in enumerate(NOISE_CHANNELS)}

    a = np.zeros((4, 4))
    a[:2, :2] = _complex_block(-rm.gamma_total / 2.0, 0.0)
    a[2:, 2:] = _complex_block(-rp.gamma_total / 2.0, 0.0)
    bm, pm = coupling_amplitudes(c.first)
    bp, pp = coupling_amplitudes(c.second)
    g_mp = math.sqrt(c.first.gamma) * math.sqrt(c.second.gamma)
    sm, cm = math.sin(c.first.theta), math.cos(c.first.theta)
    sp, cp = math.sin(c.second.theta), math.cos(c.second.theta)
    coupling = t * g_mp * (sm * cp * e.conjugate() - sp * cm * e)
    a[2:, :2] = _complex_block(0.0, coupling)

    g = np.zeros((4, len(NOISE_CHANNELS)))

    def add(row, mode, k, l):
        # z += k b + l conj(b) with b = (x + i p)/sqrt(2); same map as the state blocks
        blk = _complex_block(k, l)
        g[row:row + 2, ch["x_" + mode]] += blk[:, 0]
        g[row:row + 2, ch["p_" + mode]] += blk[:, 1]

    add(0, "l", 1j * bm, 0.0)
    add(0, "u", 0.0, 1j * pm)
    add(0, "in-", math.sqrt(c.first.gamma0), 0.0)

    add(2, "u", 1j * t * bp * e, 0.0)
    add(2, "l", 0.0, 1j * t * pp * e.conjugate())
    add(2, "u'", 1j * s * bp, 0.0)
    add(2, "l'", 0.0, 1j * s * pp)
    add(2, "in+", math.sqrt(c.second.gamma0), 0.0)

    q = np.full(len(NOISE_CHANNELS), 0.5)
    q[ch["x_in-"]] = q[ch["p_in-"]] = c.first.nbar + 0.5
    q[ch["x_in+"]] = q[ch["p_in+"]] = c.second.nbar + 0.5
    return a, g, q


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for one trajectory, keyed by (seed, index) only."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def _run_batch(a, g_scaled, spec, n_steps, n_burn, indices, dump_dir):
    b = len(indices)
    dt = spec.dt
    if spec.scheme == "euler":
        step = np.eye(4) + a * dt
        inject = g_scaled
    elif spec.scheme == "midpoint":
        lhs = np.eye(4) - 0.5 * dt * a
        step = np.linalg.solve(lhs, np.eye(4) + 0.5 * dt * a)
        inject = np.linalg.solve(lhs, g_scaled)
    else:
        raise ConfigError(f"unknown scheme {spec.scheme!r}")
    step_t, inject_t = step.T.copy(), inject.T.copy()

    rngs = [trajectory_rng(spec.seed, i) for i in indices]
    x = np.zeros((b, 4))
    s1 = np.zeros((b, 4))
    s2 = np.zeros((b, 4, 4))
    writers = []
    if dump_dir is not None:
        for i in indices:
            fh = open(Path(dump_dir) / f"traj_{i:06d}.csv", "w", newline="")
            w = csv.writer(fh)
            w.writerow(["t", "xm", "pm", "xp", "pp"])
            writers.append((fh, w))
    try:
        done = 0
        while done < n_steps:
            k = min(spec.chunk_steps, n_steps - done)
            noise = np.stack([r.standard_normal((k, g_scaled.shape[1])) for r in rngs], axis=1)
            for j in range(k):
                x = x @ step_t + noise[j] @ inject_t
                n = done + j + 1
                if n > n_burn:
                    s1 += x
                    s2 += x[:, :, None] * x[:, None, :]
                if writers:
                    for row, (_, w) in zip(x, writers):
                        w.writerow([repr(n * dt)] + [repr(float(v)) for v in row])
            done += k
    finally:
        for fh, _ in writers:
            fh.close()
    return s1, s2


def simulate_sde(
    c: CascadeConfig,
    spec: SimulationSpec,
    threads: int = 1,
    dump_dir: Optional[str] = None,
) -> SimulationResult:
    """Monte Carlo estimate of the stationary covariance with jackknife errors.

    Each trajectory starts at the origin, discards the burn-in and
    accumulates time averages; the jackknife runs over trajectories.  A
    trajectory's noise depends only on ``(seed, index)``, so results do not
    depend on ``threads`` or ``batch_size``.  ``dump_dir`` writes every step
    of every trajectory to CSV, which is large.
    """
    require_valid(c)
    a, g, q = langevin_coefficients(c)
    eig = np.linalg.eigvals(a)
    if np.any(eig.real >= 0.0):
        raise UnstableConfig("drift matrix is not Hurwitz")
    if not spec.dt > 0.0:
        raise ConfigError("dt must be positive")
    if spec.dt * np.abs(eig).max() >= 0.1:
        raise StiffStep(f"dt * max|eig(A)| = {spec.dt * np.abs(eig).max():.3g} >= 0.1")
    if not 0.0 <= spec.burn_in_fraction < 1.0:
        raise ConfigError("burn_in_fraction must be in [0, 1)")
    n_steps = int(round(spec.t_end / spec.dt))
    n_burn = int(spec.burn_in_fraction * n_steps)
    n_keep = n_steps - n_burn
    if n_keep < 1 or spec.n_traj < 1:
        raise ConfigError("simulation keeps no samples")
    slowest = np.abs(eig.real).min()
    if n_burn * spec.dt * slowest < 5.0:
        log.warning("burn-in spans only %.2f relaxation times", n_burn * spec.dt * slowest)

    g_scaled = g * np.sqrt(q * spec.dt)
    if dump_dir is not None:
        Path(dump_dir).mkdir(parents=True, exist_ok=True)
    idx = list(range(spec.n_traj))
    batches = [idx[i:i + spec.batch_size] for i in range(0, len(idx), spec.batch_size)]
    run = lambda ids: _run_batch(a, g_scaled, spec, n_steps, n_burn, ids, dump_dir)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(run, batches))
    else:
        parts = [run(bt) for bt in batches]
    s1 = np.concatenate([p[0] for p in parts]) / n_keep
    s2 = np.concatenate([p[1] for p in parts]) / n_keep

    def pooled(m1, m2):
        mu = m1.mean(axis=0)
        return m2.mean(axis=0) - np.outer(mu, mu)

    cov = pooled(s1, s2)
    n = spec.n_traj
    if n > 1:
        loo = np.empty((n, 4, 4))
        tot1, tot2 = s1.sum(axis=0), s2.sum(axis=0)
        for i in range(n):
            loo[i] = pooled(((tot1 - s1[i]) / (n - 1))[None], ((tot2 - s2[i]) / (n - 1))[None])
        err = np.sqrt((n - 1) / n * ((loo - loo.mean(axis=0)) ** 2).sum(axis=0))
    else:
        err = np.full((4, 4), np.nan)
    return SimulationResult(cov, err, n * n_keep)
