"""Random stable configurations for oracle batches and property tests."""

from __future__ import annotations

import math

import numpy as np

from .model import CascadeConfig, ChannelParams, OscillatorParams, derived_rates


def _oscillator(rng: np.random.Generator) -> OscillatorParams:
    gamma0 = 10.0 ** rng.uniform(-2.0, 4.0)
    nbar = 0.0 if rng.random() < 0.2 else 10.0 ** rng.uniform(-2.0, 5.0)
    coop = 10.0 ** rng.uniform(-2.0, 3.0)
    theta = rng.uniform(0.0, 0.5 * math.pi)
    return OscillatorParams.from_cooperativity(coop, theta, gamma0, nbar)


def random_stable_config(
    rng: np.random.Generator, margin: float = 1e-3, random_phi: bool = False
) -> CascadeConfig:
    """Draw until both total dampings exceed ``margin`` times the oscillator's largest rate.

    Cooperativities and linewidths are log-uniform, angles uniform and the
    loss uniform on [0, 1).  The margin keeps the steady state well
    conditioned enough for 1e-8 comparisons between solvers.
    """
    while True:
        first, second = _oscillator(rng), _oscillator(rng)
        ok = True
        for p in (first, second):
            r = derived_rates(p)
            if r.gamma_total < margin * max(p.gamma, p.gamma0):
                ok = False
        if not ok:
            continue
        phi = rng.uniform(-math.pi, math.pi) if random_phi else 0.0
        return CascadeConfig(first, second, ChannelParams(float(rng.uniform(0.0, 1.0)), phi))
