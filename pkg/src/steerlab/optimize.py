"""Constrained minimization of steering parameters over tunable system parameters.

Search is deterministic: a vectorized grid over the free box (cooperativities
on a log axis), two zoomed grid levels around the best cell, then a bounded
Nelder-Mead polish.  Infeasible points (total damping below the stability
margin) are excluded from the grids and penalized during the polish.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize as _nelder_mead

from .dynamics_oracle import lyapunov_covariance
from .errors import EmptyFeasibleSet, UnstableConfig, SolverSingular
from .model import TWO_PI, CascadeConfig, ChannelParams, OscillatorParams
from .steady_state import moments_arrays
from .steering import Steering, classify, steering_arrays, steering_from_covariance

log = logging.getLogger(__name__)

HALF_PI = 0.5 * math.pi
LOG_PARAMS = ("c_plus", "c_minus")
ANGLE_PARAMS = ("theta_plus", "theta_minus")
OBJECTIVES = ("e_pm", "e_mp")


@dataclass(frozen=True)
class Scenario:
    """Thermal parameters of the two oscillators."""

    name: str
    gamma0_minus: float
    nbar_minus: float
    gamma0_plus: float
    nbar_plus: float


SCENARIOS = {
    # both oscillators mechanical-like: narrow linewidth, hot bath
    "hot_hot": Scenario("hot_hot", TWO_PI * 0.1, 1e5, TWO_PI * 0.1, 1e5),
    # downstream oscillator spin-like: broad linewidth, vacuum bath, same decoherence rate
    "hot_vacuum": Scenario("hot_vacuum", TWO_PI * 0.1, 1e5, TWO_PI * 20e3, 0.0),
}


def scenario_config(
    scenario: str | Scenario,
    c_minus: float,
    c_plus: Optional[float] = None,
    theta_minus: float = math.pi / 4,
    theta_plus: float = 0.35 * math.pi,
    epsilon: float = 0.0,
    phi: float = 0.0,
) -> CascadeConfig:
    s = SCENARIOS[scenario] if isinstance(scenario, str) else scenario
    c_plus = c_minus if c_plus is None else c_plus
    return CascadeConfig(
        OscillatorParams.from_cooperativity(c_minus, theta_minus, s.gamma0_minus, s.nbar_minus),
        OscillatorParams.from_cooperativity(c_plus, theta_plus, s.gamma0_plus, s.nbar_plus),
        ChannelParams(epsilon, phi),
    )


@dataclass(frozen=True)
class OptimizationProblem:
    """Minimize one steering parameter over ``free`` with everything else from ``base``.

    ``free`` maps parameter names to (lo, hi) bounds.  Names: ``c_plus``,
    ``c_minus`` (cooperativities, searched on a log axis), ``theta_plus``,
    ``theta_minus`` and ``phi``.  In ``symmetric_angles`` mode both angles
    are tied to one value (f = 0).
    """

    objective: str
    base: CascadeConfig
    free: dict = field(default_factory=dict)
    mode: str = "free_angles"
    margin_abs: Optional[float] = None
    points_per_decade: int = 32
    angle_points: int = 65
    phi_points: int = 9
    polish_tol: float = 1e-8
    restarts: int = 4

    def check(self) -> None:
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if self.mode not in ("free_angles", "symmetric_angles"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.free:
            raise ValueError("nothing to optimize")
        for k, (lo, hi) in self.free.items():
            if k not in LOG_PARAMS + ANGLE_PARAMS + ("phi",):
                raise ValueError(f"unknown free parameter {k!r}")
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ValueError(f"bad bounds for {k}: {(lo, hi)}")
            if k in LOG_PARAMS and lo <= 0.0:
                raise ValueError(f"{k} lower bound must be > 0 for the log grid")

    def margin(self) -> float:
        if self.margin_abs is not None:
            return self.margin_abs
        b = self.base
        return 1e-6 * max(b.first.gamma, b.second.gamma, b.first.gamma0, b.second.gamma0)


@dataclass(frozen=True)
class OptResult:
    params: dict
    value: float
    config: CascadeConfig
    classification: Steering
    e_pm: float
    e_mp: float
    n_evals: int
    converged: bool
    on_bound: tuple[str, ...]
    trace: tuple[tuple[float, ...], ...] = ()


def _axes(p: OptimizationProblem) -> list[str]:
    """Search coordinates; symmetric mode merges the two angles into ``theta``."""
    names = list(p.free)
    if p.mode == "symmetric_angles":
        names = [n for n in names if n not in ANGLE_PARAMS]
        names.append("theta")
    return names


def _bounds(p: OptimizationProblem, name: str) -> tuple[float, float]:
    if name == "theta":
        los = [p.free[k][0] for k in ANGLE_PARAMS if k in p.free] or [0.0]
        his = [p.free[k][1] for k in ANGLE_PARAMS if k in p.free] or [HALF_PI]
        return max(los), min(his)
    lo, hi = p.free[name]
    if name in LOG_PARAMS:
        return math.log10(lo), math.log10(hi)
    return lo, hi


def _grid_axis(p: OptimizationProblem, name: str) -> np.ndarray:
    lo, hi = _bounds(p, name)
    if hi == lo:
        return np.array([lo])
    if name in LOG_PARAMS:
        n = max(2, int(math.ceil((hi - lo) * p.points_per_decade)) + 1)
    elif name == "phi":
        n = p.phi_points
    else:
        n = p.angle_points
    return np.linspace(lo, hi, n)


def _unpack(p: OptimizationProblem, names, coords):
    """Map search coordinates to physical parameter arrays."""
    b = p.base
    vals = {
        "c_minus": b.first.gamma / b.first.gamma_tilde0 if b.first.gamma_tilde0 > 0 else 0.0,
        "c_plus": b.second.gamma / b.second.gamma_tilde0 if b.second.gamma_tilde0 > 0 else 0.0,
        "theta_minus": b.first.theta,
        "theta_plus": b.second.theta,
        "phi": b.channel.phi,
    }
    for n, x in zip(names, coords):
        if n in LOG_PARAMS:
            vals[n] = 10.0 ** np.asarray(x)
        elif n == "theta":
            vals["theta_minus"] = vals["theta_plus"] = x
        else:
            vals[n] = x
    return vals


def _evaluate(p: OptimizationProblem, names, coords):
    """Objective and feasibility on broadcast coordinate arrays (phi fixed to base)."""
    b = p.base
    v = _unpack(p, names, coords)
    gm = v["c_minus"] * b.first.gamma_tilde0
    gp = v["c_plus"] * b.second.gamma_tilde0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        var_m, var_p, cov, _, gt_m, gt_p, _ = moments_arrays(
            gm, v["theta_minus"], b.first.gamma0, b.first.nbar,
            gp, v["theta_plus"], b.second.gamma0, b.second.nbar,
            b.channel.epsilon,
        )
        e_pm, e_mp = steering_arrays(var_m, var_p, cov)
    margin = p.margin()
    feasible = (gt_m >= margin) & (gt_p >= margin)
    e = e_pm if p.objective == "e_pm" else e_mp
    e = np.where(feasible & np.isfinite(e), e, np.inf)
    return e, np.minimum(gt_m, gt_p) - margin


def _config_at(p: OptimizationProblem, names, x) -> CascadeConfig:
    v = _unpack(p, names, x)
    b = p.base
    first = replace(b.first, gamma=float(v["c_minus"]) * b.first.gamma_tilde0, theta=float(v["theta_minus"]))
    second = replace(b.second, gamma=float(v["c_plus"]) * b.second.gamma_tilde0, theta=float(v["theta_plus"]))
    return CascadeConfig(first, second, replace(b.channel, phi=float(v["phi"])))


def _theta_floor(gamma: float, gamma0: float, margin: float) -> float:
    """Smallest angle in [0, pi/2] with gamma0 - gamma cos(2 theta) >= margin (nan if none)."""
    if gamma <= 0.0:
        return 0.0 if gamma0 >= margin else math.nan
    c = (gamma0 - margin) / gamma
    if c >= 1.0:
        return 0.0
    if c < -1.0:
        return math.nan
    th = 0.5 * math.acos(c)
    while gamma0 - gamma * math.cos(2.0 * th) < margin and th < HALF_PI:
        th = math.nextafter(th, HALF_PI)
    return th


def _project(p: OptimizationProblem, names, x) -> list[float]:
    """Raise free angles onto the stability-margin boundary when they fall below it.

    The constraint is a lower bound on each angle that depends only on the
    coupling rate, so projecting keeps the polish objective continuous
    without moving the constrained minimum.
    """
    x = [float(v) for v in x]
    v = _unpack(p, names, x)
    b, m = p.base, p.margin()
    floors = {
        "theta_minus": _theta_floor(float(v["c_minus"]) * b.first.gamma_tilde0, b.first.gamma0, m),
        "theta_plus": _theta_floor(float(v["c_plus"]) * b.second.gamma_tilde0, b.second.gamma0, m),
    }
    floors["theta"] = max(floors["theta_minus"], floors["theta_plus"])
    for i, n in enumerate(names):
        fl = floors.get(n)
        if fl is not None and math.isfinite(fl) and x[i] < fl:
            x[i] = min(fl, _bounds(p, n)[1])
    return x


def _point_value(p: OptimizationProblem, names, x) -> tuple[float, float]:
    """Objective at one point; nonzero phi goes through the Lyapunov oracle."""
    if "phi" not in names:
        e, slack = _evaluate(p, names, [np.asarray(xi) for xi in x])
        return float(e), float(slack)
    cfg = _config_at(p, names, x)
    e_arr, slack = _evaluate(p, [n for n in names if n != "phi"], [xi for n, xi in zip(names, x) if n != "phi"])
    if not np.isfinite(e_arr):
        return math.inf, float(slack)
    try:
        e_pm, e_mp = steering_from_covariance(lyapunov_covariance(cfg, backward=True))
    except (UnstableConfig, SolverSingular):
        return math.inf, float(slack)
    return (e_pm if p.objective == "e_pm" else e_mp), float(slack)


JOINT_PHI_GRID_MAX = 20_000


def _grid_search(p: OptimizationProblem, names, axes):
    if "phi" in names and math.prod(len(a) for a in axes) > JOINT_PHI_GRID_MAX:
        # too many Lyapunov solves: grid the closed-form axes at the base phase,
        # then scan the phase alone through the oracle at the best cell
        k = names.index("phi")
        rest = [n for n in names if n != "phi"]
        sub = replace(p, free={n: v for n, v in p.free.items() if n != "phi"})
        e0, x0, n0 = _grid_search(sub, rest, [a for i, a in enumerate(axes) if i != k])
        best_e, best_x = math.inf, None
        for ph in axes[k]:
            x = x0[:k] + [float(ph)] + x0[k:]
            e = _point_value(p, names, x)[0]
            if e < best_e:
                best_e, best_x = e, x
        if best_x is None:
            best_x = x0[:k] + [float(axes[k][0])] + x0[k:]
        return best_e, best_x, n0 + len(axes[k])
    if "phi" in names:
        mesh = np.meshgrid(*axes, indexing="ij")
        flat = [m.ravel() for m in mesh]
        vals = np.array([_point_value(p, names, [f[i] for f in flat])[0] for i in range(flat[0].size)])
        vals = vals.reshape(mesh[0].shape)
    else:
        mesh = np.meshgrid(*axes, indexing="ij", sparse=True)
        vals, _ = _evaluate(p, names, mesh)
        vals = np.broadcast_to(vals, tuple(len(a) for a in axes))
    # first minimum in row-major order
    idx = np.unravel_index(int(np.argmin(vals)), vals.shape)
    return float(vals[idx]), [float(a[i]) for a, i in zip(axes, idx)], vals.size


def _zoom_axes(p, names, axes, best, points=9):
    out = []
    for n, a, x in zip(names, axes, best):
        lo, hi = _bounds(p, n)
        step = (a[1] - a[0]) if len(a) > 1 else 0.0
        if step == 0.0:
            out.append(np.array([x]))
            continue
        out.append(np.linspace(max(lo, x - step), min(hi, x + step), points))
    return out


def minimize(p: OptimizationProblem, warm_start: Optional[Sequence[float]] = None) -> OptResult:
    """Minimize the chosen steering parameter; deterministic for a given problem.

    ``warm_start`` (search coordinates, as in ``OptResult.trace``) adds a
    second polish start point; the better of the two results is kept.
    """
    p.check()
    names = _axes(p)
    axes = [_grid_axis(p, n) for n in names]
    best_e, best_x, n_evals = _grid_search(p, names, axes)
    if not math.isfinite(best_e):
        raise EmptyFeasibleSet("no stable point in the search box")
    for _ in range(2):
        axes = _zoom_axes(p, names, axes, best_x)
        e, x, n = _grid_search(p, names, axes)
        n_evals += n
        if e < best_e:
            best_e, best_x = e, x

    bounds = [_bounds(p, n) for n in names]
    trace: list[tuple[float, ...]] = [tuple(best_x) + (best_e,)]

    def penalized(x):
        e, slack = _point_value(p, names, _project(p, names, x))
        if math.isfinite(e):
            return e
        return 1e6 + abs(min(slack, 0.0))

    starts = [best_x]
    if warm_start is not None:
        ws = [min(max(float(v), lo), hi) for v, (lo, hi) in zip(warm_start, bounds)]
        starts.append(ws)
    converged = True
    for x0 in starts:
        # restart the simplex from its own result until it stops improving
        x = np.asarray(x0, dtype=float)
        for _ in range(p.restarts):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                res = _nelder_mead(
                    penalized,
                    x,
                    method="Nelder-Mead",
                    bounds=bounds,
                    options={"xatol": 1e-10, "fatol": p.polish_tol, "maxiter": 4000 * len(names), "maxfev": 8000 * len(names)},
                )
            n_evals += int(res.nfev)
            x = np.asarray(_project(p, names, res.x))
            improved = res.fun < best_e - p.polish_tol
            if res.fun < best_e:
                best_e, best_x = float(res.fun), [float(v) for v in x]
                trace.append(tuple(best_x) + (best_e,))
                converged = bool(res.success)
            if not improved:
                break

    cfg = _config_at(p, names, best_x)
    if "phi" in names:
        e_pm, e_mp = steering_from_covariance(lyapunov_covariance(cfg, backward=True))
    else:
        e_pm_a, e_mp_a = _both(p, names, best_x)
        e_pm, e_mp = float(e_pm_a), float(e_mp_a)
    _assert_feasible(p, cfg)
    on_bound = []
    for n, x, (lo, hi) in zip(names, best_x, bounds):
        tol = 1e-9 * max(1.0, hi - lo)
        if hi > lo and (x - lo <= tol or hi - x <= tol):
            on_bound.append(n)
    params = {}
    v = _unpack(p, names, best_x)
    for k in ("c_minus", "c_plus", "theta_minus", "theta_plus", "phi"):
        params[k] = float(v[k])
    return OptResult(
        params=params,
        value=best_e,
        config=cfg,
        classification=classify(e_pm, e_mp),
        e_pm=e_pm,
        e_mp=e_mp,
        n_evals=n_evals,
        converged=converged,
        on_bound=tuple(on_bound),
        trace=tuple(trace),
    )


def _both(p, names, x):
    b = p.base
    v = _unpack(p, names, x)
    var_m, var_p, cov, *_ = moments_arrays(
        v["c_minus"] * b.first.gamma_tilde0, v["theta_minus"], b.first.gamma0, b.first.nbar,
        v["c_plus"] * b.second.gamma_tilde0, v["theta_plus"], b.second.gamma0, b.second.nbar,
        b.channel.epsilon,
    )
    return steering_arrays(var_m, var_p, cov)


def _assert_feasible(p: OptimizationProblem, cfg: CascadeConfig) -> None:
    m = p.margin()
    for o in (cfg.first, cfg.second):
        g = o.gamma0 - o.gamma * math.cos(2.0 * o.theta)
        if g < m * (1.0 - 1e-9):
            raise AssertionError(f"optimum violates the stability margin: {g!r} < {m!r}")


# ----------------------------------------------------------------------------
# curves and loss tolerance
# ----------------------------------------------------------------------------

DEFAULT_RATIO_BOUNDS = (1e-3, 1e4)


def client_server_problem(
    objective: str,
    scenario: str | Scenario,
    c_minus: float,
    epsilon: float = 0.0,
    mode: str = "free_angles",
    ratio_bounds: tuple[float, float] = DEFAULT_RATIO_BOUNDS,
    client_first: bool = True,
    **kw,
) -> OptimizationProblem:
    """Client cooperativity fixed at ``c_minus``; server cooperativity and both angles free.

    With ``client_first`` the client is the upstream ("-") oscillator.
    Otherwise the cascade is reversed: the server (carrying the scenario's
    "+" bath) goes first and the objective label is swapped, so ``e_pm``
    always means "server steered by client".
    """
    if client_first:
        base = scenario_config(scenario, c_minus, epsilon=epsilon)
        free = {"c_plus": (ratio_bounds[0] * c_minus, ratio_bounds[1] * c_minus)}
    else:
        s = SCENARIOS[scenario] if isinstance(scenario, str) else scenario
        flipped = Scenario(s.name + "_reversed", s.gamma0_plus, s.nbar_plus, s.gamma0_minus, s.nbar_minus)
        base = scenario_config(flipped, c_minus, c_plus=c_minus, epsilon=epsilon)
        free = {"c_minus": (ratio_bounds[0] * c_minus, ratio_bounds[1] * c_minus)}
        objective = {"e_pm": "e_mp", "e_mp": "e_pm"}[objective]
    free["theta_plus"] = (0.0, HALF_PI)
    free["theta_minus"] = (0.0, HALF_PI)
    return OptimizationProblem(objective, base, free, mode=mode, **kw)


def phi_scan(result: OptResult, objective: str, points: int = 9) -> tuple[np.ndarray, np.ndarray]:
    """Steering parameter vs channel phase at an optimum, through the Lyapunov oracle.

    Used to confirm that phi = 0 is the best quadrature at sampled optima.
    """
    phis = np.linspace(-math.pi, math.pi, points)
    vals = np.empty(points)
    for i, ph in enumerate(phis):
        cfg = replace(result.config, channel=replace(result.config.channel, phi=float(ph)))
        e_pm, e_mp = steering_from_covariance(lyapunov_covariance(cfg, backward=True))
        vals[i] = e_pm if objective == "e_pm" else e_mp
    return phis, vals


@dataclass(frozen=True)
class CurvePoint:
    c_minus: float
    mode: str
    e_opt: float
    theta_minus: float
    theta_plus: float
    ratio: float
    e_pm: float
    e_mp: float
    on_bound: tuple[str, ...]
    error: str = ""


def optimal_curve(
    objective: str,
    c_minus_grid: Sequence[float],
    scenario: str | Scenario,
    epsilon: float = 0.0,
    modes: Sequence[str] = ("free_angles", "symmetric_angles"),
    **kw,
) -> list[CurvePoint]:
    """Optimum at each C- for each mode, warm-started from the previous grid point.

    A failure at one point is recorded in ``error`` and the sweep continues.
    """
    if len(c_minus_grid) == 0:
        raise ValueError("empty C- grid")
    out = []
    for mode in modes:
        prev = None
        for cm in c_minus_grid:
            prob = client_server_problem(objective, scenario, cm, epsilon, mode, **kw)
            try:
                warm = None
                if prev is not None:
                    warm = _coords_from_params(prob, prev)
                r = minimize(prob, warm_start=warm)
            except Exception as exc:  # noqa: BLE001 - recorded per point
                log.warning("C-=%g mode=%s failed: %s", cm, mode, exc)
                out.append(CurvePoint(cm, mode, math.nan, math.nan, math.nan, math.nan, math.nan, math.nan, (), repr(exc)))
                prev = None
                continue
            prev = r.params
            out.append(
                CurvePoint(
                    c_minus=cm,
                    mode=mode,
                    e_opt=r.value,
                    theta_minus=r.params["theta_minus"],
                    theta_plus=r.params["theta_plus"],
                    ratio=r.params["c_plus"] / cm,
                    e_pm=r.e_pm,
                    e_mp=r.e_mp,
                    on_bound=r.on_bound,
                )
            )
    return out


def _coords_from_params(p: OptimizationProblem, params: dict) -> list[float]:
    out = []
    for n in _axes(p):
        if n == "c_plus":
            # keep the neighbor's C+/C- ratio rather than its absolute C+
            ratio = params["c_plus"] / params["c_minus"]
            out.append(math.log10(ratio * _unpack(p, [], [])["c_minus"]))
        elif n in LOG_PARAMS:
            out.append(math.log10(params[n]))
        elif n == "theta":
            out.append(params["theta_plus"])
        else:
            out.append(params[n])
    return out


def optimized_value(objective, c_minus, scenario, epsilon, mode="free_angles", **kw) -> float:
    return minimize(client_server_problem(objective, scenario, c_minus, epsilon, mode, **kw)).value


def loss_tolerance(
    objective: str,
    c_minus: float,
    scenario: str | Scenario,
    e_threshold: float = 0.5,
    xtol: float = 1e-4,
    atol: float = 1e-9,
    eps_probe: float = 1.0 - 1e-4,
    **kw,
) -> float:
    """Largest loss for which the re-optimized steering parameter stays below threshold.

    Steering counts only when the optimum is below ``e_threshold - atol``,
    so the 1/2 plateau reached by pure ground-state cooling is not mistaken
    for steering.  Returns 1.0 when the threshold is never crossed up to
    ``eps_probe`` and 0.0 when even the lossless optimum fails.
    """

    def steers(eps):
        return optimized_value(objective, c_minus, scenario, eps, **kw) < e_threshold - atol

    if not steers(0.0):
        return 0.0
    if steers(eps_probe):
        return 1.0
    lo, hi = 0.0, eps_probe
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if steers(mid):
            lo = mid
        else:
            hi = mid
    return lo
