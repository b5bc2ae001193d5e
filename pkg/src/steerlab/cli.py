"""Command-line front end for evaluation, region maps, optimization and cross-checks.

Exit codes: 0 ok, 2 configuration error, 3 instability, 4 oracle mismatch.
Set ``STEERLAB_LOG`` (DEBUG, INFO, WARNING, ...) for log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from importlib import metadata
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import conditional as cond
from . import optimize as opt
from .dynamics_oracle import SimulationSpec, build_drift_diffusion, default_dt, lyapunov_covariance, simulate_sde
from .errors import ConfigError, EmptyFeasibleSet, UnstableConfig
from .model import CascadeConfig, directional_coupling, require_valid
from .sampling import random_stable_config
from .scenario_io import config_from_doc, grid_values, load_scenario, with_override
from .steady_state import covariance_term_scale, rwa_moments
from .steering import Steering, classify, steering_from_covariance, steering_parameters

log = logging.getLogger("steerlab")

EXIT_OK, EXIT_CONFIG, EXIT_UNSTABLE, EXIT_MISMATCH = 0, 2, 3, 4
CLASS_LEGEND = "# class: -1=unstable 0=none 1=minus-to-plus 2=plus-to-minus 3=two-way"
DEFAULT_C_MINUS_GRID = {"min": 1.0, "max": 1000.0, "points": 13, "scale": "log"}


class OracleMismatch(Exception):
    pass


def fmt(x) -> str:
    """17 significant digits, locale independent."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def write_table(path: str | None, header: Sequence[str], rows: Iterable[Sequence], fmt_name: str, comment: str = "") -> None:
    rows = list(rows)
    if fmt_name == "json":
        text = json.dumps([dict(zip(header, r)) for r in rows], default=float, indent=1) + "\n"
    else:
        lines = [comment] if comment else []
        lines.append(",".join(header))
        lines += [",".join(fmt(v) for v in r) for r in rows]
        text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def write_manifest(args, inputs: dict, wall: float, extra: dict | None = None) -> None:
    if args.out is None:
        return
    try:
        version = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        version = "0.1.0"
    doc = {
        "command": args.command,
        "inputs": inputs,
        "seed": args.seed,
        "threads": args.threads,
        "format": args.format,
        "version": version,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "wall_time_s": wall,
    }
    if extra:
        doc.update(extra)
    Path(str(args.out) + ".manifest.json").write_text(json.dumps(doc, indent=1, default=float) + "\n")


def _doc(args) -> dict:
    return load_scenario(args.scenario) if args.scenario else {}


# ----------------------------------------------------------------------------
# eval and contour
# ----------------------------------------------------------------------------

EVAL_HEADER = (
    "e_pm", "e_mp", "class", "var_xm", "var_pm", "var_xp", "var_pp",
    "cov_xx", "cov_pp", "bare_var_p", "r", "f",
)


def evaluate(cfg: CascadeConfig) -> dict:
    """Moments and steering parameters; phi != 0 goes through the Lyapunov solver."""
    require_valid(cfg)
    r, f = directional_coupling(cfg)
    if cfg.channel.phi == 0.0:
        m = rwa_moments(cfg)
        rep = steering_parameters(m)
        e_pm, e_mp = rep.e_plus_given_minus, rep.e_minus_given_plus
        v = m.covariance_matrix()
        bare = m.bare_var_p
    else:
        v = lyapunov_covariance(cfg)
        e_pm, e_mp = steering_from_covariance(v)
        p = cfg.second
        bare = (p.gamma / 2.0 + p.gamma_tilde0) / (p.gamma0 - p.gamma * math.cos(2.0 * p.theta))
    return {
        "e_pm": e_pm,
        "e_mp": e_mp,
        "class": int(classify(e_pm, e_mp)),
        "var_xm": v[0, 0],
        "var_pm": v[1, 1],
        "var_xp": v[2, 2],
        "var_pp": v[3, 3],
        "cov_xx": v[0, 2],
        "cov_pp": v[1, 3],
        "bare_var_p": bare,
        "r": r,
        "f": f,
    }


def cmd_eval(args) -> int:
    t0 = time.perf_counter()
    doc = _doc(args)
    res = evaluate(config_from_doc(doc))
    if args.format == "json" and args.out is None:
        print(json.dumps(res, default=float))
    else:
        print(f"E+|- = {res['e_pm']:.10g}")
        print(f"E-|+ = {res['e_mp']:.10g}")
        print(f"classification = {Steering(res['class']).name}")
        if args.out:
            write_table(args.out, EVAL_HEADER, [[res[k] for k in EVAL_HEADER]], args.format)
    write_manifest(args, {"scenario": doc}, time.perf_counter() - t0)
    return EXIT_OK


def _contour_point(doc: dict, paths, values) -> tuple[float, float, int]:
    d = doc
    for p, v in zip(paths, values):
        d = with_override(d, p, v)
    cfg = config_from_doc(d)
    try:
        res = evaluate(cfg)
    except UnstableConfig:
        return math.nan, math.nan, -1
    return res["e_pm"], res["e_mp"], res["class"]


def contour_rows(doc: dict, threads: int = 1) -> tuple[list[str], list[list]]:
    """Grid rows (axis1, axis2, e_pm, e_mp, class), ordered by grid index."""
    if "sweep" not in doc:
        raise ConfigError("sweep: required for contour")
    axes = doc["sweep"]["axes"]
    paths = [a["path"] for a in axes]
    vals = [grid_values(a, f"sweep.axes.{i}") for i, a in enumerate(axes)]
    if len(vals) == 1:
        vals.append([math.nan])
    points = [(u, w) for u in vals[0] for w in vals[1]]
    use = paths if len(axes) == 2 else paths[:1]

    def run(pt):
        return _contour_point(doc, use, pt[: len(use)])

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            out = list(pool.map(run, points))
    else:
        out = [run(pt) for pt in points]
    rows = [[u, w, e1, e2, c] for (u, w), (e1, e2, c) in zip(points, out)]
    return paths, rows


def cmd_contour(args) -> int:
    t0 = time.perf_counter()
    doc = _doc(args)
    paths, rows = contour_rows(doc, args.threads)
    legend = CLASS_LEGEND + " | axis1=" + paths[0] + (" axis2=" + paths[1] if len(paths) > 1 else "")
    write_table(args.out, ("axis1", "axis2", "e_pm", "e_mp", "class"), rows, args.format, legend)
    write_manifest(args, {"scenario": doc}, time.perf_counter() - t0)
    return EXIT_OK


# ----------------------------------------------------------------------------
# optimization
# ----------------------------------------------------------------------------

CURVE_HEADER = ("c_minus", "mode", "e_opt", "theta_minus", "theta_plus", "ratio", "e_pm", "e_mp", "on_bound", "error")


def _opt_section(doc: dict, args) -> dict:
    sec = dict(doc.get("optimize", {}))
    for key in ("preset", "objective", "epsilon"):
        val = getattr(args, key, None)
        if val is not None:
            sec[key] = val
    if getattr(args, "c_minus", None):
        sec["c_minus"] = {"values": args.c_minus}
    return sec


def cmd_optimize(args) -> int:
    t0 = time.perf_counter()
    doc = _doc(args)
    sec = _opt_section(doc, args)
    objective = sec.get("objective", "e_pm")
    if "free" in sec:
        res = _single_problem(doc, sec, objective)
        header = ("objective", "e_opt", "c_minus", "c_plus", "theta_minus", "theta_plus", "phi", "class", "converged", "n_evals", "on_bound")
        p = res.params
        row = [objective, res.value, p["c_minus"], p["c_plus"], p["theta_minus"], p["theta_plus"], p["phi"],
               int(res.classification), res.converged, res.n_evals, "|".join(res.on_bound)]
        write_table(args.out, header, [row], args.format)
    else:
        grid = grid_values(sec.get("c_minus", DEFAULT_C_MINUS_GRID), "optimize.c_minus")
        modes = sec.get("modes", ["free_angles", "symmetric_angles"])
        pts = opt.optimal_curve(
            objective, grid, sec.get("preset", "hot_hot"), float(sec.get("epsilon", 0.0)), modes,
            client_first=bool(sec.get("client_first", True)),
        )
        rows = [[p.c_minus, p.mode, p.e_opt, p.theta_minus, p.theta_plus, p.ratio, p.e_pm, p.e_mp, "|".join(p.on_bound), p.error] for p in pts]
        write_table(args.out, CURVE_HEADER, rows, args.format)
    write_manifest(args, {"scenario": doc, "optimize": sec}, time.perf_counter() - t0)
    return EXIT_OK


def _single_problem(doc: dict, sec: dict, objective: str) -> opt.OptResult:
    base = config_from_doc(doc)
    bounds = sec.get("bounds", {})
    defaults = {
        "c_plus": (1e-3 * max(base.second.cooperativity, 1e-3), 1e4 * max(base.second.cooperativity, 1e-3)),
        "c_minus": (1e-3 * max(base.first.cooperativity, 1e-3), 1e4 * max(base.first.cooperativity, 1e-3)),
        "theta_plus": (0.0, opt.HALF_PI),
        "theta_minus": (0.0, opt.HALF_PI),
        "phi": (-math.pi, math.pi),
    }
    for k in bounds:
        if k not in sec["free"]:
            raise ConfigError(f"optimize.bounds.{k}: not in optimize.free")
    free = {k: tuple(bounds.get(k, defaults[k])) for k in sec["free"]}
    prob = opt.OptimizationProblem(objective, base, free, mode=sec.get("mode", "free_angles"))
    try:
        prob.check()
    except ValueError as exc:
        raise ConfigError(f"optimize: {exc}") from exc
    return opt.minimize(prob)


def cmd_losssweep(args) -> int:
    t0 = time.perf_counter()
    doc = _doc(args)
    sec = _opt_section(doc, args)
    objective = sec.get("objective", "e_pm")
    preset = sec.get("preset", "hot_hot")
    thr = float(sec.get("threshold", 0.5))
    grid = grid_values(sec.get("c_minus", {"values": [2.0, 10.0, 100.0]}), "optimize.c_minus")
    rows = [[preset, objective, cm, opt.loss_tolerance(objective, cm, preset, thr)] for cm in grid]
    write_table(args.out, ("scenario", "objective", "c_minus", "epsilon_max"), rows, args.format)
    n_curve = int(sec.get("curve_points", 0))
    if n_curve and args.out:
        eps = np.linspace(0.0, 0.99, n_curve)
        curve = [[cm, e, opt.optimized_value(objective, cm, preset, float(e))] for cm in grid for e in eps]
        write_table(str(args.out) + ".curve.csv", ("c_minus", "epsilon", "e_opt"), curve, "csv")
    write_manifest(args, {"scenario": doc, "optimize": sec}, time.perf_counter() - t0)
    return EXIT_OK


# ----------------------------------------------------------------------------
# oracle and conditional
# ----------------------------------------------------------------------------


def oracle_deviation(cfg: CascadeConfig) -> float:
    """Largest entrywise relative deviation between Lyapunov and closed-form covariances."""
    v_l = lyapunov_covariance(cfg)
    v_a = rwa_moments(cfg).covariance_matrix()
    corr = np.sqrt(np.outer(np.diag(v_a), np.diag(v_a)))
    # entries with no relative precision left are compared on the scale they lost
    # it to: the cancelling terms of the cross covariance, or the correlation scale
    scale = corr.copy()
    cov_scale = covariance_term_scale(cfg)
    scale[0, 2] = scale[2, 0] = scale[1, 3] = scale[3, 1] = cov_scale
    resolved = (np.abs(v_a) >= 1e-6 * scale) & (np.abs(v_a) >= 1e-250 * corr)
    with np.errstate(divide="ignore", invalid="ignore"):
        dev = np.where(resolved, np.abs(v_l - v_a) / np.abs(v_a), np.abs(v_l - v_a) / np.maximum(scale, 1e-300 * corr))
    return float(np.nan_to_num(dev, nan=0.0).max())


def cmd_oracle(args) -> int:
    t0 = time.perf_counter()
    doc = _doc(args)
    sec = doc.get("oracle", {})
    method = sec.get("method", "lyapunov")
    if method == "lyapunov":
        n = int(sec.get("n_configs", 100))
        rng = np.random.default_rng(args.seed)
        rows = []
        for i in range(n):
            cfg = random_stable_config(rng)
            rows.append([i, oracle_deviation(cfg)])
        worst = max(r[1] for r in rows)
        print(f"max relative deviation = {worst:.3e} over {n} configs")
        if args.out:
            write_table(args.out, ("index", "max_rel_dev"), rows, args.format)
        write_manifest(args, {"scenario": doc}, time.perf_counter() - t0, {"max_rel_dev": worst})
        if worst > 1e-8:
            raise OracleMismatch(f"Lyapunov and closed form differ by {worst:.3e} > 1e-8")
        return EXIT_OK

    cfg = config_from_doc(doc)
    v_l = lyapunov_covariance(cfg)
    dt = float(sec.get("dt", default_dt(cfg)))
    slowest = float(np.abs(np.linalg.eigvals(build_drift_diffusion(cfg).a_matrix).real).min())
    spec = SimulationSpec(
        dt=dt,
        t_end=float(sec.get("t_end", 200.0 / slowest)),
        n_traj=int(sec.get("n_traj", 64)),
        seed=args.seed,
        burn_in_fraction=float(sec.get("burn_in_fraction", 0.2)),
        scheme=sec.get("scheme", "euler"),
        batch_size=int(sec.get("batch_size", 256)),
        chunk_steps=int(sec.get("chunk_steps", 2048)),
    )
    res = simulate_sde(cfg, spec, threads=args.threads)
    z_max = float(sec.get("z_max", 3.0))
    rows = []
    worst = 0.0
    for i in range(4):
        for j in range(i, 4):
            z = abs(res.covariance[i, j] - v_l[i, j]) / res.stderr[i, j] if res.stderr[i, j] > 0 else 0.0
            worst = max(worst, z)
            rows.append([i, j, v_l[i, j], res.covariance[i, j], res.stderr[i, j], z])
    print(f"max |z| = {worst:.3f} over 10 covariance entries")
    if args.out:
        write_table(args.out, ("i", "j", "lyapunov", "monte_carlo", "stderr", "z"), rows, args.format)
    write_manifest(args, {"scenario": doc, "simulation": asdict(spec)}, time.perf_counter() - t0, {"max_abs_z": worst})
    if worst > z_max:
        raise OracleMismatch(f"Monte Carlo differs from Lyapunov by {worst:.2f} standard errors")
    return EXIT_OK


COND_HEADER = ("c_minus", "e_pm_uncond", "e_pm_cond", "d_pm", "e_mp_uncond", "e_mp_cond", "d_mp", "measurement_pi")


def _cond_row(cfg, sec) -> list:
    eta = float(sec.get("efficiency", 1.0))
    if sec.get("best_over_angles", False):
        r_pm, r_mp = cond.best_conditional(cfg, efficiency=eta)
    else:
        angles = tuple(math.pi * float(a) for a in sec.get("monitored_quadratures_pi", [0.0, 0.5]))
        r_pm = r_mp = cond.solve_conditional(cfg, cond.MeasurementModel(angles, eta))
    label = lambda r: "|".join("%.6g" % (a / math.pi) for a in r.measurement.monitored_quadratures)  # noqa: E731
    return [
        cfg.first.cooperativity, r_pm.e_pm_uncond, r_pm.e_pm_cond, r_pm.d_pm,
        r_mp.e_mp_uncond, r_mp.e_mp_cond, r_mp.d_mp, label(r_pm) + ";" + label(r_mp),
    ]


def cmd_conditional(args) -> int:
    t0 = time.perf_counter()
    doc = _doc(args)
    sec = doc.get("conditional", {})
    if args.at_optima:
        osec = _opt_section(doc, args)
        grid = grid_values(osec.get("c_minus", DEFAULT_C_MINUS_GRID), "optimize.c_minus")
        preset, eps = osec.get("preset", "hot_hot"), float(osec.get("epsilon", 0.0))
        rows = []
        for cm in grid:
            r = opt.minimize(opt.client_server_problem(osec.get("objective", "e_pm"), preset, cm, eps))
            rows.append(_cond_row(r.config, sec))
    else:
        rows = [_cond_row(config_from_doc(doc), sec)]
    write_table(args.out, COND_HEADER, rows, args.format)
    write_manifest(args, {"scenario": doc, "at_optima": bool(args.at_optima)}, time.perf_counter() - t0)
    return EXIT_OK


# ----------------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario JSON file")
    common.add_argument("--out", help="output file (CSV or JSON); a .manifest.json is written next to it")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    presets = argparse.ArgumentParser(add_help=False)
    presets.add_argument("--preset", choices=sorted(opt.SCENARIOS), help="built-in thermal scenario")
    presets.add_argument("--objective", choices=opt.OBJECTIVES)
    presets.add_argument("--epsilon", type=float)
    presets.add_argument("--c-minus", type=float, nargs="+", dest="c_minus")

    ap = argparse.ArgumentParser(prog="steerlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("eval", parents=[common], help="steering at one configuration")
    sub.add_parser("contour", parents=[common], help="region map over one or two swept parameters")
    sub.add_parser("optimize", parents=[common, presets], help="optimal steering curves or a single problem")
    sub.add_parser("losssweep", parents=[common, presets], help="largest tolerable transmission loss")
    sub.add_parser("oracle", parents=[common], help="closed form vs Lyapunov, or Lyapunov vs Monte Carlo")
    c = sub.add_parser("conditional", parents=[common, presets], help="improvement from monitoring the output light")
    c.add_argument("--at-optima", action="store_true", help="evaluate at optimized operating points")
    return ap


COMMANDS = {
    "eval": cmd_eval,
    "contour": cmd_contour,
    "optimize": cmd_optimize,
    "losssweep": cmd_losssweep,
    "oracle": cmd_oracle,
    "conditional": cmd_conditional,
}


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("STEERLAB_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    if args.command in ("eval", "contour") and not args.scenario:
        print("error: --scenario is required", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (UnstableConfig, EmptyFeasibleSet) as exc:
        print(f"unstable: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except OracleMismatch as exc:
        print(f"oracle mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
