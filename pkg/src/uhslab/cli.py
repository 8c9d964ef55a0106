"""Experiment runner: subcommands, machine-readable outputs, run manifests.

    uhslab <subcommand> --config <path> [--out <dir>] [--seed <u64>]

Subcommands: forward, verify-weights, carleman-sweep, inverse-stability,
convergence.  Every run writes its data files plus manifest.json into the
output directory.  Exit codes: 0 success, 2 validation failure, 3 numerical
failure.  Data outputs are byte-identical across reruns of the same config;
the manifest carries timing metadata and is exempt.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

import uhslab
from uhslab.config import ConfigError, config_sha256, parse_config
from uhslab.grid import GridSpec, integrate, write_field
from uhslab.weight import (
    WeightParams,
    check_pseudoconvexity,
    cutoff_with_derivatives,
    select_parameters,
    sign_condition_report,
)
from uhslab.carleman import default_test_family, sweep_s
from uhslab.operators import OperatorCoefficients
from uhslab.evolve import EvolutionProblem, solve
from uhslab.inverse import (
    InverseScenario,
    build_w_k,
    reconstruct_f,
    stability_experiment,
)

_SUBCOMMANDS = ("forward", "verify-weights", "carleman-sweep",
                "inverse-stability", "convergence")


def _fmt(x):
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return f"{x:.17g}"


def _write_csv(path, header, rows):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _grid_from_config(gc):
    return GridSpec(1, 1, (gc.x_min,), (gc.x_max,), gc.L, gc.T, gc.nx, gc.ny, gc.nt)


def _weight_from_config(cfg, grid):
    wc = cfg.weight
    alpha, rho = wc.alpha, wc.rho
    if alpha == "auto" or rho == "auto":
        sel = select_parameters((cfg.grid.x_min,), (cfg.grid.x_max,), (wc.x0,),
                                wc.L, wc.epsilon)
        alpha = sel.alpha if alpha == "auto" else alpha
        rho = sel.rho if rho == "auto" else rho
    delta = wc.delta
    probe = WeightParams.for_box((cfg.grid.x_min,), (cfg.grid.x_max,), (wc.x0,),
                                 (wc.y0,), alpha, wc.beta, wc.gamma, wc.epsilon,
                                 0.1 * wc.L, rho, wc.L)
    if delta == "auto":
        rep = sign_condition_report(probe, _check_grid(cfg))
        delta = rep.delta
    return dataclasses.replace(probe, delta=float(delta))


def _check_grid(cfg):
    """Weight-certification grid: the y-extent equals the weight radius."""
    gc = cfg.grid
    return GridSpec(1, 1, (gc.x_min,), (gc.x_max,), cfg.weight.L, gc.T,
                    gc.nx, gc.ny, gc.nt)


def _cli_scenario(cfg):
    """The runner's documented closed-form scenario on the configured geometry."""
    grid = _grid_from_config(cfg.grid)
    weight = _weight_from_config(cfg, grid)
    x = grid.coords[0][:, None]
    y = grid.coords[1][None, :]
    xh = (x - grid.x_min[0]) / (grid.x_max[0] - grid.x_min[0])
    f = np.sin(np.pi * xh) * (1.0 + 0.3 * y) * np.exp(-(y**2)) * np.ones(grid.shape[:-1])
    p = 0.4 * np.sin(np.pi * xh) * np.cos(np.pi * y / grid.L) * np.ones(grid.shape[:-1])
    omega = 0.5
    t = grid.coords[2]
    shape = 1.0 + 0.3 * np.cos(np.pi * x) * np.cos(np.pi * y / (4 * weight.L))
    R = np.broadcast_to(shape[..., None] * np.exp(1j * omega * t), grid.shape)
    return InverseScenario(grid, weight, f, R.astype(complex), p, 0.7, omega,
                           "cli")


def _manifest(out_dir, cfg, subcommand, started, wall):
    data = {
        "config_sha256": config_sha256(cfg),
        "tool_version": uhslab.__version__,
        "started_at": started,
        "wall_seconds": wall,
        "subcommand": subcommand,
    }
    with open(out_dir / "manifest.json", "w", encoding="ascii") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_forward(cfg, out_dir):
    scen = _cli_scenario(cfg)
    prob = EvolutionProblem(scen.grid, scen.p,
                            np.zeros(scen.grid.shape[:-1], dtype=complex),
                            f=scen.f_true, R=scen.R)
    traj = solve(prob)
    name = f"traj_{config_sha256(cfg)[:12]}.csv"
    write_field(traj.u, out_dir / name)
    return {"checkpoint": name,
            "max_step_residual": float(np.max(traj.step_residuals))}


def _cmd_verify_weights(cfg, out_dir):
    wc = cfg.weight
    report = {"feasible": False, "chosen_alpha": None, "rho": None,
              "delta": None, "delta0": None,
              "margin_4_7": None, "margin_4_8": None, "margin_4_9": None,
              "margin_4_10": None, "margin_4_11": None}
    try:
        sel = select_parameters((cfg.grid.x_min,), (cfg.grid.x_max,), (wc.x0,),
                                wc.L, wc.epsilon)
    except ValueError as exc:
        report["error"] = str(exc)
        _dump_json(out_dir / "verify_weights.json", report)
        return report
    alpha = sel.alpha if wc.alpha == "auto" else wc.alpha
    rho = sel.rho if wc.rho == "auto" else wc.rho
    params = WeightParams.for_box((cfg.grid.x_min,), (cfg.grid.x_max,),
                                  (wc.x0,), (wc.y0,), alpha, wc.beta, wc.gamma,
                                  wc.epsilon, sel.delta, rho, wc.L)
    grid = _check_grid(cfg)
    rep = sign_condition_report(params, grid)
    params = dataclasses.replace(params, delta=rep.delta)
    try:
        delta0 = check_pseudoconvexity(params, grid)
    except ValueError:
        delta0 = 0.0
    report.update({
        "chosen_alpha": alpha,
        "rho": rho,
        "delta": rep.delta,
        "delta0": delta0,
        "margin_4_7": rep.margin_endcap,
        "margin_4_8": rep.margin_shell,
        "margin_4_9": rep.margin_core,
        "margin_4_10": rep.margin_bands,
        "margin_4_11": rep.margin_center,
        "feasible": bool(rep.all_passed and delta0 > 0
                         and not params.feasibility_violations()),
    })
    _dump_json(out_dir / "verify_weights.json", report)
    return report


def _dump_json(path, data):
    with open(path, "w", encoding="ascii") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _gamma_tag(g):
    return f"{g:g}".replace(".", "p")


def _cmd_carleman(cfg, out_dir):
    scen = _cli_scenario(cfg)
    sub, slices = scen.grid.y_subgrid(scen.weight.L)
    cc = cfg.carleman
    if cc.s_count < 2:
        raise ConfigError("[carleman] s_count must be >= 2")
    s_grid = tuple(np.geomspace(cc.s_min, cc.s_max, cc.s_count))
    fields = list(default_test_family(sub))
    cert = sign_condition_report(scen.weight, sub)
    wk_included = bool(cert.all_passed)
    if wk_included:
        traj = solve(EvolutionProblem(scen.grid, scen.p,
                                      np.zeros(scen.grid.shape[:-1], complex),
                                      f=scen.f_true, R=scen.R))
        cut = cutoff_with_derivatives(scen.weight, scen.grid)
        for k in (1, 2):
            w, _ = build_w_k(traj, cut, k)
            fields.append(w.restrict(sub, slices, f"w{k}"))
    p_sub = np.asarray(scen.p)[slices[:-1]]
    coeffs = OperatorCoefficients(p=p_sub,
                                  a0=-np.broadcast_to(p_sub[..., None], sub.shape))
    written = []
    for gam in cfg.carleman.gamma_list:
        params = dataclasses.replace(scen.weight, gamma=float(gam))
        for fld in fields:
            rep = sweep_s(fld, params, s_grid, coeffs)
            rows = [(s, a, b, c, r) for s, a, b, c, r in
                    zip(rep.s_values, rep.lhs, rep.rhs_interior,
                        rep.rhs_boundary, rep.ratios)]
            name = f"carleman_sweep_g{_gamma_tag(gam)}_{fld.label}.csv"
            _write_csv(out_dir / name,
                       ["s", "lhs", "rhs_interior", "rhs_boundary", "ratio"],
                       rows)
            written.append(name)
    return {"files": written, "w_fields_included": wk_included}


def _cmd_inverse(cfg, out_dir, seed_override=None):
    scen = _cli_scenario(cfg)
    ic = cfg.inverse
    seed = ic.seed if seed_override is None else seed_override
    res = stability_experiment(scen, ic.amplitudes, noise=ic.noise, seed=seed)
    rows = []
    for r in res.records:
        passed = r.f_norm <= res.C_fit * r.d**res.theta_fit * (1 + 1e-12)
        rows.append((r.amplitude, r.d, r.f_norm, r.M, res.theta_fit,
                     res.C_fit, r.bound_value, passed))
    header = ["amplitude", "d", "f_norm", "M", "theta_fit", "C_fit", "bound",
              "passed"]
    if cfg.output.format == "json":
        _dump_json(out_dir / "inverse_stability.json",
                   [dict(zip(header, row)) for row in rows])
    else:
        _write_csv(out_dir / "inverse_stability.csv", header, rows)
    from uhslab.inverse import solve_scenario

    traj = solve_scenario(scen, 1.0)
    rec = reconstruct_f(traj, scen.R, scen.r0)
    g = scen.grid
    recon_rows = []
    for ix in range(g.nx):
        for iy in range(g.ny):
            ft = float(np.real(scen.f_true[ix, iy]))
            fr = float(rec.f[ix, iy])
            recon_rows.append((g.coords[0][ix], g.coords[1][iy], ft, fr,
                               abs(fr - ft)))
    _write_csv(out_dir / "recon_error.csv",
               ["x", "y", "f_true", "f_rec", "abs_error"], recon_rows)
    return {"theta_fit": res.theta_fit, "C_fit": res.C_fit,
            "imag_diag": rec.imag_l2}


def _cmd_convergence(cfg, out_dir):
    gc = cfg.grid
    rows = []
    for level in range(3):
        factor = 2**level
        grid = GridSpec(1, 1, (gc.x_min,), (gc.x_max,), gc.L, gc.T,
                        (gc.nx - 1) * factor + 1, (gc.ny - 1) * factor + 1,
                        (gc.nt - 1) * factor + 1)
        err = _manufactured_error(grid)
        rows.append((level, grid.spacings[0], grid.dt, err))
    _write_csv(out_dir / "convergence.csv", ["level", "h", "dt", "error"], rows)
    orders = [math.log2(rows[i][3] / rows[i + 1][3]) for i in range(len(rows) - 1)]
    return {"orders": orders}


def _manufactured_error(grid):
    """Space-time L2 error against sin(pi xh) cos(pi y/2L) e^{-it}."""
    x = grid.coords[0][:, None]
    y = grid.coords[1][None, :]
    t = grid.coords[2]
    L = grid.L
    xh = (x - grid.x_min[0]) / (grid.x_max[0] - grid.x_min[0])
    kx = np.pi / (grid.x_max[0] - grid.x_min[0])
    p = 0.4 * np.sin(np.pi * xh) * np.cos(np.pi * y / (2 * L)) * np.ones(grid.shape[:-1])
    shape = np.sin(np.pi * xh) * np.cos(np.pi * y / (2 * L))
    coef = 1.0 - (np.pi / (2 * L)) ** 2 + kx**2 - p
    R = np.broadcast_to(np.exp(-1j * t), grid.shape).astype(complex)
    prob = EvolutionProblem(grid, p, shape.astype(complex), f=coef * shape, R=R)
    traj = solve(prob)
    exact = shape[..., None] * np.exp(-1j * t)[None, None, :]
    return math.sqrt(integrate(np.abs(traj.u.values - exact) ** 2, grid))


def main(argv=None):
    parser = argparse.ArgumentParser(prog="uhslab", description=__doc__)
    parser.add_argument("subcommand", choices=_SUBCOMMANDS)
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=None)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    started = datetime.now(timezone.utc).isoformat()
    t0 = time.monotonic()
    try:
        cfg = parse_config(args.config)
        out_dir = Path(args.out or cfg.output.directory)
        out_dir.mkdir(parents=True, exist_ok=True)
        if cfg.output.format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {cfg.output.format!r}")
    except (ConfigError, ValueError, OSError) as exc:
        print(f"uhslab: validation error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.subcommand == "forward":
            summary = _cmd_forward(cfg, out_dir)
        elif args.subcommand == "verify-weights":
            summary = _cmd_verify_weights(cfg, out_dir)
        elif args.subcommand == "carleman-sweep":
            summary = _cmd_carleman(cfg, out_dir)
        elif args.subcommand == "inverse-stability":
            summary = _cmd_inverse(cfg, out_dir, seed_override=args.seed)
        else:
            summary = _cmd_convergence(cfg, out_dir)
    except ConfigError as exc:
        print(f"uhslab: validation error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # invalid parameter combinations surface as validation failures;
        # solver breakdowns surface as RuntimeError below
        print(f"uhslab: validation error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ArithmeticError) as exc:
        print(f"uhslab: numerical failure: {exc}", file=sys.stderr)
        return 3

    _manifest(out_dir, cfg, args.subcommand, started, time.monotonic() - t0)
    print(json.dumps({"subcommand": args.subcommand, **summary},
                     sort_keys=True, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
