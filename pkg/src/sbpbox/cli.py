"""Command-line driver: config in, run directory with manifest out.

Exit codes: 0 success, 2 not converged or failed checks, 3 infeasible
charge level, 4 configuration error.  Sweeps continue past per-point
failures and record them in the summary table; a parallel flag runs
independent sweep points in threads with isolated output directories.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import RunConfig, emit_config, parse_config
from .energy import Multipliers
from .exceptions import (
    ConfigError,
    DegenerateConstraints,
    LocalizationFailure,
    SbpError,
)
from .greens import factorization_residual, radial_energy, bp_kernel, coulomb, yukawa
from .grid import norm_h10, norm_l2
from .manifold import FEASIBLE, validate_alpha
from .reduction import NAVIER, NEUMANN
from .runio import (
    load_field,
    output_root,
    prepare_run_dir,
    read_json,
    read_manifest,
    save_field,
    verify_manifest,
    write_json,
    write_manifest,
    write_trace,
)
from .solver import (
    Solution,
    excited_states,
    gn_probe,
    minimize_navier,
    minimize_neumann,
    verify_solution,
)

EXIT_OK = 0
EXIT_NOT_CONVERGED = 2
EXIT_INFEASIBLE = 3
EXIT_CONFIG = 4


def _load_config(path: str, command: str) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    cfg = parse_config(text)
    cfg.command = command
    return cfg


def _report_rows(report) -> list:
    return [{"name": c.name, "value": c.value, "tol": c.tol, "passed": c.passed}
            for c in report.checks]


def _save_solution(run_dir: Path, sol: Solution, report) -> None:
    save_field(run_dir, "u", sol.u)
    save_field(run_dir, "phi", sol.phi)
    if sol.phi_reduced is not sol.phi:
        save_field(run_dir, "phi_reduced", sol.phi_reduced)
    write_trace(run_dir / "trace.csv", sol.trace)
    write_json(run_dir / "solution.json", {
        "case": sol.case,
        "J": sol.J,
        "omega": sol.omega,
        "mu": sol.mu,
        "omega_tilde": sol.multipliers.omega_tilde,
        "grad_norm": sol.grad_norm,
        "residual_sphere": sol.residual_sphere,
        "residual_charge": sol.residual_charge,
        "status": sol.status,
        "converged": sol.converged,
        "restart_values": list(sol.restart_values),
        "has_reduced_phi": sol.phi_reduced is not sol.phi,
        "checks": _report_rows(report),
    })


def _solve_command(cfg: RunConfig, command: str, out_dir: str | None) -> int:
    t0 = time.perf_counter()
    spec = cfg.make_problem_spec()
    case = NAVIER if command == "solve-navier" else NEUMANN
    if spec.case != case:
        raise ConfigError(
            f"[problem] case '{spec.case}' does not match the {command} command")
    opts = cfg.make_solver_options()
    if case == NEUMANN:
        report = validate_alpha(spec.q, spec.alpha, spec.grid)
        if report.verdict != FEASIBLE:
            print(f"charge level alpha={spec.alpha} is {report.verdict}: "
                  f"the admissible range is [{report.q_min:.6g}, {report.q_max:.6g}]",
                  file=sys.stderr)
            return EXIT_INFEASIBLE
        sol = minimize_neumann(spec, opts)
    else:
        sol = minimize_navier(spec, opts)
    vreport = verify_solution(sol, spec)
    run_dir = prepare_run_dir(output_root(out_dir or cfg.output["dir"]), command)
    _save_solution(run_dir, sol, vreport)
    write_manifest(run_dir, command, emit_config(cfg), opts.seed,
                   time.perf_counter() - t0, _report_rows(vreport))
    print(f"{command}: {sol.status}, J={sol.J:.12g}, omega={sol.omega:.12g}"
          + (f", mu={sol.mu:.12g}" if sol.mu is not None else "")
          + f", grad_norm={sol.grad_norm:.3e}")
    print(f"artifacts: {run_dir}")
    if not sol.converged:
        return EXIT_NOT_CONVERGED
    if not vreport.passed:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _excited_command(cfg: RunConfig, out_dir: str | None) -> int:
    t0 = time.perf_counter()
    spec = cfg.make_problem_spec()
    opts = cfg.make_solver_options()
    classes = list(cfg.excited["classes"])
    sols = excited_states(spec, opts, classes)
    run_dir = prepare_run_dir(output_root(out_dir or cfg.output["dir"]), "excited")
    rows = []
    labels = ["ground"] + [f"odd-axis-{ax}" for ax in classes]
    for label, sol in zip(labels, sols):
        sub = prepare_run_dir(run_dir, label)
        _save_solution(sub, sol, verify_solution(sol, spec))
        rows.append({"class": label, "J": sol.J, "omega": sol.omega,
                     "status": sol.status})
    write_json(run_dir / "summary.json", {"rows": rows})
    write_manifest(run_dir, "excited", emit_config(cfg), opts.seed,
                   time.perf_counter() - t0, rows)
    for r in rows:
        print(f"{r['class']}: J={r['J']:.12g} omega={r['omega']:.12g} ({r['status']})")
    if any(r["status"] != "converged" for r in rows):
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _greens_command(cfg: RunConfig, out_dir: str | None) -> int:
    t0 = time.perf_counter()
    g = cfg.greens
    a, eps, r_max, points = g["a"], g["eps"], g["r_max"], g["points"]
    radii = np.geomspace(max(eps, 1e-8 * a), r_max, points)
    run_dir = prepare_run_dir(output_root(out_dir or cfg.output["dir"]), "greens")
    with open(run_dir / "kernels.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "coulomb", "yukawa", "bp"])
        for r in radii:
            w.writerow([repr(float(r)), repr(float(coulomb(r))),
                        repr(float(yukawa(r, a))), repr(float(bp_kernel(r, a)))])
    energies = {k: radial_energy(k, a=a, eps=eps, r_max=r_max)
                for k in ("coulomb", "yukawa", "bp")}
    payload = {
        "a": a, "eps": eps, "r_max": r_max,
        "energies": energies,
        "bp_zero_limit": 1.0 / (8.0 * np.pi * a),
        "factorization_residual": factorization_residual(a, r=max(2.0 * a, 10 * eps)),
    }
    write_json(run_dir / "energies.json", payload)
    write_manifest(run_dir, "greens", emit_config(cfg), 0,
                   time.perf_counter() - t0, [])
    print(f"greens: energies {', '.join(f'{k}={v:.8g}' for k, v in energies.items())}")
    print(f"artifacts: {run_dir}")
    return EXIT_OK


def _gn_probe_command(cfg: RunConfig, out_dir: str | None) -> int:
    t0 = time.perf_counter()
    grid = cfg.make_grid()
    rep = gn_probe(grid, cfg.problem["p"], cfg.probe["r"],
                   samples=cfg.probe["samples"], seed=cfg.probe["seed"])
    run_dir = prepare_run_dir(output_root(out_dir or cfg.output["dir"]), "gn-probe")
    write_json(run_dir / "probe.json", {
        "p": rep.p, "r": rep.r, "n": rep.n, "samples": rep.samples,
        "max_ratio": rep.max_ratio, "mean_ratio": rep.mean_ratio,
        "scale_defect": rep.scale_defect,
    })
    write_manifest(run_dir, "gn-probe", emit_config(cfg), cfg.probe["seed"],
                   time.perf_counter() - t0, [])
    print(f"gn-probe: n={rep.n} max_ratio={rep.max_ratio:.8g} "
          f"scale_defect={rep.scale_defect:.3e}")
    return EXIT_OK


def _verify_command(run_path: str) -> int:
    directory = Path(run_path)
    bad = verify_manifest(directory)
    manifest = read_manifest(directory)
    cfg = parse_config(manifest["config"])
    spec = cfg.make_problem_spec()
    info = read_json(directory / "solution.json")
    u = load_field(directory, "u", spec.grid)
    phi = load_field(directory, "phi", spec.grid)
    phi_reduced = load_field(directory, "phi_reduced", spec.grid) \
        if info.get("has_reduced_phi") else phi
    sol = Solution(
        case=info["case"], u=u, phi=phi, phi_reduced=phi_reduced,
        multipliers=Multipliers(omega=info["omega"], mu=info["mu"],
                                omega_tilde=info.get("omega_tilde")),
        J=info["J"], grad_norm=info["grad_norm"],
        residual_sphere=info["residual_sphere"],
        residual_charge=info["residual_charge"],
        trace=(), converged=info["converged"], status=info["status"])
    report = verify_solution(sol, spec)
    print(report.summary())
    for name in bad:
        print(f"[FAIL] digest-mismatch: {name}")
    if bad or not report.passed:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _sweep_point(cfg: RunConfig, run_dir: Path, axis: str, value) -> dict:
    label = f"{axis}-{value}"
    row = {"axis": axis, "value": value, "status": "failed", "J": None,
           "omega": None, "mu": None, "norm_u_h1": None, "norm_phi": None,
           "omega_minus_mu_alpha": None}
    try:
        point = parse_config(emit_config(cfg))
        if axis == "p":
            point.problem["p"] = float(value)
        else:
            point.solver["symmetry_axis"] = int(value)
        spec = point.make_problem_spec()
        opts = point.make_solver_options()
        sol = minimize_neumann(spec, opts) if spec.case == NEUMANN \
            else minimize_navier(spec, opts)
        sub = prepare_run_dir(run_dir, label)
        _save_solution(sub, sol, verify_solution(sol, spec))
        row.update({
            "status": sol.status, "J": sol.J, "omega": sol.omega, "mu": sol.mu,
            "norm_u_h1": float(np.hypot(norm_h10(sol.u), norm_l2(sol.u))),
            "norm_phi": norm_l2(sol.phi_reduced),
        })
        if sol.mu is not None:
            row["omega_minus_mu_alpha"] = sol.omega - sol.mu * spec.alpha
    except SbpError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _sweep_command(cfg: RunConfig, out_dir: str | None, parallel: int | None) -> int:
    t0 = time.perf_counter()
    axis = cfg.sweep["axis"]
    values = cfg.sweep["values"] if axis == "p" else cfg.sweep["classes"]
    if not values:
        raise ConfigError(f"[sweep] empty value list for axis '{axis}'")
    workers = parallel if parallel is not None else cfg.sweep["parallel"]
    if workers < 1:
        raise ConfigError("[sweep] parallel worker count must be at least 1")
    run_dir = prepare_run_dir(output_root(out_dir or cfg.output["dir"]), "sweep")
    if workers == 1:
        rows = [_sweep_point(cfg, run_dir, axis, v) for v in values]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda v: _sweep_point(cfg, run_dir, axis, v), values))
    rows.sort(key=lambda r: r["value"])
    with open(run_dir / "sweep.csv", "w", newline="") as fh:
        names = ["axis", "value", "status", "J", "omega", "mu",
                 "norm_u_h1", "norm_phi", "omega_minus_mu_alpha"]
        w = csv.DictWriter(fh, fieldnames=names, extrasaction="ignore")
        w.writeheader()
        w.writerows(rows)
    write_manifest(run_dir, "sweep", emit_config(cfg), cfg.solver["seed"],
                   time.perf_counter() - t0, rows)
    for r in rows:
        print(f"{r['axis']}={r['value']}: {r['status']}"
              + (f" J={r['J']:.10g} omega={r['omega']:.10g}" if r["J"] is not None else "")
              + (f" ({r['error']})" if "error" in r else ""))
    if any(r["status"] != "converged" for r in rows):
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbpbox",
        description="Spectral solvers and checks for the coupled fourth-order "
                    "electrostatic system on a box")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, needs_config=True):
        p = sub.add_parser(name, help=help_text)
        if needs_config:
            p.add_argument("config", help="path to a TOML run configuration")
            p.add_argument("--output", default=None,
                           help="output root directory (overrides [output] dir)")
        return p

    add("greens", "tabulate radial kernels and their truncated energies")
    add("solve-navier", "ground state with sphere-vanishing boundary conditions")
    add("solve-neumann", "ground state with natural flux boundary conditions")
    add("excited", "ground state plus odd-symmetry-class critical points")
    add("gn-probe", "empirical interpolation-inequality ratios")
    p_sweep = add("sweep", "run a family of solves over p values or symmetry classes")
    p_sweep.add_argument("--parallel", type=int, default=None,
                         help="concurrent sweep points (default from [sweep])")
    p_ver = sub.add_parser("verify", help="recheck a stored run directory")
    p_ver.add_argument("run_dir", help="path to a run directory with manifest.json")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return _verify_command(args.run_dir)
        cfg = _load_config(args.config, args.command)
        if args.command == "greens":
            return _greens_command(cfg, args.output)
        if args.command == "solve-navier":
            return _solve_command(cfg, "solve-navier", args.output)
        if args.command == "solve-neumann":
            return _solve_command(cfg, "solve-neumann", args.output)
        if args.command == "excited":
            return _excited_command(cfg, args.output)
        if args.command == "gn-probe":
            return _gn_probe_command(cfg, args.output)
        if args.command == "sweep":
            return _sweep_command(cfg, args.output, args.parallel)
        raise ConfigError(f"unhandled command {args.command!r}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LocalizationFailure as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except DegenerateConstraints as exc:
        print(f"degenerate constraints: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
