"""Command-line entry point: ``fpls {constants,solve,sweep,project,check} CONFIG ...``.

Exit codes: 0 success, 2 invalid input or membership refusal, 3 solver
non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._parallel import pmap
from .config import FORMAT_VERSION, ConfigError, RunConfig, build_weights, load_config
from .constants import ThresholdReport, estimate_sobolev, membership, scale_parameters, threshold_C, threshold_D
from .fibering import BranchUnavailable, classify_parts, fibering_report, ray_projection
from .functional import ParameterError, ProblemParams, StatePair, WeightSet, energy
from .grid import GridSpec, read_grid_function, write_grid_function
from .kernel import KernelTable, assemble_kernel
from .solver import MembershipError, SolverError, check_membership, distinctness, minimize_branch, weak_residual

log = logging.getLogger("fpls")

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED = 0, 2, 3


@dataclass
class Setup:
    cfg: RunConfig
    grid: GridSpec
    kernel: KernelTable
    params: ProblemParams
    weights: WeightSet
    S_d: float


def prepare(cfg: RunConfig) -> Setup:
    """Assemble the kernel, estimate S_d and resolve (lambda, mu) for a validated config."""
    grid = cfg.grid()
    params = cfg.problem_params()
    params.validate(grid.dim)
    kernel = assemble_kernel(grid, params.frac)
    weights = build_weights(grid, cfg.weights, cfg.base_dir)
    S_d = estimate_sobolev(kernel, params, n_starts=cfg.sobolev_starts, seed=cfg.sobolev_seed).value
    if cfg.scale_to is not None:
        which, fraction = cfg.scale_to
        limit = threshold_D(params, S_d) if which == "D_psi" else threshold_C(params, S_d)
        params = scale_parameters(params, weights, grid, fraction * limit)
    return Setup(cfg, grid, kernel, params, weights, S_d)


def thresholds_for(setup: Setup, params: ProblemParams | None = None) -> ThresholdReport:
    return membership(params or setup.params, setup.weights, setup.S_d, setup.grid)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def _report_doc(setup: Setup, body: dict) -> dict:
    return {
        "format": FORMAT_VERSION,
        "config": setup.cfg.to_dict(),
        "resolved": {"lambda": setup.params.lam, "mu": setup.params.mu},
        **body,
    }


def cmd_constants(setup: Setup) -> dict:
    thr = thresholds_for(setup)
    doc = _report_doc(setup, {"thresholds": thr.as_dict()})
    out = setup.cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    (out / "constants.json").write_text(_dump(doc))
    return doc


def cmd_solve(setup: Setup, branch: str, force: bool = False):
    """Solve the requested branches and write ``<output>/<branch>/{report.json,u.dat,v.dat}``.

    Reports of branches that failed to converge are still written (with
    ``converged: false``) before the SolverError propagates.
    """
    thr = thresholds_for(setup)
    branches = ["plus", "minus"] if branch == "both" else [branch]
    for b in branches:
        check_membership(thr, b, force)
    reports, failure = {}, None
    for b in branches:
        try:
            reports[b] = minimize_branch(setup.params, setup.weights, setup.kernel, setup.cfg.solver, b, thr, force)
        except SolverError as exc:
            failure = failure or exc
            if exc.report is not None:
                reports[b] = exc.report
    if "plus" in reports and "minus" in reports:
        d = distinctness(setup.kernel, reports["plus"].state, reports["minus"].state, setup.params.p)
        for rep in reports.values():
            rep.distinctness = d
    out = setup.cfg.output_dir()
    for name, rep in reports.items():
        d = out / name
        d.mkdir(parents=True, exist_ok=True)
        (d / "report.json").write_text(_dump(_report_doc(setup, rep.as_dict())))
        write_grid_function(d / "u.dat", setup.grid, rep.state.u)
        write_grid_function(d / "v.dat", setup.grid, rep.state.v)
    if failure is not None:
        raise failure
    return reports


def parse_range(text: str) -> np.ndarray:
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError as exc:
        raise ConfigError([f"range {text!r}: expected a:b:n"]) from exc
    if n < 1:
        raise ConfigError([f"range {text!r}: n must be at least 1"])
    return np.linspace(a, b, n)


SWEEP_FIELDS = ["lambda", "mu", "lhs", "in_theta", "in_psi", "I_plus", "I_minus", "converged_plus", "converged_minus"]


def _sweep_cell(setup: Setup, lam: float, mu: float, force: bool) -> dict:
    row = {k: "" for k in SWEEP_FIELDS}
    row.update({"lambda": repr(float(lam)), "mu": repr(float(mu))})
    try:
        params = setup.params.with_parameters(float(lam), float(mu))
        thr = thresholds_for(setup, params)
    except ParameterError:
        row.update({"lhs": repr(0.0), "in_theta": "false", "in_psi": "false"})
        return row
    row.update(
        {"lhs": repr(thr.lhs), "in_theta": str(thr.in_theta).lower(), "in_psi": str(thr.in_psi).lower()}
    )
    for branch in ("plus", "minus"):
        allowed = force or (thr.in_theta if branch == "plus" else thr.in_psi)
        if not allowed:
            continue
        try:
            rep = minimize_branch(setup.params.with_parameters(float(lam), float(mu)), setup.weights,
                                  setup.kernel, setup.cfg.solver, branch, thr, force=True)
        except (SolverError, BranchUnavailable):
            row[f"converged_{branch}"] = "false"
            continue
        row[f"I_{branch}"] = repr(rep.energy_breakdown.I)
        row[f"converged_{branch}"] = "true"
    return row


def cmd_sweep(setup: Setup, lambdas, mus, force: bool = False) -> Path:
    cells = [(lam, mu) for lam in lambdas for mu in mus]
    rows = pmap(lambda c: _sweep_cell(setup, c[0], c[1], force), cells)
    out = setup.cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    path = out / "sweep.csv"
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return path


def load_state(paths, grid: GridSpec) -> StatePair:
    """A state is a directory holding u.dat and v.dat, or two explicit files."""
    paths = [Path(p) for p in paths]
    if len(paths) == 1 and paths[0].is_dir():
        paths = [paths[0] / "u.dat", paths[0] / "v.dat"]
    if len(paths) != 2:
        raise ConfigError(["--state: give a directory with u.dat/v.dat or two grid-function files"])
    u, v = (read_grid_function(p, grid).values for p in paths)
    return StatePair(np.array(u), np.array(v))


def cmd_check(setup: Setup, z: StatePair) -> dict:
    e = energy(setup.params, setup.weights, setup.kernel, z)
    return {
        "energy": e.as_dict(),
        "nehari_pairing": e.A - e.B - 2.0 * e.C,
        "classification": classify_parts(e, setup.params) if not z.is_zero() else "zero",
        "weak_residual": weak_residual(setup.params, setup.weights, setup.kernel, z),
    }


def cmd_project(setup: Setup, z: StatePair, branch: str) -> dict:
    fr = fibering_report(setup.params, setup.weights, setup.kernel, z)
    t, e = ray_projection(energy(setup.params, setup.weights, setup.kernel, z), setup.params, branch)
    zp = z.scaled(t)
    out = setup.cfg.output_dir() / f"projected_{branch}"
    out.mkdir(parents=True, exist_ok=True)
    write_grid_function(out / "u.dat", setup.grid, zp.u)
    write_grid_function(out / "v.dat", setup.grid, zp.v)
    return {
        "t": t,
        "t_max": fr.t_max,
        "roots": {"kind": fr.roots.kind, "t_plus": fr.roots.t_plus, "t_minus": fr.roots.t_minus},
        "projected": cmd_check(setup, zp),
        "written_to": str(out),
    }


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fpls", description="Two-branch Nehari solver for discretized fractional p-Laplacian systems.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="discrete Sobolev constant and Θ/Ψ membership")
    p.add_argument("config")

    p = sub.add_parser("solve", help="compute the N+ and/or N- minimizers")
    p.add_argument("config")
    p.add_argument("--branch", choices=["plus", "minus", "both"], default="both")
    p.add_argument("--force", action="store_true", help="skip the Θ/Ψ membership check")

    p = sub.add_parser("sweep", help="membership and branch energies over a (lambda, mu) grid")
    p.add_argument("config")
    p.add_argument("--lambda", dest="lam", required=True, metavar="A:B:N")
    p.add_argument("--mu", required=True, metavar="A:B:N")
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("project", help="project a stored state onto N+ or N-")
    p.add_argument("config")
    p.add_argument("--state", nargs="+", required=True)
    p.add_argument("--branch", choices=["plus", "minus"], required=True)

    p = sub.add_parser("check", help="energy pieces, classification and weak residual of a stored state")
    p.add_argument("config")
    p.add_argument("--state", nargs="+", required=True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        setup = prepare(load_config(args.config))
        if args.command == "constants":
            doc = cmd_constants(setup)
            sys.stdout.write(_dump(doc["thresholds"]))
        elif args.command == "solve":
            reports = cmd_solve(setup, args.branch, args.force)
            summary = {b: {"I": r.energy_breakdown.I, "classification": r.classification,
                           "distinctness": r.distinctness} for b, r in reports.items()}
            sys.stdout.write(_dump(summary))
        elif args.command == "sweep":
            path = cmd_sweep(setup, parse_range(args.lam), parse_range(args.mu), args.force)
            sys.stdout.write(f"{path}\n")
        elif args.command == "project":
            z = load_state(args.state, setup.grid)
            sys.stdout.write(_dump(cmd_project(setup, z, args.branch)))
        elif args.command == "check":
            z = load_state(args.state, setup.grid)
            sys.stdout.write(_dump(cmd_check(setup, z)))
    except (ConfigError, ParameterError, MembershipError, BranchUnavailable, FileNotFoundError) as exc:
        sys.stderr.write(f"fpls: {exc}\n")
        return EXIT_INPUT
    except SolverError as exc:
        sys.stderr.write(f"fpls: {exc}\n")
        return EXIT_NONCONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
