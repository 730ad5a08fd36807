"""Projected gradient descent for the N+ and N- minimizers.

Each iterate is a gradient step followed by the fibering retraction onto the
requested branch. On the manifold the radial part of grad I vanishes, so the
retracted functional J(w) = I(t(w) w) has gradient grad I there and plain
steps along -grad I are descent steps for J.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._parallel import pmap
from .constants import ThresholdReport
from .fibering import NMINUS, NPLUS, TOL_MANIFOLD, BranchUnavailable, classify_parts, ray_projection
from .functional import EnergyBreakdown, ProblemParams, StatePair, WeightSet, energy, gradient_parts
from .kernel import KernelTable, pair_norm_p

WATCHDOG_FACTOR = 1e3


class MembershipError(ValueError):
    """(lambda, mu) lies outside the parameter region the branch requires."""


class SolverError(RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class SolverConfig:
    branch: str = "both"
    max_outer: int = 5000
    step0: float = 1.0
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    tol_grad: float = 1e-7
    tol_energy: float = 1e-12
    n_starts: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.branch not in ("plus", "minus", "both"):
            raise ValueError(f"branch must be plus, minus or both, got {self.branch!r}")
        for name in ("step0", "armijo_c", "tol_grad", "tol_energy"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if self.max_outer < 1 or self.n_starts < 1:
            raise ValueError("max_outer and n_starts must be at least 1")


@dataclass
class RunResult:
    start: int
    state: StatePair
    breakdown: EnergyBreakdown
    converged: bool
    iterations: int
    status: str
    tangent_residual: float
    energies: list = field(default_factory=list, repr=False)
    norms_p: list = field(default_factory=list, repr=False)


@dataclass
class SolveReport:
    branch: str
    state: StatePair
    energy_breakdown: EnergyBreakdown
    nehari_residual: float
    grad_residual: float
    grad_scale: float
    classification: str
    iterations: int
    converged: bool
    start_index: int
    thresholds: ThresholdReport
    c0_bound: Optional[float] = None
    norm_lower_bound: Optional[float] = None
    distinctness: Optional[float] = None
    runs: list = field(default_factory=list, repr=False)

    @property
    def norm(self) -> float:
        return self.energy_breakdown.A ** (1.0 / self._p)

    _p: float = field(default=2.0, repr=False)

    def as_dict(self) -> dict:
        return {
            "branch": self.branch,
            "converged": self.converged,
            "classification": self.classification,
            "energy": self.energy_breakdown.as_dict(),
            "norm": self.norm,
            "nehari_residual": self.nehari_residual,
            "grad_residual": self.grad_residual,
            "grad_scale": self.grad_scale,
            "iterations": self.iterations,
            "start_index": self.start_index,
            "c0_bound": self.c0_bound,
            "norm_lower_bound": self.norm_lower_bound,
            "distinctness": self.distinctness,
            "thresholds": self.thresholds.as_dict(),
            "runs": [
                {
                    "start": r.start,
                    "status": r.status,
                    "converged": r.converged,
                    "iterations": r.iterations,
                    "I": None if r.breakdown is None else r.breakdown.I,
                }
                for r in self.runs
            ],
        }


def _K(params: ProblemParams, S_d: float) -> float:
    p, q, ab = params.p, params.q, params.ab
    return (p - q) / (2.0 * (ab - q)) * S_d ** (ab / p)


def c0_lower_bound(params: ProblemParams, S_d: float, lhs: float) -> float:
    """Explicit lower bound for I on N-; positive exactly when lhs < D_psi."""
    p, q, ab = params.p, params.q, params.ab
    K = _K(params, S_d)
    first = -(ab - q) / (q * ab) * lhs ** ((p - q) / p) * S_d ** (-q / p)
    second = (ab - p) / (p * ab) * K ** ((p - q) / (ab - p))
    return (first + second) * K ** (q / (ab - p))


def minus_norm_lower_bound(params: ProblemParams, S_d: float) -> float:
    """Every state of N- has ||z|| above this radius."""
    return _K(params, S_d) ** (1.0 / (params.ab - params.p))


def coercivity_floor(params: ProblemParams, S_d: float, lhs: float, A: float) -> float:
    """Lower bound for I on the Nehari manifold at a state with ||z||^p = A."""
    p, q, ab = params.p, params.q, params.ab
    a = (ab - p) / (p * ab)
    b = (ab - q) / (q * ab) * lhs ** ((p - q) / p) * S_d ** (-q / p)
    return a * A - b * A ** (q / p)


def coercivity_radius(params: ProblemParams, S_d: float, lhs: float, level: float) -> float:
    """Largest ||z|| on the manifold compatible with I(z) <= level."""
    lo, hi = 0.0, 1.0
    while coercivity_floor(params, S_d, lhs, hi) <= level:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if coercivity_floor(params, S_d, lhs, mid) <= level:
            lo = mid
        else:
            hi = mid
    return hi ** (1.0 / params.p)


def weak_residual(params: ProblemParams, weights: WeightSet, kernel: KernelTable, z: StatePair) -> float:
    """Largest residual of the weak formulation over nodal test pairs (sup-norm of grad I)."""
    ga, gb, gc = gradient_parts(params, weights, kernel, z)
    return float(np.max(np.abs(ga - gb - gc)))


def initial_states(n: int, cfg: SolverConfig) -> list[StatePair]:
    """Start 0 perturbs the constant pair upward; the others are random-sign nodal pairs."""
    out = []
    for k in range(cfg.n_starts):
        rng = np.random.default_rng([cfg.seed, k])
        if k == 0:
            out.append(StatePair(1.0 + 0.5 * rng.uniform(size=n), 1.0 + 0.5 * rng.uniform(size=n)))
        else:
            out.append(StatePair(rng.standard_normal(n), rng.standard_normal(n)))
    return out


def _descend(params, weights, kernel, cfg: SolverConfig, branch: str, z0: StatePair, start: int, thr) -> RunResult:
    try:
        t, e = ray_projection(energy(params, weights, kernel, z0), params, branch)
    except BranchUnavailable as exc:
        return RunResult(start, None, None, False, 0, f"unusable start: {exc}", math.inf)
    x = t * z0.flat
    n = kernel.num_nodes
    radius = WATCHDOG_FACTOR * coercivity_radius(params, thr.S_d, thr.lhs, e.I)

    energies, norms = [e.I], [e.A]
    step = cfg.step0
    prev_x = prev_g = None
    status, converged, tang_sup = "iteration cap", False, math.inf
    k = 0
    while k < cfg.max_outer:
        z = StatePair(x[:n], x[n:])
        ga, gb, gc = gradient_parts(params, weights, kernel, z)
        g = ga - gb - gc
        scale = max(np.max(np.abs(ga)), np.max(np.abs(gb)), np.max(np.abs(gc)))
        tang = g - (float(g @ x) / float(x @ x)) * x
        tang_sup = float(np.max(np.abs(tang)))
        small_grad = bool(tang_sup <= cfg.tol_grad * scale)
        if small_grad and len(energies) > 1:
            rel_drop = (energies[-2] - energies[-1]) / max(abs(energies[-1]), 1e-300)
            if rel_drop < cfg.tol_energy:
                status, converged = "converged", True
                break
        if prev_g is not None:
            s, y = x - prev_x, g - prev_g
            sy = float(s @ y)
            if sy > 0:
                step = float(s @ s) / sy
        gg = float(g @ g)
        accepted = None
        while step * np.max(np.abs(g)) > 1e-16 * np.max(np.abs(x)):
            try:
                tt, e_new = ray_projection(
                    energy(params, weights, kernel, StatePair.from_flat(x - step * g)), params, branch
                )
            except BranchUnavailable:
                step *= cfg.backtrack
                continue
            if e_new.I <= e.I - cfg.armijo_c * step * gg:
                accepted = (tt * (x - step * g), e_new)
                break
            step *= cfg.backtrack
        k += 1
        if accepted is None:
            # no representable decrease left along -grad
            status = "converged" if small_grad else "stalled"
            converged = small_grad
            break
        prev_x, prev_g = x, g
        x, e = accepted
        energies.append(e.I)
        norms.append(e.A)
        if e.A ** (1.0 / params.p) > radius:
            status = "watchdog: iterate norm exceeded coercivity bound"
            break
    z = StatePair(x[:n], x[n:])
    return RunResult(start, z, e, converged, k, status, tang_sup, energies, norms)


def check_membership(thr: ThresholdReport, branch: str, force: bool) -> None:
    if force:
        return
    if branch == "plus" and not thr.in_theta:
        raise MembershipError(f"(lambda, mu) not in Θ: lhs={thr.lhs:.6g} >= C_theta={thr.C_theta:.6g}")
    if branch == "minus" and not thr.in_psi:
        raise MembershipError(f"(lambda, mu) not in Ψ: lhs={thr.lhs:.6g} >= D_psi={thr.D_psi:.6g}")


def minimize_branch(
    params: ProblemParams,
    weights: WeightSet,
    kernel: KernelTable,
    cfg: SolverConfig,
    branch: str,
    thresholds: ThresholdReport,
    force: bool = False,
) -> SolveReport:
    if branch not in ("plus", "minus"):
        raise ValueError(f"branch must be plus or minus, got {branch!r}")
    check_membership(thresholds, branch, force)
    starts = initial_states(kernel.num_nodes, cfg)
    runs = pmap(
        lambda item: _descend(params, weights, kernel, cfg, branch, item[1], item[0], thresholds),
        list(enumerate(starts)),
    )
    usable = [r for r in runs if r.state is not None]
    if not usable:
        raise SolverError(f"no start admits a {branch} projection")
    good = [r for r in usable if r.converged]
    pool = good or usable
    best = min(pool, key=lambda r: (r.breakdown.I, r.start))

    e = energy(params, weights, kernel, best.state)
    report = SolveReport(
        branch=branch,
        state=best.state,
        energy_breakdown=e,
        nehari_residual=abs(e.A - e.B - 2.0 * e.C),
        grad_residual=weak_residual(params, weights, kernel, best.state),
        grad_scale=float(max(np.max(np.abs(part)) for part in gradient_parts(params, weights, kernel, best.state))),
        classification=classify_parts(e, params),
        iterations=best.iterations,
        converged=best.converged,
        start_index=best.start,
        thresholds=thresholds,
        c0_bound=c0_lower_bound(params, thresholds.S_d, thresholds.lhs) if branch == "minus" else None,
        norm_lower_bound=minus_norm_lower_bound(params, thresholds.S_d) if branch == "minus" else None,
        runs=runs,
        _p=params.p,
    )
    if not good:
        raise SolverError(f"{branch} branch: no start converged ({best.status})", report)
    want = NPLUS if branch == "plus" else NMINUS
    if report.classification != want or report.nehari_residual > TOL_MANIFOLD * (1 + e.A):
        raise SolverError(f"{branch} branch ended off its manifold part ({report.classification})", report)
    return report


def distinctness(kernel: KernelTable, z1: StatePair, z2: StatePair, p: float) -> float:
    diff = StatePair(z1.u - z2.u, z1.v - z2.v)
    return pair_norm_p(kernel, diff) ** (1.0 / p)


def solve(params, weights, kernel, cfg: SolverConfig, thresholds: ThresholdReport, force: bool = False) -> dict:
    """Run the branches named by ``cfg.branch``; returns {branch: SolveReport}."""
    branches = ["plus", "minus"] if cfg.branch == "both" else [cfg.branch]
    out = {b: minimize_branch(params, weights, kernel, cfg, b, thresholds, force) for b in branches}
    if len(out) == 2:
        d = distinctness(kernel, out["plus"].state, out["minus"].state, params.p)
        for rep in out.values():
            rep.distinctness = d
    return out
