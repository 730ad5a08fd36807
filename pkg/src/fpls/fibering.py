"""Fibering maps t -> I(tz) and projection of rays onto N+ and N-.

Along a ray, tz lies on the Nehari manifold iff m(t) = B where
m(t) = t^(p-q) A - 2 t^(alpha+beta-q) C and A, B, C are the pieces of the
energy at z. When C > 0, m rises to its maximum at t_max and then falls to
-inf, so m = B has a root on the rising branch (N+) when 0 < B < m(t_max)
and always one on the falling branch (N-).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional


from .functional import EnergyBreakdown, ProblemParams, StatePair, WeightSet, combine, energy
from .kernel import KernelTable

TOL_ROOT = 1e-10
TOL_MANIFOLD = 1e-8
TOL_ZERO = 1e-10
MAX_BRACKET = 200

NPLUS, NZERO, NMINUS, OFF = "Nplus", "Nzero", "Nminus", "NotOnManifold"


class BranchUnavailable(ValueError):
    """The ray through z does not meet the requested part of the Nehari manifold."""


@dataclass(frozen=True)
class FiberRoots:
    """Roots of m(t) = B. ``kind`` is "none", "plus", "minus" or "two"."""

    kind: str
    t_plus: Optional[float] = None
    t_minus: Optional[float] = None
    note: str = ""

    def get(self, branch: str) -> Optional[float]:
        return self.t_plus if branch == "plus" else self.t_minus


@dataclass(frozen=True)
class FiberingReport:
    A: float
    B: float
    C: float
    t_max: Optional[float]
    m_at_tmax: Optional[float]
    roots: FiberRoots
    mprime_plus: Optional[float] = None
    mprime_minus: Optional[float] = None


def m_value(A: float, C: float, params: ProblemParams, t: float) -> float:
    p, q, ab = params.p, params.q, params.ab
    return t ** (p - q) * A - 2.0 * t ** (ab - q) * C


def m_prime(A: float, C: float, params: ProblemParams, t: float) -> float:
    p, q, ab = params.p, params.q, params.ab
    return (p - q) * t ** (p - q - 1) * A - 2.0 * (ab - q) * t ** (ab - q - 1) * C


def t_max_of(A: float, C: float, params: ProblemParams) -> float:
    if C <= 0:
        raise ValueError("m(t) is monotone when C <= 0; no interior maximizer")
    if A <= 0:
        raise ValueError("t_max needs A > 0")
    p, q, ab = params.p, params.q, params.ab
    return ((p - q) * A / (2.0 * (ab - q) * C)) ** (1.0 / (ab - p))


def _bisect(fn, lo: float, hi: float) -> float:
    """Geometric bisection for a sign change of fn on [lo, hi], 0 < lo < hi."""
    flo = fn(lo)
    for _ in range(MAX_BRACKET):
        mid = math.sqrt(lo * hi)
        if not lo < mid < hi:
            break
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi / lo - 1.0 < 1e-15:
            break
    return math.sqrt(lo * hi)


def _expand(fn, start: float, factor: float) -> float:
    t = start
    for _ in range(MAX_BRACKET):
        t *= factor
        if fn(t) < 0:
            return t
    raise RuntimeError("fibering root bracket not found after 200 expansions")


def solve_roots(A: float, B: float, C: float, params: ProblemParams) -> FiberRoots:
    if not A > 0:
        raise ValueError(f"fibering analysis needs A > 0, got {A}")

    def gap(t):
        return m_value(A, C, params, t) - B

    if C > 0:
        tm = t_max_of(A, C, params)
        mmax = m_value(A, C, params, tm)
        if B >= mmax:
            return FiberRoots("none", note="outside fibering regime: B >= m(t_max)")
        t_hi = _expand(gap, tm, 2.0)
        t_minus = _bisect(gap, tm, t_hi)
        if B <= 0:
            return FiberRoots("minus", t_minus=t_minus)
        t_lo = _expand(gap, tm, 0.5)
        t_plus = _bisect(gap, t_lo, tm)
        return FiberRoots("two", t_plus=t_plus, t_minus=t_minus)
    # C <= 0: m is increasing from m(0) = 0
    if B <= 0:
        return FiberRoots("none", note="B <= 0 and C <= 0: no point of the ray is on the manifold")
    t_hi = _expand(lambda t: -gap(t), 1.0, 2.0)
    t_lo = _expand(gap, t_hi, 0.5)
    return FiberRoots("plus", t_plus=_bisect(gap, t_lo, t_hi))


def fibering_report(params: ProblemParams, weights: WeightSet, kernel: KernelTable, z: StatePair) -> FiberingReport:
    e = energy(params, weights, kernel, z)
    return report_from_parts(e.A, e.B, e.C, params)


def report_from_parts(A: float, B: float, C: float, params: ProblemParams) -> FiberingReport:
    roots = solve_roots(A, B, C, params)
    tm = mm = None
    if C > 0:
        tm = t_max_of(A, C, params)
        mm = m_value(A, C, params, tm)
    mp = None if roots.t_plus is None else m_prime(A, C, params, roots.t_plus)
    mn = None if roots.t_minus is None else m_prime(A, C, params, roots.t_minus)
    return FiberingReport(A, B, C, tm, mm, roots, mp, mn)


def classify_parts(e: EnergyBreakdown, params: ProblemParams) -> str:
    scale = 1.0 + abs(e.A)
    if abs(e.A - e.B - 2.0 * e.C) > TOL_MANIFOLD * scale:
        return OFF
    phi = params.p * e.A - params.q * e.B - 2.0 * params.ab * e.C
    if phi > TOL_ZERO * scale:
        return NPLUS
    if phi < -TOL_ZERO * scale:
        return NMINUS
    return NZERO


def classify(params: ProblemParams, weights: WeightSet, kernel: KernelTable, z: StatePair) -> str:
    if z.is_zero():
        raise ValueError("classification is undefined at z = 0")
    return classify_parts(energy(params, weights, kernel, z), params)


def ray_projection(e: EnergyBreakdown, params: ProblemParams, branch: str) -> tuple[float, EnergyBreakdown]:
    """Root t of the requested branch for a ray with energy pieces ``e``, and the pieces at t z."""
    if branch not in ("plus", "minus"):
        raise ValueError(f"branch must be 'plus' or 'minus', got {branch!r}")
    if not e.A > 0:
        raise BranchUnavailable("ray through the zero state")
    roots = solve_roots(e.A, e.B, e.C, params)
    t = roots.get(branch)
    if t is None:
        raise BranchUnavailable(f"ray has no {branch} root ({roots.kind}; {roots.note or 'B, C signs'})")
    p, q, ab = params.p, params.q, params.ab
    return t, combine(params, t**p * e.A, t**q * e.B, t**ab * e.C)


def project(params: ProblemParams, weights: WeightSet, kernel: KernelTable, z: StatePair, branch: str) -> StatePair:
    if z.is_zero():
        raise ValueError("cannot project the zero state")
    t, _ = ray_projection(energy(params, weights, kernel, z), params, branch)
    out = z.scaled(t)
    got = classify(params, weights, kernel, out)
    want = NPLUS if branch == "plus" else NMINUS
    if got != want:
        raise BranchUnavailable(f"projected state classified {got}, expected {want}")
    return out
