"""Energy functional I_{lambda,mu}, its gradient, and the Nehari pairings."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridSpec, lr_norm
from .kernel import FracParams, KernelTable, _spow, pair_norm_p, seminorm_gradient


class ParameterError(ValueError):
    """Invalid exponents, parameters or weights. ``violations`` lists every failed condition."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def parameter_violations(frac: FracParams, q, alpha, beta, lam, mu, dim: int | None = None) -> list[str]:
    """Every violated structural condition on the exponents and (lambda, mu)."""
    p, ab = frac.p, alpha + beta
    out = []
    if not 1.0 < q < p:
        out.append(f"q must satisfy 1<q<p (got q={q}, p={p})")
    if not (alpha > 1.0 and beta > 1.0):
        out.append(f"alpha, beta must satisfy alpha>1, beta>1 (got {alpha}, {beta})")
    if not ab > p:
        out.append(f"alpha+beta must satisfy p<α+β<p* (got α+β={ab}, p={p})")
    if dim is not None:
        if dim < frac.ps:
            out.append(f"need n>ps (got n={dim}, ps={frac.ps})")
        elif not ab < frac.p_star(dim):
            out.append(f"alpha+beta must satisfy p<α+β<p* (got α+β={ab}, p*={frac.p_star(dim)})")
    if lam == 0.0 and mu == 0.0:
        out.append("(lambda, mu) must differ from (0, 0)")
    return out


@dataclass(frozen=True)
class ProblemParams:
    frac: FracParams
    q: float
    alpha: float
    beta: float
    lam: float
    mu: float

    def __post_init__(self):
        bad = self.violations()
        if bad:
            raise ParameterError(bad)

    @property
    def p(self) -> float:
        return self.frac.p

    @property
    def ab(self) -> float:
        return self.alpha + self.beta

    @property
    def q_star(self) -> float:
        """Hölder conjugate exponent (alpha+beta)/(alpha+beta-q) for the weights f, g."""
        return self.ab / (self.ab - self.q)

    def violations(self, dim: int | None = None) -> list[str]:
        return parameter_violations(self.frac, self.q, self.alpha, self.beta, self.lam, self.mu, dim)

    def validate(self, dim: int) -> None:
        bad = self.violations(dim)
        if bad:
            raise ParameterError(bad)

    def with_parameters(self, lam: float, mu: float) -> "ProblemParams":
        return ProblemParams(self.frac, self.q, self.alpha, self.beta, lam, mu)


@dataclass(frozen=True)
class WeightSet:
    """Nodal samples of the weights f, g (sign-changing) and h (0 <= h, max h = 1)."""

    f: np.ndarray
    g: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        arrs = [np.array(a, dtype=float) for a in (self.f, self.g, self.h)]
        if len({a.shape for a in arrs}) != 1 or arrs[0].ndim != 1:
            raise ParameterError(["weights f, g, h must be vectors of equal length"])
        f, g, h = arrs
        bad = []
        if np.any(h < 0) or not math.isclose(float(h.max()), 1.0, rel_tol=1e-12):
            bad.append("h must satisfy ||h||_inf=1 and h>=0")
        if not (np.any(f > 0) or np.any(g > 0)):
            bad.append("need f+ != 0 or g+ != 0")
        if bad:
            raise ParameterError(bad)
        for name, a in zip("fgh", arrs):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def lq_star_norms(self, grid: GridSpec, params: ProblemParams) -> tuple[float, float]:
        r = params.q_star
        return lr_norm(grid, self.f, r), lr_norm(grid, self.g, r)


@dataclass(frozen=True)
class StatePair:
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if u.shape != v.shape or u.ndim != 1:
            raise ValueError("state components must be vectors on the same grid")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @classmethod
    def from_flat(cls, x: np.ndarray) -> "StatePair":
        n = x.shape[0] // 2
        return cls(x[:n].copy(), x[n:].copy())

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate([self.u, self.v])

    def scaled(self, t: float) -> "StatePair":
        return StatePair(t * self.u, t * self.v)

    def swapped(self) -> "StatePair":
        return StatePair(self.v, self.u)

    def is_zero(self) -> bool:
        return not (np.any(self.u) or np.any(self.v))


@dataclass(frozen=True)
class EnergyBreakdown:
    A: float
    B: float
    C: float
    I: float

    def as_dict(self) -> dict:
        return {"A": self.A, "B": self.B, "C": self.C, "I": self.I}


def term_B(params: ProblemParams, weights: WeightSet, z: StatePair, grid: GridSpec) -> float:
    """Integral of lambda f |u|^q + mu g |v|^q."""
    q = params.q
    dens = params.lam * weights.f * np.abs(z.u) ** q + params.mu * weights.g * np.abs(z.v) ** q
    return float(grid.cell_volume * np.sum(dens))


def term_C(params: ProblemParams, weights: WeightSet, z: StatePair, grid: GridSpec) -> float:
    """Integral of h |u|^alpha |v|^beta."""
    dens = weights.h * np.abs(z.u) ** params.alpha * np.abs(z.v) ** params.beta
    return float(grid.cell_volume * np.sum(dens))


def combine(params: ProblemParams, A: float, B: float, C: float) -> EnergyBreakdown:
    return EnergyBreakdown(A, B, C, A / params.p - B / params.q - 2.0 * C / params.ab)


def energy(params: ProblemParams, weights: WeightSet, kernel: KernelTable, z: StatePair) -> EnergyBreakdown:
    A = pair_norm_p(kernel, z)
    B = term_B(params, weights, z, kernel.grid)
    C = term_C(params, weights, z, kernel.grid)
    return combine(params, A, B, C)


def gradient_parts(params: ProblemParams, weights: WeightSet, kernel: KernelTable, z: StatePair):
    """The three pieces of grad I: (grad A/p, grad B/q, 2 grad C/(alpha+beta)), each a flat 2N vector."""
    vol = kernel.grid.cell_volume
    p, q, a, b = params.p, params.q, params.alpha, params.beta
    ga = np.concatenate([seminorm_gradient(kernel, z.u), seminorm_gradient(kernel, z.v)]) / p
    gb = vol * np.concatenate([params.lam * weights.f * _spow(z.u, q), params.mu * weights.g * _spow(z.v, q)])
    au, av = np.abs(z.u), np.abs(z.v)
    gc = (2.0 * vol / params.ab) * np.concatenate(
        [a * weights.h * _spow(z.u, a) * av**b, b * weights.h * au**a * _spow(z.v, b)]
    )
    return ga, gb, gc


def energy_gradient(params: ProblemParams, weights: WeightSet, kernel: KernelTable, z: StatePair) -> StatePair:
    """Exact gradient of I with respect to the nodal values of (u, v).

    Component i is the weak-form residual tested against the i-th nodal
    indicator: the fractional p-Laplacian action minus the cell-weighted
    right-hand side.
    """
    ga, gb, gc = gradient_parts(params, weights, kernel, z)
    return StatePair.from_flat(ga - gb - gc)


def nehari_pairing(params: ProblemParams, weights: WeightSet, kernel: KernelTable, z: StatePair) -> float:
    """<I'(z), z> = A - B - 2C."""
    e = energy(params, weights, kernel, z)
    return e.A - e.B - 2.0 * e.C


def phi_prime_pairing(params: ProblemParams, weights: WeightSet, kernel: KernelTable, z: StatePair) -> float:
    """<Phi'(z), z> = pA - qB - 2(alpha+beta)C."""
    e = energy(params, weights, kernel, z)
    return params.p * e.A - params.q * e.B - 2.0 * params.ab * e.C
