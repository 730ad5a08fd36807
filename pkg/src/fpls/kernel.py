"""Discrete Gagliardo kernel over Q = R^2n minus (CΩ x CΩ) and the X0 seminorm.

The interaction set splits into Ω x Ω, handled by midpoint quadrature between
distinct cell centers, and the two mixed strips Ω x CΩ, CΩ x Ω, which are equal
by symmetry and collapse into one exterior weight per node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.spatial.distance import cdist

from .grid import GridSpec

EXTERIOR_RTOL = 1e-8


@dataclass(frozen=True)
class FracParams:
    s: float
    p: float

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if not self.p > 1.0:
            raise ValueError(f"p must exceed 1, got {self.p}")

    @property
    def ps(self) -> float:
        return self.p * self.s

    def check_dimension(self, n: int) -> None:
        # n == ps is admitted as the borderline case with p* = inf
        if n < self.ps:
            raise ValueError(f"need n >= ps, got n={n}, ps={self.ps}")

    def p_star(self, n: int) -> float:
        """Fractional Sobolev exponent np/(n - ps); infinite when n == ps."""
        self.check_dimension(n)
        if math.isclose(n, self.ps, rel_tol=0.0, abs_tol=1e-14):
            return math.inf
        return n * self.p / (n - self.ps)


@dataclass(frozen=True)
class KernelTable:
    grid: GridSpec
    frac: FracParams
    pair_weights: np.ndarray = field(repr=False)
    exterior_weights: np.ndarray = field(repr=False)
    # graph Laplacian of pair_weights, used by the p = 2 fast path
    laplacian: np.ndarray = field(repr=False, compare=False)

    @property
    def num_nodes(self) -> int:
        return self.grid.num_nodes


def exterior_tail_1d(x: np.ndarray, a: float, b: float, ps: float) -> np.ndarray:
    """Closed form of the integral of |x - y|^-(1+ps) over y outside (a, b)."""
    return ((x - a) ** (-ps) + (b - x) ** (-ps)) / ps


def _ray_exit_distance(theta, x, lo, hi):
    c, s = math.cos(theta), math.sin(theta)
    d = math.inf
    if c > 0:
        d = min(d, (hi[0] - x[0]) / c)
    elif c < 0:
        d = min(d, (lo[0] - x[0]) / c)
    if s > 0:
        d = min(d, (hi[1] - x[1]) / s)
    elif s < 0:
        d = min(d, (lo[1] - x[1]) / s)
    return d


def exterior_tail_2d(x, lo, hi, ps: float, rtol: float = EXTERIOR_RTOL) -> float:
    """Integral of |x - y|^-(2+ps) over y outside the rectangle [lo, hi].

    In polar coordinates around x the radial integral is exact,
    rho(theta)^-ps / ps, leaving an angular integral that is smooth between
    the four corner directions; each arc is integrated adaptively.
    """
    corners = sorted(
        math.atan2(cy - x[1], cx - x[0]) % (2 * math.pi)
        for cx in (lo[0], hi[0])
        for cy in (lo[1], hi[1])
    )
    breaks = corners + [corners[0] + 2 * math.pi]
    total = 0.0
    for t0, t1 in zip(breaks[:-1], breaks[1:]):
        val, err, *rest = integrate.quad(
            lambda th: _ray_exit_distance(th, x, lo, hi) ** (-ps),
            t0,
            t1,
            epsabs=0.0,
            epsrel=rtol,
            limit=200,
            full_output=1,
        )
        if len(rest) > 1 or err > rtol * abs(val) * 10:
            raise RuntimeError(f"exterior quadrature did not converge at node {x} (err {err:.3g})")
        total += val
    return total / ps


def assemble_kernel(grid: GridSpec, frac: FracParams) -> KernelTable:
    frac.check_dimension(grid.dim)
    ps = frac.ps
    vol = grid.cell_volume
    x = grid.node_coords

    dist = cdist(x, x)
    w = np.zeros_like(dist)
    off = ~np.eye(grid.num_nodes, dtype=bool)
    w[off] = vol**2 / dist[off] ** (grid.dim + ps)
    # cdist is symmetric to rounding; force exact symmetry
    w = 0.5 * (w + w.T)

    if grid.dim == 1:
        (a, b), = grid.bounds
        tail = exterior_tail_1d(x[:, 0], a, b, ps)
    else:
        lo, hi = grid.lower, grid.upper
        tail = np.array([exterior_tail_2d(xi, lo, hi, ps) for xi in x])
    e = 2.0 * vol * tail

    lap = np.diag(w.sum(axis=1)) - w
    for arr in (w, e, lap):
        arr.setflags(write=False)
    return KernelTable(grid, frac, w, e, lap)


def _spow(t: np.ndarray, r: float) -> np.ndarray:
    """|t|^(r-2) t with the value 0 at t = 0."""
    return np.sign(t) * np.abs(t) ** (r - 1.0)


def _check(k: KernelTable, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (k.num_nodes,):
        raise ValueError(f"state has shape {u.shape}, kernel has {k.num_nodes} nodes")
    return u


def seminorm_energy(k: KernelTable, u) -> float:
    """Discrete ||u||_{X0}^p: pair sum over Ω x Ω plus the exterior strips."""
    u = _check(k, u)
    p = k.frac.p
    if p == 2.0:
        inner = 2.0 * float(u @ (k.laplacian @ u))
    else:
        diff = u[:, None] - u[None, :]
        inner = float(np.sum(k.pair_weights * np.abs(diff) ** p))
    return inner + float(np.sum(k.exterior_weights * np.abs(u) ** p))


def seminorm_gradient(k: KernelTable, u) -> np.ndarray:
    u = _check(k, u)
    p = k.frac.p
    if p == 2.0:
        inner = 4.0 * (k.laplacian @ u)
    else:
        diff = u[:, None] - u[None, :]
        inner = 2.0 * p * np.sum(k.pair_weights * _spow(diff, p), axis=1)
    return inner + p * k.exterior_weights * _spow(u, p)


def pair_norm_p(k: KernelTable, z) -> float:
    """||(u, v)||^p = ||u||_{X0}^p + ||v||_{X0}^p."""
    return seminorm_energy(k, z.u) + seminorm_energy(k, z.v)
