"""Discrete best Sobolev constant and the parameter thresholds for Θ and Ψ."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._parallel import pmap
from .functional import ParameterError, ProblemParams, WeightSet
from .grid import lr_norm
from .kernel import KernelTable, _spow, seminorm_energy, seminorm_gradient

SOBOLEV_STARTS = 20
SOBOLEV_MAX_ITER = 10000
SOBOLEV_RTOL = 1e-10


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SobolevEstimate:
    value: float
    per_start: tuple[float, ...]
    converged: tuple[bool, ...]
    minimizer: np.ndarray = field(repr=False)

    def __float__(self) -> float:
        return self.value


def rayleigh_quotient(kernel: KernelTable, u, r: float) -> float:
    """||u||_{X0}^p / ||u||_{L^r}^p; scale invariant."""
    return seminorm_energy(kernel, u) / lr_norm(kernel.grid, u, r) ** kernel.frac.p


def _descend_quotient(kernel: KernelTable, r: float, u0: np.ndarray, max_iter: int, rtol: float):
    """Normalized gradient descent for the Rayleigh quotient on the L^r unit sphere.

    Barzilai-Borwein trial steps with Armijo backtracking; every iterate is
    renormalized so that ||u||_r = 1.
    """
    grid = kernel.grid
    vol = grid.cell_volume
    p = kernel.frac.p

    def normalize(u):
        return u / lr_norm(grid, u, r)

    def quotient_and_grad(u):
        E = seminorm_energy(kernel, u)
        g = seminorm_gradient(kernel, u) - E * p * vol * _spow(u, r)
        return E, g

    u = normalize(u0)
    R, g = quotient_and_grad(u)
    step = 1.0 / max(np.max(np.abs(g)), 1e-300)
    prev = None
    for it in range(1, max_iter + 1):
        gg = float(g @ g)
        if gg == 0.0:
            return u, R, True, it
        while True:
            raw = u - step * g
            if lr_norm(grid, raw, r) > 0:
                trial = normalize(raw)
                R_new, g_new = quotient_and_grad(trial)
                if R_new <= R - 1e-4 * step * gg:
                    break
            step *= 0.5
            if step * np.max(np.abs(g)) < 1e-16 * np.max(np.abs(u)):
                # no representable decrease left
                return u, R, True, it
        s, y = trial - u, g_new - g
        done = abs(R - R_new) <= rtol * abs(R_new)
        u, R, g = trial, R_new, g_new
        if done and prev is not None and prev:
            return u, R, True, it
        prev = done
        sy = float(s @ y)
        step = float(s @ s) / sy if sy > 0 else step * 2.0
    return u, R, False, max_iter


def estimate_sobolev(
    kernel: KernelTable,
    params: ProblemParams,
    n_starts: int = SOBOLEV_STARTS,
    seed: int = 0,
    max_iter: int = SOBOLEV_MAX_ITER,
    rtol: float = SOBOLEV_RTOL,
) -> SobolevEstimate:
    """Minimum of the discrete Rayleigh quotient for the embedding X0 -> L^(alpha+beta).

    Multi-start: the constant profile plus ``n_starts`` random nonnegative
    profiles, each driven to a stationary point; the smallest quotient wins.
    """
    r = params.ab
    n = kernel.num_nodes
    starts = [np.ones(n)]
    for k in range(n_starts):
        rng = np.random.default_rng([seed, k])
        starts.append(rng.uniform(0.0, 1.0, n) + 0.05)

    results = pmap(lambda u0: _descend_quotient(kernel, r, u0, max_iter, rtol), starts)
    values = tuple(float(x[1]) for x in results)
    flags = tuple(bool(x[2]) for x in results)
    if not any(flags):
        raise ConvergenceError(f"Sobolev quotient descent did not converge in {max_iter} iterations")
    best = int(np.argmin(values))
    return SobolevEstimate(values[best], values, flags, results[best][0])


def _bracket_K(params: ProblemParams, S: float) -> float:
    """(p-q)/(2(alpha+beta-q)) S^((alpha+beta)/p), the quantity raised to powers in the thresholds."""
    p, q, ab = params.p, params.q, params.ab
    return (p - q) / (2.0 * (ab - q)) * S ** (ab / p)


def threshold_C(params: ProblemParams, S: float) -> float:
    if not S > 0:
        raise ValueError(f"Sobolev constant must be positive, got {S}")
    p, q, ab = params.p, params.q, params.ab
    K = _bracket_K(params, S)
    return K ** (p / (ab - p)) * (S ** (-q / p) * (ab - q) / (ab - p)) ** (-p / (p - q))


def threshold_C_alt(params: ProblemParams, S: float) -> float:
    """Variant with 2(alpha+beta-p) in the bracket denominator; reported, never used for decisions."""
    p, q, ab = params.p, params.q, params.ab
    K = (p - q) / (2.0 * (ab - p)) * S ** (ab / p)
    return K ** (p / (ab - p)) * (S ** (-q / p) * (ab - q) / (ab - p)) ** (-p / (p - q))


def psi_prefactor(params: ProblemParams) -> float:
    p, q = params.p, params.q
    return (q / p) ** (p / (p - q))


def threshold_D(params: ProblemParams, S: float) -> float:
    return psi_prefactor(params) * threshold_C(params, S)


def weight_lhs(params: ProblemParams, norm_f: float, norm_g: float) -> float:
    """(|lambda| ||f||_q*)^(p/(p-q)) + (|mu| ||g||_q*)^(p/(p-q))."""
    e = params.p / (params.p - params.q)
    return (abs(params.lam) * norm_f) ** e + (abs(params.mu) * norm_g) ** e


@dataclass(frozen=True)
class ThresholdReport:
    S_d: float
    C_theta: float
    D_psi: float
    lhs: float
    in_theta: bool
    in_psi: bool
    C_theta_alt: float
    norm_f: float
    norm_g: float

    def as_dict(self) -> dict:
        return {
            "S_d": self.S_d,
            "C_theta": self.C_theta,
            "D_psi": self.D_psi,
            "lhs": self.lhs,
            "in_theta": self.in_theta,
            "in_psi": self.in_psi,
            "C_theta_alt": self.C_theta_alt,
            "norm_f_qstar": self.norm_f,
            "norm_g_qstar": self.norm_g,
        }


def membership(params: ProblemParams, weights: WeightSet, S_d: float, grid) -> ThresholdReport:
    nf, ng = weights.lq_star_norms(grid, params)
    lhs = weight_lhs(params, nf, ng)
    if not lhs > 0:
        raise ParameterError(["(|λ|‖f‖)^(p/(p-q)) + (|μ|‖g‖)^(p/(p-q)) must be positive; (lambda, mu) != (0, 0)"])
    C = threshold_C(params, S_d)
    D = threshold_D(params, S_d)
    return ThresholdReport(
        S_d=float(S_d),
        C_theta=C,
        D_psi=D,
        lhs=lhs,
        in_theta=bool(0 < lhs < C),
        in_psi=bool(0 < lhs < D),
        C_theta_alt=threshold_C_alt(params, S_d),
        norm_f=nf,
        norm_g=ng,
    )


def scale_parameters(params: ProblemParams, weights: WeightSet, grid, target_lhs: float) -> ProblemParams:
    """Rescale (lambda, mu) along its ray so the weight sum equals ``target_lhs``."""
    nf, ng = weights.lq_star_norms(grid, params)
    lhs = weight_lhs(params, nf, ng)
    if not lhs > 0:
        raise ParameterError(["cannot rescale (lambda, mu) = (0, 0)"])
    c = (target_lhs / lhs) ** ((params.p - params.q) / params.p)
    return params.with_parameters(params.lam * c, params.mu * c)
