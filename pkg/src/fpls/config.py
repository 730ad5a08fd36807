"""Run configuration documents (YAML) and weight-function families.

Example document::

    grid: {dim: 1, bounds: [[-1.0, 1.0]], nodes_per_axis: 64}
    frac: {s: 0.5, p: 2.0}
    exponents: {q: 1.5, alpha: 1.5, beta: 1.5}
    parameters:
      lambda: 1.0
      mu: 1.0
      scale_to: {threshold: D_psi, fraction: 0.5}   # optional
    weights:
      f: {kind: sin, k: 2, amp: 1.0}
      g: {kind: sin, k: 2, amp: -1.0}
      h: {kind: const, value: 1.0}
    solver: {n_starts: 8, seed: 0}
    sobolev: {n_starts: 20, seed: 0}
    output: out

Weight kinds: ``const`` (value), ``sin`` (amp * sin(k pi xhat), xhat the
``axis`` coordinate rescaled to [0, 1]), ``step`` (amp * (1[xhat < cut] -
1[xhat >= cut])) and ``file`` (path to a grid-function ``.dat`` file,
relative to the config file).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .functional import ParameterError, ProblemParams, WeightSet, parameter_violations
from .grid import GridSpec, build_grid, read_grid_function
from .kernel import FracParams
from .solver import SolverConfig

FORMAT_VERSION = "fpls-report-v1"

_TOP_KEYS = {"grid", "frac", "exponents", "parameters", "weights", "solver", "sobolev", "output"}
_REQUIRED = {"grid", "frac", "exponents", "parameters", "weights"}
_WEIGHT_KEYS = {
    "const": {"kind", "value"},
    "sin": {"kind", "k", "amp", "axis"},
    "step": {"kind", "cut", "amp", "axis"},
    "file": {"kind", "path"},
}
_SOLVER_KEYS = {f.name for f in dataclasses.fields(SolverConfig)}


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class RunConfig:
    dim: int
    bounds: tuple
    nodes_per_axis: int
    s: float
    p: float
    q: float
    alpha: float
    beta: float
    lam: float
    mu: float
    weights: dict
    solver: SolverConfig = field(default_factory=SolverConfig)
    scale_to: tuple | None = None
    sobolev_starts: int = 20
    sobolev_seed: int = 0
    output: str = "out"
    base_dir: str = field(default=".", compare=False)

    def grid(self) -> GridSpec:
        return build_grid(self.dim, self.bounds, self.nodes_per_axis)

    def problem_params(self) -> ProblemParams:
        return ProblemParams(FracParams(self.s, self.p), self.q, self.alpha, self.beta, self.lam, self.mu)

    def output_dir(self) -> Path:
        out = Path(self.output)
        return out if out.is_absolute() else Path(self.base_dir) / out

    def to_dict(self) -> dict:
        params = {"lambda": self.lam, "mu": self.mu}
        if self.scale_to is not None:
            params["scale_to"] = {"threshold": self.scale_to[0], "fraction": self.scale_to[1]}
        return {
            "grid": {"dim": self.dim, "bounds": [list(b) for b in self.bounds], "nodes_per_axis": self.nodes_per_axis},
            "frac": {"s": self.s, "p": self.p},
            "exponents": {"q": self.q, "alpha": self.alpha, "beta": self.beta},
            "parameters": params,
            "weights": {k: dict(v) for k, v in self.weights.items()},
            "solver": dataclasses.asdict(self.solver),
            "sobolev": {"n_starts": self.sobolev_starts, "seed": self.sobolev_seed},
            "output": self.output,
        }


def _num(errors, section, d, key, default=None, kind=float):
    if key not in d:
        if default is None:
            errors.append(f"{section}.{key}: missing")
            return None
        return default
    val = d[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        errors.append(f"{section}.{key}: expected a number, got {val!r}")
        return None
    if kind is int:
        if int(val) != val:
            errors.append(f"{section}.{key}: expected an integer, got {val!r}")
            return None
        return int(val)
    return float(val)


def _section(errors, doc, name, allowed):
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        errors.append(f"{name}: expected a mapping")
        return {}
    for key in sorted(set(sec) - allowed):
        errors.append(f"{name}.{key}: unknown key")
    return sec


def _weight_desc(errors, name, desc):
    if not isinstance(desc, dict) or "kind" not in desc:
        errors.append(f"weights.{name}: expected a mapping with a 'kind' key")
        return None
    kind = desc["kind"]
    if kind not in _WEIGHT_KEYS:
        errors.append(f"weights.{name}.kind: unknown weight family {kind!r}")
        return None
    for key in sorted(set(desc) - _WEIGHT_KEYS[kind]):
        errors.append(f"weights.{name}.{key}: unknown key for kind {kind!r}")
    out = {"kind": kind}
    sec = f"weights.{name}"
    if kind == "const":
        out["value"] = _num(errors, sec, desc, "value")
    elif kind == "sin":
        out["k"] = _num(errors, sec, desc, "k")
        out["amp"] = _num(errors, sec, desc, "amp", 1.0)
        out["axis"] = _num(errors, sec, desc, "axis", 0, int)
    elif kind == "step":
        out["cut"] = _num(errors, sec, desc, "cut", 0.5)
        out["amp"] = _num(errors, sec, desc, "amp", 1.0)
        out["axis"] = _num(errors, sec, desc, "axis", 0, int)
    else:
        if not isinstance(desc.get("path"), str):
            errors.append(f"{sec}.path: expected a file path")
        out["path"] = desc.get("path")
    return out


def config_from_dict(doc, base_dir=".") -> RunConfig:
    """Validate a parsed document; every violation is collected before raising."""
    if not isinstance(doc, dict):
        raise ConfigError(["top level: expected a mapping"])
    errors = []
    for key in sorted(set(doc) - _TOP_KEYS):
        errors.append(f"{key}: unknown key")
    for key in sorted(_REQUIRED - set(doc)):
        errors.append(f"{key}: missing section")

    grid = _section(errors, doc, "grid", {"dim", "bounds", "nodes_per_axis"})
    dim = _num(errors, "grid", grid, "dim", kind=int)
    n = _num(errors, "grid", grid, "nodes_per_axis", kind=int)
    bounds = grid.get("bounds")
    try:
        bounds = tuple((float(a), float(b)) for a, b in bounds)
    except (TypeError, ValueError):
        errors.append(f"grid.bounds: expected a list of [a, b] pairs, got {bounds!r}")
        bounds = None
    if None not in (dim, n, bounds):
        try:
            build_grid(dim, bounds, n)
        except ValueError as exc:
            errors.append(f"grid: {exc}")

    frac = _section(errors, doc, "frac", {"s", "p"})
    s, p = _num(errors, "frac", frac, "s"), _num(errors, "frac", frac, "p")
    exps = _section(errors, doc, "exponents", {"q", "alpha", "beta"})
    q, alpha, beta = (_num(errors, "exponents", exps, k) for k in ("q", "alpha", "beta"))

    par = _section(errors, doc, "parameters", {"lambda", "mu", "scale_to"})
    lam, mu = _num(errors, "parameters", par, "lambda"), _num(errors, "parameters", par, "mu")
    scale_to = None
    if "scale_to" in par:
        st = par["scale_to"]
        if not isinstance(st, dict) or st.get("threshold") not in ("C_theta", "D_psi") or set(st) - {"threshold", "fraction"}:
            errors.append("parameters.scale_to: expected {threshold: C_theta|D_psi, fraction: <number>}")
        else:
            frac_val = _num(errors, "parameters.scale_to", st, "fraction")
            if frac_val is not None and not frac_val > 0:
                errors.append("parameters.scale_to.fraction: must be positive")
            scale_to = (st["threshold"], frac_val)

    wsec = _section(errors, doc, "weights", {"f", "g", "h"})
    weights = {}
    for name in "fgh":
        if name not in wsec:
            errors.append(f"weights.{name}: missing")
        else:
            weights[name] = _weight_desc(errors, name, wsec[name])

    ssec = _section(errors, doc, "solver", _SOLVER_KEYS)
    solver = None
    try:
        solver = SolverConfig(**ssec)
    except (TypeError, ValueError) as exc:
        errors.append(f"solver: {exc}")

    sob = _section(errors, doc, "sobolev", {"n_starts", "seed"})
    sob_starts = _num(errors, "sobolev", sob, "n_starts", 20, int)
    sob_seed = _num(errors, "sobolev", sob, "seed", 0, int)
    output = doc.get("output", "out")
    if not isinstance(output, str):
        errors.append("output: expected a directory path")

    # structural conditions on exponents and parameters, all reported together
    if None not in (s, p):
        try:
            fp = FracParams(s, p)
        except ValueError as exc:
            errors.append(f"frac: {exc}")
            fp = None
        if fp is not None and None not in (q, alpha, beta, lam, mu):
            errors.extend(parameter_violations(fp, q, alpha, beta, lam, mu, dim if dim in (1, 2) else None))

    if errors:
        raise ConfigError(errors)
    return RunConfig(
        dim=dim,
        bounds=bounds,
        nodes_per_axis=n,
        s=s,
        p=p,
        q=q,
        alpha=alpha,
        beta=beta,
        lam=lam,
        mu=mu,
        weights=weights,
        solver=solver,
        scale_to=scale_to,
        sobolev_starts=sob_starts,
        sobolev_seed=sob_seed,
        output=output,
        base_dir=str(base_dir),
    )


def parse_config(text: str, base_dir=".") -> RunConfig:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"parse error: {exc}"]) from exc
    return config_from_dict(doc, base_dir)


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def weight_values(grid: GridSpec, desc: dict, base_dir=".") -> np.ndarray:
    kind = desc["kind"]
    if kind == "const":
        return np.full(grid.num_nodes, desc["value"])
    if kind == "file":
        path = Path(desc["path"])
        if not path.is_absolute():
            path = Path(base_dir) / path
        return np.array(read_grid_function(path, grid).values)
    axis = desc.get("axis", 0)
    if not 0 <= axis < grid.dim:
        raise ParameterError([f"weight axis {axis} out of range for a {grid.dim}D grid"])
    xhat = grid.unit_coords()[:, axis]
    if kind == "sin":
        return desc.get("amp", 1.0) * np.sin(desc["k"] * np.pi * xhat)
    if kind == "step":
        return desc.get("amp", 1.0) * np.where(xhat < desc.get("cut", 0.5), 1.0, -1.0)
    raise ParameterError([f"unknown weight family {kind!r}"])


def build_weights(grid: GridSpec, descs: dict, base_dir=".") -> WeightSet:
    """Evaluate f, g, h at the nodes; h is renormalized to max h = 1."""
    f, g, h = (weight_values(grid, descs[k], base_dir) for k in "fgh")
    if np.any(h < 0):
        raise ParameterError(["h must satisfy h>=0"])
    hmax = float(h.max())
    if hmax <= 0:
        raise ParameterError(["h vanishes identically; cannot normalize to ||h||_inf=1"])
    return WeightSet(f, g, h / hmax)
