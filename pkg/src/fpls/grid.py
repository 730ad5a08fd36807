"""Cell-centered grids on intervals and rectangles, discrete L^r norms, grid-function files."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

MAX_NODES = 4096

_HEADER = "# fpls-grid"


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell-centered grid on an axis-aligned box.

    Nodes are the cell centers, ordered lexicographically (first axis major),
    so no node sits on the boundary and functions are implicitly zero outside.
    """

    dim: int
    bounds: tuple[tuple[float, float], ...]
    nodes_per_axis: int
    spacing: tuple[float, ...] = field(init=False)
    node_coords: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        spacing = tuple((b - a) / self.nodes_per_axis for a, b in self.bounds)
        axes = [a + (np.arange(self.nodes_per_axis) + 0.5) * hk for (a, _), hk in zip(self.bounds, spacing)]
        mesh = np.meshgrid(*axes, indexing="ij")
        coords = np.stack([m.reshape(-1) for m in mesh], axis=1)
        coords.setflags(write=False)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "node_coords", coords)

    @property
    def num_nodes(self) -> int:
        return self.nodes_per_axis**self.dim

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def lower(self) -> np.ndarray:
        return np.array([a for a, _ in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([b for _, b in self.bounds])

    def unit_coords(self) -> np.ndarray:
        """Node coordinates rescaled to [0, 1] per axis."""
        return (self.node_coords - self.lower) / (self.upper - self.lower)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.num_nodes)


def build_grid(dim: int, bounds: Sequence[Sequence[float]], nodes_per_axis: int) -> GridSpec:
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    if len(bounds) != dim:
        raise ValueError(f"expected {dim} bound pairs, got {len(bounds)}")
    if int(nodes_per_axis) != nodes_per_axis or nodes_per_axis < 1:
        raise ValueError(f"nodes_per_axis must be a positive integer, got {nodes_per_axis}")
    clean = []
    for pair in bounds:
        a, b = (float(x) for x in pair)
        if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
            raise ValueError(f"bounds must satisfy a < b, got ({a}, {b})")
        clean.append((a, b))
    if int(nodes_per_axis) ** dim > MAX_NODES:
        raise ValueError(f"grid has {int(nodes_per_axis) ** dim} nodes; the dense kernel is capped at {MAX_NODES}")
    return GridSpec(dim, tuple(clean), int(nodes_per_axis))


def lr_norm(grid: GridSpec, f, r: float) -> float:
    """Midpoint-rule L^r(Omega) norm ``(sum_i |cell| |f_i|^r)^(1/r)``."""
    if not r >= 1:
        raise ValueError(f"L^r norm needs r >= 1, got {r}")
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.num_nodes,):
        raise ValueError(f"grid function has shape {f.shape}, grid has {grid.num_nodes} nodes")
    return float(np.sum(grid.cell_volume * np.abs(f) ** r) ** (1.0 / r))


@dataclass(frozen=True)
class GridFunction:
    """Nodal values on a grid; represents the zero extension outside the domain."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.num_nodes,):
            raise ValueError(f"grid function has shape {vals.shape}, grid has {self.grid.num_nodes} nodes")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def norm(self, r: float) -> float:
        return lr_norm(self.grid, self.values, r)


def _fmt_list(xs) -> str:
    return ",".join(repr(float(x)) for x in xs)


def write_grid_function(path, grid: GridSpec, values) -> None:
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.num_nodes,):
        raise ValueError("values do not match grid")
    header = (
        f"{_HEADER} dim={grid.dim} n={grid.nodes_per_axis} "
        f"a={_fmt_list(grid.lower)} b={_fmt_list(grid.upper)}"
    )
    lines = [header] + [repr(float(x)) for x in values]
    Path(path).write_text("\n".join(lines) + "\n")


def read_grid_function(path, grid: GridSpec | None = None) -> GridFunction:
    """Read a ``.dat`` grid function; if ``grid`` is given the header must match it."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(_HEADER):
        raise ValueError(f"{path}: missing '{_HEADER}' header")
    fields = {}
    for token in lines[0][len(_HEADER):].split():
        key, _, val = token.partition("=")
        fields[key] = val
    try:
        dim = int(fields["dim"])
        n = int(fields["n"])
        lo = [float(x) for x in fields["a"].split(",")]
        hi = [float(x) for x in fields["b"].split(",")]
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: malformed header {lines[0]!r}") from exc
    file_grid = build_grid(dim, list(zip(lo, hi)), n)
    if grid is not None and (grid.dim, grid.bounds, grid.nodes_per_axis) != (
        file_grid.dim,
        file_grid.bounds,
        file_grid.nodes_per_axis,
    ):
        raise ValueError(f"{path}: grid in file does not match the configured grid")
    values = [float(line) for line in lines[1:] if line.strip() and not line.startswith("#")]
    return GridFunction(grid or file_grid, np.array(values))
