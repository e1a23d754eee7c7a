"""
Uniform Euclidean box grids, cell regions and discrete norms.

Cells are indexed in C order over the axes, so a 2D grid with
``cells_per_axis = (nx, ny)`` stores cell ``(i, j)`` at flat index
``i * ny + j``. Fields are plain 1D ``numpy`` arrays of length
``grid.n_cells``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

NEUMANN = "neumann"
PERIODIC = "periodic"
_BOUNDARY_KINDS = (NEUMANN, PERIODIC)


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Cell-centred uniform grid on an axis-aligned box.

    ``boundary`` holds one flag per axis. ``"neumann"`` closes both faces
    of that axis with zero normal flux; ``"periodic"`` wraps the axis and is
    used as a free-space proxy in directions where the coefficients do not
    satisfy the no-flux condition (e.g. the position axis of phase space).
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    cells_per_axis: tuple[int, ...]
    boundary: tuple[str, ...] = ()

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        cells = tuple(int(v) for v in np.atleast_1d(self.cells_per_axis))
        dim = len(cells)
        if dim not in (1, 2):
            raise GridError(f"dimension must be 1 or 2, got {dim}")
        if len(lower) != dim or len(upper) != dim:
            raise GridError("lower/upper/cells_per_axis lengths disagree")
        if any(n < 2 for n in cells):
            raise GridError("need at least 2 cells per axis")
        if any(u <= lo for lo, u in zip(lower, upper)):
            raise GridError("upper bound must exceed lower bound on every axis")
        boundary = tuple(self.boundary) if self.boundary else (NEUMANN,) * dim
        if isinstance(self.boundary, str):
            boundary = (self.boundary,) * dim
        if len(boundary) != dim or any(b not in _BOUNDARY_KINDS for b in boundary):
            raise GridError(f"boundary must be {dim} flags from {_BOUNDARY_KINDS}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "cells_per_axis", cells)
        object.__setattr__(self, "boundary", boundary)

    @classmethod
    def interval(cls, lower: float, upper: float, n: int, boundary: str = NEUMANN) -> "Grid":
        return cls((lower,), (upper,), (n,), (boundary,))

    @classmethod
    def box(cls, lower: Sequence[float], upper: Sequence[float], cells: Sequence[int],
            boundary: Sequence[str] | str = NEUMANN) -> "Grid":
        if isinstance(boundary, str):
            boundary = (boundary,) * len(cells)
        return cls(tuple(lower), tuple(upper), tuple(cells), tuple(boundary))

    @property
    def dim(self) -> int:
        return len(self.cells_per_axis)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells_per_axis

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cells_per_axis))

    @property
    def spacing(self) -> np.ndarray:
        return (np.array(self.upper) - np.array(self.lower)) / np.array(self.cells_per_axis)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis_centers(self, axis: int) -> np.ndarray:
        h = self.spacing[axis]
        return self.lower[axis] + h * (np.arange(self.cells_per_axis[axis]) + 0.5)

    @cached_property
    def centers(self) -> np.ndarray:
        """Cell centres as an ``(n_cells, dim)`` array."""
        axes = [self.axis_centers(k) for k in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        out = np.stack([m.ravel() for m in mesh], axis=1)
        out.setflags(write=False)
        return out

    def reshape(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values).reshape(self.shape + np.shape(values)[1:])

    def field(self, values) -> np.ndarray:
        """Validate and return ``values`` as a field on this grid."""
        arr = np.asarray(values, dtype=float)
        if arr.ndim == 0:
            arr = np.full(self.n_cells, float(arr))
        arr = arr.reshape(-1)
        if arr.size != self.n_cells:
            raise GridError(f"field has {arr.size} values, grid has {self.n_cells} cells")
        if not np.all(np.isfinite(arr)):
            raise GridError("field contains non-finite values")
        return arr

    def scaled(self, factor: float) -> "Grid":
        """The same grid dilated about the origin by ``factor``."""
        return Grid(tuple(factor * v for v in self.lower), tuple(factor * v for v in self.upper),
                    self.cells_per_axis, self.boundary)

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.lower, self.upper, tuple(factor * n for n in self.cells_per_axis),
                    self.boundary)

    # region constructors

    def region(self, indices: Iterable[int], label: str = "") -> "Region":
        return Region.from_indices(self, indices, label)

    def region_where(self, predicate: Callable[[np.ndarray], np.ndarray], label: str = "") -> "Region":
        """Cells whose centre satisfies ``predicate(centers) -> bool mask``."""
        mask = np.asarray(predicate(self.centers), dtype=bool).reshape(-1)
        return Region(self, np.flatnonzero(mask), label)

    def box_region(self, lower: Sequence[float], upper: Sequence[float], label: str = "") -> "Region":
        """Cells with centres in the closed box ``[lower, upper]`` (``None`` = unbounded)."""
        c = self.centers
        mask = np.ones(self.n_cells, dtype=bool)
        for k in range(self.dim):
            lo = -np.inf if lower[k] is None else lower[k]
            hi = np.inf if upper[k] is None else upper[k]
            mask &= (c[:, k] >= lo) & (c[:, k] <= hi)
        return Region(self, np.flatnonzero(mask), label)

    def ball_region(self, center: Sequence[float], radius: float, label: str = "",
                    complement: bool = False) -> "Region":
        dist = np.linalg.norm(self.centers - np.asarray(center, dtype=float), axis=1)
        mask = dist >= radius if complement else dist <= radius
        return Region(self, np.flatnonzero(mask), label)

    def all_cells(self, label: str = "all") -> "Region":
        return Region(self, np.arange(self.n_cells), label)

    def to_dict(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper),
                "cells_per_axis": list(self.cells_per_axis), "boundary": list(self.boundary)}


@dataclass(frozen=True, eq=False)
class Region:
    grid: Grid
    cell_indices: np.ndarray
    label: str = ""
    _mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        idx = np.unique(np.asarray(self.cell_indices, dtype=np.int64).reshape(-1))
        if idx.size and (idx[0] < 0 or idx[-1] >= self.grid.n_cells):
            raise GridError(f"region indices out of range for grid with {self.grid.n_cells} cells")
        idx.setflags(write=False)
        mask = np.zeros(self.grid.n_cells, dtype=bool)
        mask[idx] = True
        mask.setflags(write=False)
        object.__setattr__(self, "cell_indices", idx)
        object.__setattr__(self, "_mask", mask)

    @classmethod
    def from_indices(cls, grid: Grid, indices: Iterable[int], label: str = "") -> "Region":
        return cls(grid, np.fromiter(indices, dtype=np.int64) if not isinstance(indices, np.ndarray)
                   else indices, label)

    @classmethod
    def empty(cls, grid: Grid, label: str = "empty") -> "Region":
        return cls(grid, np.zeros(0, dtype=np.int64), label)

    @property
    def mask(self) -> np.ndarray:
        return self._mask

    @property
    def size(self) -> int:
        return int(self.cell_indices.size)

    def is_empty(self) -> bool:
        return self.size == 0

    def complement(self, label: str | None = None) -> "Region":
        return Region(self.grid, np.flatnonzero(~self._mask),
                      label if label is not None else f"not {self.label}")

    def union(self, other: "Region", label: str = "") -> "Region":
        _same_grid(self, other)
        return Region(self.grid, np.union1d(self.cell_indices, other.cell_indices), label)

    def intersection(self, other: "Region", label: str = "") -> "Region":
        _same_grid(self, other)
        return Region(self.grid, np.intersect1d(self.cell_indices, other.cell_indices), label)

    def points(self) -> np.ndarray:
        return self.grid.centers[self.cell_indices]

    def to_dict(self) -> dict:
        return {"label": self.label, "n_cells": self.size,
                "first": int(self.cell_indices[0]) if self.size else None,
                "last": int(self.cell_indices[-1]) if self.size else None}


def _same_grid(x: Region, y: Region):
    if x.grid != y.grid:
        raise GridError("regions live on different grids")


def region_distance(X: Region, Y: Region, grid: Grid | None = None) -> float:
    """Smallest Euclidean distance between cell centres of ``X`` and ``Y``."""
    _same_grid(X, Y)
    if grid is not None and grid != X.grid:
        raise GridError("regions do not belong to the given grid")
    if X.is_empty() or Y.is_empty():
        raise GridError("empty region has no distance")
    if np.any(X.mask & Y.mask):
        return 0.0
    small, large = (X, Y) if X.size <= Y.size else (Y, X)
    tree = cKDTree(large.points())
    dist, _ = tree.query(small.points(), k=1)
    return float(dist.min())


def indicator(X: Region, grid: Grid | None = None) -> np.ndarray:
    if grid is not None and grid != X.grid:
        raise GridError("region does not belong to the given grid")
    return X.mask.astype(float)


def lp_norm(f: np.ndarray, p: float, grid: Grid) -> float:
    """Cell-measure weighted discrete L^p norm; ``p = np.inf`` gives the max norm."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    f = np.abs(np.asarray(f, dtype=float).reshape(-1))
    if np.isinf(p):
        return float(f.max()) if f.size else 0.0
    w = grid.cell_volume
    if p == 1:
        return float(w * f.sum())
    if p == 2:
        return float(np.sqrt(w * np.dot(f, f)))
    scale = f.max() if f.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(scale * (w * np.sum((f / scale) ** p)) ** (1.0 / p))


def neighbour_pairs(grid: Grid, axis: int, include_periodic: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Flat index pairs ``(left, right)`` of cells sharing a face normal to ``axis``.

    Boundary faces of periodic axes are included (the wrap-around pair) when
    ``include_periodic`` is true.
    """
    idx = np.arange(grid.n_cells).reshape(grid.shape)
    left = np.take(idx, np.arange(grid.shape[axis] - 1), axis=axis)
    right = np.take(idx, np.arange(1, grid.shape[axis]), axis=axis)
    left, right = left.ravel(), right.ravel()
    if include_periodic and grid.boundary[axis] == PERIODIC:
        wl = np.take(idx, [grid.shape[axis] - 1], axis=axis).ravel()
        wr = np.take(idx, [0], axis=axis).ravel()
        left, right = np.concatenate([left, wl]), np.concatenate([right, wr])
    return left, right


def gradient(values: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """Central differences along ``axis``; one-sided at Neumann faces, wrapped when periodic."""
    arr = grid.reshape(np.asarray(values, dtype=float))
    h = grid.spacing[axis]
    if grid.boundary[axis] == PERIODIC:
        out = (np.roll(arr, -1, axis=axis) - np.roll(arr, 1, axis=axis)) / (2 * h)
    else:
        out = np.gradient(arr, h, axis=axis, edge_order=1)
    return out.reshape(np.shape(values))
