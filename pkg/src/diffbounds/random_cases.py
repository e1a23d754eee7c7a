"""
Seeded random coefficient sets that satisfy the standing assumptions.

Used by property tests, the acceptance suite and the ``tilted-inequality``
CLI scenario.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientSet
from .grid import Grid, Region, gradient


def smoothstep(s) -> np.ndarray:
    """Quintic ``0 -> 1`` step on ``[0, 1]`` with vanishing first and second derivatives at the ends."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    return s ** 3 * (10 - 15 * s + 6 * s ** 2)


def random_coefficients(rng: np.random.Generator, grid: Grid, *, degenerate: bool = True,
                        advection: bool = True, reaction: bool = True,
                        window=(0.0, 0.05)) -> CoefficientSet:
    """Smooth ``a >= 0`` (zero on a random sub-box when ``degenerate``), ``b`` tangential at the walls, ``c <= -sup |div b|``.

    The time dependence is a smooth periodic modulation of ``a`` and ``b``.
    On a periodic axis ``b`` uses a periodic profile instead of a wall-vanishing one.
    ``c`` stays below ``-sup |div b|`` with a margin so that the face-flux
    divergence of the discrete scheme satisfies the same sign condition as the
    continuum one on coarse grids.
    """
    n = grid.dim
    lo, hi = np.array(grid.lower), np.array(grid.upper)
    alpha0 = rng.uniform(0.2, 2.0)
    freq = rng.integers(1, 4, size=n)
    phase = rng.uniform(0, 2 * np.pi, size=n)
    omega = rng.uniform(0.5, 3.0)
    z = []
    if degenerate:
        for k in range(n):
            w = rng.uniform(0.1, 0.3) * (hi[k] - lo[k])
            start = rng.uniform(lo[k], hi[k] - w)
            z.append((float(start), float(start + w)))
    b_amp = rng.uniform(-1.5, 1.5, size=n) if advection else np.zeros(n)
    gamma = rng.uniform(0.0, 1.0) if reaction else 0.0
    periodic = [bd == "periodic" for bd in grid.boundary]

    def unit(x):
        return (x - lo) / (hi - lo)

    def a(x, t):
        s = unit(x)
        val = alpha0 * (1 + 0.5 * np.prod(np.sin(2 * np.pi * freq * s + phase), axis=1))
        val = val * (1 + 0.3 * np.sin(omega * t))
        if z:
            inside = np.all([(x[:, k] >= z[k][0]) & (x[:, k] <= z[k][1]) for k in range(n)], axis=0)
            val = np.where(inside, 0.0, val)
        return val

    def b(x, t):
        s = unit(x)
        cols = []
        for k in range(n):
            prof = np.cos(2 * np.pi * s[:, k]) if periodic[k] else np.sin(np.pi * s[:, k])
            cols.append(b_amp[k] * prof * (1 + 0.2 * np.cos(omega * t)))
        return np.stack(cols, axis=1)

    def div_b(x, t):
        s = unit(x)
        out = np.zeros(len(x))
        for k in range(n):
            L = hi[k] - lo[k]
            if periodic[k]:
                d = -2 * np.pi / L * np.sin(2 * np.pi * s[:, k])
            else:
                d = np.pi / L * np.cos(np.pi * s[:, k])
            out += b_amp[k] * d * (1 + 0.2 * np.cos(omega * t))
        return out

    div_sup = sum(abs(b_amp[k]) * (2 if periodic[k] else 1) * np.pi / (hi[k] - lo[k]) for k in range(n))

    def c(x, t):
        return np.full(len(x), -1.25 * 1.2 * div_sup - gamma)

    return CoefficientSet(a=a, b=b, c=c, div_b=div_b, time_window=tuple(window), name="random",
                          params={"alpha0": alpha0, "zero_box": [list(iv) for iv in z],
                                  "b_amp": b_amp.tolist(), "gamma": gamma})


@dataclass(frozen=True)
class LocalizedExponent:
    phi: np.ndarray
    U: Region
    interval: tuple[float, float]
    c2_norm: float


def random_localized_phi(rng: np.random.Generator, grid: Grid, c2_max: float = 10.0,
                         axis: int = 0) -> LocalizedExponent:
    """``phi = c0 + A S((x - u0)/w)`` with ``S`` the quintic step; ``||phi||_{C^2} <= c2_max``.

    ``U`` is the set of cells where the discrete gradient can be nonzero.
    """
    lo, hi = grid.lower[axis], grid.upper[axis]
    L = hi - lo
    w = rng.uniform(0.15, 0.4) * L
    u0 = rng.uniform(lo + 0.05 * L, hi - 0.05 * L - w)
    # sup |S'| = 15/8, sup |S''| = 10/sqrt(3)
    A_max = min(c2_max / 2, c2_max * w / (15 / 8), c2_max * w ** 2 / (10 / np.sqrt(3)))
    A = rng.uniform(0.3, 1.0) * A_max * rng.choice([-1.0, 1.0])
    c0 = rng.uniform(-1, 1) * (c2_max / 2 - abs(A) / 2) - A / 2
    x = grid.centers[:, axis]
    phi = c0 + A * smoothstep((x - u0) / w)
    h = grid.spacing[axis]
    U = grid.region_where(lambda p: (p[:, axis] >= u0 - h) & (p[:, axis] <= u0 + w + h), "U")
    c2 = max(float(np.abs(phi).max()), abs(A) * 15 / 8 / w, abs(A) * 10 / np.sqrt(3) / w ** 2)
    return LocalizedExponent(phi, U, (u0, u0 + w), c2)


def discrete_c2_norm(phi: np.ndarray, grid: Grid) -> float:
    g1 = np.stack([gradient(phi, grid, k) for k in range(grid.dim)], axis=1)
    g2 = [gradient(g1[:, k], grid, k) for k in range(grid.dim)]
    return float(max(np.abs(phi).max(), np.linalg.norm(g1, axis=1).max(),
                     max(np.abs(v).max() for v in g2)))
