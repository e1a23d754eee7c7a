"""
Cutoff functions separating two regions and the signed tilting exponent.

Two constructions are provided:

* general: a mollified distance ``rho`` to ``X`` composed with a quintic
  smoothstep ``eta``; ``xi = eta(rho / d)`` is 0 on ``X`` and 1 on ``Y``.
* sharp: for slabs ``{x_k <= a}`` and ``{x_k >= a + d}``, the linear ramp
  ``eta(mu) = eps/2 + (1 - eps) mu`` with exponential caps, whose gradient
  never exceeds ``1/d`` and which is affine between the slabs.

Derivative constants are measured on the grid, so each certificate carries
the numbers that enter the bound it is used for.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal

from .grid import Grid, GridError, Region, gradient, neighbour_pairs, region_distance

SMOOTHSTEP_D1 = 15.0 / 8.0
SMOOTHSTEP_D2 = 10.0 / np.sqrt(3.0)


class CutoffError(ValueError):
    pass


# regularized distance

def _fixed_ball_average(field: np.ndarray, inside: np.ndarray, grid: Grid, r: float) -> np.ndarray:
    """In-domain average with weights ``(1 - |y - x|^2 / r^2)^2`` inside the ball of radius ``r``."""
    h = grid.spacing
    if r <= 0:
        return field.reshape(-1).copy()
    offs = [np.arange(-int(np.floor(r / h[k])), int(np.floor(r / h[k])) + 1) * h[k]
            for k in range(grid.dim)]
    s2 = sum(g ** 2 for g in np.meshgrid(*offs, indexing="ij"))
    kernel = np.clip(1.0 - s2 / (r * r), 0.0, None) ** 2
    num = signal.fftconvolve(field, kernel, mode="same")
    den = signal.fftconvolve(inside, kernel, mode="same")
    return (num / den).reshape(-1)


def _ball_average(delta: np.ndarray, grid: Grid, radius: np.ndarray) -> np.ndarray:
    """Average of ``delta`` over a ball whose radius varies from cell to cell.

    Fixed-radius averages are computed on radii spaced one cell apart and
    interpolated in the radius by Catmull-Rom splines, so the result is C^1
    in the radius. Averages are even in ``r``, which supplies the level at
    ``-h``.
    """
    step = float(grid.spacing.min())
    field = grid.reshape(delta)
    inside = np.ones(grid.shape)
    n_levels = int(np.ceil(radius.max() / step)) + 3
    levels = [_fixed_ball_average(field, inside, grid, j * step) for j in range(n_levels)]
    stack = np.stack([levels[1]] + levels)          # stack[j + 1] is level j
    pos = radius / step
    j = np.minimum(np.floor(pos).astype(int), n_levels - 3)
    u = pos - j
    cols = np.arange(grid.n_cells)
    p0, p1, p2, p3 = (stack[j + m, cols] for m in range(4))
    return p1 + 0.5 * u * ((p2 - p0) + u * ((2 * p0 - 5 * p1 + 4 * p2 - p3)
                                            + u * (-p0 + 3 * p1 - 3 * p2 + p3)))


@dataclass(frozen=True)
class RegularizedDistance:
    rho: np.ndarray
    delta: np.ndarray
    c3: float
    worst_ratio: float


def regularized_distance(X: Region, grid: Grid, c3: float = 2.0) -> RegularizedDistance:
    """``rho`` together with the raw distance and the worst comparability ratio."""
    if not c3 > 1:
        raise CutoffError(f"c3 must exceed 1, got {c3}")
    if X.grid != grid:
        raise GridError("region does not belong to the given grid")
    if X.is_empty():
        raise GridError("empty region has no distance")
    delta = ndimage.distance_transform_edt(grid.reshape(~X.mask), sampling=grid.spacing).reshape(-1)
    rho = _ball_average(delta, grid, delta / (2 * c3))
    rho[X.mask] = 0.0
    pos = delta > 0
    if pos.any():
        ratio = rho[pos] / delta[pos]
        worst = float(max(ratio.max(), 1.0 / ratio.min()))
    else:
        worst = 1.0
    return RegularizedDistance(rho, delta, float(c3), worst)


def build_regularized_distance(X: Region, grid: Grid, c3: float = 2.0) -> np.ndarray:
    """Distance to ``X`` averaged over balls of radius ``dist / (2 c3)``.

    Raises :class:`CutoffError` when ``rho / dist`` leaves ``[1/c3, c3]``.
    """
    res = regularized_distance(X, grid, c3)
    if res.worst_ratio > c3 * (1 + 1e-12):
        raise CutoffError(f"comparability check failed: worst ratio {res.worst_ratio:.6g} "
                          f"exceeds c3 = {c3}")
    return res.rho


# eta profile

@dataclass(frozen=True)
class EtaProfile:
    """Quintic smoothstep placed on ``[1/(2 c3), 1/c3]``."""

    c3: float

    @property
    def lower(self) -> float:
        return 1.0 / (2 * self.c3)

    @property
    def upper(self) -> float:
        return 1.0 / self.c3

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def sup_d1(self) -> float:
        return SMOOTHSTEP_D1 / self.width

    @property
    def sup_d2(self) -> float:
        return SMOOTHSTEP_D2 / self.width ** 2

    @property
    def c4(self) -> float:
        return max(self.sup_d1, self.sup_d2)

    def _theta(self, t):
        return np.clip((np.asarray(t, dtype=float) - self.lower) / self.width, 0.0, 1.0)

    def __call__(self, t) -> np.ndarray:
        th = self._theta(t)
        return th ** 3 * (10 - 15 * th + 6 * th * th)

    def derivative(self, t, order: int = 1) -> np.ndarray:
        th = self._theta(t)
        if order == 1:
            return 30 * th ** 2 * (1 - th) ** 2 / self.width
        if order == 2:
            return 60 * th * (1 - th) * (1 - 2 * th) / self.width ** 2
        raise ValueError("order must be 1 or 2")


def build_eta(c3: float = 2.0) -> EtaProfile:
    if not c3 >= 1:
        raise CutoffError(f"c3 must be at least 1 so that eta(1) = 1, got {c3}")
    return EtaProfile(float(c3))


# finite-difference derivative norms

def gradient_norm(xi: np.ndarray, grid: Grid) -> np.ndarray:
    g = np.stack([gradient(xi, grid, k) for k in range(grid.dim)], axis=1)
    return np.linalg.norm(g, axis=1)


def _second_difference(xi: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    arr = grid.reshape(xi)
    mode = "wrap" if grid.boundary[axis] == "periodic" else "edge"
    pad = [(0, 0)] * grid.dim
    pad[axis] = (1, 1)
    p = np.pad(arr, pad, mode=mode)
    n = arr.shape[axis]
    lo = np.take(p, np.arange(0, n), axis=axis)
    mid = np.take(p, np.arange(1, n + 1), axis=axis)
    hi = np.take(p, np.arange(2, n + 2), axis=axis)
    return ((hi - 2 * mid + lo) / grid.spacing[axis] ** 2).reshape(-1)


def hessian_norm(xi: np.ndarray, grid: Grid) -> np.ndarray:
    """Frobenius norm of the finite-difference Hessian (absolute value in 1D)."""
    if grid.dim == 1:
        return np.abs(_second_difference(xi, grid, 0))
    hxx = _second_difference(xi, grid, 0)
    hyy = _second_difference(xi, grid, 1)
    hxy = gradient(gradient(xi, grid, 0), grid, 1)
    hyx = gradient(gradient(xi, grid, 1), grid, 0)
    return np.sqrt(hxx ** 2 + hyy ** 2 + hxy ** 2 + hyx ** 2)


# certificates

@dataclass(frozen=True, eq=False)
class CutoffCertificate:
    xi: np.ndarray
    X: Region
    Y: Region
    d_XY: float
    c1_measured: float
    c2_measured: float
    mode: str = "general"
    epsilon: float = 0.0
    concavity_ok: bool | None = None
    c3: float | None = None
    c4: float | None = None
    max_second_difference: float | None = None

    @property
    def grid(self) -> Grid:
        return self.X.grid

    @property
    def c1_analytic(self) -> float | None:
        return None if self.c3 is None else self.c3 * self.c4

    @property
    def c2_analytic(self) -> float | None:
        return None if self.c3 is None else 3 * self.c3 ** 3 * self.c4

    def to_dict(self) -> dict:
        return {"mode": self.mode, "X": self.X.to_dict(), "Y": self.Y.to_dict(),
                "d_XY": self.d_XY, "c1_measured": self.c1_measured,
                "c2_measured": self.c2_measured, "c1_analytic": self.c1_analytic,
                "c2_analytic": self.c2_analytic, "c3": self.c3, "c4": self.c4,
                "epsilon": self.epsilon, "concavity_ok": self.concavity_ok,
                "max_second_difference": self.max_second_difference}


def build_xi_general(X: Region, Y: Region, grid: Grid, c3: float = 2.0,
                     constant_margin: float = 0.10) -> CutoffCertificate:
    d = region_distance(X, Y, grid)
    if d <= 0:
        raise CutoffError("regions must be separated (d_XY > 0)")
    if grid.spacing.max() > d / (8 * c3 * c3) * (1 + 1e-12):
        raise CutoffError(f"transition layer under-resolved: h = {grid.spacing.max():.4g} > "
                          f"d/(8 c3^2) = {d / (8 * c3 * c3):.4g}")
    eta = build_eta(c3)
    rho = build_regularized_distance(X, grid, c3)
    xi = eta(rho / d)
    # plateaus hold by comparability; exact values are then imposed
    if np.any(xi[X.mask] != 0.0) or np.any(np.abs(xi[Y.mask] - 1.0) > 1e-12):
        raise RuntimeError("internal error: cutoff plateau violated")
    xi[X.mask] = 0.0
    xi[Y.mask] = 1.0
    xi.setflags(write=False)
    c1 = float(gradient_norm(xi, grid).max() * d)
    c2 = float(hessian_norm(xi, grid).max() * d * d)
    cert = CutoffCertificate(xi, X, Y, d, c1, c2, "general", 0.0, None, float(c3), eta.c4)
    if c1 > cert.c1_analytic * (1 + constant_margin) or c2 > cert.c2_analytic * (1 + constant_margin):
        raise CutoffError(f"measured constants (c1={c1:.4g}, c2={c2:.4g}) exceed the analytic "
                          f"values ({cert.c1_analytic:.4g}, {cert.c2_analytic:.4g}) by more "
                          f"than {constant_margin:.0%}")
    return cert


def sharp_eta(mu, epsilon: float) -> np.ndarray:
    """Linear ramp ``eps/2 + (1 - eps) mu`` on ``[0, 1]`` with C^1 exponential caps."""
    mu = np.asarray(mu, dtype=float)
    e = float(epsilon)
    rate = 2 * (1 - e) / e
    lo = 0.5 * e * np.exp(rate * np.minimum(mu, 0.0))
    hi = 1 - 0.5 * e * np.exp(-rate * np.maximum(mu - 1, 0.0))
    return np.where(mu <= 0, lo, np.where(mu >= 1, hi, 0.5 * e + (1 - e) * mu))


def _slab(region: Region, axis: int):
    """``(bound, side)`` if ``region`` is all cells on one side of a coordinate value."""
    x = region.grid.centers[:, axis]
    inside = x[region.mask]
    lo, hi = inside.min(), inside.max()
    if np.array_equal(region.mask, x <= hi) and lo == x.min():
        return hi, -1
    if np.array_equal(region.mask, x >= lo) and hi == x.max():
        return lo, +1
    return None


def build_xi_sharp(X: Region, Y: Region, grid: Grid, epsilon: float = 0.1) -> CutoffCertificate:
    if not 0 < epsilon < 0.5:
        raise CutoffError("epsilon must lie in (0, 0.5)")
    if X.is_empty() or Y.is_empty():
        raise GridError("empty region has no distance")
    for axis in range(grid.dim):
        sx, sy = _slab(X, axis), _slab(Y, axis)
        if sx is None or sy is None or sx[1] == sy[1]:
            continue
        (ax_, side_x), (ay_, _) = sx, sy
        d = (ay_ - ax_) * -side_x
        if d > 0:
            break
    else:
        raise CutoffError("sharp mode requires separated slabs")
    x = grid.centers[:, axis]
    mu = (x - ax_) / d if side_x < 0 else (ax_ - x) / d
    xi = sharp_eta(mu, epsilon)
    xi.setflags(write=False)
    between = (mu > 0) & (mu < 1)
    grad = gradient_norm(xi, grid)
    c1 = float(grad.max() * d)
    second = _second_difference(xi, grid, axis) * d * d
    if grid.dim == 2:
        hess = hessian_norm(xi, grid) * d * d
    else:
        hess = np.abs(second)
    max_sd = float(second[between].max()) if between.any() else 0.0
    c2 = float(hess[between].max()) if between.any() else 0.0
    # round-off in a scaled second difference grows like eps (d/h)^2
    tol = max(1e-10, 16 * np.finfo(float).eps * (d / grid.spacing[axis]) ** 2)
    return CutoffCertificate(xi, X, Y, float(d), c1, c2, "sharp", float(epsilon),
                             bool(max_sd <= tol), None, None, max_sd)


# tilting exponent

@dataclass(frozen=True, eq=False)
class TiltingExponent:
    phi: np.ndarray
    mu: float
    certificate: CutoffCertificate | None = None

    @property
    def grid(self) -> Grid | None:
        return None if self.certificate is None else self.certificate.grid

    def weight(self, sign: int = 1) -> np.ndarray:
        """Pointwise ``exp(sign * phi)``."""
        return np.exp(sign * self.phi)


def build_phi(cert: CutoffCertificate, mu: float) -> TiltingExponent:
    if not mu >= 0:
        raise CutoffError(f"mu must be nonnegative, got {mu}")
    phi = mu * (1 - 2 * cert.xi)
    phi.setflags(write=False)
    return TiltingExponent(phi, float(mu), cert)


def gradient_support(phi: np.ndarray, grid: Grid, tol: float = 1e-12) -> Region:
    """Cells with at least one face neighbour carrying a different value of ``phi``."""
    mask = np.zeros(grid.n_cells, dtype=bool)
    for axis in range(grid.dim):
        left, right = neighbour_pairs(grid, axis)
        jump = np.abs(phi[left] - phi[right]) > tol
        mask[left[jump]] = True
        mask[right[jump]] = True
    return Region(grid, np.flatnonzero(mask), "grad phi")
