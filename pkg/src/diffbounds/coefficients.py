"""
Time-dependent coefficients ``(a, b, c)`` of ``Lu = div(a grad u) + <b, grad u> + c u``.

Each coefficient is given either as a closed-form evaluator ``f(points, t)``
(``points`` is the ``(N, dim)`` array of cell centres) or as sampled values.
Sampled values may carry a leading time axis matching ``times``; they are
then interpolated linearly in time.

Accepted shapes after evaluation (``N`` cells, dimension ``n``):

========  =============================================
``a``     scalar, ``(N,)`` (isotropic), ``(n, n)``, ``(N, n, n)``
``b``     scalar (1D only, or 0), ``(n,)``, ``(N,)`` (1D), ``(N, n)``
``c``     scalar, ``(N,)``
========  =============================================
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Any, Callable

import numpy as np

from .grid import NEUMANN, Grid, gradient


class CoefficientError(ValueError):
    pass


def _is_tabulated(value, times) -> bool:
    return (times is not None and isinstance(value, np.ndarray)
            and value.ndim >= 1 and value.shape[0] == len(times))


def _interp_time(value: np.ndarray, times: np.ndarray, t: float) -> np.ndarray:
    if t <= times[0]:
        return value[0]
    if t >= times[-1]:
        return value[-1]
    k = int(np.searchsorted(times, t)) - 1
    w = (t - times[k]) / (times[k + 1] - times[k])
    return (1 - w) * value[k] + w * value[k + 1]


@dataclass(frozen=True)
class CoefficientSet:
    """Coefficient triple on a time window ``(s, T)``.

    ``div_a`` and ``div_b`` are optional closed-form derivatives
    ``f(points, t)``; when present they replace the central-difference
    estimates.
    """

    a: Any = 0.0
    b: Any = 0.0
    c: Any = 0.0
    time_window: tuple[float, float] = (0.0, 1.0)
    times: np.ndarray | None = None
    div_a: Callable | None = None
    div_b: Callable | None = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.times is not None:
            times = np.asarray(self.times, dtype=float)
            if times.ndim != 1 or times.size < 1 or np.any(np.diff(times) <= 0):
                raise CoefficientError("sample times must be strictly increasing")
            object.__setattr__(self, "times", times)
        s, T = self.time_window
        if not T >= s:
            raise CoefficientError("time window must satisfy T >= s")

    # evaluation

    def _raw(self, value, grid: Grid, t: float, points: np.ndarray | None = None):
        if callable(value):
            return np.asarray(value(grid.centers if points is None else points, t), dtype=float)
        arr = np.asarray(value, dtype=float)
        if _is_tabulated(arr, self.times):
            return _interp_time(arr, self.times, t)
        return arr

    def sample_a(self, grid: Grid, t: float, points: np.ndarray | None = None) -> np.ndarray:
        """``a`` at time ``t`` as an ``(N, n, n)`` array."""
        n = grid.dim
        N = grid.n_cells if points is None else len(points)
        raw = self._raw(self.a, grid, t, points)
        if raw.ndim == 0 or raw.shape == (N,) or raw.shape == (N, 1) and n == 1:
            iso = np.broadcast_to(raw.reshape(-1) if raw.ndim else raw, (N,))
            out = iso[:, None, None] * np.eye(n)[None]
        elif raw.shape == (n, n):
            out = np.broadcast_to(raw, (N, n, n)).copy()
        elif raw.shape == (N, n, n):
            out = raw.copy()
        else:
            raise CoefficientError(f"cannot interpret a with shape {raw.shape} on a {n}D grid")
        return out

    def sample_b(self, grid: Grid, t: float, points: np.ndarray | None = None) -> np.ndarray:
        n = grid.dim
        N = grid.n_cells if points is None else len(points)
        raw = self._raw(self.b, grid, t, points)
        if raw.ndim == 0:
            if n > 1 and raw != 0:
                raise CoefficientError("scalar b is ambiguous in 2D; give a vector")
            return np.full((N, n), float(raw))
        if raw.shape == (n,):
            return np.broadcast_to(raw, (N, n)).copy()
        if raw.shape == (N,) and n == 1:
            return raw.reshape(N, 1).copy()
        if raw.shape == (N, n):
            return raw.copy()
        raise CoefficientError(f"cannot interpret b with shape {raw.shape} on a {n}D grid")

    def sample_c(self, grid: Grid, t: float, points: np.ndarray | None = None) -> np.ndarray:
        N = grid.n_cells if points is None else len(points)
        raw = self._raw(self.c, grid, t, points)
        if raw.ndim == 0:
            return np.full(N, float(raw))
        if raw.size == N:
            return raw.reshape(N).copy()
        raise CoefficientError(f"cannot interpret c with shape {raw.shape}")

    def sample(self, grid: Grid, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        a, b, c = self.sample_a(grid, t), self.sample_b(grid, t), self.sample_c(grid, t)
        for name, arr in (("a", a), ("b", b), ("c", c)):
            bad = ~np.isfinite(arr.reshape(grid.n_cells, -1)).all(axis=1)
            if bad.any():
                cell = int(np.flatnonzero(bad)[0])
                raise CoefficientError(
                    f"non-finite {name} at cell {cell} (x={grid.centers[cell].tolist()}), t={t}")
        return a, b, c

    def divergence_b(self, grid: Grid, t: float) -> np.ndarray:
        if self.div_b is not None:
            return np.broadcast_to(np.asarray(self.div_b(grid.centers, t), dtype=float),
                                   (grid.n_cells,)).copy()
        b = self.sample_b(grid, t)
        return sum(gradient(b[:, k], grid, k) for k in range(grid.dim))

    def row_divergence_a(self, grid: Grid, t: float) -> np.ndarray:
        """``(div a)^j = sum_i d_i a^{ij}`` as an ``(N, n)`` array."""
        n = grid.dim
        if self.div_a is not None:
            raw = np.asarray(self.div_a(grid.centers, t), dtype=float)
            return np.broadcast_to(raw.reshape(-1, n) if raw.ndim else raw,
                                   (grid.n_cells, n)).copy()
        a = self.sample_a(grid, t)
        out = np.zeros((grid.n_cells, n))
        for j in range(n):
            for i in range(n):
                out[:, j] += gradient(a[:, i, j], grid, i)
        return out

    def sample_times(self, time_samples: int) -> np.ndarray:
        if time_samples < 1:
            raise CoefficientError("time_samples must be positive")
        s, T = self.time_window
        if time_samples == 1 or T == s:
            return np.array([float(s)])
        return np.linspace(s, T, time_samples)

    def scaled(self, a_factor: float = 1.0, b_factor: float = 1.0) -> "CoefficientSet":
        """Coefficients with ``a`` and ``b`` multiplied by constant factors."""
        def scale(value, f):
            if f == 1.0:
                return value
            if callable(value):
                return lambda x, t, _v=value: f * np.asarray(_v(x, t))
            return f * np.asarray(value, dtype=float)

        def scale_div(fn, f):
            return None if fn is None else (lambda x, t, _g=fn: f * np.asarray(_g(x, t)))

        return replace(self, a=scale(self.a, a_factor), b=scale(self.b, b_factor),
                       div_a=scale_div(self.div_a, a_factor), div_b=scale_div(self.div_b, b_factor))

    def with_window(self, s: float, T: float) -> "CoefficientSet":
        return replace(self, time_window=(float(s), float(T)))

    def is_space_independent_a(self, grid: Grid, time_samples: int = 5, tol: float = 1e-12) -> bool:
        for t in self.sample_times(time_samples):
            a = self.sample_a(grid, t)
            if np.max(np.abs(a - a[:1])) > tol * max(1.0, np.max(np.abs(a))):
                return False
        return True

    def describe(self) -> dict:
        return {"name": self.name, "params": _jsonable(self.params),
                "time_window": list(self.time_window)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


# assumption checks

@dataclass(frozen=True)
class Check:
    ok: bool
    worst: float
    witness: dict | None = None

    def to_dict(self) -> dict:
        return {"ok": self.ok, "worst": self.worst, "witness": self.witness}


@dataclass(frozen=True)
class AssumptionReport:
    psd: Check
    divb_minus_c: Check
    c_nonpositive: Check
    boundary_b: Check
    regularity_finite: bool
    c_check_relaxed: bool = False
    window: tuple[float, float] = (0.0, 0.0)
    time_samples: int = 0

    @property
    def psd_ok(self) -> bool:
        return self.psd.ok

    @property
    def divb_minus_c_ok(self) -> bool:
        return self.divb_minus_c.ok

    @property
    def c_nonpositive_ok(self) -> bool:
        return self.c_nonpositive.ok

    @property
    def boundary_b_ok(self) -> bool:
        return self.boundary_b.ok

    @property
    def all_ok(self) -> bool:
        c_ok = self.c_nonpositive.ok or self.c_check_relaxed
        return (self.psd.ok and self.divb_minus_c.ok and c_ok and self.boundary_b.ok
                and self.regularity_finite)

    def failures(self) -> list[str]:
        out = []
        for name in ("psd", "divb_minus_c", "c_nonpositive", "boundary_b"):
            chk = getattr(self, name)
            if not chk.ok and not (name == "c_nonpositive" and self.c_check_relaxed):
                out.append(f"{name}: worst {chk.worst:.6g} at {chk.witness}")
        if not self.regularity_finite:
            out.append("regularity: non-finite difference quotients")
        return out

    def to_dict(self) -> dict:
        return {"psd": self.psd.to_dict(), "divb_minus_c": self.divb_minus_c.to_dict(),
                "c_nonpositive": self.c_nonpositive.to_dict(),
                "boundary_b": self.boundary_b.to_dict(),
                "regularity_finite": self.regularity_finite,
                "c_check_relaxed": self.c_check_relaxed, "all_ok": self.all_ok,
                "window": list(self.window), "time_samples": self.time_samples,
                "window_note": "suprema taken over sampled times in the configured window only"}


def min_eigenvalue(a: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of each symmetric matrix in an ``(N, n, n)`` stack."""
    n = a.shape[-1]
    if n == 1:
        return a[:, 0, 0].copy()
    if n == 2:
        tr = a[:, 0, 0] + a[:, 1, 1]
        disc = np.sqrt((a[:, 0, 0] - a[:, 1, 1]) ** 2 + 4 * a[:, 0, 1] * a[:, 1, 0])
        return 0.5 * (tr - disc)
    return np.linalg.eigvalsh(a)[:, 0]


def operator_norm(a: np.ndarray) -> np.ndarray:
    """Spectral norm of each symmetric matrix in an ``(N, n, n)`` stack."""
    n = a.shape[-1]
    if n == 1:
        return np.abs(a[:, 0, 0])
    if n == 2:
        tr = a[:, 0, 0] + a[:, 1, 1]
        disc = np.sqrt((a[:, 0, 0] - a[:, 1, 1]) ** 2 + 4 * a[:, 0, 1] * a[:, 1, 0])
        return np.maximum(np.abs(0.5 * (tr + disc)), np.abs(0.5 * (tr - disc)))
    return np.abs(np.linalg.eigvalsh(a)).max(axis=1)


def _witness(grid: Grid, cell: int, t: float, value: float) -> dict:
    return {"x": [float(v) for v in grid.centers[cell]], "cell": int(cell), "t": float(t),
            "value": float(value)}


def _boundary_normal_b(coeffs: CoefficientSet, grid: Grid, t: float):
    """Yield ``(cell, face_point, b.nu)`` over the Neumann faces of the box."""
    h = grid.spacing
    idx = np.arange(grid.n_cells).reshape(grid.shape)
    b_cells = coeffs.sample_b(grid, t)
    for axis in range(grid.dim):
        if grid.boundary[axis] != NEUMANN:
            continue
        for side, sign in ((0, -1.0), (grid.shape[axis] - 1, 1.0)):
            cells = np.take(idx, [side], axis=axis).ravel()
            inner = np.take(idx, [side - int(sign)], axis=axis).ravel()
            pts = grid.centers[cells].copy()
            pts[:, axis] += sign * h[axis] / 2
            if callable(coeffs.b):
                bf = coeffs.sample_b(grid, t, points=pts)[:, axis]
            else:
                bf = 1.5 * b_cells[cells, axis] - 0.5 * b_cells[inner, axis]
            yield cells, pts, sign * bf


def validate_assumptions(coeffs: CoefficientSet, grid: Grid, time_samples: int = 5,
                         tol: float = 1e-10, relax_c: bool = False) -> AssumptionReport:
    """Check ``a >= 0``, ``div b - c >= 0``, ``c <= 0`` and ``<b, nu> = 0`` on sampled times.

    With ``relax_c`` the sign of ``c`` is still measured but does not fail the
    report (only ``p = 1`` bounds may then be certified).
    """
    if time_samples < 2:
        raise CoefficientError("time_samples must be >= 2")
    psd = (np.inf, None)
    dbc = (np.inf, None)
    cpos = (-np.inf, None)
    bnu = (0.0, None)
    finite = True
    bscale = 0.0
    for t in coeffs.sample_times(time_samples):
        a, b, c = coeffs.sample(grid, t)
        bscale = max(bscale, float(np.max(np.abs(b))) if b.size else 0.0)
        lam = min_eigenvalue(0.5 * (a + np.swapaxes(a, 1, 2)))
        k = int(np.argmin(lam))
        if lam[k] < psd[0]:
            psd = (float(lam[k]), _witness(grid, k, t, lam[k]))
        divb = coeffs.divergence_b(grid, t)
        diva = coeffs.row_divergence_a(grid, t)
        if not (np.all(np.isfinite(divb)) and np.all(np.isfinite(diva))):
            finite = False
        g = divb - c
        k = int(np.argmin(g))
        if g[k] < dbc[0]:
            dbc = (float(g[k]), _witness(grid, k, t, g[k]))
        k = int(np.argmax(c))
        if c[k] > cpos[0]:
            cpos = (float(c[k]), _witness(grid, k, t, c[k]))
        for cells, pts, normal in _boundary_normal_b(coeffs, grid, t):
            j = int(np.argmax(np.abs(normal)))
            if abs(normal[j]) > abs(bnu[0]) or bnu[1] is None:
                w = _witness(grid, cells[j], t, normal[j])
                w["face_point"] = pts[j].tolist()
                bnu = (float(normal[j]), w)
    btol = tol + 1e-8 * bscale
    return AssumptionReport(
        psd=Check(psd[0] >= -tol, psd[0], None if psd[0] >= -tol else psd[1]),
        divb_minus_c=Check(dbc[0] >= -tol, dbc[0], None if dbc[0] >= -tol else dbc[1]),
        c_nonpositive=Check(cpos[0] <= tol, cpos[0], None if cpos[0] <= tol else cpos[1]),
        boundary_b=Check(abs(bnu[0]) <= btol, bnu[0], None if abs(bnu[0]) <= btol else bnu[1]),
        regularity_finite=finite,
        c_check_relaxed=relax_c,
        window=tuple(float(v) for v in coeffs.time_window),
        time_samples=int(time_samples),
    )


def compute_alpha_beta(coeffs: CoefficientSet, grid: Grid, time_samples: int = 5) -> tuple[float, float]:
    """``alpha = max ||a||_op`` and ``beta = max (|b| + |div a|)`` over cells and sampled times."""
    alpha, beta = 0.0, 0.0
    for t in coeffs.sample_times(time_samples):
        a, b, _ = coeffs.sample(grid, t)
        alpha = max(alpha, float(operator_norm(a).max()))
        diva = coeffs.row_divergence_a(grid, t)
        speed = np.linalg.norm(b, axis=1) + np.linalg.norm(diva, axis=1)
        beta = max(beta, float(speed.max()))
    return alpha, beta


# built-in families

def constant(alpha: float = 1.0, b=0.0, c: float = 0.0, window=(0.0, 1.0)) -> CoefficientSet:
    return CoefficientSet(a=float(alpha), b=np.asarray(b, dtype=float) if np.ndim(b) else float(b),
                          c=float(c), time_window=tuple(window), name="constant",
                          params={"alpha": alpha, "b": b, "c": c})


def ramp_profile(mu, R: float) -> np.ndarray:
    """The ramp ``A(mu) = 0, mu, R`` on ``mu <= 0``, ``0 < mu < R``, ``mu >= R``."""
    return np.clip(np.asarray(mu, dtype=float), 0.0, R)


def ramp(speed: float, R: float, window=(0.0, 1.0), offset: float = 0.0) -> CoefficientSet:
    """1D traveling ramp ``a(x, t) = A(x - offset - speed * t)``."""
    def a(x, t):
        return ramp_profile(x[:, 0] - offset - speed * t, R)
    return CoefficientSet(a=a, time_window=tuple(window), name="ramp",
                          params={"speed": speed, "R": R, "offset": offset})


def checkerboard_degenerate(alpha: float, zero_intervals, b=0.0, c: float = 0.0,
                            window=(0.0, 1.0), axis: int = 0) -> CoefficientSet:
    """``a = alpha`` except ``a = 0`` where the ``axis`` coordinate lies in one of ``zero_intervals``."""
    intervals = [tuple(map(float, iv)) for iv in zero_intervals]

    def a(x, t):
        out = np.full(len(x), float(alpha))
        for lo, hi in intervals:
            out[(x[:, axis] >= lo) & (x[:, axis] <= hi)] = 0.0
        return out
    return CoefficientSet(a=a, b=np.asarray(b, dtype=float) if np.ndim(b) else float(b), c=float(c),
                          time_window=tuple(window), name="checkerboard-degenerate",
                          params={"alpha": alpha, "zero_intervals": intervals, "b": b, "c": c})


def rotation_drift(omega: float, alpha: float = 0.0, center=(0.0, 0.0),
                   window=(0.0, 1.0)) -> CoefficientSet:
    """2D solid-body rotation ``b = omega (-(y - y0), x - x0)`` (divergence free)."""
    cx, cy = map(float, center)

    def b(x, t):
        return omega * np.stack([-(x[:, 1] - cy), x[:, 0] - cx], axis=1)
    return CoefficientSet(a=float(alpha), b=b, div_b=lambda x, t: np.zeros(len(x)),
                          time_window=tuple(window), name="rotation",
                          params={"omega": omega, "alpha": alpha, "center": list(center)})


def from_csv(path, grid: Grid, window=None) -> CoefficientSet:
    """Tabulated coefficients.

    Columns ``t, cell, a, b, c`` in 1D and ``t, cell, a11, a12, a22, b1, b2, c``
    in 2D; one row per (time, cell). Every time must list every cell.
    """
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise CoefficientError(f"{path}: no rows")
    times = np.unique([float(r["t"]) for r in rows])
    N, n = grid.n_cells, grid.dim
    a = np.full((len(times), N, n, n), np.nan)
    b = np.full((len(times), N, n), np.nan)
    c = np.full((len(times), N), np.nan)
    tindex = {t: k for k, t in enumerate(times)}
    for r in rows:
        k, i = tindex[float(r["t"])], int(r["cell"])
        if n == 1:
            a[k, i, 0, 0] = float(r["a"])
            b[k, i, 0] = float(r.get("b", 0) or 0)
        else:
            a11, a12, a22 = float(r["a11"]), float(r.get("a12", 0) or 0), float(r["a22"])
            a[k, i] = [[a11, a12], [a12, a22]]
            b[k, i] = [float(r.get("b1", 0) or 0), float(r.get("b2", 0) or 0)]
        c[k, i] = float(r.get("c", 0) or 0)
    if np.isnan(a).any() or np.isnan(b).any() or np.isnan(c).any():
        raise CoefficientError(f"{path}: every time sample must list every cell")
    win = tuple(window) if window is not None else (float(times[0]), float(times[-1]))
    return CoefficientSet(a=a, b=b, c=c, times=times if len(times) > 1 else None,
                          time_window=win, name="tabulated", params={"path": str(path)}) \
        if len(times) > 1 else CoefficientSet(a=a[0], b=b[0], c=c[0], time_window=win,
                                              name="tabulated", params={"path": str(path)})


FAMILIES = {
    "constant": constant,
    "ramp": ramp,
    "checkerboard-degenerate": checkerboard_degenerate,
    "rotation": rotation_drift,
}
