"""
Porous medium equation ``du/dt = div((q + m u^{m-1}) grad u)`` against the Barenblatt solution.

The nonlinear problem is advanced by lagged-coefficient Picard iteration:
each iterate freezes ``a = q + m u^{m-1}`` and takes one implicit linear
step with the evolution module.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import beta as beta_fn

from ..bounds import constant_k, theorem1_bound, validity_interval_ok
from ..coefficients import CoefficientSet
from ..cutoff import build_xi_general
from ..evolution import SolverConfig, SolverError, Stepper
from ..grid import Grid, Region, gradient, lp_norm, region_distance


@dataclass(frozen=True)
class BarenblattParams:
    """Self-similar solution ``t^{-n gamma} F(x t^{-gamma})``, ``F = (C - k_B |xi|^2)_+^{1/(m-1)}``."""

    n: int = 1
    m: float = 2.0
    C: float = 1.0

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError("n must be 1 or 2")
        if not self.m > 1:
            raise ValueError("m must exceed 1")
        if not self.C > 0:
            raise ValueError("C must be positive")

    @property
    def gamma(self) -> float:
        return 1.0 / (self.n * (self.m - 1) + 2)

    @property
    def k_B(self) -> float:
        return (self.m - 1) * self.gamma / (2 * self.m)

    def radius(self, t: float) -> float:
        return float(np.sqrt(self.C / self.k_B) * t ** self.gamma)

    def profile(self, x, t: float) -> np.ndarray:
        """``x`` holds scalar positions for ``n = 1`` and has a trailing axis of length 2 for ``n = 2``."""
        x = np.asarray(x, dtype=float)
        if self.n == 1 and x.ndim >= 1 and x.shape[-1] == 1 and x.ndim > 1:
            x = x[..., 0]
        r2 = x ** 2 if self.n == 1 else np.sum(x ** 2, axis=-1)
        xi2 = r2 * t ** (-2 * self.gamma)
        F = np.maximum(self.C - self.k_B * xi2, 0.0) ** (1.0 / (self.m - 1))
        return t ** (-self.n * self.gamma) * F

    def mass(self) -> float:
        p = 1.0 / (self.m - 1)
        if self.n == 1:
            return float(np.sqrt(self.C / self.k_B) * self.C ** p * beta_fn(0.5, p + 1))
        return float(np.pi * self.C ** (p + 1) / (self.k_B * (p + 1)))

    @classmethod
    def unit_mass(cls, n: int = 1, m: float = 2.0) -> "BarenblattParams":
        C = brentq(lambda c: cls(n, m, c).mass() - 1.0, 1e-12, 1e6, xtol=1e-15, rtol=1e-15)
        return cls(n, m, C)

    def cell_averages(self, grid: Grid, t: float, order: int = 16) -> np.ndarray:
        """Cell averages by tensor Gauss-Legendre quadrature, splitting 1D cells at the support edge."""
        nodes, weights = np.polynomial.legendre.leggauss(order)
        h = grid.spacing
        if grid.dim == 1:
            lo = grid.centers[:, 0] - h[0] / 2
            hi = lo + h[0]
            Rt = self.radius(t)
            out = np.zeros(grid.n_cells)
            for a, b in ((lo, np.clip(hi, None, -Rt)), (np.maximum(lo, -Rt), np.minimum(hi, Rt)),
                         (np.clip(lo, Rt, None), hi)):
                w = np.maximum(b - a, 0.0)
                pts = 0.5 * (a + b)[:, None] + 0.5 * w[:, None] * nodes[None, :]
                out += 0.5 * w * (self.profile(pts, t) @ weights)
            return out / h[0]
        gx = grid.centers[:, None, None, :] + 0.5 * np.stack(np.meshgrid(
            nodes * h[0], nodes * h[1], indexing="ij"), axis=-1)[None]
        W = np.outer(weights, weights) / 4
        return np.einsum("nij,ij->n", self.profile(gx, t), W)


@dataclass
class PorousMediumReport:
    params: BarenblattParams
    t0: float
    t_final: float
    times: np.ndarray
    snapshots: list
    grid: Grid
    mass_drift: float
    l1_error: float | None
    support_radius: float
    support_radius_exact: float
    radius_2t0: float | None
    alpha_u: float
    beta_u: float
    gradient_a_error: float | None
    picard_iterations_max: int
    certification: list = field(default_factory=list)

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[-1]

    def to_dict(self) -> dict:
        return {"scenario": "porous-medium", "n": self.params.n, "m": self.params.m,
                "C": self.params.C, "gamma": self.params.gamma, "k_B": self.params.k_B,
                "t0": self.t0, "t_final": self.t_final, "mass_drift": self.mass_drift,
                "l1_error": self.l1_error, "support_radius": self.support_radius,
                "support_radius_exact": self.support_radius_exact,
                "radius_2t0": self.radius_2t0,
                "radius_2t0_exact": self.params.radius(2 * self.t0),
                "alpha_u": self.alpha_u, "beta_u": self.beta_u,
                "gradient_a_error": self.gradient_a_error,
                "picard_iterations_max": self.picard_iterations_max,
                "certification": self.certification}


def support_radius(u: np.ndarray, grid: Grid, threshold: float = 1e-6) -> float:
    """Largest centre distance from the origin among cells with ``u > threshold``."""
    mask = u > threshold
    if not mask.any():
        return 0.0
    return float(np.linalg.norm(grid.centers[mask], axis=1).max())


def _coefficient(u: np.ndarray, q, m: float) -> np.ndarray:
    return q + m * np.maximum(u, 0.0) ** (m - 1)


def picard_step(u: np.ndarray, grid: Grid, t: float, dt: float, q, m: float, epsilon: float,
                tol: float = 1e-8, max_iter: int = 100) -> tuple[np.ndarray, int]:
    """One implicit step of the nonlinear equation; returns the new field and the iteration count."""
    cfg = SolverConfig(epsilon=epsilon, dt=dt)
    scale = max(float(np.abs(u).max()), 1e-300)
    it = u
    for k in range(1, max_iter + 1):
        coeffs = CoefficientSet(a=_coefficient(it, q, m), time_window=(t, t + dt), name="pme-frozen")
        new = Stepper(coeffs, grid, cfg).step(u, t, t + dt)
        if float(np.abs(new - it).max()) <= tol * scale:
            return new, k
        it = new
    raise SolverError(f"Picard iteration did not converge in {max_iter} iterations at t = {t:.6g}")


def evolve(u0: np.ndarray, grid: Grid, t0: float, t1: float, q, m: float, epsilon: float,
           dt_rel: float = 0.01, dt_max: float = np.inf, record=(), tol: float = 1e-8):
    """Geometric time stepping ``dt = min(dt_rel t, dt_max)`` from ``t0`` to ``t1``.

    Returns the final field, the snapshots at the requested ``record`` times
    (hit exactly), the mass history and the largest Picard count.
    """
    u = grid.field(u0)
    t = t0
    stops = sorted(set(float(r) for r in record if t0 < r < t1)) + [t1]
    snaps, masses = {}, [lp_norm(u, 1, grid)]
    worst = 0
    for stop in stops:
        while t < stop - 1e-14 * stop:
            dt = min(dt_rel * t, dt_max, stop - t)
            u, k = picard_step(u, grid, t, dt, q, m, epsilon, tol)
            worst = max(worst, k)
            t = t + dt if stop - (t + dt) > 1e-14 * stop else stop
            masses.append(float(grid.cell_volume * u.sum()))
        snaps[stop] = u.copy()
    return u, snaps, np.array(masses), worst


def porous_medium_scenario(params: BarenblattParams, q=0.0, grid: Grid | None = None,
                           t_final: float = 1.0, cfg: SolverConfig | None = None, *,
                           t0: float = 0.01, threshold: float = 1e-6, dt_rel: float = 0.01,
                           certify_d: float | None = 0.5, c3: float = 2.0,
                           ps=(1.0, 2.0, np.inf)) -> PorousMediumReport:
    """Evolve the Barenblatt profile from ``t0`` to ``t_final`` and compare with the exact solution.

    With ``certify_d`` the nonlinear diffusion bound is checked at three
    times inside its validity window for ``Y`` the initial support and ``X``
    the cells at distance ``>= certify_d`` from it.
    """
    if grid is None:
        grid = Grid.interval(-3.0, 3.0, 1024)
    if grid.dim != params.n:
        raise ValueError("grid dimension must match params.n")
    cfg = cfg or SolverConfig(epsilon=1e-6)
    eps = 1e-6 if cfg.epsilon is None else float(cfg.epsilon)
    q_arr = np.broadcast_to(np.asarray(q, dtype=float), (grid.n_cells,)).copy()
    if np.any(q_arr < 0):
        raise ValueError("q must be positive semi-definite")
    m = params.m
    u0 = params.cell_averages(grid, t0)
    mass0 = lp_norm(u0, 1, grid)

    u, snaps, masses, worst = evolve(u0, grid, t0, t_final, q_arr, m, eps, dt_rel,
                                     dt_max=cfg.dt if cfg.dt < t_final else np.inf,
                                     record=(2 * t0,))
    exact_q0 = bool(np.all(q_arr == 0))
    l1 = None
    grad_err = None
    if exact_q0:
        ex = params.cell_averages(grid, t_final)
        l1 = lp_norm(u - ex, 1, grid) / lp_norm(ex, 1, grid)
        a = _coefficient(u, q_arr, m)
        x = grid.centers
        R = params.radius(t_final)
        inner = np.linalg.norm(x, axis=1) <= 0.8 * R
        far = np.linalg.norm(x, axis=1) >= 0.1 * R
        sel = inner & far
        errs = []
        for k in range(grid.dim):
            ga = gradient(a, grid, k)
            target = -(m - 1) * params.gamma * x[:, k] / t_final
            errs.append(np.abs(ga[sel] - target[sel]) / np.abs(target[sel]))
        grad_err = float(np.max(np.concatenate(errs)))
    r2 = snaps.get(2 * t0)
    a_fin = _coefficient(u, q_arr, m)
    a_init = _coefficient(u0, q_arr, m)
    alpha_u = float(max(a_init.max(), a_fin.max()))
    beta_u = float(max(np.linalg.norm(np.stack([gradient(a_, grid, k) for k in range(grid.dim)], 1),
                                      axis=1).max() for a_ in (a_init, a_fin)))
    report = PorousMediumReport(
        params, t0, t_final, np.array([t0, t_final]), [u0, u], grid,
        float(np.abs(masses - mass0).max() / mass0), l1, support_radius(u, grid, threshold),
        params.radius(t_final),
        None if r2 is None else support_radius(r2, grid, threshold),
        alpha_u, beta_u, grad_err, worst)
    if certify_d is not None:
        report.certification = certify_porous_medium(u0, grid, t0, q_arr, m, eps, certify_d, c3,
                                                     ps, threshold)
    return report


def certify_porous_medium(u0: np.ndarray, grid: Grid, t0: float, q, m: float, eps: float,
                          d: float, c3: float = 2.0, ps=(1.0, 2.0, np.inf),
                          threshold: float = 0.0) -> list[dict]:
    """``||chi_X u_t||_p <= exp(-d^2/(4 k^2 alpha t)) ||u_0||_p`` at three times in the window."""
    Y = Region(grid, np.flatnonzero(u0 > threshold), "supp u0")
    dist = np.min(np.linalg.norm(grid.centers[:, None, :] - Y.points()[None, :, :], axis=2), axis=1) \
        if Y.size < 4096 else None
    X = Region(grid, np.flatnonzero(dist >= d), "far")
    dXY = region_distance(X, Y, grid)
    cert = build_xi_general(X, Y, grid, c3)
    k = constant_k(grid.dim, max(cert.c1_measured, 1.0), cert.c2_measured)
    # alpha(u), beta(u) are suprema over the solution; iterate once to make them consistent
    alpha = float(_coefficient(u0, q, m).max()) + eps
    beta = float(np.abs(gradient(_coefficient(u0, q, m), grid, 0)).max()) if grid.dim == 1 else \
        float(np.linalg.norm(np.stack([gradient(_coefficient(u0, q, m), grid, j)
                                       for j in range(grid.dim)], 1), axis=1).max())
    _, t_max = validity_interval_ok(dXY, 1.0, alpha, beta, k)
    times = [t_max / 3, 2 * t_max / 3, t_max]
    _, snaps, _, _ = evolve(u0, grid, t0, t0 + times[-1], q, m, eps, dt_rel=1.0,
                            dt_max=t_max / 30, record=[t0 + s for s in times[:-1]])
    out = []
    sols = [snaps[t0 + s] for s in times[:-1]] + [snaps[t0 + times[-1]]]
    a_all = [_coefficient(s, q, m) for s in sols]
    alpha = max(alpha, max(float(a.max()) for a in a_all) + eps)
    beta = max(beta, max(float(np.abs(gradient(a, grid, 0)).max()) for a in a_all))
    for s, u in zip(times, sols):
        valid, tm = validity_interval_ok(dXY, s, alpha, beta, k)
        pred = theorem1_bound(dXY, s, alpha, k)
        for p in ps:
            meas = lp_norm(u * X.mask, p, grid) / lp_norm(u0, p, grid)
            out.append({"scenario": "porous-medium", "p": "inf" if np.isinf(p) else int(p), "d": dXY,
                        "t": s, "alpha": alpha, "beta": beta, "k": k,
                        "k_analytic": constant_k(grid.dim, cert.c1_analytic, cert.c2_analytic),
                        "validity": valid, "predicted": pred, "measured": meas,
                        "pass": (meas <= pred) if valid else None})
    return out
