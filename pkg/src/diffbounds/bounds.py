"""
Diffusion bound formulas, discrete operator norms and bound certification.

The bound of the general theorem reads

    ||chi_X P_{t,s} chi_Y||_{p -> p} <= exp(-d^2 / (4 k^2 alpha (t - s)))

inside the ballistic window ``k (alpha/d + beta)(t - s) <= d``. The sharp
variant (``a`` independent of ``x``, no drift) has ``k = 1`` and no window;
the tail variant bounds the kernel mass outside ``B_r(x)`` by
``exp(-r^2 / (64 k^2 alpha (t - s)))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .coefficients import (AssumptionReport, CoefficientSet, compute_alpha_beta,
                           validate_assumptions)
from .cutoff import (CutoffCertificate, TiltingExponent, build_xi_general, build_xi_sharp,
                     gradient_support)
from .evolution import (PropagatorMatrix, SolverConfig, apply_adjoint, apply_propagator,
                        assemble_propagator, generator, numerical_diffusivity, resolve_epsilon,
                        step_times)
from .grid import Grid, Region, gradient, indicator, region_distance

MODES = ("theorem1", "sharp", "tail")


class CertificationError(ValueError):
    pass


class AssumptionError(CertificationError):
    def __init__(self, report: AssumptionReport):
        super().__init__("standing assumptions violated: " + "; ".join(report.failures()))
        self.report = report


# closed-form pieces

def decay_rate_G(mu: float, d: float, t: float, alpha: float, beta: float, c1: float,
                 c2: float, n: int) -> tuple[float, bool]:
    """``G(mu)`` and whether the linear coefficient (the bracket) is positive."""
    if not (d > 0 and t > 0 and alpha > 0):
        raise ValueError("d, t and alpha must be positive")
    bracket = 1.0 - t * (alpha * n * c2 / d ** 2 + beta * c1 / d)
    G = -(4 * alpha * c1 ** 2 * t / d ** 2) * mu ** 2 + 2 * bracket * mu
    return float(G), bool(bracket > 0)


def optimize_G(d: float, t: float, alpha: float, beta: float, c1: float, c2: float,
               n: int) -> tuple[float, float]:
    """Vertex ``(mu*, G*)`` of the quadratic ``G``; ``(0, 0)`` when the bracket is not positive."""
    if not (d > 0 and t > 0 and alpha > 0):
        raise ValueError("d, t and alpha must be positive")
    bracket = 1.0 - t * (alpha * n * c2 / d ** 2 + beta * c1 / d)
    if bracket <= 0:
        return 0.0, 0.0
    q = d ** 2 / (4 * alpha * c1 ** 2 * t)
    return float(bracket * q), float(bracket ** 2 * q)


def constant_k(n: int, c1: float, c2: float, delta: float = 1.0) -> float:
    if not c1 >= 1:
        raise ValueError(f"c1 must be >= 1, got {c1}")
    if not c2 >= 0:
        raise ValueError(f"c2 must be >= 0, got {c2}")
    return float((1 + delta) * max(n * c2, c1))


def validity_interval_ok(d: float, t_minus_s: float, alpha: float, beta: float,
                         k: float) -> tuple[bool, float]:
    """``(k (alpha/d + beta)(t - s) <= d, largest admissible t - s)``."""
    if not d > 0:
        raise ValueError("d must be positive")
    rate = k * (alpha / d + beta)
    t_max = np.inf if rate == 0 else d / rate
    return bool(t_minus_s <= t_max), float(t_max)


def theorem1_bound(d: float, t_minus_s: float, alpha: float, k: float) -> float:
    if t_minus_s <= 0 or alpha == 0:
        return 0.0 if d > 0 else 1.0
    return float(np.exp(-d * d / (4 * k * k * alpha * t_minus_s)))


def sharp_bound(d: float, t_minus_s: float, alpha: float) -> float:
    return theorem1_bound(d, t_minus_s, alpha, 1.0)


def tail_bound(r: float, t_minus_s: float, alpha: float, k: float) -> float:
    if t_minus_s <= 0 or alpha == 0:
        return 0.0 if r > 0 else 1.0
    return float(np.exp(-r * r / (64 * k * k * alpha * t_minus_s)))


# operator norms

def _power_iteration(B: np.ndarray, max_iter: int = 200, tol: float = 1e-8) -> float:
    if B.size == 0:
        return 0.0
    v = np.ones(B.shape[1]) / np.sqrt(B.shape[1])
    sigma = 0.0
    for _ in range(max_iter):
        w = B.T @ (B @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        new = float(np.sqrt(nw))
        v = w / nw
        if abs(new - sigma) <= tol * new:
            return new
        sigma = new
    return sigma


def measure_opnorm(M: PropagatorMatrix, X: Region, Y: Region, p: float) -> float:
    """``||chi_X M chi_Y||_{p -> p}`` for ``p`` in ``{1, 2, inf}``.

    On a uniform grid the cell-measure weights cancel, so the norms are those
    of the ``X``-rows by ``Y``-columns block.
    """
    B = np.abs(M.block(X, Y))
    if B.size == 0:
        return 0.0
    # one row-sum kernel for both endpoints keeps the duality identity exact
    if p == 1:
        return float(np.ascontiguousarray(B.T).sum(axis=1).max())
    if np.isinf(p):
        return float(np.ascontiguousarray(B).sum(axis=1).max())
    if p == 2:
        return _power_iteration(B)
    raise ValueError(f"p must be 1, 2 or inf, got {p}")


# tilted generator

def _phi_values(phi) -> np.ndarray:
    return phi.phi if isinstance(phi, TiltingExponent) else np.asarray(phi, dtype=float)


def _check_localized(phi: np.ndarray, U: Region, tol: float = 1e-12):
    moving = gradient_support(phi, U.grid, tol)
    if np.any(moving.mask & ~U.mask):
        raise CertificationError("tilting exponent not localized to U")


def tilted_generator_sup(phi, coeffs: CoefficientSet, U: Region, time_samples: int = 5, *,
                         method: str = "fd", epsilon: float = 0.0,
                         times: Sequence[float] | None = None) -> float:
    """``A = sup_{U, t} (div(a grad phi) + <a grad phi, grad phi> - <b, grad phi>)_+``.

    ``method="fd"`` evaluates the continuum expression with central
    differences. ``method="discrete"`` returns the largest column sum of
    ``e^phi L_h e^-phi`` over ``U``, the exact growth rate of the tilted
    semi-discrete mass.
    """
    grid = U.grid
    values = _phi_values(phi)
    _check_localized(values, U)
    ts = coeffs.sample_times(time_samples) if times is None else np.asarray(times, dtype=float)
    if U.is_empty():
        return 0.0
    best = -np.inf
    if method == "fd":
        g = np.stack([gradient(values, grid, k) for k in range(grid.dim)], axis=1)
        for t in ts:
            a, b, _ = coeffs.sample(grid, t)
            a = a + epsilon * np.eye(grid.dim)
            q = np.einsum("nij,nj->ni", a, g)
            div_q = sum(gradient(q[:, k], grid, k) for k in range(grid.dim))
            val = div_q + np.einsum("ni,ni->n", q, g) - np.einsum("ni,ni->n", b, g)
            best = max(best, float(val[U.mask].max()))
    elif method == "discrete":
        wp, wm = np.exp(values), np.exp(-values)
        for t in ts:
            L = generator(coeffs, grid, t, epsilon)
            cols = (L.T @ wp) * wm
            best = max(best, float(cols[U.mask].max()))
    else:
        raise ValueError(f"unknown method {method!r}")
    return max(best, 0.0)


class TiltedCheck(NamedTuple):
    lhs: float
    rhs: float
    passed: bool
    A: float


def check_tilted_propagator_inequality(phi, coeffs: CoefficientSet, M: PropagatorMatrix,
                                       v: np.ndarray, U: Region, *, cfg: SolverConfig | None = None,
                                       A: float | None = None, slack: float = 1e-6,
                                       method: str = "discrete") -> TiltedCheck:
    """``sum e^phi M(e^-phi v) <= e^{(t-s) A} sum v`` (measure weighted).

    Without an explicit ``A`` the discrete growth rate is evaluated at the
    solver's step times with the solver's regularization.
    """
    grid = M.grid
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("v must be nonnegative")
    values = _phi_values(phi)
    if A is None:
        cfg = cfg or SolverConfig()
        eps = resolve_epsilon(cfg, coeffs, grid)
        times = step_times(M.s, M.t, cfg.dt)[1:] if M.t > M.s else [M.s]
        A = tilted_generator_sup(values, coeffs, U, method=method, epsilon=eps, times=times)
    src = np.exp(-values) * v
    if not M.full and np.any(src[np.setdiff1d(np.arange(grid.n_cells), M.cols)] != 0):
        raise ValueError("propagator is missing columns where v is nonzero")
    out = M.entries @ src[M.cols]
    w = grid.cell_volume
    lhs = float(w * np.sum(np.exp(values) * out))
    rhs = float(np.exp((M.t - M.s) * A) * w * v.sum())
    return TiltedCheck(lhs, rhs, bool(lhs <= rhs * (1 + slack)), float(A))


# certification

@dataclass(frozen=True, eq=False)
class BoundComparison:
    X: Region
    Y: Region
    d_XY: float
    p: float
    s: float
    t: float
    alpha: float
    beta: float
    k: float
    validity_ok: bool
    predicted_bound: float
    measured_norm: float
    mode: str
    alpha_effective: float
    alpha_num: float = 0.0
    epsilon: float = 0.0
    slack: float = 0.02
    t_max: float = np.inf
    k_analytic: float | None = None
    c1: float | None = None
    c2: float | None = None
    r: float | None = None
    certificate: CutoffCertificate | None = field(default=None, repr=False)
    label: str = ""

    @property
    def applicable(self) -> bool:
        return self.validity_ok

    @property
    def passed(self) -> bool | None:
        """``None`` when outside the validity interval (not applicable)."""
        if not self.validity_ok:
            return None
        return bool(self.measured_norm <= self.predicted_bound * (1 + self.slack))

    @property
    def predicted_bound_analytic_k(self) -> float | None:
        if self.k_analytic is None:
            return None
        if self.mode == "tail":
            return tail_bound(self.r, self.t - self.s, self.alpha_effective, self.k_analytic)
        return theorem1_bound(self.d_XY, self.t - self.s, self.alpha_effective, self.k_analytic)

    def to_dict(self) -> dict:
        return {"label": self.label, "mode": self.mode, "p": _p_repr(self.p), "s": self.s,
                "t": self.t, "d_XY": self.d_XY, "r": self.r, "alpha": self.alpha,
                "beta": self.beta, "alpha_num": self.alpha_num, "epsilon": self.epsilon,
                "alpha_effective": self.alpha_effective, "k": self.k,
                "k_analytic": self.k_analytic, "c1": self.c1, "c2": self.c2,
                "validity_ok": self.validity_ok, "t_max": _finite(self.t_max),
                "predicted_bound": self.predicted_bound,
                "predicted_bound_analytic_k": self.predicted_bound_analytic_k,
                "measured_norm": self.measured_norm, "slack": self.slack,
                "passed": self.passed, "X": self.X.to_dict(), "Y": self.Y.to_dict()}


def _p_repr(p):
    return "inf" if np.isinf(p) else (int(p) if float(p).is_integer() else p)


def _finite(x):
    return None if not np.isfinite(x) else float(x)


def _check_sharp_fit(coeffs: CoefficientSet, grid: Grid, time_samples: int):
    if not coeffs.is_space_independent_a(grid, time_samples):
        raise CertificationError("sharp mode requires a independent of x")
    for t in coeffs.sample_times(time_samples):
        if np.any(coeffs.sample_b(grid, t) != 0):
            raise CertificationError("sharp mode requires b = 0")


def certify_dg_bounds(coeffs: CoefficientSet, grid: Grid, X: Region | None, Y: Region | None,
                      s: float, t: float, ps: Sequence[float], cfg: SolverConfig,
                      mode: str = "theorem1", *, c3: float = 2.0, sharp_epsilon: float = 0.1,
                      slack: float = 0.02, time_samples: int = 5, k: float | None = None,
                      center: Sequence[float] | None = None, r: float | None = None,
                      relax_c: bool = False, propagator: PropagatorMatrix | None = None,
                      label: str = "") -> list[BoundComparison]:
    """Certify the diffusion bound for each norm index in ``ps``.

    Tail mode ignores ``X`` and ``Y`` and builds ``B_{r/4}(center)`` and
    ``B_{r/2}(center)^c`` itself; the measured quantity is the largest kernel
    mass outside ``B_r(x)`` over ``x`` in the inner ball.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if not t > s:
        raise ValueError("need t > s")
    ps = [float(p) for p in ps]
    if relax_c and any(p != 1 for p in ps):
        raise CertificationError("the c <= 0 check may only be relaxed for p = 1")
    window = coeffs.with_window(s, t)
    report = validate_assumptions(window, grid, max(time_samples, 2), relax_c=relax_c)
    if not report.all_ok:
        raise AssumptionError(report)
    alpha, beta = compute_alpha_beta(window, grid, time_samples)
    eps = resolve_epsilon(cfg, coeffs, grid)
    alpha_num = numerical_diffusivity(window, grid, time_samples)
    alpha_eff = max(alpha + eps, alpha_num)
    n = grid.dim

    if mode == "tail":
        if center is None or r is None:
            raise CertificationError("tail mode needs center and r")
        X = grid.ball_region(center, r / 4, "B(r/4)")
        Y = grid.ball_region(center, r / 2, "B(r/2)^c", complement=True)
    if X is None or Y is None or X.is_empty() or Y.is_empty():
        raise CertificationError("X and Y must be non-empty regions")
    d = region_distance(X, Y, grid)

    k_an = None
    cert = None
    c1 = c2 = None
    if mode == "sharp":
        _check_sharp_fit(window, grid, time_samples)
        cert = build_xi_sharp(X, Y, grid, sharp_epsilon)
        if cert.c1_measured > 1 + 1e-12 or not cert.concavity_ok:
            raise CertificationError("sharp cutoff certificate failed")
        k_used, valid, t_max = 1.0, True, np.inf
    else:
        cert = build_xi_general(X, Y, grid, c3)
        c1, c2 = cert.c1_measured, cert.c2_measured
        k_an = constant_k(n, cert.c1_analytic, cert.c2_analytic)
        k_used = constant_k(n, max(c1, 1.0), c2) if k is None else float(k)
        valid, t_max = validity_interval_ok(d, t - s, alpha_eff, beta, k_used)

    measured = _measure(coeffs, grid, X, Y, s, t, ps, cfg, mode, r, propagator)
    out = []
    for p in ps:
        if mode == "tail":
            pred = tail_bound(r, t - s, alpha_eff, k_used)
        else:
            pred = theorem1_bound(d, t - s, alpha_eff, k_used)
        out.append(BoundComparison(X, Y, d, p, float(s), float(t), alpha, beta, k_used, valid,
                                   pred, measured[p], mode, alpha_eff, alpha_num, eps, slack,
                                   t_max, k_an, c1, c2, r, cert, label))
    return out


def certify_dg_bound(coeffs: CoefficientSet, grid: Grid, X: Region | None, Y: Region | None,
                     s: float, t: float, p: float, cfg: SolverConfig, mode: str = "theorem1",
                     **kwargs) -> BoundComparison:
    return certify_dg_bounds(coeffs, grid, X, Y, s, t, [p], cfg, mode, **kwargs)[0]


def _measure(coeffs, grid, X, Y, s, t, ps, cfg, mode, r, propagator) -> dict:
    out = {}
    if mode == "tail":
        rows = X.cell_indices
        E = np.zeros((grid.n_cells, rows.size))
        E[rows, np.arange(rows.size)] = 1.0
        R = apply_adjoint(E, coeffs, grid, s, t, cfg) if propagator is None else \
            propagator.dense()[rows].T
        dist = np.linalg.norm(grid.centers[:, None, :] - grid.centers[rows][None, :, :], axis=2)
        tails = np.where(dist >= r, np.abs(R), 0.0).sum(axis=0)
        value = float(tails.max())
        return {p: value for p in ps}
    if propagator is None and 2.0 in ps:
        propagator = assemble_propagator(coeffs, grid, s, t, cfg, source=Y)
    for p in ps:
        if propagator is not None:
            out[p] = measure_opnorm(propagator, X, Y, p)
        elif np.isinf(p):
            u = apply_propagator(indicator(Y), coeffs, grid, s, t, cfg)
            out[p] = float(np.abs(u[X.mask]).max())
        elif p == 1:
            w = apply_adjoint(indicator(X), coeffs, grid, s, t, cfg)
            out[p] = float(np.abs(w[Y.mask]).max())
        else:
            raise ValueError(f"p must be 1, 2 or inf, got {p}")
    return out
