"""
Finite-volume solver for ``du/dt = div(a_eps grad u) + <b, grad u> + c u`` with
no-flux boundaries, and discrete propagators.

The semi-discrete generator ``L_h`` has nonnegative off-diagonal entries,
row sums ``c`` and column sums ``c - div_h b``. Under the standing sign
conditions every integrator below therefore maps nonnegative data to
nonnegative data and contracts both the discrete L^1 and L^inf norms.

Integrators
-----------
``implicit-euler``
    ``(I - dt L(t_{n+1})) u_{n+1} = u_n``.
``imex``
    diffusion and reaction implicit, upwind advection explicit (CFL limited).
``exponential``
    ``u_{n+1} = exp(dt L(t_{n+1})) u_n`` by uniformization: with
    ``lam >= max(-diag L)`` and ``P = I + L / lam >= 0``,
    ``exp(dt L) = sum_k Poisson(k; lam dt) P^k``. Every term is nonnegative,
    so tiny entries keep full relative accuracy.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from math import ceil, log

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .coefficients import CoefficientSet, compute_alpha_beta
from .grid import Grid, Region, lp_norm, neighbour_pairs

INTEGRATORS = ("implicit-euler", "imex", "exponential")


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """``epsilon = None`` selects ``1e-8`` times the reference diffusivity (or 1)."""

    epsilon: float | None = None
    dt: float = 1e-3
    time_integrator: str = "implicit-euler"
    epsilon_schedule: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.epsilon is not None and not self.epsilon >= 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")
        if self.time_integrator not in INTEGRATORS:
            raise ValueError(f"unknown time integrator {self.time_integrator!r}; "
                             f"choose from {INTEGRATORS}")
        if self.epsilon_schedule is not None:
            object.__setattr__(self, "epsilon_schedule", tuple(float(e) for e in self.epsilon_schedule))

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "dt": self.dt, "time_integrator": self.time_integrator,
                "epsilon_schedule": None if self.epsilon_schedule is None else list(self.epsilon_schedule)}


def resolve_epsilon(cfg: SolverConfig, coeffs: CoefficientSet, grid: Grid) -> float:
    if cfg.epsilon is not None:
        return float(cfg.epsilon)
    alpha, _ = compute_alpha_beta(coeffs, grid, 3)
    return 1e-8 * (alpha if alpha > 0 else 1.0)


def numerical_diffusivity(coeffs: CoefficientSet, grid: Grid, time_samples: int = 5) -> float:
    """``alpha_num = max |b| h / 2``, the diffusion injected by first-order upwinding."""
    bmax = max(float(np.abs(coeffs.sample_b(grid, t)).max())
               for t in coeffs.sample_times(time_samples))
    return bmax * float(grid.spacing.max()) / 2


# generator assembly

@dataclass(frozen=True)
class GeneratorParts:
    diffusion: sp.csr_matrix
    advection: sp.csr_matrix
    reaction: np.ndarray

    def total(self) -> sp.csr_matrix:
        return (self.diffusion + self.advection + sp.diags(self.reaction)).tocsr()


def _check_diagonal(a: np.ndarray):
    if a.shape[-1] == 2:
        off = np.abs(a[:, 0, 1]) + np.abs(a[:, 1, 0])
        if np.any(off > 1e-14 * (1 + np.abs(a).max())):
            raise SolverError("off-diagonal diffusion is not supported by the two-point flux scheme")


def _face_data(coeffs: CoefficientSet, grid: Grid, t: float, epsilon: float):
    a, b, c = coeffs.sample(grid, t)
    _check_diagonal(a)
    faces = []
    for axis in range(grid.dim):
        left, right = neighbour_pairs(grid, axis)
        h = grid.spacing[axis]
        diff = (0.5 * (a[left, axis, axis] + a[right, axis, axis]) + epsilon) / h ** 2
        vel = 0.5 * (b[left, axis] + b[right, axis]) / h
        faces.append((left, right, diff, vel))
    return faces, c


def generator_parts(coeffs: CoefficientSet, grid: Grid, t: float, epsilon: float) -> GeneratorParts:
    """Two-point diffusion, upwind advection and reaction at time ``t``."""
    N = grid.n_cells
    faces, c = _face_data(coeffs, grid, t, epsilon)
    rows, cols, dvals, avals = [], [], [], []
    for left, right, diff, vel in faces:
        bp, bm = np.maximum(vel, 0.0), np.maximum(-vel, 0.0)
        rows += [left, left, right, right]
        cols += [right, left, left, right]
        dvals += [diff, -diff, diff, -diff]
        avals += [bp, -bp, bm, -bm]
    r, cidx = np.concatenate(rows), np.concatenate(cols)
    D = sp.coo_matrix((np.concatenate(dvals), (r, cidx)), shape=(N, N)).tocsr()
    B = sp.coo_matrix((np.concatenate(avals), (r, cidx)), shape=(N, N)).tocsr()
    return GeneratorParts(D, B, c)


def generator(coeffs: CoefficientSet, grid: Grid, t: float, epsilon: float) -> sp.csr_matrix:
    return generator_parts(coeffs, grid, t, epsilon).total()


def adjoint_generator(coeffs: CoefficientSet, grid: Grid, t: float, epsilon: float) -> sp.csr_matrix:
    """``div(a_eps grad v) - div(b v) + c v`` with upwind face fluxes ``b+ v_l - b- v_r``.

    Assembled independently of :func:`generator`; the two are transposes.
    """
    N = grid.n_cells
    faces, c = _face_data(coeffs, grid, t, epsilon)
    rows, cols, vals = [], [], []
    for left, right, diff, vel in faces:
        bp, bm = np.maximum(vel, 0.0), np.maximum(-vel, 0.0)
        # diffusion
        rows += [left, left, right, right]
        cols += [right, left, left, right]
        vals += [diff, -diff, diff, -diff]
        # flux F = bp v_l - bm v_r leaves ``left`` and enters ``right``
        rows += [left, left, right, right]
        cols += [left, right, left, right]
        vals += [-bp, bm, bp, -bm]
    L = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(N, N)).tocsr()
    return (L + sp.diags(c)).tocsr()


# stepping

def step_times(s: float, t: float, dt: float) -> np.ndarray:
    """Substep boundaries ``s = t_0 < ... < t_n = t`` with uniform ``dt`` and a shortened last step."""
    if t < s:
        raise ValueError("final time precedes initial time")
    if t == s:
        return np.array([float(s)])
    n = max(1, int(ceil((t - s) / dt - 1e-9)))
    times = s + dt * np.arange(n + 1, dtype=float)
    times[-1] = t
    return times


def uniformized_expm(L: sp.spmatrix, dt: float, V: np.ndarray, tail: float = 1e-200) -> np.ndarray:
    """``exp(dt L) V`` for ``L`` with nonnegative off-diagonal entries."""
    L = sp.csr_matrix(L)
    diag = L.diagonal()
    lam = max(-float(diag.min()), 0.0)
    if lam == 0.0:
        lam = max(float(np.abs(diag).max()), 1.0)
    tau = lam * dt
    if tau == 0.0:
        return np.array(V, dtype=float, copy=True)
    P = (sp.identity(L.shape[0], format="csr") + L / lam).tocsr()
    log_tau = log(tau)
    log_cut = log(tail)
    logw = -tau
    term = np.array(V, dtype=float, copy=True)
    out = np.zeros_like(term)
    k = 0
    while True:
        if logw > -745.0:
            out += np.exp(logw) * term
        if k > tau and logw < log_cut:
            break
        k += 1
        term = P @ term
        logw += log_tau - log(k)
    return out


@dataclass
class Stepper:
    """Applies single steps of a configured integrator, caching operators when possible."""

    coeffs: CoefficientSet
    grid: Grid
    cfg: SolverConfig
    epsilon: float = field(init=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        self.epsilon = resolve_epsilon(self.cfg, self.coeffs, self.grid)
        self._static = _time_independent(self.coeffs)

    def parts(self, t: float) -> GeneratorParts:
        key = ("parts", None if self._static else float(t))
        if key not in self._cache:
            if not self._static:
                self._cache = {k: v for k, v in self._cache.items() if k[0] == "parts" and k[1] is None}
            self._cache[key] = generator_parts(self.coeffs, self.grid, t, self.epsilon)
        return self._cache[key]

    def _factor(self, key, build):
        if key not in self._cache:
            A = build().tocsc()
            self._cache[key] = (splu(A), A)
        return self._cache[key]

    def step(self, U: np.ndarray, t0: float, t1: float, adjoint: bool = False) -> np.ndarray:
        """Advance ``U`` (a field or a block of fields as columns) from ``t0`` to ``t1``.

        With ``adjoint`` the transposed step is applied, built from the
        independently assembled adjoint generator (used to march the adjoint
        scheme backwards from ``t1`` to ``t0``).
        """
        dt = t1 - t0
        if dt <= 0:
            return np.array(U, dtype=float, copy=True)
        kind = self.cfg.time_integrator
        N = self.grid.n_cells
        I = sp.identity(N, format="csr")
        tkey = None if self._static else float(t1)

        def L(t):
            if adjoint:
                return adjoint_generator(self.coeffs, self.grid, t, self.epsilon)
            return self.parts(t).total()

        if kind == "exponential":
            key = ("L", tkey, adjoint)
            if key not in self._cache:
                if not self._static:
                    self._cache = {k: v for k, v in self._cache.items() if k[0] != "L"}
                self._cache[key] = L(t1)
            return uniformized_expm(self._cache[key], dt, U)
        if kind == "implicit-euler":
            lu, A = self._factor(("ie", tkey, dt, adjoint), lambda: I - dt * L(t1))
            return _solve(lu, U, A)
        # imex: implicit diffusion + reaction at t1, explicit advection at t0
        B = self.parts(t0).advection
        cfl = dt * float(max(-B.diagonal().min(), 0.0))
        if cfl > 1 + 1e-12:
            raise SolverError(f"CFL violation in imex mode: dt * max|B_ii| = {cfl:.4g} > 1")
        pi = self.parts(t1)
        lu, A = self._factor(("imex", tkey, dt),
                             lambda: I - dt * (pi.diffusion + sp.diags(pi.reaction)))
        E = I + dt * B
        if adjoint:
            return E.T @ _solve(lu, U, A, trans=True)
        return _solve(lu, E @ U, A)


def _time_independent(coeffs: CoefficientSet) -> bool:
    def static(v):
        if callable(v):
            return False
        arr = np.asarray(v)
        return coeffs.times is None or arr.ndim == 0 or arr.shape[0] != len(coeffs.times)
    return static(coeffs.a) and static(coeffs.b) and static(coeffs.c)


def _solve(lu, rhs: np.ndarray, A: sp.spmatrix, trans: bool = False) -> np.ndarray:
    rhs = np.asarray(rhs, dtype=float)
    out = lu.solve(rhs, trans="T" if trans else "N")
    if not np.all(np.isfinite(out)):
        raise SolverError("linear solve produced non-finite values")
    res = float(np.abs((A.T if trans else A) @ out - rhs).max())
    scale = float(np.abs(rhs).max()) or 1.0
    if res > 1e-8 * scale:
        raise SolverError(f"linear solve failed: residual {res:.3e}")
    return out


def step(u: np.ndarray, coeffs: CoefficientSet, grid: Grid, t: float, cfg: SolverConfig,
         dt: float | None = None) -> np.ndarray:
    """One step of length ``dt`` (default ``cfg.dt``) starting at time ``t``."""
    u = grid.field(u)
    dt = cfg.dt if dt is None else dt
    return Stepper(coeffs, grid, cfg).step(u, t, t + dt)


# trajectories and propagators

@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    snapshots: list
    grid: Grid

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[-1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"u{i}" for i in range(self.grid.n_cells)])
            for t, u in zip(self.times, self.snapshots):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in u])


def solve(u0: np.ndarray, coeffs: CoefficientSet, grid: Grid, s: float, t: float,
          cfg: SolverConfig, store: str = "all") -> Trajectory:
    """March ``u0`` from ``s`` to ``t``; ``store="ends"`` keeps only the first and last snapshots."""
    u = grid.field(u0)
    times = step_times(s, t, cfg.dt)
    stepper = Stepper(coeffs, grid, cfg)
    snaps = [u.copy()]
    kept = [float(s)]
    for k in range(1, len(times)):
        u = stepper.step(u, times[k - 1], times[k])
        if store == "all" or k == len(times) - 1:
            snaps.append(u.copy())
            kept.append(float(times[k]))
    return Trajectory(np.array(kept), snaps, grid)


@dataclass(frozen=True, eq=False)
class PropagatorMatrix:
    """Columns of ``P_{t,s}`` for the source cells ``cols``; ``entries[i, k]`` responds to cell ``cols[k]``."""

    entries: np.ndarray
    cols: np.ndarray
    s: float
    t: float
    grid: Grid

    @property
    def full(self) -> bool:
        return self.cols.size == self.grid.n_cells

    def dense(self) -> np.ndarray:
        out = np.zeros((self.grid.n_cells, self.grid.n_cells))
        out[:, self.cols] = self.entries
        return out

    def block(self, rows: Region, cols: Region) -> np.ndarray:
        pos = np.searchsorted(self.cols, cols.cell_indices)
        pos = np.minimum(pos, self.cols.size - 1)
        if cols.size and not np.array_equal(self.cols[pos], cols.cell_indices):
            raise ValueError("propagator is missing columns for the requested source region")
        return self.entries[np.ix_(rows.cell_indices, pos)]

    def transpose(self) -> "PropagatorMatrix":
        if not self.full:
            raise ValueError("transpose needs all columns")
        return PropagatorMatrix(self.entries.T.copy(), self.cols, self.s, self.t, self.grid)

    def compose(self, earlier: "PropagatorMatrix") -> "PropagatorMatrix":
        """``self @ earlier``; ``self`` must cover all cells."""
        if not self.full:
            raise ValueError("composition needs all columns of the later propagator")
        return PropagatorMatrix(self.entries @ earlier.entries, earlier.cols, earlier.s,
                                self.t, self.grid)

    def save(self, path) -> None:
        np.savez(path, entries=self.entries, cols=self.cols, s=self.s, t=self.t)

    def to_csv(self, path) -> None:
        np.savetxt(path, self.dense(), delimiter=",", fmt="%.17g")


def assemble_propagator(coeffs: CoefficientSet, grid: Grid, s: float, t: float,
                        cfg: SolverConfig, source: Region | None = None) -> PropagatorMatrix:
    """Propagator columns for the cells of ``source`` (all cells by default).

    All columns share each step's factorization and are solved as one block.
    """
    cols = np.arange(grid.n_cells) if source is None else source.cell_indices
    U = np.zeros((grid.n_cells, cols.size))
    U[cols, np.arange(cols.size)] = 1.0
    U = apply_propagator(U, coeffs, grid, s, t, cfg)
    return PropagatorMatrix(U, np.array(cols), float(s), float(t), grid)


def assemble_adjoint_propagator(coeffs: CoefficientSet, grid: Grid, s: float, t: float,
                                cfg: SolverConfig) -> PropagatorMatrix:
    """The adjoint scheme marched backwards from ``t`` to ``s``, one column per cell."""
    U = apply_adjoint(np.eye(grid.n_cells), coeffs, grid, s, t, cfg)
    return PropagatorMatrix(U, np.arange(grid.n_cells), float(s), float(t), grid)


def apply_propagator(V: np.ndarray, coeffs: CoefficientSet, grid: Grid, s: float, t: float,
                     cfg: SolverConfig) -> np.ndarray:
    """``P_{t,s} V`` for a field or a block of fields, without storing snapshots."""
    times = step_times(s, t, cfg.dt)
    stepper = Stepper(coeffs, grid, cfg)
    U = np.array(V, dtype=float, copy=True)
    for k in range(1, len(times)):
        U = stepper.step(U, times[k - 1], times[k])
    return U


def apply_adjoint(V: np.ndarray, coeffs: CoefficientSet, grid: Grid, s: float, t: float,
                  cfg: SolverConfig) -> np.ndarray:
    """``P_{t,s}^T V`` by marching the adjoint scheme from ``t`` back to ``s``."""
    times = step_times(s, t, cfg.dt)
    stepper = Stepper(coeffs, grid, cfg)
    U = np.array(V, dtype=float, copy=True)
    for k in range(len(times) - 1, 0, -1):
        U = stepper.step(U, times[k - 1], times[k], adjoint=True)
    return U


# epsilon convergence

def epsilon_convergence_study(u0: np.ndarray, coeffs: CoefficientSet, grid: Grid, s: float,
                              t: float, cfg: SolverConfig) -> list[tuple[float, float]]:
    """``(eps, ||u_eps(t) - u_eps_min(t)||_1)`` for each entry of ``cfg.epsilon_schedule``."""
    sched = cfg.epsilon_schedule
    if sched is None or len(sched) < 3:
        raise ValueError("epsilon_schedule needs at least 3 entries")
    if any(b >= a for a, b in zip(sched, sched[1:])):
        raise ValueError("epsilon_schedule must be strictly decreasing")
    finals = []
    for eps in sched:
        run = SolverConfig(epsilon=eps, dt=cfg.dt, time_integrator=cfg.time_integrator)
        finals.append(solve(u0, coeffs, grid, s, t, run, store="ends").final)
    ref = finals[-1]
    return [(float(eps), lp_norm(u - ref, 1, grid)) for eps, u in zip(sched, finals)]
