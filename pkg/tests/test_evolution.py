import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

import oracles
from diffbounds.coefficients import CoefficientSet, constant
from diffbounds.evolution import (SolverConfig, SolverError, adjoint_generator, apply_adjoint,
                                  apply_propagator, assemble_adjoint_propagator, assemble_propagator,
                                  epsilon_convergence_study, generator, numerical_diffusivity,
                                  solve, step, uniformized_expm)
from diffbounds.grid import Grid, lp_norm
from diffbounds.random_cases import random_coefficients

INTEGRATORS = ["implicit-euler", "imex", "exponential"]


def test_zero_coefficients_identity():
    g = Grid.interval(0, 1, 16)
    u = np.random.default_rng(0).uniform(size=16)
    assert np.array_equal(step(u, constant(0.0), g, 0.0, SolverConfig(epsilon=0.0)), u)


@pytest.mark.parametrize("integ", INTEGRATORS)
def test_constant_field_is_equilibrium(integ):
    g = Grid.interval(0, 1, 32)
    u = np.full(32, 2.5)
    out = step(u, constant(1.0), g, 0.0, SolverConfig(dt=0.01, time_integrator=integ))
    assert np.allclose(out, u, atol=1e-13)


def test_single_cell_step_matches_banded_solve():
    g = Grid.interval(0, 1, 50)
    u = np.zeros(50)
    u[17] = 1.0
    out = step(u, constant(1.0), g, 0.0, SolverConfig(epsilon=0.0, dt=1e-3))
    assert np.allclose(out, oracles.implicit_heat_step(u, g.spacing[0], 1e-3), atol=1e-14)


def test_solve_t_equals_s():
    g = Grid.interval(0, 1, 8)
    tr = solve(np.ones(8), constant(1.0), g, 0.3, 0.3, SolverConfig())
    assert len(tr.snapshots) == 1 and tr.times.tolist() == [0.3]


def test_transport_matches_shift_to_first_order():
    errs = []
    for n in (400, 800, 1600):
        g = Grid.interval(-2, 2, n, "periodic")
        x = g.centers[:, 0]
        u0 = np.exp(-x ** 2 / (2 * 0.1 ** 2))
        cfg = SolverConfig(epsilon=0.0, dt=0.25 * g.spacing[0], time_integrator="imex")
        u = solve(u0, constant(0.0, b=1.0), g, 0.0, 0.5, cfg, store="ends").final
        # u_t = b u_x carries data toward -x: u(x, t) = u0(x + b t)
        exact = np.exp(-(x + 0.5) ** 2 / (2 * 0.1 ** 2))
        errs.append(lp_norm(u - exact, 1, g) / lp_norm(exact, 1, g))
    assert errs[0] < 0.5
    assert errs[1] < errs[0] / 1.5 and errs[2] < errs[1] / 1.5


def test_heat_matches_gaussian_convolution():
    g = Grid.interval(-6, 6, 1200)
    x, h = g.centers[:, 0], g.spacing[0]
    u0 = ((x > -0.5) & (x < 0.5)).astype(float)
    u = solve(u0, constant(1.0), g, 0.0, 0.1, SolverConfig(dt=1e-4), store="ends").final
    ref = oracles.gaussian_convolution(u0, x, h, 0.1)
    assert lp_norm(u - ref, 1, g) / lp_norm(ref, 1, g) < 0.01


def test_propagator_identity_when_t_equals_s():
    g = Grid.interval(0, 1, 10)
    src = g.region([2, 5])
    M = assemble_propagator(constant(1.0), g, 0.2, 0.2, SolverConfig(), source=src)
    assert np.array_equal(M.entries, np.eye(10)[:, [2, 5]])


def test_uniformization_matches_dense_expm():
    g = Grid.interval(0, 1, 40)
    co = random_coefficients(np.random.default_rng(1), g)
    L = generator(co, g, 0.01, 1e-8)
    V = np.eye(40)
    assert np.allclose(uniformized_expm(L, 0.003, V), expm(0.003 * L.toarray()), atol=1e-13, rtol=1e-12)


def test_adjoint_generator_is_transpose():
    g = Grid.box((0, 0), (1, 1), (9, 7))
    co = random_coefficients(np.random.default_rng(2), g)
    L = generator(co, g, 0.02, 1e-6)
    Ls = adjoint_generator(co, g, 0.02, 1e-6)
    assert abs(L.T - Ls).max() < 1e-12


def test_numerical_diffusivity():
    g = Grid.interval(0, 1, 100, "periodic")
    assert numerical_diffusivity(constant(0.0, b=2.0), g) == pytest.approx(0.01)


def test_imex_cfl_violation():
    g = Grid.interval(0, 1, 100, "periodic")
    with pytest.raises(SolverError, match="CFL"):
        step(np.ones(100), constant(0.0, b=1.0), g, 0.0, SolverConfig(dt=0.1, time_integrator="imex"))


def test_off_diagonal_diffusion_rejected():
    g = Grid.box((0, 0), (1, 1), (4, 4))
    with pytest.raises(SolverError, match="off-diagonal"):
        step(np.ones(16), CoefficientSet(a=np.array([[1.0, 0.5], [0.5, 1.0]])), g, 0.0, SolverConfig())


def test_epsilon_study_linear_for_elliptic():
    g = Grid.interval(0, 1, 64)
    x = g.centers[:, 0]
    co = CoefficientSet(a=lambda p, t: 1 + 0.5 * np.sin(2 * np.pi * p[:, 0]))
    cfg = SolverConfig(dt=1e-3, epsilon_schedule=(4e-2, 2e-2, 1e-2, 1e-6))
    rows = epsilon_convergence_study(np.exp(-50 * (x - 0.3) ** 2), co, g, 0.0, 0.02, cfg)
    (e1, d1), (e2, d2) = rows[0], rows[1]
    assert d1 / d2 == pytest.approx(e1 / e2, rel=0.1)


def test_epsilon_study_transport_diffusion():
    g = Grid.interval(0, 1, 200, "periodic")
    x = g.centers[:, 0]
    cfg = SolverConfig(dt=1e-3, epsilon_schedule=(1e-2, 1e-3, 0.0))
    rows = epsilon_convergence_study(np.exp(-200 * (x - 0.5) ** 2), constant(0.0, b=1.0), g, 0.0, 0.1, cfg)
    assert rows[0][1] > rows[1][1] > rows[2][1] == 0.0


def test_epsilon_schedule_too_short():
    g = Grid.interval(0, 1, 8)
    with pytest.raises(ValueError):
        epsilon_convergence_study(np.ones(8), constant(1.0), g, 0, 0.1, SolverConfig(epsilon_schedule=(1e-3,)))


@st.composite
def cases(draw):
    seed = draw(st.integers(0, 2 ** 32 - 1))
    dim = draw(st.sampled_from([1, 1, 2]))
    periodic = draw(st.booleans())
    bnd = "periodic" if periodic else "neumann"
    g = Grid.interval(0, 1, draw(st.integers(6, 40)), bnd) if dim == 1 else \
        Grid.box((0, 0), (1, 1), (draw(st.integers(3, 8)), draw(st.integers(3, 8))), bnd)
    rng = np.random.default_rng(seed)
    co = random_coefficients(rng, g, advection=draw(st.booleans()), reaction=draw(st.booleans()))
    integ = draw(st.sampled_from(["implicit-euler", "exponential"]))
    return g, co, SolverConfig(dt=draw(st.sampled_from([2e-3, 5e-3, 1e-2])), time_integrator=integ), rng


@settings(max_examples=30)
@given(cases())
def test_positivity_and_contraction(case):
    g, co, cfg, rng = case
    M = assemble_propagator(co, g, 0.0, 0.03, cfg)
    assert M.entries.min() >= -1e-12
    assert M.entries.sum(axis=0).max() <= 1 + 1e-10      # L1 contraction
    assert M.entries.sum(axis=1).max() <= 1 + 1e-10      # Linf contraction (c <= 0)


@settings(max_examples=20)
@given(cases())
def test_composition_and_adjoint(case):
    g, co, cfg, rng = case
    dt = cfg.dt
    r, t = 2 * dt, 5 * dt
    A = assemble_propagator(co, g, 0.0, r, cfg)
    B = assemble_propagator(co, g, r, t, cfg)
    C = assemble_propagator(co, g, 0.0, t, cfg)
    assert np.abs(B.compose(A).entries - C.entries).max() <= 1e-10
    Adj = assemble_adjoint_propagator(co, g, 0.0, t, cfg)
    assert np.abs(Adj.entries - C.entries.T).max() <= 1e-10


@settings(max_examples=20)
@given(st.integers(0, 2 ** 32 - 1))
def test_mass_conserved_without_drift_or_reaction(seed):
    g = Grid.interval(0, 1, 30)
    co = random_coefficients(np.random.default_rng(seed), g, advection=False, reaction=False)
    u0 = np.random.default_rng(seed + 1).uniform(size=30)
    u = apply_propagator(u0, co, g, 0.0, 0.05, SolverConfig(dt=5e-3))
    assert abs(u.sum() - u0.sum()) <= 1e-10 * u0.sum()


def test_apply_adjoint_matches_transpose_action():
    g = Grid.interval(0, 1, 25)
    co = random_coefficients(np.random.default_rng(7), g)
    cfg = SolverConfig(dt=4e-3)
    M = assemble_propagator(co, g, 0.0, 0.02, cfg)
    v = np.random.default_rng(8).normal(size=25)
    assert np.allclose(apply_adjoint(v, co, g, 0.0, 0.02, cfg), M.entries.T @ v, atol=1e-13)
