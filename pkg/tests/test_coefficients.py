import numpy as np
import pytest
from hypothesis import given, strategies as st

from diffbounds.coefficients import (CoefficientError, CoefficientSet, FAMILIES, checkerboard_degenerate,
                                     compute_alpha_beta, constant, from_csv, min_eigenvalue, ramp,
                                     rotation_drift, validate_assumptions)
from diffbounds.grid import Grid


def test_identity_all_flags_true():
    g = Grid.box((0, 0), (1, 1), (8, 8))
    rep = validate_assumptions(CoefficientSet(a=np.eye(2)), g)
    assert rep.all_ok and rep.failures() == []


def test_positive_c_flagged_with_witness():
    g = Grid.interval(0, 1, 16)
    rep = validate_assumptions(constant(1.0, c=0.1), g)
    assert not rep.c_nonpositive.ok
    assert rep.c_nonpositive.witness["value"] == pytest.approx(0.1)
    assert "x" in rep.c_nonpositive.witness and "t" in rep.c_nonpositive.witness


def test_compressive_b_flagged():
    g = Grid.interval(-1, 1, 32)
    rep = validate_assumptions(CoefficientSet(a=1.0, b=lambda x, t: -x[:, 0]), g)
    assert not rep.divb_minus_c.ok
    assert rep.divb_minus_c.worst == pytest.approx(-1.0)


def test_tangential_b_required_on_walls():
    g = Grid.interval(0, 1, 16)
    assert not validate_assumptions(constant(1.0, b=0.5), g).boundary_b.ok
    gp = Grid.interval(0, 1, 16, "periodic")
    assert validate_assumptions(constant(1.0, b=0.5), gp).all_ok


def test_nonpsd_a_flagged():
    g = Grid.interval(0, 1, 8)
    assert not validate_assumptions(constant(-1e-6), g).psd.ok
    assert validate_assumptions(constant(-1e-12), g).psd.ok


def test_nonfinite_coefficient_names_cell_and_time():
    g = Grid.interval(0, 1, 8)
    a = np.ones(8)
    a[5] = np.nan
    with pytest.raises(CoefficientError, match="cell 5"):
        validate_assumptions(CoefficientSet(a=a), g)


def test_time_samples_precondition():
    with pytest.raises(ValueError):
        validate_assumptions(constant(1.0), Grid.interval(0, 1, 4), time_samples=1)


def test_alpha_beta_examples():
    g2 = Grid.box((0, 0), (1, 1), (6, 6))
    assert compute_alpha_beta(CoefficientSet(a=0.5 * np.eye(2)), g2) == pytest.approx((0.5, 0.0))
    g1 = Grid.interval(0, 1, 16)
    assert compute_alpha_beta(constant(1.0, b=0.3), g1) == pytest.approx((1.0, 0.3))


def test_alpha_beta_ramp():
    R = 0.1
    g = Grid.interval(-0.5, 1.5, 640)
    alpha, beta = compute_alpha_beta(ramp(0.5, R, (0, 1)), g)
    assert alpha == pytest.approx(R, rel=1e-6)
    assert beta >= 1.0 - 1e-9


@pytest.mark.parametrize("samples", [2, 3, 7, 20])
def test_constant_sup_independent_of_samples(samples):
    g = Grid.interval(0, 1, 10)
    assert compute_alpha_beta(constant(0.7, b=0.2), g, samples) == pytest.approx((0.7, 0.2))


def test_divergence_of_linear_field():
    g = Grid.box((-1, -1), (1, 1), (12, 10))
    M = np.array([[0.3, -1.2], [0.7, 2.1]])
    co = CoefficientSet(a=0.0, b=lambda x, t: x @ M.T)
    div = co.divergence_b(g, 0.0).reshape(g.shape)
    assert np.allclose(div[1:-1, 1:-1], np.trace(M), atol=1e-10)


def test_min_eigenvalue_closed_form():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(50, 2, 2))
    A = A + A.transpose(0, 2, 1)
    assert np.allclose(min_eigenvalue(A), np.linalg.eigvalsh(A)[:, 0], atol=1e-12)


@given(st.floats(1.01, 10.0), st.integers(0, 1000))
def test_scaling_monotone(lam, seed):
    rng = np.random.default_rng(seed)
    g = Grid.interval(0, 1, 24)
    a = rng.uniform(0, 2, 24)
    co = CoefficientSet(a=a, b=0.0)
    a0, b0 = compute_alpha_beta(co, g)
    a1, b1 = compute_alpha_beta(co.scaled(a_factor=lam), g)
    assert a1 == pytest.approx(lam * a0, rel=1e-12)
    assert b1 >= b0


def test_families_registered():
    assert {"constant", "ramp", "checkerboard-degenerate", "rotation"} <= set(FAMILIES)
    g = Grid.box((-1, -1), (1, 1), (8, 8), "periodic")
    assert validate_assumptions(rotation_drift(1.0, 0.1), g).divb_minus_c.ok
    co = checkerboard_degenerate(1.0, [(0.2, 0.4)])
    a = co.sample_a(Grid.interval(0, 1, 10), 0.0)[:, 0, 0]
    assert a[3] == 0.0 and a[0] == 1.0


def test_from_csv_roundtrip(tmp_path):
    g = Grid.interval(0, 1, 4)
    rows = ["t,cell,a,b,c"]
    for t in (0.0, 1.0):
        for i in range(4):
            rows.append(f"{t},{i},{1 + t + i},0,-0.5")
    p = tmp_path / "coef.csv"
    p.write_text("\n".join(rows) + "\n")
    co = from_csv(p, g)
    assert co.sample_a(g, 0.5)[:, 0, 0] == pytest.approx([1.5, 2.5, 3.5, 4.5])
    assert co.sample_c(g, 0.2) == pytest.approx(-0.5)
    (tmp_path / "bad.csv").write_text("t,cell,a,b,c\n0,0,1,0,0\n")
    with pytest.raises(CoefficientError):
        from_csv(tmp_path / "bad.csv", g)


def test_window_reported():
    rep = validate_assumptions(constant(1.0, window=(0.0, 2.0)), Grid.interval(0, 1, 4))
    assert rep.to_dict()["window"] == [0.0, 2.0] or tuple(rep.to_dict()["window"]) == (0.0, 2.0)
