"""
Independent reference computations used by the tests.

Each oracle is implemented without touching the library's numerics
(mpmath quadrature, banded solves, closed forms). ``FROZEN`` holds values
computed once from these oracles at 30 digits; ``test_oracles.py``
guards that the oracle code still reproduces them.
"""

from __future__ import annotations

import mpmath as mp
import numpy as np
from scipy.linalg import solve_banded

mp.mp.dps = 30

# half-line heat tail (1/2) erfc(d / (2 sqrt(t))) with alpha = 1, keyed by (d, t)
HEAT_TAIL = {
    (0.5, 0.01): 2.0347600872247946978e-04,
    (0.5, 0.05): 5.6923149003329025139e-02,
    (0.5, 0.1): 1.3177623864148636519e-01,
    (1.0, 0.01): 7.6872989721401742509e-13,
    (1.0, 0.05): 7.8270112900127483875e-04,
    (1.0, 0.1): 1.2673659338734131966e-02,
    (2.0, 0.01): 1.0442437918812723785e-45,
    (2.0, 0.05): 1.2698142947354324853e-10,
    (2.0, 0.1): 3.8721082155220418188e-06,
}

FROZEN = {
    # unit-mass Barenblatt constant for n = 1, m = 2 and the support radius at t = 1 and t = 0.02
    "barenblatt_C": 0.360562392576852095580409577695,
    "barenblatt_R1": 2.08008382305190411453005682436,
    "barenblatt_R_0.02": 0.564621617328617094646531636209,
}


def heat_tail(d: float, t: float, alpha: float = 1.0) -> float:
    """``int_d^inf G_t(y) dy`` by mpmath quadrature of the Gaussian kernel."""
    d, s = mp.mpf(d), mp.mpf(alpha) * mp.mpf(t)
    return float(mp.quad(lambda y: mp.exp(-y ** 2 / (4 * s)) / mp.sqrt(4 * mp.pi * s), [d, mp.inf]))


def erfc_tail(r: float, t: float, alpha: float = 1.0) -> float:
    """``erfc(r / (2 sqrt(alpha t)))``: Gaussian mass outside a ball of radius ``r`` in 1D."""
    return float(mp.erfc(mp.mpf(r) / (2 * mp.sqrt(mp.mpf(alpha) * mp.mpf(t)))))


def barenblatt_unit_C() -> float:
    """Closed form for n = 1, m = 2: mass ``(4/3) sqrt(12) C^{3/2} = 1``."""
    return float((mp.mpf(3) / (4 * mp.sqrt(12))) ** (mp.mpf(2) / 3))


def barenblatt_mass(C: float, t: float) -> float:
    """Quadrature of the n = 1, m = 2 profile at time ``t``."""
    C, t = mp.mpf(C), mp.mpf(t)
    g = mp.mpf(1) / 3
    R = mp.sqrt(12 * C) * t ** g
    return float(mp.quad(lambda x: t ** (-g) * max(C - (x * t ** (-g)) ** 2 / 12, 0), [-R, 0, R]))


def shifted_overlap(y_lo: float, y_hi: float, x_lo: float, x_hi: float, shift: float) -> float:
    """Fraction of ``[y_lo, y_hi]`` that lies in ``[x_lo, x_hi]`` after translation by ``shift``."""
    lo, hi = max(y_lo + shift, x_lo), min(y_hi + shift, x_hi)
    return max(hi - lo, 0.0) / (y_hi - y_lo)


def implicit_heat_step(u: np.ndarray, h: float, dt: float, alpha: float = 1.0) -> np.ndarray:
    """``(I - dt alpha Delta_h)^{-1} u`` with Neumann ends by a banded solve."""
    N = len(u)
    r = alpha * dt / h ** 2
    ab = np.zeros((3, N))
    ab[0, 1:] = -r
    ab[2, :-1] = -r
    diag = np.full(N, 1 + 2 * r)
    diag[0] = diag[-1] = 1 + r
    ab[1] = diag
    return solve_banded((1, 1), ab, u)


def gaussian_convolution(u0: np.ndarray, x: np.ndarray, h: float, t: float, alpha: float = 1.0) -> np.ndarray:
    """Free-space heat solution from cell averages: exact kernel integrated over each source cell."""
    from scipy.special import erf
    s = np.sqrt(4 * alpha * t)
    lo = (x[:, None] - (x[None, :] - h / 2)) / s
    hi = (x[:, None] - (x[None, :] + h / 2)) / s
    return (0.5 * (erf(lo) - erf(hi))) @ u0


def brute_distance(P: np.ndarray, Q: np.ndarray) -> float:
    return float(min(np.linalg.norm(p - q) for p in P for q in Q))


def traveling_profile_mass(beta: float, R: float) -> float:
    """``int_0^inf phi`` by mpmath quadrature of the two branches."""
    b, R = mp.mpf(beta), mp.mpf(R)
    inner = mp.quad(lambda m: m ** (-b), [0, R])
    outer = mp.quad(lambda m: mp.e ** b * R ** (-b) * mp.exp(-b * m / R), [R, mp.inf])
    return float(inner + outer)
