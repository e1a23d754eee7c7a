"""
Configuration-driven runner: ``run``, ``sweep``, ``examples`` and ``validate`` subcommands.

Exit status: 0 when every applicable comparison passes, 1 when one fails,
2 for configuration errors and 3 for assumption or numerical failures.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bounds import AssumptionError, CertificationError, certify_dg_bounds, check_tilted_propagator_inequality, optimize_G
from .coefficients import FAMILIES, CoefficientError, CoefficientSet, from_csv, validate_assumptions
from .cutoff import CutoffError
from .evolution import SolverConfig, SolverError, assemble_propagator, solve
from .grid import Grid, GridError, Region

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
BOUNDS_COLUMNS = ["scenario", "p", "d", "t", "alpha", "beta", "k", "validity", "predicted",
                  "measured", "pass"]
SWEEP_AXES = ("t", "d", "alpha", "beta", "mu", "epsilon", "N")


class ConfigError(ValueError):
    """Invalid run configuration; ``location`` names the offending key path."""

    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}")
        self.location = location


class NumericalFailure(RuntimeError):
    def __init__(self, module: str, error: Exception):
        super().__init__(f"[{module}] {error}")
        self.module = module
        self.error = error


# configuration

SCENARIOS = {
    "certify": "diffusion-bound certification for a coefficient family on a grid",
    "traveling-wave": "ramp coefficient with its traveling solution, bound inside and outside the validity window",
    "porous-medium": "porous medium equation against the Barenblatt solution",
    "mckean-vlasov": "kinetic equation with velocity diffusion and a bounded mean-field force",
    "tilted-inequality": "seeded random degenerate coefficients against the tilted propagator inequality",
}

EXAMPLE_CONFIGS = {
    "certify": {
        "scenario": "certify",
        "grid": {"lower": [0.0], "upper": [1.0], "cells": [512], "boundary": ["neumann"]},
        "coefficients": {"family": "constant", "params": {"alpha": 1.0}},
        "regions": {"X": {"interval": [[0.0, 0.3]]}, "Y": {"interval": [[0.7, 1.0]]}},
        "times": {"s": 0.0, "t": [0.0008]},
        "norms": [1, 2, "inf"],
        "solver": {"dt": 0.0001, "time_integrator": "implicit-euler"},
        "cutoff": {"c3": 2.0, "mode": "theorem1"},
        "slack": 0.02,
    },
    "traveling-wave": {"scenario": "traveling-wave",
                       "params": {"beta": 0.5, "R": 0.1, "horizon": 2.0, "n_samples": 8}},
    "porous-medium": {"scenario": "porous-medium",
                      "params": {"n": 1, "m": 2.0, "q": 0.0, "t0": 0.01, "t_final": 1.0,
                                 "cells": 1024, "lower": -3.0, "upper": 3.0, "epsilon": 1e-6}},
    "mckean-vlasov": {"scenario": "mckean-vlasov",
                      "params": {"sigma": 1.0, "K_amplitude": 0.5, "cells": [128, 128], "vmax": 8.0,
                                 "X_v": [-8.0, -0.5], "Y_v": [0.5, 8.0], "control_t": 0.5}},
    "tilted-inequality": {"scenario": "tilted-inequality",
                          "params": {"cases": 5, "cells": 128, "t": 0.05, "c2_max": 10.0}},
}


def _get(d: dict, key: str, where: str, kind=None, default=...):
    if key not in d:
        if default is ...:
            raise ConfigError(f"{where}.{key}", "missing")
        return default
    val = d[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"{where}.{key}", f"expected {getattr(kind, '__name__', kind)}")
    return val


@dataclass
class RunConfig:
    scenario: str
    raw: dict
    seed: int = 0
    slack: float = 0.02
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict, seed: int | None = None, slack: float | None = None) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("$", "configuration must be a JSON object")
        scen = _get(d, "scenario", "$", str)
        if scen not in SCENARIOS:
            raise ConfigError("$.scenario", f"unknown scenario {scen!r}; choose from {sorted(SCENARIOS)}")
        sd = int(d.get("seed", 0) if seed is None else seed)
        sl = float(d.get("slack", 0.02) if slack is None else slack)
        if sl < 0:
            raise ConfigError("$.slack", "must be nonnegative")
        cfg = cls(scen, copy.deepcopy(d), sd, sl, dict(d.get("params", {})))
        if scen == "certify":
            cfg.grid()
            cfg.solver()
            cfg.norms()
            cfg.times()
        return cfg

    @classmethod
    def load(cls, path, seed=None, slack=None) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(str(path), f"cannot read: {exc}") from None
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
        return cls.from_dict(d, seed, slack)

    # sections

    def grid(self) -> Grid:
        g = _get(self.raw, "grid", "$", dict)
        try:
            cells = [int(c) for c in _get(g, "cells", "$.grid", list)]
            bnd = g.get("boundary", ["neumann"] * len(cells))
            return Grid.box(_get(g, "lower", "$.grid", list), _get(g, "upper", "$.grid", list),
                            cells, bnd)
        except (GridError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("$.grid", str(exc)) from None

    def coefficients(self, grid: Grid) -> CoefficientSet:
        c = _get(self.raw, "coefficients", "$", dict)
        fam = _get(c, "family", "$.coefficients", str)
        times = self.times()
        window = (times[0], max(times[1]))
        if fam == "tabulated":
            path = _get(c, "path", "$.coefficients", str)
            try:
                return from_csv(path, grid)
            except (OSError, KeyError, CoefficientError) as exc:
                raise ConfigError("$.coefficients.path", str(exc)) from None
        if fam not in FAMILIES:
            raise ConfigError("$.coefficients.family", f"unknown family {fam!r}; choose from "
                              f"{sorted(FAMILIES) + ['tabulated']}")
        params = dict(c.get("params", {}))
        params.setdefault("window", window)
        try:
            return FAMILIES[fam](**params)
        except TypeError as exc:
            raise ConfigError("$.coefficients.params", str(exc)) from None

    def region(self, grid: Grid, name: str) -> Region:
        regs = _get(self.raw, "regions", "$", dict)
        spec = _get(regs, name, "$.regions", dict)
        where = f"$.regions.{name}"
        if "indices" in spec:
            try:
                return Region(grid, np.asarray(spec["indices"], dtype=np.int64), name)
            except (GridError, ValueError, TypeError) as exc:
                raise ConfigError(f"{where}.indices", str(exc)) from None
        iv = _get(spec, "interval", where, list)
        if len(iv) != grid.dim or any(not isinstance(e, list) or len(e) != 2 for e in iv):
            raise ConfigError(f"{where}.interval", f"need {grid.dim} [lo, hi] pairs (null = unbounded)")
        lo = [-np.inf if a is None else float(a) for a, _ in iv]
        hi = [np.inf if b is None else float(b) for _, b in iv]
        reg = grid.region_where(lambda x: np.all((x >= lo) & (x <= hi), axis=1), name)
        if reg.is_empty():
            raise ConfigError(where, "region contains no cells")
        return reg

    def times(self) -> tuple[float, list[float]]:
        t = _get(self.raw, "times", "$", dict)
        s = float(t.get("s", 0.0))
        ts = t.get("t")
        ts = [ts] if isinstance(ts, (int, float)) else ts
        if not isinstance(ts, list) or not ts:
            raise ConfigError("$.times.t", "need a nonempty list of end times")
        ts = [float(v) for v in ts]
        if any(v <= s for v in ts):
            raise ConfigError("$.times.t", "end times must exceed s")
        return s, ts

    def norms(self) -> list[float]:
        out = []
        for p in self.raw.get("norms", [1, 2, "inf"]):
            v = np.inf if p in ("inf", "infinity") else p
            if v not in (1, 2, np.inf):
                raise ConfigError("$.norms", f"unsupported norm index {p!r}")
            out.append(float(v))
        return out

    def solver(self) -> SolverConfig:
        s = dict(self.raw.get("solver", {}))
        try:
            return SolverConfig(**s)
        except (TypeError, ValueError) as exc:
            raise ConfigError("$.solver", str(exc)) from None

    def cutoff(self) -> dict:
        c = dict(self.raw.get("cutoff", {}))
        mode = c.get("mode", "theorem1")
        if mode not in ("theorem1", "sharp", "tail"):
            raise ConfigError("$.cutoff.mode", f"unknown mode {mode!r}")
        return {"c3": float(c.get("c3", 2.0)), "sharp_epsilon": float(c.get("epsilon", 0.1)),
                "mode": mode, "center": c.get("center"), "r": c.get("r")}


# reports

@dataclass
class RunReport:
    config: dict
    assumptions: dict | None
    certificates: list
    comparisons: list
    rows: list
    extra: dict
    timing: dict
    profiles: dict = field(default_factory=dict)

    @property
    def overall_pass(self) -> bool:
        return all(r["pass"] for r in self.rows if r["pass"] is not None)

    def to_dict(self) -> dict:
        return {"config": self.config, "assumptions": self.assumptions,
                "certificates": self.certificates, "comparisons": self.comparisons,
                "scenario_report": self.extra, "overall_pass": self.overall_pass,
                "not_applicable": sum(r["pass"] is None for r in self.rows)}

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(dumps(self.to_dict()) + "\n")
        (out / "timing.json").write_text(json.dumps(self.timing, indent=2) + "\n")
        write_bounds_csv(self.rows, out / "bounds.csv")
        for name, (header, cols) in self.profiles.items():
            with open(out / f"profile_{name}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(header)
                for row in zip(*cols):
                    w.writerow([_fmt(v) for v in row])


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return _clean(float(o))
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (tuple, set)):
        return list(o)
    return str(o)


def _clean(v):
    if isinstance(v, float) and not np.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    return v


def _sanitize(o):
    if isinstance(o, dict):
        return {str(k): _sanitize(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_sanitize(v) for v in o]
    if isinstance(o, np.ndarray):
        return _sanitize(o.tolist())
    if isinstance(o, (float, np.floating)):
        return _clean(float(o))
    return o


def dumps(obj) -> str:
    return json.dumps(_sanitize(obj), indent=2, sort_keys=True, default=_json_default)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)) or v is None:
        return "" if v is None else str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return "inf" if np.isinf(v) else repr(float(v))
    return str(v)


def write_bounds_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BOUNDS_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in BOUNDS_COLUMNS])


def _row(scenario, p, d, t, alpha, beta, k, validity, predicted, measured, passed) -> dict:
    if not isinstance(p, str):
        p = "inf" if np.isinf(p) else (int(p) if float(p).is_integer() else float(p))
    return {"scenario": scenario, "p": p,
            "d": float(d), "t": float(t), "alpha": float(alpha), "beta": float(beta),
            "k": float(k), "validity": bool(validity), "predicted": float(predicted),
            "measured": float(measured), "pass": passed}


# scenario runners

def _run_certify(cfg: RunConfig):
    grid = cfg.grid()
    coeffs = cfg.coefficients(grid)
    s, ts = cfg.times()
    ps = cfg.norms()
    cut = cfg.cutoff()
    solver = cfg.solver()
    relax = bool(cfg.raw.get("relax_c", False))
    samples = int(cfg.raw.get("time_samples", 5))
    report = validate_assumptions(coeffs.with_window(s, max(ts)), grid, max(samples, 2), relax_c=relax)
    assumptions = report.to_dict()
    if not report.all_ok:
        raise AssumptionError(report)
    X = Y = None
    if cut["mode"] != "tail":
        X, Y = cfg.region(grid, "X"), cfg.region(grid, "Y")
    comps, rows, certs = [], [], []
    for t in ts:
        out = certify_dg_bounds(coeffs, grid, X, Y, s, t, ps, solver, cut["mode"], c3=cut["c3"],
                                sharp_epsilon=cut["sharp_epsilon"], slack=cfg.slack,
                                time_samples=samples, center=cut["center"], r=cut["r"],
                                relax_c=relax, label=f"t={t:g}")
        for bc in out:
            comps.append(bc.to_dict())
            dd = bc.r if bc.mode == "tail" else bc.d_XY
            rows.append(_row(f"certify:{bc.mode}", bc.p, dd, bc.t - bc.s, bc.alpha_effective,
                             bc.beta, bc.k, bc.validity_ok, bc.predicted_bound,
                             bc.measured_norm, bc.passed))
            if bc.k_analytic is not None:
                pa = bc.predicted_bound_analytic_k
                rows.append(_row(f"certify:{bc.mode}:k-analytic", bc.p, dd, bc.t - bc.s,
                                 bc.alpha_effective, bc.beta, bc.k_analytic, bc.validity_ok,
                                 pa, bc.measured_norm,
                                 bool(bc.measured_norm <= pa * (1 + cfg.slack)) if bc.validity_ok else None))
        if out and out[0].certificate is not None:
            certs.append({"t": t, **out[0].certificate.to_dict()})
    traj = solve(Y.mask.astype(float) if Y is not None else np.ones(grid.n_cells), coeffs, grid,
                 s, max(ts), solver, store="ends")
    x = grid.centers
    profiles = {"final": (["cell"] + [f"x{k}" for k in range(grid.dim)] + ["initial", "final"],
                          [np.arange(grid.n_cells)] + [x[:, k] for k in range(grid.dim)]
                          + [traj.snapshots[0], traj.final])}
    return assumptions, certs, comps, rows, {"family": coeffs.name}, profiles


def _run_traveling(cfg: RunConfig):
    from .showcase.traveling_wave import traveling_wave_scenario
    p = cfg.params
    rep = traveling_wave_scenario(float(p.get("beta", 0.5)), float(p.get("R", 0.1)),
                                  horizon=float(p.get("horizon", 2.0)),
                                  n_samples=int(p.get("n_samples", 8)),
                                  y_len=float(p.get("y_len", 1.0)), d=float(p.get("d", 0.5)))
    rows = []
    for bc in rep.inside:
        rows.append(_row("traveling-wave:inside", bc.p, bc.d_XY, bc.t - bc.s, bc.alpha_effective,
                         bc.beta, bc.k, bc.validity_ok, bc.predicted_bound,
                         bc.measured_norm, bc.passed))
    for o in rep.outside:
        # naive diffusive prediction (k = 1) beyond the window: informative, never part of the verdict
        rows.append(_row("traveling-wave:outside-naive", np.inf, o["d"], o["t"], rep.alpha,
                         rep.beta_constant, 1.0, o["validity"], o["naive_diffusive"], o["measured"], None))
    x = rep.grid.centers[:, 0]
    profiles = {"traveling_wave": (["x"] + [f"u_t{t:g}" for t in rep.times] + [f"exact_t{t:g}" for t in rep.times],
                                   [x] + rep.snapshots + rep.exact)}
    return None, [], [bc.to_dict() for bc in rep.inside], rows, rep.to_dict(), profiles


def _run_porous(cfg: RunConfig):
    from .showcase.porous_medium import BarenblattParams, porous_medium_scenario
    p = cfg.params
    n, m = int(p.get("n", 1)), float(p.get("m", 2.0))
    params = BarenblattParams.unit_mass(n, m) if "C" not in p else BarenblattParams(n, m, float(p["C"]))
    cells = p.get("cells", 1024)
    lo, hi = float(p.get("lower", -3.0)), float(p.get("upper", 3.0))
    grid = Grid.interval(lo, hi, int(cells)) if n == 1 else Grid.box([lo] * 2, [hi] * 2, [int(cells)] * 2)
    rep = porous_medium_scenario(params, float(p.get("q", 0.0)), grid, float(p.get("t_final", 1.0)),
                                 SolverConfig(epsilon=float(p.get("epsilon", 1e-6))),
                                 t0=float(p.get("t0", 0.01)),
                                 certify_d=p.get("certify_d", 0.5))
    rows = [_row("porous-medium", c["p"], c["d"], c["t"], c["alpha"], c["beta"], c["k"],
                 c["validity"], c["predicted"], c["measured"], c["pass"]) for c in rep.certification]
    profiles = {"porous_medium": (["x", "u_t0", "u_final", "exact_final"],
                                  [grid.centers[:, 0], rep.snapshots[0], rep.final,
                                   params.cell_averages(grid, rep.t_final)])} if n == 1 else {}
    return None, [], rep.certification, rows, rep.to_dict(), profiles


def _run_kinetic(cfg: RunConfig):
    from .showcase.mckean_vlasov import mckean_vlasov_scenario, velocity_heat_control
    p = cfg.params
    amp = float(p.get("K_amplitude", 0.5))
    Nx, Nv = (int(v) for v in p.get("cells", [128, 128]))
    vmax = float(p.get("vmax", 8.0))
    g = Grid.box((0.0, -vmax), (2 * np.pi, vmax), (Nx, Nv), ("periodic", "neumann"))
    rep = mckean_vlasov_scenario(float(p.get("sigma", 1.0)), lambda x: amp * np.sin(x), g,
                                 tuple(p.get("X_v", [-vmax, -0.5])), tuple(p.get("Y_v", [0.5, vmax])),
                                 p.get("t"), K_sup=amp)
    rows = [_row("mckean-vlasov" + ("" if c["k_source"] == "measured" else ":k-analytic"), c["p"],
                 c["d"], c["t"], c["alpha"], c["beta"], c["k"], c["validity"], c["predicted"],
                 c["measured"], c["pass"]) for c in rep.comparisons]
    extra = rep.to_dict()
    profiles = {}
    if p.get("control_t"):
        ctl = velocity_heat_control(float(p.get("sigma", 1.0)), g, float(p["control_t"]))
        extra["control"] = {k: v for k, v in ctl.items() if not isinstance(v, np.ndarray)}
        profiles["velocity_control"] = (["v", "marginal", "exact"],
                                        [g.axis_centers(1), ctl["marginal"], ctl["exact"]])
    return None, [rep.certificate], rep.comparisons, rows, extra, profiles


def _run_tilted(cfg: RunConfig):
    from .random_cases import random_coefficients, random_localized_phi
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    grid = Grid.interval(0.0, 1.0, int(p.get("cells", 128)))
    t = float(p.get("t", 0.05))
    solver = SolverConfig(dt=float(p.get("dt", 1e-3)), time_integrator="exponential")
    rows, cases = [], []
    for i in range(int(p.get("cases", 5))):
        co = random_coefficients(rng, grid, window=(0.0, t))
        ph = random_localized_phi(rng, grid, float(p.get("c2_max", 10.0)))
        v = rng.uniform(0.0, 1.0, grid.n_cells)
        M = assemble_propagator(co, grid, 0.0, t, solver)
        chk = check_tilted_propagator_inequality(ph.phi, co, M, v, ph.U, cfg=solver)
        cases.append({"case": i, "lhs": chk.lhs, "rhs": chk.rhs, "A": chk.A, "passed": chk.passed,
                      "phi_c2": ph.c2_norm, "params": co.params})
        rows.append(_row("tilted-inequality", 1.0, 0.0, t, co.params["alpha0"], 0.0, 1.0, True,
                         chk.rhs * (1 + 1e-6), chk.lhs, chk.passed))
    return None, [], cases, rows, {"cases": cases}, {}


RUNNERS = {"certify": _run_certify, "traveling-wave": _run_traveling, "porous-medium": _run_porous,
           "mckean-vlasov": _run_kinetic, "tilted-inequality": _run_tilted}

_PROVENANCE = ((GridError, "grid_geometry"), (CoefficientError, "coefficients"),
               (CutoffError, "cutoff"), (SolverError, "evolution"), (CertificationError, "bounds"))


def execute(cfg: RunConfig) -> RunReport:
    """Run a parsed configuration; numerical failures surface as :class:`NumericalFailure`."""
    start = time.perf_counter()
    np.random.seed(cfg.seed % 2 ** 32)
    try:
        assumptions, certs, comps, rows, extra, profiles = RUNNERS[cfg.scenario](cfg)
    except ConfigError:
        raise
    except AssumptionError as exc:
        raise NumericalFailure("coefficients", exc) from exc
    except tuple(e for e, _ in _PROVENANCE) as exc:
        module = next(m for e, m in _PROVENANCE if isinstance(exc, e))
        raise NumericalFailure(module, exc) from exc
    except (np.linalg.LinAlgError, FloatingPointError, RuntimeError) as exc:
        raise NumericalFailure("evolution", exc) from exc
    echo = dict(cfg.raw, seed=cfg.seed, slack=cfg.slack)
    return RunReport(echo, assumptions, certs, comps, rows, extra,
                     {"scenario": cfg.scenario, "seconds": time.perf_counter() - start}, profiles)


def run(config_path, out_dir=None, seed=None, slack=None) -> RunReport:
    cfg = RunConfig.load(config_path, seed, slack)
    rep = execute(cfg)
    if out_dir is not None:
        rep.write(out_dir)
    return rep


def _apply_axis(raw: dict, axis: str, value) -> dict:
    d = copy.deepcopy(raw)
    if axis == "t":
        d.setdefault("times", {})["t"] = [float(value)]
    elif axis == "d":
        regs = d.get("regions", {})
        try:
            x_hi = regs["X"]["interval"][0][1]
            y = regs["Y"]["interval"][0]
        except (KeyError, IndexError, TypeError):
            raise ConfigError("$.regions", "d sweeps need interval regions X = [lo, hi], Y = [lo, hi]") from None
        width = None if y[1] is None else y[1] - y[0]
        y[0] = x_hi + float(value)
        if width is not None:
            y[1] = y[0] + width
    elif axis in ("alpha", "beta"):
        c = d.setdefault("coefficients", {})
        prm = c.setdefault("params", {})
        key = "alpha" if axis == "alpha" else "b"
        if c.get("family") not in ("constant", "checkerboard-degenerate") and axis == "alpha":
            raise ConfigError("$.coefficients.family", "alpha sweeps need a family with an alpha parameter")
        if c.get("family") != "constant" and axis == "beta":
            raise ConfigError("$.coefficients.family", "beta sweeps need the constant family")
        prm[key] = float(value)
    elif axis == "epsilon":
        d.setdefault("solver", {})["epsilon"] = float(value)
    elif axis == "N":
        g = d.setdefault("grid", {})
        g["cells"] = [int(value)] * len(g.get("cells", [0]))
    return d


def _mu_rows(cfg: RunConfig, values) -> list[dict]:
    """Decay exponent ``G(mu)`` over a list of ``mu`` for the configured geometry."""
    from .bounds import decay_rate_G
    from .coefficients import compute_alpha_beta
    from .cutoff import build_xi_general
    grid = cfg.grid()
    s, ts = cfg.times()
    coeffs = cfg.coefficients(grid)
    X, Y = cfg.region(grid, "X"), cfg.region(grid, "Y")
    cert = build_xi_general(X, Y, grid, cfg.cutoff()["c3"])
    alpha, beta = compute_alpha_beta(coeffs.with_window(s, ts[0]), grid)
    c1, c2 = max(cert.c1_measured, 1.0), cert.c2_measured
    mu_star, g_star = optimize_G(cert.d_XY, ts[0] - s, alpha, beta, c1, c2, grid.dim)
    rows = []
    for mu in values:
        G, _ = decay_rate_G(float(mu), cert.d_XY, ts[0] - s, alpha, beta, c1, c2, grid.dim)
        rows.append({"axis": "mu", "value": float(mu), "G": G, "mu_star": mu_star, "G_star": g_star,
                     "bound": float(np.exp(-G))})
    return rows


def sweep(config_path, axis: str, values, threads: int = 1, seed=None, slack=None) -> list[dict]:
    """One row per value in the given order; runs values concurrently with ``threads`` workers."""
    if axis not in SWEEP_AXES:
        raise ConfigError("axis", f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    values = list(values)
    if not values:
        raise ConfigError("values", "empty value list")
    base = RunConfig.load(config_path, seed, slack)
    if base.scenario != "certify":
        raise ConfigError("$.scenario", "sweeps are defined for the certify scenario")
    if axis == "mu":
        return _mu_rows(base, values)

    def one(v):
        cfg = RunConfig.from_dict(_apply_axis(base.raw, axis, v), base.seed, base.slack)
        rep = execute(cfg)
        return [{"axis": axis, "value": v, **r} for r in rep.rows]

    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as ex:
        results = list(ex.map(one, values))
    return [row for rows in results for row in rows]


def write_sweep_csv(rows, path) -> None:
    keys = list(rows[0].keys()) if rows else ["axis", "value"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(keys)
        for r in rows:
            w.writerow([_fmt(r[k]) for k in keys])


# command line

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="diffbounds", description=__doc__.strip().splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--seed", type=int, default=None, help="random seed (overrides the config)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    common.add_argument("--slack", type=float, default=None, help="relative slack on predicted bounds")
    sub.add_parser("run", parents=[common], help="run one configuration")
    sw = sub.add_parser("sweep", parents=[common], help="sweep one scalar parameter")
    sw.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sw.add_argument("--values", required=True, help="comma-separated values")
    ex = sub.add_parser("examples", help="list built-in scenarios")
    ex.add_argument("--write", default=None, help="directory to write example configs into")
    sub.add_parser("validate", parents=[common], help="check the coefficient assumptions only")
    return ap


def _parse_values(text: str, axis: str) -> list:
    items = [v.strip() for v in text.split(",") if v.strip()]
    try:
        return [int(v) if axis == "N" else float(v) for v in items]
    except ValueError as exc:
        raise ConfigError("--values", str(exc)) from None


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "examples":
            for name, desc in SCENARIOS.items():
                print(f"{name:18s} {desc}")
            if args.write:
                out = Path(args.write)
                out.mkdir(parents=True, exist_ok=True)
                for name, cfg in EXAMPLE_CONFIGS.items():
                    (out / f"{name}.json").write_text(json.dumps(cfg, indent=2) + "\n")
            return EXIT_PASS
        if args.command == "validate":
            cfg = RunConfig.load(args.config, args.seed, args.slack)
            if cfg.scenario != "certify":
                print(f"{cfg.scenario}: assumptions are checked inside the scenario run")
                return EXIT_PASS
            grid = cfg.grid()
            s, ts = cfg.times()
            try:
                rep = validate_assumptions(cfg.coefficients(grid).with_window(s, max(ts)), grid,
                                           max(int(cfg.raw.get("time_samples", 5)), 2),
                                           relax_c=bool(cfg.raw.get("relax_c", False)))
            except CoefficientError as exc:
                print(f"error [coefficients] {exc}", file=sys.stderr)
                return EXIT_NUMERICAL
            print(dumps(rep.to_dict()))
            if args.out:
                Path(args.out).mkdir(parents=True, exist_ok=True)
                (Path(args.out) / "assumptions.json").write_text(dumps(rep.to_dict()) + "\n")
            return EXIT_PASS if rep.all_ok else EXIT_NUMERICAL
        if args.command == "run":
            rep = run(args.config, args.out, args.seed, args.slack)
            for r in rep.rows:
                flag = {True: "pass", False: "FAIL", None: "n/a"}[r["pass"]]
                print(f"{r['scenario']:34s} p={str(r['p']):4s} t={r['t']:.4g} "
                      f"predicted={r['predicted']:.4g} measured={r['measured']:.4g} {flag}")
            print("overall:", "pass" if rep.overall_pass else "FAIL")
            return EXIT_PASS if rep.overall_pass else EXIT_FAIL
        if args.command == "sweep":
            rows = sweep(args.config, args.axis, _parse_values(args.values, args.axis),
                         args.threads, args.seed, args.slack)
            if args.out:
                Path(args.out).mkdir(parents=True, exist_ok=True)
                write_sweep_csv(rows, Path(args.out) / f"sweep_{args.axis}.csv")
            else:
                write_sweep_csv(rows, "/dev/stdout")
            ok = all(r.get("pass") is not False for r in rows)
            return EXIT_PASS if ok else EXIT_FAIL
    except ConfigError as exc:
        print(f"config error at {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        err = exc.error
        if isinstance(err, AssumptionError):
            print(f"assumption failure [{exc.module}]: {'; '.join(err.report.failures())}", file=sys.stderr)
            if args.out:
                Path(args.out).mkdir(parents=True, exist_ok=True)
                (Path(args.out) / "report.json").write_text(dumps(
                    {"error": "assumption failure", "module": exc.module,
                     "assumptions": err.report.to_dict(), "overall_pass": False}) + "\n")
        else:
            print(f"numerical failure {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
