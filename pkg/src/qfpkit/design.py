"""Parameter sweeps and 1-D optimisation of the canonical beamsplitter."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import SpecificationError, canonical_transfer
from .metrics import HADAMARD, GateMetrics, SplitterRatios, gate_metrics, splitter_ratios
from .specfun import DEFAULT_TAIL_TOL

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

AXES = ("B", "alpha", "theta")


class BracketError(ValueError):
    """Search bracket does not enclose an interior maximum."""


@dataclass(frozen=True)
class SweepPoint:
    value: float
    metrics: GateMetrics
    ratios: SplitterRatios | None


@dataclass(frozen=True)
class SweepResult:
    axis_name: str
    axis_values: tuple
    points: tuple[SweepPoint, ...]
    fixed_params: dict

    def column(self, name: str) -> np.ndarray:
        if name in ("F", "P", "P_tilde", "eta"):
            return np.array([p.metrics.as_dict()[name] for p in self.points])
        return np.array([getattr(p.ratios, name) for p in self.points])

    def rows(self) -> list[dict]:
        out = []
        for p in self.points:
            row = {self.axis_name: p.value, **p.metrics.as_dict()}
            if p.ratios is not None:
                row.update(p.ratios.as_dict())
            out.append(row)
        return out


def evaluate_point(B: int, alpha: float, theta: float, n_inputs: int = 2, U=None,
                   tail_tol: float = DEFAULT_TAIL_TOL) -> tuple[GateMetrics, SplitterRatios | None]:
    """Metrics and splitter ratios of one canonical configuration."""
    if U is None:
        U = HADAMARD if n_inputs == 2 else np.eye(n_inputs)
    m = gate_metrics(canonical_transfer(B, alpha, theta, n_inputs, tail_tol), U)
    ratios = splitter_ratios(m.W) if n_inputs == 2 else None
    return m, ratios


def _sweep(axis, values, fixed, n_inputs, tail_tol, workers):
    values = list(values)
    if not values:
        raise ValueError("sweep axis is empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("sweep values must be strictly increasing")

    def one(v):
        params = dict(fixed)
        params[axis] = v
        return SweepPoint(v, *evaluate_point(params["B"], params["alpha"], params["theta"],
                                             n_inputs, tail_tol=tail_tol))

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(one, values))
    else:
        points = [one(v) for v in values]
    return SweepResult(axis, tuple(values), tuple(points), dict(fixed))


def sweep_channels(alpha: float, theta: float, B_values, N: int = 2,
                   tail_tol: float = DEFAULT_TAIL_TOL, workers: int = 1) -> SweepResult:
    B_values = [int(b) for b in B_values]
    bad = [b for b in B_values if b % 2 or b < 2]
    if bad:
        raise SpecificationError(f"channel counts must be even and >= 2, got {bad}")
    return _sweep("B", B_values, {"alpha": alpha, "theta": theta}, N, tail_tol, workers)


def sweep_alpha(B: int, theta: float, alpha_values, N: int = 2,
                tail_tol: float = DEFAULT_TAIL_TOL, workers: int = 1) -> SweepResult:
    alpha_values = [float(a) for a in alpha_values]
    if any(not 0.0 <= a <= 2 * math.pi for a in alpha_values):
        raise ValueError("alpha values must lie in [0, 2pi]")
    return _sweep("alpha", alpha_values, {"B": B, "theta": theta}, N, tail_tol, workers)


def sweep_theta(B: int, alpha: float, theta_values, N: int = 2,
                tail_tol: float = DEFAULT_TAIL_TOL, workers: int = 1) -> SweepResult:
    theta_values = [float(t) for t in theta_values]
    if any(not 0.0 <= t <= 1.2 for t in theta_values):
        raise ValueError("theta values must lie in [0, 1.2]")
    return _sweep("theta", theta_values, {"B": B, "alpha": alpha}, N, tail_tol, workers)


def grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive uniform grid, built from integer counts to avoid drift."""
    n = int(round((stop - start) / step))
    return [start + i * step for i in range(n + 1)]


def splitting_crossover(B: int, alpha: float, lo: float = 0.5, hi: float = 1.0,
                        tol: float = 1e-12, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """Modulation index where ``R_01 = T_00`` (bisection on ``R - T``)."""
    def g(t):
        r = evaluate_point(B, alpha, t, tail_tol=tail_tol)[1]
        return r.R_01 - r.T_00

    glo, ghi = g(lo), g(hi)
    if glo * ghi > 0:
        raise BracketError(f"R - T does not change sign on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm * glo > 0:
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class SearchTrace:
    iterations: int = 0
    brackets: list = field(default_factory=list)


def golden_section_max(f, a: float, b: float, xtol: float = 1e-9, max_iter: int = 200):
    """Maximise a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x), trace)``."""
    trace = SearchTrace()
    a, b = min(a, b), max(a, b)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    trace.brackets.append((a, b))
    while b - a > xtol and trace.iterations < max_iter:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        trace.iterations += 1
        trace.brackets.append((a, b))
    x = 0.5 * (a + b)
    return x, f(x), trace


@dataclass(frozen=True)
class OptimumReport:
    objective: str
    params: dict
    metrics: GateMetrics
    ratios: SplitterRatios | None
    iterations: int
    bracket_history: tuple
    grid_step: float
    grid_best: float
    grid_best_theta: float
    flat_objective: bool

    def as_dict(self) -> dict:
        return {
            "objective": self.objective,
            "argmax": dict(self.params),
            "metrics": self.metrics.as_dict(),
            "ratios": self.ratios.as_dict() if self.ratios else None,
            "trace": {"iterations": self.iterations,
                      "bracket_history": [list(b) for b in self.bracket_history]},
            "grid_check": {"step": self.grid_step, "best_value": self.grid_best,
                           "best_theta": self.grid_best_theta},
            "flat_objective": self.flat_objective,
        }


OBJECTIVES = ("fidelity", "fidelity_times_success")


def _objective(name, B, alpha, U, tail_tol):
    if name not in OBJECTIVES:
        raise ValueError(f"unknown objective {name!r}; choose from {OBJECTIVES}")

    def f(theta):
        m, _ = evaluate_point(B, alpha, theta, 2, U, tail_tol)
        return m.fidelity if name == "fidelity" else m.fidelity * m.modified_success
    return f


def optimize_hadamard(B: int = 6, alpha: float = math.pi, theta_bracket=(0.5, 1.1),
                      objective: str = "fidelity", U=HADAMARD, scan_points: int = 61,
                      grid_step: float = 1e-5, grid_halfwidth: float = 5e-4,
                      tail_tol: float = DEFAULT_TAIL_TOL) -> OptimumReport:
    """Golden-section search for the modulation index maximising the objective,
    confirmed on a dense local grid."""
    f = _objective(objective, B, alpha, U, tail_tol)
    lo, hi = float(theta_bracket[0]), float(theta_bracket[1])
    if not hi > lo or lo < 0:
        raise BracketError(f"invalid bracket [{lo}, {hi}]")

    coarse = np.linspace(lo, hi, scan_points)
    vals = np.array([f(t) for t in coarse])
    flat = float(vals.max() - vals.min()) < 1e-9
    i = int(np.argmax(vals))
    if not flat and i in (0, len(coarse) - 1):
        raise BracketError(
            f"objective maximum lies on the bracket edge theta={coarse[i]:.6g}; "
            f"[{lo}, {hi}] has no interior maximum")
    a = coarse[max(i - 1, 0)]
    b = coarse[min(i + 1, len(coarse) - 1)]
    x, fx, trace = golden_section_max(f, float(a), float(b))
    x = float(x)

    lo_g = max(lo, x - grid_halfwidth)
    n = int(round((min(hi, x + grid_halfwidth) - lo_g) / grid_step))
    dense = lo_g + grid_step * np.arange(n + 1)
    dense_vals = np.array([f(t) for t in dense])
    j = int(np.argmax(dense_vals))

    m, ratios = evaluate_point(B, alpha, x, 2, U, tail_tol)
    return OptimumReport(objective, {"B": B, "alpha": alpha, "theta": x}, m, ratios,
                         trace.iterations, tuple(trace.brackets), grid_step,
                         float(dense_vals[j]), float(dense[j]), flat)


@dataclass(frozen=True)
class JointOptimum:
    alpha: float
    theta: float
    value: float
    metrics: GateMetrics
    iterations: int


def optimize_joint(B: int = 6, start=(math.pi, 0.83), objective: str = "fidelity",
                   U=HADAMARD, tail_tol: float = DEFAULT_TAIL_TOL) -> JointOptimum:
    """Nelder-Mead over ``(alpha, theta)``."""
    from scipy.optimize import minimize

    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}; choose from {OBJECTIVES}")

    def neg(x):
        alpha, theta = float(x[0]), float(x[1])
        if not 0 <= theta <= 1.2:
            return 1.0
        m, _ = evaluate_point(B, alpha, theta, 2, U, tail_tol)
        return -(m.fidelity if objective == "fidelity" else m.fidelity * m.modified_success)

    res = minimize(neg, np.asarray(start, float), method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000})
    alpha, theta = float(res.x[0]), float(res.x[1])
    m, _ = evaluate_point(B, alpha, theta, 2, U, tail_tol)
    return JointOptimum(alpha, theta, -float(res.fun), m, int(res.nit))
