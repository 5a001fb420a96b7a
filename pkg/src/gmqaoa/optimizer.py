"""Outer-loop angle optimization: exhaustive grid, Nelder-Mead refinement, p sweeps."""
from __future__ import annotations

import csv
import io
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .substate import (AngleSchedule, CostTable, FeasibleSet, expectation, optimal_mask,
                       optimum_probability, run_schedule, run_schedule_batch)

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 10 ** 6
TWO_PI = 2 * np.pi
_BATCH_AMPS = 1 << 21


class BudgetExceeded(ValueError):
    pass


@dataclass
class TraceEntry:
    schedule: AngleSchedule
    value: float
    opt_prob: float


@dataclass
class OptimizationReport:
    best: AngleSchedule
    best_value: float
    opt_prob: float
    optimum: float
    evaluations: int
    sense: str
    method: str
    trace: list[TraceEntry] = field(default_factory=list, repr=False)

    @property
    def p(self) -> int:
        return self.best.p

    @property
    def ratio(self) -> float:
        """Expectation over the brute-force optimum (1.0 means optimal)."""
        if self.optimum == 0:
            return 1.0 if self.best_value == 0 else float("nan")
        return self.best_value / self.optimum

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "sense": self.sense,
            "p": self.p,
            "gamma": list(self.best.gamma),
            "beta": list(self.best.beta),
            "expectation": self.best_value,
            "opt_prob": self.opt_prob,
            "optimum": self.optimum,
            "ratio": self.ratio,
            "evaluations": self.evaluations,
        }

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        p = self.p
        w.writerow(["p"] + [f"gamma{i + 1}" for i in range(p)] + [f"beta{i + 1}" for i in range(p)]
                   + ["expectation", "opt_prob"])
        for e in self.trace:
            w.writerow([e.schedule.p] + [repr(g) for g in e.schedule.gamma]
                       + [repr(b) for b in e.schedule.beta] + [repr(e.value), repr(e.opt_prob)])
        return buf.getvalue()


def _better(a: float, b: float, sense: str) -> bool:
    return a > b if sense == "max" else a < b


def _check_sense(sense: str) -> None:
    if sense not in ("min", "max"):
        raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")


def _optimum(costs: CostTable, sense: str) -> float:
    return float(costs.value.max() if sense == "max" else costs.value.min())


def canonical(schedule: AngleSchedule, costs: CostTable) -> AngleSchedule:
    """Reduce angles into ``[0, 2pi)`` where that leaves the state unchanged.

    beta is always 2pi-periodic; gamma only when every cost is an integer.
    """
    beta = tuple(np.mod(schedule.beta, TWO_PI))
    gamma = schedule.gamma
    if np.all(costs.value == np.round(costs.value)):
        gamma = tuple(np.mod(gamma, TWO_PI))
    return AngleSchedule(gamma, beta)


def evaluate(fset: FeasibleSet, costs: CostTable, schedule: AngleSchedule) -> float:
    return expectation(run_schedule(fset, costs, schedule), costs)


def _evaluate_many(costs: CostTable, vectors: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = len(costs.set)
    chunk = max(1, _BATCH_AMPS // m)
    values, probs = [], []
    for start in range(0, len(vectors), chunk):
        v = vectors[start:start + chunk]
        amp = run_schedule_batch(costs, v[:, 0::2], v[:, 1::2])
        pr = np.abs(amp) ** 2
        values.append(pr @ costs.value)
        probs.append(pr[:, mask].sum(axis=1))
    return np.concatenate(values), np.concatenate(probs)


def grid_size(p: int, resolution: int) -> int:
    return resolution ** (2 * p)


def largest_resolution(p: int, budget: int, cap: int | None = None) -> int:
    r = 2
    while p * (r + 1) ** (2 * p) <= budget and (cap is None or r + 1 <= cap):
        r += 1
    return r


def grid_search(fset: FeasibleSet, costs: CostTable, p: int, resolution: int, sense: str = "max",
                budget: int = DEFAULT_BUDGET, keep_trace: bool = True) -> OptimizationReport:
    """Exhaustive grid ``{k * 2pi / resolution}`` over all ``2p`` angles.

    Grid order is row-major over ``(gamma_1, beta_1, ..., gamma_p, beta_p)``;
    the first schedule attaining the extremum wins.
    """
    _check_sense(sense)
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    if p < 0:
        raise ValueError("p must be >= 0")
    if p * grid_size(p, resolution) > budget:
        raise BudgetExceeded(
            f"p * resolution^(2p) = {p * grid_size(p, resolution)} exceeds budget {budget}")
    axis = np.arange(resolution) * TWO_PI / resolution
    vectors = np.array(list(itertools.product(axis, repeat=2 * p)), dtype=float).reshape(
        grid_size(p, resolution), 2 * p)
    mask = optimal_mask(costs, sense)
    values, probs = _evaluate_many(costs, vectors, mask)
    best = int(np.argmax(values) if sense == "max" else np.argmin(values))
    trace = [TraceEntry(AngleSchedule.from_vector(v), float(val), float(pr))
             for v, val, pr in zip(vectors, values, probs)] if keep_trace else []
    return OptimizationReport(AngleSchedule.from_vector(vectors[best]), float(values[best]),
                              float(probs[best]), _optimum(costs, sense), len(vectors), sense,
                              "grid", trace)


def simplex_refine(fset: FeasibleSet, costs: CostTable, start: AngleSchedule, sense: str = "max",
                   max_iters: int = 2000, tol: float = 1e-6, step: float = 0.1) -> OptimizationReport:
    """Nelder-Mead on the angle torus; never returns a schedule worse than ``start``.

    Stops after ``max_iters`` iterations or once the simplex is smaller than ``tol``.
    """
    _check_sense(sense)
    sign = -1.0 if sense == "max" else 1.0
    mask = optimal_mask(costs, sense)
    trace: list[TraceEntry] = []

    def record(vec) -> float:
        sched = AngleSchedule.from_vector(vec)
        state = run_schedule(fset, costs, sched)
        val = expectation(state, costs)
        trace.append(TraceEntry(sched, val, float(state.probabilities()[mask].sum())))
        return val

    start_value = record(start.as_vector())
    best_vec, best_value = start.as_vector(), start_value
    if start.p > 0 and np.isfinite(tol):
        x0 = start.as_vector()
        simplex = np.vstack([x0] + [x0 + step * e for e in np.eye(x0.size)])
        res = minimize(lambda v: sign * record(v), x0, method="Nelder-Mead",
                       options={"maxiter": max_iters, "xatol": tol, "fatol": np.inf,
                                "initial_simplex": simplex})
        cand = np.asarray(res.x, dtype=float)
        cand_value = evaluate(fset, costs, AngleSchedule.from_vector(cand))
        if _better(cand_value, best_value, sense):
            best_vec, best_value = cand, cand_value
    best = canonical(AngleSchedule.from_vector(best_vec), costs)
    wrapped_value = evaluate(fset, costs, best)
    if _better(best_value, wrapped_value, sense):
        # reduction is exact in theory; keep the unreduced angles if rounding hurt
        best = AngleSchedule.from_vector(best_vec)
    else:
        best_value = wrapped_value
    prob = optimum_probability(run_schedule(fset, costs, best), costs, sense)
    return OptimizationReport(best, best_value, prob, _optimum(costs, sense), len(trace), sense,
                              "simplex", trace)


def grid_then_simplex(fset: FeasibleSet, costs: CostTable, p: int, resolution: int, sense: str = "max",
                      budget: int = DEFAULT_BUDGET, **simplex_kw) -> OptimizationReport:
    grid = grid_search(fset, costs, p, resolution, sense, budget)
    if p == 0:
        return grid
    refined = simplex_refine(fset, costs, grid.best, sense, **simplex_kw)
    refined.trace = grid.trace + refined.trace
    refined.evaluations += grid.evaluations
    refined.method = "grid+simplex"
    return refined


@dataclass
class SweepResult:
    reports: list[OptimizationReport]
    violations: list[tuple[int, float, float]]


def p_sweep(fset: FeasibleSet, costs: CostTable, p_max: int, budget: int = DEFAULT_BUDGET,
            sense: str = "max", max_resolution: int = 16, refine: bool = True) -> SweepResult:
    """Optimize each ``p = 1..p_max`` and flag rounds whose best value got worse.

    Round ``p`` is also warm-started from round ``p - 1`` extended by an
    identity round, so the reported values are weakly monotone unless a
    refinement fails outright.
    """
    _check_sense(sense)
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    reports: list[OptimizationReport] = []
    violations = []
    for p in range(1, p_max + 1):
        r = largest_resolution(p, budget, max_resolution)
        rep = grid_then_simplex(fset, costs, p, r, sense, budget) if refine \
            else grid_search(fset, costs, p, r, sense, budget)
        if reports:
            warm = reports[-1].best.extended()
            cand = simplex_refine(fset, costs, warm, sense) if refine else None
            if cand is None:
                val = evaluate(fset, costs, warm)
                prob = optimum_probability(run_schedule(fset, costs, warm), costs, sense)
                cand = OptimizationReport(warm, val, prob, rep.optimum, 1, sense, "warm", [])
            if _better(cand.best_value, rep.best_value, sense):
                cand.trace = rep.trace + cand.trace
                cand.evaluations += rep.evaluations
                cand.method = rep.method + "+warm"
                rep = cand
            prev = reports[-1].best_value
            if _better(prev, rep.best_value, sense) and abs(prev - rep.best_value) > 1e-9:
                violations.append((p, prev, rep.best_value))
                logger.warning("best value at p=%d (%.12g) is worse than at p=%d (%.12g)",
                               p, rep.best_value, p - 1, prev)
        reports.append(rep)
    return SweepResult(reports, violations)
