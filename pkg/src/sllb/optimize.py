"""Cross-entropy search over piecewise-constant Young measures."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .control import ControlGrid, ControlProblem, PathFailure, YoungMeasure, monte_carlo_cost
from .integrator import SimulationError
from .levy import derive_int_seed, derive_seed

DIRICHLET_FLOOR = 1e-3


@dataclass
class OptimizerConfig:
    population: int = 32
    elite_fraction: float = 0.25
    max_iterations: int = 30
    smoothing: float = 0.7
    paths_per_evaluation: int = 64
    tolerance: float = 1e-6
    seed: int = 0
    concentration: float | None = None  # Dirichlet precision; default 2K
    stall_generations: int = 3
    resample_seeds: bool = False  # False: one common seed set for the whole search

    def __post_init__(self):
        if self.population < 4:
            raise ValueError("population must be >= 4")
        if not 0 < self.elite_fraction < 1:
            raise ValueError("elite_fraction must lie in (0, 1)")
        if self.elite_fraction * self.population < 1:
            raise ValueError("elite_fraction * population must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if not 0 < self.smoothing <= 1:
            raise ValueError("smoothing must lie in (0, 1]")
        if self.paths_per_evaluation < 2:
            raise ValueError("paths_per_evaluation must be >= 2")

    @property
    def n_elite(self) -> int:
        return max(1, int(math.floor(self.elite_fraction * self.population)))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Generation:
    index: int
    elite_mean: float
    elite_stderr: float
    best_cost: float
    n_finite: int
    mean_weights: list

    def to_dict(self):
        return asdict(self)


@dataclass
class OptimizationResult:
    measure: YoungMeasure
    cost: float
    stderr: float
    search_cost: float
    search_stderr: float
    history: list[Generation]
    converged: bool
    dirac: YoungMeasure
    dirac_cost: float
    dirac_stderr: float
    fresh_seed: int = 0
    notes: list = field(default_factory=list)

    @property
    def relaxation_gap(self) -> float:
        return self.dirac_cost - self.cost

    def to_dict(self) -> dict:
        return {
            "weights": self.measure.weights.tolist(),
            "knots": self.measure.knots.tolist(),
            "points": self.measure.control_grid.to_list(),
            "cost": self.cost,
            "stderr": self.stderr,
            "search_cost": self.search_cost,
            "search_stderr": self.search_stderr,
            "converged": self.converged,
            "dirac_weights": self.dirac.weights.tolist(),
            "dirac_cost": self.dirac_cost,
            "dirac_stderr": self.dirac_stderr,
            "relaxation_gap": self.relaxation_gap,
            "fresh_seed": self.fresh_seed,
            "history": [g.to_dict() for g in self.history],
            "notes": list(self.notes),
        }


def project_to_dirac(lam: YoungMeasure) -> YoungMeasure:
    """Each row replaced by the Dirac at its largest entry; ties go to the lowest index."""
    return YoungMeasure.dirac(lam.control_grid, lam.knots, np.argmax(lam.weights, axis=1))


def _evaluate(problem, weights, grid, knots, opt, seed):
    lam = YoungMeasure(grid, knots, weights)
    try:
        est, se = monte_carlo_cost(problem, lam, opt.paths_per_evaluation, seed)
    except (PathFailure, SimulationError, FloatingPointError):
        return math.inf, math.inf
    if not math.isfinite(est):
        return math.inf, math.inf
    return est, se


def _normalize_rows(w: np.ndarray) -> np.ndarray:
    w = np.maximum(w, 0.0)
    return w / w.sum(axis=1, keepdims=True)


def cross_entropy_minimize(
    problem: ControlProblem,
    control_grid: ControlGrid,
    knots,
    opt: OptimizerConfig = OptimizerConfig(),
    threads: int = 1,
) -> OptimizationResult:
    """Minimize the Monte Carlo relaxed cost over Young measures on ``knots``.

    Candidate rows are drawn from per-interval Dirichlet laws; the current mean
    is always included as a candidate. Every candidate of a generation uses the
    same path seeds. The best candidate seen is re-evaluated on fresh seeds.
    """
    knots = np.asarray(knots, dtype=float)
    J, K = len(knots) - 1, len(control_grid)
    conc = opt.concentration if opt.concentration is not None else 2.0 * K
    fresh_seed = derive_int_seed(opt.seed, 3)
    history: list[Generation] = []

    def evaluate_all(cands, seed):
        if threads <= 1:
            return [_evaluate(problem, w, control_grid, knots, opt, seed) for w in cands]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda w: _evaluate(problem, w, control_grid, knots, opt, seed), cands))

    if K == 1:
        w = np.ones((J, 1))
        est, se = _evaluate(problem, w, control_grid, knots, opt, derive_int_seed(opt.seed, 0))
        history.append(Generation(0, est, se, est, 1, w.tolist()))
        lam = YoungMeasure(control_grid, knots, w)
        fc, fse = _evaluate(problem, w, control_grid, knots, opt, fresh_seed)
        return OptimizationResult(lam, fc, fse, est, se, history, True, lam, fc, fse, fresh_seed)

    mean = np.full((J, K), 1.0 / K)
    best = (math.inf, math.inf, None)
    prev_elite = None
    stall = 0
    converged = False
    for gen in range(opt.max_iterations):
        seed = derive_int_seed(opt.seed, 1, gen) if opt.resample_seeds else derive_int_seed(opt.seed, 0)
        rng = np.random.default_rng(derive_seed(opt.seed, 2, gen))
        cands = [_normalize_rows(mean)]
        for _ in range(opt.population - 1):
            rows = [rng.dirichlet(np.maximum(conc * mean[j], DIRICHLET_FLOOR)) for j in range(J)]
            cands.append(_normalize_rows(np.array(rows)))
        results = evaluate_all(cands, seed)
        costs = np.array([c for c, _ in results])
        ses = np.array([s for _, s in results])
        finite = np.isfinite(costs)
        if not finite.any():
            raise RuntimeError(f"generation {gen}: every candidate produced a non-finite cost")
        order = np.argsort(np.where(finite, costs, np.inf), kind="stable")
        n_elite = min(opt.n_elite, int(finite.sum()))
        elite = order[:n_elite]
        elite_mean = float(costs[elite].mean())
        elite_se = float(ses[elite].mean())
        top = int(order[0])
        if costs[top] < best[0]:
            best = (float(costs[top]), float(ses[top]), cands[top])
        mean = _normalize_rows((1 - opt.smoothing) * mean + opt.smoothing * np.mean([cands[i] for i in elite], axis=0))
        history.append(Generation(gen, elite_mean, elite_se, best[0], int(finite.sum()), mean.tolist()))
        if prev_elite is not None and abs(elite_mean - prev_elite) < opt.tolerance:
            stall += 1
            if stall >= opt.stall_generations:
                converged = True
                break
        else:
            stall = 0
        prev_elite = elite_mean

    lam = YoungMeasure(control_grid, knots, best[2])
    cost, se = _evaluate(problem, best[2], control_grid, knots, opt, fresh_seed)
    dirac = project_to_dirac(lam)
    dcost, dse = _evaluate(problem, dirac.weights, control_grid, knots, opt, fresh_seed)
    notes = [] if converged else ["not converged: iteration budget exhausted"]
    return OptimizationResult(lam, cost, se, best[0], best[1], history, converged, dirac, dcost, dse, fresh_seed, notes)


def history_violations(history: list[Generation], n_se: float = 2.0) -> list[tuple[int, float]]:
    """Generations whose elite mean rose by more than ``n_se`` pooled standard errors."""
    out = []
    for a, b in zip(history[:-1], history[1:]):
        pooled = math.sqrt(a.elite_stderr**2 + b.elite_stderr**2)
        excess = b.elite_mean - a.elite_mean - n_se * pooled
        if excess > 0:
            out.append((b.index, excess))
    return out
