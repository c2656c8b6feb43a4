"""Finite control grids, control operators, Young measures and running costs."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grid import Field, check_same_grid

SIMPLEX_TOL = 1e-12


class ControlGrid:
    """Finite control space ``U = {v_0, ..., v_{K-1}} ⊂ R^q``."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or len(pts) == 0:
            raise ValueError("control grid needs at least one point")
        if len(np.unique(pts, axis=0)) != len(pts):
            raise ValueError("control points must be distinct")
        self.points = pts

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        return isinstance(other, ControlGrid) and np.array_equal(self.points, other.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def to_list(self):
        if self.dim == 1:
            return self.points[:, 0].tolist()
        return self.points.tolist()


@dataclass(frozen=True)
class KappaWeight:
    """Coercivity weight ``κ(t, v) >= 0``; the default is ``|v|``."""

    name: str = "norm"
    fn: Callable | None = field(default=None, compare=False)

    def __call__(self, t: float, v) -> float:
        if self.fn is not None:
            value = float(self.fn(t, v))
        elif self.name == "norm":
            value = float(np.linalg.norm(np.atleast_1d(v)))
        else:
            raise ValueError(f"unknown kappa rule {self.name!r}")
        if value < 0:
            raise ValueError("kappa must be nonnegative")
        return value

    def sublevel(self, grid: ControlGrid, radius: float, t: float = 0.0) -> np.ndarray:
        """Indices of ``K_R = {v : κ(t, v) <= R}``; finite, hence compact."""
        return np.array([k for k, v in enumerate(grid.points) if self(t, v) <= radius], dtype=int)


def _shape_stack(shapes) -> list[Field]:
    if isinstance(shapes, Field):
        return [shapes]
    shapes = list(shapes)
    check_same_grid(*shapes)
    return shapes


class ControlOperator:
    """``L(m, v)`` with ``|L(m, v)|_{L2} <= C |m|_{L2}^r κ(v)`` for ``κ = |v|``."""

    kind = ""
    r = 0.0
    growth_constant = 0.0

    def __call__(self, m: Field, v) -> Field:
        raise NotImplementedError

    def growth_bound(self, m: Field, v, kappa: KappaWeight, t: float = 0.0) -> float:
        mn = m.grid.l2_sq(m.values) ** 0.5
        return self.growth_constant * mn**self.r * kappa(t, v)


class AdditiveForcing(ControlOperator):
    """``L(m, v) = sum_j v_j w_j``; growth exponent 0."""

    kind = "additive"

    def __init__(self, shapes):
        self.shapes = _shape_stack(shapes)
        self.r = 0.0
        g = self.shapes[0].grid
        # Cauchy–Schwarz over the q components
        self.growth_constant = math.sqrt(sum(g.l2_sq(w.values) for w in self.shapes))

    def __call__(self, m: Field, v) -> Field:
        v = np.atleast_1d(v)
        out = v[0] * self.shapes[0].values
        for vj, w in zip(v[1:], self.shapes[1:]):
            out = out + vj * w.values
        return m._wrap(out)


class StateScaledForcing(ControlOperator):
    """``L(m, v) = sum_j v_j |m|^r (m × w_j + w_j) / (1 + |m|)`` with ``0 <= r < 2``."""

    kind = "state_scaled"

    def __init__(self, shapes, r: float = 1.0):
        if not 0 <= r < 2:
            raise ValueError("growth exponent r must lie in [0, 2)")
        self.shapes = _shape_stack(shapes)
        self.r = float(r)
        # |m × w + w|_{L2} <= |w|_inf (1 + |m|_{L2}) on the unit domain
        self.growth_constant = math.sqrt(
            sum(float(np.max(np.linalg.norm(w.values, axis=-1))) ** 2 for w in self.shapes)
        )

    def __call__(self, m: Field, v) -> Field:
        v = np.atleast_1d(v)
        mn = m.grid.l2_sq(m.values) ** 0.5
        scale = mn**self.r / (1.0 + mn)
        out = np.zeros_like(m.values)
        for vj, w in zip(v, self.shapes):
            out = out + (vj * scale) * (np.cross(m.values, w.values) + w.values)
        return m._wrap(out)


def project_to_simplex(w) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    w = np.asarray(w, dtype=float)
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, len(w) + 1)
    rho = np.nonzero(u - css / ks > 0)[0][-1]
    out = np.maximum(w - css[rho] / (rho + 1), 0.0)
    return out / out.sum()


def _check_knots(knots) -> np.ndarray:
    knots = np.asarray(knots, dtype=float)
    if knots.ndim != 1 or len(knots) < 2:
        raise ValueError("need at least two knots")
    if knots[0] != 0.0:
        raise ValueError("knots must start at 0")
    if np.any(np.diff(knots) <= 0):
        raise ValueError("knots must be strictly increasing")
    return knots


def _interval_index(knots: np.ndarray, t: float) -> int:
    if not knots[0] <= t <= knots[-1]:
        raise ValueError(f"time {t} outside the horizon [0, {knots[-1]}]")
    return min(int(np.searchsorted(knots, t, side="right")) - 1, len(knots) - 2)


class YoungMeasure:
    """Piecewise-constant-in-time probability weights over a :class:`ControlGrid`.

    Row ``j`` of ``weights`` is the control distribution on ``[knots[j], knots[j+1])``;
    a row with a single 1 is an ordinary control on that interval.
    """

    def __init__(self, control_grid: ControlGrid, knots, weights):
        self.control_grid = control_grid
        self.knots = _check_knots(knots)
        w = np.array(weights, dtype=float)
        if w.shape != (len(self.knots) - 1, len(control_grid)):
            raise ValueError(f"weights must have shape {(len(self.knots) - 1, len(control_grid))}, got {w.shape}")
        if np.any(w < 0) or np.any(np.abs(w.sum(axis=1) - 1.0) > SIMPLEX_TOL):
            raise ValueError("every weight row must lie on the probability simplex")
        self.weights = w

    @classmethod
    def dirac(cls, control_grid, knots, indices) -> "YoungMeasure":
        knots = np.asarray(knots, dtype=float)
        w = np.zeros((len(knots) - 1, len(control_grid)))
        idx = np.broadcast_to(np.asarray(indices, dtype=int), (len(knots) - 1,))
        w[np.arange(len(w)), idx] = 1.0
        return cls(control_grid, knots, w)

    @classmethod
    def uniform(cls, control_grid, knots) -> "YoungMeasure":
        knots = np.asarray(knots, dtype=float)
        k = len(control_grid)
        return cls(control_grid, knots, np.full((len(knots) - 1, k), 1.0 / k))

    @property
    def horizon(self) -> float:
        return float(self.knots[-1])

    def interval_index(self, t: float) -> int:
        return _interval_index(self.knots, t)

    def row(self, t: float) -> np.ndarray:
        return self.weights[self.interval_index(t)]

    def with_row(self, j: int, w) -> "YoungMeasure":
        weights = self.weights.copy()
        weights[j] = project_to_simplex(w)
        return YoungMeasure(self.control_grid, self.knots, weights)

    def is_dirac(self) -> bool:
        return bool(np.all((self.weights == 0.0) | (self.weights == 1.0)))

    def to_ordinary(self) -> "OrdinaryControl":
        if not self.is_dirac():
            raise ValueError("only all-Dirac measures correspond to ordinary controls")
        idx = np.argmax(self.weights, axis=1)
        return OrdinaryControl(self.knots, self.control_grid.points[idx])

    def control_term(self, m: Field, t: float, operator: ControlOperator) -> Field:
        row = self.row(t)
        acc = None
        for w, v in zip(row, self.control_grid.points):
            if w == 0.0:
                continue
            term = operator(m, v).values * w
            acc = term if acc is None else acc + term
        return m._wrap(acc)

    def running_cost(self, t: float, state_term: float, cost: "CostSpec") -> float:
        row = self.row(t)
        total = None
        for w, v in zip(row, self.control_grid.points):
            if w == 0.0:
                continue
            term = w * cost.combine(t, state_term, v)
            total = term if total is None else total + term
        return total

    def kappa4_integral(self, kappa: KappaWeight) -> float:
        """``∫_0^T Σ_k w_k κ(t, v_k)^4 dt`` (κ evaluated at interval starts)."""
        total = 0.0
        for j, row in enumerate(self.weights):
            t0, t1 = self.knots[j], self.knots[j + 1]
            k4 = np.array([kappa(t0, v) ** 4 for v in self.control_grid.points])
            total += (t1 - t0) * float(row @ k4)
        return total

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "points": self.control_grid.to_list(),
            "knots": self.knots.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "YoungMeasure":
        return cls(ControlGrid(d["points"]), d["knots"], d["weights"])


class OrdinaryControl:
    """Piecewise-constant control path ``u(t) = values[j]`` on ``[knots[j], knots[j+1])``."""

    def __init__(self, knots, values):
        self.knots = _check_knots(knots)
        vals = np.asarray(values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if len(vals) != len(self.knots) - 1:
            raise ValueError("need one control value per interval")
        self.values = vals

    def value(self, t: float) -> np.ndarray:
        return self.values[_interval_index(self.knots, t)]

    def control_term(self, m: Field, t: float, operator: ControlOperator) -> Field:
        return operator(m, self.value(t))

    def running_cost(self, t: float, state_term: float, cost: "CostSpec") -> float:
        return cost.combine(t, state_term, self.value(t))


@dataclass
class CostSpec:
    """Running cost ``F(t, m, v) = |m - m_ref|²_{L2} + c_kappa κ(t, v)^4``."""

    target: Field
    c_kappa: float = 1.0
    kappa: KappaWeight = field(default_factory=KappaWeight)

    def __post_init__(self):
        # c_kappa = 0 is allowed for experiments without a control penalty
        if not self.c_kappa >= 0:
            raise ValueError("c_kappa must be nonnegative")

    def state_term(self, m: Field) -> float:
        d = m.values - self.target.values
        return m.grid.l2_sq(d)

    def combine(self, t: float, state_term: float, v) -> float:
        return state_term + self.c_kappa * self.kappa(t, v) ** 4

    def __call__(self, t: float, m: Field, v) -> float:
        check_same_grid(m, self.target)
        return self.combine(t, self.state_term(m), v)


def relaxed_control_term(m: Field, lam: YoungMeasure, t: float, operator: ControlOperator) -> Field:
    """``Σ_k w_{j(t),k} L(m, v_k)``."""
    return lam.control_term(m, t, operator)


def cost_of_path(traj, control, cost: CostSpec) -> float:
    """Left-endpoint quadrature of the running cost on the trajectory's time grid."""
    times = traj.times
    if len(times) < 2 or times[0] != 0.0 or abs(times[-1] - control.knots[-1]) > 1e-12 * max(1.0, times[-1]):
        raise ValueError("trajectory must cover [0, T]")
    grid = traj.grid
    total = 0.0
    for i in range(len(times) - 1):
        dt = times[i + 1] - times[i]
        if dt == 0.0:
            continue
        t = float(times[i])
        d = traj.states[i] - cost.target.values
        s = grid.l2_sq(d)
        total += dt * control.running_cost(t, s, cost)
    return float(total)


def relaxed_cost_of_path(traj, lam: YoungMeasure, cost: CostSpec) -> float:
    return cost_of_path(traj, lam, cost)


@dataclass
class ControlProblem:
    """Simulation setup plus running cost; ``sim`` is an :class:`~sllb.integrator.SimConfig`."""

    sim: object
    cost: CostSpec


class PathFailure(RuntimeError):
    def __init__(self, path_index: int, cause: Exception):
        super().__init__(f"path {path_index} failed: {cause}")
        self.path_index = path_index
        self.cause = cause


def _path_cost(problem: ControlProblem, control, seed) -> float:
    from .integrator import simulate

    traj = simulate(problem.sim, control, seed)
    return cost_of_path(traj, control, problem.cost)


def path_costs(problem: ControlProblem, control, n_paths: int, master_seed: int, threads: int = 1) -> np.ndarray:
    from .levy import derive_seed

    def run(i):
        try:
            return _path_cost(problem, control, derive_seed(master_seed, i))
        except Exception as exc:  # noqa: BLE001 - re-raised with the path index
            raise PathFailure(i, exc) from exc

    if threads <= 1:
        return np.array([run(i) for i in range(n_paths)])
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return np.array(list(pool.map(run, range(n_paths))))


def monte_carlo_cost(
    problem: ControlProblem, control, n_paths: int, master_seed: int, threads: int = 1
) -> tuple[float, float]:
    """Sample mean and standard error of the pathwise relaxed cost.

    Deterministic problems (noise off or a zero measure) are simulated once.
    """
    if n_paths < 2:
        raise ValueError("n_paths must be at least 2")
    sim = problem.sim
    if not sim.noise_on or sim.levy.total_mass() == 0:
        return float(path_costs(problem, control, 1, master_seed)[0]), 0.0
    costs = path_costs(problem, control, n_paths, master_seed, threads)
    return float(costs.mean()), float(costs.std(ddof=1) / math.sqrt(n_paths))


def check_growth(operator: ControlOperator, kappa: KappaWeight, samples: Sequence[tuple[Field, np.ndarray]]):
    """Largest ratio ``|L(m, v)| / (C |m|^r κ(v))`` over samples; must be <= 1."""
    worst = 0.0
    for m, v in samples:
        lhs = m.grid.l2_sq(operator(m, v).values) ** 0.5
        rhs = operator.growth_bound(m, v, kappa)
        if rhs == 0:
            if lhs > 0:
                return math.inf
            continue
        worst = max(worst, lhs / rhs)
    return worst
