"""Jump-adapted IMEX integration of the relaxed controlled Marcus-form equation.

Between jumps, one step is

1. an IMEX step: ``(I - dt κ1 Δ) m⁺ = m + dt (γ m×Δm - κ(1+μ|m|²)m + control)``,
   with the linear solve done by tridiagonal factorization (ADI sweeps in 2D);
2. the compensated noise drift ``-mean_jump · m × h``, which generates a
   rotation and is applied as the exact rotation ``Φ(-mean_jump·dt, ·)``.

At each sampled jump ``(t, l)`` the state is mapped by ``Φ(l, ·)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import marcus
from .dynamics import PhysicalConstants, explicit_drift_values
from .grid import Field, Grid
from .levy import AtomicMeasure, JumpEvent, LevyMeasureSpec, sample_prm
from .marcus import MaterialField


class SimulationError(RuntimeError):
    def __init__(self, message: str, time: float | None = None, cell=None):
        super().__init__(message)
        self.time = time
        self.cell = cell


@dataclass
class SimConfig:
    grid: Grid
    horizon: float
    dt_max: float
    m0: Field
    material: MaterialField
    levy: LevyMeasureSpec = field(default_factory=AtomicMeasure)
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    operator: object = None
    drift_on: bool = True
    noise_on: bool = True
    control_on: bool = True
    snapshot_stride: int = 1

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if not 0 < self.dt_max <= self.horizon:
            raise ValueError("dt_max must lie in (0, horizon]")
        if self.m0.grid != self.grid or self.material.grid != self.grid:
            raise ValueError("m0 and material field must live on the config grid")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")


@dataclass
class Trajectory:
    """Recorded sample path. Jump times appear twice: pre-jump state, then post-jump."""

    grid: Grid
    times: np.ndarray
    states: np.ndarray
    jumps: list[JumpEvent]

    def field(self, i: int) -> Field:
        return Field(self.grid, self.states[i])

    def index_at(self, t: float) -> int:
        """Index of the right-continuous state at ``t`` (post-jump if ``t`` is a jump time)."""
        return int(np.searchsorted(self.times, t, side="right")) - 1

    def state_at(self, t: float) -> np.ndarray:
        return self.states[self.index_at(t)]


def _tridiagonal_band(n: int, r: float) -> np.ndarray:
    """Upper band storage of ``I - r D`` with ``D`` the Neumann second-difference matrix."""
    ab = np.empty((2, n))
    ab[0, 0] = 0.0
    ab[0, 1:] = -r
    ab[1, :] = 1.0 + 2.0 * r
    ab[1, 0] = ab[1, -1] = 1.0 + r
    return ab


class _DiffusionSolver:
    """Solves ``(I - dt κ1 Δ) x = b``; factorizations cached per ``dt``."""

    def __init__(self, grid: Grid, kappa1: float):
        self.grid = grid
        self.kappa1 = kappa1
        self._cache: dict[float, np.ndarray] = {}

    def _factor(self, dt: float) -> np.ndarray:
        fac = self._cache.get(dt)
        if fac is None:
            r = dt * self.kappa1 / self.grid.spacing**2
            fac = scipy.linalg.cholesky_banded(_tridiagonal_band(self.grid.cells, r))
            if len(self._cache) > 64:
                self._cache.clear()
            self._cache[dt] = fac
        return fac

    def solve(self, b: np.ndarray, dt: float) -> np.ndarray:
        fac = self._factor(dt)
        n = self.grid.cells
        if self.grid.dimension == 1:
            return scipy.linalg.cho_solve_banded((fac, False), b, check_finite=False)
        # alternating-direction sweeps: x-lines, then y-lines
        x = scipy.linalg.cho_solve_banded((fac, False), b.reshape(n, -1), check_finite=False).reshape(b.shape)
        xt = np.swapaxes(x, 0, 1)
        y = scipy.linalg.cho_solve_banded((fac, False), np.ascontiguousarray(xt).reshape(n, -1), check_finite=False)
        return np.swapaxes(y.reshape(xt.shape), 0, 1).copy()


class Stepper:
    """Holds the per-config state (diffusion factorizations, jump moments)."""

    def __init__(self, config: SimConfig, jump_map=None):
        self.config = config
        self.diffusion = _DiffusionSolver(config.grid, config.constants.kappa1)
        self.mean_jump = config.levy.mean_jump() if config.noise_on else 0.0
        self.jump_map = jump_map or marcus.phi

    def drift_step(self, m: Field, dt: float, t: float, control) -> Field:
        cfg = self.config
        if dt > cfg.dt_max * (1 + 1e-12):
            raise ValueError(f"dt={dt} exceeds dt_max={cfg.dt_max}")
        v = m.values
        rhs = None
        if cfg.drift_on:
            with np.errstate(over="ignore", invalid="ignore"):
                rhs = v + dt * explicit_drift_values(v, cfg.grid, cfg.constants)
        if cfg.control_on and cfg.operator is not None and control is not None:
            ctrl = control.control_term(m, t, cfg.operator).values
            rhs = (v if rhs is None else rhs) + dt * ctrl
        if rhs is not None and not np.all(np.isfinite(rhs)):
            bad = tuple(int(c) for c in np.argwhere(~np.isfinite(rhs))[0][:-1])
            raise SimulationError(f"non-finite state at t={t + dt:.6g}, cell {bad}", time=t + dt, cell=bad)
        if cfg.drift_on:
            v = self.diffusion.solve(rhs, dt)
        elif rhs is not None:
            v = rhs
        out = m._wrap(v)
        if cfg.noise_on and self.mean_jump != 0.0:
            out = marcus.phi(-self.mean_jump * dt, out, cfg.material)
        return out

    def apply_jump(self, m: Field, l: float) -> Field:
        return self.jump_map(l, m, self.config.material)


def drift_step(m: Field, dt: float, t: float, control, config: SimConfig) -> Field:
    """One inter-jump step of length ``dt`` starting at time ``t``."""
    return Stepper(config).drift_step(m, dt, t, control)


def apply_jump(m: Field, l: float, h: MaterialField) -> Field:
    """Marcus jump ``m⁺ = Φ(l, m⁻)``."""
    if abs(l) > 1:
        raise ValueError(f"jump size {l} outside the unit ball")
    return marcus.phi(l, m, h)


def time_mesh(horizon: float, dt_max: float, *extra) -> np.ndarray:
    n = max(1, math.ceil(horizon / dt_max - 1e-9))
    pts = [np.linspace(0.0, horizon, n + 1)]
    for e in extra:
        e = np.asarray(e, dtype=float).ravel()
        pts.append(e[(e >= 0) & (e <= horizon)])
    return np.unique(np.concatenate(pts))


def simulate(config: SimConfig, control, seed, extra_times=(), jump_map=None) -> Trajectory:
    """One sample path on the jump-adapted mesh.

    ``control`` is a :class:`~sllb.control.YoungMeasure`, an
    :class:`~sllb.control.OrdinaryControl` or ``None``. ``seed`` is an int or
    a :class:`numpy.random.SeedSequence`; the jump log equals
    ``sample_prm(config.levy, config.horizon, seed)`` when noise is on.
    """
    T = config.horizon
    if control is not None and abs(control.knots[-1] - T) > 1e-12 * max(1.0, T):
        raise ValueError("control must span [0, T]")
    jumps = sample_prm(config.levy, T, seed) if config.noise_on else []
    knots = control.knots if control is not None else ()
    jump_times = [e.time for e in jumps]
    mesh = time_mesh(T, config.dt_max, jump_times, knots, extra_times)
    jump_at: dict[int, list[float]] = {}
    for e in jumps:
        idx = int(np.searchsorted(mesh, e.time))
        jump_at.setdefault(idx, []).append(e.size)

    keep = {int(i) for i in np.searchsorted(mesh, np.asarray(knots, dtype=float))}
    stepper = Stepper(config, jump_map)
    stride = config.snapshot_stride
    m = Field(config.grid, config.m0.values.copy())
    times = [0.0]
    states = [m.values]
    last = len(mesh) - 1
    for i in range(len(mesh)):
        t = float(mesh[i])
        if i in jump_at:
            if times[-1] != t:
                times.append(t)
                states.append(m.values)
            for l in jump_at[i]:
                m = stepper.apply_jump(m, l)
                times.append(t)
                states.append(m.values)
        if i == last:
            break
        dt = float(mesh[i + 1]) - t
        m = stepper.drift_step(m, dt, t, control)
        if not np.all(np.isfinite(m.values)):
            bad = np.argwhere(~np.isfinite(m.values))[0][:-1]
            raise SimulationError(
                f"non-finite state at t={mesh[i + 1]:.6g}, cell {tuple(int(c) for c in bad)}",
                time=float(mesh[i + 1]),
                cell=tuple(int(c) for c in bad),
            )
        if (i + 1) % stride == 0 or i + 1 == last or (i + 1) in jump_at or (i + 1) in keep:
            times.append(float(mesh[i + 1]))
            states.append(m.values)
    return Trajectory(config.grid, np.array(times), np.array(states), jumps)
