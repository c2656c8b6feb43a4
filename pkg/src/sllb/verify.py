"""Executable property checks for the Marcus map, the jump noise and the dynamics.

Each check returns a report ``{"name", "pass", "statistics", "witnesses"}``.
Statistical checks are deterministic given their seed.
"""

from __future__ import annotations

import dataclasses
import logging
import math

import numpy as np

from . import marcus
from .grid import Field, Grid, dual_norm_values
from .integrator import SimConfig, simulate
from .levy import AtomicMeasure, PowerLawMeasure, UniformMeasure, derive_seed
from .marcus import G_op, H_op, MaterialField, b_op, g_op, integrate_G

log = logging.getLogger(__name__)

ISOMETRY_TOL = 1e-13
LIPSCHITZ_G = 2.0 + 1e-9
IDENTITY_TOL = 1e-14
H_SLOPE = (1.9, 2.1)


def _report(name, passed, statistics, witnesses=None):
    return {"name": name, "pass": bool(passed), "statistics": statistics, "witnesses": witnesses or []}


def _loglog_fit(x, y):
    lx, ly = np.log(x), np.log(y)
    slope, icpt = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + icpt)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


def _random_material(rng, grid: Grid) -> MaterialField:
    x = grid.centers()[..., 0]
    kind = rng.integers(3)
    h = np.zeros(grid.shape + (3,))
    if kind == 0:
        h[..., 2] = rng.uniform(0.2, 2.0)
    elif kind == 1:
        h[..., 2] = rng.uniform(0.5, 2.0) * x
    else:
        a = rng.uniform(0.2, 1.5)
        h[..., 0] = a * np.cos(np.pi * x)
        h[..., 1] = a * np.sin(np.pi * x)
        h[..., 2] = 1.0
    return MaterialField(Field(grid, h))


def _random_field(rng, grid: Grid) -> Field:
    return Field(grid, rng.normal(size=grid.shape + (3,)) * rng.uniform(0.1, 3.0))


def _jump_size(rng) -> float:
    l = 0.0
    while l == 0.0:
        l = float(rng.uniform(-1.0, 1.0))
    return l


def check_marcus_lemmas(seed: int = 42, n_samples: int = 1000, grid: Grid = Grid(1, 32), jump_map=None) -> dict:
    """Sampled versions of the linear-growth and Lipschitz bounds for Φ, G and H.

    ``jump_map`` replaces Φ (for mutation testing); G and H are then derived from it.
    """
    jm = jump_map or marcus.phi
    custom = jump_map is not None
    rng = np.random.default_rng(seed)
    worst = {"isometry_pointwise": 0.0, "isometry_l2": 0.0, "h1_ratio_excess": -math.inf, "h1_ratio": 0.0,
             "g_lipschitz": 0.0, "identity": 0.0, "zero_l": 0.0}
    witnesses = []
    slopes = []
    for i in range(n_samples):
        h = _random_material(rng, grid)
        x = _random_field(rng, grid)
        y = _random_field(rng, grid)
        l = _jump_size(rng)
        px = jm(l, x, h)
        iso = float(np.max(np.abs(px.magnitudes() - x.magnitudes())))
        iso_l2 = abs(np.sqrt(grid.l2_sq(px.values)) - np.sqrt(grid.l2_sq(x.values)))
        if iso > worst["isometry_pointwise"]:
            worst["isometry_pointwise"] = iso
            if iso > ISOMETRY_TOL:
                witnesses.append({"check": "isometry", "sample": i, "l": l, "deviation": iso})
        worst["isometry_l2"] = max(worst["isometry_l2"], float(iso_l2))
        # H1 growth against the a priori constant 1 + |∇h|_inf
        c_h1 = 1.0 + h.gradient_bound()
        nx = math.sqrt(grid.l2_sq(x.values) + grid.gradient_sq(x.values))
        npx = math.sqrt(grid.l2_sq(px.values) + grid.gradient_sq(px.values))
        ratio = npx / (1.0 + nx)
        worst["h1_ratio"] = max(worst["h1_ratio"], ratio)
        worst["h1_ratio_excess"] = max(worst["h1_ratio_excess"], ratio - c_h1)
        if custom:
            gx = jm(l, x, h) - x
            gy = jm(l, y, h) - y
            hx = gx - l * g_op(x, h)
        else:
            gx, gy, hx = G_op(l, x, h), G_op(l, y, h), H_op(l, x, h)
        lip = math.sqrt(grid.l2_sq(gx.values - gy.values) / grid.l2_sq(x.values - y.values))
        if lip > worst["g_lipschitz"]:
            worst["g_lipschitz"] = lip
            if lip > LIPSCHITZ_G:
                witnesses.append({"check": "g_lipschitz", "sample": i, "l": l, "ratio": lip})
        ident = float(np.max(np.abs(gx.values - hx.values - l * g_op(x, h).values)))
        worst["identity"] = max(worst["identity"], ident)
        if i < 20:
            # l = 0: Φ is the identity and G, H vanish
            z = jm(0.0, x, h)
            g0 = z - x
            worst["zero_l"] = max(worst["zero_l"], float(np.max(np.abs(g0.values))))
            ls = 2.0 ** -np.arange(3, 13)
            if custom:
                norms = [np.sqrt(grid.l2_sq((jm(s, x, h) - x - s * g_op(x, h)).values)) for s in ls]
            else:
                norms = [np.sqrt(grid.l2_sq(H_op(s, x, h).values)) for s in ls]
            if min(norms) > 0:
                slopes.append(_loglog_fit(ls, np.array(norms))[0])

    checks = {
        "isometry": bool(worst["isometry_pointwise"] <= ISOMETRY_TOL and worst["isometry_l2"] <= ISOMETRY_TOL),
        "h1_growth": worst["h1_ratio_excess"] <= 1e-12,
        "g_lipschitz": worst["g_lipschitz"] <= LIPSCHITZ_G,
        "h_slope": bool(slopes) and all(H_SLOPE[0] <= s <= H_SLOPE[1] for s in slopes),
        "identity": worst["identity"] <= IDENTITY_TOL,
        "zero_jump": worst["zero_l"] == 0.0,
    }
    stats = dict(worst)
    stats["h_slope_min"] = float(min(slopes)) if slopes else None
    stats["h_slope_max"] = float(max(slopes)) if slopes else None
    stats["checks"] = checks
    stats["n_samples"] = n_samples
    return _report("marcus_lemmas", all(checks.values()), stats, witnesses[:10])


def builtin_specs() -> list:
    return [
        AtomicMeasure(((0.5, 2.0),)),
        AtomicMeasure(((0.3, 1.0), (-0.3, 1.0))),
        UniformMeasure(1.5, 0.8),
        PowerLawMeasure(0.5, 1.0, 0.01),
    ]


def check_compensator_identity(specs=None, seed: int = 0, n_fields: int = 20, grid: Grid = Grid(1, 32),
                               tol: float = 1e-10) -> dict:
    """Residual of ``b(m) - ∫G dν + mean_jump · g(m)`` in L2 for random fields."""
    specs = specs if specs is not None else builtin_specs()
    rng = np.random.default_rng(seed)
    per_spec = []
    witnesses = []
    for spec in specs:
        worst = 0.0
        for _ in range(n_fields):
            h = _random_material(rng, grid)
            m = _random_field(rng, grid)
            res = b_op(m, spec, h) - integrate_G(m, spec, h) + g_op(m, h) * spec.mean_jump()
            worst = max(worst, math.sqrt(grid.l2_sq(res.values)))
        per_spec.append({"family": spec.family, "spec": spec.to_dict(), "max_residual": worst})
        if worst > tol:
            witnesses.append(per_spec[-1])
    return _report("compensator_identity", not witnesses, {"specs": per_spec, "tolerance": tol}, witnesses)


def noise_only(config: SimConfig) -> SimConfig:
    return dataclasses.replace(config, drift_on=False, control_on=False, noise_on=True)


def check_jump_isometry(config: SimConfig, n_paths: int = 64, seed: int = 0, tol: float = 1e-12,
                        jump_map=None) -> dict:
    """With drift and control off, pointwise |m(t, ξ)| must stay at |m0(ξ)| along every path."""
    cfg = noise_only(config)
    ref = np.linalg.norm(cfg.m0.values, axis=-1)
    worst = 0.0
    jumps = 0
    witnesses = []
    for p in range(n_paths):
        traj = simulate(cfg, None, derive_seed(seed, p), jump_map=jump_map)
        jumps += len(traj.jumps)
        dev = float(np.max(np.abs(np.linalg.norm(traj.states, axis=-1) - ref)))
        if dev > worst:
            worst = dev
        if dev > tol and len(witnesses) < 5:
            witnesses.append({"path": p, "deviation": dev, "jumps": len(traj.jumps)})
    stats = {"max_deviation": worst, "tolerance": tol, "n_paths": n_paths, "total_jumps": jumps,
             "symmetric_measure": bool(cfg.levy.mean_jump() == 0.0)}
    return _report("jump_isometry", worst <= tol, stats, witnesses)


def logistic_magnitude(t, a0: float = 1.0):
    """Closed form of ``a' = -(1 + a²) a``: with ``y = a²``, ``y' = -2(1 + y) y``."""
    y0 = a0 * a0
    e = np.exp(-2.0 * np.asarray(t, dtype=float))
    return np.sqrt(y0 * e / (1.0 + y0 - y0 * e))


def constant_field_config(dt: float, horizon: float = 0.5, grid: Grid = Grid(1, 4)) -> SimConfig:
    return SimConfig(
        grid=grid,
        horizon=horizon,
        dt_max=dt,
        m0=Field.constant(grid, [1.0, 0.0, 0.0]),
        material=MaterialField(Field.constant(grid, [0.0, 0.0, 1.0])),
        noise_on=False,
        control_on=False,
    )


def check_deterministic_convergence(dts=(1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4), horizon: float = 0.5,
                                    value_tol: float = 1e-4, min_slope: float = 0.85) -> dict:
    """Constant-field run against the logistic closed form; error vs dt slope."""
    exact = float(logistic_magnitude(horizon))
    errors = []
    finest = None
    for dt in dts:
        traj = simulate(constant_field_config(dt, horizon), None, 0)
        a = float(np.linalg.norm(traj.states[-1][0]))
        errors.append(abs(a - exact))
        finest = a
    slope, r2 = _loglog_fit(np.array(dts), np.array(errors))
    stats = {"exact": exact, "finest_value": finest, "finest_dt": float(dts[-1]), "errors": errors,
             "dts": list(map(float, dts)), "slope": slope, "r2": r2}
    passed = abs(finest - exact) <= value_tol and slope >= min_slope
    return _report("deterministic_convergence", passed, stats)


ENERGY_NAMES = ("sup_l2_sq", "int_h1_sq", "int_l4_pow4", "sup_h1_sq", "int_lap_sq")


def _trapezoid(t, y):
    return float(np.sum(0.5 * np.diff(t) * (y[1:] + y[:-1])))


def energy_functionals(traj) -> np.ndarray:
    g = traj.grid
    S = traj.states
    l2 = np.array([g.l2_sq(v) for v in S])
    h1 = l2 + np.array([g.gradient_sq(v) for v in S])
    l4 = np.array([g.l4_pow4(v) for v in S])
    lap = np.array([g.l2_sq(g.laplacian(v)) for v in S])
    t = traj.times
    return np.array([l2.max(), _trapezoid(t, h1), _trapezoid(t, l4), h1.max(), _trapezoid(t, lap)])


def check_energy_estimates(config: SimConfig, n_paths: int = 256, dt_levels=(1e-2, 5e-3, 2.5e-3), seed: int = 0,
                           control=None, band: float = 1.15) -> dict:
    """Monte Carlo energy functionals at each dt; stable iff coarse/fine ratios lie in [1/band, band]."""
    table = []
    for dt in dt_levels:
        cfg = dataclasses.replace(config, dt_max=float(dt))
        acc = np.zeros(len(ENERGY_NAMES))
        for p in range(n_paths):
            acc += energy_functionals(simulate(cfg, control, derive_seed(seed, p)))
        table.append(acc / n_paths)
    table = np.array(table)
    finite = bool(np.all(np.isfinite(table)))
    ratios = []
    ok = finite
    for k in range(len(ENERGY_NAMES)):
        coarse, fine = table[0, k], table[-1, k]
        if coarse == 0.0 and fine == 0.0:
            ratios.append(1.0)
            continue
        r = coarse / fine if fine != 0 else math.inf
        ratios.append(float(r))
        ok = ok and (1.0 / band <= r <= band)
    stats = {
        "dt_levels": list(map(float, dt_levels)),
        "n_paths": n_paths,
        "functionals": {name: table[:, k].tolist() for k, name in enumerate(ENERGY_NAMES)},
        "coarse_to_fine_ratio": dict(zip(ENERGY_NAMES, ratios)),
        "band": band,
    }
    return _report("energy_estimates", ok, stats)


def check_increment_moments(config: SimConfig, thetas=None, n_paths: int = 128, seed: int = 0, starts=None,
                            beta: float = 0.5, min_slope: float = 0.9, min_r2: float = 0.95, control=None) -> dict:
    """``E |m(t + θ) - m(t)|²_{X^{-β}}`` vs θ at deterministic times ``t``.

    ``starts=None`` averages over every multiple of θ with ``t + θ <= T``.
    """
    T = config.horizon
    thetas = np.asarray(thetas if thetas is not None else [2.0**-k for k in range(1, 8)], dtype=float)
    if np.any(thetas <= 0) or np.any(thetas > T):
        raise ValueError("theta levels must lie in (0, T]")
    plan = []
    for th in thetas:
        ts = np.arange(0.0, T - th + 1e-12, th) if starts is None else np.asarray(starts, dtype=float)
        ts = ts[ts + th <= T + 1e-12]
        plan.append(ts)
    obs = np.unique(np.concatenate([np.concatenate([ts, ts + th]) for ts, th in zip(plan, thetas)]))
    moments = np.zeros(len(thetas))
    grid = config.grid
    for p in range(n_paths):
        traj = simulate(config, control, derive_seed(seed, p), extra_times=obs)
        for i, (th, ts) in enumerate(zip(thetas, plan)):
            vals = [dual_norm_values(grid, traj.state_at(t + th) - traj.state_at(t), beta) ** 2 for t in ts]
            moments[i] += float(np.mean(vals))
    moments /= n_paths
    stats = {"thetas": thetas.tolist(), "moments": moments.tolist(), "beta": beta, "n_paths": n_paths,
             "min_slope": min_slope, "min_r2": min_r2}
    if np.all(moments == 0):
        log.warning("increment moments vanish identically; Aldous check is vacuous")
        stats.update(slope=None, r2=None, vacuous=True)
        return _report("increment_moments", True, stats)
    if np.any(moments <= 0):
        stats.update(slope=None, r2=None, vacuous=False)
        return _report("increment_moments", False, stats, [{"reason": "some moments vanish"}])
    slope, r2 = _loglog_fit(thetas, moments)
    stats.update(slope=slope, r2=r2, vacuous=False)
    return _report("increment_moments", slope >= min_slope and r2 >= min_r2, stats)


def check_truncation_convergence(cutoffs=(0.1, 0.05, 0.025, 0.0125, 0.00625), alpha: float = 0.5,
                                 scale: float = 1.0, grid: Grid = Grid(1, 32), seed: int = 0) -> dict:
    """Jump activity ``∫ |G(l, m)|² ν_ε(dl)`` as the inner cutoff ε shrinks.

    The increments between successive cutoffs scale like ``ε^(2 - α)``; the
    check passes if they decrease and the fitted rate is within 0.15 of it.
    """
    rng = np.random.default_rng(seed)
    h = _random_material(rng, grid)
    m = _random_field(rng, grid)
    values = []
    for eps in cutoffs:
        spec = PowerLawMeasure(alpha, scale, eps)
        nodes, weights = spec.quadrature()
        total = sum(w * grid.l2_sq(G_op(float(l), m, h).values) for l, w in zip(nodes, weights))
        values.append(float(total))
    incr = np.abs(np.diff(values))
    slope, r2 = _loglog_fit(np.array(cutoffs[1:]), incr)
    passed = bool(np.all(np.diff(incr) < 0)) and abs(slope - (2 - alpha)) <= 0.15
    stats = {"cutoffs": list(map(float, cutoffs)), "activity": values, "increments": incr.tolist(),
             "rate": slope, "expected_rate": 2 - alpha, "r2": r2}
    return _report("truncation_convergence", passed, stats)


def run_suite(cfg, threads: int = 1, n_paths: int | None = None) -> list[dict]:
    """Every check on a :class:`~sllb.config.RunConfig`."""
    v = cfg.verify
    sim = cfg.build_sim()
    sim_nocontrol = dataclasses.replace(sim, control_on=False)
    seed = int(cfg.seed)
    energy_paths = n_paths or v.energy_paths
    inc_paths = n_paths or v.increment_paths
    iso_paths = n_paths or v.isometry_paths
    return [
        check_marcus_lemmas(seed, v.marcus_samples),
        check_compensator_identity(seed=seed),
        check_jump_isometry(sim_nocontrol, iso_paths, seed),
        check_deterministic_convergence(tuple(v.convergence_dts)),
        check_energy_estimates(sim_nocontrol, energy_paths, tuple(v.energy_dt_levels), seed),
        check_increment_moments(dataclasses.replace(sim_nocontrol, dt_max=float(v.increment_dt)),
                                v.increment_thetas, inc_paths, seed),
        check_truncation_convergence(tuple(v.truncation_cutoffs), seed=seed),
    ]
