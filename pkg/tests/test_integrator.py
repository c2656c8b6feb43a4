import dataclasses

import numpy as np
import pytest

from conftest import const_h, ramp_h
from sllb.control import AdditiveForcing, ControlGrid, YoungMeasure
from sllb.grid import Field, Grid
from sllb.integrator import SimConfig, SimulationError, Stepper, apply_jump, drift_step, simulate, time_mesh
from sllb.levy import AtomicMeasure, PowerLawMeasure, derive_seed, sample_prm
from sllb.marcus import linearized_jump
from sllb.verify import logistic_magnitude


def _cfg(grid=Grid(1, 16), **kw):
    x = grid.centers()[..., 0]
    m0 = np.zeros(grid.shape + (3,))
    m0[..., 0] = np.cos(np.pi * x)
    base = dict(
        grid=grid,
        horizon=1.0,
        dt_max=0.01,
        m0=Field(grid, m0),
        material=ramp_h(grid),
        levy=AtomicMeasure(((0.3, 1.0), (-0.3, 1.0))),
        operator=AdditiveForcing(Field.constant(grid, [1.0, 0, 0])),
    )
    base.update(kw)
    return SimConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        _cfg(horizon=0.0)
    with pytest.raises(ValueError):
        _cfg(dt_max=2.0)
    with pytest.raises(ValueError):
        _cfg(m0=Field.zeros(Grid(1, 8)))


def test_golden_constant_step():
    # rhs = a + dt(-(1 + a²)a) = 0.8; the diffusion solve leaves constants alone
    g = Grid(1, 8)
    cfg = _cfg(g, m0=Field.constant(g, [1.0, 0, 0]), noise_on=False, control_on=False, dt_max=0.1)
    out = drift_step(cfg.m0, 0.1, 0.0, None, cfg)
    np.testing.assert_allclose(out.values[:, 0], 0.8, atol=1e-15)
    assert np.all(out.values[:, 1:] == 0.0)


def test_all_toggles_off_is_identity():
    cfg = _cfg(drift_on=False, noise_on=False, control_on=False)
    traj = simulate(cfg, None, 0)
    assert np.all(traj.states == cfg.m0.values)


def test_apply_jump_examples():
    g = Grid(1, 4)
    h = const_h(g)
    e1 = Field.constant(g, [1.0, 0, 0])
    assert np.array_equal(apply_jump(e1, 0.0, h).values, e1.values)
    np.testing.assert_allclose(apply_jump(e1, np.pi / 2 / np.pi, const_h(g, (0, 0, np.pi))).values[:, 1], -1.0, atol=1e-15)
    with pytest.raises(ValueError):
        apply_jump(e1, 1.5, h)


def test_jump_preserves_l4(rng):
    g = Grid(1, 16)
    m = Field(g, rng.normal(size=(16, 3)))
    out = apply_jump(m, -0.8, ramp_h(g))
    assert g.l4_pow4(out.values) ** 0.25 == pytest.approx(g.l4_pow4(m.values) ** 0.25, abs=1e-12)


def test_closed_form_logistic():
    g = Grid(1, 4)
    cfg = _cfg(g, m0=Field.constant(g, [1.0, 0, 0]), horizon=0.5, dt_max=1e-4, noise_on=False, control_on=False,
               material=const_h(g))
    a = np.linalg.norm(simulate(cfg, None, 0).states[-1][0])
    assert a == pytest.approx(0.47477, abs=1e-4)
    assert abs(a - logistic_magnitude(0.5)) <= 1e-4


def test_noise_only_isometry_with_power_law():
    cfg = _cfg(drift_on=False, control_on=False, levy=PowerLawMeasure(0.5, 1.0, 0.05))
    ref = np.linalg.norm(cfg.m0.values, axis=-1)
    for p in range(8):
        traj = simulate(cfg, None, derive_seed(1, p))
        assert np.max(np.abs(np.linalg.norm(traj.states, axis=-1) - ref)) <= 1e-12


def test_noise_only_isometry_asymmetric():
    # the compensator rotation is exact too
    cfg = _cfg(drift_on=False, control_on=False, levy=AtomicMeasure(((0.5, 2.0),)))
    ref = np.linalg.norm(cfg.m0.values, axis=-1)
    traj = simulate(cfg, None, 4)
    assert np.max(np.abs(np.linalg.norm(traj.states, axis=-1) - ref)) <= 1e-12


def test_linearized_jump_breaks_isometry():
    cfg = _cfg(drift_on=False, control_on=False)
    ref = np.linalg.norm(cfg.m0.values, axis=-1)
    devs = []
    for p in range(8):
        traj = simulate(cfg, None, derive_seed(0, p), jump_map=linearized_jump)
        devs.append(np.max(np.abs(np.linalg.norm(traj.states, axis=-1) - ref)))
    assert max(devs) > 1e-3


def test_jumps_at_exact_times():
    cfg = _cfg()
    seed = derive_seed(3, 0)
    jumps = sample_prm(cfg.levy, cfg.horizon, seed)
    traj = simulate(cfg, None, seed)
    assert traj.jumps == jumps and len(jumps) > 0
    for e in jumps:
        idx = np.nonzero(traj.times == e.time)[0]
        assert len(idx) >= 2  # pre and post share the stamp
        pre, post = traj.states[idx[0]], traj.states[idx[-1]]
        assert not np.array_equal(pre, post)


def test_trajectory_shape_contract():
    traj = simulate(_cfg(), None, 11)
    assert traj.times[0] == 0.0 and traj.times[-1] == 1.0
    assert np.all(np.diff(traj.times) >= 0)
    assert np.all(np.isfinite(traj.states))


def test_determinism_bitwise():
    cfg = _cfg()
    lam = YoungMeasure.uniform(ControlGrid([-1.0, 1.0]), [0, 0.5, 1.0])
    a = simulate(cfg, lam, 7)
    b = simulate(cfg, lam, 7)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.states, b.states)


@pytest.mark.parametrize("grid", [Grid(1, 32), Grid(2, 8)])
def test_energy_monotone_without_noise(grid):
    x = grid.centers()[..., 0]
    m0 = np.zeros(grid.shape + (3,))
    m0[..., 0] = np.cos(np.pi * x)
    m0[..., 2] = 0.5
    cfg = _cfg(grid, m0=Field(grid, m0), material=const_h(grid), noise_on=False, control_on=False)
    traj = simulate(cfg, None, 0)
    l2 = np.sqrt([grid.l2_sq(v) for v in traj.states])
    assert np.all(np.diff(l2) <= 1e-12)


def test_sup_h1_stable_under_halving():
    vals = []
    for dt in (0.01, 0.005):
        cfg = _cfg(dt_max=dt)
        sups = [max(cfg.grid.l2_sq(v) + cfg.grid.gradient_sq(v) for v in simulate(cfg, None, derive_seed(0, p)).states)
                for p in range(64)]
        vals.append(max(sups))
    assert np.isfinite(vals).all()
    assert 1 / 1.15 <= vals[0] / vals[1] <= 1.15


def test_nonfinite_state_aborts():
    g = Grid(1, 8)
    cfg = _cfg(g, m0=Field.constant(g, [1e200, 0, 0]), noise_on=False, control_on=False)
    with pytest.raises(SimulationError) as err:
        simulate(cfg, None, 0)
    assert err.value.time is not None and err.value.cell is not None


def test_dt_above_max_rejected():
    cfg = _cfg()
    with pytest.raises(ValueError):
        Stepper(cfg).drift_step(cfg.m0, 0.1, 0.0, None)


def test_time_mesh_includes_extras():
    mesh = time_mesh(1.0, 0.25, [0.1, 0.9], [2.0])
    assert mesh.tolist() == [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0]


def test_control_must_span_horizon():
    with pytest.raises(ValueError):
        simulate(_cfg(), YoungMeasure.uniform(ControlGrid([0.0, 1.0]), [0, 0.5]), 0)


def test_snapshot_stride_keeps_endpoints():
    cfg = dataclasses.replace(_cfg(), snapshot_stride=10)
    traj = simulate(cfg, None, 2)
    assert traj.times[-1] == 1.0
    assert len(traj.times) < 40
