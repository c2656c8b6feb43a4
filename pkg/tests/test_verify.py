import numpy as np
import pytest

from sllb.config import FIELD_PRESETS
from sllb.grid import Field, Grid
from sllb.integrator import SimConfig
from sllb.levy import AtomicMeasure
from sllb.marcus import MaterialField, linearized_jump
from sllb.verify import (
    check_compensator_identity,
    check_deterministic_convergence,
    check_energy_estimates,
    check_increment_moments,
    check_jump_isometry,
    check_marcus_lemmas,
    check_truncation_convergence,
    logistic_magnitude,
)


def _small(**kw):
    g = Grid(1, 16)
    base = dict(
        grid=g,
        horizon=0.5,
        dt_max=0.02,
        m0=Field(g, FIELD_PRESETS["cosine_e1"](g.centers())),
        material=MaterialField(Field(g, FIELD_PRESETS["cosine_bump"](g.centers()))),
        levy=AtomicMeasure(((0.3, 1.0), (-0.3, 1.0))),
    )
    base.update(kw)
    return SimConfig(**base)


def test_logistic_closed_form():
    assert logistic_magnitude(0.0) == 1.0
    assert logistic_magnitude(0.5) == pytest.approx(np.sqrt(np.exp(-1) / (2 - np.exp(-1))), rel=1e-15)
    assert float(logistic_magnitude(0.5)) == pytest.approx(0.47477, abs=1e-5)


def test_marcus_suite_seed_42():
    rep = check_marcus_lemmas(42, 1000)
    assert rep["pass"], rep["statistics"]
    assert all(rep["statistics"]["checks"].values())
    assert rep["statistics"]["zero_l"] == 0.0


def test_marcus_suite_deterministic():
    assert check_marcus_lemmas(3, 50) == check_marcus_lemmas(3, 50)


def test_marcus_suite_catches_linearization():
    rep = check_marcus_lemmas(42, 100, jump_map=linearized_jump)
    assert not rep["pass"]
    assert not rep["statistics"]["checks"]["isometry"]
    assert rep["witnesses"]


def test_compensator_atom_exact():
    rep = check_compensator_identity([AtomicMeasure(((0.5, 2.0),))], tol=1e-12)
    assert rep["pass"]
    assert check_compensator_identity(tol=1e-10)["pass"]


def test_compensator_catches_wrong_sign():
    class Wrong(AtomicMeasure):
        def mean_jump(self):
            return -super().mean_jump()

    assert not check_compensator_identity([Wrong(((0.5, 2.0),))])["pass"]


def test_jump_isometry_and_mutation():
    cfg = _small()
    assert check_jump_isometry(cfg, 16, 0)["pass"]
    assert not check_jump_isometry(cfg, 16, 0, jump_map=linearized_jump)["pass"]


def test_deterministic_convergence():
    rep = check_deterministic_convergence()
    assert rep["pass"]
    assert abs(rep["statistics"]["slope"] - 1.0) <= 0.15


def test_energy_zero_noise_sup_is_initial():
    cfg = _small(noise_on=False, control_on=False)
    rep = check_energy_estimates(cfg, 2, (0.02, 0.01))
    m0 = cfg.grid.l2_sq(cfg.m0.values)
    assert rep["statistics"]["functionals"]["sup_l2_sq"] == [m0, m0]


def test_energy_zero_state_invariant():
    g = Grid(1, 16)
    cfg = _small(m0=Field.zeros(g), control_on=False)
    rep = check_energy_estimates(cfg, 8, (0.02, 0.01))
    assert rep["pass"]
    assert all(v == [0.0, 0.0] for v in rep["statistics"]["functionals"].values())


def test_energy_small_reference():
    rep = check_energy_estimates(_small(control_on=False), 32, (0.02, 0.01, 0.005))
    assert rep["pass"], rep["statistics"]["coarse_to_fine_ratio"]


def test_increment_vacuous_when_frozen():
    cfg = _small(drift_on=False, noise_on=False, control_on=False)
    rep = check_increment_moments(cfg, [0.25, 0.125, 0.0625], 2)
    assert rep["pass"] and rep["statistics"]["vacuous"]


def test_increment_pure_drift_slope_two():
    cfg = _small(dt_max=2.0**-12, noise_on=False, control_on=False, material=MaterialField(Field.constant(Grid(1, 16), [0, 0, 1.0])))
    rep = check_increment_moments(cfg, [2.0**-k for k in range(6, 11)], 2, starts=[0.1, 0.2])
    assert rep["statistics"]["slope"] >= 1.8


def test_increment_noisy_slope():
    cfg = _small(horizon=1.0, dt_max=2.0**-8, control_on=False)
    rep = check_increment_moments(cfg, [2.0**-k for k in range(1, 7)], 32)
    assert rep["pass"], rep["statistics"]


def test_increment_rejects_bad_theta():
    with pytest.raises(ValueError):
        check_increment_moments(_small(), [1.0], 2)


def test_truncation_rate():
    rep = check_truncation_convergence()
    assert rep["pass"]
    assert rep["statistics"]["rate"] == pytest.approx(1.5, abs=0.05)
