"""Landau–Lifshitz–Bloch drift above the Curie temperature."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .grid import Field


@dataclass(frozen=True)
class PhysicalConstants:
    kappa1: float = 1.0  # exchange diffusion
    gamma: float = 1.0  # precession
    kappa: float = 1.0  # longitudinal relaxation
    mu: float = 1.0  # cubic coefficient

    def __post_init__(self):
        if not self.kappa1 > 0:
            raise ValueError("kappa1 must be positive")
        for name in ("gamma", "kappa", "mu"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def to_dict(self) -> dict:
        return asdict(self)


def cubic_coefficient(temperature: float, curie_temperature: float) -> float:
    """``mu = (3/5) T / (T - T_c)``."""
    if temperature == curie_temperature:
        raise ValueError("cubic coefficient is singular at the Curie temperature")
    return 0.6 * temperature / (temperature - curie_temperature)


def effective_field(
    m: Field,
    chi_parallel: float = 1.0,
    mu: float | None = None,
    temperature: float | None = None,
    curie_temperature: float | None = None,
) -> Field:
    """Exchange field plus entropy correction, ``Δm - (1 + mu|m|^2) m / chi``.

    ``mu`` defaults to 1 unless both temperatures are given.
    """
    if temperature is not None or curie_temperature is not None:
        if temperature is None or curie_temperature is None:
            raise ValueError("give both temperature and curie_temperature")
        mu = cubic_coefficient(temperature, curie_temperature)
    elif mu is None:
        mu = 1.0
    v = m.values
    sq = np.sum(v * v, axis=-1, keepdims=True)
    return m._wrap(m.grid.laplacian(v) - (1.0 + mu * sq) * v / chi_parallel)


def drift_values(v: np.ndarray, grid, c: PhysicalConstants, lap: np.ndarray | None = None) -> np.ndarray:
    if lap is None:
        lap = grid.laplacian(v)
    sq = np.sum(v * v, axis=-1, keepdims=True)
    return c.kappa1 * lap + c.gamma * np.cross(v, lap) - c.kappa * (1.0 + c.mu * sq) * v


def llb_drift(m: Field, constants: PhysicalConstants = PhysicalConstants()) -> Field:
    """``κ1 Δm + γ m × Δm - κ (1 + μ|m|²) m``."""
    return m._wrap(drift_values(m.values, m.grid, constants))


def explicit_drift_values(v: np.ndarray, grid, c: PhysicalConstants) -> np.ndarray:
    """The drift minus its implicit diffusion part ``κ1 Δm``."""
    lap = grid.laplacian(v)
    sq = np.sum(v * v, axis=-1, keepdims=True)
    return c.gamma * np.cross(v, lap) - c.kappa * (1.0 + c.mu * sq) * v


def energy_rate(m: Field, constants: PhysicalConstants = PhysicalConstants()) -> float:
    """``-κ1 |∇m|² - κ ∫ (1 + μ|m|²)|m|²``, the value of ``<llb_drift(m), m>``."""
    g = m.grid
    v = m.values
    return -constants.kappa1 * g.gradient_sq(v) - constants.kappa * (g.l2_sq(v) + constants.mu * g.l4_pow4(v))
