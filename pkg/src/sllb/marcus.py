"""Marcus jump map for the noise coefficient ``g(v) = v × h``.

The time-1 flow of ``dv/dt = l * v × h(ξ)`` is, cell by cell, the rotation of
``v(ξ)`` about ``h(ξ)/|h(ξ)|`` by the angle ``-l |h(ξ)|``. It is evaluated in
closed form (Rodrigues), so jumps preserve pointwise lengths to rounding.
"""

from __future__ import annotations

import numpy as np

from .grid import Field, check_same_grid

DEGENERATE_AXIS = 1e-14


class MaterialField:
    """The data field ``h`` with cached per-cell axis and magnitude."""

    def __init__(self, h: Field):
        self.field = h
        self.grid = h.grid
        mag = np.linalg.norm(h.values, axis=-1)
        self.degenerate = mag < DEGENERATE_AXIS
        safe = np.where(self.degenerate, 1.0, mag)
        self.axis = np.where(self.degenerate[..., None], 0.0, h.values / safe[..., None])
        self.magnitude = np.where(self.degenerate, 0.0, mag)

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    def gradient_bound(self) -> float:
        """Largest face difference quotient of ``h``; Lipschitz constant of ξ -> Φ(l)(ξ) for |l| <= 1."""
        g = self.grid
        best = 0.0
        for axis in range(g.dimension):
            d = np.linalg.norm(np.diff(self.values, axis=axis), axis=-1)
            if d.size:
                best = max(best, float(d.max()) / g.spacing)
        return best


def _check_l(l: float) -> float:
    l = float(l)
    if not np.isfinite(l):
        raise ValueError(f"jump size must be finite, got {l}")
    return l


def _rotation_increment(l: float, x: np.ndarray, h: MaterialField) -> np.ndarray:
    """``Φ(l, x) - x`` without cancellation for small angles."""
    theta = -l * h.magnitude
    k = h.axis
    kx = np.cross(k, x)
    kkx = np.cross(k, kx)
    s = np.sin(theta)[..., None]
    c1 = (2.0 * np.sin(0.5 * theta) ** 2)[..., None]  # 1 - cos(theta)
    return s * kx + c1 * kkx


def g_op(v: Field, h: MaterialField) -> Field:
    check_same_grid(v, h.field)
    return v._wrap(np.cross(v.values, h.values))


def phi(l: float, x: Field, h: MaterialField) -> Field:
    l = _check_l(l)
    check_same_grid(x, h.field)
    if l == 0.0:
        return x._wrap(x.values.copy())
    return x._wrap(x.values + _rotation_increment(l, x.values, h))


def G_op(l: float, v: Field, h: MaterialField) -> Field:
    l = _check_l(l)
    check_same_grid(v, h.field)
    return v._wrap(_rotation_increment(l, v.values, h))


def H_op(l: float, v: Field, h: MaterialField) -> Field:
    l = _check_l(l)
    check_same_grid(v, h.field)
    return v._wrap(_rotation_increment(l, v.values, h) - l * np.cross(v.values, h.values))


def linearized_jump(l: float, x: Field, h: MaterialField) -> Field:
    """Itô-style jump ``x + l g(x)``; not norm preserving. Used for mutation tests."""
    l = _check_l(l)
    check_same_grid(x, h.field)
    return x._wrap(x.values + l * np.cross(x.values, h.values))


def b_op(v: Field, spec, h: MaterialField) -> Field:
    """``∫_B H(l, v) ν(dl)`` by the measure's quadrature rule (exact for atoms)."""
    if not np.isfinite(spec.total_mass()):
        raise ValueError("b requires a Lévy measure with finite (truncated) mass")
    check_same_grid(v, h.field)
    nodes, weights = spec.quadrature()
    out = np.zeros_like(v.values)
    gv = np.cross(v.values, h.values)
    for l, w in zip(nodes, weights):
        out += w * (_rotation_increment(float(l), v.values, h) - l * gv)
    return v._wrap(out)


def integrate_G(v: Field, spec, h: MaterialField) -> Field:
    """``∫_B G(l, v) ν(dl)`` with the same quadrature as :func:`b_op`."""
    check_same_grid(v, h.field)
    nodes, weights = spec.quadrature()
    out = np.zeros_like(v.values)
    for l, w in zip(nodes, weights):
        out += w * _rotation_increment(float(l), v.values, h)
    return v._wrap(out)
