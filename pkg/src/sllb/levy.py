"""Restricted Lévy measures on the punctured unit interval and Poisson sampling.

Only finite-activity measures are simulated. The infinite-activity power law
must carry an inner cutoff; jumps below it are dropped, not replaced by a
Gaussian correction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .marcus import g_op

GAUSS_ORDER = 32


class JumpEvent(NamedTuple):
    time: float
    size: float


def derive_seed(master: int, *keys: int) -> np.random.SeedSequence:
    """Counter-mix a 64-bit master seed with integer keys (e.g. a path index)."""
    return np.random.SeedSequence(entropy=int(master) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(k) for k in keys))


def derive_int_seed(master: int, *keys: int) -> int:
    return int(derive_seed(master, *keys).generate_state(1, np.uint64)[0])


def _gauss_legendre_panels(a: float, b: float, breaks=None):
    x, w = np.polynomial.legendre.leggauss(GAUSS_ORDER)
    edges = np.asarray(breaks if breaks is not None else [a, b], dtype=float)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        nodes.append(lo + half * (x + 1.0))
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


class LevyMeasureSpec:
    """Base class; subclasses define the measure ``ν`` on ``0 < |l| <= 1``."""

    family: str = ""
    symmetric: bool = False

    def total_mass(self) -> float:
        raise NotImplementedError

    def mean_jump(self) -> float:
        raise NotImplementedError

    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights with ``sum w f(l) ≈ ∫ f dν`` (exact for atoms)."""
        raise NotImplementedError

    def sample_sizes(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def size_cdf(self, x: np.ndarray) -> np.ndarray:
        """CDF of the normalized jump-size law ``ν / ν(B)``."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class AtomicMeasure(LevyMeasureSpec):
    atoms: tuple[tuple[float, float], ...] = ()
    family = "atoms"

    def __post_init__(self):
        atoms = tuple((float(l), float(w)) for l, w in self.atoms)
        for l, w in atoms:
            if not (0.0 < abs(l) <= 1.0):
                raise ValueError(f"atom location {l} outside the punctured unit interval")
            if not w > 0:
                raise ValueError(f"atom mass must be positive, got {w}")
        object.__setattr__(self, "atoms", atoms)

    @property
    def symmetric(self) -> bool:
        pos = sorted((l, w) for l, w in self.atoms if l > 0)
        neg = sorted((-l, w) for l, w in self.atoms if l < 0)
        return pos == neg

    def total_mass(self) -> float:
        return float(sum(w for _, w in self.atoms))

    def mean_jump(self) -> float:
        if self.symmetric:
            return 0.0
        return float(sum(l * w for l, w in self.atoms))

    def quadrature(self):
        if not self.atoms:
            return np.zeros(0), np.zeros(0)
        arr = np.asarray(self.atoms)
        return arr[:, 0].copy(), arr[:, 1].copy()

    def sample_sizes(self, rng, n):
        locs, masses = self.quadrature()
        idx = rng.choice(len(locs), size=n, p=masses / masses.sum())
        return locs[idx]

    def size_cdf(self, x):
        locs, masses = self.quadrature()
        p = masses / masses.sum()
        x = np.asarray(x, dtype=float)
        return np.sum(p[None, :] * (locs[None, :] <= x.reshape(-1, 1)), axis=1).reshape(x.shape)

    def to_dict(self):
        return {"family": "atoms", "atoms": [[l, w] for l, w in self.atoms]}


@dataclass(frozen=True)
class UniformMeasure(LevyMeasureSpec):
    """Constant density ``intensity`` on ``[-b, b] \\ {0}``."""

    intensity: float = 1.0
    b: float = 1.0
    family = "uniform_density"
    symmetric = True

    def __post_init__(self):
        if not self.intensity > 0:
            raise ValueError("intensity must be positive")
        if not 0 < self.b <= 1:
            raise ValueError("support half-width b must lie in (0, 1]")

    def total_mass(self):
        return 2.0 * self.intensity * self.b

    def mean_jump(self):
        return 0.0

    def quadrature(self):
        x, w = _gauss_legendre_panels(0.0, self.b)
        return np.concatenate([-x[::-1], x]), self.intensity * np.concatenate([w[::-1], w])

    def sample_sizes(self, rng, n):
        return rng.uniform(-self.b, self.b, size=n)

    def size_cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) + self.b) / (2 * self.b), 0.0, 1.0)

    def to_dict(self):
        return {"family": "uniform_density", "intensity": self.intensity, "b": self.b}


@dataclass(frozen=True)
class PowerLawMeasure(LevyMeasureSpec):
    """Symmetric density ``scale / |l|^(1 + alpha)`` on ``cutoff <= |l| <= 1``."""

    alpha: float = 0.5
    scale: float = 1.0
    cutoff: float = 0.01
    family = "truncated_power_law"
    symmetric = True

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise ValueError("alpha must lie in (0, 2)")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if not 0 < self.cutoff < 1:
            raise ValueError("power-law measures need an inner cutoff in (0, 1)")

    def _half_mass(self):
        return self.scale * (self.cutoff**-self.alpha - 1.0) / self.alpha

    def total_mass(self):
        return 2.0 * self._half_mass()

    def mean_jump(self):
        return 0.0

    def quadrature(self):
        # geometric panels keep each panel far from the singularity at 0
        n_panels = max(1, int(np.ceil(np.log2(1.0 / self.cutoff))))
        breaks = np.geomspace(self.cutoff, 1.0, n_panels + 1)
        x, w = _gauss_legendre_panels(self.cutoff, 1.0, breaks)
        w = w * self.scale * x ** (-1.0 - self.alpha)
        return np.concatenate([-x[::-1], x]), np.concatenate([w[::-1], w])

    def sample_sizes(self, rng, n):
        u = rng.uniform(size=n)
        e = self.cutoff**-self.alpha
        r = (e - u * (e - 1.0)) ** (-1.0 / self.alpha)
        sign = np.where(rng.uniform(size=n) < 0.5, -1.0, 1.0)
        return sign * r

    def size_cdf(self, x):
        x = np.asarray(x, dtype=float)
        e = self.cutoff**-self.alpha
        r = np.clip(np.abs(x), self.cutoff, 1.0)
        tail = (r**-self.alpha - 1.0) / (e - 1.0)  # P(|L| >= r)
        out = np.where(x < 0, 0.5 * tail, 1.0 - 0.5 * tail)
        out = np.where(x <= -1.0, 0.0, out)
        out = np.where(x >= 1.0, 1.0, out)
        return out

    def to_dict(self):
        return {"family": "truncated_power_law", "alpha": self.alpha, "scale": self.scale, "cutoff": self.cutoff}


def levy_from_dict(d: dict) -> LevyMeasureSpec:
    family = d.get("family")
    if family == "atoms":
        return AtomicMeasure(tuple(tuple(a) for a in d.get("atoms", [])))
    if family == "uniform_density":
        return UniformMeasure(float(d["intensity"]), float(d["b"]))
    if family == "truncated_power_law":
        if "cutoff" not in d:
            raise ValueError("truncated_power_law requires an inner cutoff")
        return PowerLawMeasure(float(d["alpha"]), float(d["scale"]), float(d["cutoff"]))
    raise ValueError(f"unknown Lévy family {family!r}")


def total_mass(spec: LevyMeasureSpec) -> float:
    return spec.total_mass()


def mean_jump(spec: LevyMeasureSpec) -> float:
    return spec.mean_jump()


def sample_prm(spec: LevyMeasureSpec, horizon: float, seed) -> list[JumpEvent]:
    """Atoms of the Poisson random measure on ``[0, T] x B`` with intensity Leb ⊗ ν.

    ``seed`` is an int or a :class:`numpy.random.SeedSequence`.
    """
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    mass = spec.total_mass()
    if not np.isfinite(mass):
        raise ValueError("Lévy measure must have finite mass")
    if mass == 0:
        return []
    rng = np.random.default_rng(seed)
    n = int(rng.poisson(mass * horizon))
    times = np.sort(rng.uniform(0.0, horizon, size=n))
    sizes = spec.sample_sizes(rng, n)
    return [JumpEvent(float(t), float(l)) for t, l in zip(times, sizes)]


def compensated_noise_drift(spec: LevyMeasureSpec, m, h):
    """Inter-jump drift ``b(m) - ∫ G(l, m) ν(dl) = -mean_jump * (m × h)``."""
    return g_op(m, h) * (-spec.mean_jump())
