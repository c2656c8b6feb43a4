"""Cell-centered grids on the unit interval/square with Neumann boundaries.

Vector fields are stored as arrays of shape ``grid.shape + (3,)``. The
discrete Laplacian uses reflected ghost cells, which makes it symmetric with
respect to the midpoint-rule inner product and diagonal in the DCT-II basis.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.fft


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    dimension: int
    cells: int

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        if int(self.cells) != self.cells or self.cells < 4:
            raise ValueError(f"cells_per_axis must be an integer >= 4, got {self.cells}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.cells

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.cells,) * self.dimension

    @property
    def size(self) -> int:
        return self.cells**self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    def centers(self) -> np.ndarray:
        """Cell-center coordinates, shape ``shape + (dimension,)``."""
        x = (np.arange(self.cells) + 0.5) * self.spacing
        if self.dimension == 1:
            return x[:, None]
        return np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1)

    # array-level kernels, shared by the Field API and the integrator

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros_like(values)
        inv_h2 = 1.0 / self.spacing**2
        for axis in range(self.dimension):
            d = np.diff(values, axis=axis) * inv_h2
            lo = [slice(None)] * values.ndim
            hi = [slice(None)] * values.ndim
            lo[axis] = slice(0, -1)
            hi[axis] = slice(1, None)
            out[tuple(lo)] += d
            out[tuple(hi)] -= d
        return out

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.sum(a * b)) * self.cell_volume

    def gradient_sq(self, values: np.ndarray) -> float:
        """Squared L2 norm of the face-centered discrete gradient."""
        total = 0.0
        for axis in range(self.dimension):
            total += float(np.sum(np.diff(values, axis=axis) ** 2))
        return total * self.cell_volume / self.spacing**2

    def l2_sq(self, values: np.ndarray) -> float:
        return float(np.sum(values * values)) * self.cell_volume

    def l4_pow4(self, values: np.ndarray) -> float:
        return float(np.sum(np.sum(values * values, axis=-1) ** 2)) * self.cell_volume


def _fast_field(grid: Grid, values: np.ndarray) -> "Field":
    f = object.__new__(Field)
    object.__setattr__(f, "grid", grid)
    object.__setattr__(f, "values", values)
    return f


@dataclass(frozen=True, eq=False)
class Field:
    """A 3-vector per grid cell."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        expected = self.grid.shape + (3,)
        if values.shape != expected:
            raise ValueError(f"field values must have shape {expected}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: Grid, vector) -> "Field":
        return cls(grid, np.broadcast_to(np.asarray(vector, dtype=float), grid.shape + (3,)))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return _fast_field(grid, np.zeros(grid.shape + (3,)))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        """Evaluate ``fn(x)`` at cell centers; ``x`` has shape ``shape + (dim,)``."""
        return cls(grid, fn(grid.centers()))

    def _wrap(self, values: np.ndarray) -> "Field":
        return _fast_field(self.grid, values)

    def _other(self, other: "Field") -> np.ndarray:
        check_same_grid(self, other)
        return other.values

    def __add__(self, other: "Field") -> "Field":
        return self._wrap(self.values + self._other(other))

    def __sub__(self, other: "Field") -> "Field":
        return self._wrap(self.values - self._other(other))

    def __neg__(self) -> "Field":
        return self._wrap(-self.values)

    def __mul__(self, alpha: float) -> "Field":
        return self._wrap(self.values * float(alpha))

    __rmul__ = __mul__

    def copy(self) -> "Field":
        return self._wrap(self.values.copy())

    def magnitudes(self) -> np.ndarray:
        return np.linalg.norm(self.values, axis=-1)


def check_same_grid(*fields: Field) -> None:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid is not g and f.grid != g:
            raise GridMismatchError(f"grid mismatch: {g} vs {f.grid}")


def neumann_laplacian(f: Field) -> Field:
    return f._wrap(f.grid.laplacian(f.values))


def pointwise_cross(f: Field, g: Field) -> Field:
    check_same_grid(f, g)
    return f._wrap(np.cross(f.values, g.values))


def pointwise_dot(f: Field, g: Field) -> np.ndarray:
    check_same_grid(f, g)
    return np.einsum("...i,...i->...", f.values, g.values)


def inner(f: Field, g: Field) -> float:
    check_same_grid(f, g)
    return f.grid.inner(f.values, g.values)


class SpectralDecomposition:
    """Cosine (DCT-II) eigenbasis of the discrete Neumann Laplacian.

    ``eigenvalues[k]`` are the eigenvalues of ``A = -Δ``; they are nonnegative,
    start at 0 for the constant mode and are sorted per axis. The transforms
    are orthonormal, so ``inverse(forward(v)) == v`` up to rounding.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        k = np.arange(grid.cells)
        lam1 = (4.0 / grid.spacing**2) * np.sin(np.pi * k / (2 * grid.cells)) ** 2
        if grid.dimension == 1:
            self.eigenvalues = lam1
        else:
            self.eigenvalues = lam1[:, None] + lam1[None, :]
        self._axes = tuple(range(grid.dimension))

    def forward(self, values: np.ndarray) -> np.ndarray:
        return scipy.fft.dctn(values, type=2, norm="ortho", axes=self._axes)

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        return scipy.fft.idctn(coeffs, type=2, norm="ortho", axes=self._axes)

    def apply(self, values: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
        """Apply a function of the Laplacian given its values on the spectrum."""
        return self.inverse(self.forward(values) * multiplier[..., None])

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        return self.apply(values, -self.eigenvalues)


@functools.lru_cache(maxsize=32)
def spectral_decomposition(grid: Grid) -> SpectralDecomposition:
    return SpectralDecomposition(grid)


NORM_KINDS = ("L2", "L4", "H1", "H2_semi", "dual")


def norm(f: Field, kind: str = "L2", beta: float | None = None) -> float:
    """Grid norms.

    ``dual`` is the X^{-beta} norm, where X^beta is the domain of
    ``(I + A)^beta`` and ``A = -Δ`` with Neumann conditions:
    ``sum_k (1 + λ_k)^{-2 beta} |f_k|^2`` in the cosine basis.
    """
    grid = f.grid
    v = f.values
    if kind == "L2":
        return float(np.sqrt(grid.l2_sq(v)))
    if kind == "L4":
        return float(grid.l4_pow4(v) ** 0.25)
    if kind == "H1":
        return float(np.sqrt(grid.l2_sq(v) + grid.gradient_sq(v)))
    if kind == "H2_semi":
        return float(np.sqrt(grid.l2_sq(grid.laplacian(v))))
    if kind == "dual":
        if beta is None:
            raise ValueError("dual norm requires beta")
        return dual_norm_values(grid, v, beta)
    raise ValueError(f"unknown norm kind {kind!r}; expected one of {NORM_KINDS}")


def dual_norm_values(grid: Grid, values: np.ndarray, beta: float) -> float:
    if not beta >= 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    spec = spectral_decomposition(grid)
    coeffs = spec.forward(values)
    weight = (1.0 + spec.eigenvalues) ** (-2.0 * beta)
    total = float(np.sum(weight[..., None] * coeffs**2))
    return float(np.sqrt(total * grid.cell_volume))
