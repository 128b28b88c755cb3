"""Harmonic oscillator ``H = -Delta/2 + |x|^2/2``: Hermite eigenbasis and exact propagator."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .errors import TruncationError
from .spectral import Field, Grid, l2_norm

__all__ = [
    "apply_H",
    "hermite_functions",
    "HermiteBasis",
    "build_hermite_basis",
    "default_k_max",
    "default_basis",
    "propagate_UH",
]

RESIDUAL_TOL = 1e-8


def _kinetic(values: np.ndarray, grid: Grid) -> np.ndarray:
    axes = tuple(range(grid.d))
    return sfft.ifftn(0.5 * grid.k2 * sfft.fftn(values, axes=axes), axes=axes)


def apply_H(f: Field) -> Field:
    g = f.grid
    return Field(g, _kinetic(f.values, g) + 0.5 * g.r2 * f.values)


def hermite_functions(x: np.ndarray, k_max: int) -> np.ndarray:
    """Rows ``psi_0 .. psi_{k_max}`` of L2-normalized Hermite functions at ``x``.

    Uses the normalized three-term recurrence, which stays bounded for large k.
    """
    out = np.empty((k_max + 1, x.size))
    out[0] = math.pi**-0.25 * np.exp(-0.5 * x**2)
    if k_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, k_max):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def default_k_max(grid: Grid) -> int:
    """Largest index whose classical turning point sits well inside both boxes."""
    reach = min(grid.L, grid.xi_max) - 4.0
    if reach <= 1.0:
        return 0
    return max(0, int((reach**2 - 1.0) / 2.0))


@dataclass(frozen=True, eq=False)
class HermiteBasis:
    """Eigenfunctions of ``H`` with multi-index ``|k| <= k_max``.

    ``table`` holds the one-dimensional functions sampled on the grid axis;
    d-dimensional eigenfunctions are tensor products.
    """

    grid: Grid
    k_max: int
    table: np.ndarray

    @property
    def multi_indices(self) -> list[tuple[int, ...]]:
        if self.grid.d == 1:
            return [(k,) for k in range(self.k_max + 1)]
        return [(a, n - a) for n in range(self.k_max + 1) for a in range(n + 1)]

    @property
    def eigenvalues(self) -> np.ndarray:
        d = self.grid.d
        return np.array([d / 2 + sum(k) for k in self.multi_indices])

    def function(self, k: tuple[int, ...] | int) -> Field:
        if isinstance(k, (int, np.integer)):
            k = (int(k),)
        vals = self.table[k[0]]
        for kk in k[1:]:
            vals = np.multiply.outer(vals, self.table[kk])
        return Field(self.grid, vals)

    @property
    def functions(self) -> list[Field]:
        return [self.function(k) for k in self.multi_indices]

    def _mask(self) -> np.ndarray:
        n = np.arange(self.k_max + 1)
        if self.grid.d == 1:
            return np.ones(self.k_max + 1, dtype=bool)
        return np.add.outer(n, n) <= self.k_max

    def _level(self) -> np.ndarray:
        n = np.arange(self.k_max + 1, dtype=float)
        if self.grid.d == 1:
            return n
        return np.add.outer(n, n)

    def coefficients(self, f: Field) -> np.ndarray:
        """Coefficient array ``c[k1, ..., kd] = <f, psi_k>`` (zero outside ``|k| <= k_max``)."""
        w = self.grid.dx
        c = f.values
        for ax in range(self.grid.d):
            c = np.tensordot(self.table, c, axes=([1], [ax])) * w
            c = np.moveaxis(c, 0, ax)
        return np.where(self._mask(), c, 0.0)

    def synthesize(self, c: np.ndarray) -> Field:
        vals = np.where(self._mask(), c, 0.0)
        for ax in range(self.grid.d):
            vals = np.tensordot(self.table.T, vals, axes=([1], [ax]))
            vals = np.moveaxis(vals, 0, ax)
        return Field(self.grid, vals)

    def projection_defect(self, f: Field) -> float:
        nf = l2_norm(f)
        if nf == 0.0:
            return 0.0
        return l2_norm(f - self.synthesize(self.coefficients(f))) / nf


def build_hermite_basis(grid: Grid, k_max: int | None = None) -> HermiteBasis:
    """Sample Hermite functions and check each one is an eigenfunction on this grid."""
    if k_max is None:
        k_max = default_k_max(grid)
    table = hermite_functions(grid.axis, k_max)
    table /= np.sqrt(np.sum(table**2, axis=1) * grid.dx)[:, None]
    g1 = Grid(1, grid.L, grid.N)
    for k in range(k_max + 1):
        psi = Field(g1, table[k])
        res = l2_norm(apply_H(psi) - (0.5 + k) * psi)
        if not res <= RESIDUAL_TOL:
            raise TruncationError(
                f"Hermite mode k={k} unresolved on {grid}: residual {res:.2e}"
            )
    return HermiteBasis(grid, k_max, table)


@lru_cache(maxsize=16)
def default_basis(grid: Grid) -> HermiteBasis:
    return build_hermite_basis(grid)


def propagate_UH(
    f: Field, t: float, basis: HermiteBasis | None = None, tol: float = 1e-8
) -> Field:
    """``exp(-i t H) f`` by phase rotation of Hermite coefficients."""
    if basis is None:
        basis = default_basis(f.grid)
    c = basis.coefficients(f)
    nf = l2_norm(f)
    if nf > 0.0:
        defect = l2_norm(f - basis.synthesize(c)) / nf
        if defect > tol:
            raise TruncationError(f"projection defect {defect:.2e} exceeds {tol:.0e}")
    lam = f.grid.d / 2 + basis._level()
    return basis.synthesize(c * np.exp(-1j * lam * t))
