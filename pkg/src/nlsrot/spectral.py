"""Grids, sampled fields and the continuum-normalized Fourier transform.

The box ``[-L, L)^d`` is sampled at ``x_j = -L + j dx`` with ``dx = 2L/N``.
The Fourier transform

    F f(xi) = (2 pi)^{-d/2} \\int f(x) exp(-i x.xi) dx

is evaluated by the rectangle rule on the dual grid ``xi_k = -pi N/(2L) + k pi/L``,
which is itself a :class:`Grid` of half-width ``pi N / (2L)``.  Applying the
transform twice gives exact discrete parity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Callable, Iterable

import numpy as np
import scipy.fft as sfft

from .errors import GridMismatch, InvalidField, InvalidGrid

__all__ = [
    "Grid",
    "Field",
    "SigmaNorms",
    "fourier",
    "inverse_fourier",
    "norms",
    "inner",
    "l2_norm",
    "gradient",
    "sample_scaled",
    "fourier_at_scaled",
]


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic mesh of ``[-L, L)^d`` with ``N`` points per axis."""

    d: int
    L: float
    N: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise InvalidGrid(f"only d=1 or d=2 supported, got d={self.d}")
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 8 and _is_pow2(int(self.N))):
            raise InvalidGrid(f"N must be a power of two >= 8, got {self.N}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise InvalidGrid(f"L must be positive, got {self.L}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def dxi(self) -> float:
        return math.pi / self.L

    @property
    def xi_max(self) -> float:
        return math.pi * self.N / (2.0 * self.L)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def cell(self) -> float:
        """Quadrature weight ``dx^d``."""
        return self.dx**self.d

    def dual(self) -> "Grid":
        return Grid(self.d, self.xi_max, self.N)

    def refined(self, factor: int = 2) -> "Grid":
        """Same box, ``factor`` times more points per axis."""
        return Grid(self.d, self.L, self.N * factor)

    def padded(self, factor: int) -> "Grid":
        """Box enlarged ``factor`` times at unchanged spacing."""
        return Grid(self.d, self.L * factor, self.N * factor)

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.N)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        if self.d == 1:
            return (self.axis,)
        return tuple(np.meshgrid(self.axis, self.axis, indexing="ij"))

    @cached_property
    def r2(self) -> np.ndarray:
        return sum(c**2 for c in self.coords)

    @cached_property
    def k_axis(self) -> np.ndarray:
        """Angular wavenumbers in FFT (unshifted) order."""
        return 2.0 * np.pi * sfft.fftfreq(self.N, d=self.dx)

    @cached_property
    def k_coords(self) -> tuple[np.ndarray, ...]:
        if self.d == 1:
            return (self.k_axis,)
        return tuple(np.meshgrid(self.k_axis, self.k_axis, indexing="ij"))

    @cached_property
    def k2(self) -> np.ndarray:
        return sum(k**2 for k in self.k_coords)

    @cached_property
    def _alternating(self) -> np.ndarray:
        s = (-1.0) ** np.arange(self.N)
        if self.d == 1:
            return s
        return np.multiply.outer(s, s)

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.shape, dtype=complex))

    def field(self, fn: Callable[..., np.ndarray]) -> "Field":
        """Sample ``fn(*coords)`` on the grid."""
        return Field(self, np.broadcast_to(fn(*self.coords), self.shape))


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples of a function on a :class:`Grid` (read-only array)."""

    grid: Grid
    values: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.size != math.prod(self.grid.shape):
            raise InvalidField(
                f"expected {math.prod(self.grid.shape)} samples, got {v.size}"
            )
        v = v.reshape(self.grid.shape)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def require_finite(self) -> "Field":
        if not self.is_finite():
            raise InvalidField("field contains non-finite samples")
        return self

    def _check(self, other: "Field") -> None:
        if other.grid != self.grid:
            raise GridMismatch(f"{self.grid} vs {other.grid}")

    def __add__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values + other.values)
        return Field(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values - other.values)
        return Field(self.grid, self.values - other)

    def __mul__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values * other.values)
        return Field(self.grid, self.values * other)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Field(self.grid, self.values / scalar)

    def __neg__(self):
        return Field(self.grid, -self.values)

    def conj(self) -> "Field":
        return Field(self.grid, np.conj(self.values))

    def parity(self) -> "Field":
        """``f(-x)``, exact on the periodic grid (index ``j -> -j mod N``)."""
        v = self.values
        for ax in range(self.grid.d):
            v = np.roll(np.flip(v, axis=ax), 1, axis=ax)
        return Field(self.grid, v)

    def even_part(self) -> "Field":
        return Field(self.grid, 0.5 * (self.values + self.parity().values))

    def shift(self, steps: Iterable[int] | int) -> "Field":
        """``f(x + a)`` for ``a = steps * dx`` (whole grid shifts)."""
        steps = (steps,) * self.grid.d if isinstance(steps, (int, np.integer)) else tuple(steps)
        return Field(self.grid, np.roll(self.values, [-s for s in steps], axis=tuple(range(self.grid.d))))

    def norm(self) -> float:
        return l2_norm(self)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class SigmaNorms:
    l2: float
    grad_l2: float
    xf_l2: float
    lp: dict = dc_field(default_factory=dict)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.l2**2 + self.grad_l2**2 + self.xf_l2**2)


def fourier(f: Field) -> Field:
    """Continuum-normalized Fourier transform, returned on ``f.grid.dual()``."""
    f.require_finite()
    g = f.grid
    axes = tuple(range(g.d))
    alt = g._alternating
    vals = sfft.fftn(alt * f.values, axes=axes)
    scale = (g.dx / math.sqrt(2.0 * math.pi)) ** g.d
    return Field(g.dual(), scale * alt * vals)


def inverse_fourier(fhat: Field) -> Field:
    """Inverse of :func:`fourier`; ``fhat`` lives on the dual of the result grid."""
    fhat.require_finite()
    dg = fhat.grid
    g = dg.dual()
    axes = tuple(range(g.d))
    alt = g._alternating
    vals = sfft.ifftn(alt * fhat.values, axes=axes)
    scale = (dg.dx * g.N / math.sqrt(2.0 * math.pi)) ** g.d
    return Field(g, scale * alt * vals)


def l2_norm(f: Field) -> float:
    return math.sqrt(float(np.sum(np.abs(f.values) ** 2)) * f.grid.cell)


def _grad_sq(f: Field) -> float:
    g = f.grid
    fk = sfft.fftn(f.values, axes=tuple(range(g.d)))
    return float(np.sum(g.k2 * np.abs(fk) ** 2)) * g.cell / g.N**g.d


def gradient(f: Field) -> tuple[Field, ...]:
    """Spectral partial derivatives, one Field per axis."""
    g = f.grid
    axes = tuple(range(g.d))
    fk = sfft.fftn(f.values, axes=axes)
    return tuple(Field(g, sfft.ifftn(1j * k * fk, axes=axes)) for k in g.k_coords)


def norms(f: Field, p: Iterable[float] | None = None) -> SigmaNorms:
    """L2, gradient, ``|x| f`` and optional ``L^p`` norms by rectangle-rule quadrature.

    ``p`` defaults to the mass-critical exponent ``2 + 4/d``.
    """
    g = f.grid
    if p is None:
        p = (2.0 + 4.0 / g.d,)
    a = np.abs(f.values)
    lp = {float(q): float(np.sum(a**q) * g.cell) ** (1.0 / q) for q in p}
    return SigmaNorms(
        l2=l2_norm(f),
        grad_l2=math.sqrt(_grad_sq(f)),
        xf_l2=math.sqrt(float(np.sum(g.r2 * a**2)) * g.cell),
        lp=lp,
    )


def inner(f: Field, g: Field) -> complex:
    """``\\int f conj(g) dx``."""
    if f.grid != g.grid:
        raise GridMismatch(f"{f.grid} vs {g.grid}")
    return complex(np.sum(f.values * np.conj(g.values)) * f.grid.cell)


def _bluestein(a: np.ndarray, theta: float, axis: int) -> np.ndarray:
    """``S_m = sum_n a_n exp(i theta n m)`` for ``m < n_in`` along ``axis``.

    Chirp phases are formed directly from ``theta`` so that large indices do
    not amplify the rounding of ``angle(exp(i theta))``.
    """
    a = np.moveaxis(a, axis, -1)
    n = a.shape[-1]
    k = np.arange(n, dtype=float)
    half = 0.5 * k * k
    chirp = np.exp(1j * theta * half)
    size = sfft.next_fast_len(2 * n - 1)
    lag = np.arange(-(n - 1), n, dtype=float)
    kernel = np.zeros(size, dtype=complex)
    kernel[: 2 * n - 1] = np.exp(-1j * theta * 0.5 * lag * lag)
    conv = sfft.ifft(sfft.fft(a * chirp, size, axis=-1) * sfft.fft(kernel), axis=-1)
    out = conv[..., n - 1 : 2 * n - 1] * chirp
    return np.moveaxis(out, -1, axis)


def _chirp_sum(a: np.ndarray, p0, dp, q0, dq, sign: int, axis: int) -> np.ndarray:
    """``S_m = sum_n a_n exp(sign*i*(p0 + n dp)(q0 + m dq))`` along ``axis``."""
    n = a.shape[axis]
    idx = np.arange(n)
    shape = [1] * a.ndim
    shape[axis] = n
    pre = np.exp(sign * 1j * idx * dp * q0).reshape(shape)
    out = _bluestein(a * pre, sign * dp * dq, axis)
    post = np.exp(sign * 1j * p0 * (q0 + idx * dq)).reshape(shape)
    return out * post


def sample_scaled(f: Field, scale: float, zero_outside: bool = True) -> np.ndarray:
    """Band-limited values of ``f`` at the points ``scale * x`` of its own grid.

    Points falling outside the box are set to zero when ``zero_outside`` (the
    represented function is assumed to vanish there), otherwise they see the
    periodic extension.
    """
    g = f.grid
    fhat = fourier(f)
    dg = fhat.grid
    vals = fhat.values
    for ax in range(g.d):
        vals = _chirp_sum(vals, -dg.L, dg.dx, -scale * g.L, scale * g.dx, +1, ax)
    vals = vals * (dg.dx / math.sqrt(2.0 * math.pi)) ** g.d
    if zero_outside and abs(scale) > 1.0:
        inside = np.ones(g.shape, dtype=bool)
        for c in g.coords:
            inside &= np.abs(scale * c) < g.L
        vals = np.where(inside, vals, 0.0)
    return vals


def fourier_at_scaled(f: Field, scale: float) -> np.ndarray:
    """``F f`` evaluated at ``scale * x`` for the grid points ``x`` of ``f``.

    Frequencies beyond the dual box are set to zero (band limit).
    """
    g = f.grid
    vals = f.values
    for ax in range(g.d):
        vals = _chirp_sum(vals, -g.L, g.dx, -scale * g.L, scale * g.dx, -1, ax)
    vals = vals * (g.dx / math.sqrt(2.0 * math.pi)) ** g.d
    inside = np.ones(g.shape, dtype=bool)
    for c in g.coords:
        inside &= np.abs(scale * c) < g.xi_max
    return np.where(inside, vals, 0.0)
