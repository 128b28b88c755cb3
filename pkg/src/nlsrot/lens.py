"""Lens transform between free and harmonic dynamics, and the J/K operators.

With ``t = tan s``,

    v(s, x) = cos(s)^{-d/2} u(tan s, x / cos s) exp(-i |x|^2 tan(s) / 2)

turns solutions of the free mass-critical NLS into solutions of the harmonic
one on ``|s| < pi/2``; :func:`lens_inverse` undoes it for every real ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularTime
from .spectral import Field, gradient, sample_scaled

__all__ = [
    "LensTime",
    "lens_forward",
    "lens_inverse",
    "apply_JK",
    "boundary_mass",
    "BOUNDARY_TOL",
]

BOUNDARY_TOL = 1e-10


@dataclass(frozen=True)
class LensTime:
    """Harmonic time ``s``; the endpoints ``+-pi/2`` are representable but flagged."""

    s: float

    def __post_init__(self):
        if not math.isfinite(self.s) or abs(self.s) > math.pi / 2 + 1e-15:
            raise SingularTime(f"lens time must lie in [-pi/2, pi/2], got {self.s}")

    @property
    def endpoint(self) -> bool:
        return abs(abs(self.s) - math.pi / 2) < 1e-15

    @property
    def t(self) -> float:
        if self.endpoint:
            raise SingularTime("tan(s) is infinite at the lens endpoints")
        return math.tan(self.s)

    @classmethod
    def from_t(cls, t: float) -> "LensTime":
        return cls(math.atan(t))


def boundary_mass(f: Field, width: float = 0.1) -> float:
    """Fraction of the L2 mass within ``width * L`` of the box faces."""
    g = f.grid
    total = float(np.sum(np.abs(f.values) ** 2))
    if total == 0.0:
        return 0.0
    near = np.zeros(g.shape, dtype=bool)
    for c in g.coords:
        near |= np.abs(c) > (1.0 - width) * g.L
    return float(np.sum(np.abs(f.values[near]) ** 2)) / total


def _check_boundary(f: Field, tol: float) -> None:
    if tol is not None and boundary_mass(f) > tol:
        raise SingularTime(
            f"boundary mass {boundary_mass(f):.2e} exceeds {tol:.0e}; enlarge the box"
        )


def lens_forward(u_at_tan_s: Field, s: LensTime | float, boundary_tol: float | None = None) -> Field:
    """``v(s)`` from ``u(tan s)``.  Raises :class:`SingularTime` for ``|s| >= pi/2``.

    ``boundary_tol`` optionally rejects inputs whose mass reaches the box
    faces, where the rescaled samples would leave the grid.
    """
    s = s.s if isinstance(s, LensTime) else float(s)
    if not abs(s) < math.pi / 2:
        raise SingularTime(f"lens_forward needs |s| < pi/2, got {s}")
    u_at_tan_s.require_finite()
    g = u_at_tan_s.grid
    if s == 0.0:
        return u_at_tan_s
    _check_boundary(u_at_tan_s, boundary_tol)
    c = math.cos(s)
    vals = sample_scaled(u_at_tan_s, 1.0 / c)
    vals = c ** (-g.d / 2) * vals * np.exp(-0.5j * math.tan(s) * g.r2)
    return Field(g, vals)


def lens_inverse(v_at_s: Field, t: float, boundary_tol: float | None = None) -> Field:
    """``u(t)`` from ``v(arctan t)``; defined for every real ``t``."""
    v_at_s.require_finite()
    g = v_at_s.grid
    if t == 0.0:
        return v_at_s
    _check_boundary(v_at_s, boundary_tol)
    q = 1.0 + t * t
    vals = sample_scaled(v_at_s, 1.0 / math.sqrt(q))
    vals = q ** (-g.d / 4) * np.exp(0.5j * t * g.r2 / q) * vals
    return Field(g, vals)


def apply_JK(f: Field, t: float) -> tuple[tuple[Field, ...], tuple[Field, ...]]:
    """``J(t) = x sin t - i cos t grad`` and ``K(t) = x cos t + i sin t grad``.

    Each is returned as a tuple of ``d`` components.
    """
    f.require_finite()
    g = f.grid
    st, ct = math.sin(t), math.cos(t)
    grads = gradient(f)
    J = tuple(Field(g, st * x * f.values - 1j * ct * df.values) for x, df in zip(g.coords, grads))
    K = tuple(Field(g, ct * x * f.values + 1j * st * df.values) for x, df in zip(g.coords, grads))
    return J, K
