"""Free Schrödinger group ``U0(t) = exp(i t Delta / 2)`` and asymptotic states."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.fft as sfft

from .errors import SingularTime
from .spectral import Field, fourier_at_scaled, l2_norm

__all__ = [
    "propagate_U0",
    "dispersive_factorization",
    "AsymptoticState",
    "extract_asymptotic_state",
]


def propagate_U0(f: Field, t: float) -> Field:
    g = f.grid
    axes = tuple(range(g.d))
    fk = sfft.fftn(f.values, axes=axes)
    return Field(g, sfft.ifftn(np.exp(-0.5j * t * g.k2) * fk, axes=axes))


def dispersive_factorization(f: Field, t: float) -> Field:
    """Far-field approximation ``A(t) f(x) = (it)^{-d/2} F f(x/t) exp(i|x|^2/(2t))``.

    ``F f`` is evaluated exactly at the off-grid points ``x/t`` (trigonometric
    sum via chirp-z), which is the limit of zero padding.
    """
    if t == 0:
        raise SingularTime("A(t) is undefined at t = 0")
    g = f.grid
    fhat = fourier_at_scaled(f, 1.0 / t)
    amp = cmath.exp(-0.25j * math.pi * g.d * math.copysign(1.0, t)) * abs(t) ** (-g.d / 2)
    return Field(g, amp * fhat * np.exp(0.5j * g.r2 / t))


@dataclass(frozen=True)
class AsymptoticState:
    field: Field
    direction: Literal["plus", "minus"]
    extraction_time: float
    convergence_estimate: float


def extract_asymptotic_state(
    endpoint: Field,
    T: float,
    direction: Literal["plus", "minus"],
    half_endpoint: Field | None = None,
) -> AsymptoticState:
    """Pull ``u(+-T)`` back with the free flow: ``U0(-+T) u(+-T)``.

    ``half_endpoint`` is ``u(+-T/2)``; when given, the convergence estimate is
    the L2 distance between the two extractions, otherwise it is ``inf``.
    """
    if direction not in ("plus", "minus"):
        raise ValueError(f"direction must be 'plus' or 'minus', got {direction!r}")
    if T <= 0:
        raise ValueError("T must be positive")
    s = 1.0 if direction == "plus" else -1.0
    state = propagate_U0(endpoint, -s * T)
    est = math.inf
    if half_endpoint is not None:
        est = l2_norm(state - propagate_U0(half_endpoint, -s * T / 2))
    return AsymptoticState(state, direction, T, est)
