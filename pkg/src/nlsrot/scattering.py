"""Wave and scattering operators of the mass-critical NLS.

The lens transform maps ``t in R`` onto ``s in (-pi/2, pi/2)``, and the
asymptotic states become endpoint values of the harmonic NLS:

    v(-pi/2, x) = e^{i d pi/4} F(u_-)(-x),    v(pi/2, x) = e^{-i d pi/4} F(u_+)(x).

So ``S(u_-)`` takes one propagation over a finite interval.  Asymptotic states
live on the dual of the grid that carries ``v`` (the "profile" grid).  The
long-time route :func:`scattering_direct` is kept as an independent check.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field as dc_field, replace
from typing import Literal

import numpy as np

from .eigensolver import DEFAULT_GRID, EigenstateSolution, MinimizationProblem, minimize
from .errors import BlowUpDetected, BlowUpOnLensInterval, TruncationError, UnsupportedExponent
from .free import propagate_U0
from .harmonic import hermite_functions
from .propagator import NLSConfig, PropagationResult, propagate
from .spectral import Field, Grid, fourier, inverse_fourier, l2_norm, norms

__all__ = [
    "ScatteringResult",
    "RotatingDatum",
    "lens_config",
    "endpoint_minus",
    "endpoint_plus",
    "from_endpoint_minus",
    "from_endpoint_plus",
    "scattering_lens",
    "scattering_direct",
    "wave_minus",
    "wave_plus",
    "inverse_wave_minus",
    "inverse_wave_plus",
    "rotating_nu",
    "build_rotating_datum",
    "standing_wave_datum",
    "rotation_defect",
    "time_shift_defects",
    "perturbative_P",
    "IdentityReport",
    "identity_suite",
    "StabilityReport",
    "stability_probe",
    "DEFAULT_STATE_GRID",
]

Sign = Literal["defocusing", "focusing"]
HALF_PI = 0.5 * math.pi

DEFAULT_STATE_GRID = DEFAULT_GRID.dual()


def _sign_value(sign: Sign) -> int:
    if sign == "defocusing":
        return +1
    if sign == "focusing":
        return -1
    raise ValueError(f"sign must be 'defocusing' or 'focusing', got {sign!r}")


def lens_config(d: int, sign: Sign = "defocusing", coupling: float = 1.0, sigma: float | None = None) -> NLSConfig:
    """Harmonic NLS that is the lens image of the free equation."""
    cfg = NLSConfig(d=d, sigma=sigma, sign=_sign_value(sign), potential="harmonic", coupling=coupling)
    if not cfg.mass_critical:
        raise UnsupportedExponent(
            f"the lens route needs sigma = 2/d = {2.0 / d}, got {cfg.sigma}"
        )
    return cfg


def _phase(d: int, sgn: int) -> complex:
    return cmath.exp(sgn * 0.25j * math.pi * d)


def endpoint_minus(u_minus: Field) -> Field:
    """``v(-pi/2) = e^{i d pi/4} F(u_-)(-x)``."""
    return fourier(u_minus).parity() * _phase(u_minus.grid.d, +1)


def endpoint_plus(u_plus: Field) -> Field:
    """``v(pi/2) = e^{-i d pi/4} F(u_+)``."""
    return fourier(u_plus) * _phase(u_plus.grid.d, -1)


def from_endpoint_minus(v: Field) -> Field:
    """Inverse of :func:`endpoint_minus`."""
    return inverse_fourier(v.parity() * _phase(v.grid.d, -1))


def from_endpoint_plus(v: Field) -> Field:
    """Inverse of :func:`endpoint_plus`."""
    return inverse_fourier(v) * _phase(v.grid.d, +1)


@dataclass(frozen=True)
class ScatteringResult:
    """Outcome of one computation of ``u_+ = S(u_-)``.

    ``discretization_estimate`` is the L2 change under step halving (lens) or
    horizon halving (direct).  ``l2_defect`` and ``h1_defect`` are the relative
    changes of the L2 and homogeneous H1 norms between ``u_-`` and ``u_+``.
    """

    u_plus: Field
    method: Literal["lens", "direct"]
    discretization_estimate: float
    cross_check_gap: float | None = None
    l2_defect: float = 0.0
    h1_defect: float = 0.0
    mass_drift: float = 0.0
    propagation: PropagationResult | None = dc_field(default=None, repr=False)


def _defects(u_minus: Field, u_plus: Field) -> tuple[float, float]:
    a, b = norms(u_minus, p=()), norms(u_plus, p=())
    l2 = abs(b.l2 - a.l2) / a.l2 if a.l2 > 0 else b.l2
    h1 = abs(b.grad_l2 - a.grad_l2) / a.grad_l2 if a.grad_l2 > 0 else b.grad_l2
    return l2, h1


def _run_lens(v0: Field, s0: float, s1: float, cfg: NLSConfig, dt: float) -> PropagationResult:
    res = propagate(v0, s0, s1, cfg, dt)
    if res.blew_up:
        if cfg.sign < 0:
            raise BlowUpOnLensInterval(
                res.blowup_time, "focusing harmonic flow left the grid before the lens endpoint"
            )
        raise BlowUpDetected(res.blowup_time)
    return res


def scattering_lens(
    u_minus: Field,
    sign: Sign = "defocusing",
    dt: float = 1e-3,
    *,
    coupling: float = 1.0,
    sigma: float | None = None,
    estimate: bool = True,
    cross_check: dict | None = None,
) -> ScatteringResult:
    """``S(u_-)`` by one harmonic-NLS run over ``[-pi/2, pi/2]``.

    ``u_minus`` lives on the dual of the profile grid.  ``coupling = 0``
    switches the nonlinearity off (then ``S`` is the identity).  With
    ``estimate`` the run is repeated at ``dt/2``.  ``cross_check`` holds
    keyword arguments for :func:`scattering_direct`; when given, the L2 gap
    to the direct route is stored.
    """
    cfg = lens_config(u_minus.grid.d, sign, coupling, sigma)
    u_minus.require_finite()
    v0 = endpoint_minus(u_minus)
    res = _run_lens(v0, -HALF_PI, HALF_PI, cfg, dt)
    u_plus = from_endpoint_plus(res.final)
    est = math.nan
    if estimate:
        fine = _run_lens(v0, -HALF_PI, HALF_PI, cfg, res.dt / 2)
        est = l2_norm(u_plus - from_endpoint_plus(fine.final))
    gap = None
    if cross_check is not None:
        direct = scattering_direct(u_minus, sign=sign, coupling=coupling, **cross_check)
        gap = l2_norm(u_plus - direct.u_plus)
    l2d, h1d = _defects(u_minus, u_plus)
    return ScatteringResult(u_plus, "lens", est, gap, l2d, h1d, res.mass_drift, res)


def wave_minus(u_minus: Field, sign: Sign = "defocusing", dt: float = 1e-3) -> Field:
    """``W_- u_- = u(0)``; the result lives on the profile grid."""
    cfg = lens_config(u_minus.grid.d, sign)
    return _run_lens(endpoint_minus(u_minus), -HALF_PI, 0.0, cfg, dt).final


def wave_plus(u_plus: Field, sign: Sign = "defocusing", dt: float = 1e-3) -> Field:
    """``W_+ u_+ = u(0)``."""
    cfg = lens_config(u_plus.grid.d, sign)
    return _run_lens(endpoint_plus(u_plus), HALF_PI, 0.0, cfg, dt).final


def inverse_wave_minus(phi: Field, sign: Sign = "defocusing", dt: float = 1e-3) -> Field:
    """``W_-^{-1} phi``: run back from ``u(0) = phi`` to ``s = -pi/2``."""
    cfg = lens_config(phi.grid.d, sign)
    return from_endpoint_minus(_run_lens(phi, 0.0, -HALF_PI, cfg, dt).final)


def inverse_wave_plus(phi: Field, sign: Sign = "defocusing", dt: float = 1e-3) -> Field:
    """``W_+^{-1} phi``: run forward from ``u(0) = phi`` to ``s = pi/2``."""
    cfg = lens_config(phi.grid.d, sign)
    return from_endpoint_plus(_run_lens(phi, 0.0, HALF_PI, cfg, dt).final)


def _reach(f: Field, tol: float = 1e-14) -> tuple[float, float]:
    """Radii in x and xi outside of which ``f`` carries less than ``tol`` of its mass."""

    def radius(vals, r2):
        w = np.abs(vals.ravel()) ** 2
        tot = w.sum()
        if tot == 0:
            return 0.0
        r = np.sqrt(r2.ravel())
        order = np.argsort(r)[::-1]
        tail = np.cumsum(w[order])
        k = np.searchsorted(tail, tol * tot)
        return float(r[order][min(k, r.size - 1)])

    fh = fourier(f)
    return radius(f.values, f.grid.r2), radius(fh.values, fh.grid.r2)


def _embed(f: Field, big: Grid) -> Field:
    m = big.N // f.grid.N
    lo = (m - 1) * f.grid.N // 2
    out = np.zeros(big.shape, dtype=complex)
    out[(slice(lo, lo + f.grid.N),) * f.grid.d] = f.values
    return Field(big, out)


def _restrict(f: Field, small: Grid) -> Field:
    m = f.grid.N // small.N
    lo = (m - 1) * small.N // 2
    return Field(small, f.values[(slice(lo, lo + small.N),) * small.d])


def _direct_once(u_big: Field, T: float, cfg: NLSConfig, dt: float) -> tuple[Field, PropagationResult]:
    start = propagate_U0(u_big, -T)
    res = propagate(start, -T, T, cfg, dt)
    if res.blew_up:
        raise BlowUpDetected(res.blowup_time)
    return propagate_U0(res.final, -T), res


def scattering_direct(
    u_minus: Field,
    T: float = 40.0,
    dt: float = 1e-2,
    *,
    sign: Sign = "defocusing",
    coupling: float = 1.0,
    pad: int | None = None,
    extrapolate: bool = True,
) -> ScatteringResult:
    """``S(u_-) ~ U0(-T) u(T)`` with ``u(-T) = U0(-T) u_-``, on a padded box.

    The run is repeated with horizon ``T/2``; the gap between the two is the
    discretization estimate.  The neglected tails decay like ``1/T``, so with
    ``extrapolate`` the returned state is ``2 S_T - S_{T/2}``.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    g = u_minus.grid
    u_minus.require_finite()
    cfg = NLSConfig(d=g.d, sign=_sign_value(sign), coupling=coupling)
    if pad is None:
        rx, rk = _reach(u_minus)
        need = rx + rk * T + 4.0
        pad = 1
        while pad * g.L < need:
            pad *= 2
    big = g.padded(pad) if pad > 1 else g
    ub = _embed(u_minus, big)
    full, res = _direct_once(ub, T, cfg, dt)
    half, _ = _direct_once(ub, T / 2, cfg, dt)
    full, half = _restrict(full, g), _restrict(half, g)
    est = l2_norm(full - half)
    u_plus = full * 2.0 - half if extrapolate else full
    l2d, h1d = _defects(u_minus, u_plus)
    return ScatteringResult(u_plus, "direct", est, None, l2d, h1d, res.mass_drift, res)


# Rotating points -----------------------------------------------------------


def rotating_nu(theta: float, j: int, d: int = 1, sign: Sign = "defocusing") -> float:
    """``d/2 + 2j - theta/pi`` (defocusing) or ``d/2 - 2j - theta/pi`` (focusing)."""
    if j < 1:
        raise ValueError("j must be a positive integer")
    return d / 2 + (2 * j if _sign_value(sign) > 0 else -2 * j) - theta / math.pi


@dataclass(frozen=True)
class RotatingDatum:
    """``u_-`` with ``S(u_-) = e^{i theta} u_-``, together with its profile."""

    u_minus: Field
    theta: float
    j: int
    nu: float
    sign: Sign
    eigenstate: EigenstateSolution

    @property
    def profile(self) -> Field:
        return self.eigenstate.psi


def standing_wave_datum(phi: Field, nu: float) -> Field:
    """``u_-`` whose lens image is the standing wave ``e^{-i nu s} phi`` (``phi`` even)."""
    d = phi.grid.d
    return inverse_fourier(phi) * cmath.exp(1j * (nu * HALF_PI - 0.25 * math.pi * d))


def build_rotating_datum(
    theta: float,
    j: int,
    d: int = 1,
    sign: Sign = "defocusing",
    grid: Grid | None = None,
    tol: float = 1e-9,
) -> RotatingDatum:
    """Solve the eigenproblem at ``nu_j`` and turn the profile into ``u_-``."""
    if grid is None:
        grid = DEFAULT_GRID if d == 1 else Grid(2, 12.0, 128)
    if grid.d != d:
        raise ValueError(f"grid dimension {grid.d} does not match d={d}")
    nu = rotating_nu(theta, j, d, sign)
    sol = minimize(MinimizationProblem(nu, grid, sign), tol=tol)
    return RotatingDatum(standing_wave_datum(sol.psi, nu), theta, j, nu, sign, sol)


def rotation_defect(u_minus: Field, u_plus: Field, theta: float) -> float:
    """``||u_+ - e^{i theta} u_-|| / ||u_-||``."""
    return l2_norm(u_plus - u_minus * cmath.exp(1j * theta)) / l2_norm(u_minus)


def time_shift_defects(
    datum: RotatingDatum, shifts: list[float], dt: float = 1e-3
) -> list[float]:
    """Rotation defects of the time-shifted data ``u_-^t``.

    ``u_-^t`` is read off the standing wave ``e^{-i nu s} phi`` at ``s = -pi/2 + t``
    and pulled back through the lens endpoint relation.
    """
    out = []
    for t in shifts:
        v = datum.profile * cmath.exp(-1j * datum.nu * (-HALF_PI + t))
        u_t = from_endpoint_minus(v)
        res = scattering_lens(u_t, datum.sign, dt, estimate=False)
        out.append(rotation_defect(u_t, res.u_plus, datum.theta))
    return out


# Small-data expansion ------------------------------------------------------


def _power(w: np.ndarray, d: int) -> np.ndarray:
    a2 = w.real**2 + w.imag**2
    return (a2 * a2 if d == 1 else a2 ** (2.0 / d)) * w


def _simpson(fn, a: float, b: float, rtol: float, max_level: int = 14) -> np.ndarray:
    """Composite Simpson with interval doubling; stops on relative L2 change below ``rtol``."""
    n = 8
    xs = np.linspace(a, b, n + 1)
    vals = [fn(x) for x in xs]

    def rule(vs, h):
        return h / 3.0 * (vs[0] + vs[-1] + 4.0 * sum(vs[1:-1:2]) + 2.0 * sum(vs[2:-1:2]))

    est = rule(vals, (b - a) / n)
    for _ in range(max_level):
        n *= 2
        h = (b - a) / n
        new = [fn(a + (2 * i + 1) * h) for i in range(n // 2)]
        merged = [None] * (n + 1)
        merged[0::2] = vals
        merged[1::2] = new
        vals = merged
        nxt = rule(vals, h)
        scale = max(float(np.sqrt(np.sum(np.abs(nxt) ** 2))), 1e-300)
        if float(np.sqrt(np.sum(np.abs(nxt - est) ** 2))) <= rtol * scale:
            return nxt
        est = nxt
    raise TruncationError(f"Simpson quadrature did not reach rtol={rtol:.0e} on [{a}, {b}]")


def perturbative_P(u_minus: Field, T_trunc: float = 2.0, rtol: float = 1e-10) -> Field:
    """``P(u_-) = int U0(-t) (|U0(t) u_-|^{4/d} U0(t) u_-) dt`` over the real line.

    ``[-T_trunc, T_trunc]`` is integrated with exact free steps on the grid.  On
    the tails the factorization of ``U0`` gives, with ``t = +-1/tau``,

        U0(-t) g(U0(t) u) dt = e^{-+i tau|x|^2/2} F^{-1} g(F(e^{+-i tau|x|^2/2} u)) dtau,

    which is smooth on ``tau in [0, 1/T_trunc]``, so no truncation is needed.
    """
    if T_trunc <= 0:
        raise ValueError("T_trunc must be positive")
    u_minus.require_finite()
    g = u_minus.grid
    d = g.d
    if not np.any(u_minus.values):
        return g.zeros()
    axes = tuple(range(d))
    uk = np.fft.fftn(u_minus.values, axes=axes)

    def inner(t):
        w = np.fft.ifftn(np.exp(-0.5j * t * g.k2) * uk, axes=axes)
        gw = np.fft.fftn(_power(w, d), axes=axes)
        return np.fft.ifftn(np.exp(0.5j * t * g.k2) * gw, axes=axes)

    def tail(sgn):
        def fn(tau):
            chirp = np.exp(sgn * 0.5j * tau * g.r2)
            fh = fourier(Field(g, chirp * u_minus.values))
            back = inverse_fourier(fh.with_values(_power(fh.values, d)))
            return np.conj(chirp) * back.values

        return fn

    mid = _simpson(inner, -T_trunc, T_trunc, rtol)
    edge = 1.0 / T_trunc
    hi = _simpson(tail(+1), 0.0, edge, rtol)
    lo = _simpson(tail(-1), 0.0, edge, rtol)
    total = mid + hi + lo
    if not np.all(np.isfinite(total)):
        raise TruncationError("non-finite values in the perturbative integral")
    return Field(g, total)


# Identities ----------------------------------------------------------------


@dataclass(frozen=True)
class IdentityReport:
    """Relative L2 defects of the algebraic identities of ``S`` and ``W_+-``."""

    gauge: float
    translation: float
    conjugation: float
    fourier_duality: float
    eta: float
    shift: int

    @property
    def worst(self) -> float:
        return max(self.gauge, self.translation, self.conjugation, self.fourier_duality)

    def as_dict(self) -> dict:
        return {
            "gauge": self.gauge,
            "translation": self.translation,
            "conjugation": self.conjugation,
            "fourier_duality": self.fourier_duality,
            "eta": self.eta,
            "shift": self.shift,
        }


def _rel(a: Field, b: Field) -> float:
    nb = l2_norm(b)
    return l2_norm(a - b) / nb if nb > 0 else l2_norm(a)


def identity_suite(u: Field, eta: float = math.pi / 3, shift: int = 4, dt: float = 1e-3) -> IdentityReport:
    """Check the defocusing identities on ``u`` (an asymptotic state).

    (a) ``S(e^{i eta} u) = e^{i eta} S(u)``;
    (b) ``S(u(. + a)) = S(u)(. + a)`` for a whole-grid shift ``a``;
    (c) ``W_+ u = conj(W_- conj(u))`` and ``W_- u = conj(W_+ conj(u))``;
    (d) ``F W_+^{-1} phi = W_- F phi`` and ``F W_-^{-1} phi = W_+ F phi`` with
        ``phi = F^{-1} u`` living on the profile grid.
    """
    S = lambda f: scattering_lens(f, "defocusing", dt, estimate=False).u_plus
    base = S(u)
    rot = cmath.exp(1j * eta)
    gauge = _rel(S(u * rot), base * rot)
    translation = _rel(S(u.shift(shift)), base.shift(shift))
    wm, wp = wave_minus(u, dt=dt), wave_plus(u, dt=dt)
    conjugation = max(
        _rel(wp, wave_minus(u.conj(), dt=dt).conj()),
        _rel(wm, wave_plus(u.conj(), dt=dt).conj()),
    )
    phi = inverse_fourier(u)
    fphi = fourier(phi)
    duality = max(
        _rel(fourier(inverse_wave_plus(phi, dt=dt)), wave_minus(fphi, dt=dt)),
        _rel(fourier(inverse_wave_minus(phi, dt=dt)), wave_plus(fphi, dt=dt)),
    )
    return IdentityReport(gauge, translation, conjugation, duality, eta, shift)


# Stability -----------------------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    epsilon: float
    trials: int
    seed: int
    blowups: int
    max_mass_drift: float
    max_rotation_defect: float
    perturbation_sizes: list = dc_field(default_factory=list)

    @property
    def survival_fraction(self) -> float:
        return 1.0 - self.blowups / self.trials if self.trials else 1.0

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "trials": self.trials,
            "seed": self.seed,
            "blowups": self.blowups,
            "survival_fraction": self.survival_fraction,
            "max_mass_drift": self.max_mass_drift,
            "max_rotation_defect": self.max_rotation_defect,
            "perturbation_sizes": list(self.perturbation_sizes),
        }


def _hermite_perturbation(grid: Grid, rng: np.random.Generator, k_max: int) -> np.ndarray:
    table = hermite_functions(grid.axis, k_max)
    coef = rng.standard_normal((k_max + 1,) * grid.d) + 1j * rng.standard_normal((k_max + 1,) * grid.d)
    if grid.d == 1:
        return coef @ table
    return np.einsum("ab,ai,bj->ij", coef, table, table)


def stability_probe(
    datum: RotatingDatum | Field,
    epsilon: float,
    trials: int = 8,
    seed: int = 0,
    dt: float = 1e-3,
    k_max: int = 10,
    theta: float | None = None,
) -> StabilityReport:
    """Perturb the lens endpoint datum and rerun the focusing flow over ``[-pi/2, pi/2]``.

    Perturbations are seeded random complex combinations of Hermite functions
    of order ``<= k_max``, scaled to L2 size ``epsilon``.  Blow-up flags are
    counted, never raised.
    """
    if isinstance(datum, RotatingDatum):
        u_minus, theta = datum.u_minus, datum.theta if theta is None else theta
    else:
        u_minus = datum
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    v0 = endpoint_minus(u_minus)
    cfg = lens_config(v0.grid.d, "focusing")
    rng = np.random.default_rng(seed)
    blowups = 0
    drift = 0.0
    worst = 0.0
    sizes = []
    for _ in range(trials):
        p = _hermite_perturbation(v0.grid, rng, k_max)
        p = p / math.sqrt(float(np.sum(np.abs(p) ** 2)) * v0.grid.cell)
        start = v0 + Field(v0.grid, epsilon * p)
        sizes.append(l2_norm(start - v0))
        res = propagate(start, -HALF_PI, HALF_PI, cfg, dt)
        if res.blew_up:
            blowups += 1
            continue
        drift = max(drift, res.mass_drift)
        if theta is not None:
            worst = max(worst, rotation_defect(u_minus, from_endpoint_plus(res.final), theta))
    return StabilityReport(epsilon, trials, seed, blowups, drift, worst, sizes)
