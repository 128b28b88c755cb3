"""Nonlinear eigenvalue problems by constrained minimization.

For ``nu != d/2`` we minimize

    I(psi) = <H psi, psi>/2 - nu ||psi||^2 / 2

over even (radial in 2-D) functions on the manifold
``M = {d/(d+2) * int |psi|^{2+4/d} = 1}``.  At a minimizer
``H psi - nu psi = mu |psi|^{4/d} psi``, and ``|mu|^{d/4} psi`` solves

    defocusing (nu > d/2):  nu psi = H psi + |psi|^{4/d} psi
    focusing   (nu < d/2):  (H - nu) psi = |psi|^{4/d} psi

Dropping the potential and taking ``nu = -1`` yields the ground state Q of
``-Delta Q / 2 + Q = Q^{1+4/d}``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.fft as sfft
from scipy.sparse.linalg import LinearOperator, cg

from .errors import DegenerateInput, InvalidProblem, NonConvergence, WrongBranch
from .spectral import Field, Grid, l2_norm, norms

__all__ = [
    "MinimizationProblem",
    "EigenstateSolution",
    "energy_I",
    "constraint_value",
    "project_to_M",
    "symmetrize",
    "minimize",
    "equation_residual",
    "solve_Q",
    "Q_closed_form",
    "gn_check",
    "imaginary_time_oracle",
    "petviashvili_oracle",
    "DEFAULT_GRID",
    "OracleComparison",
    "compare_with_oracle",
]

log = logging.getLogger(__name__)

DEFAULT_GRID = Grid(1, 12.0, 1024)
DEFAULT_TOL = 1e-9

Sign = Literal["defocusing", "focusing"]


@dataclass(frozen=True)
class MinimizationProblem:
    nu: float
    grid: Grid = DEFAULT_GRID
    sign: Sign | None = None
    potential: bool = True

    def __post_init__(self):
        d = self.grid.d
        threshold = d / 2 if self.potential else 0.0
        sign = self.sign
        if sign is None:
            if self.nu == threshold:
                raise InvalidProblem(f"nu = {threshold} is excluded")
            sign = "defocusing" if self.nu > threshold else "focusing"
            object.__setattr__(self, "sign", sign)
        if sign not in ("defocusing", "focusing"):
            raise InvalidProblem(f"unknown sign {sign!r}")
        if sign == "defocusing" and not self.nu > threshold:
            raise InvalidProblem(f"defocusing case needs nu > {threshold}, got {self.nu}")
        if sign == "focusing" and not self.nu < threshold:
            raise InvalidProblem(f"focusing case needs nu < {threshold}, got {self.nu}")
        if sign == "defocusing" and not self.potential:
            raise InvalidProblem("the defocusing problem needs the harmonic potential")

    @property
    def exponent(self) -> float:
        return 2.0 + 4.0 / self.grid.d


@dataclass(frozen=True)
class EigenstateSolution:
    psi: Field
    nu: float
    mu: float
    delta: float
    residual: float
    iterations: int
    converged: bool
    minimizer: Field
    sign: Sign
    grad_norm: float
    potential: bool = True
    history: tuple = ()

    @property
    def relative_residual(self) -> float:
        return self.residual / l2_norm(self.psi)


def _linear_op(values: np.ndarray, grid: Grid, potential: bool) -> np.ndarray:
    axes = tuple(range(grid.d))
    out = sfft.ifftn(0.5 * grid.k2 * sfft.fftn(values, axes=axes), axes=axes)
    if potential:
        out = out + 0.5 * grid.r2 * values
    return out


def _nonlinearity(values: np.ndarray, d: int) -> np.ndarray:
    a2 = values.real**2 + values.imag**2
    return (a2 * a2 if d == 1 else a2 ** (2.0 / d)) * values


def symmetrize(f: Field) -> Field:
    """Even part in 1-D; average over the square's symmetry group in 2-D."""
    if f.grid.d == 1:
        return f.even_part()
    v = f.values
    acc = np.zeros_like(v)
    for w in (v, v.T):
        for ax in ((), (0,), (1,), (0, 1)):
            u = w
            for a in ax:
                u = np.roll(np.flip(u, axis=a), 1, axis=a)
            acc = acc + u
    return Field(f.grid, acc / 8.0)


def energy_I(psi: Field, nu: float, potential: bool = True) -> float:
    g = psi.grid
    hpsi = _linear_op(psi.values, g, potential)
    return 0.5 * float(np.real(np.vdot(psi.values, hpsi))) * g.cell - 0.5 * nu * l2_norm(psi) ** 2


def constraint_value(psi: Field) -> float:
    d = psi.grid.d
    p = 2.0 + 4.0 / d
    return d / (d + 2.0) * float(np.sum(np.abs(psi.values) ** p)) * psi.grid.cell


def project_to_M(psi: Field) -> Field:
    """Symmetrize, then scale onto the constraint level set."""
    s = symmetrize(psi)
    c = constraint_value(s)
    # an odd input leaves only rounding noise after symmetrization
    if not c > 1e-24 * constraint_value(psi):
        raise DegenerateInput("input has no symmetric component to project")
    p = 2.0 + 4.0 / psi.grid.d
    return s * c ** (-1.0 / p)


def equation_residual(psi: Field, nu: float, sign: Sign, potential: bool = True) -> float:
    """L2 norm of the residual of the rescaled stationary equation."""
    g = psi.grid
    lhs = _linear_op(psi.values, g, potential) - nu * psi.values
    nl = _nonlinearity(psi.values, g.d)
    res = lhs + nl if sign == "defocusing" else lhs - nl
    return math.sqrt(float(np.sum(np.abs(res) ** 2)) * g.cell)


def _gaussian(grid: Grid) -> Field:
    return grid.field(lambda *x: np.exp(-0.5 * sum(c**2 for c in x)))


def minimize(
    problem: MinimizationProblem,
    init: Field | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = 20000,
) -> EigenstateSolution:
    """Preconditioned projected gradient descent of ``I`` on ``M``.

    Each step moves along the (kinetic-preconditioned) negative gradient of the
    scale-invariant quotient ``I / C^{2/p}``, which coincides with ``I`` on
    ``M``, re-projects, and backtracks until Armijo decrease holds.  The loop
    stops once the projected gradient ``(H - nu) psi - mu |psi|^{4/d} psi`` has
    L2 norm below ``tol``.  If ``max_iter`` is exhausted the best iterate is
    returned with ``converged=False``.
    """
    g = problem.grid
    d = g.d
    nu = problem.nu
    pot = problem.potential
    cell = g.cell
    axes = tuple(range(d))
    gnorm = math.inf
    shift = 1.0 + abs(nu)
    precond = 1.0 / (0.5 * g.k2 + shift)
    # Symmetric scaling by the potential, so that modes out in the stiff part
    # of the well are damped as strongly as high frequencies.
    weight = np.sqrt(shift / (0.5 * g.r2 + shift)) if pot else np.ones(g.shape)

    psi = project_to_M(init if init is not None else _gaussian(g)).values.copy()

    def dot(a, b):
        return float(np.real(np.vdot(a, b))) * cell

    def on_M(v):
        c = d / (d + 2.0) * float(np.sum(np.abs(v) ** (2 + 4.0 / d))) * cell
        return v * c ** (-1.0 / (2 + 4.0 / d))

    def state(v):
        r = _linear_op(v, g, pot) - nu * v
        return r, 0.5 * dot(v, r)

    def projected(v, r):
        nl = _nonlinearity(v, d)
        mu = dot(r, nl) / dot(nl, nl)
        return nl, math.sqrt(dot(r - mu * nl, r - mu * nl))

    r, val = state(psi)
    nl, gnorm = projected(psi, r)
    history = [val]
    tau = 1.0
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        if gnorm < tol:
            converged = True
            break
        grad = r - (2.0 * d / (d + 2.0)) * val * nl
        direction = -weight * sfft.ifftn(precond * sfft.fftn(weight * grad, axes=axes), axes=axes)
        slope = dot(grad, direction)
        tau = min(4.0 * tau, 1e3)
        noise = 1e-14 * (abs(val) + 1.0)
        accepted = False
        while tau >= 1e-14:
            trial = on_M(symmetrize(Field(g, psi + tau * direction)).values)
            r_t, val_t = state(trial)
            # I is quadratic, so its change is a single inner product and does
            # not suffer the cancellation of subtracting two values of I.
            change = 0.5 * dot(trial - psi, r_t + r)
            if change <= 1e-4 * tau * slope:
                accepted = True
                break
            if abs(change) <= noise:
                # Below round-off in I: fall back on the directional derivative.
                grad_t = r_t - (2.0 * d / (d + 2.0)) * val_t * _nonlinearity(trial, d)
                if abs(dot(grad_t, direction)) <= 0.9 * abs(slope):
                    accepted = True
                    break
            tau *= 0.5
        if not accepted:
            log.warning("line search stalled at iteration %d (|G| = %.3e)", it, gnorm)
            break
        psi, r, val = trial, r_t, val_t
        history.append(val)
        nl, gnorm = projected(psi, r)
    nl = _nonlinearity(psi, d)
    mu = dot(r, nl) / dot(nl, nl)
    sign = problem.sign
    if sign == "defocusing" and not mu < 0:
        raise WrongBranch(f"defocusing problem produced mu = {mu:.3e} >= 0")
    if sign == "focusing" and not mu > 0:
        raise WrongBranch(f"focusing problem produced mu = {mu:.3e} <= 0")
    minimizer = Field(g, psi)
    scaled = minimizer * abs(mu) ** (d / 4.0)
    if not converged:
        log.warning("minimize: no convergence after %d iterations (|G| = %.3e)", it, gnorm)
    return EigenstateSolution(
        psi=scaled,
        nu=nu,
        mu=mu,
        delta=val,
        residual=equation_residual(scaled, nu, sign, pot),
        iterations=it,
        converged=converged,
        minimizer=minimizer,
        sign=sign,
        grad_norm=gnorm,
        potential=pot,
        history=tuple(history),
    )


def Q_closed_form(grid: Grid) -> Field:
    """One-dimensional ground state ``3^{1/4} sech^{1/2}(2 sqrt(2) x)``."""
    if grid.d != 1:
        raise ValueError("closed form only available for d = 1")
    return grid.field(lambda x: 3**0.25 / np.sqrt(np.cosh(2 * math.sqrt(2) * x)))


def solve_Q(grid: Grid = DEFAULT_GRID, d: int | None = None, tol: float = DEFAULT_TOL) -> Field:
    """Positive radial solution of ``-Delta Q/2 + Q = Q^{1+4/d}``."""
    if d is not None and d != grid.d:
        raise ValueError(f"d={d} does not match grid dimension {grid.d}")
    sol = minimize(MinimizationProblem(-1.0, grid, "focusing", potential=False), tol=tol)
    if not sol.converged:
        raise NonConvergence("ground state solver did not converge", sol)
    q = sol.psi.values.real
    centre = (grid.N // 2,) * grid.d
    q = q if q[centre] > 0 else -q
    return Field(grid, q)


def gn_check(f: Field, Q_l2: float) -> float:
    """Ratio of the sharp Gagliardo-Nirenberg bound to ``||f||_{2+4/d}^{2+4/d}``."""
    d = f.grid.d
    p = 2.0 + 4.0 / d
    n = norms(f, p=(p,))
    lhs = n.lp[p] ** p
    if lhs == 0:
        raise DegenerateInput("gn_check needs f != 0")
    rhs = (d + 2.0) / (2.0 * d * Q_l2 ** (4.0 / d)) * n.l2 ** (4.0 / d) * n.grad_l2**2
    return rhs / lhs


def imaginary_time_oracle(
    grid: Grid, nu: float, tol: float = 1e-11, dtau: float | None = None, max_iter: int = 200000
) -> Field:
    """Defocusing profile at fixed ``nu`` by gradient flow of
    ``<H psi,psi>/2 + d/(2d+4) int |psi|^{2+4/d} - nu ||psi||^2/2``.

    Semi-implicit in the kinetic part, explicit in potential and nonlinearity;
    independent of :func:`minimize` (no constraint manifold, no rescaling).
    """
    if not nu > grid.d / 2:
        raise InvalidProblem("oracle covers the defocusing case nu > d/2")
    d = grid.d
    axes = tuple(range(d))
    alpha = nu
    if dtau is None:
        dtau = 1.0 / (0.5 * float(grid.r2.max()) + 4.0 * nu)
    implicit = 1.0 / (1.0 + dtau * (0.5 * grid.k2 + alpha))
    psi = 0.5 * _gaussian(grid).values
    for _ in range(max_iter):
        explicit = (0.5 * grid.r2 + _nonlinearity(psi, d) / np.where(psi == 0, 1, psi) - nu - alpha) * psi
        psi = sfft.ifftn(implicit * sfft.fftn(psi - dtau * explicit, axes=axes), axes=axes)
        psi = symmetrize(Field(grid, psi)).values
        res = equation_residual(Field(grid, psi), nu, "defocusing")
        if res < tol:
            return Field(grid, psi)
    raise NonConvergence(f"imaginary-time oracle stalled at residual {res:.2e}")


def petviashvili_oracle(
    grid: Grid, nu: float, potential: bool = True, tol: float = 1e-11, max_iter: int = 2000
) -> Field:
    """Focusing profile ``(L - nu) psi = |psi|^{4/d} psi`` by Petviashvili iteration.

    ``L`` is ``H`` or ``-Delta/2``; the linear solves use conjugate gradients
    preconditioned by the kinetic symbol.
    """
    d = grid.d
    shape = grid.shape
    axes = tuple(range(d))
    threshold = d / 2 if potential else 0.0
    if not nu < threshold:
        raise InvalidProblem(f"oracle covers the focusing case nu < {threshold}")
    gamma = (d + 4.0) / 4.0
    symbol = 0.5 * grid.k2 + (0.5 if potential else 0.0) - nu

    def op(v):
        return (_linear_op(v.reshape(shape), grid, potential) - nu * v.reshape(shape)).ravel()

    def pre(v):
        return sfft.ifftn(sfft.fftn(v.reshape(shape), axes=axes) / symbol, axes=axes).ravel()

    n = grid.N**d
    A = LinearOperator((n, n), matvec=op, dtype=complex)
    P = LinearOperator((n, n), matvec=pre, dtype=complex)

    def solve(rhs):
        if not potential:
            return pre(rhs.ravel()).reshape(shape)
        x, info = cg(A, rhs.ravel(), M=P, rtol=1e-14, atol=0.0, maxiter=5000)
        return x.reshape(shape)

    psi = _gaussian(grid).values * (abs(nu) + 1.0) ** (d / 4.0)
    for _ in range(max_iter):
        nl = _nonlinearity(psi, d)
        m = np.real(np.vdot(psi, op(psi.ravel()).reshape(shape))) / np.real(np.vdot(psi, nl))
        psi = m**gamma * solve(nl)
        psi = symmetrize(Field(grid, psi)).values
        res = equation_residual(Field(grid, psi), nu, "focusing", potential)
        if res < tol:
            return Field(grid, psi)
    raise NonConvergence(f"Petviashvili oracle stalled at residual {res:.2e}")


@dataclass(frozen=True)
class OracleComparison:
    """Main solver against the independent oracle for the same ``nu``.

    ``multiplicity`` is set when the two profiles differ beyond ``tol`` while
    their constrained energies agree, i.e. two distinct minimizers were found.
    """

    l2_gap: float
    delta_solver: float
    delta_oracle: float
    agree: bool
    multiplicity: bool


def compare_with_oracle(sol: EigenstateSolution, tol: float = 1e-6) -> OracleComparison:
    grid = sol.psi.grid
    if sol.sign == "defocusing":
        oracle = imaginary_time_oracle(grid, sol.nu)
    else:
        oracle = petviashvili_oracle(grid, sol.nu, potential=sol.potential)
    gap = min(l2_norm(sol.psi - oracle), l2_norm(sol.psi + oracle))
    d_oracle = energy_I(project_to_M(oracle), sol.nu, sol.potential)
    same_level = abs(d_oracle - sol.delta) <= 1e-8 * max(1.0, abs(sol.delta))
    agree = gap <= tol
    return OracleComparison(gap, sol.delta, d_oracle, agree, bool(not agree and same_level))
