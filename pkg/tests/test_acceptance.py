"""Acceptance criteria 1-10, each at its stated tolerance.

Every test prints (and records for the terminal summary) one line
``CRITERION n: PASS|FAIL ...``.  Reference resolution is the profile grid
``L = 12, N = 1024`` with ``dt = 1e-3``; focusing rotating runs use the stated
step ``2.5e-5``, and the identity suite uses the wider profile box ``L = 24``.
"""

import math

import numpy as np
import pytest

from nlsrot.eigensolver import MinimizationProblem, Q_closed_form, gn_check, minimize, solve_Q
from nlsrot.experiments import default_dt, q_mass_threshold, resolution_study, ExperimentConfig
from nlsrot.free import dispersive_factorization, propagate_U0
from nlsrot.harmonic import apply_H, default_basis, propagate_UH
from nlsrot.scattering import (
    DEFAULT_STATE_GRID,
    build_rotating_datum,
    identity_suite,
    perturbative_P,
    rotation_defect,
    scattering_lens,
    stability_probe,
)
from nlsrot.spectral import Field, Grid, fourier, fourier_at_scaled, l2_norm, norms

import conftest
from conftest import gaussian, random_smooth

PROFILE = Grid(1, 12.0, 1024)
STATE = DEFAULT_STATE_GRID
DT = 1e-3

# every successful S run of this module, for criterion 5
RESULTS: list = []


def record(n: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)


def hermite2(grid: Grid) -> Field:
    x = grid.axis
    return Field(grid, math.pi**-0.25 * (2 * x**2 - 1) / math.sqrt(2) * np.exp(-0.5 * x**2))


def test_criterion_1_linear_pipeline_is_identity():
    data = {
        "gaussian": gaussian(STATE),
        "hermite2": hermite2(STATE),
        "random": random_smooth(STATE, np.random.default_rng(11)),
    }
    worst = 0.0
    for sign in ("defocusing", "focusing"):
        for u in data.values():
            res = scattering_lens(u, sign, DT, coupling=0.0, estimate=False)
            worst = max(worst, l2_norm(res.u_plus - u) / l2_norm(u))
    ok = worst < 1e-9
    record(1, ok, f"max linear defect {worst:.2e} (< 1e-9)")
    assert ok


@pytest.mark.slow
def test_criterion_2_defocusing_rotating_points():
    cfg = ExperimentConfig(thetas=(0.0, math.pi / 2, math.pi), js=(1, 2), dt=DT)
    rows = resolution_study(cfg, refinements=2)
    coarse = [r for r in rows if r["level"] == 0]
    fine = [r for r in rows if r["level"] == 1]
    worst = max(r["defect"] for r in coarse)
    ratio = min(r["ratio"] for r in fine)
    for th in cfg.thetas:
        for j in cfg.js:
            d = build_rotating_datum(th, j)
            RESULTS.append(scattering_lens(d.u_minus, "defocusing", DT, estimate=False))
    ok = len(coarse) == 6 and worst < 1e-4 and ratio >= 3.0
    record(2, ok, f"6 cases, max defect {worst:.2e} (< 1e-4), min refinement ratio {ratio:.2f} (>= 3)")
    assert ok


@pytest.mark.slow
def test_criterion_3_focusing_rotating_points():
    dt = default_dt("focusing")
    threshold = q_mass_threshold(PROFILE)
    defects, masses = [], []
    for theta in (0.0, math.pi):
        for j in (1, 2):
            d = build_rotating_datum(theta, j, sign="focusing")
            res = scattering_lens(d.u_minus, "focusing", dt, estimate=False)
            RESULTS.append(res)
            defects.append(rotation_defect(d.u_minus, res.u_plus, theta))
            masses.append(l2_norm(d.u_minus))
    grads = [norms(build_rotating_datum(0.0, j, sign="focusing").profile, p=()).grad_l2 for j in (1, 2, 3)]
    q_err = float(np.max(np.abs(solve_Q(PROFILE).values - Q_closed_form(PROFILE).values)))
    ok = (
        max(defects) < 1e-4
        and min(masses) > threshold
        and grads[0] < grads[1] < grads[2]
        and q_err < 1e-6
        and threshold == pytest.approx(1.0539, abs=1e-4)
    )
    record(
        3,
        ok,
        f"dt={dt:g}, max defect {max(defects):.2e} (< 1e-4), min mass {min(masses):.4f} > {threshold:.4f}, "
        f"grad norms {grads[0]:.3f} < {grads[1]:.3f} < {grads[2]:.3f}, Q pointwise error {q_err:.1e} (< 1e-6)",
    )
    assert ok


def test_criterion_4_small_data_expansion():
    u = gaussian(STATE)
    P = perturbative_P(u)
    p_norm = l2_norm(P)
    eps = [0.1, 0.15, 0.2, 0.3]
    ratios, residuals = [], []
    for e in eps:
        res = scattering_lens(u * e, "defocusing", DT, estimate=False)
        RESULTS.append(res)
        diff = res.u_plus - u * e
        ratios.append(l2_norm(diff) / e**5 / p_norm)
        residuals.append(l2_norm(diff + P * (1j * e**5)))
    slope = float(np.polyfit(np.log(eps), np.log(residuals), 1)[0])
    worst = max(abs(r - 1.0) for r in ratios)
    ok = worst < 0.05 and slope >= 7.0
    record(4, ok, f"||P|| = {p_norm:.6f}, max ratio deviation {worst:.2e} (< 5%), residual slope {slope:.3f} (>= 7)")
    assert ok


def test_criterion_6_algebraic_identities():
    state = Grid(1, 24.0, 2048).dual()
    worst = {}
    for name, u in (("gaussian", gaussian(state)), ("hermite2", hermite2(state))):
        rep = identity_suite(u, dt=DT)
        worst[name] = rep.worst
    ok = max(worst.values()) < 1e-5
    record(6, ok, "worst identity defect " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (< 1e-5)")
    assert ok


def test_criterion_7_spectrum_and_maslov():
    basis = default_basis(PROFILE)
    eig = max(
        l2_norm(apply_H(basis.function(k)) - (k + 0.5) * basis.function(k)) for k in range(21)
    )
    # exp(-i pi H / 2) = e^{-i pi/4} F, with F f sampled on the same points
    maslov = 0.0
    for f in (gaussian(PROFILE, 1.0, 0.8, 0.5), hermite2(PROFILE), gaussian(PROFILE, 1.0, -0.5, -1.0) * 1j):
        lhs = propagate_UH(f, math.pi / 2)
        rhs = np.exp(-0.25j * math.pi) * fourier_at_scaled(f, 1.0)
        maslov = max(maslov, l2_norm(lhs - Field(PROFILE, rhs)) / l2_norm(f))
    selfdual = Grid(1, math.sqrt(math.pi * 1024 / 2), 1024)
    f = gaussian(selfdual, 1.0, 0.8, 0.5)
    fh = fourier(f)
    assert fh.grid.L == pytest.approx(selfdual.L, rel=1e-14)
    rhs = Field(selfdual, np.exp(-0.25j * math.pi) * fh.values)
    maslov = max(maslov, l2_norm(propagate_UH(f, math.pi / 2) - rhs))
    ok = eig < 1e-8 and maslov < 1e-8
    record(7, ok, f"max eigen residual k<=20 {eig:.1e} (< 1e-8), Maslov defect {maslov:.1e} (< 1e-8)")
    assert ok


def test_criterion_8_gagliardo_nirenberg():
    q_l2 = l2_norm(Q_closed_form(PROFILE))
    rng = np.random.default_rng(8)
    ratios = [gn_check(random_smooth(PROFILE, rng, width=rng.uniform(0.5, 2.0)), q_l2) for _ in range(100)]
    at_q = gn_check(solve_Q(PROFILE), q_l2)
    ok = min(ratios) >= 1.0 and abs(at_q - 1.0) < 1e-6
    record(8, ok, f"min ratio over 100 random functions {min(ratios):.4f} (>= 1), ratio at Q {at_q:.9f} (within 1e-6 of 1)")
    assert ok


def test_criterion_9_focusing_stability():
    datum = build_rotating_datum(0.0, 1, sign="focusing")
    rep = stability_probe(datum, 1e-3, trials=8, seed=0, dt=DT)
    wild = stability_probe(datum, 10.0, trials=2, seed=0, dt=DT)
    print(f"out-of-regime probe epsilon=10: {wild.blowups}/{wild.trials} blow-up flags (recorded only)")
    ok = rep.blowups == 0 and rep.max_mass_drift < 1e-8 and max(rep.perturbation_sizes) <= 1e-3 * (1 + 1e-12)
    record(9, ok, f"8 trials, {rep.blowups} blow-up flags, max mass drift {rep.max_mass_drift:.1e} (< 1e-8)")
    assert ok


def test_criterion_10_cross_method_consistency():
    u = gaussian(STATE, 0.2)
    res = scattering_lens(u, "defocusing", DT, cross_check={"T": 40.0, "dt": 1e-2})
    RESULTS.append(res)
    f = gaussian(STATE)
    fact = [l2_norm(propagate_U0(f, t) - dispersive_factorization(f, t)) for t in (4.0, 8.0, 16.0, 32.0)]
    decays = all(b < a for a, b in zip(fact, fact[1:]))
    ok = res.cross_check_gap < 1e-5 and decays
    record(
        10,
        ok,
        f"lens/direct gap {res.cross_check_gap:.1e} (< 1e-5), factorization defects "
        + ", ".join(f"{v:.2e}" for v in fact)
        + (" decreasing" if decays else " not decreasing"),
    )
    assert ok


def test_criterion_5_unitarity():
    runs = list(RESULTS)
    if not runs:
        for th, sign, dt in ((0.0, "defocusing", DT), (math.pi, "focusing", default_dt("focusing"))):
            d = build_rotating_datum(th, 1, sign=sign)
            runs.append(scattering_lens(d.u_minus, sign, dt, estimate=False))
        runs.append(scattering_lens(gaussian(STATE, 0.2), "defocusing", DT, estimate=False))
    l2 = max(r.l2_defect for r in runs)
    h1 = max(r.h1_defect for r in runs)
    ok = l2 < 1e-7 and h1 < 1e-6
    record(5, ok, f"{len(runs)} runs, max L2 defect {l2:.1e} (< 1e-7), max H1 defect {h1:.1e} (< 1e-6)")
    assert ok
