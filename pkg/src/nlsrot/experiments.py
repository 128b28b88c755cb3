"""Reproduction pipelines: eigenstate, rotating datum, scattering, report."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field as dc_field, fields
from pathlib import Path
from typing import Literal

from .eigensolver import Q_closed_form, solve_Q
from .errors import NLSRotError
from .fieldio import write_field
from .scattering import build_rotating_datum, rotation_defect, scattering_lens
from .spectral import Grid, l2_norm, norms

__all__ = [
    "OUTPUT_ENV",
    "output_root",
    "default_dt",
    "ExperimentConfig",
    "RotationReport",
    "q_mass_threshold",
    "rotation_report",
    "run_experiment",
    "exit_code",
    "resolution_study",
    "write_json",
    "write_csv",
]

log = logging.getLogger(__name__)

OUTPUT_ENV = "NLSROT_OUTPUT"

Sign = Literal["defocusing", "focusing"]


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "nlsrot-output"))


def default_dt(sign: Sign) -> float:
    """Reference time step: the focusing profiles are far more concentrated."""
    return 1e-3 if sign == "defocusing" else 2.5e-5


def write_json(path: Path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def write_csv(path: Path, rows: list[dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    keys = list(rows[0]) if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        w.writerows(rows)
    return path


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a run of the rotating-point pipeline."""

    name: str = "rotation"
    d: int = 1
    L: float = 12.0
    N: int = 1024
    dt: float | None = None
    thetas: tuple[float, ...] = (0.0,)
    js: tuple[int, ...] = (1,)
    sign: Sign = "defocusing"
    output_dir: str | None = None
    seed: int = 0
    tol: float = 1e-9
    defect_threshold: float = 1e-4
    write_fields: bool = True

    def __post_init__(self):
        object.__setattr__(self, "thetas", tuple(float(t) for t in self.thetas))
        object.__setattr__(self, "js", tuple(int(j) for j in self.js))
        if self.sign not in ("defocusing", "focusing"):
            raise ValueError(f"unknown sign {self.sign!r}")

    @property
    def grid(self) -> Grid:
        return Grid(self.d, self.L, self.N)

    @property
    def step(self) -> float:
        return self.dt if self.dt is not None else default_dt(self.sign)

    @property
    def out(self) -> Path:
        return Path(self.output_dir) if self.output_dir else output_root() / self.name

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**data)


@dataclass
class RotationReport:
    theta: float
    j: int
    nu: float
    defect: float
    l2: float
    grad_l2: float
    sign: Sign
    mass_threshold: float | None = None
    mass_threshold_pass: bool | None = None
    h1_growth_flag: bool | None = None
    discretization_estimate: float = math.nan
    l2_defect: float = math.nan
    h1_defect: float = math.nan
    eigen_residual: float = math.nan
    runtime: float = 0.0
    error: str | None = None

    def as_dict(self) -> dict:
        return asdict(self)

    def passes(self, threshold: float) -> bool:
        if self.error is not None or not self.defect < threshold:
            return False
        return self.mass_threshold_pass is not False


_Q_CACHE: dict = {}


def _q_l2(grid: Grid) -> float:
    if grid not in _Q_CACHE:
        q = Q_closed_form(grid) if grid.d == 1 else solve_Q(grid)
        _Q_CACHE[grid] = l2_norm(q)
    return _Q_CACHE[grid]


def q_mass_threshold(grid: Grid) -> float:
    """``(d/(d+2))^{d/4} ||Q||``, the focusing mass bound."""
    d = grid.d
    return (d / (d + 2.0)) ** (d / 4.0) * _q_l2(grid)


def _h1_lower_bound(grid: Grid, theta: float, j: int) -> float:
    d = grid.d
    return 2 * d / (d + 2.0) * _q_l2(grid) ** (4.0 / d) * (2 * j - d / 2 + theta / math.pi)


def rotation_report(
    theta: float, j: int, sign: Sign, grid: Grid, dt: float, tol: float = 1e-9, out: Path | None = None
) -> RotationReport:
    """Eigenstate, datum and lens scattering for one ``(theta, j)``."""
    t0 = time.perf_counter()
    datum = build_rotating_datum(theta, j, grid.d, sign, grid, tol)
    res = scattering_lens(datum.u_minus, sign, dt)
    u = datum.u_minus
    phi = datum.profile
    rep = RotationReport(
        theta=theta,
        j=j,
        nu=datum.nu,
        defect=rotation_defect(u, res.u_plus, theta),
        l2=l2_norm(u),
        grad_l2=norms(phi, p=()).grad_l2,
        sign=sign,
        discretization_estimate=res.discretization_estimate,
        l2_defect=res.l2_defect,
        h1_defect=res.h1_defect,
        eigen_residual=datum.eigenstate.relative_residual,
    )
    if sign == "focusing":
        rep.mass_threshold = q_mass_threshold(grid)
        rep.mass_threshold_pass = bool(rep.l2 > rep.mass_threshold)
        lhs = rep.l2 ** (4.0 / grid.d) * rep.grad_l2**2
        rep.h1_growth_flag = bool(lhs >= 0.98 * _h1_lower_bound(grid, theta, j))
    if out is not None:
        stem = f"{sign}_theta{theta:.6f}_j{j}"
        write_field(out / f"u_minus_{stem}.field", u, f"rotating datum {stem}")
        write_field(out / f"u_plus_{stem}.field", res.u_plus, f"scattered state {stem}")
    rep.runtime = time.perf_counter() - t0
    return rep


def run_experiment(cfg: ExperimentConfig) -> list[RotationReport]:
    """Run every ``(theta, j)`` of ``cfg``, write ``reports.json`` and return the reports.

    Failures inside one case are recorded on its report and do not stop the
    others.
    """
    reports = []
    out = cfg.out
    for theta in cfg.thetas:
        for j in cfg.js:
            try:
                rep = rotation_report(
                    theta, j, cfg.sign, cfg.grid, cfg.step, cfg.tol, out if cfg.write_fields else None
                )
            except NLSRotError as exc:
                log.error("theta=%g j=%d failed: %s", theta, j, exc)
                rep = RotationReport(theta, j, math.nan, math.nan, math.nan, math.nan, cfg.sign, error=str(exc))
            reports.append(rep)
    if reports or cfg.output_dir:
        write_json(out / "reports.json", {"config": asdict(cfg), "reports": [r.as_dict() for r in reports]})
    return reports


def exit_code(reports: list[RotationReport], threshold: float) -> int:
    """0 when every report passes its thresholds, 1 otherwise."""
    return 0 if all(r.passes(threshold) for r in reports) else 1


def resolution_study(
    cfg: ExperimentConfig, refinements: int = 2, linear: bool = False
) -> list[dict]:
    """Repeat each case at ``(N, dt), (2N, dt/2), ...`` and tabulate the defects.

    With ``linear`` the nonlinearity is switched off, so only round-off remains.
    """
    if refinements < 2:
        raise ValueError("a resolution study needs at least two levels")
    rows = []
    for theta in cfg.thetas:
        for j in cfg.js:
            prev = None
            for level in range(refinements):
                grid = Grid(cfg.d, cfg.L, cfg.N * 2**level)
                dt = cfg.step / 2**level
                datum = build_rotating_datum(theta, j, cfg.d, cfg.sign, grid, cfg.tol)
                if linear:
                    res = scattering_lens(datum.u_minus, cfg.sign, dt, coupling=0.0, estimate=False)
                    defect = l2_norm(res.u_plus - datum.u_minus) / l2_norm(datum.u_minus)
                else:
                    res = scattering_lens(datum.u_minus, cfg.sign, dt, estimate=False)
                    defect = rotation_defect(datum.u_minus, res.u_plus, theta)
                rows.append(
                    {
                        "theta": theta,
                        "j": j,
                        "level": level,
                        "N": grid.N,
                        "dt": dt,
                        "defect": defect,
                        "ratio": (prev / defect) if prev is not None and defect > 0 else math.nan,
                        "eigen_residual": datum.eigenstate.relative_residual,
                    }
                )
                prev = defect
    return rows
