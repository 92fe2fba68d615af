"""Figure presets, generic sweeps and the closed-form vs Monte Carlo suite.

Every function returns plain rows (lists of dicts) in a deterministic order;
CSV serialisation lives in :func:`write_csv`.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .channel_model import SystemConfig, db_to_linear
from .closed_form import optimize_training_length, rate_downlink, rate_uplink
from .errors import DomainError
from .monte_carlo import (
    estimate_rate_downlink_pipeline,
    estimate_rate_downlink_statistical,
    estimate_rate_uplink,
)
from .threshold import phi_star_approx, phi_star_exact

AXES = ("rho_b_db", "phi", "T", "n_b", "t_tr")
OUTPUTS = ("mc_validation", "phi_star_approx", "phi_star_exact", "rate_downlink", "rate_uplink")
Z_LIMIT = 3.0

FIG1_PHIS = (0.5, 0.8, 0.95, 1.0)
FIG1_RHO_DB = tuple(range(0, 31, 2))
FIG2_PHIS = tuple(round(0.02 * k, 10) for k in range(51))
FIG2_ANTENNAS = (5, 10)
FIG3_BLOCKLENGTHS = tuple(range(100, 1001, 100))
FIG3_RHO_DB = (5, 10, 15)

Row = Dict[str, object]


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.10g}"
    return str(value)


def write_csv(path, columns: Sequence[str], rows: Iterable[Row]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(row.get(c)) for c in columns])


# ---------------------------------------------------------------------------
# Figure presets


def fig1_rows(samples: Optional[int] = 10**6, seed: int = 1) -> List[Row]:
    """Uplink rate vs rho_b for several phi; n_b=5, eps=1e-9, T=200.

    ``samples=None`` skips the Monte Carlo columns.
    """
    rows = []
    for phi in FIG1_PHIS:
        for db in FIG1_RHO_DB:
            cfg = SystemConfig(n_b=5, rho_b=db_to_linear(db), T=200, epsilon=1e-9, phi=phi)
            row: Row = {"rho_b_db": db, "phi": phi, "rate_closed_form": rate_uplink(cfg).rate}
            if samples:
                est = estimate_rate_uplink(cfg, samples, seed)
                row.update(rate_mc_mean=est.mean, rate_mc_stderr=est.std_error)
            rows.append(row)
    return rows


FIG1_COLUMNS = ("rho_b_db", "phi", "rate_closed_form", "rate_mc_mean", "rate_mc_stderr")


def fig2_rows():
    """Uplink rate vs phi against the optimised downlink rate; rho_b=10 dB, eps=1e-9, T=200.

    Returns ``(rows, crossings)``; crossings hold phi* per antenna count.
    """
    rows, crossings = [], []
    for n_b in FIG2_ANTENNAS:
        base = SystemConfig(n_b=n_b, rho_b=db_to_linear(10), T=200, epsilon=1e-9)
        down = optimize_training_length(base)
        for phi in FIG2_PHIS:
            rows.append({
                "phi": phi,
                "n_b": n_b,
                "rate_uplink": rate_uplink(base.replace(phi=phi)).rate,
                "rate_downlink_at_t_tr_star": down.rate_at_optimum,
            })
        exact = phi_star_exact(base)
        crossings.append({
            "n_b": n_b,
            "t_tr_star": down.t_tr_star,
            "phi_star_exact": exact.phi_star,
            "phi_star_approx": phi_star_approx(base).phi_star,
            "outcome": exact.outcome,
        })
    return rows, crossings


FIG2_COLUMNS = ("phi", "n_b", "rate_uplink", "rate_downlink_at_t_tr_star")
FIG2_CROSSING_COLUMNS = ("n_b", "t_tr_star", "phi_star_exact", "phi_star_approx", "outcome")


def fig3_rows() -> List[Row]:
    """phi* (exact and approximate) vs T for several rho_b; n_b=10, eps=1e-5."""
    rows = []
    for db in FIG3_RHO_DB:
        for T in FIG3_BLOCKLENGTHS:
            cfg = SystemConfig(n_b=10, rho_b=db_to_linear(db), T=T, epsilon=1e-5)
            rows.append({
                "T": T,
                "rho_b_db": db,
                "phi_star_exact": phi_star_exact(cfg).phi_star,
                "phi_star_approx": phi_star_approx(cfg).phi_star,
            })
    return rows


FIG3_COLUMNS = ("T", "rho_b_db", "phi_star_exact", "phi_star_approx")


# ---------------------------------------------------------------------------
# Generic sweep


class SweepSpecError(DomainError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple
    fixed: SystemConfig
    outputs: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.axis not in AXES:
            raise SweepSpecError("axis", f"must be one of {', '.join(AXES)}, got {self.axis!r}")
        if not self.values:
            raise SweepSpecError("values", "must not be empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise SweepSpecError("values", "must be strictly increasing")
        if not self.outputs:
            raise SweepSpecError("outputs", "at least one output is required")
        unknown = set(self.outputs) - set(OUTPUTS)
        if unknown:
            raise SweepSpecError("outputs", f"unknown output(s) {sorted(unknown)}")
        for v in self.values:
            try:
                cfg = self.config_at(v)
            except DomainError as exc:
                raise SweepSpecError("values", f"{self.axis}={v} gives an invalid config ({exc})") from None
            if cfg.t_tr is not None and not (cfg.n_b <= cfg.t_tr <= cfg.T):
                raise SweepSpecError("values", f"{self.axis}={v} violates n_b <= t_tr <= T")
            if cfg.t_tr is None and cfg.n_b >= cfg.T and set(self.outputs) - {"rate_uplink"}:
                raise SweepSpecError("values", f"{self.axis}={v} leaves no feasible training length")

    def config_at(self, value) -> SystemConfig:
        if self.axis == "rho_b_db":
            return self.fixed.replace(rho_b=db_to_linear(value))
        if self.axis in ("T", "n_b", "t_tr"):
            if float(value) != int(value):
                raise SweepSpecError("values", f"{self.axis} values must be integers")
            value = int(value)
        return self.fixed.replace(**{self.axis: value})


SWEEP_COLUMNS = ("axis", "axis_value", "output", "value", "std_error")


def _downlink_value(cfg: SystemConfig) -> float:
    if cfg.t_tr is None:
        return optimize_training_length(cfg).rate_at_optimum
    return rate_downlink(cfg).rate


def sweep_output(cfg: SystemConfig, output: str, samples: int, seed: int) -> Row:
    if output == "rate_uplink":
        return {"value": rate_uplink(cfg).rate}
    if output == "rate_downlink":
        return {"value": _downlink_value(cfg)}
    if output == "phi_star_approx":
        return {"value": phi_star_approx(cfg, t_tr=cfg.t_tr).phi_star}
    if output == "phi_star_exact":
        return {"value": phi_star_exact(cfg, t_tr=cfg.t_tr).phi_star}
    if output == "mc_validation":
        checks = validation_checks(cfg, samples, seed)
        return {"value": max(c["z"] for c in checks)}
    raise SweepSpecError("outputs", f"unknown output {output!r}")


def run_sweep(spec: SweepSpec, samples: int = 10**4, seed: int = 1) -> List[Row]:
    rows = []
    for v in spec.values:
        cfg = spec.config_at(v)
        for output in sorted(spec.outputs):
            row: Row = {"axis": spec.axis, "axis_value": v, "output": output}
            row.update(sweep_output(cfg, output, samples, seed))
            rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# Closed-form vs Monte Carlo


def _describe(cfg: SystemConfig) -> str:
    parts = [f"n_b={cfg.n_b}", f"rho_b={cfg.rho_b:g}", f"T={cfg.T}", f"eps={cfg.epsilon:g}"]
    if cfg.t_tr is None:
        parts.append(f"phi={cfg.phi:g}")
    else:
        parts.append(f"t_tr={cfg.t_tr}")
    return " ".join(parts)


def _check(name: str, cfg: SystemConfig, reference: float, est) -> Row:
    z = abs(reference - est.mean) / est.std_error if est.std_error > 0 else (
        0.0 if reference == est.mean else math.inf)
    return {
        "check": name, "config": _describe(cfg), "closed_form": reference,
        "mc_mean": est.mean, "mc_stderr": est.std_error, "z": z, "passed": z <= Z_LIMIT,
    }


def validation_checks(cfg: SystemConfig, samples: int, seed: int) -> List[Row]:
    """Uplink check always; downlink checks when ``cfg.t_tr`` is set."""
    rows = [_check("uplink", cfg.replace(t_tr=None), rate_uplink(cfg).rate,
                   estimate_rate_uplink(cfg, samples, seed))]
    if cfg.t_tr is not None:
        rows.extend(downlink_checks(cfg, samples, seed))
    return rows


def downlink_checks(cfg: SystemConfig, samples: int, seed: int) -> List[Row]:
    reference = rate_downlink(cfg).rate
    stat = estimate_rate_downlink_statistical(cfg, samples, seed)
    pipe = estimate_rate_downlink_pipeline(cfg, samples, seed + 1)
    joint = math.hypot(stat.std_error, pipe.std_error)
    z = abs(stat.mean - pipe.mean) / joint if joint > 0 else 0.0
    return [
        _check("downlink_statistical", cfg, reference, stat),
        _check("downlink_pipeline", cfg, reference, pipe),
        {"check": "downlink_mc_agreement", "config": _describe(cfg), "closed_form": None,
         "mc_mean": stat.mean - pipe.mean, "mc_stderr": joint, "z": z, "passed": z <= Z_LIMIT},
    ]


ACCEPTANCE_GRID = {
    "n_b": (2, 5, 10),
    "phi": (0.3, 0.8, 1.0),
    "rho_b": (1.0, 10.0, 100.0),
    "T": (100, 500),
    "epsilon": (1e-5, 1e-9),
}
QUICK_GRID = {
    "n_b": (2, 5),
    "phi": (0.8,),
    "rho_b": (10.0,),
    "T": (100,),
    "epsilon": (1e-5,),
}


def uplink_grid(grid=ACCEPTANCE_GRID) -> List[SystemConfig]:
    return [SystemConfig(n_b=n, rho_b=r, T=T, epsilon=e, phi=p)
            for n, p, r, T, e in itertools.product(
                grid["n_b"], grid["phi"], grid["rho_b"], grid["T"], grid["epsilon"])]


def downlink_grid(grid=ACCEPTANCE_GRID) -> List[SystemConfig]:
    # phi does not enter the downlink bound, so its axis collapses
    return [SystemConfig(n_b=n, rho_b=r, T=T, epsilon=e, t_tr=k * n)
            for n, r, T, e, k in itertools.product(
                grid["n_b"], grid["rho_b"], grid["T"], grid["epsilon"], (1, 2))]


def run_validation(samples: int = 10**6, seed: int = 1, quick: bool = False) -> List[Row]:
    grid = QUICK_GRID if quick else ACCEPTANCE_GRID
    rows = []
    for cfg in uplink_grid(grid):
        rows.append(_check("uplink", cfg, rate_uplink(cfg).rate, estimate_rate_uplink(cfg, samples, seed)))
    for cfg in downlink_grid(grid):
        rows.extend(downlink_checks(cfg, samples, seed))
    return rows


VALIDATION_COLUMNS = ("check", "config", "closed_form", "mc_mean", "mc_stderr", "z", "passed")
