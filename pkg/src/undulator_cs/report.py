"""Verification summary and file output (trajectory CSV, summary JSON)."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from .propagators import DRIFT_COV_SIGN
from .uncertainty import heisenberg_product, schrodinger_functional

TRAJECTORY_COLUMNS = (
    "t", "region_index", "region_kind",
    "mean_x", "mean_y", "mean_px", "mean_py",
    "var_x", "var_y", "var_px", "var_py", "cov_xpx", "cov_ypy",
    "heis_x", "schr_x", "heis_y", "schr_y",
)


@dataclass(frozen=True)
class Check:
    """A measured value against a tolerance.

    ``kind="max"`` passes when value ≤ tolerance, ``"min"`` when
    value ≥ tolerance.
    """

    value: float
    tolerance: float
    kind: str = "max"

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.value):
            return False
        if self.kind == "min":
            return bool(self.value >= self.tolerance)
        return bool(self.value <= self.tolerance)

    def to_dict(self) -> dict:
        return {"value": float(self.value), "tolerance": float(self.tolerance), "kind": self.kind, "pass": self.passed}


@dataclass
class SummaryReport:
    lattice: dict
    checks: Dict[str, Dict[str, Check]] = field(default_factory=dict)
    info: Dict[str, dict] = field(default_factory=dict)

    def add(self, section: str, name: str, check: Check) -> None:
        self.checks.setdefault(section, {})[name] = check

    @property
    def failures(self):
        return [f"{s}.{n}" for s, sec in sorted(self.checks.items()) for n, c in sorted(sec.items()) if not c.passed]

    @property
    def overall(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "overall": self.overall,
            "failures": self.failures,
            "lattice": self.lattice,
            "checks": {s: {n: c.to_dict() for n, c in sec.items()} for s, sec in self.checks.items()},
            "info": self.info,
        }


def lattice_metadata(run, cfg=None) -> dict:
    lat = run.lattice
    regions = [
        {
            "index": k,
            "kind": r.kind.value,
            "duration": r.duration,
            "t_entry": lat.entry_times[k],
            "field_sign": r.sign if r.is_magnet else 0,
            "duration_source": "exit-angle condition" if r.duration_fixed else "lattice recipe extension",
        }
        for k, r in enumerate(lat.regions)
    ]
    meta = {
        "regions": regions,
        "omega": lat.regions[0].omega(run.params),
        "t1": lat.regions[0].duration,
        "C1": run.C1,
        "C1_fixed": run.C1_fixed,
        "alpha_I": run.alpha_I,
        "beta_I": 0.0,
        "y0": run.y0,
        "end_time": lat.end_time,
    }
    if cfg is not None:
        meta["n_periods"] = cfg.n_periods
    return meta


def continuity_checks(report: SummaryReport, run, tol: float) -> None:
    ifs = run.interfaces
    mean_jump = max((i.mean_jump for i in ifs), default=0.0)
    moment_jump = max((i.moment_jump for i in ifs), default=0.0)
    report.add("continuity", "mean_continuity", Check(mean_jump, tol))
    report.add("continuity", "second_moment_continuity", Check(moment_jump, tol))
    if run.first_stitch is not None:
        st = run.first_stitch
        report.add("continuity", "stitch_residual", Check(max(abs(v) for v in st.residuals), tol))
        report.add("continuity", "stitch_compatibility", Check(max(st.compat_defect), tol))
        report.info["stitch"] = {
            "alpha_next": [st.alpha_next.real, st.alpha_next.imag],
            "beta_next": [st.beta_next.real, st.beta_next.imag],
            "reference_boundary_defect": list(st.reference_boundary_defect),
            "reference_compat_defect": list(st.reference_compat_defect),
        }
    report.info["interfaces"] = [
        {
            "index": i.index,
            "t": i.t,
            "kind": i.kind,
            "mean_jump": i.mean_jump,
            "moment_jump": i.moment_jump,
            "moment_jumps": dict(zip(("var_x", "var_y", "var_px", "var_py", "cov_xpx", "cov_ypy"), i.moment_jumps)),
        }
        for i in ifs
    ]


def uncertainty_checks(report: SummaryReport, run, tol: float) -> None:
    bound = run.params.hbar**2 / 4.0
    ranges = {}
    for axis in ("x", "y"):
        schr = np.array([schrodinger_functional(s.state, axis) for s in run.samples])
        heis = np.array([heisenberg_product(s.state, axis) for s in run.samples])
        if schr.size == 0:
            continue
        report.add("uncertainty", f"schrodinger_minimization_{axis}", Check(float(np.abs(schr - bound).max()), tol))
        report.add("uncertainty", f"heisenberg_bound_{axis}", Check(float(max(0.0, bound - heis.min())), tol))
        ranges[axis] = {
            "schrodinger_min": float(schr.min()),
            "schrodinger_max": float(schr.max()),
            "heisenberg_min": float(heis.min()),
            "heisenberg_max": float(heis.max()),
        }
    report.info["uncertainty"] = {"bound": bound, "axes": ranges}


def oracle_checks(report: SummaryReport, run, cfg) -> None:
    from .oracle import comparison_report

    res = comparison_report(run, cfg.oracle_dt, cfg.grid_points)
    tol = cfg.tolerances.oracle
    report.add("oracle", "means_max_error", Check(res["means_max_error"], tol))
    report.add("oracle", "magnet_moment_max_error", Check(res["magnet_max_error"], tol))
    report.add("oracle", "magnet_moment_constancy", Check(res["magnet_max_drift_from_initial"], tol))
    report.add("oracle", "drift_var_max_error", Check(res["drift_var_max_error"], tol))
    report.add(
        "oracle",
        "drift_cov_magnitude_max_error",
        Check(min(res["drift_cov_error_formula_sign"], res["drift_cov_error_opposite_sign"]), tol),
    )
    report.add("oracle", "liouville_det_rel", Check(res["liouville_max_rel"], tol))
    report.info["oracle"] = {
        "dt": cfg.oracle_dt,
        "formula_cov_sign": DRIFT_COV_SIGN,
        "oracle_cov_sign": res["oracle_cov_sign"],
        "drift_cov_error_formula_sign": res["drift_cov_error_formula_sign"],
        "drift_cov_error_opposite_sign": res["drift_cov_error_opposite_sign"],
    }


def grid_checks(report: SummaryReport, run, cfg) -> None:
    from .propagators import region_means, region_moments
    from .wavefunction import covering_grid, eigen_residual, eval_psi, grid_moments, normalization

    tol = cfg.tolerances
    params = run.params
    norm_err = resid = mean_err = moment_err = 0.0
    min_eig = math.inf
    cov_signs = []
    for k, region in enumerate(run.lattice.regions):
        rs = run.region_state(k)
        t = run.lattice.entry_times[k] + 0.5 * region.duration
        grid = covering_grid(rs.cs, t, params, cfg.grid_half_width, cfg.grid_points)
        psi = eval_psi(grid, rs.cs, t, params)
        norm_err = max(norm_err, abs(normalization(psi) - 1.0))
        for which in ("A", "B"):
            resid = max(resid, eigen_residual(psi, which, rs.cs, params))
        kin = grid_moments(psi, params, momentum="kinetic")
        can = grid_moments(psi, params, momentum="canonical")
        mean_err = max(mean_err, float(np.abs(np.subtract(kin.means, region_means(rs, t))).max()))
        closed = region_moments(rs, t)
        got = can.second_moments
        moment_err = max(moment_err, max(abs(g - c) for g, c in zip(got[:4], closed[:4])))
        moment_err = max(moment_err, max(abs(abs(g) - abs(c)) for g, c in zip(got[4:], closed[4:])))
        if not region.is_magnet and abs(closed[4]) > 0:
            cov_signs.append(float(np.sign(got[4] * closed[4])))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(can.full_cov).min()))
    report.add("grid", "normalization_error", Check(norm_err, tol.grid_norm))
    report.add("grid", "eigen_residual", Check(resid, tol.grid_residual))
    report.add("grid", "mean_error", Check(mean_err, tol.grid_moment))
    report.add("grid", "second_moment_error", Check(moment_err, tol.grid_moment))
    report.add("grid", "covariance_psd", Check(min_eig, -1e-10, kind="min"))
    report.info["grid"] = {
        "points": cfg.grid_points,
        "half_width": cfg.grid_half_width,
        "sample": "region midpoints",
        "drift_cov_sign_vs_formula": min(cov_signs) if cov_signs else None,
    }


def build_report(run, cfg, grid: bool = None, oracle: bool = None) -> SummaryReport:
    grid = cfg.grid_check if grid is None else grid
    oracle = cfg.oracle_check if oracle is None else oracle
    report = SummaryReport(lattice_metadata(run, cfg))
    continuity_checks(report, run, cfg.tolerances.interface)
    uncertainty_checks(report, run, cfg.tolerances.uncertainty)
    if oracle:
        oracle_checks(report, run, cfg)
    if grid:
        grid_checks(report, run, cfg)
    return report


def emit_summary_json(report: SummaryReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def emit_trajectory_csv(run, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for s in sorted(run.samples, key=lambda s: s.state.t):
            ms = s.state
            nums = (
                *ms.means, *ms.second_moments,
                heisenberg_product(ms, "x"), schrodinger_functional(ms, "x"),
                heisenberg_product(ms, "y"), schrodinger_functional(ms, "y"),
            )
            w.writerow([repr(float(ms.t)), s.region_index, s.region_kind, *(repr(float(v)) for v in nums)])
