"""Brute-force integration of the classical moment flows.

Means obey dμ/dt = Mμ and Gaussian covariances dΣ/dt = MΣ + ΣMᵀ, with
M the linear flow of the region's quadratic Hamiltonian over
(x, y, px, py).  Both are integrated with fixed-step classical RK4.

Two momentum frames are available for a magnet.  ``"kinetic"`` is the
Lorentz-force flow of m·velocity.  ``"canonical"`` is the Hamiltonian flow
of the symmetric-gauge canonical momentum, the frame in which the magnet's
closed-form momentum spreads are stated.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, DomainError
from .model import PhysicalParams, RegionSpec
from .propagators import DRIFT_COV_SIGN, region_means, region_moments


def flow_matrix(region: RegionSpec, params: PhysicalParams, frame: str = "kinetic") -> np.ndarray:
    if frame not in ("kinetic", "canonical"):
        raise DomainError(f"frame must be 'kinetic' or 'canonical', got {frame!r}")
    m = params.m
    M = np.zeros((4, 4))
    M[0, 2] = M[1, 3] = 1.0 / m
    if not region.is_magnet:
        return M
    w = region.omega(params)
    if frame == "kinetic":
        M[2, 3] = w
        M[3, 2] = -w
    else:
        M[0, 1] = 0.5 * w
        M[1, 0] = -0.5 * w
        M[2, 3] = 0.5 * w
        M[3, 2] = -0.5 * w
        M[2, 0] = M[3, 1] = -m * w * w / 4.0
    return M


@dataclass(frozen=True)
class OracleSeries:
    times: np.ndarray
    values: np.ndarray
    min_eigenvalue: Optional[np.ndarray] = None


def _steps(duration, dt):
    if not dt > 0:
        raise ConfigError("step size must be > 0")
    if dt > duration / 100.0:
        raise ConfigError(f"step {dt!r} exceeds duration/100 = {duration / 100.0!r}")
    n = math.ceil(duration / dt - 1e-9)
    return n, duration / n


def integrate_means(init, region: RegionSpec, dt: float, params: PhysicalParams,
                    frame: str = "kinetic", t0: float = 0.0) -> OracleSeries:
    M = flow_matrix(region, params, frame)
    n, h = _steps(region.duration, dt)
    mu = np.array(init, dtype=float)
    out = np.empty((n + 1, 4))
    out[0] = mu
    for k in range(n):
        k1 = M @ mu
        k2 = M @ (mu + 0.5 * h * k1)
        k3 = M @ (mu + 0.5 * h * k2)
        k4 = M @ (mu + h * k3)
        mu = mu + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = mu
    return OracleSeries(t0 + h * np.arange(n + 1), out)


def integrate_covariance(sigma0, region: RegionSpec, dt: float, params: PhysicalParams,
                         frame: str = "kinetic", t0: float = 0.0) -> OracleSeries:
    S = np.array(sigma0, dtype=float)
    if S.shape != (4, 4):
        raise DomainError("sigma0 must be 4x4")
    scale = max(1.0, float(np.abs(S).max()))
    if not np.allclose(S, S.T, rtol=0, atol=1e-12 * scale):
        raise DomainError("sigma0 must be symmetric")
    S = 0.5 * (S + S.T)
    if np.linalg.eigvalsh(S).min() < -1e-10 * scale:
        raise DomainError("sigma0 must be positive semidefinite")
    M = flow_matrix(region, params, frame)
    n, h = _steps(region.duration, dt)

    def rhs(X):
        MX = M @ X
        return MX + MX.T

    out = np.empty((n + 1, 4, 4))
    mins = np.empty(n + 1)
    out[0] = S
    mins[0] = np.linalg.eigvalsh(S).min()
    for k in range(n):
        k1 = rhs(S)
        k2 = rhs(S + 0.5 * h * k1)
        k3 = rhs(S + 0.5 * h * k2)
        k4 = rhs(S + h * k3)
        S = S + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        S = 0.5 * (S + S.T)
        out[k + 1] = S
        mins[k + 1] = np.linalg.eigvalsh(S).min()
    return OracleSeries(t0 + h * np.arange(n + 1), out, mins)


def per_axis(sigma):
    """(var_x, var_y, var_px, var_py, cov_xpx, cov_ypy) from (…, 4, 4) arrays."""
    s = np.asarray(sigma)
    return np.stack(
        [s[..., 0, 0], s[..., 1, 1], s[..., 2, 2], s[..., 3, 3], s[..., 0, 2], s[..., 1, 3]], axis=-1
    )


def lattice_means(run, dt: float) -> OracleSeries:
    """Integrate the kinetic means straight through every region of ``run``.

    Only the initial means come from the closed form; interfaces are
    crossed without any reset.
    """
    mu = np.array(run.samples[0].state.means, dtype=float)
    times, values = [], []
    for k, region in enumerate(run.lattice.regions):
        series = integrate_means(mu, region, dt, run.params, "kinetic", run.lattice.entry_times[k])
        times.append(series.times if k == 0 else series.times[1:])
        values.append(series.values if k == 0 else series.values[1:])
        mu = series.values[-1]
    return OracleSeries(np.concatenate(times), np.concatenate(values))


def compare_means(run, dt: float = 1e-3) -> float:
    """Max |oracle − closed form| over all RK4 nodes of the lattice."""
    err = 0.0
    mu = np.array(run.samples[0].state.means, dtype=float)
    for k, region in enumerate(run.lattice.regions):
        t0 = run.lattice.entry_times[k]
        series = integrate_means(mu, region, dt, run.params, "kinetic", t0)
        ts = np.clip(series.times, t0, run.lattice.exit_time(k))
        closed = np.stack(region_means(run.region_state(k), ts), axis=-1)
        err = max(err, float(np.abs(series.values - closed).max()))
        mu = series.values[-1]
    return err


def compare_moments(run, dt: float = 1e-3, grid_n: int = 256, half_width: float = 8.0):
    """Covariance-flow oracle seeded with grid-extracted full covariances.

    Magnets are seeded at their own entry; drifts at the exit of the
    preceding magnet.  Canonical symmetric-gauge momenta are used in
    magnets.  Returns a dict of max errors, including the drift covariance
    error against the formula sign and against the opposite sign.
    """
    from .wavefunction import covering_grid, eval_psi, grid_moments

    params = run.params
    out = dict(magnet_max_error=0.0, drift_var_max_error=0.0,
               drift_cov_error_formula_sign=0.0, drift_cov_error_opposite_sign=0.0,
               magnet_max_drift_from_initial=0.0, liouville_max_rel=0.0)
    regions = run.lattice.regions
    for k, region in enumerate(regions):
        t0, t1 = run.lattice.entry_times[k], run.lattice.exit_time(k)
        if region.is_magnet:
            seed_cs, seed_t = run.states[k], t0
        elif k > 0 and regions[k - 1].is_magnet:
            seed_cs, seed_t = run.states[k - 1], t0
        else:
            continue
        grid = covering_grid(seed_cs, seed_t, params, half_width, grid_n)
        ms = grid_moments(eval_psi(grid, seed_cs, seed_t, params), params, momentum="canonical")
        series = integrate_covariance(ms.full_cov, region, dt, params, "canonical", t0)
        proj = per_axis(series.values)
        ts = np.clip(series.times, t0, t1)
        closed = np.stack(
            [np.broadcast_to(v, ts.shape) for v in region_moments(run.region_state(k), ts)], axis=-1
        )
        dets = np.linalg.det(series.values)
        out["liouville_max_rel"] = max(out["liouville_max_rel"], float(np.abs(dets / dets[0] - 1).max()))
        if region.is_magnet:
            out["magnet_max_error"] = max(out["magnet_max_error"], float(np.abs(proj - closed).max()))
            out["magnet_max_drift_from_initial"] = max(
                out["magnet_max_drift_from_initial"], float(np.abs(proj - proj[0]).max())
            )
        else:
            out["drift_var_max_error"] = max(out["drift_var_max_error"], float(np.abs(proj[:, :4] - closed[:, :4]).max()))
            out["drift_cov_error_formula_sign"] = max(
                out["drift_cov_error_formula_sign"], float(np.abs(proj[:, 4:] - closed[:, 4:]).max())
            )
            out["drift_cov_error_opposite_sign"] = max(
                out["drift_cov_error_opposite_sign"], float(np.abs(proj[:, 4:] + closed[:, 4:]).max())
            )
    same = out["drift_cov_error_formula_sign"]
    opposite = out["drift_cov_error_opposite_sign"]
    out["oracle_cov_sign_vs_formula"] = 1.0 if same <= opposite else -1.0
    out["oracle_cov_sign"] = DRIFT_COV_SIGN * out["oracle_cov_sign_vs_formula"]
    return out


def comparison_report(run, dt: float = 1e-3, grid_n: int = 256) -> dict:
    report = {"dt": dt, "means_max_error": compare_means(run, dt)}
    report.update(compare_moments(run, dt, grid_n))
    return report


def write_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
