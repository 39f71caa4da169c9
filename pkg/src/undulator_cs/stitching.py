"""Boundary matching between regions and propagation through the lattice.

At a magnet→drift boundary the drift eigenvalues (α″, β″) are fixed by
requiring continuity of the four means (x̄, ȳ, p̄x, p̄y), with kinetic
momenta.  In the drift's local time this is a linear 4×4 system in
(Re α″, Im α″, Re β″, Im β″).  At a drift→magnet boundary the circle of the
next magnet is fitted to the incoming position and velocity.

The drift constant C₁ is fixed at √(e|ω|/2m), the one value for which the
drift's position and momentum spreads at entry equal the magnet's.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np

from .errors import ConfigError, DomainError, StitchError
from .model import (
    CoherentStateParams,
    DriftEpsilon,
    LatticePlan,
    MagnetEpsilon,
    MomentState,
    PhysicalParams,
    RegionKind,
    RegionSpec,
    build_lattice,
    cyclotron_frequency,
)
from .propagators import (
    Means,
    RegionState,
    drift_entry_means,
    mean_magnet,
    region_means,
    sample,
)

EXIT_ANGLE = math.acos(0.5)


def magnet_exit_time(omega: float) -> float:
    """t₁ = arccos(1/2)/|ω|, when the first magnet's ȳ has fallen to y₀/2."""
    if not (math.isfinite(omega) and omega != 0):
        raise DomainError("magnet frequency must be finite and nonzero")
    return EXIT_ANGLE / abs(omega)


def fix_C1(params: PhysicalParams, omega: float) -> float:
    if not (math.isfinite(omega) and omega != 0):
        raise DomainError("magnet frequency must be finite and nonzero")
    return math.sqrt(params.e * abs(omega) / (2.0 * params.m))


def drift_entry_matrix(params: PhysicalParams, C1: float) -> np.ndarray:
    """Map (Re α″, Im α″, Re β″, Im β″) to the drift means at entry."""
    if not C1 > 0:
        raise DomainError(f"C1 must be > 0, got {C1!r}")
    s = math.sqrt(params.e * params.hbar)
    k = s / (params.m * C1)
    q = params.m * C1 / s
    return np.array(
        [
            [0.0, -k, k, 0.0],
            [k, 0.0, 0.0, -k],
            [q, 0.0, 0.0, q],
            [0.0, q, q, 0.0],
        ]
    )


def solve_drift_entry(means, params: PhysicalParams, C1: float):
    """Drift eigenvalues reproducing ``means`` at entry, and the residuals."""
    M = drift_entry_matrix(params, C1)
    rhs = np.asarray(means, dtype=float)
    try:
        a, b, c, d = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise StitchError(f"singular drift entry system for C1={C1!r}") from exc
    alpha, beta = complex(a, b), complex(c, d)
    probe = CoherentStateParams(alpha, beta, DriftEpsilon(C1))
    residuals = tuple(float(v) for v in np.asarray(drift_entry_means(probe, params)) - rhs)
    return alpha, beta, residuals


class CompatDefect(NamedTuple):
    position: float
    momentum: float


@dataclass(frozen=True)
class StitchSolution:
    alpha_next: complex
    beta_next: complex
    residuals: tuple
    compat_defect: CompatDefect
    reference_boundary_defect: tuple = ()
    reference_compat_defect: tuple = ()


def _first_magnet_state(alpha_I: complex, params: PhysicalParams, omega: float) -> RegionState:
    H = abs(omega) * params.m / params.e
    region = RegionSpec(
        RegionKind.MAGNET,
        magnet_exit_time(omega),
        H=H,
        sign=1 if omega > 0 else -1,
        duration_fixed=True,
    )
    cs = CoherentStateParams(alpha_I, 0.0, MagnetEpsilon(omega, H))
    return RegionState(cs, region, params)


def first_magnet_exit(alpha_I: complex, params: PhysicalParams, omega: float) -> Means:
    """Means of the β = 0 entry magnet at t₁."""
    rs = _first_magnet_state(alpha_I, params, omega)
    return mean_magnet(rs, rs.t_exit)


def _alpha_estimates(alpha, beta, params, omega, C1):
    # each continuity row solved for α^I, with the exit angle π/3
    a, b = alpha.real, alpha.imag
    c, d = beta.real, beta.imag
    s = math.sqrt(params.e * params.hbar)
    se = math.sqrt(params.e)
    m = params.m
    sin_t, cos_t = math.sin(EXIT_ANGLE), math.cos(EXIT_ANGLE)
    from_x = s * (c - b) / (2 * se * m * C1 * sin_t)
    from_y = s * (a - d) / (2 * se * m * C1 * cos_t)
    from_px = C1 * (a + d) / (2 * s * se * omega * cos_t)
    from_py = -C1 * (b + c) / (2 * s * se * omega * sin_t)
    return from_x, from_y, from_px, from_py


def verify_compatibility(sol, params: PhysicalParams, omega: float, C1: float) -> CompatDefect:
    """Defects of the two relations left after eliminating α^I.

    The position rows and the momentum rows each determine α^I; a consistent
    solution gives the same value from both rows of each pair.
    """
    fx, fy, fpx, fpy = _alpha_estimates(sol.alpha_next, sol.beta_next, params, omega, C1)
    return CompatDefect(abs(fx - fy), abs(fpx - fpy))


def reference_boundary_defects(alpha_I, alpha, beta, params, omega, C1):
    """The four boundary relations in their reference coefficient form.

    Reported only: they evaluate the drift at absolute time t₁ and carry
    1/t terms in the drift means, so they do not vanish on the physically
    matched solution.
    """
    a, b = alpha.real, alpha.imag
    c, d = beta.real, beta.imag
    e, m = params.e, params.m
    th = EXIT_ANGLE
    A = float(np.real(alpha_I))
    return (
        2 * A * math.sin(th) - (c - b + m * C1**2 / (e * omega) * (a + d) * th) / (m * C1),
        A - (a - d - e * omega / (m * C1) * (c + b) / th) / (m * C1),
        omega * A / math.sqrt(2) - C1 / math.sqrt(e) * (a - d),
        A * math.sin(th) + (c + b) / (C1 * th),
    )


def reference_compat_defects(alpha, beta, params, omega, C1):
    a, b = alpha.real, alpha.imag
    c, d = beta.real, beta.imag
    e, m = params.e, params.m
    s3 = math.sin(math.pi / 3)
    lhs1 = s3 / (2 * m * C1) * (c - b + math.pi * m * C1**2 / (3 * e * omega) * (a + d))
    rhs1 = (a - d - 3 * e * omega / (math.pi * m * C1) * (c + b)) / (m * C1)
    lhs2 = C1 * math.sqrt(2) / (omega * math.sqrt(e)) * (a - d)
    rhs2 = -3 * (c + b) / (math.pi * C1 * s3)
    return (lhs1 - rhs1, lhs2 - rhs2)


def stitch_magnet_to_drift(alpha_I: complex, params: PhysicalParams, omega: float, C1: float) -> StitchSolution:
    """Drift eigenvalues continuing the entry magnet (β^I = 0) at t₁."""
    if not C1 > 0:
        raise DomainError(f"C1 must be > 0, got {C1!r}")
    exit_means = first_magnet_exit(alpha_I, params, omega)
    alpha, beta, residuals = solve_drift_entry(exit_means, params, C1)
    probe = StitchSolution(alpha, beta, residuals, CompatDefect(0.0, 0.0))
    return StitchSolution(
        alpha,
        beta,
        residuals,
        verify_compatibility(probe, params, omega, C1),
        reference_boundary_defects(alpha_I, alpha, beta, params, omega, C1),
        reference_compat_defects(alpha, beta, params, omega, C1),
    )


def stitch_drift_to_magnet(
    exit_means,
    params: PhysicalParams,
    omega_next: float,
    H: Optional[float] = None,
    t_entry: float = 0.0,
) -> CoherentStateParams:
    """Magnet parameters whose mean circle passes through ``exit_means``.

    Returns α real and non-negative, with the orbit phase at entry stored in
    ``phase0``.
    """
    if not (math.isfinite(omega_next) and omega_next != 0):
        raise DomainError("magnet frequency must be finite and nonzero")
    if H is None:
        H = abs(omega_next) * params.m / params.e
    x, y, px, py = (float(v) for v in exit_means)
    m = params.m
    speed = math.hypot(px, py) / m
    r = speed / abs(omega_next)
    if r > 0:
        phase = math.atan2(-py / omega_next, px / omega_next)
    else:
        phase = 0.0
    X0 = x - r * math.sin(phase)
    Y0 = y - r * math.cos(phase)
    scale = 2.0 * math.sqrt(params.e)
    return CoherentStateParams(
        alpha=r / scale,
        beta=complex(X0, -Y0) / scale,
        epsilon=MagnetEpsilon(omega_next, H),
        t_entry=t_entry,
        phase0=phase,
    )


@dataclass(frozen=True)
class Interface:
    index: int
    t: float
    kind: str
    left: MomentState
    right: MomentState

    @property
    def mean_jump(self) -> float:
        return float(np.max(np.abs(np.subtract(self.right.means, self.left.means))))

    @property
    def moment_jumps(self) -> tuple:
        return tuple(float(r - l) for l, r in zip(self.left.second_moments, self.right.second_moments))

    @property
    def moment_jump(self) -> float:
        return max(abs(j) for j in self.moment_jumps)


@dataclass(frozen=True)
class Sample:
    region_index: int
    region_kind: str
    state: MomentState


@dataclass
class PropagationRun:
    params: PhysicalParams
    lattice: LatticePlan
    states: List[CoherentStateParams]
    samples: List[Sample]
    interfaces: List[Interface]
    C1: float
    C1_fixed: float
    alpha_I: float
    first_stitch: Optional[StitchSolution] = None

    def region_state(self, k: int) -> RegionState:
        return RegionState(self.states[k], self.lattice.regions[k], self.params)

    @property
    def y0(self) -> float:
        return 2.0 * abs(self.alpha_I) * math.sqrt(self.params.e)


def propagate(
    params: PhysicalParams,
    lattice: LatticePlan,
    alpha_I: float,
    C1: float,
    samples_per_region: int = 50,
) -> PropagationRun:
    """Stitch every interface of ``lattice`` and sample each region."""
    if int(samples_per_region) != samples_per_region or samples_per_region < 2:
        raise ConfigError("samples_per_region must be an integer >= 2")
    regions = lattice.regions
    if not regions or not regions[0].is_magnet:
        raise ConfigError("the lattice must start with a magnet")
    omega1 = regions[0].omega(params)
    C1_fixed = fix_C1(params, omega1)

    states = [CoherentStateParams(alpha_I, 0.0, MagnetEpsilon(omega1, regions[0].H), lattice.entry_times[0])]
    interfaces = []
    first_stitch = None
    for k in range(len(regions) - 1):
        rs = RegionState(states[k], regions[k], params)
        t_b = lattice.entry_times[k + 1]
        exit_means = region_means(rs, t_b)
        nxt = regions[k + 1]
        if nxt.is_magnet:
            cs = stitch_drift_to_magnet(exit_means, params, nxt.omega(params), nxt.H, t_b)
        else:
            alpha, beta, _ = solve_drift_entry(exit_means, params, C1)
            cs = CoherentStateParams(alpha, beta, DriftEpsilon(C1), t_b)
            if k == 0:
                first_stitch = stitch_magnet_to_drift(alpha_I, params, omega1, C1)
        states.append(cs)
        right = RegionState(cs, nxt, params)
        interfaces.append(
            Interface(
                k + 1,
                t_b,
                f"{regions[k].kind.value}->{nxt.kind.value}",
                sample(rs, t_b),
                sample(right, t_b),
            )
        )

    samples = []
    n = int(samples_per_region)
    for k, region in enumerate(regions):
        rs = RegionState(states[k], region, params)
        t0, t_end = lattice.entry_times[k], lattice.exit_time(k)
        last = k == len(regions) - 1
        ts = np.linspace(t0, t_end, n + 1)
        if not last:
            ts = ts[:-1]
        for t in ts:
            samples.append(Sample(k, region.kind.value, sample(rs, float(t))))

    return PropagationRun(
        params, lattice, states, samples, interfaces, C1, C1_fixed, float(np.real(alpha_I)), first_stitch
    )


def build_and_propagate(config) -> PropagationRun:
    """Build the lattice described by ``config`` and propagate through it.

    ``config`` needs ``params, H, alpha_I, n_periods, drift_duration,
    samples_per_region`` and optionally ``C1_scale`` (1.0 unless a
    deliberately inconsistent C₁ is wanted).
    """
    alpha_I = config.alpha_I
    if not (isinstance(alpha_I, (int, float)) and alpha_I > 0):
        raise ConfigError(f"alpha_I must be real and > 0 (α^I > 0), got {alpha_I!r}")
    if int(config.n_periods) != config.n_periods or config.n_periods < 1:
        raise ConfigError(f"periods must be an integer >= 1, got {config.n_periods!r}")
    params = config.params
    lattice = build_lattice(params, config.H, config.n_periods, config.drift_duration)
    omega1 = cyclotron_frequency(params, config.H, 1)
    C1 = fix_C1(params, omega1) * getattr(config, "C1_scale", 1.0)
    return propagate(params, lattice, float(alpha_I), C1, config.samples_per_region)


def mean_y_extrema(run: PropagationRun):
    """Interior turning points of ȳ, as (t, ȳ) pairs.

    Inside a magnet ȳ is stationary where the orbit phase is a multiple of
    π; drifts are straight lines and have no interior extrema.
    """
    out = []
    for k, region in enumerate(run.lattice.regions):
        if not region.is_magnet:
            continue
        rs = run.region_state(k)
        cs = rs.cs
        omega = cs.epsilon.omega
        phi0 = cs.phase0 - np.angle(cs.alpha)
        phi1 = phi0 + omega * region.duration
        lo, hi = sorted((phi0, phi1))
        for j in range(math.ceil(lo / math.pi), math.floor(hi / math.pi) + 1):
            tau = (j * math.pi - phi0) / omega
            if 0 < tau < region.duration:
                t = cs.t_entry + tau
                out.append((t, float(mean_magnet(rs, t).y)))
    return out
