"""Closed-form means and second moments inside a single region.

Magnet (signed frequency ω, local time τ = t − t_entry)::

    x̄ = X₀ + r sin(ωτ − φ_α + φ₀),   ȳ = Y₀ + r cos(ωτ − φ_α + φ₀)
    X₀ = 2√e Re β,  Y₀ = −2√e Im β,  r = 2|α|√e

with kinetic momenta m·dx̄/dτ, m·dȳ/dτ.  Second moments are constant:
var(x) = ħ/(m|ω|), var(p) = m|ω|ħ/4, cov = 0.

Drift (eigenvalues α, β of the drift invariants, s = √(eħ))::

    x̄(τ) = s(Re β − Im α)/(mC₁) + p̄x τ/m,   p̄x = (mC₁/s)(Re α + Im β)
    ȳ(τ) = s(Re α − Im β)/(mC₁) + p̄y τ/m,   p̄y = (mC₁/s)(Re β + Im α)

    var(x) = ħ[e/(2m²C₁²) + C₁²τ²/(2e)],  var(p) = ħ m²C₁²/(2e),
    cov(x, px) = −ħ (mC₁²/2e) τ        (sign convention: DRIFT_COV_SIGN)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .model import (
    CoherentStateParams,
    DriftEpsilon,
    MagnetEpsilon,
    MomentState,
    PhysicalParams,
    RegionSpec,
)

# Sign convention of the drift x–px covariance formula. Forward free evolution
# of the same Gaussian gives the opposite sign; the oracle reports which one
# it sees.
DRIFT_COV_SIGN = -1.0

# relative slack when checking that t lies inside a region
_TIME_SLACK = 1e-12


class Means(NamedTuple):
    x: float
    y: float
    px: float
    py: float


class SecondMoments(NamedTuple):
    var_x: float
    var_y: float
    var_px: float
    var_py: float
    cov_xpx: float
    cov_ypy: float


@dataclass(frozen=True)
class RegionState:
    cs: CoherentStateParams
    region: RegionSpec
    params: PhysicalParams

    def __post_init__(self):
        if self.region.is_magnet != isinstance(self.cs.epsilon, MagnetEpsilon):
            raise DomainError(
                f"epsilon descriptor {type(self.cs.epsilon).__name__} does not match "
                f"region kind {self.region.kind.value}"
            )

    @property
    def t_exit(self) -> float:
        return self.cs.t_entry + self.region.duration

    def local_time(self, t):
        """τ = t − t_entry after checking that t lies inside the region."""
        t = np.asarray(t, dtype=float)
        tau = t - self.cs.t_entry
        slack = _TIME_SLACK * max(1.0, abs(self.cs.t_entry) + self.region.duration)
        if np.any(tau < -slack) or np.any(tau > self.region.duration + slack):
            raise DomainError(
                f"t={t!r} outside region {self.region.index} "
                f"[{self.cs.t_entry!r}, {self.t_exit!r}]"
            )
        return tau[()]


def magnet_means_local(cs: CoherentStateParams, params: PhysicalParams, tau) -> Means:
    """Magnet means at local time ``tau`` without a region bound check."""
    omega = cs.epsilon.omega
    scale = 2.0 * math.sqrt(params.e)
    X0 = scale * cs.beta.real
    Y0 = -scale * cs.beta.imag
    r = scale * abs(cs.alpha)
    phi = omega * np.asarray(tau) - np.angle(cs.alpha) + cs.phase0
    s, c = np.sin(phi)[()], np.cos(phi)[()]
    return Means(X0 + r * s, Y0 + r * c, params.m * r * omega * c, -params.m * r * omega * s)


def mean_magnet(rs: RegionState, t) -> Means:
    if not rs.region.is_magnet:
        raise DomainError("mean_magnet requires a magnet region")
    return magnet_means_local(rs.cs, rs.params, rs.local_time(t))


def orbit_circle(rs: RegionState):
    """Center (X₀, Y₀) and radius r of the magnet's mean circle."""
    scale = 2.0 * math.sqrt(rs.params.e)
    return scale * rs.cs.beta.real, -scale * rs.cs.beta.imag, scale * abs(rs.cs.alpha)


def moments_magnet(rs: RegionState) -> SecondMoments:
    if not rs.region.is_magnet:
        raise DomainError("moments_magnet requires a magnet region")
    p = rs.params
    w = abs(rs.cs.epsilon.omega)
    if w == 0:
        raise DomainError("zero cyclotron frequency: use the drift formulas")
    vq = p.hbar / (p.m * w)
    vp = p.m * w * p.hbar / 4.0
    return SecondMoments(vq, vq, vp, vp, 0.0, 0.0)


def drift_entry_means(cs: CoherentStateParams, params: PhysicalParams) -> Means:
    """Drift means at τ = 0 from the invariant eigenvalues."""
    C1 = cs.epsilon.C1
    m = params.m
    s = math.sqrt(params.e * params.hbar)
    a, b = cs.alpha.real, cs.alpha.imag
    c, d = cs.beta.real, cs.beta.imag
    return Means(
        s * (c - b) / (m * C1),
        s * (a - d) / (m * C1),
        m * C1 * (a + d) / s,
        m * C1 * (b + c) / s,
    )


def drift_means_local(cs: CoherentStateParams, params: PhysicalParams, tau) -> Means:
    """Drift means at local time ``tau`` without a region bound check."""
    x0, y0, px, py = drift_entry_means(cs, params)
    m = params.m
    tau = np.asarray(tau, dtype=float)
    ones = np.ones_like(tau)
    return Means(
        (x0 + px * tau / m)[()], (y0 + py * tau / m)[()], (px * ones)[()], (py * ones)[()]
    )


def mean_drift(rs: RegionState, t) -> Means:
    if rs.region.is_magnet:
        raise DomainError("mean_drift requires a drift region")
    return drift_means_local(rs.cs, rs.params, rs.local_time(t))


def drift_moments_local(cs: CoherentStateParams, params: PhysicalParams, tau) -> SecondMoments:
    p = params
    C1 = cs.epsilon.C1
    tau = np.asarray(tau, dtype=float)
    vq = p.hbar * (p.e / (2 * p.m**2 * C1**2) + C1**2 * tau**2 / (2 * p.e))
    vp = p.hbar * p.m**2 * C1**2 / (2 * p.e) * np.ones_like(tau)
    cov = DRIFT_COV_SIGN * p.hbar * p.m * C1**2 * tau / (2 * p.e)
    return SecondMoments(vq[()], vq[()], vp[()], vp[()], cov[()], cov[()])


def moments_drift(rs: RegionState, t) -> SecondMoments:
    if rs.region.is_magnet:
        raise DomainError("moments_drift requires a drift region")
    # t1 of the spreading law is the region entry time
    tau = np.maximum(rs.local_time(t), 0.0)
    return drift_moments_local(rs.cs, rs.params, tau)


def region_means(rs: RegionState, t) -> Means:
    return mean_magnet(rs, t) if rs.region.is_magnet else mean_drift(rs, t)


def region_moments(rs: RegionState, t) -> SecondMoments:
    if rs.region.is_magnet:
        rs.local_time(t)
        return moments_magnet(rs)
    return moments_drift(rs, t)


def sample(rs: RegionState, t: float) -> MomentState:
    """Means and second moments of the region's state at a single time."""
    mu = region_means(rs, t)
    sm = region_moments(rs, t)
    return MomentState(
        float(t), *(float(v) for v in mu), *(float(v) for v in sm)
    )
