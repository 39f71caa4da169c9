"""Physical parameters, lattice description and the classical ε(t) solutions.

Units are natural (ħ = c = 1) unless ``hbar`` is set explicitly.  The charge
``e`` is a positive magnitude; the field direction of a magnet is carried by
its ``sign``.  All records are frozen dataclasses.

Two classical solutions parameterize the linear invariants:

* magnet:  ε(τ) = √(2/H) · exp(i|ω|τ/2)
* drift:   ε(τ) = i·C₁·τ + e/(m·C₁)

with τ measured from the region entry.  Both are normalized so that the
Wronskian ε̇ε* − ε̇*ε equals 2ie/m.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, DomainError, OverflowBoundError

DEFAULT_OVERFLOW_BOUND = 1e12


@dataclass(frozen=True)
class PhysicalParams:
    """Mass, charge magnitude and action quantum of the particle."""

    m: float = 1.0
    e: float = 1.0
    hbar: float = 1.0
    c: float = field(default=1.0, init=False)

    def __post_init__(self):
        for name in ("m", "e", "hbar"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be finite and > 0, got {value!r}")


def cyclotron_frequency(params: PhysicalParams, H: float, sign: int = 1) -> float:
    """Signed cyclotron frequency ``sign * e * H / m``."""
    if sign not in (1, -1):
        raise DomainError(f"sign must be +1 or -1, got {sign!r}")
    if not (math.isfinite(H) and H > 0):
        raise DomainError(f"field magnitude must be > 0, got {H!r}")
    return sign * params.e * H / params.m


class RegionKind(str, enum.Enum):
    MAGNET = "magnet"
    DRIFT = "drift"


@dataclass(frozen=True)
class RegionSpec:
    """One magnet or drift segment of the lattice.

    ``duration_fixed`` is True only for the first magnet, whose duration is
    set by the exit condition ȳ(t₁) = y₀/2; every other duration comes from
    the lattice recipe.
    """

    kind: RegionKind
    duration: float
    index: int = 0
    H: float = 0.0
    sign: int = 1
    duration_fixed: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise DomainError(f"region duration must be > 0, got {self.duration!r}")
        if self.kind is RegionKind.MAGNET:
            if not (math.isfinite(self.H) and self.H > 0):
                raise DomainError(f"magnet field must be > 0, got {self.H!r}")
            if self.sign not in (1, -1):
                raise DomainError(f"magnet sign must be +1 or -1, got {self.sign!r}")

    @property
    def is_magnet(self) -> bool:
        return self.kind is RegionKind.MAGNET

    def omega(self, params: PhysicalParams) -> float:
        """Signed cyclotron frequency; 0 for a drift."""
        if not self.is_magnet:
            return 0.0
        return cyclotron_frequency(params, self.H, self.sign)


@dataclass(frozen=True)
class LatticePlan:
    regions: tuple
    entry_times: tuple

    def __post_init__(self):
        if len(self.regions) != len(self.entry_times):
            raise ConfigError("one entry time per region is required")
        for k in range(1, len(self.entry_times)):
            if not self.entry_times[k] > self.entry_times[k - 1]:
                raise ConfigError("entry times must be strictly increasing")

    @classmethod
    def from_regions(cls, regions: Sequence[RegionSpec], t0: float = 0.0) -> "LatticePlan":
        # fsum over prefixes keeps entry_times[k+1] - entry_times[k] within an ulp
        durations = [r.duration for r in regions]
        entries = tuple(math.fsum([t0] + durations[:k]) for k in range(len(durations)))
        return cls(tuple(regions), entries)

    @property
    def end_time(self) -> float:
        return math.fsum([self.entry_times[0]] + [r.duration for r in self.regions])

    def exit_time(self, k: int) -> float:
        if k + 1 < len(self.regions):
            return self.entry_times[k + 1]
        return self.end_time

    def __len__(self):
        return len(self.regions)


def build_lattice(
    params: PhysicalParams,
    H: float,
    n_periods: int,
    drift_duration: Optional[float] = None,
) -> LatticePlan:
    """Assemble the undulator region sequence.

    The first magnet (field along +z) runs for t₁ = arccos(1/2)/ω, turning
    the heading from 0 to −60°.  It is followed by an entrance drift of half
    the nominal drift duration, then ``n_periods`` repetitions of

        magnet(−, 2t₁), drift(T_d), magnet(+, 2t₁), drift(T_d)

    Each full magnet bends the heading between ±60°.  The half-length
    entrance drift places every full drift's midpoint on y = y₀/2, which is
    what centers the oscillation on that axis.
    """
    if int(n_periods) != n_periods or n_periods < 1:
        raise ConfigError(f"number of periods must be an integer >= 1, got {n_periods!r}")
    omega = cyclotron_frequency(params, H, 1)
    t1 = math.acos(0.5) / omega
    td = t1 if drift_duration is None else float(drift_duration)
    if not (math.isfinite(td) and td > 0):
        raise ConfigError(f"drift duration must be > 0, got {drift_duration!r}")

    specs = [
        dict(kind=RegionKind.MAGNET, duration=t1, H=H, sign=1, duration_fixed=True),
        dict(kind=RegionKind.DRIFT, duration=0.5 * td),
    ]
    for _ in range(int(n_periods)):
        specs.append(dict(kind=RegionKind.MAGNET, duration=2 * t1, H=H, sign=-1))
        specs.append(dict(kind=RegionKind.DRIFT, duration=td))
        specs.append(dict(kind=RegionKind.MAGNET, duration=2 * t1, H=H, sign=1))
        specs.append(dict(kind=RegionKind.DRIFT, duration=td))
    regions = [RegionSpec(index=k, **s) for k, s in enumerate(specs)]
    return LatticePlan.from_regions(regions)


@dataclass(frozen=True)
class MagnetEpsilon:
    omega: float
    H: float

    def __post_init__(self):
        if not (math.isfinite(self.H) and self.H > 0):
            raise DomainError(f"magnet field must be > 0, got {self.H!r}")
        if not (math.isfinite(self.omega) and self.omega != 0):
            raise DomainError("magnet frequency must be finite and nonzero")


@dataclass(frozen=True)
class DriftEpsilon:
    C1: float
    C2: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.C1) and self.C1 > 0):
            raise DomainError(f"C1 must be > 0, got {self.C1!r}")


EpsilonDescriptor = Union[MagnetEpsilon, DriftEpsilon]


def magnet_epsilon(params: PhysicalParams, region: RegionSpec) -> MagnetEpsilon:
    return MagnetEpsilon(omega=region.omega(params), H=region.H)


def epsilon_magnet(t, desc: MagnetEpsilon):
    # |ω| keeps the Wronskian at +2ie/m for both field directions
    amp = math.sqrt(2.0 / desc.H)
    return amp * np.exp(0.5j * abs(desc.omega) * np.asarray(t))[()]


def epsilon_magnet_dot(t, desc: MagnetEpsilon):
    return 0.5j * abs(desc.omega) * epsilon_magnet(t, desc)


def epsilon_drift(t, desc: DriftEpsilon, params: PhysicalParams):
    return (1j * desc.C1 * np.asarray(t) + params.e / (params.m * desc.C1))[()]


def epsilon_drift_dot(t, desc: DriftEpsilon, params: PhysicalParams):
    return (1j * desc.C1 * np.ones_like(np.asarray(t, dtype=float)))[()]


def wronskian(eps, eps_dot):
    """ε̇ε* − ε̇*ε, purely imaginary for any complex pair."""
    eps = np.asarray(eps, dtype=complex)
    eps_dot = np.asarray(eps_dot, dtype=complex)
    return (eps_dot * np.conj(eps) - np.conj(eps_dot) * eps)[()]


def drift_phase(t, desc: DriftEpsilon, params: PhysicalParams):
    """γ(τ) = arctan(m C₁² τ / e) + C₂, the argument of ε(τ) up to C₂."""
    return np.arctan(params.m * desc.C1**2 * np.asarray(t) / params.e)[()] + desc.C2


@dataclass(frozen=True)
class CoherentStateParams:
    """Invariant eigenvalues of one region.

    For magnets ``alpha``/``beta`` are the amplitudes of the mean circle
    (radius 2|α|√e, center 2√e(Re β, −Im β)) and ``phase0`` is the orbit
    phase added at entry.  For drifts they are the eigenvalues of the two
    drift invariants and ``phase0`` is unused.
    """

    alpha: complex
    beta: complex
    epsilon: EpsilonDescriptor
    t_entry: float = 0.0
    phase0: float = 0.0
    overflow_bound: float = DEFAULT_OVERFLOW_BOUND

    def __post_init__(self):
        for name in ("alpha", "beta"):
            z = complex(getattr(self, name))
            if not (cmath.isfinite(z)):
                raise DomainError(f"{name} must be finite, got {z!r}")
            if abs(z) >= self.overflow_bound:
                raise OverflowBoundError(
                    f"|{name}| = {abs(z):.3e} exceeds bound {self.overflow_bound:.3e}"
                )
            object.__setattr__(self, name, z)
        if not math.isfinite(self.t_entry):
            raise DomainError("t_entry must be finite")

    @property
    def is_magnet(self) -> bool:
        return isinstance(self.epsilon, MagnetEpsilon)


@dataclass(frozen=True)
class MomentState:
    """Means and per-axis second central moments at time ``t``.

    Mean momenta are kinetic (m × velocity).  In magnets the momentum spreads
    are those of the symmetric-gauge canonical momentum, the convention under
    which the coherent states saturate the uncertainty bound; in drifts both
    conventions coincide.  ``full_cov`` is the 4×4 covariance over
    (x, y, px, py) when available, e.g. from grid quadrature.
    """

    t: float
    mean_x: float
    mean_y: float
    mean_px: float
    mean_py: float
    var_x: float
    var_y: float
    var_px: float
    var_py: float
    cov_xpx: float
    cov_ypy: float
    full_cov: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("var_x", "var_y", "var_px", "var_py"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        if self.full_cov is not None:
            cov = np.asarray(self.full_cov, dtype=float)
            if cov.shape != (4, 4):
                raise DomainError("full_cov must be 4x4")
            if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max())):
                raise DomainError("full_cov must be symmetric")
            object.__setattr__(self, "full_cov", cov)

    @property
    def means(self):
        return (self.mean_x, self.mean_y, self.mean_px, self.mean_py)

    @property
    def second_moments(self):
        return (self.var_x, self.var_y, self.var_px, self.var_py, self.cov_xpx, self.cov_ypy)
