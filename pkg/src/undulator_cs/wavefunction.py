"""Coherent-state wavefunctions on a rectangular grid.

Magnet, field along +z, symmetric gauge, ℓ² = ħ/(m|ω|), z = x + iy::

    ψ = (2πℓ²)^(-1/2) exp[−iωτ/2 − |z|²/4ℓ² − (|a|² + |b|²)/2
                         + (b z + i a e^{−iωτ} z̄)/(√2 ℓ) − i a b e^{−iωτ}]

where a, b are the eigenvalues of the invariants
A = √(mω/2ħ) e^{iωτ}[(y − y₀) − i(x − x₀)] and B = √(mω/2ħ)(x₀ − iy₀).
The trajectory amplitudes α, β of a magnet record relate to them by
a = κ α e^{−iφ₀}, b = κ β with κ = √(2em|ω|/ħ).  A reversed field is
handled by the reflection y → −y.

Drift, ε = iC₁τ + e/(mC₁), γ = arg ε::

    ψ = √(e/πħ)/ε · exp[−mC₁|z|²/(2ħε) + √(e/ħ)(β z + iα z̄)/ε
                        − (|α|² + |β|²)/2 − iαβ e^{−2iγ}]

The eigenvalue conditions are checked with 4th-order central differences;
grid moments use spectral (FFT) derivatives.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import AccuracyError, ConfigError, DomainError, ResolutionError
from .model import CoherentStateParams, DriftEpsilon, MagnetEpsilon, MomentState, PhysicalParams
from .propagators import drift_means_local, drift_moments_local, magnet_means_local

COVERAGE_SIGMAS = 6.0


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 16 or self.ny < 16:
            raise ConfigError("grids need at least 16 points per axis")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ConfigError("grid extents must be increasing")

    @property
    def x(self):
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def y(self):
        return np.linspace(self.y_min, self.y_max, self.ny)

    @property
    def dx(self):
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dy(self):
        return (self.y_max - self.y_min) / (self.ny - 1)

    def mesh(self):
        """Coordinate arrays of shape (ny, nx): rows run along y."""
        return np.meshgrid(self.x, self.y, indexing="xy")

    def refined(self):
        """Same extents with half the spacing."""
        return GridSpec(self.x_min, self.x_max, self.y_min, self.y_max, 2 * self.nx - 1, 2 * self.ny - 1)


def make_grid(center=(0.0, 0.0), half_width: float = 8.0, n: int = 256) -> GridSpec:
    cx, cy = center
    return GridSpec(cx - half_width, cx + half_width, cy - half_width, cy + half_width, n, n)


@dataclass(frozen=True)
class GridField:
    """Samples ``values[iy, ix]`` of ψ at time ``t``.

    ``omega`` is the signed cyclotron frequency of the region the field
    belongs to (0 for a drift); it fixes the gauge of the kinetic momentum.
    """

    spec: GridSpec
    values: np.ndarray
    t: float
    omega: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.spec.ny, self.spec.nx):
            raise DomainError(f"values shape {v.shape} does not match grid {(self.spec.ny, self.spec.nx)}")
        if not np.all(np.isfinite(v)):
            raise DomainError("wavefunction samples must be finite")
        object.__setattr__(self, "values", v)


def magnet_scale(params: PhysicalParams, omega: float) -> float:
    """κ = √(2em|ω|/ħ), trajectory amplitude → invariant eigenvalue."""
    return math.sqrt(2.0 * params.e * params.m * abs(omega) / params.hbar)


def _magnet_quantum_eigenvalues(cs: CoherentStateParams, params: PhysicalParams):
    # eigenvalues of the +z-field state; for a reversed field, of its mirror image
    omega = cs.epsilon.omega
    kappa = magnet_scale(params, omega)
    a_eff = cs.alpha * np.exp(-1j * cs.phase0)
    if omega > 0:
        return kappa * a_eff, kappa * cs.beta
    return -kappa * np.conj(a_eff), kappa * np.conj(cs.beta)


def invariant_eigenvalue(which: str, cs: CoherentStateParams, params: PhysicalParams) -> complex:
    """Eigenvalue of invariant ``which`` ("A" or "B") on the state ``cs``."""
    if which not in ("A", "B"):
        raise DomainError(f"invariant must be 'A' or 'B', got {which!r}")
    if isinstance(cs.epsilon, MagnetEpsilon):
        a, b = _magnet_quantum_eigenvalues(cs, params)
    else:
        a, b = cs.alpha, cs.beta
    return complex(a if which == "A" else b)


def _closed_form_spread(cs, params, tau):
    if isinstance(cs.epsilon, MagnetEpsilon):
        mu = magnet_means_local(cs, params, tau)
        var = params.hbar / (params.m * abs(cs.epsilon.omega))
    else:
        mu = drift_means_local(cs, params, tau)
        var = float(drift_moments_local(cs, params, tau).var_x)
    return float(mu.x), float(mu.y), math.sqrt(var)


def check_coverage(grid: GridSpec, cs: CoherentStateParams, t: float, params: PhysicalParams, sigmas: float = COVERAGE_SIGMAS):
    x0, y0, sd = _closed_form_spread(cs, params, t - cs.t_entry)
    reach = sigmas * sd
    if (
        x0 - reach < grid.x_min
        or x0 + reach > grid.x_max
        or y0 - reach < grid.y_min
        or y0 + reach > grid.y_max
    ):
        raise ConfigError(
            f"grid [{grid.x_min}, {grid.x_max}]x[{grid.y_min}, {grid.y_max}] does not cover "
            f"±{sigmas:g}σ (σ={sd:.4g}) around ({x0:.4g}, {y0:.4g})"
        )


def covering_grid(cs: CoherentStateParams, t: float, params: PhysicalParams, half_width: float = 8.0, n: int = 256) -> GridSpec:
    """Default grid recentered on the closed-form mean at ``t``."""
    x0, y0, _ = _closed_form_spread(cs, params, t - cs.t_entry)
    return make_grid((x0, y0), half_width, n)


def _psi_landau(X, Y, a, b, w, tau, params):
    ell2 = params.hbar / (params.m * w)
    z = X + 1j * Y
    rot = np.exp(-1j * w * tau)
    ap = a * rot
    expo = (
        -0.5j * w * tau
        - (X**2 + Y**2) / (4 * ell2)
        - 0.5 * (abs(a) ** 2 + abs(b) ** 2)
        + (b * z + 1j * ap * np.conj(z)) / math.sqrt(2 * ell2)
        - 1j * ap * b
    )
    return np.exp(expo) / math.sqrt(2 * math.pi * ell2)


def eval_psi_magnet(grid: GridSpec, cs: CoherentStateParams, t: float, params: PhysicalParams, check: bool = True) -> GridField:
    if not isinstance(cs.epsilon, MagnetEpsilon):
        raise DomainError("eval_psi_magnet requires a magnet descriptor")
    if check:
        check_coverage(grid, cs, t, params)
    omega = cs.epsilon.omega
    a, b = _magnet_quantum_eigenvalues(cs, params)
    X, Y = grid.mesh()
    if omega < 0:
        Y = -Y
    tau = t - cs.t_entry
    return GridField(grid, _psi_landau(X, Y, a, b, abs(omega), tau, params), t, omega)


def eval_psi_drift(grid: GridSpec, cs: CoherentStateParams, t: float, params: PhysicalParams, check: bool = True) -> GridField:
    if not isinstance(cs.epsilon, DriftEpsilon):
        raise DomainError("eval_psi_drift requires a drift descriptor")
    if check:
        check_coverage(grid, cs, t, params)
    tau = t - cs.t_entry
    C1 = cs.epsilon.C1
    e, m, hbar = params.e, params.m, params.hbar
    eps = 1j * C1 * tau + e / (m * C1)
    # e^{-2iγ} with γ = arg ε; C₂ = 0 by convention
    gamma = math.atan(m * C1**2 * tau / e)
    X, Y = grid.mesh()
    z = X + 1j * Y
    al, be = cs.alpha, cs.beta
    expo = (
        -m * C1 * (X**2 + Y**2) / (2 * hbar * eps)
        + math.sqrt(e / hbar) * (be * z + 1j * al * np.conj(z)) / eps
        - 0.5 * (abs(al) ** 2 + abs(be) ** 2)
        - 1j * al * be * np.exp(-2j * gamma)
    )
    psi = math.sqrt(e / (math.pi * hbar)) / eps * np.exp(expo)
    return GridField(grid, psi, t, 0.0)


def eval_psi(grid, cs, t, params, check=True) -> GridField:
    if isinstance(cs.epsilon, MagnetEpsilon):
        return eval_psi_magnet(grid, cs, t, params, check)
    return eval_psi_drift(grid, cs, t, params, check)


def normalization(field: GridField) -> float:
    dens = np.abs(field.values) ** 2
    return float(np.trapezoid(np.trapezoid(dens, dx=field.spec.dx, axis=1), dx=field.spec.dy))


# ---------------------------------------------------------------------------
# finite-difference operator application


def _d4_stride(f, h, axis, stride):
    """4th-order first derivative using samples ``stride`` apart.

    Central five-point stencil inside, one-sided five-point stencils at the
    edges, so no values beyond the grid are assumed.
    """
    a = np.moveaxis(f, axis, -1)
    n = a.shape[-1]
    s = stride
    H = 12.0 * h * s
    out = np.empty_like(a)
    c = slice(2 * s, n - 2 * s)
    out[..., c] = (
        -a[..., 4 * s:] + 8 * a[..., 3 * s:n - s] - 8 * a[..., s:n - 3 * s] + a[..., :n - 4 * s]
    ) / H
    for i in range(2 * s):
        if i < s:  # one-sided at the edge point
            w, off = (-25, 48, -36, 16, -3), 0
        else:
            w, off = (-3, -10, 18, -6, 1), -1
        fwd = sum(wk * a[..., i + (k + off) * s] for k, wk in enumerate(w))
        bwd = sum(wk * a[..., n - 1 - i - (k + off) * s] for k, wk in enumerate(w))
        out[..., i] = fwd / H
        out[..., n - 1 - i] = -bwd / H
    return np.moveaxis(out, -1, axis)


def _d4(f, h, axis):
    return _d4_stride(f, h, axis, 1)


def _d4_wide(f, h, axis):
    # same stencil on spacing 2h, for the truncation estimate
    return _d4_stride(f, h, axis, 2)


def _carrier(f, h, axis):
    # density-weighted mean phase advance per step: the local carrier wavenumber
    a = np.moveaxis(f, axis, -1)
    return float(np.angle(np.sum(np.conj(a[..., :-1]) * a[..., 1:]))) / h


def _derivative_pair(f, h, axis):
    """∂f by the fine and 2h-spaced stencils, applied to the demodulated envelope.

    Off-center symmetric-gauge packets carry a plane-wave factor e^{ikx}; the
    stencil only sees the smooth envelope f·e^{−ikx}, and the ik term is
    added back exactly.
    """
    k = _carrier(f, h, axis)
    shape = [1, 1]
    shape[axis] = f.shape[axis]
    wave = np.exp(1j * k * h * np.arange(f.shape[axis])).reshape(shape)
    env = f / wave
    fine = wave * (_d4(env, h, axis) + 1j * k * env)
    wide = wave * (_d4_wide(env, h, axis) + 1j * k * env)
    return fine, wide


def invariant_coefficients(which: str, cs: CoherentStateParams, t: float, params: PhysicalParams):
    """Coefficients (c_x, c_y, c_px, c_py) of the invariant as a linear form."""
    if which not in ("A", "B"):
        raise DomainError(f"invariant must be 'A' or 'B', got {which!r}")
    tau = t - cs.t_entry
    m, hbar = params.m, params.hbar
    if isinstance(cs.epsilon, MagnetEpsilon):
        omega = cs.epsilon.omega
        w = abs(omega)
        pref = math.sqrt(m * w / (2 * hbar))
        mw = m * w
        if which == "A":
            c = pref * np.exp(1j * w * tau) * np.array([-0.5j, 0.5, 1 / mw, 1j / mw])
        else:
            c = pref * np.array([0.5, -0.5j, 1j / mw, 1 / mw])
        if omega < 0:
            c = c * np.array([1, -1, 1, -1])
        return c
    C1 = cs.epsilon.C1
    eps = 1j * C1 * tau + params.e / (m * C1)
    norm = 1 / (2 * math.sqrt(params.e * hbar))
    if which == "A":
        return norm * np.array([-1j * m * C1, m * C1, eps, 1j * eps])
    return norm * np.array([m * C1, -1j * m * C1, 1j * eps, eps])


def apply_invariant(field: GridField, which: str, cs: CoherentStateParams, t: Optional[float] = None,
                    params: Optional[PhysicalParams] = None, max_truncation: float = 1e-2) -> GridField:
    """Apply invariant A or B to ``field`` with 4th-order central differences.

    Raises :class:`ResolutionError` when comparing the stencil against the
    same stencil on doubled spacing suggests a relative truncation error
    above ``max_truncation``.
    """
    params = params or PhysicalParams()
    t = field.t if t is None else t
    if not math.isclose(t, field.t, rel_tol=0, abs_tol=1e-12 * max(1.0, abs(t))):
        raise DomainError("field and invariant must be evaluated at the same time")
    cx, cy, cpx, cpy = invariant_coefficients(which, cs, t, params)
    psi = field.values
    X, Y = field.spec.mesh()
    hb = params.hbar
    dpx, wpx = _derivative_pair(psi, field.spec.dx, axis=1)
    dpy, wpy = _derivative_pair(psi, field.spec.dy, axis=0)
    out = cx * X * psi + cy * Y * psi - 1j * hb * (cpx * dpx + cpy * dpy)

    wide = -1j * hb * (cpx * wpx + cpy * wpy)
    fine = -1j * hb * (cpx * dpx + cpy * dpy)
    scale = np.linalg.norm(fine) + np.linalg.norm(psi)
    est = np.linalg.norm(fine - wide) / 15.0 / scale
    if est > max_truncation:
        raise ResolutionError(f"estimated relative truncation error {est:.2e} exceeds {max_truncation:.1e}")
    return GridField(field.spec, out, field.t, field.omega)


def eigen_residual(field: GridField, which: str, cs: CoherentStateParams, params: PhysicalParams) -> float:
    """‖(O − λ)ψ‖ / (‖ψ‖ √(1 + |λ|²)) for invariant O with eigenvalue λ."""
    lam = invariant_eigenvalue(which, cs, params)
    applied = apply_invariant(field, which, cs, field.t, params)
    dA = field.spec.dx * field.spec.dy
    res = np.sqrt(np.sum(np.abs(applied.values - lam * field.values) ** 2) * dA)
    nrm = np.sqrt(np.sum(np.abs(field.values) ** 2) * dA)
    return float(res / (nrm * math.sqrt(1 + abs(lam) ** 2)))


# ---------------------------------------------------------------------------
# moments


def _spectral_derivative(f, h, axis):
    n = f.shape[axis]
    k = 2 * np.pi * np.fft.fftfreq(n, d=h)
    shape = [1, 1]
    shape[axis] = n
    return np.fft.ifft(1j * k.reshape(shape) * np.fft.fft(f, axis=axis), axis=axis)


def grid_moments(field: GridField, params: PhysicalParams, momentum: str = "kinetic", norm_tol: float = 1e-4) -> MomentState:
    """First and second moments of ``field`` by quadrature.

    ``momentum="kinetic"`` uses p − eA with A = (H/2)(−y, x) in a magnet;
    ``"canonical"`` uses −iħ∇ in that same symmetric gauge.  The two agree
    in a drift.
    """
    if momentum not in ("kinetic", "canonical"):
        raise DomainError(f"momentum must be 'kinetic' or 'canonical', got {momentum!r}")
    nrm = normalization(field)
    if abs(nrm - 1) > norm_tol:
        raise AccuracyError(f"normalization defect {abs(nrm - 1):.2e} exceeds {norm_tol:.1e}")
    spec = field.spec
    psi = field.values / math.sqrt(nrm)
    X, Y = spec.mesh()
    hb = params.hbar
    px = -1j * hb * _spectral_derivative(psi, spec.dx, axis=1)
    py = -1j * hb * _spectral_derivative(psi, spec.dy, axis=0)
    if momentum == "kinetic" and field.omega != 0:
        mw = params.m * field.omega
        px = px + 0.5 * mw * Y * psi
        py = py - 0.5 * mw * X * psi
    ops = [X * psi, Y * psi, px, py]
    dA = spec.dx * spec.dy
    means = np.array([np.real(np.vdot(psi, o)) * dA for o in ops])
    dev = [o - mu * psi for o, mu in zip(ops, means)]
    cov = np.empty((4, 4))
    for i in range(4):
        for j in range(i, 4):
            cov[i, j] = cov[j, i] = np.real(np.vdot(dev[i], dev[j])) * dA
    return MomentState(
        field.t,
        *means,
        cov[0, 0], cov[1, 1], cov[2, 2], cov[3, 3],
        cov[0, 2], cov[1, 3],
        full_cov=cov,
    )


def dump_density_csv(field: GridField, path) -> None:
    X, Y = field.spec.mesh()
    dens = np.abs(field.values) ** 2
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "density"])
        for x, y, d in zip(X.ravel(), Y.ravel(), dens.ravel()):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(d))])
