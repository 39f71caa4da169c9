import math

import numpy as np
import pytest

from undulator_cs.errors import AccuracyError, ConfigError, DomainError, ResolutionError
from undulator_cs.model import CoherentStateParams, DriftEpsilon, MagnetEpsilon, PhysicalParams
from undulator_cs.propagators import DRIFT_COV_SIGN, drift_moments_local, magnet_means_local
from undulator_cs.stitching import solve_drift_entry
from undulator_cs.wavefunction import (
    GridField,
    GridSpec,
    covering_grid,
    dump_density_csv,
    eigen_residual,
    eval_psi,
    eval_psi_drift,
    eval_psi_magnet,
    grid_moments,
    make_grid,
    normalization,
)

P = PhysicalParams()


def magnet_cs(alpha=0.5, beta=0.0, omega=1.0, phase0=0.0):
    return CoherentStateParams(alpha, beta, MagnetEpsilon(omega, abs(omega)), phase0=phase0)


def drift_cs(entry=(0.0, 0.0, 0.0, 0.0), C1=math.sqrt(0.5)):
    a, b, _ = solve_drift_entry(entry, P, C1)
    return CoherentStateParams(a, b, DriftEpsilon(C1))


def test_grid_spec_validation():
    with pytest.raises(ConfigError):
        GridSpec(-1, 1, -1, 1, 8, 8)
    g = make_grid((1.0, 2.0), 4.0, 33)
    assert g.x[0] == -3.0 and g.y[-1] == 6.0 and g.mesh()[0].shape == (33, 33)
    assert g.refined().nx == 65


def test_vacuum_magnet_state():
    cs = magnet_cs(alpha=0.0)
    f = eval_psi_magnet(make_grid(), cs, 0.0, P)
    dens = np.abs(f.values) ** 2
    iy, ix = np.unravel_index(np.argmax(dens), dens.shape)
    assert abs(f.spec.x[ix]) < f.spec.dx and abs(f.spec.y[iy]) < f.spec.dy
    ms = grid_moments(f, P, momentum="canonical")
    assert ms.var_x == pytest.approx(1.0, abs=1e-4)
    assert ms.var_px == pytest.approx(0.25, abs=1e-4)
    assert ms.cov_xpx == pytest.approx(0.0, abs=1e-4)


def test_magnet_mean_y():
    f = eval_psi_magnet(make_grid(), magnet_cs(), 0.0, P)
    assert grid_moments(f, P).mean_y == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize(
    "alpha, beta, omega, phase0, t",
    [(0.5, 0.0, 1.0, 0.0, 0.0), (0.3 + 0.4j, -0.2 + 0.1j, 1.0, 0.3, 1.2), (0.6, 0.4 - 0.3j, -2.0, 1.0, 0.7)],
)
def test_magnet_grid_matches_closed_form(alpha, beta, omega, phase0, t):
    cs = magnet_cs(alpha, beta, omega, phase0)
    f = eval_psi(covering_grid(cs, t, P), cs, t, P)
    assert normalization(f) == pytest.approx(1.0, abs=1e-6)
    kin = grid_moments(f, P)
    np.testing.assert_allclose(kin.means, magnet_means_local(cs, P, t), atol=1e-6)
    can = grid_moments(f, P, momentum="canonical")
    w = abs(omega)
    assert can.var_x == pytest.approx(1 / w, abs=1e-4)
    assert can.var_px == pytest.approx(w / 4, abs=1e-4)
    # kinetic momentum spread of a Landau coherent state is twice the canonical one
    assert kin.var_px == pytest.approx(w / 2, abs=1e-4)
    assert np.linalg.eigvalsh(can.full_cov).min() >= -1e-10
    for which in ("A", "B"):
        assert eigen_residual(f, which, cs, P) < 1e-3


def test_drift_at_entry_matches_magnet_width():
    cs = drift_cs()
    ms = grid_moments(eval_psi_drift(make_grid(), cs, 0.0, P), P)
    assert ms.var_x == pytest.approx(1.0, abs=1e-4)


def test_drift_spreading_and_cov_sign():
    cs = drift_cs()
    f = eval_psi_drift(make_grid(half_width=10.0, n=320), cs, 2.0, P)
    ms = grid_moments(f, P)
    assert ms.var_x == pytest.approx(2.0, abs=1e-3)
    assert abs(ms.cov_xpx) == pytest.approx(0.5, abs=1e-3)
    # free spreading correlates x with px positively, opposite to the formula convention
    assert np.sign(ms.cov_xpx) == -DRIFT_COV_SIGN
    assert np.linalg.eigvalsh(ms.full_cov).min() >= -1e-10


def test_drift_moving_packet():
    entry = (0.8660254, 0.5, 0.5, -0.8660254)
    cs = drift_cs(entry)
    t = 1.0
    f = eval_psi(covering_grid(cs, t, P), cs, t, P)
    ms = grid_moments(f, P)
    np.testing.assert_allclose(ms.means, (1.3660254, -0.3660254, 0.5, -0.8660254), atol=1e-6)
    sm = drift_moments_local(cs, P, t)
    assert ms.var_x == pytest.approx(float(sm.var_x), abs=1e-4)
    for which in ("A", "B"):
        assert eigen_residual(f, which, cs, P) < 1e-3


def test_residual_converges_fourth_order():
    cs = magnet_cs(0.3 + 0.1j, 0.2)
    g = covering_grid(cs, 0.4, P)
    coarse = eigen_residual(eval_psi(g, cs, 0.4, P), "A", cs, P)
    fine = eigen_residual(eval_psi(g.refined(), cs, 0.4, P), "A", cs, P)
    assert coarse / fine >= 8


def test_far_off_center_packet_resolved():
    # large symmetric-gauge carrier wavenumber far from the origin
    cs = magnet_cs(0.5, 12.0 - 3.0j)
    f = eval_psi(covering_grid(cs, 0.0, P), cs, 0.0, P)
    assert max(eigen_residual(f, w, cs, P) for w in "AB") < 1e-3


def test_coverage_error():
    with pytest.raises(ConfigError):
        eval_psi_magnet(make_grid((5.0, 5.0), 8.0, 64), magnet_cs(), 0.0, P)


def test_resolution_error():
    cs = magnet_cs(alpha=0.0)
    f = eval_psi_magnet(make_grid(half_width=8.0, n=16), cs, 0.0, P)
    with pytest.raises(ResolutionError):
        eigen_residual(f, "A", cs, P)


def test_normalization_defect():
    f = eval_psi_magnet(make_grid(), magnet_cs(), 0.0, P)
    scaled = GridField(f.spec, 1.01 * f.values, f.t, f.omega)
    with pytest.raises(AccuracyError):
        grid_moments(scaled, P)


def test_wrong_descriptor():
    with pytest.raises(DomainError):
        eval_psi_drift(make_grid(), magnet_cs(), 0.0, P)
    with pytest.raises(DomainError):
        eval_psi_magnet(make_grid(), drift_cs(), 0.0, P)


def test_modulus_continuous_across_stitch(run1):
    t1 = run1.lattice.entry_times[1]
    g = covering_grid(run1.states[0], t1, P)
    left = eval_psi(g, run1.states[0], t1, P)
    right = eval_psi(g, run1.states[1], t1, P)
    assert np.abs(np.abs(left.values) - np.abs(right.values)).max() < 1e-3


def test_density_dump(tmp_path):
    f = eval_psi_magnet(make_grid(n=16, half_width=8.0), magnet_cs(alpha=0.0), 0.0, P)
    path = tmp_path / "d.csv"
    dump_density_csv(f, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,density" and len(lines) == 1 + 16 * 16
