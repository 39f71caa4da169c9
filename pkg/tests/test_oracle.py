import json
import math

import numpy as np
import pytest

from undulator_cs.errors import ConfigError, DomainError
from undulator_cs.model import PhysicalParams, RegionKind, RegionSpec
from undulator_cs.oracle import (
    compare_means,
    comparison_report,
    flow_matrix,
    integrate_covariance,
    integrate_means,
    lattice_means,
    per_axis,
    write_report,
)
from undulator_cs.wavefunction import covering_grid, eval_psi, grid_moments

P = PhysicalParams()


def magnet(duration, sign=1, H=1.0):
    return RegionSpec(RegionKind.MAGNET, duration, H=H, sign=sign)


def drift(duration):
    return RegionSpec(RegionKind.DRIFT, duration)


def test_flow_matrix_structure():
    M = flow_matrix(magnet(1.0), P)
    assert np.trace(M) == 0
    assert M[0, 2] == M[1, 3] == 1.0 and M[2, 3] == 1.0 and M[3, 2] == -1.0
    D = flow_matrix(drift(1.0), P)
    assert np.count_nonzero(D) == 2
    np.testing.assert_array_equal(flow_matrix(magnet(1.0, -1), P)[2:, 2:], -M[2:, 2:])
    assert np.trace(flow_matrix(magnet(1.0), P, "canonical")) == 0
    with pytest.raises(DomainError):
        flow_matrix(drift(1.0), P, "lab")


def test_magnet_means_to_exit():
    s = integrate_means((0, 1, 1, 0), magnet(math.pi / 3), 1e-3, P)
    np.testing.assert_allclose(s.values[-1], (math.sqrt(3) / 2, 0.5, 0.5, -math.sqrt(3) / 2), atol=1e-10)


def test_drift_means_exact():
    init = (0.8660254, 0.5, 0.5, -0.8660254)
    s = integrate_means(init, drift(1.0), 1e-2, P)
    np.testing.assert_allclose(s.values[-1], (1.3660254, -0.3660254, 0.5, -0.8660254), atol=1e-14)


def test_zero_is_fixed_point():
    s = integrate_means((0, 0, 0, 0), magnet(2.0), 1e-2, P)
    assert not s.values.any()
    c = integrate_covariance(np.zeros((4, 4)), drift(2.0), 1e-2, P)
    assert not c.values.any()


def test_full_cyclotron_period():
    s = integrate_means((0, 1, 1, 0), magnet(2 * math.pi), 1e-3, P)
    np.testing.assert_allclose(s.values[-1], (0, 1, 1, 0), atol=1e-10)


def test_sign_flip_reverses_rotation():
    plus = integrate_means((0, 0, 1, 0), magnet(0.5), 1e-3, P).values[-1]
    minus = integrate_means((0, 0, 1, 0), magnet(0.5, -1), 1e-3, P).values[-1]
    assert plus[3] == pytest.approx(-minus[3])
    assert plus[3] < 0


def test_step_size_limit():
    with pytest.raises(ConfigError):
        integrate_means((0, 0, 0, 0), drift(1.0), 0.02, P)
    with pytest.raises(ConfigError):
        integrate_covariance(np.eye(4), drift(1.0), 0.0, P)


def test_free_spreading():
    s = integrate_covariance(np.diag([1, 1, 0.25, 0.25]), drift(3.0), 1e-2, P)
    dt = s.times - s.times[0]
    proj = per_axis(s.values)
    np.testing.assert_allclose(proj[:, 0], 1 + 0.25 * dt**2, atol=1e-12)
    np.testing.assert_allclose(proj[:, 4], 0.25 * dt, atol=1e-12)
    assert (s.min_eigenvalue > -1e-12).all()


def test_covariance_input_checks():
    asym = np.eye(4)
    asym[0, 1] = 0.3
    with pytest.raises(DomainError):
        integrate_covariance(asym, drift(1.0), 1e-2, P)
    with pytest.raises(DomainError):
        integrate_covariance(-np.eye(4), drift(1.0), 1e-2, P)


def test_magnet_covariance_constant_over_period():
    from undulator_cs.model import CoherentStateParams, MagnetEpsilon

    cs = CoherentStateParams(0.5, 0.0, MagnetEpsilon(1.0, 1.0))
    ms = grid_moments(eval_psi(covering_grid(cs, 0.0, P), cs, 0.0, P), P, momentum="canonical")
    s = integrate_covariance(ms.full_cov, magnet(2 * math.pi), 1e-3, P, frame="canonical")
    proj = per_axis(s.values)
    np.testing.assert_allclose(proj, np.broadcast_to([1.0, 1.0, 0.25, 0.25, 0.0, 0.0], proj.shape), atol=1e-8)
    det = np.linalg.det(s.values)
    assert np.abs(det / det[0] - 1).max() < 1e-8


def test_lattice_means_match_closed_form(run1):
    assert compare_means(run1, 1e-3) < 1e-8
    series = lattice_means(run1, 1e-3)
    assert series.times[0] == 0 and series.times[-1] == pytest.approx(run1.lattice.end_time)


def test_report_roundtrip(run1, tmp_path):
    rep = comparison_report(run1, 1e-3)
    assert rep["means_max_error"] < 1e-8 and rep["oracle_cov_sign"] == 1.0
    path = tmp_path / "oracle.json"
    write_report(rep, path)
    assert json.loads(path.read_text()) == rep
