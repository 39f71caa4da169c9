import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tests.conftest import run_config
from tests.test_propagators import magnet_state
from undulator_cs.errors import ConfigError, DomainError
from undulator_cs.model import PhysicalParams
from undulator_cs.propagators import RegionState, mean_magnet
from undulator_cs.stitching import (
    build_and_propagate,
    fix_C1,
    magnet_exit_time,
    mean_y_extrema,
    stitch_drift_to_magnet,
    stitch_magnet_to_drift,
    verify_compatibility,
)

C1 = math.sqrt(0.5)


def test_exit_time():
    assert magnet_exit_time(1.0) == pytest.approx(1.0471975512)
    assert magnet_exit_time(2.0) == pytest.approx(0.5235987756)
    with pytest.raises(DomainError):
        magnet_exit_time(0.0)


@pytest.mark.parametrize("e, w, m, expected", [(1, 1, 1, 0.7071067812), (1, 2, 1, 1.0), (4, 1, 2, 1.0)])
def test_fix_C1(e, w, m, expected):
    assert fix_C1(PhysicalParams(m=m, e=e), w) == pytest.approx(expected)


def test_zero_alpha_gives_zero_solution(unit):
    sol = stitch_magnet_to_drift(0.0, unit, 1.0, C1)
    assert sol.alpha_next == 0 and sol.beta_next == 0
    assert sol.compat_defect == (0.0, 0.0)


def test_canonical_stitch(run1):
    left, right = run1.interfaces[0].left, run1.interfaces[0].right
    np.testing.assert_allclose(right.means, (math.sqrt(3) / 2, 0.5, 0.5, -math.sqrt(3) / 2), atol=1e-12)
    np.testing.assert_allclose(left.means, right.means, atol=1e-12)
    sol = run1.first_stitch
    assert max(abs(r) for r in sol.residuals) < 1e-12
    assert max(sol.compat_defect) < 1e-10


def test_linearity(unit):
    a = stitch_magnet_to_drift(0.5, unit, 1.0, C1)
    b = stitch_magnet_to_drift(1.5, unit, 1.0, C1)
    assert b.alpha_next == pytest.approx(3 * a.alpha_next)
    assert b.beta_next == pytest.approx(3 * a.beta_next)


def test_compat_negative_control(unit):
    sol = stitch_magnet_to_drift(0.5, unit, 1.0, C1)
    bumped = type(sol)(sol.alpha_next, sol.beta_next + 0.1, sol.residuals, sol.compat_defect)
    assert max(verify_compatibility(bumped, unit, 1.0, C1)) > 0.01


def test_reference_form_defects_are_reported(unit):
    sol = stitch_magnet_to_drift(0.5, unit, 1.0, C1)
    assert len(sol.reference_boundary_defect) == 4 and len(sol.reference_compat_defect) == 2
    assert all(math.isfinite(d) for d in sol.reference_boundary_defect)


def test_drift_to_magnet_round_trip(unit):
    rs = magnet_state(alpha=0.4 + 0.3j, beta=0.2 - 0.1j, sign=-1)
    target = mean_magnet(rs, 1.7)
    cs = stitch_drift_to_magnet(target, unit, -1.0, t_entry=1.7)
    got = mean_magnet(RegionState(cs, rs.region, unit), 1.7)
    np.testing.assert_allclose(got, target, atol=1e-12)


def test_drift_to_magnet_radius(unit):
    cs = stitch_drift_to_magnet((0.0, 2.0, 0.8, -0.6), unit, 1.0)
    assert abs(cs.alpha) == pytest.approx(1.0 / 2.0)


def test_drift_to_magnet_at_rest(unit):
    cs = stitch_drift_to_magnet((1.0, -3.0, 0.0, 0.0), unit, 1.0)
    assert cs.alpha == 0
    assert cs.beta == pytest.approx(complex(1.0, 3.0) / 2)


def test_run_starts_at_y0(run1):
    first = run1.samples[0].state
    assert (first.t, first.mean_x, first.mean_y) == (0.0, 0.0, 1.0)
    assert run1.y0 == 1.0


def test_run_structure(run1):
    ts = [s.state.t for s in run1.samples]
    assert all(b > a for a, b in zip(ts, ts[1:]))
    assert len(run1.states) == len(run1.lattice)
    assert len(run1.interfaces) == len(run1.lattice) - 1


def test_mean_continuity_everywhere(run5):
    assert max(i.mean_jump for i in run5.interfaces) < 1e-10


def test_magnet_to_drift_moment_continuity(run5):
    jumps = [i.moment_jump for i in run5.interfaces if i.kind == "magnet->drift"]
    assert max(jumps) < 1e-10


def test_drift_to_magnet_jump_is_drift_spreading(run5):
    # magnets restart at the coherent-state moments; the jump is the drift's spreading
    p, C = run5.params, run5.C1
    for i in run5.interfaces:
        if i.kind != "drift->magnet":
            continue
        tau = run5.lattice.regions[i.index - 1].duration
        assert i.moment_jumps[0] == pytest.approx(-p.hbar * C**2 * tau**2 / (2 * p.e), abs=1e-12)


def test_y_extrema_symmetric(run5):
    ys = [y for _, y in mean_y_extrema(run5)]
    assert len(ys) == 10
    assert max(ys) + min(ys) == pytest.approx(run5.y0, abs=1e-8)
    assert all(abs(y - 0.5 * run5.y0) == pytest.approx(abs(ys[0] - 0.5 * run5.y0), abs=1e-8) for y in ys)


def test_C1_override_breaks_moment_continuity():
    run = build_and_propagate(run_config(1, C1_scale=1.1))
    i = run.interfaces[0]
    assert i.mean_jump < 1e-10
    expected = 0.5 * (1 / run.C1**2 - 1 / run.C1_fixed**2)
    assert i.moment_jumps[0] == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("bad", [{"alpha_I": 0.0}, {"alpha_I": -1.0}, {"n_periods": 0}, {"n_periods": 1.5}])
def test_bad_configs(bad):
    kw = dict(n_periods=1)
    kw.update(bad)
    with pytest.raises(ConfigError):
        build_and_propagate(run_config(**kw))


@settings(max_examples=25, deadline=None)
@given(alpha=st.floats(0.01, 2.0), e=st.floats(0.2, 5), m=st.floats(0.2, 5), H=st.floats(0.2, 5))
def test_stitch_is_consistent(alpha, e, m, H):
    p = PhysicalParams(m=m, e=e)
    w = e * H / m
    C = fix_C1(p, w)
    sol = stitch_magnet_to_drift(alpha, p, w, C)
    scale = max(1.0, abs(sol.alpha_next), abs(sol.beta_next))
    assert max(abs(r) for r in sol.residuals) < 1e-12 * scale * max(1, m * C, 1 / (m * C)) * 10
    assert max(sol.compat_defect) < 1e-10 * max(1.0, alpha)
