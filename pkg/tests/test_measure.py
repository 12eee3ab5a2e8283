"""Unit tests for volume quadrature, density profiles, and blow-downs."""

import math

import numpy as np
import pytest

from mingraph import measure
from mingraph.models import model_affine, model_lawson_osserman, model_slag_exp
from mingraph.util import chunk_ranges, run_chunks, unit_ball_volume


def test_unit_ball_volume_known_values():
    assert unit_ball_volume(0) == pytest.approx(1.0)
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)
    assert unit_ball_volume(4) == pytest.approx(math.pi**2 / 2.0)


def test_chunking_helpers():
    assert chunk_ranges(10, 4) == [(0, 4), (4, 8), (8, 10)]
    assert chunk_ranges(0, 4) == []
    out = run_chunks(lambda c: c[0], chunk_ranges(10, 3), threads=4)
    assert out == [0, 3, 6, 9]


def test_flat_disc_volume():
    model = model_affine(np.zeros((1, 2)))
    rep = measure.graph_volume(model, np.zeros(3), 1.0, 128)
    assert rep.value == pytest.approx(math.pi, rel=5e-3)
    assert rep.est_error < 0.05


def test_tilted_plane_volume():
    # graph of u = x1: area multiplies by sqrt(2) over the projected region,
    # but the ambient ball cuts an ellipse; compare against the closed form
    # area = pi r^2 (disc in the plane)
    model = model_affine(np.array([[1.0, 0.0]]))
    rep = measure.graph_volume(model, np.zeros(3), 1.0, 256)
    assert rep.value == pytest.approx(math.pi, rel=1e-2)


def test_volume_report_validation():
    with pytest.raises(ValueError):
        measure.VolumeReport("x", -1.0, 64, 0.0)
    model = model_affine(np.zeros((1, 2)))
    with pytest.raises(ValueError):
        measure.graph_volume(model, np.zeros(3), 1.0, resolution=16)
    with pytest.raises(ValueError):
        measure.graph_volume(model, np.zeros(2), 1.0)


def test_cone_volume_homogeneous():
    model = model_lawson_osserman()
    vals = [
        measure.graph_volume(model, np.zeros(7), rho, 40).value / rho**4
        for rho in (1.0, 2.0, 4.0)
    ]
    assert max(vals) / min(vals) < 1.01
    # exact value: slope 9 over the base ball of radius 2 rho / 3
    exact = 9.0 * unit_ball_volume(4) * (2.0 / 3.0) ** 4
    assert vals[0] == pytest.approx(exact, rel=1e-2)


def test_exponential_volume_beats_cubic_bound():
    model = model_slag_exp()
    center = np.array([0.0, 0.0, 1.0, 0.0])  # graph point above the origin
    for r in (math.e, 5.0):
        rep = measure.graph_volume(model, center, math.sqrt(3.0) * r, 512)
        assert rep.value >= r * (r * r - 1.0)
        assert rep.est_error <= 0.01 * rep.value


def test_volume_rigid_motion_invariance():
    # translate base and target simultaneously with the ball center
    A = np.array([[0.6, -0.2]])
    model = model_affine(A)
    shifted = model_affine(A, b=np.array([0.7]))
    v1 = measure.graph_volume(model, np.zeros(3), 1.3, 64).value
    v2 = measure.graph_volume(shifted, np.array([0.0, 0.0, 0.7]), 1.3, 64).value
    assert v2 == pytest.approx(v1, rel=1e-2)
    # rotate the base (an ambient rigid motion fixing the target factor)
    th = 0.7
    R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    rotated = model_affine(A @ R)
    v3 = measure.graph_volume(rotated, np.zeros(3), 1.3, 64).value
    assert v3 == pytest.approx(v1, rel=1e-2)


def test_density_profile_affine_is_one():
    model = model_affine(np.array([[1.0, 0.5]]))
    prof = measure.density_profile(model, np.zeros(3), np.linspace(1, 3, 5), 128)
    assert np.max(np.abs(prof.ratios - 1.0)) < 0.01
    assert prof.monotonicity_margin > -3.0 * np.max(prof.est_errors)


def test_density_profile_cone_constant_and_above_one():
    model = model_lawson_osserman()
    prof = measure.density_profile(model, np.zeros(7), np.linspace(1, 4, 5), 40)
    assert np.max(prof.ratios) / np.min(prof.ratios) < 1.01
    assert np.all(prof.ratios >= 1.0)
    assert prof.ratios[0] == pytest.approx(16.0 / 9.0, rel=1e-2)


def test_density_profile_rejects_off_graph_center():
    model = model_slag_exp()
    with pytest.raises(ValueError):
        measure.density_profile(model, np.array([0.0, 0.0, 5.0, 0.0]), [1.0, 2.0])


def test_growth_check_affine_true():
    model = model_affine(np.array([[0.3, 0.1], [0.0, 0.2]]))
    chk = measure.volume_growth_bound_check(model, 1.0, [1.0, 2.0, 4.0], 64)
    assert chk.ok
    assert chk.constant > 0.0
    assert chk.to_dict()["ok"] is True


def test_growth_check_cone_true():
    model = model_lawson_osserman()
    chk = measure.volume_growth_bound_check(model, 5.0, [1.0, 2.0], 40)
    assert chk.ok and np.isfinite(chk.constant)


def test_growth_check_unbounded_dilation_raises_with_witness():
    model = model_slag_exp()
    with pytest.raises(measure.PredicateViolationError) as info:
        measure.volume_growth_bound_check(model, 2.0, [1.0, 4.0], 40)
    assert info.value.witness is not None
    assert info.value.witness.shape == (2,)


def test_blow_down_cone_fixed_point():
    model = model_lawson_osserman()
    for r in (0.5, 3.0):
        bd = measure.blow_down(model, r)
        x = np.array([0.4, -0.2, 0.9, 0.3])
        assert np.allclose(bd.value(x), model.value(x), atol=1e-12)
        assert np.allclose(bd.jacobian(x), model.jacobian(x), atol=1e-12)


def test_blow_down_affine_offset_shrinks():
    model = model_affine(np.array([[1.0, 0.0]]), np.array([2.0]))
    bd = measure.blow_down(model, 10.0)
    assert bd.value(np.zeros(2))[0] == pytest.approx(0.2)


def test_blow_down_exponential_slope_diverges():
    model = model_slag_exp()
    slopes = [
        measure.max_slope_on_box(measure.blow_down(model, r), 2.0) for r in (1, 4, 16)
    ]
    assert slopes[0] < slopes[1] < slopes[2]
    with pytest.raises(ValueError):
        measure.blow_down(model, 0.0)
