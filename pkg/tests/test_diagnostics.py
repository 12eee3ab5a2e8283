"""Unit tests for curvature diagnostics and the log v identity machinery."""

import math

import numpy as np
import pytest

from mingraph import diagnostics as dg
from mingraph.models import model_affine, model_lawson_osserman, model_slag_exp


def gauss_map_norm2_fd(model, x, step=1e-5):
    """|B|^2 from central differences of the tangent projector (oracle)."""
    n = model.n
    J = model.jacobian(x)
    ginv = np.linalg.inv(np.eye(n) + J.T @ J)
    dP = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = step
        dP.append(
            (
                dg.tangent_projector(model.jacobian(x + e))
                - dg.tangent_projector(model.jacobian(x - e))
            )
            / (2 * step)
        )
    return 0.5 * sum(
        ginv[k, l] * np.sum(dP[k] * dP[l]) for k in range(n) for l in range(n)
    )


def test_sff_frames_orthonormal():
    rng = np.random.default_rng(0)
    for model, scale in [(model_slag_exp(), 1.5), (model_lawson_osserman(), 1.0)]:
        for _ in range(5):
            x = rng.uniform(0.3, scale, model.n)
            t = dg.sff_at(model, x)
            F = np.vstack([t.tangent, t.normal])
            assert np.max(np.abs(F @ F.T - np.eye(model.n + model.m))) < 1e-12


def test_sff_components_symmetric():
    model = model_lawson_osserman()
    h = dg.sff_components(model.jacobian(np.ones(4)), model.hessian(np.ones(4)))
    assert np.array_equal(h, np.swapaxes(h, -1, -2))


def test_sff_norm2_matches_projector_route():
    rng = np.random.default_rng(1)
    for model in (model_slag_exp(), model_lawson_osserman()):
        for _ in range(10):
            x = rng.uniform(0.3, 1.5, model.n)
            a = dg.sff_norm2(model.jacobian(x), model.hessian(x))
            b = dg.sff_norm2_projector(model.jacobian(x), model.hessian(x))
            assert b == pytest.approx(a, rel=1e-10)


def test_sff_norm2_matches_gauss_map_oracle():
    rng = np.random.default_rng(2)
    for model in (model_slag_exp(), model_lawson_osserman()):
        for _ in range(5):
            x = rng.uniform(0.4, 1.2, model.n)
            exact = dg.sff_norm2(model.jacobian(x), model.hessian(x))
            fd = gauss_map_norm2_fd(model, x)
            assert fd == pytest.approx(exact, rel=1e-6, abs=1e-6)


def test_sff_zero_for_affine():
    model = model_affine(np.array([[1.0, 2.0], [0.5, -0.3]]))
    assert dg.sff_norm2(model.jacobian(np.zeros(2)), model.hessian(np.zeros(2))) == 0.0


def test_curve_curvature_closed_form():
    # graph of u(x) = x^2 / 2: curvature 1 / (1 + x^2)^{3/2} at slope x
    for x in (0.0, 0.7, 2.0):
        J = np.array([[x]])
        H = np.array([[[1.0]]])
        k2 = 1.0 / (1.0 + x * x) ** 3
        assert dg.sff_norm2(J, H) == pytest.approx(k2, rel=1e-12)


def test_grad_logv_matches_finite_differences():
    model = model_slag_exp()
    x = np.array([0.3, -0.6])
    step = 1e-6
    grad = dg.grad_logv(model.jacobian(x), model.hessian(x))
    for j in range(2):
        e = np.zeros(2)
        e[j] = step

        def logv(p):
            J = model.jacobian(p)
            return 0.5 * np.log(np.linalg.det(np.eye(2) + J.T @ J))

        fd = (logv(x + e) - logv(x - e)) / (2 * step)
        assert grad[j] == pytest.approx(fd, abs=1e-8)


def test_grad_logv_tangential_vs_euclidean():
    # |grad_M f|^2 = g^{ij} d_i f d_j f for functions of the base point
    model = model_slag_exp()
    rng = np.random.default_rng(3)
    for _ in range(10):
        x = rng.uniform(-1.0, 1.0, 2)
        J = model.jacobian(x)
        H = model.hessian(x)
        grad = dg.grad_logv(J, H)
        ginv = np.linalg.inv(np.eye(2) + J.T @ J)
        assert dg.grad_logv_tangential_norm2(J, H) == pytest.approx(
            float(grad @ ginv @ grad), rel=1e-9, abs=1e-12
        )


def test_logv_identity_second_order():
    model = model_slag_exp()
    x = np.array([0.4, -0.3])
    gaps = [abs(dg.logv_identity(model, x, h).gap) for h in (1e-2, 5e-3, 2.5e-3)]
    assert math.log2(gaps[0] / gaps[1]) > 1.9
    assert math.log2(gaps[1] / gaps[2]) > 1.9


def test_logv_identity_zero_on_cone():
    # the cone has constant slope, so both sides vanish
    model = model_lawson_osserman()
    rep = dg.logv_identity(model, np.array([1.0, 0.2, -0.4, 0.8]), 1e-3)
    assert abs(rep.lhs) < 1e-10
    assert abs(rep.rhs) < 1e-12


def test_laplace_inv_slope_formula_vs_fd():
    for model, x in [
        (model_slag_exp(), np.array([0.2, 0.5])),
        (model_lawson_osserman(), np.array([1.0, 0.3, -0.5, 0.7])),
    ]:
        f = dg.laplace_inv_slope_formula(model.jacobian(x), model.hessian(x))
        fd = dg.laplace_inv_slope_fd(model, x, 1e-4)
        assert fd == pytest.approx(f, abs=1e-7)


def test_curvature_integral_cone_scaling():
    model = model_lawson_osserman()
    slope, vals = dg.curvature_growth_slope(model, [1.0, 2.0], nodes_per_axis=16)
    assert np.all(vals > 0.0)
    assert slope == pytest.approx(2.0, abs=0.05)


def test_curvature_integral_input_validation():
    with pytest.raises(ValueError):
        dg.curvature_integral(model_slag_exp(), -1.0)


def test_write_diagnostics_csv(tmp_path):
    model = model_slag_exp()
    path = tmp_path / "diag.csv"
    pts = np.random.default_rng(4).uniform(-0.5, 0.5, (4, 2))
    dg.write_diagnostics_csv(model, pts, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x0,x1,v,dilation,B2,lhs,rhs,gap,margin_lambda"
    assert len(lines) == 5
    first = [float(v) for v in lines[1].split(",")]
    assert len(first) == 9 and first[2] >= 1.0


def test_sff_at_model_entry_point():
    model = model_lawson_osserman()
    t = dg.sff_at(model, np.array([1.0, 0.0, 0.0, 0.0]))
    assert t.h.shape == (3, 4, 4)
    assert t.norm2 > 0.0
    with pytest.raises(Exception):
        dg.sff_at(model, np.zeros(4))


def test_sff_parabola_hand_value():
    # u = x1^2 on R^2, at the origin: flat frame, h_{1,11} = 2, |B|^2 = 4
    J = np.zeros((1, 2))
    H = np.zeros((1, 2, 2))
    H[0, 0, 0] = 2.0
    t = dg.sff_tensor(J, H)
    assert abs(t.h).max() == pytest.approx(2.0)
    assert t.norm2 == pytest.approx(4.0)


def test_deltav_inverse_hand_value():
    # lam = 0, single normal, only h_{1,11} = 1: Delta v^{-1} = -1
    J = np.zeros((1, 2))
    H = np.zeros((1, 2, 2))
    H[0, 0, 0] = 1.0
    assert dg.laplace_inv_slope_formula(J, H) == pytest.approx(-1.0)


def test_deltav_inverse_model_entry_point():
    model = model_slag_exp()
    x = np.array([0.2, 0.5])
    val = dg.deltav_inverse(model, x)
    assert val == pytest.approx(dg.laplace_inv_slope_fd(model, x, 1e-4), abs=1e-7)


def test_curvature_integral_affine_zero():
    model = model_affine(np.array([[1.0, 0.5]]))
    assert dg.curvature_integral(model, 2.0, nodes_per_axis=16) == 0.0


def test_hessian_fd_of_jacobian_second_order():
    model = model_lawson_osserman()
    x = np.array([0.8, 0.1, -0.3, 0.5])
    H = model.hessian(x)
    gaps = []
    for step in (1e-3, 5e-4):
        fd = np.zeros_like(H)
        for i in range(4):
            e = np.zeros(4)
            e[i] = step
            fd[:, :, i] = (model.jacobian(x + e) - model.jacobian(x - e)) / (2 * step)
        gaps.append(np.max(np.abs(fd - H)))
    assert math.log2(gaps[0] / gaps[1]) > 1.9
