"""Curvature diagnostics for analytic graph models.

Computes the second fundamental form of a graph in an adapted orthonormal
frame from exact Jacobians and Hessians, the intrinsic Laplacians of log v
and 1/v (exact interior derivatives, one outer central difference), and
curvature integrals over balls.  Results can be dumped as CSV for offline
inspection.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from mingraph.algebra import SQRT2, delta_logv_rhs
from mingraph.grassmann import two_dilation
from mingraph.util import chunk_ranges, run_chunks

_CHUNK = 50000


@dataclass(frozen=True)
class SffTensor:
    """Second fundamental form components in an adapted orthonormal frame.

    ``h[gamma, i, j]`` is the component of B(f_i, f_j) along the normal
    nu_gamma, where f_i diagonalize the induced metric (the i-th tangent
    direction makes Jordan angle arctan(lam_i) with the base plane).
    ``tangent`` (n, n+m) and ``normal`` (m, n+m) are the frame row vectors.
    """

    h: np.ndarray
    spectrum: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray

    @property
    def norm2(self) -> float:
        return float(np.sum(self.h**2))


def _adapted_svd(J):
    """Batched SVD data: U (..., m, m), lam (..., n) padded, V (..., n, n)."""
    J = np.asarray(J, dtype=float)
    m, n = J.shape[-2:]
    U, s, Vt = np.linalg.svd(J)
    lam = np.zeros(J.shape[:-2] + (n,))
    lam[..., : s.shape[-1]] = s
    lam_normal = np.zeros(J.shape[:-2] + (m,))
    lam_normal[..., : s.shape[-1]] = s
    return U, lam, lam_normal, np.swapaxes(Vt, -1, -2)


def sff_components(jacobian, hessian) -> np.ndarray:
    """Adapted-frame SFF components, shape (..., m, n, n); broadcasts."""
    J = np.asarray(jacobian, dtype=float)
    H = np.asarray(hessian, dtype=float)
    U, lam, lam_normal, V = _adapted_svd(J)
    h = np.einsum("...ag,...akl,...ki,...lj->...gij", U, H, V, V)
    wt = 1.0 / np.sqrt(1.0 + lam**2)
    wn = 1.0 / np.sqrt(1.0 + lam_normal**2)
    h = h * wn[..., :, None, None] * wt[..., None, :, None] * wt[..., None, None, :]
    # the contraction is symmetric in (i, j) up to rounding; make it exact
    return 0.5 * (h + np.swapaxes(h, -1, -2))


def sff_at(model, x) -> SffTensor:
    """Full SFF record of a model at a point, including the adapted frames."""
    x = model.check_domain(np.asarray(x, dtype=float))
    return sff_tensor(model.jacobian(x), model.hessian(x))


def sff_tensor(jacobian, hessian) -> SffTensor:
    """Full SFF record from exact derivatives at a single point."""
    J = np.asarray(jacobian, dtype=float)
    H = np.asarray(hessian, dtype=float)
    if J.ndim != 2:
        raise ValueError("expected a single Jacobian")
    m, n = J.shape
    U, lam, lam_normal, V = _adapted_svd(J)
    wt = 1.0 / np.sqrt(1.0 + lam**2)
    wn = 1.0 / np.sqrt(1.0 + lam_normal**2)
    # f_i = (v_i, lam_i u_i) / sqrt(1 + lam_i^2); nu_g = (-lam_g v_g, u_g) /
    # sqrt(1 + lam_g^2), where v_g is zero when g exceeds n.
    Vpad = np.zeros((n, m))
    Vpad[:, : min(m, n)] = V[:, : min(m, n)]
    tangent = np.concatenate([V * wt, (J @ V) * wt], axis=0).T
    normal = np.concatenate([-Vpad * (lam_normal * wn), U * wn], axis=0).T
    return SffTensor(
        h=sff_components(J, H), spectrum=lam.copy(), tangent=tangent, normal=normal
    )


def sff_norm2(jacobian, hessian) -> np.ndarray:
    """|B|^2 at one point or a batch, summed over all frame components."""
    h = sff_components(jacobian, hessian)
    out = np.einsum("...gij,...gij->...", h, h)
    return float(out) if out.ndim == 0 else out


def tangent_projector(jacobian) -> np.ndarray:
    """Orthogonal projector of R^{n+m} onto the graph tangent plane."""
    J = np.asarray(jacobian, dtype=float)
    m, n = J.shape[-2:]
    eye = np.broadcast_to(np.eye(n), J.shape[:-2] + (n, n))
    T = np.concatenate([eye, J], axis=-2)
    g = np.eye(n) + np.einsum("...ai,...aj->...ij", J, J)
    return np.einsum("...pi,...ij,...qj->...pq", T, np.linalg.inv(g), T)


def sff_norm2_projector(jacobian, hessian) -> float:
    """|B|^2 from derivatives of the tangent projector (independent route).

    |B|^2 = (1/2) sum_{kl} g^{kl} tr(d_k P d_l P), with d_k P assembled
    exactly from the Hessian.
    """
    J = np.asarray(jacobian, dtype=float)
    H = np.asarray(hessian, dtype=float)
    m, n = J.shape
    g = np.eye(n) + J.T @ J
    ginv = np.linalg.inv(g)
    T = np.vstack([np.eye(n), J])
    Tg = T @ ginv
    dg = np.einsum("aki,aj->kij", H, J) + np.einsum("ai,akj->kij", J, H)
    dT = np.concatenate([np.zeros((n, n, n)), H.transpose(1, 0, 2)], axis=1)
    # d_k P = dT_k g^{-1} T^t + T g^{-1} dT_k^t - T g^{-1} dg_k g^{-1} T^t
    dP = (
        np.einsum("kpi,qi->kpq", dT @ ginv, T)
        + np.einsum("pi,kqi->kpq", Tg, dT)
        - np.einsum("pi,kij,qj->kpq", Tg, dg, Tg)
    )
    return 0.5 * float(np.einsum("kl,kpq,lpq->", ginv, dP, dP))


def grad_logv(jacobian, hessian) -> np.ndarray:
    """Euclidean gradient d_j log v = (1/2) tr(g^{-1} d_j g); broadcasts."""
    J = np.asarray(jacobian, dtype=float)
    H = np.asarray(hessian, dtype=float)
    n = J.shape[-1]
    g = np.eye(n) + np.einsum("...ai,...aj->...ij", J, J)
    ginv = np.linalg.inv(g)
    # d_j g_{ik} = sum_a (H[a,j,i] J[a,k] + J[a,i] H[a,j,k])
    dgj = np.einsum("...aji,...ak->...jik", H, J) + np.einsum(
        "...ai,...ajk->...jik", J, H
    )
    return 0.5 * np.einsum("...ik,...jki->...j", ginv, dgj)


def _pad_normals(h, n):
    """Zero-pad the normal index so h[..., gamma, :, :] exists for gamma < n."""
    m = h.shape[-3]
    if m >= n:
        return h
    pad = np.zeros(h.shape[:-3] + (n - m,) + h.shape[-2:])
    return np.concatenate([h, pad], axis=-3)


def grad_logv_tangential_norm2(jacobian, hessian) -> np.ndarray:
    """|grad_M log v|^2 = sum_j (sum_i lam_i h_{i,ij})^2 in the adapted frame."""
    h = sff_components(jacobian, hessian)
    _, lam, _, _ = _adapted_svd(np.asarray(jacobian, dtype=float))
    n = lam.shape[-1]
    hiij = np.einsum("...iij->...ij", _pad_normals(h, n)[..., :n, :, :])
    grad = np.einsum("...i,...ij->...j", lam, hiij)
    out = np.einsum("...j,...j->...", grad, grad)
    return float(out) if out.ndim == 0 else out


def intrinsic_laplacian_fd(model, grad_fn, x, step: float) -> np.ndarray:
    """Intrinsic Laplacian (1/v) sum_i d_i(v g^{ij} d_j f) on the graph.

    ``grad_fn(points) -> (..., n)`` must give the exact Euclidean gradient
    of f; only the outer divergence uses a central difference of size
    ``step``, so the error is O(step^2).  ``x`` may be one point or a batch.
    """
    x = np.asarray(x, dtype=float)
    n = model.n

    def flux(pts):
        J = model.jacobian(pts)
        g = np.eye(n) + np.einsum("...ai,...aj->...ij", J, J)
        v = np.sqrt(np.linalg.det(g))
        return v[..., None] * np.einsum(
            "...ij,...j->...i", np.linalg.inv(g), grad_fn(pts)
        )

    out = np.zeros(x.shape[:-1])
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        out += (flux(x + e)[..., i] - flux(x - e)[..., i]) / (2.0 * step)
    J = model.jacobian(x)
    g = np.eye(n) + np.einsum("...ai,...aj->...ij", J, J)
    return out / np.sqrt(np.linalg.det(g))


def laplace_logv_fd(model, x, step: float) -> np.ndarray:
    """Central-difference Delta_M log v at x (exact inner derivatives)."""
    return intrinsic_laplacian_fd(
        model, lambda p: grad_logv(model.jacobian(p), model.hessian(p)), x, step
    )


def laplace_inv_slope_fd(model, x, step: float) -> np.ndarray:
    """Central-difference Delta_M (1/v) at x."""

    def grad(p):
        J = model.jacobian(p)
        g = np.eye(model.n) + np.einsum("...ai,...aj->...ij", J, J)
        v = np.sqrt(np.linalg.det(g))
        return -grad_logv(J, model.hessian(p)) / v[..., None]

    return intrinsic_laplacian_fd(model, grad, x, step)


def deltav_inverse(model, x) -> float:
    """Delta_M (1/v) of a minimal model at a point, from its SFF."""
    x = model.check_domain(np.asarray(x, dtype=float))
    return float(laplace_inv_slope_formula(model.jacobian(x), model.hessian(x)))


def laplace_inv_slope_formula(jacobian, hessian) -> np.ndarray:
    """Delta_M (1/v) for a minimal graph from its adapted-frame SFF.

    Delta_M v^{-1} = -v^{-1} (|B|^2
        + sum_{l, i != j} lam_i lam_j h_{i,jl} h_{j,il}
        - sum_{l, i != j} lam_i lam_j h_{i,il} h_{j,jl}).
    """
    J = np.asarray(jacobian, dtype=float)
    h = sff_components(J, hessian)
    _, lam, _, _ = _adapted_svd(J)
    n = lam.shape[-1]
    v = np.exp(0.5 * np.sum(np.log1p(lam**2), axis=-1))
    hn = _pad_normals(h, n)[..., :n, :, :]
    ll = lam[..., :, None] * lam[..., None, :]
    off = 1.0 - np.eye(n)
    b2 = np.einsum("...gij,...gij->...", h, h)
    cross = np.einsum("...ijl,...jil->...ij", hn, hn)
    hiil = np.einsum("...iil->...il", hn)
    square = np.einsum("...il,...jl->...ij", hiil * lam[..., :, None], hiil * lam[..., :, None])
    out = -(
        b2
        + np.einsum("...ij,...ij,ij->...", ll, cross, off)
        - np.einsum("...ij,ij->...", square, off)
    ) / v
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LogVReport:
    """Pointwise comparison of Delta_M log v with its curvature expression."""

    point: np.ndarray
    step: float
    lhs: float
    rhs: float
    b_norm2: float
    margin_sqrt2: float
    margin_lambda: float
    lam_bound: float

    @property
    def gap(self) -> float:
        return self.lhs - self.rhs


def logv_identity(model, x, step: float, lam_bound: float = SQRT2) -> LogVReport:
    """Evaluate both sides of the Delta_M log v identity for a minimal model.

    ``lhs`` is the finite-difference intrinsic Laplacian, ``rhs`` the
    algebraic curvature expression.  ``margin_sqrt2`` is rhs - |B|^2 and
    ``margin_lambda`` is rhs minus the two-dilation lower bound at
    ``lam_bound``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a single point")
    model.check_domain(x)
    J = model.jacobian(x)
    H = model.hessian(x)
    h = sff_components(J, H)
    _, lam, _, _ = _adapted_svd(J)
    rhs = float(delta_logv_rhs(lam, h))
    b2 = float(np.sum(h**2))
    grad2 = grad_logv_tangential_norm2(J, H)
    bound = (1.0 - lam_bound / SQRT2) * b2 + grad2 / model.n
    return LogVReport(
        point=x,
        step=step,
        lhs=float(laplace_logv_fd(model, x, step)),
        rhs=rhs,
        b_norm2=b2,
        margin_sqrt2=rhs - b2,
        margin_lambda=rhs - bound,
        lam_bound=lam_bound,
    )


def curvature_integral(
    model, radius: float, nodes_per_axis: int = 40, vertex_cutoff_frac: float = 1e-3
) -> float:
    """Midpoint-rule integral of |B|^2 over the graph above the ball B_radius.

    Integrates |B|^2 v over {x : cutoff <= |x| <= radius} in the base, the
    cutoff excising a fixed fraction of the radius around possible cone
    vertices.
    """
    n = model.n
    if radius <= 0:
        raise ValueError("radius must be positive")
    h = 2.0 * radius / nodes_per_axis
    axis = -radius + h * (np.arange(nodes_per_axis) + 0.5)
    pts = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    r = np.linalg.norm(pts, axis=1)
    pts = pts[(r <= radius) & (r >= vertex_cutoff_frac * radius)]
    total = 0.0
    for lo, hi in chunk_ranges(pts.shape[0], _CHUNK):
        chunk = pts[lo:hi]
        J = model.jacobian(chunk)
        b2 = sff_norm2(J, model.hessian(chunk))
        g = np.eye(n) + np.einsum("...ai,...aj->...ij", J, J)
        total += float(np.sum(b2 * np.sqrt(np.linalg.det(g))))
    return total * h**n


def curvature_growth_slope(model, radii, nodes_per_axis: int = 40):
    """Log-log least-squares slope of the curvature integral in the radius."""
    radii = np.asarray(radii, dtype=float)
    vals = np.array(
        [curvature_integral(model, r, nodes_per_axis) for r in radii]
    )
    slope = np.polyfit(np.log(radii), np.log(vals), 1)[0]
    return float(slope), vals


def write_diagnostics_csv(model, points, path, step: float = 1e-3,
                          lam_bound: float = SQRT2) -> None:
    """Dump per-point diagnostics as CSV.

    Columns: the base coordinates, slope v, 2-dilation, |B|^2, the two sides
    of the Delta_M log v identity, their gap, and the two-dilation margin.
    """
    points = np.asarray(points, dtype=float)
    n = model.n
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [f"x{i}" for i in range(n)]
            + ["v", "dilation", "B2", "lhs", "rhs", "gap", "margin_lambda"]
        )
        for x in points:
            rep = logv_identity(model, x, step, lam_bound)
            J = model.jacobian(x)
            lam = np.linalg.svd(J, compute_uv=False)
            v = math.prod(math.sqrt(1.0 + s**2) for s in lam)
            dil = two_dilation(np.concatenate([lam, np.zeros(n - lam.size)]))
            row = list(x) + [v, dil, rep.b_norm2, rep.lhs, rep.rhs, rep.gap,
                             rep.margin_lambda]
            writer.writerow([repr(float(c)) for c in row])
