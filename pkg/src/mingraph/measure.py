"""Graph-volume quadrature, density ratios, and blow-down rescaling.

The n-volume of a graph piece inside an ambient ball is the integral of the
slope v over the base region where (x, u(x)) lies in the ball.  Since the
ambient distance dominates the base distance, the integration box can be
taken as the projected ball; a midpoint rule with one coarser level gives
the error estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mingraph.models import AnalyticModel
from mingraph.util import chunk_ranges, run_chunks, unit_ball_volume

VERTEX_CUTOFF_FRAC = 1e-3
_CHUNK = 200000


class PredicateViolationError(ValueError):
    """A pointwise hypothesis fails; carries a witness point."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = None if witness is None else np.asarray(witness, dtype=float)


@dataclass(frozen=True)
class VolumeReport:
    """Hausdorff n-volume of a graph piece inside an ambient ball."""

    region: str
    value: float
    resolution: int
    est_error: float

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("volume must be nonnegative")


@dataclass(frozen=True)
class DensityProfile:
    """Volume ratios mu(B_rho) / (omega_n rho^n) at increasing radii."""

    center: np.ndarray
    radii: np.ndarray
    ratios: np.ndarray
    est_errors: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.radii) <= 0):
            raise ValueError("radii must be strictly increasing")
        if not np.all(np.isfinite(self.ratios)):
            raise ValueError("ratios must be finite")

    @property
    def monotonicity_margin(self) -> float:
        """min over consecutive radii of ratio[k+1] - ratio[k]."""
        return float(np.min(np.diff(self.ratios)))


def _volume_once(model: AnalyticModel, center, radius, nodes, cutoff, threads):
    """Midpoint-rule integral of v over the masked base grid."""
    n = model.n
    c_base = center[:n]
    h = 2.0 * radius / nodes
    axis = -radius + h * (np.arange(nodes) + 0.5)
    pts = np.stack(
        np.meshgrid(*[c_base[k] + axis for k in range(n)], indexing="ij"), axis=-1
    ).reshape(-1, n)

    def piece(rng):
        lo, hi = rng
        chunk = pts[lo:hi]
        keep = np.asarray(model.in_domain(chunk))
        if cutoff > 0.0:
            keep = keep & (np.linalg.norm(chunk - c_base, axis=-1) >= cutoff)
        chunk = chunk[keep]
        if chunk.size == 0:
            return 0.0
        amb = np.concatenate([chunk, model.value(chunk)], axis=-1)
        chunk = chunk[np.linalg.norm(amb - center, axis=-1) <= radius]
        if chunk.size == 0:
            return 0.0
        J = model.jacobian(chunk)
        g = np.eye(n) + np.einsum("...ai,...aj->...ij", J, J)
        return float(np.sum(np.sqrt(np.linalg.det(g))))

    parts = run_chunks(piece, chunk_ranges(pts.shape[0], _CHUNK), threads)
    # pairwise reduction keeps the sum independent of chunk sizes' grouping
    vals = list(parts)
    while len(vals) > 1:
        vals = [sum(vals[i : i + 2]) for i in range(0, len(vals), 2)]
    return (vals[0] if vals else 0.0) * h**n


def graph_volume(
    model: AnalyticModel,
    center,
    radius: float,
    resolution: int = 64,
    threads: int = 1,
) -> VolumeReport:
    """H^n of the graph inside the ambient ball B_radius(center).

    ``center`` is an ambient point of length n + m.  The integration box is
    the projected ball around center[:n]; if the base center is outside the
    model domain (a cone vertex) a ball of radius 1e-3 * radius is excised
    and its largest possible contribution is folded into the error estimate.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if resolution < 32:
        raise ValueError("need at least 32 nodes per axis")
    center = np.asarray(center, dtype=float)
    n = model.n
    if center.shape != (n + model.m,):
        raise ValueError(f"center must be an ambient point of length {n + model.m}")
    vertex = not bool(np.asarray(model.in_domain(center[:n])))
    cutoff = VERTEX_CUTOFF_FRAC * radius if vertex else 0.0
    coarse = _volume_once(model, center, radius, resolution // 2, cutoff, threads)
    fine = _volume_once(model, center, radius, resolution, cutoff, threads)
    err = abs(fine - coarse)
    if vertex:
        # the excised piece has volume at most sup v * omega_n * cutoff^n;
        # bound sup v by the largest slope on a small ring around the vertex
        ring = center[:n] + 2.0 * cutoff * _unit_ring(n)
        ok = np.asarray(model.in_domain(ring))
        if np.any(ok):
            J = model.jacobian(ring[ok])
            g = np.eye(n) + np.einsum("...ai,...aj->...ij", J, J)
            vmax = float(np.max(np.sqrt(np.linalg.det(g))))
            err += vmax * unit_ball_volume(n) * cutoff**n
    return VolumeReport(
        region=f"ball(r={radius!r})", value=fine, resolution=resolution, est_error=err
    )


def _unit_ring(n: int) -> np.ndarray:
    """A deterministic spread of unit directions in R^n."""
    rng = np.random.default_rng(0)
    d = rng.standard_normal((64, n))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def density_profile(
    model: AnalyticModel,
    center,
    radii,
    resolution: int = 64,
    threads: int = 1,
) -> DensityProfile:
    """Normalized density ratios of the graph around an on-graph center."""
    center = np.asarray(center, dtype=float)
    radii = np.asarray(radii, dtype=float)
    n = model.n
    base = center[:n]
    if bool(np.asarray(model.in_domain(base))):
        if np.linalg.norm(model.graph_point(base) - center) > 1e-9 * (
            1.0 + np.linalg.norm(center)
        ):
            raise ValueError("center does not lie on the graph")
    wn = unit_ball_volume(n)
    ratios, errors = [], []
    for rho in radii:
        rep = graph_volume(model, center, float(rho), resolution, threads)
        ratios.append(rep.value / (wn * rho**n))
        errors.append(rep.est_error / (wn * rho**n))
    return DensityProfile(
        center=center,
        radii=radii,
        ratios=np.array(ratios),
        est_errors=np.array(errors),
    )


@dataclass(frozen=True)
class GrowthCheck:
    """Empirical volume-growth constant under a 2-dilation bound."""

    ok: bool
    constant: float
    ratios: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "constant": self.constant,
            "ratios": [float(r) for r in self.ratios],
        }


def volume_growth_bound_check(
    model: AnalyticModel,
    lam_bound: float,
    radii,
    resolution: int = 64,
    threads: int = 1,
) -> GrowthCheck:
    """Check Euclidean-type volume growth under a 2-dilation bound.

    First verifies two_dilation <= lam_bound on a grid sample of the largest
    integration box (raising PredicateViolationError with a witness point
    when it fails, the expected outcome for graphs of unbounded dilation),
    then reports sup over radii of volume / (omega_n rho^n sqrt(m)).  The
    check passes when that stays essentially level (last/first <= 1.5).
    """
    radii = np.sort(np.asarray(radii, dtype=float))
    if radii.size == 0 or radii[0] <= 0:
        raise ValueError("need positive radii")
    n = model.n
    rmax = float(radii[-1])
    axis = np.linspace(-rmax, rmax, 17)
    pts = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    pts = pts[np.asarray(model.in_domain(pts))]
    J = model.jacobian(pts)
    s = np.linalg.svd(J, compute_uv=False)
    dil = s[:, 0] * s[:, 1] if s.shape[1] >= 2 else np.zeros(s.shape[0])
    bad = dil > lam_bound + 1e-12
    if np.any(bad):
        w = pts[np.argmax(dil)]
        raise PredicateViolationError(
            f"2-dilation {np.max(dil):.6g} exceeds {lam_bound:.6g} at {w.tolist()}",
            witness=w,
        )
    center = np.zeros(n + model.m)
    if bool(np.asarray(model.in_domain(center[:n]))):
        center = model.graph_point(center[:n])
    wn = unit_ball_volume(n)
    ratios = np.array(
        [
            graph_volume(model, center, float(r), resolution, threads).value
            / (wn * r**n * np.sqrt(model.m))
            for r in radii
        ]
    )
    ok = bool(np.all(np.isfinite(ratios)) and ratios[-1] <= 1.5 * ratios[0])
    return GrowthCheck(ok=ok, constant=float(np.max(ratios)), ratios=ratios)


def blow_down(model: AnalyticModel, scale: float) -> AnalyticModel:
    """The rescaled graph x -> u(r x) / r; identity for 1-homogeneous models."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    r = float(scale)
    return AnalyticModel(
        label=f"{model.label}/blowdown:{r!r}",
        n=model.n,
        m=model.m,
        value=lambda x: model.value(np.asarray(x, dtype=float) * r) / r,
        jacobian=lambda x: model.jacobian(np.asarray(x, dtype=float) * r),
        hessian=lambda x: model.hessian(np.asarray(x, dtype=float) * r) * r,
        in_domain=lambda x: model.in_domain(np.asarray(x, dtype=float) * r),
    )


def max_slope_on_box(model: AnalyticModel, half_width: float, nodes: int = 33) -> float:
    """Max slope v on a grid over [-half_width, half_width]^n (domain points).

    A divergent value along a sequence of blow-downs is the quasi-cylindrical
    indicator: the rescaled graphs become vertical somewhere.
    """
    n = model.n
    axis = np.linspace(-half_width, half_width, nodes)
    pts = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    pts = pts[np.asarray(model.in_domain(pts))]
    J = model.jacobian(pts)
    g = np.eye(n) + np.einsum("...ai,...aj->...ij", J, J)
    return float(np.max(np.sqrt(np.linalg.det(g))))
