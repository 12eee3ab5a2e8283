"""Finite-difference solver for the minimal surface system on grid patches.

Uniform grids over a box in R^n (n = 2 or 3) carrying m-vector node values
with Dirichlet boundary data on the outermost node layer.  The strong form
sum_{ij} g^{ij} d^2 u^alpha / dx_i dx_j = 0 is discretized with second-order
central differences and solved by damped Newton with a frozen-coefficient
Picard fallback; the divergence form and the weak formulation are evaluated
as independent residual diagnostics.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DEFAULT_TOL = 1e-10


class StencilError(ValueError):
    """A finite-difference stencil would reach outside the grid."""


@dataclass
class GraphPatch:
    """Grid data for a graph u: box in R^n -> R^m.

    ``values`` has shape dims + (m,); the boundary is the outermost node
    layer and holds the Dirichlet data.
    """

    n: int
    m: int
    dims: tuple
    spacing: float
    origin: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.origin = np.asarray(self.origin, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.n not in (2, 3):
            raise ValueError("only n in {2, 3} is supported")
        if len(self.dims) != self.n or any(d < 3 for d in self.dims):
            raise ValueError("need at least 3 nodes per axis")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        if self.values.shape != self.dims + (self.m,):
            raise ValueError(
                f"values shape {self.values.shape} != {self.dims + (self.m,)}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("patch values must be finite")

    @property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.dims, dtype=bool)
        for axis in range(self.n):
            sl = [slice(None)] * self.n
            sl[axis] = 0
            mask[tuple(sl)] = True
            sl[axis] = -1
            mask[tuple(sl)] = True
        return mask

    def node_coords(self) -> np.ndarray:
        """Physical coordinates of all nodes, shape dims + (n,)."""
        axes = [self.origin[k] + self.spacing * np.arange(self.dims[k])
                for k in range(self.n)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    @classmethod
    def from_model(cls, model, origin, dims, spacing) -> "GraphPatch":
        """Sample an analytic model onto a grid (all nodes, not just boundary)."""
        patch = cls(
            model.n,
            model.m,
            tuple(dims),
            spacing,
            origin,
            np.zeros(tuple(dims) + (model.m,)),
        )
        patch.values[:] = model.value(patch.node_coords())
        return patch


def save_patch(patch: GraphPatch, manifest_path) -> None:
    """Write a patch in MGP1 form: JSON manifest + raw little-endian float64."""
    manifest_path = Path(manifest_path)
    data_path = manifest_path.with_suffix(".bin")
    manifest = {
        "format": "MGP1",
        "n": patch.n,
        "m": patch.m,
        "dims": list(patch.dims),
        "spacing": patch.spacing,
        "origin": [float(x) for x in patch.origin],
        "data": data_path.name,
    }
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    data_path.write_bytes(np.ascontiguousarray(patch.values, dtype="<f8").tobytes())


def load_patch(manifest_path) -> GraphPatch:
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format") != "MGP1":
        raise ValueError("not an MGP1 manifest")
    dims = tuple(manifest["dims"])
    m = manifest["m"]
    raw = (manifest_path.parent / manifest["data"]).read_bytes()
    values = np.frombuffer(raw, dtype="<f8").reshape(dims + (m,)).copy()
    return GraphPatch(
        manifest["n"], m, dims, manifest["spacing"], manifest["origin"], values
    )


@dataclass
class MetricSample:
    """Induced metric g = I + Du^T Du, its inverse, and the slope v."""

    g: np.ndarray
    g_inv: np.ndarray
    v: float


def metric_at(jacobian) -> MetricSample:
    J = np.asarray(jacobian, dtype=float)
    g = np.eye(J.shape[1]) + J.T @ J
    return MetricSample(g=g, g_inv=np.linalg.inv(g), v=float(np.sqrt(np.linalg.det(g))))


def residual_strong(jacobian, hessian) -> np.ndarray:
    """Strong residual sum_{ij} g^{ij} H[alpha, i, j]; broadcasts over batches."""
    J = np.asarray(jacobian, dtype=float)
    H = np.asarray(hessian, dtype=float)
    n = J.shape[-1]
    g = np.eye(n) + np.einsum("...ai,...aj->...ij", J, J)
    ginv = np.linalg.inv(g)
    return np.einsum("...ij,...aij->...a", ginv, H)


def _interior_derivatives(patch: GraphPatch):
    """Du (..., m, n) and Hessians (..., m, n, n) at interior nodes (1:-1)."""
    U = patch.values
    h = patch.spacing
    n = patch.n
    inner = tuple(slice(1, -1) for _ in range(n))

    def shift(offset):
        # slice(1+o, -1+o) with the convention that a stop of 0 means None
        sl = []
        for o in offset:
            stop = -1 + o
            sl.append(slice(1 + o, None if stop == 0 else stop))
        return U[tuple(sl)]

    center = U[inner]
    Du = np.empty(center.shape[:-1] + (patch.m, n))
    H = np.empty(center.shape[:-1] + (patch.m, n, n))
    for k in range(n):
        ek = [0] * n
        ek[k] = 1
        up, dn = shift(ek), shift([-o for o in ek])
        Du[..., :, k] = (up - dn) / (2 * h)
        H[..., :, k, k] = (up - 2 * center + dn) / h**2
        for l in range(k + 1, n):
            el = [0] * n
            el[l] = 1
            pp = shift([a + b for a, b in zip(ek, el)])
            pm = shift([a - b for a, b in zip(ek, el)])
            mp = shift([-a + b for a, b in zip(ek, el)])
            mm = shift([-a - b for a, b in zip(ek, el)])
            mixed = (pp - pm - mp + mm) / (4 * h**2)
            H[..., :, k, l] = mixed
            H[..., :, l, k] = mixed
    return Du, H


def strong_residual_field(patch: GraphPatch) -> np.ndarray:
    """Discrete strong residual at all interior nodes, shape inner-dims + (m,)."""
    Du, H = _interior_derivatives(patch)
    return residual_strong(Du, H)


def _flux_field(patch: GraphPatch):
    """F[..., alpha, i] = v g^{ij} d_j u^alpha at interior nodes, plus v."""
    Du, _ = _interior_derivatives(patch)
    n = patch.n
    g = np.eye(n) + np.einsum("...ai,...aj->...ij", Du, Du)
    ginv = np.linalg.inv(g)
    v = np.sqrt(np.linalg.det(g))
    F = v[..., None, None] * np.einsum("...ij,...aj->...ai", ginv, Du)
    return F, v


def residual_divergence(patch: GraphPatch, node) -> np.ndarray:
    """Divergence-form residual (1/v) sum_i d_i (v g^{ij} d_j u^alpha) at a node.

    Second-order central differences; the node must be at least two layers
    away from the boundary.
    """
    node = tuple(int(i) for i in node)
    if len(node) != patch.n:
        raise ValueError("node index arity mismatch")
    for k, i in enumerate(node):
        if i < 2 or i > patch.dims[k] - 3:
            raise StencilError(f"node {node} too close to the boundary")
    F, v = _flux_field(patch)  # indexed by interior nodes (offset by 1)
    c = tuple(i - 1 for i in node)
    out = np.zeros(patch.m)
    for k in range(patch.n):
        up = list(c)
        dn = list(c)
        up[k] += 1
        dn[k] -= 1
        out += (F[tuple(up)][:, k] - F[tuple(dn)][:, k]) / (2 * patch.spacing)
    return out / v[c]


def divergence_residual_field(patch: GraphPatch) -> np.ndarray:
    """Divergence-form residual on the deep interior (2:-2), vectorized."""
    F, v = _flux_field(patch)
    n = patch.n
    deep = tuple(slice(1, -1) for _ in range(n))

    def shift(arr, k, o):
        sl = []
        for ax in range(n):
            if ax == k:
                stop = -1 + o
                sl.append(slice(1 + o, None if stop == 0 else stop))
            else:
                sl.append(slice(1, -1))
        return arr[tuple(sl)]

    out = np.zeros(F[deep].shape[:-1])
    for k in range(n):
        out += (shift(F, k, 1)[..., k] - shift(F, k, -1)[..., k]) / (
            2 * patch.spacing
        )
    return out / v[deep][..., None]


def weak_harmonicity_defect(patch: GraphPatch, alpha: int) -> float:
    """Max weak-form defect of u^alpha over interior multilinear hat functions.

    For each interior node p, integrates sum_{ij} v g^{ij} d_i u^alpha
    d_j phi_p by the midpoint rule per cell (multilinear interpolant
    gradients at cell centers), normalized by the total integral of v.
    """
    U = patch.values[..., alpha]
    n = patch.n
    h = patch.spacing
    corners = [tuple(int(b) for b in np.binary_repr(c, n)) for c in range(2**n)]

    # cell-center gradient of the multilinear interpolant of a nodal field
    def cell_gradient(W):
        grads = []
        for k in range(n):
            g = np.zeros(tuple(d - 1 for d in patch.dims) + W.shape[n:])
            for c in corners:
                sl = tuple(
                    slice(ci, (patch.dims[ax] - 1) + ci) for ax, ci in enumerate(c)
                )
                sign = 1.0 if c[k] == 1 else -1.0
                g += sign * W[sl] / (2 ** (n - 1) * h)
            grads.append(g)
        return np.stack(grads, axis=-1)

    DU = cell_gradient(patch.values)  # (cells..., m, n)
    g = np.eye(n) + np.einsum("...ak,...al->...kl", DU, DU)
    ginv = np.linalg.inv(g)
    v = np.sqrt(np.linalg.det(g))
    flux = np.einsum("...,...ij,...j->...i", v, ginv, DU[..., alpha, :])
    total_v = float(np.sum(v)) * h**n

    # hat at node p: nonzero on the 2^n adjacent cells; its multilinear
    # gradient at each adjacent cell center has magnitude 1/(2h) * 2^{1-n}
    # per axis with sign toward p
    defect = 0.0
    interior = [range(1, d - 1) for d in patch.dims]
    grad_mag = 1.0 / (2 ** (n - 1) * h)
    for p in itertools.product(*interior):
        s = 0.0
        for c in corners:
            cell = tuple(pi - 1 + ci for pi, ci in zip(p, c))
            fc = flux[cell]
            for k in range(n):
                sign = -1.0 if c[k] == 1 else 1.0  # hat decreases away from p
                s += fc[k] * (-sign) * grad_mag
        defect = max(defect, abs(s * h**n))
    return defect / total_v


@dataclass
class SolveReport:
    iterations: int
    residual: float
    converged: bool
    damping_history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residual": self.residual,
            "converged": self.converged,
            "damping_history": self.damping_history,
        }


def _interior_index(dims):
    inner_dims = tuple(d - 2 for d in dims)
    idx = -np.ones(dims, dtype=np.int64)
    inner = tuple(slice(1, -1) for _ in dims)
    idx[inner] = np.arange(int(np.prod(inner_dims))).reshape(inner_dims)
    return idx, inner_dims


def _assemble(patch: GraphPatch, include_gradient_terms: bool):
    """Sparse Jacobian of the interior strong residual w.r.t. interior values."""
    n, m, h = patch.n, patch.m, patch.spacing
    dims = patch.dims
    idx, inner_dims = _interior_index(dims)
    n_nodes = int(np.prod(inner_dims))
    Du, H = _interior_derivatives(patch)
    g = np.eye(n) + np.einsum("...ai,...aj->...ij", Du, Du)
    ginv = np.linalg.inv(g)

    rows, cols, vals = [], [], []
    inner_grid = np.stack(
        np.meshgrid(*[np.arange(1, d - 1) for d in dims], indexing="ij"), axis=-1
    ).reshape(-1, n)
    node_id = idx[tuple(inner_grid.T)]  # 0..n_nodes-1 in C order

    def add(offset, coeff_flat, alpha, beta):
        """coeff_flat: per-interior-node coefficient for unknown (node+offset, beta)."""
        nb = inner_grid + np.asarray(offset)
        ok = np.all((nb >= 1) & (nb < np.asarray(dims) - 1), axis=1)
        if not np.any(ok):
            return
        nb_id = idx[tuple(nb[ok].T)]
        rows.append(node_id[ok] * m + alpha)
        cols.append(nb_id * m + beta)
        vals.append(coeff_flat[ok])

    # principal part: sum_{kl} g^{kl} D2_{kl}
    for alpha in range(m):
        center = np.zeros(n_nodes)
        for k in range(n):
            gkk = ginv[..., k, k].reshape(-1)
            ek = np.zeros(n, dtype=int)
            ek[k] = 1
            add(ek, gkk / h**2, alpha, alpha)
            add(-ek, gkk / h**2, alpha, alpha)
            center -= 2.0 * gkk / h**2
            for l in range(k + 1, n):
                gkl = ginv[..., k, l].reshape(-1)
                el = np.zeros(n, dtype=int)
                el[l] = 1
                for sk in (1, -1):
                    for sl_ in (1, -1):
                        add(
                            sk * ek + sl_ * el,
                            sk * sl_ * 2.0 * gkl / (4 * h**2),
                            alpha,
                            alpha,
                        )
        add(np.zeros(n, dtype=int), center, alpha, alpha)

    if include_gradient_terms:
        # coefficient of d(Du^beta_r): -2 (g^{-1} H^alpha g^{-1} Du^beta)_r
        w = np.einsum("...ij,...aj->...ai", ginv, Du)  # (..., beta, r)
        coeff = -2.0 * np.einsum("...ri,...aij,...bj->...abr", ginv, H, w)
        coeff = coeff.reshape(n_nodes, m, m, n)
        for alpha in range(m):
            for beta in range(m):
                for r in range(n):
                    er = np.zeros(n, dtype=int)
                    er[r] = 1
                    c = coeff[:, alpha, beta, r]
                    add(er, c / (2 * h), alpha, beta)
                    add(-er, -c / (2 * h), alpha, beta)

    J = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_nodes * m, n_nodes * m),
    ).tocsc()
    return J


def harmonic_initial_guess(patch: GraphPatch) -> None:
    """Fill the interior with the discrete harmonic extension of the boundary.

    Exact for affine boundary data, like the multilinear interpolant, and
    available in one deterministic sparse solve for any n.
    """
    flat = model_free_laplace_solve(patch)
    inner = tuple(slice(1, -1) for _ in range(patch.n))
    patch.values[inner] = flat


def model_free_laplace_solve(patch: GraphPatch) -> np.ndarray:
    n, m, h = patch.n, patch.m, patch.spacing
    dims = patch.dims
    idx, inner_dims = _interior_index(dims)
    n_nodes = int(np.prod(inner_dims))
    inner_grid = np.stack(
        np.meshgrid(*[np.arange(1, d - 1) for d in dims], indexing="ij"), axis=-1
    ).reshape(-1, n)
    node_id = idx[tuple(inner_grid.T)]
    rows, cols, vals = [], [], []
    rhs = np.zeros((n_nodes, m))
    rows.append(node_id)
    cols.append(node_id)
    vals.append(np.full(n_nodes, -2.0 * n))
    for k in range(n):
        for s in (1, -1):
            nb = inner_grid.copy()
            nb[:, k] += s
            interior_nb = np.all((nb >= 1) & (nb < np.asarray(dims) - 1), axis=1)
            nb_id = idx[tuple(nb[interior_nb].T)]
            rows.append(node_id[interior_nb])
            cols.append(nb_id)
            vals.append(np.ones(nb_id.size))
            bd = ~interior_nb
            if np.any(bd):
                rhs[node_id[bd]] -= patch.values[tuple(nb[bd].T)]
    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_nodes, n_nodes),
    ).tocsc()
    sol = spla.spsolve(A, rhs)
    return sol.reshape(inner_dims + (m,))


def solve(
    patch: GraphPatch,
    tol: float = DEFAULT_TOL,
    max_iter: int = 50,
    initial_guess: bool = True,
) -> SolveReport:
    """Damped-Newton solve of the discrete minimal surface system in place.

    Boundary values are kept fixed; interior values are updated until the
    strong residual sup-norm drops below ``tol``.  If a full Newton step
    increases the residual it is halved up to 30 times, then a
    frozen-coefficient Picard step is tried.  Divergence (residual above 10x
    the best for 20 consecutive iterations) aborts with the best iterate
    restored.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if initial_guess:
        harmonic_initial_guess(patch)
    inner = tuple(slice(1, -1) for _ in range(patch.n))

    def resid():
        return strong_residual_field(patch)

    R = resid()
    res_norm = float(np.max(np.abs(R))) if R.size else 0.0
    best_vals = patch.values.copy()
    best_norm = res_norm
    history = []
    bad_streak = 0
    it = 0
    while res_norm > tol and it < max_iter:
        it += 1
        newton = _assemble(patch, include_gradient_terms=True)
        delta = spla.splu(newton).solve(-R.reshape(-1)).reshape(R.shape)
        step = 1.0
        base = patch.values[inner].copy()
        accepted = False
        for _ in range(31):
            patch.values[inner] = base + step * delta
            trial = resid()
            trial_norm = float(np.max(np.abs(trial)))
            if trial_norm < res_norm:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # Picard fallback: freeze coefficients, drop the gradient terms
            patch.values[inner] = base
            picard = _assemble(patch, include_gradient_terms=False)
            delta = spla.splu(picard).solve(-R.reshape(-1)).reshape(R.shape)
            patch.values[inner] = base + delta
            trial = resid()
            trial_norm = float(np.max(np.abs(trial)))
            step = -1.0  # marks a Picard step in the history
        R, res_norm = trial, trial_norm
        history.append(step)
        if res_norm < best_norm:
            best_norm = res_norm
            best_vals = patch.values.copy()
            bad_streak = 0
        elif res_norm > 10.0 * best_norm:
            bad_streak += 1
            if bad_streak >= 20:
                patch.values[:] = best_vals
                return SolveReport(it, best_norm, False, history)
        else:
            bad_streak = 0
    if res_norm > best_norm:
        patch.values[:] = best_vals
        res_norm = best_norm
    return SolveReport(it, res_norm, res_norm <= tol, history)
