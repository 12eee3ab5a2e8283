"""Pointwise invariants of n-planes and graph Jacobians in R^{n+m}.

Everything here is a pure function of an m x n Jacobian matrix Du (entry
(alpha, i) = d u^alpha / d x_i) or of orthonormal plane bases.  The singular
values lambda_1 >= ... >= lambda_n of Du are the tangents of the Jordan
angles between the graph plane and the base n-plane; the slope
v = prod sqrt(1 + lambda_i^2) and the 2-dilation lambda_1 * lambda_2 are the
two quantities every other module is built on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORTHONORMALITY_TOL = 1e-12


class InvalidInputError(ValueError):
    """Raised for non-finite or malformed numeric input."""


class DimensionMismatchError(ValueError):
    """Raised when two plane bases live in incompatible spaces."""


def singular_spectrum(jacobian) -> np.ndarray:
    """Singular values of an m x n Jacobian, length n, sorted descending.

    The squared values are the eigenvalues of Du^T Du; when m < n the
    spectrum is padded with zeros.
    """
    J = np.asarray(jacobian, dtype=float)
    if J.ndim != 2 or J.shape[0] < 1 or J.shape[1] < 1:
        raise InvalidInputError(f"expected an m x n matrix, got shape {J.shape}")
    if not np.all(np.isfinite(J)):
        raise InvalidInputError("Jacobian has non-finite entries")
    m, n = J.shape
    s = np.linalg.svd(J, compute_uv=False)
    if s.size < n:
        s = np.concatenate([s, np.zeros(n - s.size)])
    return np.sort(s)[::-1]


def slope(spectrum) -> float:
    """Slope v = prod_i sqrt(1 + lambda_i^2) = sqrt(det(I + Du^T Du)) >= 1."""
    lam = _as_spectrum(spectrum)
    # log(1 + lam^2) piecewise so that lam^2 never overflows
    big = lam > 1e150
    logs = np.where(big, 2.0 * np.log(np.where(big, lam, 1.0)),
                    np.log1p(np.where(big, 0.0, lam) ** 2))
    return float(np.exp(0.5 * np.sum(logs)))


def two_dilation(spectrum) -> float:
    """2-dilation max_{i != j} lambda_i lambda_j = lambda_1 lambda_2.

    For n = 1 there is no pair, and the value is 0 by convention.
    """
    lam = _as_spectrum(spectrum)
    if lam.size < 2:
        return 0.0
    return float(lam[0] * lam[1])


def bernstein_condition(spectrum) -> bool:
    """Whether (lambda_1 lambda_2)^2 <= 2 Lip^2 / |Lip^2 - 1| with Lip = lambda_1.

    The right-hand side is treated as +inf when lambda_1 = 1.
    """
    lam = _as_spectrum(spectrum)
    lip2 = float(lam[0]) ** 2
    dil2 = two_dilation(lam) ** 2
    denom = abs(lip2 - 1.0)
    if denom == 0.0:
        return True
    return dil2 <= 2.0 * lip2 / denom


def _as_spectrum(spectrum) -> np.ndarray:
    lam = np.asarray(spectrum, dtype=float).ravel()
    if lam.size == 0 or not np.all(np.isfinite(lam)):
        raise InvalidInputError("spectrum must be a nonempty finite sequence")
    if np.any(lam < -1e-15):
        raise InvalidInputError("spectrum entries must be nonnegative")
    return np.abs(lam)


@dataclass(frozen=True)
class PlaneBasis:
    """An oriented n-plane in R^{ambient} given by n orthonormal row vectors."""

    vectors: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.vectors, dtype=float)
        if V.ndim != 2:
            raise InvalidInputError("basis must be an n x ambient matrix")
        gram = V @ V.T
        if np.max(np.abs(gram - np.eye(V.shape[0]))) > ORTHONORMALITY_TOL:
            raise InvalidInputError("basis vectors are not orthonormal to 1e-12")
        object.__setattr__(self, "vectors", V)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def ambient(self) -> int:
        return self.vectors.shape[1]

    @classmethod
    def coordinate(cls, dim: int, ambient: int, axes=None) -> "PlaneBasis":
        """Span of coordinate axes (default: the first ``dim``)."""
        if axes is None:
            axes = range(dim)
        V = np.zeros((dim, ambient))
        for row, axis in enumerate(axes):
            V[row, axis] = 1.0
        return cls(V)


def graph_plane_basis(jacobian) -> PlaneBasis:
    """Orthonormal oriented basis of the graph plane of a Jacobian.

    The plane is spanned by f_i = E_i + sum_alpha (Du)_{alpha i} E_{n+alpha};
    the basis is orthonormalized so the associated unit n-vector pairs
    positively with E_1 ^ ... ^ E_n (its inner product with the base plane is
    1/v).
    """
    J = np.asarray(jacobian, dtype=float)
    if not np.all(np.isfinite(J)):
        raise InvalidInputError("Jacobian has non-finite entries")
    m, n = J.shape
    span = np.vstack([np.eye(n), J])  # (n+m) x n, columns span the plane
    Q, R = np.linalg.qr(span)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return PlaneBasis((Q * signs).T)


def _overlap_matrix(P: PlaneBasis, Q: PlaneBasis) -> np.ndarray:
    if P.dim != Q.dim or P.ambient != Q.ambient:
        raise DimensionMismatchError(
            f"planes of shape {P.vectors.shape} and {Q.vectors.shape}"
        )
    return P.vectors @ Q.vectors.T


def jordan_angles(P: PlaneBasis, Q: PlaneBasis) -> np.ndarray:
    """Jordan angles theta_i in [0, pi/2] between two n-planes, descending.

    cos(theta_i) are the singular values of the overlap matrix
    W = (<e_i, f_j>), clamped into [0, 1].
    """
    W = _overlap_matrix(P, Q)
    mu = np.clip(np.linalg.svd(W, compute_uv=False), 0.0, 1.0)
    return np.sort(np.arccos(mu))[::-1]


def plane_inner(P: PlaneBasis, Q: PlaneBasis) -> float:
    """Signed inner product <e_1^...^e_n, f_1^...^f_n> = det W."""
    W = _overlap_matrix(P, Q)
    return float(np.linalg.det(W))


def grassmann_distance(P: PlaneBasis, Q: PlaneBasis) -> float:
    """Distance sqrt(sum_i theta_i^2) between two n-planes."""
    return float(np.sqrt(np.sum(jordan_angles(P, Q) ** 2)))
