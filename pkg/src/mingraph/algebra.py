"""Brute-force verification of the algebraic inequalities behind the theory.

Grid scans for the cubic inequality phi(mu1, mu2, mu3) >= 0 under the
pairwise-product constraint and its Lambda-quantified variant, the 3x3
Hessian determinant in closed form, the right-hand side of the
Delta log v identity together with its three-way regrouping, and seeded
random samplers for the two pointwise differential inequalities and the
xi_11 concentration estimate.

All scans and samplers take explicit seeds and produce identical reports for
identical inputs, independent of the thread count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from mingraph.util import chunk_ranges, run_chunks

NONNEG_TOL = 1e-9  # slack on all nonnegativity assertions
CONSTRAINT_SLACK = 1e-12  # keeps exact equality loci admissible under rounding
SQRT2 = np.sqrt(2.0)

_CHUNK = 20000


class SamplingFailureError(RuntimeError):
    """Rejection sampler acceptance rate collapsed below 1e-6."""


@dataclass
class ScanReport:
    """Outcome of a grid scan or sampling run.

    ``violations`` counts assertion failures (0 on success); ``min_value`` is
    the smallest inequality margin seen, attained at ``argmin``.
    """

    check: str
    params: dict
    samples: int
    min_value: float
    argmin: list
    violations: int
    seed: int | None = None
    max_value: float | None = None
    notes: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "params": self.params,
            "samples": self.samples,
            "min_value": self.min_value,
            "argmin": list(self.argmin),
            "violations": self.violations,
            "seed": self.seed,
            "max_value": self.max_value,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def phi(mu1: float, mu2: float, mu3: float) -> float:
    """phi = 4 + mu1 mu2 mu3 - mu1 mu2 - mu1 mu3 - mu2 mu3."""
    return 4.0 + mu1 * mu2 * mu3 - mu1 * mu2 - mu1 * mu3 - mu2 * mu3


def hessf_matrix(li: float, lj: float, lk: float) -> np.ndarray:
    """The 3x3 quadratic-form matrix with diagonal 2 and off-diagonal products."""
    return np.array(
        [
            [2.0, li * lj, li * lk],
            [li * lj, 2.0, lj * lk],
            [li * lk, lj * lk, 2.0],
        ]
    )


def hessf_det(li: float, lj: float, lk: float) -> float:
    """det of :func:`hessf_matrix` in closed form."""
    a, b, c = li * li, lj * lj, lk * lk
    return 8.0 + 2.0 * a * b * c - 2.0 * a * b - 2.0 * a * c - 2.0 * b * c


def _pairwise_limit(mu_max_entry, tol=CONSTRAINT_SLACK):
    """Sharp pairwise bound 2 + 2/(max_k mu_k - 1); +inf when max_k mu_k <= 1.

    Below max mu = 1 the raw expression has a negative denominator; the region
    is treated as unconstrained (all products there are <= 1 anyway) and
    flagged in the report.
    """
    limit = np.full_like(mu_max_entry, np.inf, dtype=float)
    above = mu_max_entry > 1.0 + tol
    limit[above] = 2.0 + 2.0 / (mu_max_entry[above] - 1.0)
    return limit


def _argmin_key(vals, m1, p2, p3):
    """Deterministic argmin representative for a grid slice.

    Values are quantized at 1e-12 so rounding noise on an equality locus
    does not pick an arbitrary point; ties go to the lexicographically
    smallest descending-sorted triple.  Returns a comparable key
    (quantized value, sorted triple, triple).
    """
    q = np.round(vals, 12)
    idx = np.flatnonzero(q == np.min(q))
    triples = np.stack([np.full(idx.size, m1), p2[idx], p3[idx]], axis=1)
    srt = -np.sort(-triples, axis=1)
    first = int(np.lexsort((srt[:, 2], srt[:, 1], srt[:, 0]))[0])
    k = int(idx[first])
    s = srt[first]
    return (
        float(q[k]),
        (float(s[0]), float(s[1]), float(s[2])),
        (float(m1), float(p2[k]), float(p3[k])),
    )


def scan_mu123(
    grid_step: float,
    mu_max: float = 4.0,
    tol: float = NONNEG_TOL,
    constraint: str = "sharp",
    threads: int = 1,
) -> ScanReport:
    """Exhaustive grid scan of phi >= 0 on the constrained region.

    Enumerates all triples on a uniform grid over [0, mu_max]^3 that satisfy
    the pairwise-product constraint (``constraint="sharp"``), asserts
    phi >= -tol on each, and additionally asserts that every admissible
    triple has all pairwise products <= 4 + tol.  With
    ``constraint="pairwise_le_4"`` the hypothesis is deliberately weakened to
    mu_i mu_j <= 4; violations are then expected and demonstrate sharpness.
    """
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    if constraint not in ("sharp", "pairwise_le_4"):
        raise ValueError(f"unknown constraint '{constraint}'")
    k = max(1, int(round(mu_max / grid_step)))
    grid = np.arange(k + 1) * (mu_max / k)
    m2, m3 = np.meshgrid(grid, grid, indexing="ij")
    m2, m3 = m2.ravel(), m3.ravel()

    def scan_slice(rng):
        lo, hi = rng
        true_min = np.inf
        best_key = (np.inf, (np.inf,) * 3, (0.0, 0.0, 0.0))
        worst_pair = -np.inf
        n_adm = 0
        n_viol = 0
        n_pair_viol = 0
        n_low = 0
        for m1 in grid[lo:hi]:
            mmax = np.maximum(m1, np.maximum(m2, m3))
            pairmax = np.maximum(m1 * m2, np.maximum(m1 * m3, m2 * m3))
            if constraint == "sharp":
                adm = pairmax <= _pairwise_limit(mmax) + CONSTRAINT_SLACK
            else:
                adm = pairmax <= 4.0 + CONSTRAINT_SLACK
            if not np.any(adm):
                continue
            p2, p3, pp = m2[adm], m3[adm], pairmax[adm]
            vals = 4.0 + m1 * p2 * p3 - m1 * p2 - m1 * p3 - p2 * p3
            n_adm += vals.size
            n_low += int(np.count_nonzero(np.maximum(m1, np.maximum(p2, p3)) <= 1.0))
            n_viol += int(np.count_nonzero(vals < -tol))
            if constraint == "sharp":
                n_pair_viol += int(np.count_nonzero(pp > 4.0 + tol))
            true_min = min(true_min, float(np.min(vals)))
            cand = _argmin_key(vals, m1, p2, p3)
            if cand < best_key:
                best_key = cand
            worst_pair = max(worst_pair, float(np.max(pp)))
        return (true_min, best_key), n_adm, n_viol, n_pair_viol, n_low, worst_pair

    results = run_chunks(scan_slice, chunk_ranges(grid.size, 16), threads)
    best = (
        min(r[0][0] for r in results),
        min(r[0][1] for r in results)[2],
    )
    n_adm = sum(r[1] for r in results)
    n_viol = sum(r[2] for r in results)
    n_pair_viol = sum(r[3] for r in results)
    n_low = sum(r[4] for r in results)
    worst_pair = max(r[5] for r in results)
    return ScanReport(
        check="mu123" if constraint == "sharp" else "mu123-weakened",
        params={
            "grid_step": mu_max / k,
            "mu_max": mu_max,
            "tol": tol,
            "constraint": constraint,
        },
        samples=n_adm,
        min_value=best[0],
        argmin=list(best[1]),
        violations=n_viol + n_pair_viol,
        notes={
            "phi_violations": n_viol,
            "pairwise_gt4_violations": n_pair_viol,
            "unconstrained_low_region_triples": n_low,
            "max_pairwise_product": worst_pair,
        },
    )


def scan_mu123_lambda(
    lam: float,
    grid_step: float,
    mu_max: float = 4.0,
    tol: float = NONNEG_TOL,
    threads: int = 1,
) -> ScanReport:
    """Grid check of phi >= (2 - sqrt(2)) (2 - Lambda^2) under pairwise <= Lambda^2."""
    if not 0.0 < lam <= SQRT2 + 1e-12:
        raise ValueError("Lambda must lie in (0, sqrt(2)]")
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    bound = (2.0 - SQRT2) * (2.0 - lam * lam)
    k = max(1, int(round(mu_max / grid_step)))
    grid = np.arange(k + 1) * (mu_max / k)
    m2, m3 = np.meshgrid(grid, grid, indexing="ij")
    m2, m3 = m2.ravel(), m3.ravel()
    lam2 = lam * lam

    def scan_slice(rng):
        lo, hi = rng
        true_min = np.inf
        best_key = (np.inf, (np.inf,) * 3, (0.0, 0.0, 0.0))
        n_adm = 0
        n_viol = 0
        for m1 in grid[lo:hi]:
            pairmax = np.maximum(m1 * m2, np.maximum(m1 * m3, m2 * m3))
            adm = pairmax <= lam2 + CONSTRAINT_SLACK
            if not np.any(adm):
                continue
            p2, p3 = m2[adm], m3[adm]
            vals = 4.0 + m1 * p2 * p3 - m1 * p2 - m1 * p3 - p2 * p3
            n_adm += vals.size
            n_viol += int(np.count_nonzero(vals < bound - tol))
            true_min = min(true_min, float(np.min(vals)))
            cand = _argmin_key(vals, m1, p2, p3)
            if cand < best_key:
                best_key = cand
        return (true_min, best_key), n_adm, n_viol

    results = run_chunks(scan_slice, chunk_ranges(grid.size, 16), threads)
    best = (
        min(r[0][0] for r in results),
        min(r[0][1] for r in results)[2],
    )
    return ScanReport(
        check="mu123-lambda",
        params={"Lambda": lam, "grid_step": mu_max / k, "mu_max": mu_max, "tol": tol},
        samples=sum(r[1] for r in results),
        min_value=best[0],
        argmin=list(best[1]),
        violations=sum(r[2] for r in results),
        notes={"bound": bound},
    )


def _pad_h(lam, h):
    lam = np.asarray(lam, dtype=float)
    h = np.asarray(h, dtype=float)
    single = h.ndim == 3
    if single:
        lam = lam[None]
        h = h[None]
    b, m, n, n2 = h.shape
    if n != n2 or lam.shape != (b, n):
        raise ValueError(f"shape mismatch: lam {lam.shape}, h {h.shape}")
    if np.max(np.abs(h - np.swapaxes(h, -1, -2))) != 0.0:
        raise ValueError("h must be exactly symmetric in its last two indices")
    p = max(m, n)
    if p > m:  # convention: h_{alpha, . .} = 0 for alpha > m
        h = np.concatenate([h, np.zeros((b, p - m, n, n))], axis=1)
    return lam, h, single, m, n


def delta_logv_rhs(lam, h, return_parts: bool = False):
    """Right-hand side of the Delta log v identity for spectrum lam and SFF h.

    rhs = |B|^2 + sum_{i,j} lam_i^2 h_{i,ij}^2
        + sum_{l, i != j} lam_i lam_j h_{i,jl} h_{j,il}.

    Accepts a single (lam (n,), h (m,n,n)) pair or batches with a leading
    axis.  With ``return_parts`` also returns the four-term regrouping
    (normal-excess, diagonal, ordered-pair, distinct-triple); the two always
    agree to rounding and that agreement is asserted.
    """
    lam, h, single, m, n = _pad_h(lam, h)
    hn = h[:, :n]  # tangent-indexed block h_{i, jl}, i <= n
    lam2 = lam**2
    ll = lam[:, :, None] * lam[:, None, :]
    off = 1.0 - np.eye(n)

    b2 = np.einsum("baij,baij->b", h, h)
    hiil = np.einsum("biil->bil", hn)  # h_{i, il}
    term2 = np.einsum("bi,bil,bil->b", lam2, hiil, hiil)
    cross = np.einsum("bijl,bjil->bij", hn, hn)  # sum_l h_{i,jl} h_{j,il}
    term3 = np.einsum("bij,bij,ij->b", ll, cross, off)
    rhs = b2 + term2 + term3

    diag = np.einsum("biii->bi", hn)  # h_{i, ii}
    part_normal = np.einsum("baij,baij->b", h[:, n:], h[:, n:])
    part_diag = np.einsum("bi,bi->b", 1.0 + lam2, diag**2)
    hiij = np.einsum("biij->bij", hn)  # h_{i, ij} = h_{i, ji}
    hjii = np.einsum("bjii->bji", hn).transpose(0, 2, 1)  # (b, i, j) = h_{j, ii}
    part_pair = np.einsum(
        "ij,bij->b",
        off,
        (2.0 + lam2[:, :, None]) * hiij**2 + hjii**2 + 2.0 * ll * hiij * hjii,
    )
    idx = np.indices((n, n, n))
    distinct = (
        (idx[0] != idx[1]) & (idx[1] != idx[2]) & (idx[0] != idx[2])
    ).astype(float)
    part_tri = np.einsum("kij,bkij->b", distinct, hn**2) + np.einsum(
        "ijk,bij,bijk,bjik->b", distinct, ll, hn, hn
    )
    parts = np.stack([part_normal, part_diag, part_pair, part_tri], axis=-1)
    total = parts.sum(axis=-1)
    scale = 1.0 + np.abs(rhs)
    if np.max(np.abs(total - rhs) / scale) > 1e-10:
        raise AssertionError("regrouped decomposition disagrees with direct value")
    if single:
        rhs = float(rhs[0])
        parts = parts[0]
    if return_parts:
        return rhs, parts
    return rhs


def sqrt2_lower_bound(lam, h) -> np.ndarray:
    """Conclusion bound sum_{a>n} h^2 + sum_i (1 + lam_i^2) h_{i,ii}^2."""
    lam, h, single, m, n = _pad_h(lam, h)
    diag = np.einsum("biii->bi", h[:, :n])
    out = np.einsum("baij,baij->b", h[:, n:], h[:, n:]) + np.einsum(
        "bi,bi->b", 1.0 + lam**2, diag**2
    )
    return float(out[0]) if single else out


def lambda_lower_bound(lam, h, lam_bound: float) -> np.ndarray:
    """Bound (1 - Lambda/sqrt(2)) |B|^2 + (1/n) sum_j (sum_i lam_i h_{i,ij})^2."""
    lam, h, single, m, n = _pad_h(lam, h)
    b2 = np.einsum("baij,baij->b", h, h)
    grad = np.einsum("bi,biij->bj", lam, h[:, :n])  # sum_i lam_i h_{i,ij}
    out = (1.0 - lam_bound / SQRT2) * b2 + np.einsum("bj,bj->b", grad, grad) / n
    return float(out[0]) if single else out


def _sample_h(rng, count: int, m: int, n: int) -> np.ndarray:
    h = rng.uniform(-1.0, 1.0, size=(count, m, n, n))
    return 0.5 * (h + np.swapaxes(h, -1, -2))


def _sample_spectra(rng, count: int, n: int, accept) -> np.ndarray:
    """Sorted-descending spectra, uniform on [0, 3]^n, filtered by ``accept``."""
    out = []
    have = 0
    draws = 0
    while have < count:
        lam = np.sort(rng.uniform(0.0, 3.0, size=(4 * count, n)), axis=1)[:, ::-1]
        draws += lam.shape[0]
        lam = lam[accept(lam)]
        out.append(lam[: count - have])
        have += out[-1].shape[0]
        if draws > 1e7 and have == 0:
            raise SamplingFailureError("spectrum sampler acceptance rate too low")
    return np.concatenate(out, axis=0)


def _margin_report(check, params, samples, seed, n, m, accept, bound_fn, threads=1):
    tol = params.get("tol", NONNEG_TOL)

    def run(rng_range):
        lo, hi = rng_range
        rng = np.random.default_rng(np.random.SeedSequence([seed, lo]))
        count = hi - lo
        lam = _sample_spectra(rng, count, n, accept)
        h = _sample_h(rng, count, m, n)
        margin = delta_logv_rhs(lam, h) - bound_fn(lam, h)
        i = int(np.argmin(margin))
        return (
            float(margin[i]),
            [float(x) for x in lam[i]],
            int(np.count_nonzero(margin < -tol)),
        )

    results = run_chunks(run, chunk_ranges(samples, _CHUNK), threads)
    best = min(results, key=lambda t: t[0])
    return ScanReport(
        check=check,
        params=params,
        samples=samples,
        min_value=best[0],
        argmin=best[1],
        violations=sum(r[2] for r in results),
        seed=seed,
    )


def check_sqrt2_inequality(
    samples: int, seed: int, n: int = 3, m: int = 3, threads: int = 1
) -> ScanReport:
    """Random check of the sqrt(2) pointwise inequality.

    Draws sorted spectra with lam_1^2 lam_i^2 <= 2 + lam_i^2 for i >= 2 and
    random symmetric h, and asserts that the Delta log v right-hand side
    dominates the normal-excess + weighted-diagonal bound on every sample.
    """
    if samples <= 0:
        raise ValueError("samples must be positive")

    def accept(lam):
        rest = lam[:, 1:]
        return np.all(lam[:, :1] ** 2 * rest**2 <= 2.0 + rest**2 + 1e-14, axis=1)

    return _margin_report(
        "sqrt2-logv",
        {"n": n, "m": m, "tol": NONNEG_TOL},
        samples,
        seed,
        n,
        m,
        accept,
        sqrt2_lower_bound,
        threads,
    )


def check_lambda_inequality(
    lam_bound: float,
    samples: int,
    seed: int,
    n: int = 3,
    m: int = 3,
    threads: int = 1,
) -> ScanReport:
    """Random check of the Lambda-quantified inequality for lam_1 lam_2 <= Lambda."""
    if not 0.0 < lam_bound <= SQRT2 + 1e-12:
        raise ValueError("Lambda must lie in (0, sqrt(2)]")
    if samples <= 0:
        raise ValueError("samples must be positive")

    def accept(lam):
        if lam.shape[1] < 2:
            return np.ones(lam.shape[0], dtype=bool)
        return lam[:, 0] * lam[:, 1] <= lam_bound + 1e-14

    return _margin_report(
        "lambda-logv",
        {"Lambda": lam_bound, "n": n, "m": m, "tol": NONNEG_TOL},
        samples,
        seed,
        n,
        m,
        accept,
        lambda l, h: lambda_lower_bound(l, h, lam_bound),
        threads,
    )


def xi11(a: np.ndarray) -> np.ndarray:
    """xi_11 = sqrt(det b) * sum_i b^{i1} a_{1i} with b = I + a^T a (batched)."""
    a = np.asarray(a, dtype=float)
    single = a.ndim == 2
    if single:
        a = a[None]
    n = a.shape[-1]
    b = np.eye(n) + np.einsum("bai,baj->bij", a, a)
    first = np.linalg.solve(b, a[:, 0, :, None])[..., 0]  # (b^{-1} a_1)_j
    out = np.sqrt(np.linalg.det(b)) * first[:, 0]
    return float(out[0]) if single else out


def xi11_sampler(
    lam_bound: float,
    eps: float,
    samples: int,
    seed: int,
    n: int = 2,
    m: int = 2,
    threads: int = 1,
) -> ScanReport:
    """Sampling experiment for the near-diagonal xi_11 concentration estimate.

    Samples m x n matrices ``a`` with lam_1 lam_2 <= Lambda and
    a_11 >= (1 - eps) sqrt(det b) by rejection around the feasible corner
    (a_11 large, everything else O(sqrt(eps))), and reports max |xi_11|.
    The estimate itself is asymptotic in eps; the testable contract is that
    the reported max is non-increasing as eps decreases.
    """
    if lam_bound <= 0 or not 0.0 < eps < 1.0 or samples <= 0:
        raise ValueError("need Lambda > 0, eps in (0, 1), samples > 0")
    a_min = (1.0 - eps) / np.sqrt(1.0 - (1.0 - eps) ** 2)
    a_max = max(3.0 * a_min, 12.0)  # the sup of |xi_11| is approached at large a_11

    def run(rng_range):
        lo, hi = rng_range
        rng = np.random.default_rng(np.random.SeedSequence([seed, lo]))
        need = hi - lo
        worst = 0.0
        arg = None
        have = 0
        draws = 0
        while have < need:
            batch = 4 * (need - have)
            a11 = a_min + (a_max - a_min) * rng.uniform(0.0, 1.0, size=batch)
            delta = 0.5 * np.minimum(np.sqrt(eps), lam_bound / a11)
            a = rng.uniform(-1.0, 1.0, size=(batch, m, n)) * delta[:, None, None]
            a[:, 0, 0] = a11
            draws += batch
            sv = np.linalg.svd(a, compute_uv=False)
            lam1 = sv[:, 0]
            lam2 = sv[:, 1] if sv.shape[1] > 1 else np.zeros(batch)
            detb = np.exp(np.sum(np.log1p(sv**2), axis=1))
            if n > sv.shape[1]:
                pass  # extra singular values are zero; det factors are 1
            ok = (lam1 * lam2 <= lam_bound) & (a11 >= (1.0 - eps) * np.sqrt(detb))
            if draws > max(1e6, need / 1e-6) and have == 0:
                raise SamplingFailureError("xi_11 sampler acceptance below 1e-6")
            a = a[ok][: need - have]
            if a.shape[0] == 0:
                continue
            vals = np.abs(xi11(a))
            i = int(np.argmax(vals))
            if vals[i] > worst:
                worst = float(vals[i])
                arg = [float(x) for x in a[i].ravel()]
            have += a.shape[0]
        return worst, arg, have

    results = run_chunks(run, chunk_ranges(samples, _CHUNK), threads)
    best = max(results, key=lambda t: t[0])
    return ScanReport(
        check="xi11-limit",
        params={"Lambda": lam_bound, "eps": eps, "n": n, "m": m},
        samples=samples,
        min_value=best[0],
        argmin=best[1],
        violations=0,
        seed=seed,
        max_value=best[0],
    )
