"""Named invariant suites over the plane-geometry and model layers.

Each check is a small callable raising AssertionError on failure; the
runner collects results into a summary that the command line tool renders
as a JUnit-style XML report.  A mutation hook deliberately breaks one
function so the negative control (a failing run) can be exercised without
touching the real code paths.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass

import numpy as np

from mingraph import grassmann, models

MUTATIONS = ("slope-sign",)


@contextlib.contextmanager
def apply_mutation(label):
    """Temporarily break a library function (negative-control fixture)."""
    if label is None:
        yield
        return
    if label == "slope-sign":
        original = grassmann.slope
        grassmann.slope = lambda spectrum: -original(spectrum)
        try:
            yield
        finally:
            grassmann.slope = original
    else:
        raise ValueError(f"unknown mutation '{label}'; available: {MUTATIONS}")


def check_spectrum_padding():
    rng = np.random.default_rng(11)
    for m, n in [(1, 3), (2, 4), (2, 2), (5, 2)]:
        s = grassmann.singular_spectrum(rng.standard_normal((m, n)))
        assert s.shape == (n,)
        assert np.all(np.diff(s) <= 0) and s[-1] >= 0.0
        if m < n:
            assert np.all(s[m:] == 0.0)


def check_slope_rotation_invariance():
    rng = np.random.default_rng(12)
    for _ in range(20):
        m, n = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        J = rng.standard_normal((m, n))
        U = np.linalg.qr(rng.standard_normal((m, m)))[0]
        V = np.linalg.qr(rng.standard_normal((n, n)))[0]
        s1 = grassmann.singular_spectrum(J)
        s2 = grassmann.singular_spectrum(U @ J @ V)
        assert abs(grassmann.slope(s1) - grassmann.slope(s2)) < 1e-10 * (
            1.0 + grassmann.slope(s1)
        )
        assert abs(grassmann.two_dilation(s1) - grassmann.two_dilation(s2)) < 1e-9


def check_slope_at_least_one():
    rng = np.random.default_rng(13)
    for _ in range(50):
        s = grassmann.singular_spectrum(rng.standard_normal((3, 3)))
        assert grassmann.slope(s) >= 1.0


def check_bernstein_edge_cases():
    assert grassmann.bernstein_condition([1.0, 10.0])
    assert grassmann.bernstein_condition([0.5, 0.5])
    assert not grassmann.bernstein_condition([10.0, 10.0])


def check_graph_plane_orientation():
    rng = np.random.default_rng(14)
    for _ in range(20):
        m, n = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        J = rng.standard_normal((m, n))
        P = grassmann.graph_plane_basis(J)
        base = grassmann.PlaneBasis.coordinate(n, n + m)
        v = grassmann.slope(grassmann.singular_spectrum(J))
        assert abs(grassmann.plane_inner(P, base) - 1.0 / v) < 1e-10


def check_jordan_angles_match_spectrum():
    rng = np.random.default_rng(15)
    for _ in range(20):
        m, n = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        J = rng.standard_normal((m, n))
        P = grassmann.graph_plane_basis(J)
        base = grassmann.PlaneBasis.coordinate(n, n + m)
        theta = grassmann.jordan_angles(P, base)
        lam = grassmann.singular_spectrum(J)
        assert np.max(np.abs(np.tan(theta) - lam)) < 1e-8 * (1.0 + np.max(lam))


def check_grassmann_distance_metric_basics():
    rng = np.random.default_rng(16)
    P = grassmann.graph_plane_basis(rng.standard_normal((2, 2)))
    Q = grassmann.graph_plane_basis(rng.standard_normal((2, 2)))
    assert grassmann.grassmann_distance(P, P) < 1e-7
    d1 = grassmann.grassmann_distance(P, Q)
    d2 = grassmann.grassmann_distance(Q, P)
    assert abs(d1 - d2) < 1e-10 and d1 >= 0.0


def check_model_derivatives_consistent():
    rng = np.random.default_rng(17)
    step = 1e-6
    for label in models.model_labels():
        model = models.get_model(label)
        pts = rng.uniform(0.3, 1.2, (5, model.n))
        for x in pts:
            J = model.jacobian(x)
            H = model.hessian(x)
            for i in range(model.n):
                e = np.zeros(model.n)
                e[i] = step
                jfd = (model.value(x + e) - model.value(x - e)) / (2 * step)
                hfd = (model.jacobian(x + e) - model.jacobian(x - e)) / (2 * step)
                assert np.max(np.abs(J[:, i] - jfd)) < 1e-7
                assert np.max(np.abs(H[:, :, i] - hfd)) < 1e-7
            assert np.max(np.abs(H - H.swapaxes(-1, -2))) < 1e-12


def check_hopf_cone_constants():
    model = models.get_model("lawson-osserman")
    rng = np.random.default_rng(18)
    x = rng.standard_normal((50, 4))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    x *= rng.uniform(0.5, 2.0, (50, 1))
    for p in x:
        s = grassmann.singular_spectrum(model.jacobian(p))
        assert abs(s[0] - np.sqrt(5.0)) < 1e-10
        assert abs(grassmann.two_dilation(s) - 5.0) < 1e-10
        assert abs(grassmann.slope(s) - 9.0) < 1e-10
        assert abs(np.linalg.norm(model.graph_point(p)) - 1.5 * np.linalg.norm(p)) < 1e-10


def check_hopf_cone_homogeneity():
    model = models.get_model("lawson-osserman")
    rng = np.random.default_rng(19)
    for _ in range(20):
        x = rng.standard_normal(4)
        t = float(rng.uniform(0.1, 5.0))
        assert np.max(np.abs(model.value(t * x) - t * model.value(x))) < 1e-9


def check_exponential_model_spectrum():
    model = models.get_model("slag-exp")
    rng = np.random.default_rng(20)
    for x in rng.uniform(-2.0, 2.0, (20, 2)):
        s = grassmann.singular_spectrum(model.jacobian(x))
        assert np.max(np.abs(s - np.exp(x[0]))) < 1e-10 * (1.0 + np.exp(x[0]))


def check_model_domain_guard():
    model = models.get_model("lawson-osserman")
    try:
        model.check_domain(np.zeros(4))
    except models.DomainError:
        return
    raise AssertionError("vertex point accepted")


ALL_CHECKS = [
    ("spectrum_padding", check_spectrum_padding),
    ("slope_rotation_invariance", check_slope_rotation_invariance),
    ("slope_at_least_one", check_slope_at_least_one),
    ("bernstein_edge_cases", check_bernstein_edge_cases),
    ("graph_plane_orientation", check_graph_plane_orientation),
    ("jordan_angles_match_spectrum", check_jordan_angles_match_spectrum),
    ("grassmann_distance_metric_basics", check_grassmann_distance_metric_basics),
    ("model_derivatives_consistent", check_model_derivatives_consistent),
    ("hopf_cone_constants", check_hopf_cone_constants),
    ("hopf_cone_homogeneity", check_hopf_cone_homogeneity),
    ("exponential_model_spectrum", check_exponential_model_spectrum),
    ("model_domain_guard", check_model_domain_guard),
]


@dataclass
class SuiteResult:
    name: str
    passed: bool
    message: str = ""


def run_suites(mutate=None) -> list:
    """Run every named check, optionally under a mutation; never raises."""
    results = []
    with apply_mutation(mutate):
        for name, fn in ALL_CHECKS:
            try:
                fn()
            except Exception as exc:  # noqa: BLE001 - report, do not crash
                results.append(SuiteResult(name, False, f"{type(exc).__name__}: {exc}"))
            else:
                results.append(SuiteResult(name, True))
    return results


def junit_xml(results) -> str:
    """Minimal JUnit-style XML for a list of SuiteResult."""
    failures = sum(not r.passed for r in results)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<testsuite name="mingraph.invariants" tests="{len(results)}" '
        f'failures="{failures}">',
    ]
    for r in results:
        if r.passed:
            lines.append(f'  <testcase name="{r.name}"/>')
        else:
            msg = r.message.replace("&", "&amp;").replace("<", "&lt;").replace('"', "&quot;")
            lines.append(
                f'  <testcase name="{r.name}"><failure message="{msg}"/></testcase>'
            )
    lines.append("</testsuite>")
    return "\n".join(lines) + "\n"
