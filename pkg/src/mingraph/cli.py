"""Config-driven command line runner with reproducible file outputs.

Subcommands: ``invariants``, ``verify-algebra``, ``solve``, ``diagnose``,
``measure``, ``zoo list``.  Every run reads one JSON config (where needed),
writes deterministic reports (JSON/CSV/XML/MGP1) into the output directory,
and reserves timestamps for a separate ``run.log``.  Exit codes: 0 success,
1 assertion failure, 2 solver non-convergence, 3 invalid input.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
from pathlib import Path

import numpy as np

from mingraph import algebra, diagnostics, measure, models, solver, suites

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_NO_CONVERGENCE = 2
EXIT_INVALID = 3


class InvalidConfigError(ValueError):
    pass


def _load_config(args) -> dict:
    if args.config is None:
        raise InvalidConfigError("this subcommand requires --config")
    path = Path(args.config)
    if not path.is_file():
        raise InvalidConfigError(f"config file not found: {path}")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise InvalidConfigError("config must be a JSON object")
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out if args.out is not None else ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _log(out: Path, message: str) -> None:
    """Timestamps go only here, never into the report files."""
    stamp = datetime.datetime.now().isoformat(timespec="seconds")
    with open(out / "run.log", "a") as fh:
        fh.write(f"{stamp} {message}\n")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _get_model(cfg):
    label = cfg.get("model")
    if not isinstance(label, str):
        raise InvalidConfigError("config needs a 'model' label")
    try:
        params = cfg.get("model_params", {})
        if "A" in params:
            params = dict(params, A=np.asarray(params["A"], dtype=float))
        if params.get("b") is not None:
            params = dict(params, b=np.asarray(params["b"], dtype=float))
        return models.get_model(label, **params)
    except KeyError as exc:
        raise InvalidConfigError(str(exc)) from exc


def cmd_invariants(args) -> int:
    out = _out_dir(args)
    _log(out, f"invariants mutate={args.mutate}")
    results = suites.run_suites(mutate=args.mutate)
    (out / "invariants.xml").write_text(suites.junit_xml(results))
    failures = [r for r in results if not r.passed]
    print(f"invariant suites: {len(results)} checks, {len(failures)} failures")
    for r in failures:
        print(f"  FAIL {r.name}: {r.message}")
    return EXIT_OK if not failures else EXIT_ASSERTION


def cmd_verify_algebra(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    seed = int(args.seed if args.seed is not None else cfg.get("seed", 1))
    threads = args.threads
    step = float(cfg.get("grid_step", 0.05))
    samples = int(cfg.get("samples", 100000))
    constraint = cfg.get("constraint", "sharp")
    lam_values = [float(v) for v in cfg.get("lam_values", [0.5, 1.0, 1.2, math.sqrt(2)])]
    eps_values = [float(v) for v in cfg.get("eps_values", [0.3, 0.1, 0.03, 0.01])]
    _log(out, f"verify-algebra seed={seed} threads={threads}")

    reports = [algebra.scan_mu123(step, constraint=constraint, threads=threads)]
    reports += [algebra.scan_mu123_lambda(lam, step) for lam in lam_values]
    reports.append(algebra.check_sqrt2_inequality(samples, seed, threads=threads))
    reports += [
        algebra.check_lambda_inequality(lam, samples, seed, threads=threads)
        for lam in lam_values
        if lam <= math.sqrt(2.0)
    ]
    reports += [
        algebra.xi11_sampler(1.0, eps, samples, seed, threads=threads)
        for eps in eps_values
    ]
    payload = {"config": {"grid_step": step, "samples": samples, "seed": seed,
                          "constraint": constraint, "lam_values": lam_values,
                          "eps_values": eps_values},
               "reports": [r.to_dict() for r in reports]}
    _write_json(out / "verify_algebra.json", payload)
    bad = [r for r in reports if not r.ok]
    print(f"verify-algebra: {len(reports)} reports, {len(bad)} with violations")
    for r in bad:
        print(f"  FAIL {r.check}: min={r.min_value:.6g} at {r.argmin}")
    return EXIT_OK if not bad else EXIT_ASSERTION


def cmd_solve(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    _log(out, "solve")
    if "patch" in cfg:
        path = Path(cfg["patch"])
        if not path.is_file():
            raise InvalidConfigError(f"patch manifest not found: {path}")
        patch = solver.load_patch(path)
    else:
        model = _get_model(cfg)
        dims = cfg.get("dims")
        spacing = cfg.get("spacing")
        origin = cfg.get("origin")
        if dims is None or spacing is None or origin is None:
            raise InvalidConfigError("solve config needs dims, spacing, origin")
        patch = solver.GraphPatch.from_model(model, origin, dims, float(spacing))
        interior = tuple(slice(1, -1) for _ in range(patch.n))
        patch.values[interior] = 0.0  # keep only the boundary data
    report = solver.solve(
        patch,
        tol=float(cfg.get("tol", solver.DEFAULT_TOL)),
        max_iter=int(cfg.get("max_iter", 50)),
    )
    solver.save_patch(patch, out / "solved.json")
    _write_json(out / "solve_report.json", report.to_dict())
    print(
        f"solve: iterations={report.iterations} residual={report.residual:.3e} "
        f"converged={report.converged}"
    )
    return EXIT_OK if report.converged else EXIT_NO_CONVERGENCE


def _diagnose_points(cfg, model, seed):
    pts_cfg = cfg.get("points", {})
    count = int(pts_cfg.get("count", 100))
    rmin = float(pts_cfg.get("radius_min", 0.5))
    rmax = float(pts_cfg.get("radius_max", 2.0))
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((count, model.n))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    x *= rng.uniform(rmin, rmax, (count, 1))
    return x


def cmd_diagnose(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    model = _get_model(cfg)
    seed = int(args.seed if args.seed is not None else cfg.get("seed", 1))
    step = float(cfg.get("step", 1e-3))
    lam_bound = float(cfg.get("lam_bound", math.sqrt(2.0)))
    _log(out, f"diagnose model={model.label} seed={seed}")
    pts = _diagnose_points(cfg, model, seed)
    diagnostics.write_diagnostics_csv(model, pts, out / "diagnostics.csv", step,
                                      lam_bound)
    margin_floor = cfg.get("assert_margin_sqrt2_min")
    gap_ceiling = cfg.get("assert_gap_max")
    summary = {"model": model.label, "points": len(pts), "step": step,
               "lam_bound": lam_bound, "seed": seed}
    worst_gap = 0.0
    worst_margin = math.inf
    witness = None
    for x in pts:
        rep = diagnostics.logv_identity(model, x, step, lam_bound)
        worst_gap = max(worst_gap, abs(rep.gap))
        if rep.margin_sqrt2 < worst_margin:
            worst_margin = rep.margin_sqrt2
            witness = x
    summary["max_abs_gap"] = worst_gap
    summary["min_margin_sqrt2"] = worst_margin
    _write_json(out / "diagnose_summary.json", summary)
    print(f"diagnose: max|gap|={worst_gap:.3e} min margin={worst_margin:.3e}")
    if gap_ceiling is not None and worst_gap > float(gap_ceiling):
        print(f"  FAIL gap {worst_gap:.3e} exceeds {gap_ceiling}")
        return EXIT_ASSERTION
    if margin_floor is not None and worst_margin < float(margin_floor):
        print(f"  FAIL margin {worst_margin:.3e} below {margin_floor} "
              f"at {witness.tolist()}")
        return EXIT_ASSERTION
    return EXIT_OK


def cmd_measure(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    model = _get_model(cfg)
    radii = [float(r) for r in cfg.get("radii", [])]
    if len(radii) < 2 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise InvalidConfigError("measure config needs strictly increasing radii")
    resolution = int(cfg.get("resolution", 64))
    center = cfg.get("center")
    if center is None:
        base = np.zeros(model.n)
        center = (
            model.graph_point(base)
            if bool(np.asarray(model.in_domain(base)))
            else np.zeros(model.n + model.m)
        )
    center = np.asarray(center, dtype=float)
    _log(out, f"measure model={model.label}")
    profile = measure.density_profile(model, center, np.asarray(radii), resolution,
                                      threads=args.threads)
    wn = measure.unit_ball_volume(model.n)
    with open(out / "measure.csv", "w") as fh:
        fh.write("radius,volume,ratio,est_error\n")
        for rho, ratio, err in zip(profile.radii, profile.ratios, profile.est_errors):
            vol = ratio * wn * rho**model.n
            fh.write(f"{float(rho)!r},{float(vol)!r},{float(ratio)!r},{float(err)!r}\n")
    summary = {
        "model": model.label,
        "resolution": resolution,
        "center": [float(c) for c in center],
        "radii": radii,
        "ratios": [float(r) for r in profile.ratios],
        "monotonicity_margin": profile.monotonicity_margin,
    }
    _write_json(out / "measure_summary.json", summary)
    print(f"measure: ratios {profile.ratios.round(6).tolist()}")
    band = 3.0 * float(np.max(profile.est_errors))
    if cfg.get("assert_monotone", True) and profile.monotonicity_margin < -band:
        print(f"  FAIL density ratio decreases by {-profile.monotonicity_margin:.3e}")
        return EXIT_ASSERTION
    for rho, bound in cfg.get("volume_lower_bounds", []):
        k = radii.index(float(rho))
        vol = profile.ratios[k] * wn * radii[k] ** model.n
        if vol < float(bound):
            print(f"  FAIL volume {vol:.6g} at radius {rho} below bound {bound}")
            return EXIT_ASSERTION
    return EXIT_OK


def cmd_zoo(args) -> int:
    if args.zoo_action != "list":
        raise InvalidConfigError("the only zoo action is 'list'")
    for label in models.model_labels():
        model = models.get_model(label)
        print(f"{label}: R^{model.n} -> R^{model.m}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mingraph", description="Minimal-graph geometry experiment runner"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output directory (default: current)")
        p.add_argument("--threads", type=int, default=1, help="worker cap")
        p.add_argument("--seed", type=int, default=None, help="seed override")

    p = sub.add_parser("invariants", help="run property suites")
    common(p)
    p.add_argument("--mutate", choices=suites.MUTATIONS, default=None,
                   help="inject a deliberate defect (negative control)")
    p.set_defaults(fn=cmd_invariants)
    for name, fn in [
        ("verify-algebra", cmd_verify_algebra),
        ("solve", cmd_solve),
        ("diagnose", cmd_diagnose),
        ("measure", cmd_measure),
    ]:
        p = sub.add_parser(name)
        common(p)
        p.set_defaults(fn=fn)
    p = sub.add_parser("zoo", help="model registry")
    p.add_argument("zoo_action", choices=["list"])
    common(p)
    p.set_defaults(fn=cmd_zoo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (InvalidConfigError, models.DomainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
