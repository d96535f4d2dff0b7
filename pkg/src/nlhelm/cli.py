"""Command-line entry point: exponents | herglotz | resolve | solve | farfield
| sweep | report.

Runs are configured by a single JSON document (schema_version 1) and write
their artifacts (SolveResult JSON, field dumps, CSVs) into an output
directory.  Exit codes: 0 converged and certified, 1 infeasible or diverged,
2 converged with warnings.
"""

import argparse
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import exponents as expo
from ._backend import active_backend, set_num_threads
from .farfield import decay_fit, predicted_far_field, verify_solution_far_field
from .fields import (Grid, ScalarField, VectorField3, dump_field, load_field,
                     lq_norm, radial_profile, write_radial_profile_csv)
from .herglotz import synthesize_scalar, synthesize_vector, verify_far_field
from .nonlinearity import NonlinearitySpec, Weight
from .resolvent import (FourthOrderSpec, ResolventConfig, curlcurl_resolvent,
                        fourth_order_resolvent, helmholtz_resolvent_complex,
                        helmholtz_resolvent_real)
from .solver import linear_prediction_lq, make_problem, pde_residual_report, picard_solve
from .sphere import build_quadrature, density_from_json, density_to_json, random_density

SCHEMA_VERSION = 1


def _num(v):
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(v)


def _output_root(cfg):
    root = os.environ.get("NLHELM_OUTPUT_ROOT", ".")
    return Path(root) / cfg.get("output_dir", "out")


def load_config(path):
    cfg = json.loads(Path(path).read_text())
    if cfg.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {cfg.get('schema_version')}")
    missing = [k for k in ("problem", "grid") if k not in cfg]
    if missing:
        raise ValueError(f"config missing fields: {missing}")
    return cfg


def _grid_from(cfg):
    g = cfg["grid"]
    return Grid(int(g["n"]), float(g["L"]), int(g["N"]))


def _nonlinearity_from(cfg):
    doc = cfg.get("nonlinearity")
    if doc is None:
        return NonlinearitySpec("A", "zero", p=4.0)
    q = doc.get("Q", {})
    weight = Weight(q.get("kind", "constant"), float(q.get("amplitude", 1.0)),
                    float(q.get("width", 1.0)))
    return NonlinearitySpec(
        class_tag=doc.get("class", "A"),
        form=doc.get("form", "power"),
        p=_num(doc.get("p", 4)),
        s=_num(doc.get("s", "inf")),
        p_tilde=_num(doc.get("p_tilde", 2)),
        Q=weight,
        sat_delta=float(doc.get("delta", 1.0)),
        sat_P=float(doc.get("P", 1.0)),
    )


def _densities_from(cfg, grid, seed):
    docs = cfg.get("densities") or [cfg["density"]]
    out = []
    for doc in docs:
        if isinstance(doc, str):
            out.append(density_from_json(doc))
        elif "random" in doc:
            r = doc["random"]
            rng = np.random.default_rng(seed)
            out.append(random_density(
                grid.dim, _num(r.get("lambda", cfg["operator"].get("lambda", 1.0))),
                r.get("kind", "scalar"), int(r.get("degree", 4)), rng,
                cm_target=float(r.get("cm_target", 0.05))))
        else:
            out.append(density_from_json(json.dumps(doc)))
    return out


def _resolvent_from(cfg, lam):
    doc = cfg.get("resolvent", {})
    return ResolventConfig(
        lam=lam,
        epsilon=None if doc.get("epsilon") in (None, "auto") else float(doc["epsilon"]),
        delta_scheme=doc.get("scheme", "pv-plus-surface-delta"),
        eps_correction=bool(doc.get("eps_correction", True)),
        quad_resolution=int(doc.get("quad_resolution", 24)),
    )


def _problem_from(cfg, seed=None):
    grid = _grid_from(cfg)
    seed = cfg.get("seed", 0) if seed is None else seed
    spec = _nonlinearity_from(cfg)
    tag = cfg["problem"]
    op = cfg.get("operator", {})
    sol = cfg.get("solver", {})
    fourth = None
    lam = None
    if tag == "fourth-order":
        fourth = FourthOrderSpec(float(op["alpha"]), float(op["beta"]))
        lam = fourth.lam
    else:
        lam = _num(op.get("lambda", 1.0))
    densities = _densities_from(cfg, grid, seed)
    return make_problem(
        tag, grid, densities, spec, lam=lam, fourth_spec=fourth,
        q=sol.get("q", "auto"),
        quad_resolution=int(cfg.get("sphere_resolution", 24)),
        resolvent_cfg=_resolvent_from(cfg, lam),
        rho=float(sol.get("rho", 1.0)),
        tol=float(sol.get("tol", 1e-10)),
        max_iter=int(sol.get("max_iter", 50)),
    )


# -------------------------------------------------------------- subcommands

def cmd_exponents(args):
    problem = args.problem
    try:
        report = expo.build_report(problem, args.n, _num(args.s), args.p,
                                   p_tilde=args.p_tilde, q=args.q or "auto",
                                   r_target=args.r_target)
    except expo.InfeasibleExponents as exc:
        print(json.dumps({"feasible": False, "reason": str(exc)}, indent=2))
        return 1
    doc = report.to_dict()
    print(json.dumps(doc, indent=2))
    if not report.nonempty:
        print("-- exponent set is EMPTY --", file=sys.stderr)
        return 1
    iv = report.interval
    print(f"\nproblem {problem}: q in ({iv.lo:.6g}, {iv.hi:.6g}), "
          f"chosen q = {report.chosen_q:.6g}", file=sys.stderr)
    for (t, qq) in report.schedule:
        print(f"  schedule: t = {t:.6g} -> q~ = {qq:.6g}", file=sys.stderr)
    return 0


def cmd_herglotz(args):
    cfg = load_config(args.config)
    grid = _grid_from(cfg)
    lam = _num(cfg.get("operator", {}).get("lambda", 1.0))
    densities = _densities_from(cfg, grid, cfg.get("seed", 0))
    h = densities[0]
    quad = build_quadrature(grid.dim, lam, int(cfg.get("sphere_resolution", 24)))
    wave = (synthesize_vector if h.kind == "tangential" else synthesize_scalar)(h, quad, grid)
    out = _output_root(cfg)
    out.mkdir(parents=True, exist_ok=True)
    dump_field(wave.field, out / "herglotz_field.bin")
    radii = np.linspace(grid.half_extent / 4, grid.half_extent * 0.75, 6)
    rows = verify_far_field(wave, radii)
    with open(out / "herglotz_farfield.csv", "w") as fh:
        fh.write("R,shell_error\n")
        for (R, err) in rows:
            fh.write(f"{R!r},{err!r}\n")
    write_radial_profile_csv(radial_profile(wave.field, 16), out / "herglotz_profile.csv")
    print(json.dumps({"field": str(out / "herglotz_field.bin"),
                      "far_field_csv": str(out / "herglotz_farfield.csv")}, indent=2))
    return 0


def cmd_resolve(args):
    f = load_field(args.input)
    op = args.operator
    cfg = ResolventConfig(lam=args.lam, epsilon=args.epsilon,
                          delta_scheme=args.scheme,
                          eps_correction=not args.no_correction)
    if op == "helmholtz":
        out = (helmholtz_resolvent_complex(f, cfg) if args.complex_output
               else helmholtz_resolvent_real(f, cfg))
    elif op == "fourth":
        spec = FourthOrderSpec(args.alpha, args.beta)
        out = fourth_order_resolvent(f, spec, cfg)
    elif op == "curlcurl":
        out = curlcurl_resolvent(f, cfg)
    else:
        raise ValueError(op)
    dump_field(out, args.output)
    print(json.dumps({"output": args.output}, indent=2))
    return 0


def _run_single(cfg, out_dir, seed=None):
    prob = _problem_from(cfg, seed=seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = picard_solve(prob)
    residuals = pde_residual_report(result) if result.converged else None
    out_dir.mkdir(parents=True, exist_ok=True)
    dump_field(result.solution, out_dir / "solution.bin")
    with open(out_dir / "convergence.csv", "w") as fh:
        fh.write("iteration,update_norm,ratio\n")
        for i, d in enumerate(result.update_norms):
            r = result.ratios[i - 1] if 0 < i <= len(result.ratios) else ""
            fh.write(f"{i},{d!r},{r!r}\n")
    doc = result.to_dict()
    doc["pde_residual"] = residuals
    doc["resolved_config"] = cfg
    doc["resolved_q"] = prob.q
    doc["warnings"] = [str(w.message) for w in caught]
    (out_dir / "solve_result.json").write_text(json.dumps(doc, indent=2))
    return prob, result, doc


def cmd_solve(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    out = _output_root(cfg)
    try:
        prob, result, doc = _run_single(cfg, out)
    except expo.InfeasibleExponents as exc:
        print(json.dumps({"feasible": False, "reason": str(exc)}, indent=2))
        return 1
    print(json.dumps(doc, indent=2))
    if result.diverged or not result.converged:
        return 1
    if doc["warnings"] or result.truncation_active or result.ball_exceeded:
        return 2
    return 0


def cmd_farfield(args):
    cfg = load_config(args.config)
    u = load_field(args.solution)
    prob = _problem_from(cfg)
    pattern = predicted_far_field(u, prob)
    g = u.grid
    radii = np.linspace(g.half_extent / 4, g.half_extent * 0.75, 6)
    rows = verify_solution_far_field(u, pattern, radii)
    out = _output_root(cfg)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "farfield_shell_errors.csv", "w") as fh:
        fh.write("R,shell_error\n")
        for (R, err) in rows:
            fh.write(f"{R!r},{err!r}\n")
    exponent, const, resid = decay_fit(
        u if not isinstance(u, VectorField3) else u.magnitude(),
        (g.half_extent / 4, g.half_extent * 0.75))
    doc = {
        "shell_errors": rows,
        "decay_fit": {"exponent": exponent, "constant": const, "residual": resid},
        "pattern_nodes": [[float(a), float(b)] for a, b in
                          zip(np.abs(pattern.f_part_nodes if not pattern.vector
                                     else pattern.f_part_nodes[0]),
                              np.abs(pattern.h_part_nodes if not pattern.vector
                                     else pattern.h_part_nodes[0]))],
    }
    (out / "farfield_pattern.json").write_text(json.dumps(doc, indent=2))
    print(json.dumps(doc["decay_fit"], indent=2))
    return 0


def cmd_sweep(args):
    cfg = load_config(args.config)
    scales = [float(s) for s in args.scales.split(",")] if args.scales else [1.0, 0.5, 0.25]
    out = _output_root(cfg)
    out.mkdir(parents=True, exist_ok=True)
    base_prob = _problem_from(cfg)
    base_h = base_prob.densities[0]

    def solve_scaled(t):
        prob = replace(base_prob, densities=[t * base_h] + base_prob.densities[1:],
                       _herglotz_cache=None)
        try:
            return t, picard_solve(prob)
        except Exception as exc:   # isolated failure, not fatal to the sweep
            return t, exc

    with ThreadPoolExecutor(max_workers=args.threads or 1) as pool:
        results = list(pool.map(solve_scaled, scales))
    rows, solutions = [], {}
    for t, res in results:
        if isinstance(res, Exception):
            rows.append({"scale": t, "error": str(res)})
        else:
            rows.append({"scale": t, "converged": res.converged,
                         "norm_q": lq_norm(res.solution, base_prob.q),
                         "contraction_ratio": res.contraction_ratio})
            solutions[t] = res.solution
    dist = []
    keys = sorted(solutions)
    for i, a in enumerate(keys):
        for b in keys[i + 1:]:
            dist.append({"a": a, "b": b,
                         "lq_distance": lq_norm(solutions[a] - solutions[b], base_prob.q)})
    pred = linear_prediction_lq(base_prob, base_h, 0.0 * base_h)
    doc = {"rows": rows, "pairwise_distance": dist, "linear_prediction_unit": pred}
    (out / "sweep_report.json").write_text(json.dumps(doc, indent=2))
    with open(out / "sweep_distances.csv", "w") as fh:
        fh.write("scale_a,scale_b,lq_distance\n")
        for d in dist:
            fh.write(f"{d['a']!r},{d['b']!r},{d['lq_distance']!r}\n")
    print(json.dumps(doc["rows"], indent=2))
    return 0


def cmd_report(args):
    root = Path(args.results_dir)
    lines = ["# nlhelm run report", ""]
    found = sorted(root.rglob("solve_result.json")) + sorted(root.rglob("sweep_report.json"))
    missing = []
    for p in found:
        doc = json.loads(p.read_text())
        lines.append(f"## {p.parent.name}")
        if "rows" in doc:
            for row in doc["rows"]:
                lines.append(f"- scale {row.get('scale')}: {row}")
        else:
            lines.append(f"- tag: {doc.get('tag')}, q = {doc.get('resolved_q')}")
            lines.append(f"- converged: {doc.get('converged')}, "
                         f"contraction ratio {doc.get('contraction_ratio'):.4g}")
            if doc.get("pde_residual"):
                lines.append(f"- pde residual: {doc['pde_residual']['total']:.3e}")
        lines.append("")
    if not found:
        lines.append("(no run artifacts found)")
    text = "\n".join(lines)
    (root / "report.md").write_text(text)
    print(text)
    return 0 if not missing else 1


def main(argv=None):
    parser = argparse.ArgumentParser(prog="nlhelm", description=__doc__)
    parser.add_argument("--threads", type=int, default=None,
                        help="numba/worker thread budget")
    parser.add_argument("--seed", type=int, default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponents", help="exponent windows and schedules")
    p.add_argument("--problem", default="nlh",
                   choices=["nlh", "nlh-radial", "fourth-order",
                            "curlcurl-cyl", "curlcurl-general"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--p-tilde", type=float, default=None)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--r-target", type=float, default=None)
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("herglotz", help="synthesize a Herglotz wave")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_herglotz)

    p = sub.add_parser("resolve", help="apply a limiting-absorption resolvent")
    p.add_argument("--operator", choices=["helmholtz", "fourth", "curlcurl"],
                   required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--scheme", default="pv-plus-surface-delta",
                   choices=["pv-plus-surface-delta", "regularized"])
    p.add_argument("--no-correction", action="store_true")
    p.add_argument("--complex-output", action="store_true")
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("solve", help="run the Picard fixed-point solver")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("farfield", help="far-field verification of a solution")
    p.add_argument("--config", required=True)
    p.add_argument("--solution", required=True)
    p.set_defaults(func=cmd_farfield)

    p = sub.add_parser("sweep", help="solve a family of scaled densities")
    p.add_argument("--config", required=True)
    p.add_argument("--scales", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="summarize a results directory")
    p.add_argument("results_dir")
    p.set_defaults(func=cmd_report)

    args = parser.parse_args(argv)
    if args.threads:
        set_num_threads(args.threads)
    if args.seed is not None:
        np.random.seed(args.seed)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
