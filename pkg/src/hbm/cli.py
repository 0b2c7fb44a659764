"""Command-line front end.

Every command writes ``report.json`` (validated against the packaged JSON
schema for that command) and plot-ready CSV tables under ``tables/`` in the
output directory.  Reports embed the exact experiment spec that produced
them and contain no timestamps, so identical invocations give identical
bytes.

Exit codes: 0 on success, 2 on an invalid spec, 3 on a numerical failure.

Body specs
    ``ball[:r]``, ``ellipsoid:a1,a2[,a3]`` (diagonal semi-axes),
    ``rounded_lq[:q,eps]``, ``random_even[:seed,amplitude]`` or a path to a
    body JSON file.

Density expressions (``--f``)
    Arithmetic in the coordinates ``x, y, z`` of the unit normal, the
    functions ``sqrt, exp, log, abs, cos, sin``, the constant ``pi`` and
    harmonics ``Ylm`` scaled to unit root-mean-square over the sphere.  On
    S^2, ``Y<l><m>`` or ``Y<l>_<m>`` (``Y<l>_m<k>`` for order -k) is the real
    harmonic of degree l and order m.  On S^1, ``Y<l>0`` is cos(l t) and
    ``Y<l>1`` is sin(l t), both times sqrt(2).
"""

from __future__ import annotations

import argparse
import ast
import json
import os
import re
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .affine import NoConvergence, isotropize
from .body import (
    Body,
    ConvexityFailure,
    Discretization,
    body_from_json,
    geometric_distance,
    make_standard,
)
from .directions import expectation_identity, find_good_direction, scan_directions
from .minkowski import (
    NotConverged,
    PreconditionUnmet,
    TargetMeasure,
    critical_divergence_scan,
    nonuniqueness_experiment,
    rows_to_csv,
    solve,
    supercritical_diagnostic,
)
from .spectral import SingularMetric, lambda1, lambda1_even, spectrum
from .sphere import harmonic_index, harmonics_at

EXIT_OK, EXIT_SPEC, EXIT_NUMERIC = 0, 2, 3


class SpecError(ValueError):
    """The experiment spec cannot be interpreted."""


# ----------------------------------------------------------------------------
# parsing
# ----------------------------------------------------------------------------


def _numbers(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise SpecError(f"bad numeric list {text!r}") from exc


def parse_body(spec: str, disc: Discretization) -> Body:
    """Build a body from ``kind[:params]`` or a JSON file path."""
    if spec.endswith(".json") or os.path.isfile(spec):
        try:
            text = Path(spec).read_text()
        except OSError as exc:
            raise SpecError(f"cannot read body file {spec!r}") from exc
        obj = json.loads(text)
        if int(obj.get("dim", -1)) != disc.dim or int(obj.get("max_degree", -1)) != disc.degree:
            raise SpecError("body file does not match --dim/--degree")
        return body_from_json(text, disc)
    kind, _, rest = spec.partition(":")
    args = _numbers(rest) if rest else []
    n = disc.dim
    try:
        if kind == "ball":
            return make_standard("ball", disc, r=args[0] if args else 1.0)
        if kind == "ellipsoid":
            if len(args) == n - 1:
                args = args + [1.0]
            if len(args) != n:
                raise SpecError(f"ellipsoid needs {n} semi-axes")
            return make_standard("ellipsoid", disc, A=args)
        if kind == "rounded_lq":
            q, eps = (args + [6.0, 0.15][len(args):])[:2]
            return make_standard("rounded_lq", disc, q=q, eps=eps)
        if kind == "random_even":
            seed, amp = (args + [0.0, 0.05][len(args):])[:2]
            return make_standard("random_even", disc, seed=int(seed), amplitude=amp)
    except ConvexityFailure:
        raise
    except (ValueError, KeyError) as exc:
        raise SpecError(str(exc)) from exc
    raise SpecError(f"unknown body kind {kind!r}")


_FUNCS = {"sqrt": np.sqrt, "exp": np.exp, "log": np.log, "abs": np.abs, "cos": np.cos, "sin": np.sin}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}
_HARMONIC = re.compile(r"^Y(\d)(\d)$|^Y(\d+)_(m?)(\d+)$")


def _harmonic_values(name: str, nodes: np.ndarray, area: float) -> np.ndarray:
    m = _HARMONIC.match(name)
    if m is None:
        raise SpecError(f"unknown name {name!r}")
    if m.group(1) is not None:
        l, order = int(m.group(1)), int(m.group(2))
    else:
        l, order = int(m.group(3)), int(m.group(5)) * (-1 if m.group(4) else 1)
    dim = nodes.shape[1]
    if dim == 2:
        if order not in (0, 1) or (l == 0 and order):
            raise SpecError(f"{name}: on the circle the order is 0 (cosine) or 1 (sine)")
        label = (0, 0) if l == 0 else ((l, l) if order == 0 else (l, -l))
    else:
        if abs(order) > l:
            raise SpecError(f"{name}: order exceeds degree")
        label = (l, order)
    col = harmonic_index(dim, l).index(label)
    # orthonormal basis functions have RMS 1/sqrt(area)
    return harmonics_at(nodes, l)[:, col] * np.sqrt(area)


def evaluate_density(expr: str, grid) -> np.ndarray:
    """Evaluate a whitelisted expression at the grid nodes."""
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise SpecError(f"cannot parse density {expr!r}") from exc
    X = grid.nodes
    coords = dict(zip("xyz", X.T))

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
            if len(node.args) != 1 or node.keywords:
                raise SpecError(f"{node.func.id} takes one argument")
            return _FUNCS[node.func.id](ev(node.args[0]))
        if isinstance(node, ast.Name):
            if node.id in coords:
                return coords[node.id]
            if node.id == "pi":
                return np.pi
            return _harmonic_values(node.id, X, grid.area)
        raise SpecError(f"disallowed syntax in density: {ast.dump(node)[:40]}")

    with np.errstate(all="ignore"):
        val = np.broadcast_to(np.asarray(ev(tree), dtype=float), (grid.size,)).copy()
    if not np.all(np.isfinite(val)):
        raise SpecError("density is not finite on the sphere")
    return val


def parse_measure(expr: str, grid) -> TargetMeasure:
    if os.path.isfile(expr):
        expr = Path(expr).read_text().strip()
    try:
        return TargetMeasure(evaluate_density(expr, grid), grid, label=expr)
    except SpecError:
        raise
    except ValueError as exc:
        raise SpecError(f"invalid target measure: {exc}") from exc


# ----------------------------------------------------------------------------
# output
# ----------------------------------------------------------------------------


def _clean(obj):
    """Convert numpy scalars and arrays to plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def load_schema(command: str) -> dict:
    text = resources.files("hbm").joinpath("schemas", f"{command}.schema.json").read_text()
    return json.loads(text)


def validate_report(report: dict) -> None:
    import jsonschema

    jsonschema.validate(report, load_schema(report["command"]))


def write_outputs(out: Path, report: dict, tables: dict[str, str], bodies: dict[str, Body] | None = None) -> None:
    report = _clean(report)
    validate_report(report)
    (out / "tables").mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    for name, text in tables.items():
        with open(out / "tables" / name, "w", newline="") as fh:
            fh.write(text)
    for name, K in (bodies or {}).items():
        (out / "bodies").mkdir(exist_ok=True)
        (out / "bodies" / name).write_text(K.to_json() + "\n")


def _body_info(K: Body) -> dict:
    return {"meta": dict(K.meta), "volume": K.volume, "dG": geometric_distance(K), "min_radius": K.min_eigenvalue}


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------


def cmd_spectrum(args, disc):
    K = parse_body(args.body, disc)
    lam, mult, res = lambda1(K)
    lam_e, _, _ = lambda1_even(K)
    ev = spectrum(K, "even", count=args.count + 1)
    od = spectrum(K, "odd", count=args.count)
    n = disc.dim
    report = {
        "lambda1": lam,
        "multiplicity": mult,
        "lambda1_residuals": res.residuals,
        "lambda1_even": lam_e,
        "gap_to_2n": 2 * n - lam_e,
        "even_residual": float(ev.residuals[1]),
        "body": _body_info(K),
    }
    rows = [{"subspace": "even", "index": i, "eigenvalue": v, "residual": r}
            for i, (v, r) in enumerate(zip(ev.eigenvalues, ev.residuals))]
    rows += [{"subspace": "odd", "index": i, "eigenvalue": v, "residual": r}
             for i, (v, r) in enumerate(zip(od.eigenvalues, od.residuals))]
    tables = {"spectrum.csv": rows_to_csv(rows, ["subspace", "index", "eigenvalue", "residual"])}
    return report, tables, {}


def cmd_isotropize(args, disc):
    K = parse_body(args.body, disc)
    T, Kiso, rep = isotropize(K, tol=args.tol_iso, max_iter=args.max_iter_iso)
    report = {
        "transform": T,
        "defect": rep.defect,
        "iterations": rep.iterations,
        "moment_matrix": rep.moment_matrix,
        "body": _body_info(K),
        "isotropic_body": _body_info(Kiso),
    }
    rows = [{"iteration": i, "defect": d} for i, d in enumerate(rep.history)]
    tables = {"defect_history.csv": rows_to_csv(rows, ["iteration", "defect"])}
    return report, tables, {}


def cmd_directions(args, disc):
    K = parse_body(args.body, disc)
    T, Kiso, rep = isotropize(K, tol=args.tol_iso, max_iter=args.max_iter_iso)
    scan = scan_directions(Kiso, args.samples)
    xi, gap = find_good_direction(K, args.samples, tol=args.tol_iso)
    exp = expectation_identity(Kiso, defect_tol=max(10 * args.tol_iso, 1e-9))
    report = {
        "good_direction": xi,
        "gap": gap,
        "isotropic_best_direction": scan.best_xi,
        "isotropic_best_gap": scan.best_gap,
        "expectation": {"residual": exp.residual, "expected_gap": exp.expected_gap, "variance": exp.variance},
        "transform": T,
        "body": _body_info(K),
    }
    return report, {"gap_vs_direction.csv": scan.to_csv()}, {}


def _p_list(text: str) -> list[float]:
    if text == "auto":
        raise SpecError("--p auto is only meaningful for nonunique")
    return _numbers(text)


def _trace_csv(traces: list[tuple[float, list]]) -> str:
    rows = [{"p": p, "iteration": i, "objective": v} for p, tr in traces for i, v in enumerate(tr)]
    return rows_to_csv(rows, ["p", "iteration", "objective"])


def cmd_solve(args, disc):
    mu = parse_measure(args.f, disc.grid)
    init = parse_body(args.init, disc)
    rows, traces, bodies = [], [], {}
    failed = False
    for p in _p_list(args.p):
        if not (-disc.dim < p < 1):
            raise SpecError(f"p = {p} outside the solvable range (-{disc.dim}, 1)")
        rep = solve(mu, p, init, disc, max_iter=args.max_iter, gtol=args.tol_grad, el_tol=args.tol_el)
        lam = lambda1_even(rep.body)[0]
        rows.append({"p": p, "dG": rep.dG, "el_residual": rep.el_residual, "lambda_even": lam,
                     "objective": rep.objective_trace[-1], "c": rep.c, "status": rep.status,
                     "iterations": rep.iterations})
        traces.append((p, rep.objective_trace))
        bodies[f"solution_p{p:+g}.json"] = rep.body
        failed |= rep.status != "Converged"
    report = {"measure": mu.label, "rows": rows, "all_converged": not failed}
    cols = ["p", "dG", "el_residual", "lambda_even", "objective", "c", "status", "iterations"]
    tables = {"solve.csv": rows_to_csv(rows, cols), "objective_trace.csv": _trace_csv(traces)}
    return report, tables, bodies, (EXIT_NUMERIC if failed else EXIT_OK)


def _refine_levels(spec: str | None, dim: int) -> list:
    """Parse ``res:deg,res:deg`` into reflection-symmetric discretizations."""
    if not spec:
        return []
    levels = []
    for item in spec.split(","):
        try:
            res, deg = (int(v) for v in item.split(":"))
        except ValueError as exc:
            raise SpecError(f"--refine expects resolution:degree pairs, got {item!r}") from exc
        levels.append(Discretization(dim, res, deg, symmetry="reflections"))
    return levels


def cmd_nonunique(args, disc):
    K1 = parse_body(args.body, disc)
    lam = lambda1_even(K1)[0]
    p = disc.dim - lam - 0.5 if args.p == "auto" else _numbers(args.p)[0]
    levels = _refine_levels(args.refine, disc.dim)
    out = nonuniqueness_experiment(K1, p, disc, n_init=args.inits, seed=args.seed, delta_sep=args.delta_sep,
                                   el_tol=args.tol_el, max_iter=args.max_iter, lam=lam, refine=levels)
    report = {
        "p": out["p"],
        "lambda1_even_K1": out["lambda1_even_K1"],
        "found": out["found"],
        "delta_sep": args.delta_sep,
        "refine": [[d.resolution, d.degree] for d in levels],
        "runs": out["runs"],
        "body": _body_info(K1),
    }
    bodies = {}
    if out["found"]:
        report.update({"separation": out["separation"], "el_residual": out["el_residual"], "init": out["init"],
                       "K2": _body_info(out["K2"])})
        bodies["K2.json"] = out["K2"]
    cols = ["init", "status", "el_residual", "separation", "iterations", "dG"]
    return report, {"runs.csv": rows_to_csv(out["runs"], cols)}, bodies


def cmd_scan(args, disc):
    mu = parse_measure(args.f, disc.grid)
    p_list = _p_list(args.p)
    rows = critical_divergence_scan(mu, p_list, disc, max_iter=args.max_iter, el_tol=args.tol_el)
    dG = [r["dG"] for r in rows]
    report = {
        "measure": mu.label,
        "rows": rows,
        "monotone": bool(all(b > a for a, b in zip(dG, dG[1:]))),
        "min_lambda_margin": min(r["lambda_even"] - (disc.dim - r["p"]) for r in rows),
    }
    cols = ["p", "dG", "el_residual", "lambda_even", "objective", "status"]
    return report, {"dG_vs_p.csv": rows_to_csv(rows, cols)}, {}


def cmd_supercritical(args, disc):
    mu = parse_measure(args.f, disc.grid)
    p = _numbers(args.p)[0] if args.p != "auto" else -disc.dim - 0.5
    if p > -disc.dim:
        raise SpecError("supercritical diagnostics need p <= -n")
    ts = _numbers(args.t)
    n = disc.dim
    family = []
    for t in ts:
        axes = [t, 1.0 / t] + [1.0] * (n - 2)
        family.append(make_standard("ellipsoid", disc, A=axes))
    rows = supercritical_diagnostic(mu, p, family, labels=ts)
    for r in rows:
        r["t"] = r.pop("label")
    F = [r["minus_F"] for r in rows]
    report = {"p": p, "measure": mu.label, "rows": rows,
              "minus_F_increasing": bool(all(b > a for a, b in zip(F, F[1:])))}
    return report, {"supercritical.csv": rows_to_csv(rows, ["t", "dG", "F", "minus_F", "mahler"])}, {}


COMMANDS = {
    "spectrum": cmd_spectrum,
    "isotropize": cmd_isotropize,
    "directions": cmd_directions,
    "solve": cmd_solve,
    "nonunique": cmd_nonunique,
    "scan": cmd_scan,
    "supercritical": cmd_supercritical,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", type=int, choices=(2, 3), default=3)
    common.add_argument("--resolution", type=int, default=None, help="circle points (n=2) or colatitudes (n=3)")
    common.add_argument("--degree", type=int, default=None, help="maximal harmonic degree of bodies")
    common.add_argument("--symmetry", choices=("none", "reflections"), default="none",
                        help="restrict bodies to those invariant under coordinate reflections")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="hbm-out", help="output directory")
    common.add_argument("--tol-el", type=float, default=1e-5, help="Euler-Lagrange residual tolerance")
    common.add_argument("--tol-grad", type=float, default=1e-8, help="scaled gradient tolerance")
    common.add_argument("--tol-iso", type=float, default=1e-10, help="isotropy defect tolerance")
    common.add_argument("--max-iter", type=int, default=2000, help="solver iterations per stage")
    common.add_argument("--max-iter-iso", type=int, default=50)

    parser = argparse.ArgumentParser(prog="hbm", description="Spectral and variational experiments on convex bodies.")
    parser.add_argument("--version", action="version", version=f"hbm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="lambda_1 and lambda_{1,e} of -Delta_K")
    p.add_argument("--body", required=True)
    p.add_argument("--count", type=int, default=8, help="eigenvalues per subspace in the table")

    p = sub.add_parser("isotropize", parents=[common], help="move K to S_2-isotropic position")
    p.add_argument("--body", required=True)

    p = sub.add_parser("directions", parents=[common], help="good direction and expectation identity")
    p.add_argument("--body", required=True)
    p.add_argument("--samples", type=int, default=512)

    p = sub.add_parser("solve", parents=[common], help="solve the even L^p-Minkowski problem")
    p.add_argument("--f", default="1", help="density expression or file")
    p.add_argument("--p", required=True, help="comma-separated exponents")
    p.add_argument("--init", default="ball", help="initial body spec")

    p = sub.add_parser("nonunique", parents=[common], help="search for a second solution with S_pK2 = S_pK1")
    p.add_argument("--body", required=True)
    p.add_argument("--p", default="auto", help="exponent, or auto = n - lambda_{1,e} - 1/2")
    p.add_argument("--inits", type=int, default=8)
    p.add_argument("--delta-sep", type=float, default=0.05)
    p.add_argument("--refine", default=None,
                   help="finer reflection-symmetric levels res:deg,... to polish a separated candidate")

    p = sub.add_parser("scan", parents=[common], help="dG of solutions as p decreases toward -n")
    p.add_argument("--f", required=True)
    p.add_argument("--p", required=True)

    p = sub.add_parser("supercritical", parents=[common], help="functional along stretched ellipsoids, p <= -n")
    p.add_argument("--f", default="1")
    p.add_argument("--p", default="auto", help="exponent, or auto = -n - 1/2")
    p.add_argument("--t", default="2,3,4,5,6,7,8", help="stretch factors")
    return parser


def _spec_dict(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "out"}


def _limit_threads():
    n = os.environ.get("HBM_THREADS")
    if not n:
        return None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(n))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_SPEC
    limiter = _limit_threads()
    try:
        try:
            sym = None if args.symmetry == "none" else args.symmetry
            disc = Discretization(args.dim, args.resolution, args.degree, symmetry=sym)
        except ValueError as exc:
            raise SpecError(str(exc)) from exc
        result = COMMANDS[args.command](args, disc)
        report, tables, bodies = result[:3]
        code = result[3] if len(result) > 3 else EXIT_OK
        report = {"command": args.command, "version": __version__, "spec": _spec_dict(args),
                  "discretization": disc.describe(), **report}
        write_outputs(Path(args.out), report, tables, bodies)
        return code
    except (SpecError, PreconditionUnmet) as exc:
        print(f"hbm: invalid spec: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (ConvexityFailure, NotConverged, NoConvergence, SingularMetric, ArithmeticError) as exc:
        print(f"hbm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # remaining library-level argument errors (e.g. spectra on a symmetric discretization)
        print(f"hbm: invalid spec: {exc}", file=sys.stderr)
        return EXIT_SPEC
    finally:
        if limiter is not None:
            limiter.restore_original_limits()


if __name__ == "__main__":
    sys.exit(main())
