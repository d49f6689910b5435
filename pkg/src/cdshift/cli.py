"""``cdshift`` command-line front end.

Exit codes: 0 all checks pass, 1 classification negative, 2 input error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .bundle import (
    NULLSPACE_RTOL,
    canonical_121,
    canonical_scalar_chain,
    commutant_basis,
    decompose,
    spec_from_121,
)
from .io import SpecFileError, encode_complex, encode_matrix, load_spec, parse_complex, spec_digest
from .kernel import (
    PD_RTOL,
    eta_threshold,
    kernel_at_origin,
    kernel_exists,
    kernel_invariance_residual,
    kernel_value,
    transport_residual,
)
from .moebius import point_section, rotation
from .shift import (
    COND_MAX,
    TAIL_RATIO_MAX,
    IllConditionedError,
    asymptotic_diagnostics,
    contraction_class,
    level_dim,
    realize,
)
from .tolerances import load_tolerances
from .verify import run_suite

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

# (g, z, w) panel for the kernel command
KERNEL_PANEL = (
    (rotation(0.7), 0.3, -0.2j),
    (point_section(0.3), 0.5j, 0.1),
    (point_section(-0.2 + 0.25j) @ rotation(-0.4), -0.45 + 0.1j, 0.25 - 0.3j),
)
TRANSPORT_POINTS = (0.3, 0.5j, -0.4 - 0.2j)


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _no_kernel_reason(spec, witness) -> str:
    if spec.eta <= 0:
        return "eta must be positive"
    bad = [j for j, ok in enumerate(witness.positive) if not ok]
    return f"normalizer product P_{bad[0]} is not positive definite"


def _classify(spec, tol, seed):
    basis = commutant_basis(spec)
    comps = decompose(spec, seed=seed)
    exists, witness = kernel_exists(spec)
    results = {
        "eta": spec.eta,
        "multiplicities": list(spec.multiplicities),
        "irreducible": len(basis) == 1,
        "commutant_dimension": {"value": len(basis), "tolerance": NULLSPACE_RTOL},
        "components": [
            {"grade_offset": c.grade_offset, "eta": c.spec.eta, "multiplicities": list(c.spec.multiplicities)}
            for c in comps
        ],
        "kernel_exists": exists,
    }
    if witness is not None:
        results["normalizer_min_eigenvalues"] = {"value": list(witness.min_eigenvalues), "tolerance": PD_RTOL}
    if not exists:
        results["reason"] = _no_kernel_reason(spec, witness)
    results["eta_threshold"] = {"value": eta_threshold(spec, tol["eta_threshold"]), "tolerance": tol["eta_threshold"]}
    results["similarity_invariants"] = {"eta": spec.eta, "multiplicities": list(spec.multiplicities)}
    results["contraction_class"] = contraction_class(spec).value if exists else None
    summary = [
        f"irreducible: {results['irreducible']} (commutant dimension {len(basis)}, {len(comps)} component(s))",
        f"kernel exists: {exists}" + ("" if exists else f" ({results['reason']})"),
        f"eta threshold: {results['eta_threshold']['value']:.9g}",
        f"contraction class: {results['contraction_class']}",
    ]
    return results, summary, EXIT_OK if exists else EXIT_NEGATIVE


def _require_kernel(spec, supplied):
    exists, witness = kernel_exists(spec)
    if not exists:
        raise CliError(f"no reproducing kernel: {_no_kernel_reason(spec, witness)}", EXIT_NEGATIVE)
    return supplied if supplied is not None else witness


def _load_points(path):
    if path is None:
        return [(0j, 0j)]
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"{path}: {exc}", EXIT_INPUT) from None
    if not isinstance(raw, list):
        raise CliError(f"{path}: expected a list of [z, w] pairs", EXIT_INPUT)
    pts = []
    for i, pair in enumerate(raw):
        if not isinstance(pair, list) or len(pair) != 2:
            raise CliError(f"{path} [{i}]: expected a [z, w] pair", EXIT_INPUT)
        z, w = (parse_complex(v, f"[{i}][{k}]", path) for k, v in enumerate(pair))
        if abs(z) >= 1 or abs(w) >= 1:
            raise CliError(f"{path} [{i}]: points must lie in the open unit disc", EXIT_INPUT)
        pts.append((z, w))
    return pts


def _kernel(spec, normalizer, tol, points):
    norm = _require_kernel(spec, normalizer)
    k0 = kernel_at_origin(spec, norm).value
    values = [{"z": encode_complex(z), "w": encode_complex(w), "value": encode_matrix(kernel_value(spec, norm, z, w))}
              for z, w in points]
    inv = max(kernel_invariance_residual(spec, norm, g, z, w) for g, z, w in KERNEL_PANEL)
    trans = max(transport_residual(spec, norm, z) for z in TRANSPORT_POINTS)
    residuals = {
        "kernel_invariance": {"max_residual": inv, "tolerance": tol["kernel_invariance"]},
        "transport_law": {"max_residual": trans, "tolerance": tol["transport_law"]},
    }
    ok = all(r["max_residual"] <= r["tolerance"] for r in residuals.values())
    for r in residuals.values():
        r["passed"] = r["max_residual"] <= r["tolerance"]
    results = {
        "normalizer": [encode_matrix(p) for p in norm.products],
        "kernel_at_origin": encode_matrix(k0),
        "kernel_values": values,
        "residuals": residuals,
    }
    summary = [f"K(0,0) deviation from identity: {np.max(np.abs(k0 - np.eye(spec.dim))):.3g}"]
    summary += [f"{name}: {r['max_residual']:.3g} (tol {r['tolerance']:g})" for name, r in residuals.items()]
    return results, summary, EXIT_OK if ok else EXIT_NUMERIC


def _weight_rows(spec, real):
    for n, block in enumerate(real.blocks):
        k = 0
        for j in range(min(spec.m, n) + 1):
            for i in range(spec.multiplicities[j]):
                yield n, j, i, float(np.real(block[k, k]))
                k += 1


def _realize(spec, tol, n_max, out_path, with_blocks):
    if n_max < 1:
        raise CliError("--n-max must be at least 1", EXIT_INPUT)
    _require_kernel(spec, None)
    try:
        real = realize(spec, n_max)
    except IllConditionedError as exc:
        raise CliError(f"ill-conditioned level: {exc}", EXIT_NUMERIC) from None
    rows = list(_weight_rows(spec, real))
    if out_path:
        with open(out_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["n", "grade", "index", "weight"])
            writer.writerows((n, j, i, repr(w)) for n, j, i, w in rows)
    results = {
        "n_max": n_max,
        "level_dims": [level_dim(spec, n) for n in range(n_max + 1)],
        "condition_limit": COND_MAX,
        "weights_file": out_path,
        "max_weight": max(w for *_, w in rows),
    }
    if with_blocks:
        results["blocks"] = [encode_matrix(b) for b in real.blocks]
    summary = [f"levels 0..{n_max}, max diagonal weight {results['max_weight']:.12g}"]
    code = EXIT_OK
    if n_max >= 50:
        diag = asymptotic_diagnostics(spec, n_max)
        target, band = -1.0, tol["decay_exponent"]
        # M(n) = I exactly (Hardy case) leaves nothing to fit
        trivial = diag.decay_exponent is None and float(np.max(diag.deviations)) <= tol["shift_identity"]
        decay_ok = trivial or (diag.decay_exponent is not None and abs(diag.decay_exponent - target) <= band)
        results["diagnostics"] = {
            "sup_norm": diag.sup_norm,
            "decay_exponent": {"value": diag.decay_exponent, "target": target, "tolerance": band,
                               "fit_range": list(diag.fit_range), "passed": decay_ok},
            "hs_partial_sum": diag.hs_partial_sum,
            "tail_ratio": {"value": diag.tail_ratio, "limit": TAIL_RATIO_MAX, "converged": diag.converged},
        }
        if trivial:
            summary.append("M(n) = I at every level")
        else:
            summary.append(f"decay exponent of |M(n)-I|: {diag.decay_exponent:.4f} (target -1 +/- {band:g})")
        summary.append(f"Hilbert-Schmidt tail ratio: {diag.tail_ratio:.4f} (converged: {diag.converged})")
        if not decay_ok:
            code = EXIT_NUMERIC
    return results, summary, code


def _verify(spec, normalizer, tol, seed, samples, identity_only):
    checks = run_suite(spec, seed=seed, samples=samples, tolerances=tol, normalizer=normalizer,
                       identity_only=identity_only)
    exists, _ = kernel_exists(spec)
    results = {
        "seed": seed,
        "samples": samples,
        "irreducible": len(commutant_basis(spec)) == 1,
        "kernel_exists": exists,
        "checks": {c.name: c.as_dict() for c in checks},
    }
    summary = [f"irreducible: {results['irreducible']}, kernel exists: {exists}"]
    for c in checks:
        if c.skipped:
            summary.append(f"{c.name}: skipped ({c.skipped})")
        else:
            summary.append(f"{c.name}: {c.max_residual:.3g} (tol {c.tolerance:g}) {'ok' if c.passed else 'FAIL'}")
    return results, summary, EXIT_OK if all(c.passed for c in checks) else EXIT_NUMERIC


def _inequality(name, lhs, rhs):
    return {"name": name, "lhs": lhs, "rhs": rhs, "holds": bool(lhs < rhs)}


def _canonical(spec):
    mult = spec.multiplicities
    eta = spec.eta
    if all(k == 1 for k in mult):
        canon = canonical_scalar_chain(spec)
        exists, _ = kernel_exists(canon)
        results = {"pattern": "scalar_chain", "y": [float(y[0, 0].real) for y in canon.blocks],
                   "kernel_exists": exists, "irreducible": all(abs(y[0, 0]) > 0 for y in canon.blocks)}
        if not exists:
            results["reason"] = _no_kernel_reason(canon, kernel_exists(canon)[1])
        summary = [f"canonical y: {results['y']}", f"kernel exists: {exists}"]
        return results, summary, EXIT_OK if exists else EXIT_NEGATIVE
    if mult != (1, 2, 1):
        raise CliError(f"canonical forms are available for all-ones or (1, 2, 1) multiplicities, got {list(mult)}",
                       EXIT_INPUT)
    a, b, c = canonical_121(spec)
    exists, witness = kernel_exists(spec_from_121(eta, a, b, c))
    stated = [
        _inequality("a^2 < 2 eta", a * a, 2 * eta),
        _inequality("b^2 < (2 eta + 2) / (1 - a^2 / (2 (2 eta + 1)))", b * b,
                    (2 * eta + 2) / (1 - a * a / (2 * (2 * eta + 1))) if a * a < 2 * (2 * eta + 1) else float("inf")),
        _inequality("c^2 < 2 eta + 2", c * c, 2 * eta + 2),
    ]
    joint = [
        _inequality("a^2 < 2 eta", a * a, 2 * eta),
        _inequality("b^2 (1 - a^2 / (2 (2 eta + 1))) + c^2 < 2 eta + 2",
                    b * b * (1 - a * a / (2 * (2 * eta + 1))) + c * c, 2 * eta + 2),
    ]
    stated_ok = eta > 0 and all(q["holds"] for q in stated)
    results = {
        "pattern": "121",
        "a": a, "b": b, "c": c,
        "irreducible": min(a, b, c) > 0,
        "kernel_exists": exists,
        "stated_inequalities": stated,
        "recursion_conditions": joint,
        "violated": list(dict.fromkeys(q["name"] for q in stated + joint if not q["holds"])),
        "agreement": stated_ok == exists,
    }
    if not exists:
        results["reason"] = _no_kernel_reason(spec, witness)
    summary = [f"canonical (a, b, c): ({a:.12g}, {b:.12g}, {c:.12g})", f"kernel exists: {exists}"]
    if results["violated"]:
        summary.append("violated: " + "; ".join(results["violated"]))
    if not results["agreement"]:
        summary.append("note: displayed inequalities and recursion disagree at this point")
    return results, summary, EXIT_OK if exists else EXIT_NEGATIVE


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def format_report(obj, indent: int = 0) -> str:
    """Indented JSON with scalar-only lists kept on one line."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {format_report(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return json.dumps(list(obj), default=_jsonable)
        if all(isinstance(v, (list, tuple)) and all(not isinstance(x, (dict, list, tuple)) for x in v) for v in obj):
            return json.dumps([list(v) for v in obj], default=_jsonable)
        items = [f"{inner}{format_report(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    return json.dumps(obj, default=_jsonable)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdshift", description="Homogeneous Cowen-Douglas operator toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("spec", help="spec file (JSON)")
    common.add_argument("--human", action="store_true", help="print a summary instead of the JSON report")
    common.add_argument("--tol-file", help="JSON tolerance overrides (default: $CDSHIFT_TOL_FILE)")
    common.add_argument("--seed", type=int, default=0, help="seed for all sampling (default 0)")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("classify", parents=[common], help="irreducibility, kernel existence, threshold")
    k = sub.add_parser("kernel", parents=[common], help="normalizer, K(0,0) and K(z,w)")
    k.add_argument("--points", help="JSON list of [z, w] pairs (default [[0, 0]])")
    r = sub.add_parser("realize", parents=[common], help="weighted block shift realization")
    r.add_argument("--n-max", type=int, default=100)
    r.add_argument("--out", help="CSV weight table path")
    r.add_argument("--blocks", action="store_true", help="include the M(n) matrices in the report")
    v = sub.add_parser("verify", parents=[common], help="seeded residual suite")
    v.add_argument("--samples", type=int, default=20)
    v.add_argument("--identity-panel", action="store_true", help="use only the identity group element")
    sub.add_parser("canonical", parents=[common], help="canonical parameters")
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        try:
            tol = load_tolerances(args.tol_file)
        except (OSError, ValueError) as exc:
            raise CliError(f"tolerance file: {exc}", EXIT_INPUT) from None
        try:
            spec, normalizer = load_spec(args.spec)
        except OSError as exc:
            raise CliError(str(exc), EXIT_INPUT) from None
        arguments = {"seed": args.seed}
        if args.command == "classify":
            results, summary, code = _classify(spec, tol, args.seed)
        elif args.command == "kernel":
            arguments["points"] = args.points
            results, summary, code = _kernel(spec, normalizer, tol, _load_points(args.points))
        elif args.command == "realize":
            arguments.update(n_max=args.n_max, out=args.out, blocks=args.blocks)
            results, summary, code = _realize(spec, tol, args.n_max, args.out, args.blocks)
        elif args.command == "verify":
            if args.samples < 1:
                raise CliError("--samples must be at least 1", EXIT_INPUT)
            arguments.update(samples=args.samples, identity_panel=args.identity_panel)
            results, summary, code = _verify(spec, normalizer, tol, args.seed, args.samples, args.identity_panel)
        else:
            results, summary, code = _canonical(spec)
    except SpecFileError as exc:
        print(f"cdshift: input error: {exc}", file=stderr)
        return EXIT_INPUT
    except CliError as exc:
        print(f"cdshift: {exc}", file=stderr)
        return exc.code
    except (ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"cdshift: numerical failure: {exc}", file=stderr)
        return EXIT_NUMERIC
    if args.human:
        print(f"{args.command} {args.spec} [{spec_digest(spec, normalizer)}]", file=stdout)
        for line in summary:
            print(f"  {line}", file=stdout)
        print(f"  exit status: {code}", file=stdout)
    else:
        report = {
            "command": args.command,
            "spec": args.spec,
            "arguments": arguments,
            "spec_digest": spec_digest(spec, normalizer),
            "tolerances": tol,
            "results": results,
            "exit_status": code,
        }
        print(format_report(report), file=stdout)
    return code


def main(argv=None) -> int:
    sys.exit(run(argv))
