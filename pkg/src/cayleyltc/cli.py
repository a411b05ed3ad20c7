"""Command-line front end.

Subcommands: build (construct a complex + square code and write artifacts),
analyze (measured value vs. proved bound, verdict pass/fail/na), experiment
(seeded kappa/decode trials with CSV + JSON reports), inspect (summarize an
artifact file).  Exit codes: 0 = pass, 1 = bound violation, 2 =
precondition or budget refusal.

Every command is deterministic given its inputs and --seed: experiment
trials derive per-trial RNG streams from (seed, trial index), so reports
are byte-identical no matter how many workers run them.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, analysis, codes, f2core, ltc, spectral
from .complexes import build_complex, deserialize_complex, serialize_complex
from .f2core import DimensionBudgetError
from .groups import (
    FiniteGroup,
    GeneratorSet,
    cayley_graph,
    cyclic_group,
    lps_generators,
    psl2,
    symmetric_subset,
)

EXIT_PASS, EXIT_BOUND, EXIT_PRECONDITION = 0, 1, 2


class PreconditionError(ValueError):
    pass


def _parse_group(spec: str) -> FiniteGroup:
    kind, _, arg = spec.partition(":")
    if kind == "cyclic":
        return cyclic_group(int(arg))
    if kind == "psl2":
        return psl2(int(arg))
    raise PreconditionError(f"unknown group spec {spec!r} (want cyclic:N or psl2:Q)")


def _parse_base(spec: str) -> codes.LinearCode:
    kind, _, arg = spec.partition(":")
    if kind == "rep":
        return codes.repetition_code(int(arg))
    if kind == "parity":
        return codes.parity_code(int(arg))
    if kind == "full":
        return codes.full_code(int(arg))
    if kind == "bch":
        m, b = (int(x) for x in arg.split(","))
        return codes.bch_code(m, b)
    raise PreconditionError(
        f"unknown base code spec {spec!r} (want rep:N, parity:N, full:N or bch:M,B)")


def _generators(group, args) -> tuple[GeneratorSet, GeneratorSet, dict]:
    if args.lps is not None:
        if group.kind != "psl2":
            raise PreconditionError("--lps requires a psl2 group")
        S = lps_generators(args.lps, group.parameters()["q"])
        # lps_generators builds its own group object; re-key indices abstractly
        group = S.group
        if args.subset is not None:
            S = symmetric_subset(S, args.subset)
        gen_spec = {"lps": args.lps, "subset": args.subset}
        A = GeneratorSet(group, S.indices, side="left")
        B = GeneratorSet(group, S.indices, side="right")
        return A, B, gen_spec
    if args.gens is None:
        raise PreconditionError("need --gens or --lps")
    a_idx = tuple(int(x) for x in args.gens.split(","))
    b_idx = tuple(int(x) for x in args.gens_b.split(",")) if args.gens_b else a_idx
    A = GeneratorSet(group, a_idx, side="left")
    B = GeneratorSet(group, b_idx, side="right")
    return A, B, {"gens": list(a_idx), "gens_b": list(b_idx)}


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _spectral_lambda(X, method: str, tol: float) -> dict:
    reports = {}
    for side, S in (("left", X.A), ("right", X.B)):
        g = cayley_graph(X.group, S, side)
        rep = spectral.second_eigenvalue(g, method=method, tol=tol)
        reports[side] = json.loads(rep.to_json())
    lam = max(reports["left"]["lambda"], reports["right"]["lambda"])
    return {"lambda": lam, "cayley": reports}


def _derived_parameters(X, C1, lam: float) -> dict:
    delta1 = Fraction(C1.distance_exact(), C1.n) if C1.k else None
    sigma1 = None
    if C1.k and C1.n * C1.k <= analysis.SIGMA_MAX_RK:
        sigma1 = analysis.sigma_exact(C1).value
    derived = {
        "r": X.nA,
        "n_vertices": X.n_vertices,
        "n_edges": X.n_edges,
        "n_squares": X.n_squares,
        "lambda": lam,
        "delta1": None if delta1 is None else [delta1.numerator, delta1.denominator],
        "sigma1": None if sigma1 is None else [sigma1.numerator, sigma1.denominator],
        "query_count": X.nA * X.nA,
    }
    cond = X.check_conditions()
    derived["tnc"] = cond.tnc
    derived["n2c"] = cond.n2c
    if delta1 is not None and sigma1 is not None:
        params = ltc.TesterParams(r=X.nA, delta1=float(delta1),
                                  sigma1=float(sigma1), lam=lam)
        derived["kappa_proof"] = params.kappa_proof
        derived["kappa_statement"] = params.kappa_statement
        derived["hypotheses_hold"] = params.hypotheses_hold
    else:
        derived["kappa_proof"] = None
        derived["kappa_statement"] = None
        derived["hypotheses_hold"] = None
    return derived


def cmd_build(args) -> int:
    group = _parse_group(args.group)
    A, B, gen_spec = _generators(group, args)
    group = A.group
    C1 = _parse_base(args.base)
    if C1.n != len(A):
        raise PreconditionError(
            f"base length {C1.n} != r {len(A)}: local code must match the degree")
    if len(A) != len(B):
        raise PreconditionError(f"|A| = {len(A)} != |B| = {len(B)}")
    X = build_complex(group, A, B)
    lam_rec = _spectral_lambda(X, method=args.method, tol=args.tol)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    blob = serialize_complex(X)
    (out / "complex.cay2.npz").write_bytes(blob)
    files = {"complex": {"path": "complex.cay2.npz", "sha256": _sha256(blob)}}

    code_info = None
    try:
        code = codes.square_code(X, C1)
        text = f2core.dump_matrix(code.parity)
        (out / "code.f2mat").write_text(text)
        (out / "code.json").write_text(code.sidecar_json() + "\n")
        files["code"] = {"path": "code.f2mat", "sha256": _sha256(text.encode())}
        code_info = {"n": code.n, "k": code.k}
    except DimensionBudgetError as exc:
        code_info = {"skipped": str(exc)}

    manifest = {
        "format": "instance v1",
        "tool_version": __version__,
        "group_spec": args.group,
        "base_spec": args.base,
        "generators": {"A": list(A.indices), "B": list(B.indices), **gen_spec},
        "base_code": json.loads(C1.sidecar_json()),
        "derived": _derived_parameters(X, C1, lam_rec["lambda"]),
        "spectral": lam_rec,
        "square_code": code_info,
        "files": files,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True)
                                       + "\n")
    print(json.dumps({"written": str(out / "manifest.json"),
                      "n_squares": X.n_squares}, sort_keys=True))
    return EXIT_PASS


def _load_instance(manifest_path: str):
    mpath = Path(manifest_path)
    manifest = json.loads(mpath.read_text())
    if manifest.get("format") != "instance v1":
        raise PreconditionError(f"{manifest_path} is not an instance manifest")
    base = mpath.parent
    blob = (base / manifest["files"]["complex"]["path"]).read_bytes()
    if _sha256(blob) != manifest["files"]["complex"]["sha256"]:
        raise PreconditionError("complex file hash mismatch: artifacts corrupted")
    X = deserialize_complex(blob)
    C1 = _parse_base(manifest["base_spec"])
    return manifest, X, C1


def _emit_report(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


def _verdict_exit(verdict: str) -> int:
    return {"pass": EXIT_PASS, "na": EXIT_PRECONDITION}.get(verdict, EXIT_BOUND)


def cmd_analyze(args) -> int:
    manifest, X, C1 = _load_instance(args.manifest)
    which = args.which
    report = {"instance": manifest["group_spec"], "base": manifest["base_spec"],
              "which": which, "manifest_sha256":
              _sha256(Path(args.manifest).read_bytes()),
              "tool_version": __version__}

    if which == "spectral":
        rec = _spectral_lambda(X, method=args.method, tol=args.tol)
        report.update(rec)
        gens = manifest["generators"]
        if gens.get("lps") and not gens.get("subset"):
            p = gens["lps"]
            bound = 2 * math.sqrt(p) / (p + 1)
            report["ramanujan_bound"] = bound
            report["verdict"] = "pass" if rec["lambda"] <= bound else "fail"
        else:
            report["verdict"] = "na"
            report["reason"] = "Ramanujan bound applies to full LPS generator sets"
    elif which == "rate":
        try:
            code = codes.square_code(X, C1)
        except DimensionBudgetError as exc:
            report.update(verdict="na", reason=str(exc))
            _emit_report(report, args.out)
            return EXIT_PRECONDITION
        report.update(codes.check_rate_bound(code, "square"))
    elif which == "distance":
        lam = manifest["derived"]["lambda"]
        d1 = manifest["derived"]["delta1"]
        if d1 is None:
            report.update(verdict="na", reason="base code has no distance")
        else:
            try:
                code = codes.square_code(X, C1)
            except DimensionBudgetError as exc:
                report.update(verdict="na", reason=str(exc))
                _emit_report(report, args.out)
                return EXIT_PRECONDITION
            report.update(codes.check_square_distance_bound(
                code, delta1=d1[0] / d1[1], lam=lam))
    elif which == "sigma":
        try:
            res = analysis.sigma_exact(C1)
        except DimensionBudgetError as exc:
            report.update(verdict="na", reason=str(exc))
            _emit_report(report, args.out)
            return EXIT_PRECONDITION
        report["sigma"] = [res.value.numerator, res.value.denominator]
        report["minimizer"] = {"f": res.f.astype(int).tolist(),
                               "g": res.g.astype(int).tolist()}
        report["verdict"] = "pass" if res.value <= 2 else "fail"
    elif which == "smooth":
        alpha = Fraction(args.alpha)
        beta = Fraction(args.beta)
        delta = Fraction(args.delta)
        try:
            rec = analysis.verify_us(C1, alpha, beta, delta, args.dldpc)
        except DimensionBudgetError as exc:
            report.update(verdict="na", reason=str(exc))
            _emit_report(report, args.out)
            return EXIT_PRECONDITION
        report["us"] = {k: v for k, v in rec.items() if k != "witnesses"}
        report["n_witnesses"] = len(rec.get("witnesses", []))
        report["verdict"] = "pass" if rec["certified"] else "fail"
    else:
        raise PreconditionError(f"unknown analysis {which!r}")

    _emit_report(report, args.out)
    return _verdict_exit(report["verdict"])


_KAPPA_FIELDS = ["trial", "weight", "D", "kappa_hat", "certified", "in_code"]
_DECODE_FIELDS = ["trial", "weight", "D", "outcome", "iterations",
                  "delta_initial", "dist_to_output", "dist_bound", "contract_ok"]


def _format_cell(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _write_rows(path: Path, fields: list[str], rows: list[dict]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([_format_cell(row[f]) for f in fields])
    data = buf.getvalue().encode()
    path.write_bytes(data)
    return data


def _decode_trial(tester, code, seed, index, weights) -> dict:
    lo, hi = weights
    rng = np.random.default_rng([seed, index])
    w = int(lo + (index % (hi - lo + 1)))
    c = code.random_codeword(rng)
    e = ltc.random_error(rng, code.n, w)
    f_bits = c.to_bits() ^ e
    D = tester.reject_probability(f_bits)
    out = tester.decode(f_bits)
    ok = out.delta_initial <= 2 * D * tester.X.n_edges + 1e-9
    ok &= out.iterations <= max(out.delta_initial, 0)
    dist = float("nan")
    if out.kind == "codeword":
        dist = float((out.word.to_bits() != f_bits).sum()) / code.n
        ok &= dist <= (4 + 8 * tester.r) * D + 1e-9
    else:
        diag = ltc.check_far_diagnostics(
            tester.X, out, tester.C1.distance_exact(), tester.C1.n)
        ok &= diag["dispute_edge_bound_holds"]
    return {
        "trial": index, "weight": w, "D": D, "outcome": out.kind,
        "iterations": out.iterations, "delta_initial": out.delta_initial,
        "dist_to_output": dist, "dist_bound": (4 + 8 * tester.r) * D,
        "contract_ok": bool(ok),
    }


def cmd_experiment(args) -> int:
    manifest, X, C1 = _load_instance(args.manifest)
    try:
        code = codes.square_code(X, C1)
    except DimensionBudgetError as exc:
        print(json.dumps({"verdict": "na", "reason": str(exc)}))
        return EXIT_PRECONDITION
    tester = ltc.SquareCodeTester(X, C1, code)
    weights = tuple(int(x) for x in args.weights.split(","))
    if len(weights) == 1:
        weights = (weights[0], weights[0])
    out_prefix = Path(args.out)
    out_prefix.parent.mkdir(parents=True, exist_ok=True)

    if args.kind == "kappa":
        d = manifest["derived"]
        params = ltc.TesterParams(
            r=X.nA,
            delta1=(d["delta1"][0] / d["delta1"][1]) if d["delta1"] else 0.0,
            sigma1=(d["sigma1"][0] / d["sigma1"][1]) if d["sigma1"] else 0.0,
            lam=d["lambda"])
        report = ltc.kappa_experiment(tester, code, params, trials=args.trials,
                                      weights=weights, seed=args.seed,
                                      workers=args.workers)
        rows = report.pop("rows")
        fields = _KAPPA_FIELDS
    elif args.kind == "decode":
        def run(i):
            return _decode_trial(tester, code, args.seed, i, weights)

        if args.workers > 1 and args.trials:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=args.workers) as pool:
                rows = list(pool.map(run, range(args.trials)))
        else:
            rows = [run(i) for i in range(args.trials)]
        n_far = sum(r["outcome"] == "far" for r in rows)
        report = {
            "trials": args.trials, "weights": list(weights), "seed": args.seed,
            "n_far": n_far,
            "all_contracts_ok": all(r["contract_ok"] for r in rows),
        }
        fields = _DECODE_FIELDS
    else:
        raise PreconditionError(f"unknown experiment kind {args.kind!r}")

    report["manifest_sha256"] = _sha256(Path(args.manifest).read_bytes())
    report["tool_version"] = __version__
    csv_bytes = _write_rows(Path(str(out_prefix) + ".csv"), fields, rows)
    with open(str(out_prefix) + ".jsonl", "w") as fh:
        for row in rows:
            fh.write(json.dumps({f: row[f] for f in fields}, sort_keys=True) + "\n")
    Path(str(out_prefix) + ".json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n")
    if args.format == "csv":
        sys.stdout.write(csv_bytes.decode())
    else:
        print(json.dumps(report, sort_keys=True))
    bad = args.kind == "decode" and not report.get("all_contracts_ok", True)
    return EXIT_BOUND if bad else EXIT_PASS


def cmd_inspect(args) -> int:
    path = Path(args.path)
    data = path.read_bytes()
    if path.suffix == ".json" or path.name == "manifest.json":
        doc = json.loads(data.decode())
        print(json.dumps(doc, indent=2, sort_keys=True))
        return EXIT_PASS
    head = data[:64].decode(errors="replace")
    if head.startswith("f2mat"):
        M = f2core.load_matrix(data.decode())
        print(json.dumps({"format": "f2mat v1", "rows": M.rows, "cols": M.cols,
                          "rank": f2core.rank(M)}))
        return EXIT_PASS
    if head.startswith("f2word"):
        v = f2core.load_word(data.decode())
        print(json.dumps({"format": "f2word v1", "length": v.n,
                          "weight": v.weight()}))
        return EXIT_PASS
    if head.startswith("graph"):
        from .groups import load_graph

        g = load_graph(data.decode())
        print(json.dumps({"format": "graph v1", "vertices": g.n_vertices,
                          "edges": g.n_edges()}))
        return EXIT_PASS
    try:
        X = deserialize_complex(data)
    except Exception as exc:
        raise PreconditionError(f"unrecognized artifact {path}: {exc}") from exc
    print(json.dumps(X.manifest(), indent=2, sort_keys=True))
    return EXIT_PASS


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cayleyltc",
                                description="square-complex LTC toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="construct an instance and write artifacts")
    b.add_argument("--group", required=True, help="cyclic:N or psl2:Q")
    b.add_argument("--gens", help="comma-separated generator element indices for A")
    b.add_argument("--gens-b", dest="gens_b", help="generators for B (default: A)")
    b.add_argument("--lps", type=int, help="use LPS generators S_{p,q} (p here)")
    b.add_argument("--subset", type=int, help="inverse-closed LPS subset size")
    b.add_argument("--base", required=True, help="rep:N, parity:N, full:N, bch:M,B")
    b.add_argument("--method", default="auto", choices=["auto", "dense", "iterative"])
    b.add_argument("--tol", type=float, default=1e-10)
    b.add_argument("--out", required=True)
    b.set_defaults(fn=cmd_build)

    a = sub.add_parser("analyze", help="measured values vs proved bounds")
    a.add_argument("manifest")
    a.add_argument("--which", required=True,
                   choices=["spectral", "rate", "distance", "sigma", "smooth"])
    a.add_argument("--method", default="auto", choices=["auto", "dense", "iterative"])
    a.add_argument("--tol", type=float, default=1e-10)
    a.add_argument("--alpha", default="1/4", help="US parameter (fraction)")
    a.add_argument("--beta", default="2/3", help="US parameter (fraction)")
    a.add_argument("--delta", default="1", help="US distance target (fraction)")
    a.add_argument("--dldpc", type=int, default=2, help="US constraint weight")
    a.add_argument("--out")
    a.set_defaults(fn=cmd_analyze)

    e = sub.add_parser("experiment", help="seeded kappa/decode trials")
    e.add_argument("manifest")
    e.add_argument("--kind", required=True, choices=["kappa", "decode"])
    e.add_argument("--trials", type=int, required=True)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--weights", default="1,2", help="corruption weight range lo,hi")
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--format", default="json", choices=["json", "csv"])
    e.add_argument("--out", required=True, help="output path prefix")
    e.set_defaults(fn=cmd_experiment)

    i = sub.add_parser("inspect", help="summarize an artifact file")
    i.add_argument("path")
    i.set_defaults(fn=cmd_inspect)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (PreconditionError, DimensionBudgetError, ValueError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
