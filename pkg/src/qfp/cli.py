"""Command-line entry point: ``qfp <subcommand> ...``.

Exit codes: 0 success, 1 domain error (JSON object on stderr), 2 usage error.
JSON goes to stdout as a single object; CSV output always has a header row.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .errors import QfpError
from .linalg import as_rational, format_matrix_text, load_matrix, load_rational_matrix
from .local import default_budget


class FileNotFound(QfpError):
    code = "file-not-found"


@dataclass
class RunConfig:
    command: str
    matrix_path: Path | None = None
    t: int | None = None
    X: int | None = None
    Q: int | None = None
    K: float | None = None
    primes: tuple = (2, 3, 5)
    box: str = "positive"
    weights: str = "unit"
    budget: int = field(default_factory=default_budget)
    threads: int = 1
    output_format: str = "json"
    seed: int = 0

    def __post_init__(self):
        if self.budget <= 0:
            raise QfpError("budget must be positive")
        if self.threads < 1:
            raise QfpError("threads must be >= 1")
        if self.matrix_path is not None and not Path(self.matrix_path).is_file():
            raise FileNotFound(f"file not found: {self.matrix_path}")


def _ints(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _emit_json(obj, out):
    out.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _emit_csv(rows, out):
    w = csv.writer(out, lineterminator="\n")
    for r in rows:
        w.writerow(r)


def _existing(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFound(f"file not found: {path}")
    return p


def _cfg(args, **kw) -> RunConfig:
    return RunConfig(
        command=args.command,
        budget=args.budget if args.budget is not None else default_budget(),
        threads=args.threads,
        seed=args.seed,
        **kw,
    )


# --- handlers ---------------------------------------------------------------

def cmd_offdiag_rank(args, out):
    from .offdiag import offdiag_rank, offdiag_rank_oracle

    cfg = _cfg(args, matrix_path=args.matrix)
    A = load_matrix(cfg.matrix_path)
    rep = offdiag_rank_oracle(A) if args.oracle else offdiag_rank(A)
    _emit_json(rep.to_json(), out)


def cmd_classify(args, out):
    from .structure import classify_rank2

    cfg = _cfg(args, matrix_path=args.matrix)
    _emit_json(classify_rank2(load_matrix(cfg.matrix_path)).to_json(), out)


def cmd_decompose(args, out):
    from .offdiag import offdiag_rank
    from .structure import Rank1Form, Rank2Form22, decompose, find_quintuple_case22, find_quintuple_rank1

    cfg = _cfg(args, matrix_path=args.matrix)
    A = load_matrix(cfg.matrix_path)
    form, tag = decompose(A)
    quint = None
    if args.quintuple:
        if isinstance(form, Rank1Form):
            quint = find_quintuple_rank1(form).to_json()
        elif isinstance(form, Rank2Form22):
            quint = find_quintuple_case22(form).to_json()
        else:
            raise QfpError(f"quintuple selection is defined for rank-1 and Case22 forms, not {tag.case}")
    _emit_json({
        "offdiag_rank": offdiag_rank(A).value,
        "tag": tag.to_json() if tag else None,
        "form": form.to_json(),
        "quintuple": quint,
    }, out)


def cmd_singular_series(args, out):
    from .local import ProblemInstance, singular_series_truncated

    cfg = _cfg(args, matrix_path=args.matrix, t=args.t, Q=args.Q, primes=args.primes)
    inst = ProblemInstance(load_matrix(cfg.matrix_path), cfg.t)
    rep = singular_series_truncated(inst, cfg.Q, cfg.primes, k_max=args.kmax, budget=cfg.budget,
                                    single_phi=args.single_phi)
    _emit_json(rep.to_json(), out)


def cmd_count(args, out):
    from .counting import count_solutions
    from .local import ProblemInstance

    cfg = _cfg(args, matrix_path=args.matrix, t=args.t, X=args.X)
    inst = ProblemInstance(load_matrix(cfg.matrix_path), cfg.t)
    _emit_json(count_solutions(inst, cfg.X, cfg.budget).to_json(), out)


def cmd_bilinear_count(args, out):
    from .counting import count_bilinear

    cfg = _cfg(args, matrix_path=args.C, X=args.X, box=args.box)
    C = load_rational_matrix(cfg.matrix_path)
    H = load_rational_matrix(_existing(args.H)) if args.H else None
    n = count_bilinear(C, H, cfg.X, box=cfg.box, budget=cfg.budget)
    _emit_json({"X": cfg.X, "box": cfg.box, "count": n}, out)


def cmd_arcs_report(args, out):
    from .arcs import build_arcs, major_arc_integral, representation_histogram
    from .local import ProblemInstance

    cfg = _cfg(args, matrix_path=args.matrix, t=args.t, X=args.X, K=args.K, weights=args.weights)
    inst = ProblemInstance(load_matrix(cfg.matrix_path), cfg.t)
    hist = representation_histogram(inst, cfg.X, cfg.weights, mode=args.mode, budget=cfg.budget)
    arcs = build_arcs(cfg.X, cfg.K)
    rep = major_arc_integral(hist, cfg.t, arcs, inst if args.predict else None)
    obj = rep.to_json()
    obj.update({"X": cfg.X, "K": cfg.K, "P": float(arcs.P), "arcs": len(arcs.intervals),
                "weights": cfg.weights, "t": cfg.t})
    if args.csv_out:
        with open(args.csv_out, "w", newline="") as fh:
            _emit_csv(rep.per_q_csv_rows(), fh)
    _emit_json(obj, out)


def cmd_weyl_scan(args, out):
    from .arcs import minor_arc_scan

    cfg = _cfg(args, X=args.X, K=args.K)
    scan = minor_arc_scan(as_rational(args.d), cfg.X, args.grid, cfg.K)
    rows = [("alpha", "abs")] + [(repr(float(a)), repr(float(v))) for a, v in zip(scan.alphas, scan.values)]
    _emit_csv(rows, out)


def cmd_experiment(args, out):
    kind = args.kind
    if kind == "growth":
        from .counting import count_bilinear, count_paired_system, growth_exponent_fit

        cfg = _cfg(args, box=args.box)
        C = load_rational_matrix(_existing(args.C)) if args.C else [[1, 0], [0, -1]]
        H = load_rational_matrix(_existing(args.H)) if args.H else None
        rows = [("X", "count", "logX", "logCount")]
        samples = []
        for X in args.Xs:
            if args.op == "bilinear":
                c = count_bilinear(C, H, X, box=cfg.box, budget=cfg.budget)
            else:
                c = count_paired_system(C, H, X, budget=cfg.budget)
            samples.append((X, c))
            rows.append((X, c, repr(math.log(X)), repr(math.log(c)) if c > 0 else "nan"))
        if args.fit is not None:
            _emit_json(growth_exponent_fit(samples, args.fit).to_json(), out)
        else:
            _emit_csv(rows, out)
    elif kind == "injection":
        from .counting import verify_injection

        cfg = _cfg(args, matrix_path=args.C, X=args.X)
        H = load_rational_matrix(_existing(args.H)) if args.H else None
        rep = verify_injection(load_rational_matrix(cfg.matrix_path), H, cfg.X, cfg.budget)
        _emit_json(rep.to_json(), out)
    elif kind == "paired":
        from .counting import count_paired_system

        cfg = _cfg(args, matrix_path=args.C, X=args.X)
        H = load_rational_matrix(_existing(args.H)) if args.H else None
        v = count_paired_system(load_rational_matrix(cfg.matrix_path), H, cfg.X, weighted=args.weighted,
                                budget=cfg.budget)
        _emit_json({"X": cfg.X, "weighted": args.weighted, "count": v}, out)
    elif kind == "generate":
        from .structure import random_form

        cfg = _cfg(args)
        form = random_form(args.form, args.n, cfg.seed)
        if args.show_form:
            _emit_json({"form": form.to_json(), "matrix": form.assemble().to_rows()}, out)
        else:
            out.write(format_matrix_text(form.assemble()))
    elif kind == "gauss":
        from .local import gauss_sum

        cfg = _cfg(args, matrix_path=args.matrix, Q=args.q)
        z = gauss_sum(load_matrix(cfg.matrix_path), args.q, args.a, method=args.method, budget=cfg.budget)
        _emit_json({"q": args.q, "a": args.a, "value": {"re": z.real, "im": z.imag}}, out)


def cmd_verify(args, out):
    from .verify import run_verify

    cfg = _cfg(args)
    rep = run_verify(args.scope, cfg.budget, cfg.seed)
    _emit_json(rep.to_json(), out)
    return 0 if rep.overall == "pass" else 1


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--budget", type=int, default=None,
                        help="enumeration cap (default: $QFP_BUDGET or 10^9)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker cap (accepted for compatibility; runs are single-threaded)")
    common.add_argument("--seed", type=int, default=0)

    p = argparse.ArgumentParser(prog="qfp", description="Quadratic forms in prime variables.")
    sub = p.add_subparsers(dest="command", metavar="command", required=True)

    s = sub.add_parser("offdiag-rank", parents=[common], help="off-diagonal rank with a witness")
    s.add_argument("matrix")
    s.add_argument("--oracle", action="store_true", help="use exhaustive search")
    s.set_defaults(func=cmd_offdiag_rank)

    s = sub.add_parser("classify", parents=[common], help="Case11/Case21/Case22 tag of an off-diagonal rank 2 matrix")
    s.add_argument("matrix")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("decompose", parents=[common], help="canonical block form for off-diagonal rank 1 or 2")
    s.add_argument("matrix")
    s.add_argument("--quintuple", action="store_true", help="also select a quintuple of indices")
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("singular-series", parents=[common], help="truncated singular series and local densities")
    s.add_argument("matrix")
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--Q", type=int, required=True)
    s.add_argument("--primes", type=_ints, default=(2, 3, 5))
    s.add_argument("--kmax", type=int, default=None)
    s.add_argument("--single-phi", action="store_true", help="use 1/phi(q) instead of phi(q)^-n")
    s.set_defaults(func=cmd_singular_series)

    s = sub.add_parser("count", parents=[common], help="prime-power solutions of x^T A x = t in [1, X]^n")
    s.add_argument("matrix")
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--X", type=int, required=True)
    s.set_defaults(func=cmd_count)

    s = sub.add_parser("bilinear-count", parents=[common], help="#{(x, y): x^T C y = 0, x^T H = 0}")
    s.add_argument("--C", required=True)
    s.add_argument("--H")
    s.add_argument("--X", type=int, required=True)
    s.add_argument("--box", choices=["positive", "symmetric"], default="positive")
    s.set_defaults(func=cmd_bilinear_count)

    s = sub.add_parser("arcs-report", parents=[common], help="major/minor arc integrals of S(alpha) e(-alpha t)")
    s.add_argument("matrix")
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--X", type=int, required=True)
    s.add_argument("--K", type=float, required=True)
    s.add_argument("--weights", choices=["unit", "lambda"], default="unit")
    s.add_argument("--mode", choices=["direct", "split"], default="direct")
    s.add_argument("--csv-out", help="write per-q contributions to this CSV file")
    s.add_argument("--no-predict", dest="predict", action="store_false",
                   help="skip the singular-series prediction")
    s.set_defaults(func=cmd_arcs_report)

    s = sub.add_parser("weyl-scan", parents=[common], help="|sum Lambda(x) e(alpha d x^2)| on a minor-arc grid (CSV)")
    s.add_argument("--d", required=True, help="nonzero rational, e.g. 3/2")
    s.add_argument("--X", type=int, required=True)
    s.add_argument("--K", type=float, default=1.0)
    s.add_argument("--grid", type=int, default=1000)
    s.set_defaults(func=cmd_weyl_scan)

    s = sub.add_parser("experiment", parents=[common], help="growth fits, injection checks, paired counts, generators")
    s.add_argument("kind", choices=["growth", "injection", "paired", "generate", "gauss"])
    s.add_argument("matrix", nargs="?", help="matrix file (gauss)")
    s.add_argument("--op", choices=["bilinear", "paired"], default="bilinear")
    s.add_argument("--Xs", type=_ints, default=(50, 100, 200, 400))
    s.add_argument("--X", type=int, default=5)
    s.add_argument("--C")
    s.add_argument("--H")
    s.add_argument("--box", choices=["positive", "symmetric"], default="positive")
    s.add_argument("--fit", type=float, default=None, help="predicted exponent; print the log-log fit as JSON instead of CSV")
    s.add_argument("--weighted", action="store_true")
    s.add_argument("--form", choices=["rank1", "case11", "case21", "case22"], default="rank1")
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--show-form", action="store_true")
    s.add_argument("--q", type=int, default=1)
    s.add_argument("--a", type=int, default=1)
    s.add_argument("--method", choices=["crt", "direct"], default="crt")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("verify", parents=[common], help="run the invariant suites")
    s.add_argument("scope", nargs="?", default="all")
    s.set_defaults(func=cmd_verify)
    return p


def _check_experiment_args(args, parser):
    need = {"injection": ["C"], "paired": ["C"], "gauss": ["matrix"]}.get(args.kind, [])
    for name in need:
        if getattr(args, name) is None:
            parser.error(f"experiment {args.kind} requires {'--' + name if name != 'matrix' else 'a matrix file'}")


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "experiment":
            _check_experiment_args(args, parser)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        rc = args.func(args, out)
    except FileNotFoundError as e:
        _emit_json({"error": "file-not-found", "message": f"file not found: {e.filename}"}, err)
        return 1
    except QfpError as e:
        _emit_json({"error": e.code, "message": str(e)}, err)
        return 1
    except (ValueError, ZeroDivisionError) as e:
        _emit_json({"error": "invalid-argument", "message": str(e)}, err)
        return 1
    return rc or 0


def run(argv) -> tuple:
    """(exit code, stdout, stderr) for an in-process invocation."""
    out, err = io.StringIO(), io.StringIO()
    # argparse prints help and usage errors on the real streams
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        rc = main(argv, out, err)
    return rc, out.getvalue(), err.getvalue()


if __name__ == "__main__":
    sys.exit(main())
