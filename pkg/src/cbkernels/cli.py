"""Command line front end.

    cbkernels gen {cp,hermitian,general,difference} --n 3 --p 2 --q 2 --seed 7 --out k.json
    cbkernels check k.json
    cbkernels decompose k.json --mode general --out d.json
    cbkernels verify-theorems --trials 5 --seed 0

Exit codes: 0 ok, 1 verification failure, 2 precondition or input
error, 3 numerical failure.
"""

import argparse
import json
import logging
import sys

from . import decomp, generators, kernel, suites
from .errors import (
    DeadlineExceeded,
    DimensionError,
    InternalConsistencyError,
    NotHermitianError,
    NotPSDError,
    PreconditionError,
    SdpError,
)

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_PRECONDITION = 2
EXIT_NUMERICAL = 3

SCHEMA_VERSION = 1

log = logging.getLogger("cbkernels")


class InputError(Exception):
    """Unreadable or malformed input file."""


def _dump(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_kernel(path):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return kernel.from_json(obj)
    except KeyError as exc:
        raise InputError(f"{path}: missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _report(kind, **fields):
    return {"schema": f"cbkernels.{kind}", "schema_version": SCHEMA_VERSION, **fields}


def cmd_gen(args):
    k, pair = generators.generate(args.kind, args.n, args.p, args.q, args.seed)
    out = kernel.to_json(k)
    out.update({"kind": args.kind, "seed": args.seed})
    if pair is not None:
        out["ground_truth"] = [kernel.to_json(pair[0]), kernel.to_json(pair[1])]
    _dump(out, args.out)
    return EXIT_OK


def cmd_check(args):
    k = _load_kernel(args.file)
    herm = kernel.is_hermitian_kernel(k, args.eps * max(1.0, k.norm()))
    cp = kernel.is_cp_kernel(k)
    l1, l2, t = decomp.offdiagonal_complete(k, eps=args.eps, max_iter=args.max_iter)
    tol = max(args.eps, 1e-9) * max(1.0, l1.norm(), l2.norm())
    decomposable = kernel.is_cp_2x2(kernel.assemble_2x2(l1, k, l2), tol)
    _dump(
        _report(
            "check",
            labels=list(k.labels),
            p=k.p,
            q=k.q,
            hermitian=bool(herm),
            cp=bool(cp),
            cb_norm=float(t),
            decomposable=bool(decomposable),
        ),
        args.out,
    )
    return EXIT_OK if decomposable else EXIT_VERIFY


def cmd_decompose(args):
    k = _load_kernel(args.file)
    opts = {"eps": args.eps, "max_iter": args.max_iter}
    if args.mode == "four":
        parts = decomp.four_cp(k, **opts)
        resid = decomp.combine_four(*parts).distance(k)
        cp = [bool(kernel.is_cp_kernel(c)) for c in parts]
        ok = all(cp) and resid <= 1e-6 * max(1.0, k.norm())
        if args.out:
            _dump({"parts": [kernel.to_json(c) for c in parts]}, args.out)
        _dump(_report("decompose", mode="four", parts_cp=cp, reconstruction_residual=resid, ok=ok), None)
        return EXIT_OK if ok else EXIT_VERIFY
    if args.mode == "positive":
        dec = decomp.kolmogorov_positive(k)
    elif args.mode == "hermitian":
        dec = decomp.kolmogorov_hermitian(k, **opts)
    else:
        dec = decomp.kolmogorov_general(k, **opts)
    tol = max(args.eps, 1e-9) if args.mode != "positive" else 1e-8
    report = decomp.verify_decomp(dec, k, tol)
    expect = {"positive": "J_psd", "hermitian": "J_selfadjoint"}.get(args.mode)
    ok = report["ok"] and (expect is None or report[expect])
    if args.out:
        _dump(decomp.to_json(dec), args.out)
    _dump(_report("decompose", mode=args.mode, m=dec.m, verification=report, ok=bool(ok)), None)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_verify_theorems(args):
    report = suites.verify_theorems(
        trials=args.trials,
        seed=args.seed,
        n=args.n,
        p=args.p,
        q=args.q,
        eps=args.eps,
        suites=args.suite or None,
        corrupt=tuple(args.corrupt or ()),
    )
    _dump(report, args.out)
    return EXIT_OK if report["ok"] else EXIT_VERIFY


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eps", type=_positive_float, default=1e-7, help="solver tolerance")
    common.add_argument("--max-iter", type=_positive_int, default=200, help="SDP iteration cap")
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--verbose", "-v", action="count", default=0, help="log progress (twice for SDP trace)")

    parser = argparse.ArgumentParser(prog="cbkernels", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="write a random kernel")
    gen.add_argument("kind", choices=generators.KINDS)
    gen.add_argument("--n", type=_positive_int, default=3)
    gen.add_argument("--p", type=_positive_int, default=2)
    gen.add_argument("--q", type=_positive_int, default=2)
    gen.add_argument("--seed", type=int, default=0)
    gen.set_defaults(func=cmd_gen)

    check = sub.add_parser("check", parents=[common], help="classify a kernel")
    check.add_argument("file")
    check.set_defaults(func=cmd_check)

    dec = sub.add_parser("decompose", parents=[common], help="Kolmogorov decomposition of a kernel")
    dec.add_argument("file")
    dec.add_argument("--mode", choices=("positive", "hermitian", "general", "four"), default="general")
    dec.set_defaults(func=cmd_decompose)

    ver = sub.add_parser("verify-theorems", parents=[common], help="run the property suites")
    ver.add_argument("--trials", type=int, default=None, help="instances per suite (default: each suite's own)")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--n", type=_positive_int, default=None)
    ver.add_argument("--p", type=_positive_int, default=None)
    ver.add_argument("--q", type=_positive_int, default=None)
    ver.add_argument("--suite", action="append", choices=sorted(suites.SUITES), help="run only these suites")
    ver.add_argument("--corrupt", action="append", choices=suites.CORRUPTIBLE,
                     help="inject a corrupted instance into this suite")
    ver.set_defaults(func=cmd_verify_theorems)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(name)s %(levelname)s %(message)s", stream=sys.stderr)
    if getattr(args, "trials", None) is not None and args.trials < 0:
        parser.error("--trials must be nonnegative")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (PreconditionError, NotHermitianError, NotPSDError, DimensionError) as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (SdpError, DeadlineExceeded) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InternalConsistencyError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
