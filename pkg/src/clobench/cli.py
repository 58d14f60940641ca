"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or schema error.
Reports are JSON on stdout unless --out is given; exact rationals are
written as "num/den" strings.
"""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .approximation import (ApproxParams, approximate_circuit, approximate_clo, count_errors,
                            negative_error_bound, positive_error_bound)
from .bundle import dumps, emit_bundle, parse_circuit_bundle
from .circuits import normal_form, verify_separation
from .constructions import CONSTRUCTIONS
from .errors import CloError
from .experiments import dichotomy_measure, flatten_dnf, phase_report, rows_to_csv, rows_to_json
from .rectangles import locality_exact, locality_mc, max_overlap
from .testsets import TestSuite

def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _fraction_arg(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="clobench", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"clobench {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", parents=[common], help="emit a built-in construction")
    p.add_argument("name", choices=sorted(CONSTRUCTIONS))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--ell", type=int, default=2)

    def bundle_cmd(name, help):
        q = sub.add_parser(name, parents=[common], help=help)
        q.add_argument("bundle", type=Path)
        return q

    bundle_cmd("verify", "check separation under F* on all of A")
    q = bundle_cmd("locality", "locality of the rectangle family")
    q.add_argument("--mode", choices=["exact", "mc"], default="exact")
    q.add_argument("--samples", type=int, default=100_000)
    q.add_argument("--n", type=int, help="override n (Monte Carlo mode)")
    q.add_argument("--k", type=int, help="override k (Monte Carlo mode)")
    q = bundle_cmd("overlap", "largest number of U-sets sharing a clique")
    q.add_argument("--d", type=int, help="also report whether A_d holds")
    q = bundle_cmd("normal-form", "expand into the OR over small oracle sets J")
    q.add_argument("--d", type=int, help="overlap bound (default: the measured overlap)")
    for name, help in (("approx", "approximate a CLO through its normal form"),
                       ("errors", "approximate an oracle-free circuit and count errors")):
        q = bundle_cmd(name, help)
        q.add_argument("--ell", type=int, required=True)
        q.add_argument("--p", type=int, required=True)
        q.add_argument("--m", type=int, required=True)
        if name == "approx":
            q.add_argument("--d", type=int)
    q = bundle_cmd("dichotomy", "measure a flat CLO on both sides under F*")
    q.add_argument("--mu-threshold", type=_fraction_arg, default=Fraction(1, 16))

    p = sub.add_parser("phase-report", parents=[common], help="depth-2 phase table for k=3")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=_fraction_arg, default=Fraction(1, 10))
    p.add_argument("--format", choices=["json", "csv"], default="json")
    return ap


def _report(args, params: dict, result: dict) -> dict:
    return {"tool": "clobench", "version": __version__, "command": args.command,
            "params": {**params, "seed": args.seed, "workers": args.workers},
            "result": result}


def _emit(args, text: str) -> None:
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return _dispatch(args)
    except CloError as exc:
        print(f"clobench: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"clobench: error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    cmd = args.command
    if cmd == "construct":
        if args.name == "triangle" and args.k != 3:
            print("clobench: error: the triangle construction needs k=3", file=sys.stderr)
            return 2
        C, W = CONSTRUCTIONS[args.name](args.n, args.k, args.ell)
        _emit(args, dumps(emit_bundle(C, W, args.n, args.k)))
        return 0

    if cmd == "phase-report":
        rows = phase_report(args.n, args.eps)
        if args.format == "csv":
            _emit(args, rows_to_csv(rows))
        else:
            _emit(args, dumps(_report(args, {"n": args.n, "eps": _frac(args.eps)},
                                      rows_to_json(rows, args.eps))))
        return 0 if all(r.separation == "pass" for r in rows) else 1

    C, W, n, k = parse_circuit_bundle(args.bundle)
    params = {"bundle": str(args.bundle), "n": n, "k": k, "size": C.size, "oracles": len(W)}
    status = 0

    if cmd == "locality" and args.mode == "mc":
        n2, k2 = args.n or n, args.k or k
        rep = locality_mc(W, n2, k2, args.samples, seed=args.seed, workers=args.workers)
        params.update(mode="mc", n=n2, k=k2, samples=args.samples)
        _emit(args, dumps(_report(args, params, rep.to_json())))
        return 0

    suite = TestSuite(n, k)
    if cmd == "verify":
        rep = verify_separation(C, W, suite)
        result = rep.to_json()
        status = 0 if rep.passed else 1
    elif cmd == "locality":
        mu = locality_exact(W, suite)
        params["mode"] = "exact"
        result = {"mode": "exact", "value": _frac(mu), "approx": float(mu)}
    elif cmd == "overlap":
        d_star = max_overlap(W, suite)
        result = {"max_overlap": d_star}
        if args.d is not None:
            params["d"] = args.d
            result["assumption_holds"] = d_star <= args.d
    elif cmd == "normal-form":
        d = args.d if args.d is not None else max_overlap(W, suite)
        params["d"] = d
        nf = normal_form(C, W, d, suite)
        result = {"d": d, "equivalent": True, "entries": [
            {"J": list(e.J), "size": e.circuit.size, "U": e.pair.U.to_json(),
             "V": e.pair.V.to_json()} for e in nf.entries]}
    elif cmd == "approx":
        ap_params = ApproxParams(args.ell, args.p, args.m)
        d = args.d if args.d is not None else max_overlap(W, suite)
        params.update(d=d, **ap_params.to_json())
        result = approximate_clo(C, W, d, ap_params, suite).to_json()
    elif cmd == "errors":
        ap_params = ApproxParams(args.ell, args.p, args.m)
        params.update(ap_params.to_json())
        if C.oracle_ids:
            print("clobench: error: 'errors' needs an oracle-free circuit "
                  "(use 'approx' for CLOs)", file=sys.stderr)
            return 2
        approx = approximate_circuit(C, ap_params)
        counts = count_errors(C, approx, suite)
        s = C.size
        result = {"approximator": approx.to_json(args.ell), **counts.to_json(),
                  "e_plus_bound": positive_error_bound(s, ap_params, n, k),
                  "e_minus_bound": negative_error_bound(s, ap_params, n, k)}
    elif cmd == "dichotomy":
        params["mu_threshold"] = _frac(args.mu_threshold)
        rep = dichotomy_measure(flatten_dnf(C, W), suite, args.mu_threshold)
        result = rep.to_json()
    else:  # pragma: no cover - argparse restricts the choices
        raise AssertionError(cmd)
    _emit(args, dumps(_report(args, params, result)))
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
