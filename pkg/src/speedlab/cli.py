"""Command line entry point: ``speedlab run | verify | trace-ratio | corpus``.

Exit codes: 0 success, 1 an assertion or golden value failed, 2 malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import corpus
from . import randomness_tests as rt
from . import speedability as sp
from .approximations import ClassTag, approximation_from_json, make_order, verify_class
from .errors import HorizonExhausted, InvariantViolation, PreconditionError, SpeedlabError
from .numerics import format_number, parse_number
from .runner import Scenario, run_scenario, suite_files, write_artifacts

EXIT_OK, EXIT_FAIL, EXIT_MALFORMED = 0, 1, 2


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


# -- run --------------------------------------------------------------------------------


def _run_one(path: str, out_dir: str):
    """Run one scenario file; returns ``(exit code, stdout line, stderr lines)``."""
    try:
        sc = Scenario.load(path)
        result = run_scenario(sc)
    except (OSError, PreconditionError) as exc:
        return EXIT_MALFORMED, f"MALFORMED {path}", [f"{path}: {exc}"]
    except (HorizonExhausted, InvariantViolation) as exc:
        return EXIT_FAIL, f"FAIL {path}", [f"{path}: {type(exc).__name__}: {exc}"]
    write_artifacts(result, out_dir)
    if result.ok:
        return EXIT_OK, f"ok   {sc.name} ({len(result.trace.assertions)} assertions)", []
    return EXIT_FAIL, f"FAIL {sc.name}", [f"{sc.name}: {p}" for p in result.problems()]


def cmd_run(args) -> int:
    paths = [str(p) for p in args.scenarios]
    if args.suite:
        paths += [str(p) for p in suite_files()]
    if not paths:
        _err("run: give scenario files or --suite")
        return EXIT_MALFORMED
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, paths, [args.out] * len(paths)))
    else:
        results = [_run_one(p, args.out) for p in paths]
    for _, line, errors in results:
        print(line)
        for e in errors:
            _err(e)
    return max(code for code, _, _ in results)


# -- verify ------------------------------------------------------------------------------


def _load_source(tokens, horizon: int):
    """``corpus NAME`` or a JSON file holding an approximation, a Solovay test or an ML test."""
    if tokens[0] == "corpus":
        if len(tokens) != 2:
            raise PreconditionError("usage: corpus NAME")
        name = tokens[1]
        if name in corpus.NAMED_REALS:
            return "approximation", corpus.named_real(name)
        if name in corpus.NAMED_TESTS:
            return "solovay", corpus.named_test(name, horizon)
        raise PreconditionError(f"unknown corpus entry {name!r}")
    if len(tokens) != 1:
        raise PreconditionError("give one file or 'corpus NAME'")
    try:
        doc = json.loads(Path(tokens[0]).read_text())
    except json.JSONDecodeError as exc:
        raise PreconditionError(f"{tokens[0]}: invalid JSON ({exc.msg})") from None
    if not isinstance(doc, dict):
        raise PreconditionError("expected a JSON object")
    if "intervals" in doc:
        return "solovay", rt.SolovayTest.from_json(doc)
    if "levels" in doc:
        return "ml", rt.MLTest.from_json(doc)
    if "prefix" in doc:
        return "approximation", approximation_from_json(doc)
    if "family" in doc:
        return "approximation", corpus.make_corpus_real(doc)
    raise PreconditionError("cannot tell what this JSON describes")


def cmd_verify(args) -> int:
    kind, obj = _load_source(args.source, args.horizon)
    if kind == "approximation":
        if args.bounded_increments is not None:
            raise PreconditionError("--bounded-increments applies to Solovay tests")
        tag = ClassTag.parse(args.cls) if args.cls else None
        rep = verify_class(obj, args.horizon, tag)
        print(json.dumps(rep.to_json(), sort_keys=True))
        return EXIT_OK if rep.ok else EXIT_FAIL
    if kind == "ml":
        report = {"levels": len(obj.levels), "disjoint": obj.is_disjoint(),
                  "measures": [format_number(obj.measure(i)) for i in range(len(obj.levels))]}
        print(json.dumps(report, sort_keys=True))
        return EXIT_OK
    d = parse_number(args.bounded_increments) if args.bounded_increments is not None else None
    rep = rt.classify_test(obj, min(args.horizon, len(obj) - 1) if len(obj) > 2 else 2, d)
    print(json.dumps(rep.to_json(), sort_keys=True))
    ok = rep.hierarchy_holds()
    if args.cls:
        wanted = args.cls.replace("-", "").replace(".", "").lower()
        checks = {"lce": rep.lce, "leftce": rep.lce, "dce": rep.dce, "converging": True}
        if wanted not in checks:
            raise PreconditionError(f"unknown test class {args.cls!r}; use lce, dce or converging")
        ok &= checks[wanted]
    if d is not None:
        ok &= bool(rep.bounded_increments)
    return EXIT_OK if ok else EXIT_FAIL


# -- trace-ratio ------------------------------------------------------------------------


def parse_order(text: str):
    """``kind`` or ``kind:k`` or ``kind:k:b`` or a JSON order spec."""
    text = text.strip()
    if text.startswith("{"):
        return make_order(json.loads(text))
    parts = text.split(":")
    spec = {"kind": parts[0]}
    if len(parts) > 1:
        spec["k"] = int(parts[1])
    if len(parts) > 2:
        spec["b"] = int(parts[2])
    return make_order(spec)


def cmd_trace_ratio(args) -> int:
    kind, a = _load_source(args.approx, args.horizon)
    if kind != "approximation":
        raise PreconditionError("trace-ratio needs an approximation")
    if a.declared_limit is None:
        raise PreconditionError("trace-ratio needs a declared limit")
    f = parse_order(args.order)
    trace = sp.ratio_trace(a, f, args.horizon)
    csv_text = sp.trace_csv(trace, args.window)
    cert = sp.certify(trace, parse_number(args.rho))
    if args.out:
        Path(args.out).write_text(csv_text)
    else:
        sys.stdout.write(csv_text)
    _err(f"verdict: {cert.verdict}")
    return EXIT_OK


# -- corpus ---------------------------------------------------------------------------------


def cmd_corpus(args) -> int:
    if args.action == "list":
        for name in sorted(corpus.NAMED_REALS):
            print(f"real  {name}  {corpus.NAMED_REALS[name]['family']}")
        for name in sorted(corpus.NAMED_TESTS):
            print(f"test  {name}  {corpus.NAMED_TESTS[name]['family']}")
        return EXIT_OK
    if not args.name:
        raise PreconditionError("corpus emit needs a name")
    if args.name in corpus.NAMED_REALS:
        doc = corpus.named_real(args.name).to_json(args.horizon)
    elif args.name in corpus.NAMED_TESTS:
        doc = corpus.named_test(args.name, args.horizon).to_json()
    else:
        raise PreconditionError(f"unknown corpus entry {args.name!r}")
    print(json.dumps(doc, sort_keys=True, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="speedlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run scenario files")
    run.add_argument("scenarios", nargs="*", type=Path)
    run.add_argument("--suite", action="store_true", help="also run every shipped scenario")
    run.add_argument("--out", default="speedlab-out", help="artifact directory (default: %(default)s)")
    run.add_argument("--jobs", type=int, default=1, help="scenarios to run in parallel")
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="classify an approximation or a test")
    ver.add_argument("source", nargs="+", help="a JSON file, or: corpus NAME")
    ver.add_argument("--class", dest="cls", help="CA, LeftCE, RightCE, DCE (approximations); lce, dce (tests)")
    ver.add_argument("--bounded-increments", metavar="D", help="require bounded increments with constant D")
    ver.add_argument("--horizon", type=int, default=64)
    ver.set_defaults(func=cmd_verify)

    tr = sub.add_parser("trace-ratio", help="ratio trace of an approximation under an order")
    tr.add_argument("approx", nargs="+", help="a JSON file, or: corpus NAME")
    tr.add_argument("--order", default="shift:1", help="kind[:k[:b]] or a JSON spec (default: %(default)s)")
    tr.add_argument("--horizon", type=int, default=32)
    tr.add_argument("--window", type=int, default=None, help="add a liminf upper-bound row over this window")
    tr.add_argument("--rho", default="1/2", help="threshold for the verdict (default: %(default)s)")
    tr.add_argument("--out", help="write CSV here instead of standard output")
    tr.set_defaults(func=cmd_trace_ratio)

    co = sub.add_parser("corpus", help="list or emit corpus entries")
    co.add_argument("action", choices=["list", "emit"])
    co.add_argument("name", nargs="?")
    co.add_argument("--horizon", type=int, default=16)
    co.set_defaults(func=cmd_corpus)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PreconditionError, OSError, ValueError) as exc:
        _err(f"error: {exc}")
        return EXIT_MALFORMED
    except SpeedlabError as exc:
        _err(f"error: {type(exc).__name__}: {exc}")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
