"""Scenario files: load inputs, run one operation, write trace and summary artifacts.

A scenario is a JSON object::

    {"name": "...", "operation": "...", "horizon": N,
     "inputs": {...}, "params": {...},
     "outputs": {"trace": "x.trace.jsonl", "summary": "x.summary.csv"},
     "expect": {"summary": {...}, "assertions": {...}}}

Reals are given as corpus specs (``{"family": ...}``), corpus names
(``{"named": ...}``) or inline prefixes (``{"inline": {...}}``).  Output
paths are relative to the output directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable

from . import randomness_tests as rt
from .approximations import (
    ClassTag,
    approximation_from_json,
    bracket_report,
    compose_order,
    make_order,
    normalize_distinct_dyadic,
    verify_class,
)
from .constructions import (
    StageTrace,
    bounded_inc_test_from_speedup,
    converging_test_from,
    dce_test_from,
    lce_test_from,
    speedup_from_bounded_inc_test,
    speedup_from_ml,
    weak_speed_test,
    zero_speedup,
)
from .constructions.trace import _plain
from .corpus import make_corpus_real, make_corpus_test, named_real, named_test
from .errors import PreconditionError
from .numerics import Interval, is_dyadic, parse_number
from . import speedability as sp


class ScenarioError(PreconditionError):
    """Malformed scenario file."""


@dataclass
class Scenario:
    name: str
    operation: str
    horizon: int
    inputs: dict
    params: dict
    outputs: dict
    expect: dict

    @classmethod
    def from_json(cls, doc) -> "Scenario":
        if not isinstance(doc, dict):
            raise ScenarioError("scenario must be a JSON object")
        missing = [k for k in ("name", "operation", "horizon") if k not in doc]
        if missing:
            raise ScenarioError(f"scenario lacks {', '.join(missing)}")
        if doc["operation"] not in OPERATIONS:
            raise ScenarioError(f"unknown operation {doc['operation']!r}")
        horizon = doc["horizon"]
        if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon < 1:
            raise ScenarioError("horizon must be a positive integer")
        name = str(doc["name"])
        outputs = dict(doc.get("outputs") or {})
        outputs.setdefault("trace", f"{name}.trace.jsonl")
        outputs.setdefault("summary", f"{name}.summary.csv")
        return cls(name, doc["operation"], horizon, dict(doc.get("inputs") or {}),
                   dict(doc.get("params") or {}), outputs, dict(doc.get("expect") or {}))

    @classmethod
    def load(cls, path) -> "Scenario":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: invalid JSON ({exc.msg})") from None
        return cls.from_json(doc)


# -- input resolution ---------------------------------------------------------------


def load_real(spec):
    """A corpus spec, ``{"named": name}``, or ``{"inline": approximation JSON}``.

    Optional keys ``normalize`` (bool) and ``compose`` (order spec) post-process it.
    """
    if isinstance(spec, str):
        spec = {"named": spec}
    if not isinstance(spec, dict):
        raise ScenarioError("real spec must be an object or a corpus name")
    if "named" in spec:
        a = named_real(spec["named"])
    elif "inline" in spec:
        a = approximation_from_json(spec["inline"])
    else:
        a = make_corpus_real({"family": spec.get("family"), "params": spec.get("params", {})})
    if spec.get("compose") is not None:
        a = compose_order(a, make_order(spec["compose"]))
    if spec.get("normalize"):
        a = normalize_distinct_dyadic(a)
    return a


def load_test(spec, horizon: int):
    if isinstance(spec, str):
        spec = {"named": spec}
    if not isinstance(spec, dict):
        raise ScenarioError("test spec must be an object or a corpus name")
    if "named" in spec:
        return named_test(spec["named"], horizon)
    if "inline" in spec:
        return rt.SolovayTest.from_json(spec["inline"])
    return make_corpus_test(spec, horizon)


def load_ml(spec):
    """``{"inline": ...}`` or ``{"kind": "prefixes"|"decoys", "target": x, "levels": n}``; always disjointified."""
    if not isinstance(spec, dict):
        raise ScenarioError("ML test spec must be an object")
    if "inline" in spec:
        m = rt.MLTest.from_json(spec["inline"])
    else:
        builders = {"prefixes": rt.ml_test_for, "decoys": rt.ml_test_with_decoys}
        kind = spec.get("kind", "prefixes")
        if kind not in builders:
            raise ScenarioError(f"unknown ML test kind {kind!r}")
        m = builders[kind](parse_number(spec["target"]), int(spec.get("levels", 40)))
    return rt.disjointify(m)


def _need(sc: Scenario, key: str):
    if key not in sc.inputs:
        raise ScenarioError(f"operation {sc.operation} needs input {key!r}")
    return sc.inputs[key]


def _frac(sc: Scenario, key: str, default=None) -> Fraction:
    if key not in sc.params:
        if default is None:
            raise ScenarioError(f"operation {sc.operation} needs parameter {key!r}")
        return Fraction(default)
    return parse_number(sc.params[key])


# -- operations -------------------------------------------------------------------------
# each takes a scenario and returns a StageTrace


def op_normalize(sc):
    a = normalize_distinct_dyadic(load_real(_need(sc, "real")))
    terms = a.terms(a.max_index(sc.horizon))
    tr = StageTrace("normalize_distinct_dyadic")
    for s, x in enumerate(terms):
        tr.record(stage=s, term=x)
    tr.flag("all_dyadic", all(is_dyadic(x) for x in terms))
    tr.flag("pairwise_distinct", len(set(terms)) == len(terms))
    rep = verify_class(a, sc.horizon)
    tr.flag("class_preserved", rep.ok, rep.reason or None)
    tr.summary.update(class_tag=a.class_tag.value, variation=rep.variation, horizon=sc.horizon)
    return tr


def op_verify_class(sc):
    a = load_real(_need(sc, "real"))
    tag = ClassTag.parse(sc.params["class"]) if "class" in sc.params else None
    rep = verify_class(a, sc.horizon, tag)
    tr = StageTrace("verify_class")
    tr.flag("class_holds", rep.ok, {"first_violation": rep.first_violation, "reason": rep.reason})
    tr.summary.update({k: v for k, v in rep.to_json().items() if k != "ok"})
    return tr


def op_two_sided(sc):
    a = load_real(_need(sc, "real"))
    rep = bracket_report(a, sc.horizon)
    tr = StageTrace("two_sided")
    for s in rep.stable:
        tr.record(stage=s, bracketed=s in rep.bracketed)
    tr.flag("brackets_at_stable_stages", not rep.failures, {"failures": rep.failures})
    tr.check("below_count_ge_stable", rep.below, ">=", len(rep.stable))
    tr.check("above_count_ge_stable", rep.above, ">=", len(rep.stable))
    tr.summary.update(stable=len(rep.stable), bracketed=len(rep.bracketed), below=rep.below,
                      above=rep.above, horizon=sc.horizon)
    return tr


def op_ratio_trace(sc):
    a = load_real(_need(sc, "real"))
    f = make_order(sc.params.get("order", {"kind": "shift", "k": 1}))
    trace = sp.ratio_trace(a, f, sc.horizon)
    rho = _frac(sc, "rho", Fraction(1, 2))
    cert = sp.certify(trace, rho, int(sc.params.get("min_hits", 1)))
    tr = StageTrace("ratio_trace")
    for r in trace:
        tr.record(stage=r.s, f=r.f_s, ratio=r.ratio)
    ok = cert.verdict == sp.SPEEDABLE_BY_DEFINITION or cert.count >= int(sc.params.get("min_hits", 1))
    tr.flag("certificate", ok, cert.verdict)
    window = int(sc.params.get("window", 10))
    usable = [r for r in trace if not r.skipped]
    tr.summary.update(verdict=cert.verdict, hits=cert.count, rho=rho, horizon=sc.horizon,
                      liminf_upper_bound=sp.liminf_upper_bound(trace, window) if usable else None,
                      window=window)
    return tr


def op_weak_to_speedup(sc):
    a, b = load_real(_need(sc, "a")), load_real(_need(sc, "b"))
    f = sp.weak_to_speedup(a, b, int(sc.params.get("search", 8 * sc.horizon)))
    rho = _frac(sc, "rho", Fraction(1, 2))
    weak = sp.weak_certificate(a, b, rho, sc.horizon)
    trace = sp.ratio_trace(a, f, sc.horizon)
    cert = sp.certify(trace, rho)
    tr = StageTrace("weak_to_speedup")
    for r in trace:
        tr.record(stage=r.s, f=r.f_s, ratio=r.ratio)
    # f(n) >= any index m with a_m >= b_n, so the order does at least as well as b
    hits = set(cert.hits) | set(cert.skipped)
    tr.flag("order_nondecreasing", f.is_nondecreasing(sc.horizon))
    tr.flag("weak_hits_carry_over", set(weak.hits) <= hits, {"weak": len(weak.hits), "order": len(hits)})
    tr.summary.update(weak_hits=weak.count, order_hits=cert.count, rho=rho, horizon=sc.horizon,
                      order_prefix=f.values(min(sc.horizon, 20)))
    return tr


def op_solovay_shift(sc):
    a_ref, b_ref = load_real(_need(sc, "a_ref")), load_real(_need(sc, "b_ref"))
    new = load_real(_need(sc, "new"))
    c = _frac(sc, "c")
    side = sc.params.get("side", "left")
    if side not in ("left", "right"):
        raise ScenarioError("side must be 'left' or 'right'")
    shift = sp.solovay_shift_left if side == "left" else sp.solovay_shift_right
    res = shift(a_ref, b_ref, c, new, sc.horizon, sc.params.get("search"))
    tr = StageTrace(f"solovay_shift_{side}")
    for s, v in enumerate(res.order.values(sc.horizon)):
        tr.record(stage=s, index=v, term=res.approximation.term(s))
    tr.flag("witness_preserved", res.ok, {"first_violation": res.first_violation})
    tr.summary.update(c=c, checked=res.checked, side=side, horizon=sc.horizon)
    return tr


def op_nocover(sc):
    box = Interval(parse_number(_need(sc, "box")[0]), parse_number(_need(sc, "box")[1]))
    centers = [parse_number(z) for z in _need(sc, "centers")]
    radii = [parse_number(d) for d in _need(sc, "radii")]
    i = sp.nocover_witness(box, centers, radii)
    tr = StageTrace("nocover_witness")
    outside = [j for j, z in enumerate(centers) if z not in box]
    tr.record(witness=i, center=centers[i], outside=outside)
    tr.flag("witness_outside_box", centers[i] not in box)
    tr.summary.update(witness=i, m=len(centers) - 1, outside=len(outside))
    return tr


def op_escape_order(sc):
    a = load_real(_need(sc, "real"))
    state = sp.EscapeState.initial(_frac(sc, "rho"))
    cutoffs = [int(n) for n in sc.params.get("cutoffs", [0])]
    tr = StageTrace("escape_order")
    for n_i in cutoffs:
        state = sp.escape_order(a, state, n_i, sc.horizon, sc.params.get("search"))
        f = state.orders[-1]
        values = f.values(sc.horizon)
        tr.record(level=state.level, cutoff=n_i, values=values[: min(len(values), 32)])
        tr.flag(f"f_{state.level}_nondecreasing", f.is_nondecreasing(sc.horizon))
        tr.flag(f"f_{state.level}_above_identity", all(v > n for n, v in enumerate(values)))
    tr.summary.update(c=state.c, k=state.k, levels=state.level, horizon=sc.horizon,
                      strictly_increasing=[sp.is_strictly_increasing(f, sc.horizon) for f in state.orders[1:]])
    return tr


def op_speedup_from_ml(sc):
    r = load_real(_need(sc, "real"))
    m = load_ml(_need(sc, "ml_test"))
    stages = sc.params.get("max_stages")
    _, tr = speedup_from_ml(r, m, sc.horizon, None if stages is None else int(stages))
    return tr


def op_zero_speedup(sc):
    a = load_real(_need(sc, "real"))
    _, tr = zero_speedup(a, sc.horizon, settled_upto=int(sc.params.get("settled_upto", 8)))
    return tr


def op_weak_speed_test(sc):
    a, b = load_real(_need(sc, "a")), load_real(_need(sc, "b"))
    _, tr = weak_speed_test(a, b, _frac(sc, "rho", Fraction(1, 2)), sc.horizon)
    return tr


def _test_conversion(fn):
    def op(sc):
        t = load_test(_need(sc, "test"), int(sc.params.get("test_size", sc.horizon)))
        a = load_real(_need(sc, "real"))
        out, tr = fn(t, a, sc.horizon)
        for i, iv in enumerate(out.intervals):
            tr.flag(f"interval_{i}_from_input", any(iv.left >= src.left and iv.right <= src.right
                                                   for src in t.intervals))
        return tr
    return op


def op_bounded_inc_test(sc):
    a = load_real(_need(sc, "real"))
    _, tr = bounded_inc_test_from_speedup(a, sc.horizon)
    return tr


def op_speedup_from_bounded_inc(sc):
    t = load_test(_need(sc, "test"), sc.horizon)
    limit = sc.params.get("limit")
    _, _, tr = speedup_from_bounded_inc_test(t, _frac(sc, "d"), sc.horizon,
                                             None if limit is None else parse_number(limit))
    return tr


def op_classify_test(sc):
    t = load_test(_need(sc, "test"), sc.horizon)
    d = sc.params.get("d")
    rep = rt.classify_test(t, sc.horizon, None if d is None else parse_number(d))
    tr = StageTrace("classify_test")
    tr.flag("hierarchy_holds", rep.hierarchy_holds())
    for key in ("lce", "bounded_increments"):
        if key in sc.params.get("require", []):
            tr.flag(f"requires_{key}", bool(getattr(rep, key)))
    tr.summary.update(rep.to_json())
    return tr


OPERATIONS: dict[str, Callable] = {
    "normalize_distinct_dyadic": op_normalize,
    "verify_class": op_verify_class,
    "two_sided": op_two_sided,
    "ratio_trace": op_ratio_trace,
    "weak_to_speedup": op_weak_to_speedup,
    "solovay_shift": op_solovay_shift,
    "nocover_witness": op_nocover,
    "escape_order": op_escape_order,
    "speedup_from_ml": op_speedup_from_ml,
    "zero_speedup": op_zero_speedup,
    "weak_speed_test": op_weak_speed_test,
    "converging_test_from": _test_conversion(converging_test_from),
    "dce_test_from": _test_conversion(dce_test_from),
    "lce_test_from": _test_conversion(lce_test_from),
    "bounded_inc_test_from_speedup": op_bounded_inc_test,
    "speedup_from_bounded_inc_test": op_speedup_from_bounded_inc,
    "classify_test": op_classify_test,
}


# -- running and golden checks -------------------------------------------------------------


@dataclass
class RunResult:
    scenario: Scenario
    trace: StageTrace
    mismatches: list

    @property
    def ok(self) -> bool:
        return self.trace.ok and not self.mismatches

    def problems(self) -> list[str]:
        out = [f"assertion {a.name} failed: {_fmt(a.lhs)} {a.relation} {_fmt(a.rhs)}"
               for a in self.trace.failed()]
        return out + self.mismatches


def _fmt(value) -> str:
    value = _plain(value)
    return value if isinstance(value, str) else json.dumps(value, sort_keys=True)


def golden_mismatches(sc: Scenario, tr: StageTrace) -> list[str]:
    out = []
    for key, want in sorted(sc.expect.get("summary", {}).items()):
        got = _plain(tr.summary.get(key))
        if got != want:
            out.append(f"golden summary {key}: expected {json.dumps(want)}, got {json.dumps(got)}")
    for name, want in sorted(sc.expect.get("assertions", {}).items()):
        try:
            got = tr.assertion(name).holds
        except KeyError:
            out.append(f"golden assertion {name}: not produced")
            continue
        if got != want:
            out.append(f"golden assertion {name}: expected {want}, got {got}")
    return out


def run_scenario(sc: Scenario) -> RunResult:
    tr = OPERATIONS[sc.operation](sc)
    tr.summary.setdefault("scenario", sc.name)
    return RunResult(sc, tr, golden_mismatches(sc, tr))


def write_artifacts(result: RunResult, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    paths = []
    for key, text in (("trace", result.trace.to_jsonl()), ("summary", result.trace.summary_csv())):
        path = out_dir / result.scenario.outputs[key]
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        paths.append(path)
    return paths


def suite_files() -> list:
    """The shipped scenario files, sorted by name."""
    root = resources.files("speedlab") / "scenarios"
    return sorted((p for p in root.iterdir() if p.name.endswith(".json")), key=lambda p: p.name)

