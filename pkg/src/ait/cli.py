"""Command-line entry point ``ait``.

Every subcommand prints one JSON object. ``--report FILE`` saves the same
object and ``--csv FILE`` a flat key/value table (for ``run``: the full
report and its per-check summary). The exit status is 0 when every asserted
verdict holds, 1 when one fails, and 2 on bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

from ait import codec, harness, machine, randomness, semimeasure
from ait import measures as ms
from ait.bits import EMPTY, check_bits, format_dyadic, format_rational
from ait.machine import Mode


class UsageError(ValueError):
    pass


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _flatten(obj, prefix: str = "") -> list[tuple[str, str]]:
    if isinstance(obj, dict):
        rows = []
        for k in sorted(obj):
            rows += _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
        return rows
    if isinstance(obj, list):
        return [(prefix, json.dumps(obj, sort_keys=True))]
    return [(prefix, "" if obj is None else str(obj))]


def _emit(args, payload: dict, ok: bool = True) -> int:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    sys.stdout.write(text)
    if args.report:
        Path(args.report).write_text(text)
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        w.writerows(_flatten(payload))
        Path(args.csv).write_text(buf.getvalue())
    return 0 if ok else 1


def _cache_or_enumerate(args, mode: Mode, condition: str) -> machine.EnumerationCache:
    if args.cache:
        cache = machine.load_cache(args.cache)
        if cache.mode is not mode:
            raise UsageError(f"{args.cache} holds a {cache.mode.value} enumeration, need {mode.value}")
        if cache.condition != condition:
            raise UsageError(f"{args.cache} was built with condition {cache.condition!r}, not {condition!r}")
        return machine.register_cache(cache)
    if args.max_len is None or args.budget is None:
        raise UsageError("give --cache FILE or both --max-len and --budget")
    return machine.enumerate_programs(mode, args.max_len, args.budget, condition)


# -- subcommands --------------------------------------------------------------------------------


def cmd_enumerate(args) -> int:
    cond = check_bits(args.cond)
    cache = machine.enumerate_programs(args.mode, args.max_len, args.budget, cond)
    if args.cache:
        machine.save_cache(cache, args.cache)
    payload = {"mode": cache.mode.value, "L": cache.max_len, "t": cache.budget, "cond": cond,
               "programs": len(cache.entries), "halted": len(cache.halted())}
    ok = True
    if cache.mode is Mode.SELF_DELIM:
        kraft = machine.kraft_of_domain(cache.max_len, cache.budget, cond)
        pf = codec.prefix_free_check(cache.domain)
        payload.update(domain=len(cache.domain), kraft_sum=format_dyadic(kraft), prefix_free=pf)
        ok = pf and kraft <= 1
    return _emit(args, payload, ok)


def cmd_k(args) -> int:
    x, cond = check_bits(args.x), check_bits(args.cond)
    cache = _cache_or_enumerate(args, Mode.parse(args.mode), cond)
    p = cache.shortest.get(x)
    payload = {"x": x, "cond": cond, "mode": cache.mode.value, "L": cache.max_len, "t": cache.budget,
               "K": "absent" if p is None else len(p), "witness": p}
    return _emit(args, payload)


def cmd_omega(args) -> int:
    om = semimeasure.omega_t(args.max_len, args.budget)
    return _emit(args, {"L": args.max_len, "t": args.budget, "omega": format_dyadic(om), "omega_float": float(om)}, om <= 1)


def cmd_coding_code(args) -> int:
    stream = semimeasure.EnumerationStream.from_file(args.stream)
    book = semimeasure.coding_code(stream)
    best = {}
    for z, k in stream.items:
        best[z] = min(k, best.get(z, k))
    ok = codec.prefix_free_check(book.codewords) and all(len(book.encode(z)) <= k + 3 for z, k in best.items())
    payload = {"code": json.loads(book.to_json()), "kraft_sum": format_dyadic(codec.kraft_sum(book))}
    return _emit(args, payload, ok)


def cmd_lln(args) -> int:
    res = randomness.lln_test(check_bits(args.x), args.bits)
    return _emit(args, {"x": args.x, "payoff": format_rational(res.payoff), "d": str(res.d), "d_lo": format_rational(res.d.lo), "d_hi": format_rational(res.d.hi)})


def cmd_check_test(args) -> int:
    test = randomness.TestTable.from_dict(_read_json(args.test))
    dist = randomness.DistributionSpec.from_dict(_read_json(args.dist))
    integ = randomness.integrable_check(test, dist)
    ml = randomness.ml_check(test, dist)
    payload = {
        "integrable": integ.ok,
        "expectation": format_rational(integ.expectation),
        "martin_lof": ml.ok,
        "failed_at_k": ml.failed_at,
        "tails": [format_rational(t) for t in ml.tails],
    }
    return _emit(args, payload, integ.ok and ml.ok)


def cmd_bernoulli_validate(args) -> int:
    table = randomness.BernoulliTestTable.from_dict(_read_json(args.table))
    v = randomness.bernoulli_validate(table)
    return _emit(args, {"n": table.n, "valid": v.ok, "violations": list(v.violations)}, v.ok)


def cmd_conserve(args) -> int:
    if args.map not in randomness.NAMED_MAPS:
        raise UsageError(f"unknown map {args.map!r}; choose from {sorted(randomness.NAMED_MAPS)}")
    cache = _cache_or_enumerate(args, Mode.SELF_DELIM, EMPTY)
    rep = randomness.conservation_report(
        randomness.NAMED_MAPS[args.map], randomness.DistributionSpec.uniform(args.n), cache.max_len, cache.budget
    )
    payload = {
        "map": args.map, "n": args.n, "L": cache.max_len, "t": cache.budget,
        "expectation": format_rational(rep.expectation),
        "witness_mass": format_rational(rep.witness_mass),
        "missing": rep.missing,
        "max_gap": None if rep.max_gap is None else str(rep.max_gap),
        "ok": rep.ok,
    }
    return _emit(args, payload, rep.ok)


def _measure(path: str) -> ms.FiniteMeasure:
    d = _read_json(path)
    if "kind" in d:
        P = randomness.DistributionSpec.from_dict(d)
        return ms.FiniteMeasure.of(dict(P.items()))
    return ms.FiniteMeasure.from_dict(d)


def cmd_entropy(args) -> int:
    P = _measure(args.dist)
    H = ms.entropy(P, args.bits)
    return _emit(args, {"entropy": str(H), "lo": format_rational(H.lo), "hi": format_rational(H.hi), "bits": args.bits})


def cmd_distance(args) -> int:
    P, Q = _measure(args.p), _measure(args.q)
    if args.kind == "tv":
        return _emit(args, {"kind": "tv", "value": format_rational(ms.tv_distance(P, Q))})
    if not args.metric:
        raise UsageError(f"--metric is required for {args.kind}")
    m = ms.MetricSpec.from_dict(_read_json(args.metric))
    if args.kind == "prokhorov":
        r = ms.prokhorov_report(P, Q, m)
        payload = {"kind": "prokhorov", "value": format_rational(r.value),
                   "forward": format_rational(r.forward), "backward": format_rational(r.backward)}
        return _emit(args, payload)
    plan = ms.transport(P, Q, m)
    payload = {
        "kind": "wasserstein",
        "value": format_rational(plan.cost),
        "plan": [[str(P.points[i]), str(Q.points[j]), format_rational(v)] for (i, j), v in sorted(plan.flow.items())],
        "dual_certified": ms.dual_certificate_ok(P, Q, m, plan),
    }
    return _emit(args, payload, payload["dual_certified"])


def cmd_run(args) -> int:
    path = Path(args.config)
    if not path.exists() and harness.bundled_config(args.config).exists():
        path = harness.bundled_config(args.config)
    data = _read_json(str(path))
    if args.report:
        data["report"] = args.report
    if args.csv:
        data["csv"] = args.csv
    if args.cache_dir:
        data["cache_dir"] = args.cache_dir
    cfg = harness.ExperimentConfig.from_dict(data)
    report = harness.run_experiment(cfg)
    if not args.quiet:
        sys.stdout.write(report.to_json())
    for r in report.records:
        if r.asserted:
            print(f"{r.status.upper():4s} {r.name}", file=sys.stderr)
    return 0 if report.ok else 1


def cmd_cache_merge(args) -> int:
    merged = harness.cache_merge(args.caches, args.out)
    payload = {"inputs": list(args.caches), "out": args.out, "mode": merged.mode.value,
               "L": merged.max_len, "t": merged.budget, "programs": len(merged.entries), "halted": len(merged.halted())}
    return _emit(args, payload)


# -- parser --------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    root = argparse.ArgumentParser(prog="ait", description="Bounded algorithmic information experiments.")
    root.add_argument("--report", help="also write the JSON output to this file")
    root.add_argument("--csv", help="also write a CSV summary to this file")
    sub = root.add_subparsers(dest="command", required=True)

    def add(name: str, fn, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        p.set_defaults(func=fn)
        return p

    def sizes(p, required: bool) -> None:
        p.add_argument("--max-len", type=int, required=required, help="program length bound L")
        p.add_argument("--budget", type=int, required=required, help="step budget t")

    p = add("enumerate", cmd_enumerate, "run every program up to a length and optionally save the cache")
    p.add_argument("--mode", default="sd", choices=[m.value for m in Mode])
    sizes(p, True)
    p.add_argument("--cond", default="", help="condition bits")
    p.add_argument("--cache", help="cache file to write")

    p = add("k", cmd_k, "bounded complexity of a string")
    p.add_argument("--x", required=True)
    p.add_argument("--cond", default="")
    p.add_argument("--mode", default="sd", choices=["sd", "em"])
    p.add_argument("--cache")
    sizes(p, False)

    p = add("omega", cmd_omega, "bounded halting probability")
    sizes(p, True)

    p = add("coding-code", cmd_coding_code, "prefix code from an enumeration stream file")
    p.add_argument("--stream", required=True)

    p = add("lln", cmd_lln, "law-of-large-numbers test value")
    p.add_argument("--x", required=True)
    p.add_argument("--bits", type=int, default=30)

    p = add("check-test", cmd_check_test, "integrability and Martin-Lof conditions of a test table")
    p.add_argument("--test", required=True)
    p.add_argument("--dist", required=True)

    p = add("bernoulli-validate", cmd_bernoulli_validate, "validate a combinatorial Bernoulli test table")
    p.add_argument("--table", required=True)

    p = add("conserve", cmd_conserve, "randomness conservation report for a named map on Uniform(n)")
    p.add_argument("--map", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--cache")
    sizes(p, False)

    p = add("entropy", cmd_entropy, "entropy enclosure of a finite distribution")
    p.add_argument("--dist", required=True)
    p.add_argument("--bits", type=int, default=30)

    p = add("distance", cmd_distance, "distance between two finite measures")
    p.add_argument("--kind", required=True, choices=["tv", "prokhorov", "wasserstein"])
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)
    p.add_argument("--metric")

    p = add("run", cmd_run, "run an experiment config (a path, or the name of a bundled config)")
    p.add_argument("config")
    p.add_argument("--report", dest="report", default=argparse.SUPPRESS)
    p.add_argument("--csv", dest="csv", default=argparse.SUPPRESS)
    p.add_argument("--cache-dir")
    p.add_argument("--quiet", action="store_true", help="do not print the report")

    p = add("cache-merge", cmd_cache_merge, "merge cache files")
    p.add_argument("caches", nargs="+")
    p.add_argument("--out", required=True)
    return root


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, harness.ConfigError, harness.UnwritablePathError, machine.ResourceCapError,
            machine.CacheMismatchError, codec.CodecError, randomness.TestError, ms.MeasureError,
            semimeasure.SemimeasureError, ValueError, OSError) as exc:
        print(f"ait: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
