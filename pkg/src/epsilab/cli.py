"""Batch front end: parse inputs, build contexts, run checks, emit reports.

Reports are line-delimited JSON with sorted keys and a fixed record order,
so two runs with the same configuration are byte-identical; the human
summary goes to standard error.  Exit codes are a stable contract: 0 for
success, 1 for configuration or parse errors, 2 for fuel exhaustion in
`run`, 3 for a refuted check or a reading disagreement.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass, fields, replace

from .ground import (
    GroundSet,
    NConst,
    NVar,
    ONE,
    ZAnd,
    ZEq,
    ZOr,
    ZERO,
    exhaustive_universe,
    parse_ground,
    parse_sentence,
    show_ground,
    zf_free_vars,
)
from .logic import (
    Context,
    Refuted,
    Validated,
    parse_formula,
    realizes,
    truth_value,
)
from .machine import (
    App,
    ExplicitPole,
    ParseError,
    Process,
    Stack,
    TerminationPole,
    Y_TERM,
    make_pool,
    parse_stack,
    parse_term,
    run,
    show_process,
    show_stack,
)
from .quotient import (
    DEFAULT_CORPUS,
    MDStructure,
    collapse_phi,
    elementarity_suite,
    load_corpus,
    los_check,
)
from .suite import (
    BASE_REFS,
    SuiteCheck,
    paper_suite,
    run_check,
    seeded_universe,
    suite_symbols,
)
from .symbols import bool_neg, bool_or
from .wellfounded import (
    CharRel,
    DRel,
    DirectSum,
    LessAlpha,
    NotWellFounded,
    decide_D,
    edge_holds,
    is_wellfounded,
    parse_relation,
    rank_fn,
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Knobs shared by every subcommand; file values first, flags override."""

    universe: str = "seeded"
    pool: str = "I,K,Y"
    depth: int = 2
    fuel: int = 10_000
    pole: str = "termination"
    checks: str = "all"
    output: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.fuel < 1:
            raise ConfigError("fuel must be positive")
        if self.depth < 0:
            raise ConfigError("depth must not be negative")
        if self.seed < 0:
            raise ConfigError("seed must not be negative")


def load_config(path: str | None, overrides: dict) -> RunConfig:
    data = {}
    if path is not None:
        with open(path) as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        data.update(raw)
    data.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return RunConfig(**data)


def _build_universe(spec: str) -> tuple[GroundSet, ...]:
    if spec == "seeded":
        return seeded_universe()
    kind, _, arg = spec.partition(":")
    if kind == "exhaustive":
        try:
            rank = int(arg)
        except ValueError:
            raise ConfigError(f"bad universe rank: {arg!r}") from None
        if rank < 0:
            raise ConfigError("universe rank must not be negative")
        return exhaustive_universe(rank)
    raise ConfigError(f"unknown universe strategy: {spec!r}")


def _build_pole(spec: str, fuel: int):
    if spec == "termination":
        return TerminationPole(fuel)
    kind, _, path = spec.partition(":")
    if kind == "explicit":
        with open(path) as fh:
            entries = json.load(fh)
        if not isinstance(entries, list):
            raise ConfigError("explicit pole file must hold a JSON list")
        base = frozenset(
            Process(
                parse_term(e["term"], BASE_REFS),
                parse_stack(e["stack"], BASE_REFS),
            )
            for e in entries
        )
        return ExplicitPole(base, fuel)
    raise ConfigError(f"unknown pole choice: {spec!r}")


def build_context(cfg: RunConfig) -> Context:
    names = [p.strip() for p in cfg.pool.split(",") if p.strip()]
    unknown = sorted(set(names) - set(BASE_REFS))
    if unknown:
        raise ConfigError(f"unknown pool terms: {', '.join(unknown)}")
    extra = {n: BASE_REFS[n] for n in names if n not in ("I", "Y")}
    pool = make_pool(extra, depth=cfg.depth, fuel=cfg.fuel)
    pole = _build_pole(cfg.pole, cfg.fuel)
    universe = _build_universe(cfg.universe)
    return Context(pool, pole, universe=universe, symbols=suite_symbols())


### subcommands


def cmd_run(args, cfg: RunConfig) -> int:
    term = parse_term(args.term, BASE_REFS)
    stack = parse_stack(args.stack, BASE_REFS)
    fuel = args.fuel if args.fuel is not None else cfg.fuel
    trace = run(Process(term, stack), fuel)
    for state in trace.states:
        print(show_process(state))
    return 0 if trace.status == "stuck" else 2


def _suite_entries(path: str, ctx: Context) -> list[SuiteCheck]:
    named = {c.name: c for c in paper_suite(ctx)}
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            entry = json.loads(line)
            unknown = sorted(set(entry) - {"check", "formula", "term", "expect", "note"})
            if unknown:
                raise ConfigError(
                    f"{path}:{lineno}: unknown suite keys: {', '.join(unknown)}"
                )
            if "check" in entry:
                base = named.get(entry["check"])
                if base is None:
                    raise ConfigError(
                        f"{path}:{lineno}: unknown check {entry['check']!r}"
                    )
            elif "formula" in entry:
                if "term" not in entry:
                    raise ConfigError(f"{path}:{lineno}: formula entries need a term")
                base = SuiteCheck(
                    name=f"{path}:{lineno}",
                    formula=parse_formula(entry["formula"]),
                    term=parse_term(entry["term"], BASE_REFS),
                    term_src=entry["term"],
                    about=entry.get("note", ""),
                )
            else:
                raise ConfigError(f"{path}:{lineno}: need a check name or a formula")
            if "term" in entry and "check" in entry:
                base = replace(
                    base,
                    term=parse_term(entry["term"], BASE_REFS),
                    term_src=entry["term"],
                )
            if "expect" in entry:
                if entry["expect"] not in ("validated", "refuted"):
                    raise ConfigError(f"{path}:{lineno}: bad expect value")
                base = replace(base, expect=entry["expect"])
            out.append(base)
    return out


def cmd_check(args, cfg: RunConfig) -> int:
    ctx = build_context(cfg)
    if args.suite is not None:
        checks = _suite_entries(args.suite, ctx)
    else:
        if args.formula is None or args.term is None:
            raise ConfigError("check needs --formula and --term, or --suite")
        checks = [
            SuiteCheck(
                name="cli",
                formula=parse_formula(args.formula),
                term=parse_term(args.term, BASE_REFS),
                term_src=args.term,
                about="",
            )
        ]
    any_refuted = False
    for check in checks:
        record = run_check(check, ctx)
        if args.suite is None:
            record = {
                "formula": args.formula,
                "term": check.term_src,
                "verdict": record["verdict"],
                "tests": record["tests"],
            } | (
                {"counterexample": record["counterexample"]}
                if "counterexample" in record
                else {}
            )
        print(json.dumps(record, sort_keys=True))
        any_refuted = any_refuted or record["verdict"] == "refuted"
    return 3 if any_refuted else 0


def cmd_truth(args, cfg: RunConfig) -> int:
    ctx = build_context(cfg)
    tv = truth_value(parse_formula(args.formula), ctx)
    stacks = sorted(show_stack(s) for s in tv.stacks)
    print(json.dumps({"formula": args.formula, "stacks": stacks}, sort_keys=True))
    return 0


def cmd_universe(args, cfg: RunConfig) -> int:
    for g in _build_universe(cfg.universe):
        print(show_ground(g))
    return 0


def cmd_decide_d(args, cfg: RunConfig) -> int:
    ctx = build_context(cfg)
    alpha = parse_ground(args.alpha)
    record = {"alpha": args.alpha, "accepted": decide_D(alpha, ctx)}
    print(json.dumps(record, sort_keys=True))
    return 0


def cmd_rank(args, cfg: RunConfig) -> int:
    ctx = build_context(cfg)
    rel = parse_relation(args.relation)
    try:
        table = rank_fn(rel, ctx)
    except NotWellFounded as e:
        print(f"not well founded: {e}", file=sys.stderr)
        return 1
    ranks = [
        {"name": show_ground(name), "rank": len(rank.elems)}
        for name, rank in table.entries
    ]
    ranks.sort(key=lambda r: (r["rank"], r["name"]))
    print(json.dumps({"relation": args.relation, "ranks": ranks}, sort_keys=True))
    return 0


def cmd_md(args, cfg: RunConfig) -> int:
    ctx = build_context(cfg)
    corpus = load_corpus(args.corpus) if args.corpus else DEFAULT_CORPUS
    report = elementarity_suite(corpus, ctx)
    for line in report.to_json_lines():
        print(line)
    print(report.header, file=sys.stderr)
    bad = report.disagreements
    print(
        f"{len(report.records)} sentences, {len(bad)} disagreements",
        file=sys.stderr,
    )
    return 3 if bad else 0


### the full report


def _status(verdict) -> str:
    if isinstance(verdict, Refuted):
        return "fail"
    return "vacuous" if verdict.tests_run == 0 else "pass"


def _bool_status(ok: bool) -> str:
    return "pass" if ok else "fail"


def _machine_section(ctx) -> list[dict]:
    # the fixpoint unfolding contract: Y against any pushed pool term
    # restores that term applied to (Y)term within five steps
    records = []
    pi0 = Stack((), "pi0")
    for name, term in ctx.pool.terms:
        target = Process(term, pi0.push(App(Y_TERM, term)))
        trace = run(Process(Y_TERM, pi0.push(term)), 5)
        ok = target in trace.states
        records.append(
            {
                "section": "machine",
                "check": f"fixpoint-unfold-{name}",
                "status": _bool_status(ok),
            }
        )
    return records


def _truth_section(ctx) -> list[dict]:
    records = []
    universe = ctx.universe

    # comprehension: pushes of body realizers onto the base truth value
    body_src = "z epsnot 0"
    hits = 0
    ok = True
    for a in universe:
        for u in universe:
            consts = {"a": a, "u": u}
            got = truth_value(
                parse_formula(f"u epsnot compr(a, z. {body_src})", consts), ctx
            ).stacks
            base = truth_value(parse_formula("u epsnot a", consts), ctx).stacks
            inst = parse_formula(body_src.replace("z", "u"), consts)
            pushers = [
                t
                for _, t in ctx.pool.terms
                if isinstance(realizes(t, inst, ctx), Validated)
            ]
            want = frozenset(
                pi.push(t)
                for pi in base
                for t in pushers
                if pi.depth + 1 <= ctx.depth
            )
            ok = ok and got == want
            hits += len(got)
    records.append(
        {
            "section": "truth",
            "check": "comprehension-pushes",
            "status": "vacuous" if (ok and hits == 0) else _bool_status(ok),
        }
    )

    # plane product: membership truth values are all-or-nothing
    full = frozenset(ctx.all_stacks())
    ok = True
    hits = 0
    for v in universe:
        for u in universe:
            consts = {"u": u, "v": v}
            got = truth_value(parse_formula("u epsnot gimel(v)", consts), ctx).stacks
            ok = ok and got in (full, frozenset())
            hits += len(got)
    records.append(
        {
            "section": "truth",
            "check": "plane-product-two-valued",
            "status": "vacuous" if (ok and hits == 0) else _bool_status(ok),
        }
    )

    # image: pointwise description through the mapped symbol
    ok = True
    hits = 0
    for a in universe:
        for y in universe:
            consts = {"a": a, "y": y}
            got = truth_value(
                parse_formula("y epsnot image(vset, a)", consts), ctx
            ).stacks
            want = truth_value(
                parse_formula("forall x. [y = vset(x)] ~> x epsnot a", consts), ctx
            ).stacks
            ok = ok and got == want
            hits += len(got)
    records.append(
        {
            "section": "truth",
            "check": "image-pointwise",
            "status": "vacuous" if (ok and hits == 0) else _bool_status(ok),
        }
    )

    # precedence against closure membership, as exact stack sets
    ok = True
    hits = 0
    for a in universe:
        for b in universe:
            consts = {"a": a, "b": b}
            lhs = truth_value(parse_formula("chi(a < b) != 1", consts), ctx).stacks
            rhs = truth_value(
                parse_formula("a epsnot gimel(cl(b))", consts), ctx
            ).stacks
            ok = ok and lhs == rhs
            hits += len(lhs)
    records.append(
        {
            "section": "truth",
            "check": "precedence-closure-identity",
            "status": "vacuous" if (ok and hits == 0) else _bool_status(ok),
        }
    )
    return records


def _realizer_section(ctx) -> list[dict]:
    records = []
    for check in paper_suite(ctx):
        verdict = realizes(check.term, check.formula, ctx)
        records.append(
            {
                "section": "realizers",
                "check": check.name,
                "term": check.term_src,
                "status": _status(verdict),
            }
        )
    return records


def _ultrafilter_section(ctx) -> list[dict]:
    bools = (ZERO, ONE)
    d = {b: decide_D(b, ctx) for b in bools}
    laws = [
        ("rejects-zero", not d[ZERO]),
        ("accepts-one", d[ONE]),
        (
            "monotone",
            all(
                (not d[a]) or d[bool_or(a, b, ctx)]
                for a in bools
                for b in bools
            ),
        ),
        (
            "prime",
            all(
                (not d[bool_or(a, b, ctx)]) or d[a] or d[b]
                for a in bools
                for b in bools
            ),
        ),
        (
            "incompatible-with-negation",
            all(not (d[a] and d[bool_neg(a, ctx)]) for a in bools),
        ),
    ]
    return [
        {"section": "ultrafilter", "check": name, "status": _bool_status(ok)}
        for name, ok in laws
    ]


def _rank_section(ctx) -> list[dict]:
    records = []
    for spec in ("less(1)", "eps"):
        rel = parse_relation(spec)
        try:
            table = rank_fn(rel, ctx)
        except NotWellFounded:
            records.append(
                {"section": "rank", "check": f"fixpoint-{spec}", "status": "fail"}
            )
            continue
        ok = True
        names = [name for name, _ in table.entries]
        for x, rx in table.entries:
            below = frozenset(
                table.rank_of(y, ctx) for y in names if edge_holds(rel, y, x, ctx)
            )
            ok = ok and frozenset(rx.elems) == below
        records.append(
            {
                "section": "rank",
                "check": f"fixpoint-{spec}",
                "status": _bool_status(ok),
            }
        )
    return records


def _sample_edge_formula(rng: random.Random, size: int):
    """Random well-founded edge relation: edges only descend a shuffled
    strict order of universe indices, so cycles cannot arise."""
    order = list(range(size))
    rng.shuffle(order)
    clauses = []
    for hi in range(size):
        for lo in range(hi):
            if rng.random() < 0.4:
                clauses.append((order[lo], order[hi]))
    formula = None
    for lo, hi in clauses:
        edge = ZAnd(
            ZEq(NVar("qa"), NVar(f"c{lo}")), ZEq(NVar("qb"), NVar(f"c{hi}"))
        )
        formula = edge if formula is None else ZOr(formula, edge)
    return formula, clauses


def _close_edges(formula, ctx):
    # bind the c<i> placeholders to the universe names by index
    if formula is None:
        return None
    names = {f"c{i}": g for i, g in enumerate(ctx.universe)}

    def fill(f):
        match f:
            case ZAnd(a, b):
                return ZAnd(fill(a), fill(b))
            case ZOr(a, b):
                return ZOr(fill(a), fill(b))
            case ZEq(a, b):
                lhs = NConst(names[a.name]) if isinstance(a, NVar) and a.name in names else a
                rhs = NConst(names[b.name]) if isinstance(b, NVar) and b.name in names else b
                return ZEq(lhs, rhs)
        raise TypeError(f"unexpected edge clause: {f!r}")

    closed = fill(formula)
    assert zf_free_vars(closed) <= {"qa", "qb"}
    return closed


def _wf_section(ctx, seed: int, samples: int = 10) -> list[dict]:
    rng = random.Random(seed)
    size = len(ctx.universe)
    records = []
    preserved = 0
    checked = 0
    for _ in range(samples):
        formula, clauses = _sample_edge_formula(rng, size)
        closed = _close_edges(formula, ctx)
        if closed is None:
            continue
        checked += 1
        base_ok = is_wellfounded(CharRel(closed, ONE), ctx).wellfounded
        dsum_ok = is_wellfounded(
            DirectSum(LessAlpha(ONE), CharRel(closed, ONE)), ctx
        ).wellfounded
        drel_ok = is_wellfounded(DRel(closed), ctx).wellfounded
        if base_ok and dsum_ok and drel_ok:
            preserved += 1
    records.append(
        {
            "section": "wf",
            "check": "preservation-sampled",
            "samples": checked,
            "status": _bool_status(preserved == checked),
        }
    )
    # negative control: a two-cycle on the first two names must be caught
    if size >= 2:
        a, b = ctx.universe[0], ctx.universe[1]
        cyc = ZOr(
            ZAnd(ZEq(NVar("qa"), NConst(a)), ZEq(NVar("qb"), NConst(b))),
            ZAnd(ZEq(NVar("qa"), NConst(b)), ZEq(NVar("qb"), NConst(a))),
        )
        caught = not is_wellfounded(CharRel(cyc, ONE), ctx).wellfounded
        records.append(
            {
                "section": "wf",
                "check": "negative-control",
                "status": _bool_status(caught),
            }
        )
    return records


def _quotient_section(ctx) -> list[dict]:
    records = []
    ok_all = True
    for sentence in DEFAULT_CORPUS:
        ok, msg = los_check(parse_sentence(sentence), (), ctx)
        ok_all = ok_all and ok
        if not ok:
            records.append(
                {
                    "section": "quotient",
                    "check": "los",
                    "sentence": sentence,
                    "status": "fail",
                    "detail": msg or "",
                }
            )
    records.insert(
        0,
        {
            "section": "quotient",
            "check": "los-corpus",
            "sentences": len(DEFAULT_CORPUS),
            "status": _bool_status(ok_all),
        },
    )
    report = elementarity_suite(DEFAULT_CORPUS, ctx)
    records.append(
        {
            "section": "quotient",
            "check": "elementarity",
            "sentences": len(report.records),
            "disagreements": len(report.disagreements),
            "status": _bool_status(not report.disagreements),
        }
    )
    return records


def _collapse_section(ctx) -> list[dict]:
    md = MDStructure(ctx)
    table = collapse_phi(md)
    image = table.image()
    image_set = {g for g in image}

    # transitive: members of image values stay inside the image
    transitive = all(e in image_set for g in image for e in g.elems)
    # injective: distinct classes get distinct values
    reps = md.class_representatives()
    values = [table.value_of(r, md) for r in reps]
    injective = len({v for v in values}) == len(values)
    # membership preserving, both directions
    preserved = all(
        md.in_d(x, y) == (table.value_of(x, md) in set(table.value_of(y, md).elems))
        for x in reps
        for y in reps
    )
    return [
        {"section": "collapse", "check": "transitive-image", "status": _bool_status(transitive)},
        {"section": "collapse", "check": "injective-on-classes", "status": _bool_status(injective)},
        {"section": "collapse", "check": "membership-preserving", "status": _bool_status(preserved)},
    ]


def build_report(cfg: RunConfig) -> list[dict]:
    ctx = build_context(cfg)
    records = []
    records.extend(_machine_section(ctx))
    records.extend(_truth_section(ctx))
    records.extend(_realizer_section(ctx))
    records.extend(_ultrafilter_section(ctx))
    records.extend(_rank_section(ctx))
    records.extend(_wf_section(ctx, cfg.seed))
    records.extend(_quotient_section(ctx))
    records.extend(_collapse_section(ctx))
    return records


def cmd_report(args, cfg: RunConfig) -> int:
    records = build_report(cfg)
    lines = [json.dumps(r, sort_keys=True) for r in records]
    text = "\n".join(lines) + "\n"
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    by_status: dict[str, int] = {}
    for r in records:
        by_status[r["status"]] = by_status.get(r["status"], 0) + 1
    summary = ", ".join(f"{n} {s}" for s, n in sorted(by_status.items()))
    print(f"report: {len(records)} checks ({summary})", file=sys.stderr)
    return 3 if by_status.get("fail") else 0


### argument plumbing


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with RunConfig fields")
    p.add_argument("--universe", help="seeded | exhaustive:<rank>")
    p.add_argument("--pool", help="comma-separated pool term names")
    p.add_argument("--depth", type=int, help="stack plane depth")
    p.add_argument("--fuel", type=int, help="machine step budget")
    p.add_argument("--pole", help="termination | explicit:<path>")
    p.add_argument("--checks", help="comma-separated check selection")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--seed", type=int, help="seed for sampled relations")


def _config_overrides(args) -> dict:
    keys = ("universe", "pool", "depth", "fuel", "pole", "checks", "output", "seed")
    return {k: getattr(args, k, None) for k in keys}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epsilab",
        description="machine runs, truth values, realizer checks, reports",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="print a machine trace")
    p.add_argument("--term", required=True)
    p.add_argument("--stack", required=True)
    _add_config_flags(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("check", help="realizer verdicts for formulas or suites")
    p.add_argument("--formula")
    p.add_argument("--term")
    p.add_argument("--suite", help="JSONL file of checks")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("truth", help="print a truth value as a stack list")
    p.add_argument("--formula", required=True)
    _add_config_flags(p)
    p.set_defaults(fn=cmd_truth)

    p = sub.add_parser("universe", help="print the configured universe")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_universe)

    p = sub.add_parser("decide-d", help="run the decision filter on a boolean")
    p.add_argument("--alpha", required=True)
    _add_config_flags(p)
    p.set_defaults(fn=cmd_decide_d)

    p = sub.add_parser("rank", help="rank table for a relation spec")
    p.add_argument("--relation", required=True)
    _add_config_flags(p)
    p.set_defaults(fn=cmd_rank)

    p = sub.add_parser("md", help="compare the two readings over a corpus")
    p.add_argument("--corpus", help="file with one sentence per line")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_md)

    p = sub.add_parser("report", help="run the complete verification suite")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(getattr(args, "config", None), _config_overrides(args))
        return args.fn(args, cfg)
    except ParseError as e:
        # the message already carries the character position
        print(f"parse error: {e}", file=sys.stderr)
        return 1
    except (ConfigError, ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
