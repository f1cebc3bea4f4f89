"""The ground model seen through the decision filter.

Binary atoms are re-read as filter acceptance of their boolean value:
membership becomes ``decide_D(<x in y>)``, equality likewise.  At the
truncated ground scale the filter accepts exactly the true booleans, so the
quotient predicates collapse to plain model truth; what the machinery here
buys is that the collapse is *derived* every time rather than assumed, and
that three independent readings of a formula can be compared:

* plain model truth (`m_models`),
* truth through the quotient predicates (`md_evaluate`),
* the formula translated into the realizability language and read back at
  ground scale (`md_translate` + `eps_ground_value`).

`los_check` walks a formula and confirms, at every subformula and binding,
that the quotient reading agrees with filter acceptance of the boolean
value, that the cached least-falsifier Skolem functions satisfy the
instantiation law, and that a pool term realizes each implication direction
between the translated formula and its acceptance hook.  `collapse_phi`
builds the standard membership collapse by well-founded recursion over the
quotient membership relation and is the honest route from quotient classes
back to plain sets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

from .ground import (
    ONE,
    ZERO,
    FormulaZF,
    GSet,
    GroundSet,
    NApp,
    NChar,
    NConst,
    NVar,
    NameTerm,
    ZAnd,
    ZBot,
    ZEq,
    ZExists,
    ZForall,
    ZImp,
    ZIn,
    ZLess,
    ZNot,
    ZOr,
    char_eval,
    eval_name_term,
    ground_eq,
    m_models,
    order_key,
    parse_sentence,
    show_ground,
    skolem_select,
    struct_key,
    zf_free_vars,
)
from .logic import (
    Arrow,
    Bottom,
    Context,
    Forall,
    FormulaEps,
    HookArrow,
    conj,
    disj,
    exists_f,
    force_report,
    neg,
)
from .wellfounded import DRel, NotWellFounded, decide_D, is_wellfounded

_PRED_A = "qa"
_PRED_B = "qb"
_IN = ZIn(NVar(_PRED_A), NVar(_PRED_B))
_EQ = ZEq(NVar(_PRED_A), NVar(_PRED_B))
_LT = ZLess(NVar(_PRED_A), NVar(_PRED_B))


class MDStructure:
    """Quotient view of a finite universe: membership and equality are
    filter acceptance of the corresponding boolean characteristics, and
    every universal subformula gets a cached least-falsifier Skolem
    function."""

    def __init__(
        self, ctx: Context, universe: tuple[GroundSet, ...] | None = None
    ):
        self.ctx = ctx
        self.universe = ctx.universe if universe is None else tuple(universe)
        self.skolem_cache: dict[FormulaZF, Callable] = {}

    def _accepts(self, relation: FormulaZF, x: GroundSet, y: GroundSet) -> bool:
        return decide_D(
            char_eval(relation, (x, y), self.ctx), self.ctx, self.universe
        )

    def in_d(self, x: GroundSet, y: GroundSet) -> bool:
        return self._accepts(_IN, x, y)

    def eq_d(self, x: GroundSet, y: GroundSet) -> bool:
        return self._accepts(_EQ, x, y)

    def less_d(self, x: GroundSet, y: GroundSet) -> bool:
        return self._accepts(_LT, x, y)

    def skolem_fn(self, quantified: ZForall) -> Callable[[dict], GroundSet]:
        """Ground witness function for a universal subformula: the least
        universe name falsifying the body, or the least name outright when
        nothing does.  Either way the quantifier's value equals the body's
        value at the returned witness."""
        fn = self.skolem_cache.get(quantified)
        if fn is None:
            var, body = quantified.var, quantified.body
            negated = ZNot(body)

            def fn(env: dict, _v=var, _f=negated) -> GroundSet:
                return skolem_select(_f, _v, self.ctx, env)

            self.skolem_cache[quantified] = fn
        return fn

    def class_representatives(self) -> tuple[GroundSet, ...]:
        """One name per equality class, least representative first."""
        reps: list[GroundSet] = []
        for g in sorted(self.universe, key=lambda g: order_key(g, self.ctx)):
            if not any(self.eq_d(g, r) for r in reps):
                reps.append(g)
        return tuple(reps)


### the three readings


def md_evaluate(
    f: FormulaZF, md: MDStructure, env: dict[str, GroundSet] | None = None
) -> bool:
    """Tarskian truth where every atom goes through the quotient
    predicates."""
    env = env or {}
    ctx = md.ctx
    match f:
        case ZBot():
            return False
        case ZIn(a, b):
            return md.in_d(eval_name_term(a, ctx, env), eval_name_term(b, ctx, env))
        case ZEq(a, b):
            return md.eq_d(eval_name_term(a, ctx, env), eval_name_term(b, ctx, env))
        case ZLess(a, b):
            return md.less_d(eval_name_term(a, ctx, env), eval_name_term(b, ctx, env))
        case ZImp(a, b):
            return (not md_evaluate(a, md, env)) or md_evaluate(b, md, env)
        case ZAnd(a, b):
            return md_evaluate(a, md, env) and md_evaluate(b, md, env)
        case ZOr(a, b):
            return md_evaluate(a, md, env) or md_evaluate(b, md, env)
        case ZNot(body):
            return not md_evaluate(body, md, env)
        case ZForall(v, body):
            return all(md_evaluate(body, md, env | {v: u}) for u in md.universe)
        case ZExists(v, body):
            return any(md_evaluate(body, md, env | {v: u}) for u in md.universe)
    raise TypeError(f"unexpected formula: {f!r}")


def accepted_hook(condition: FormulaZF) -> FormulaEps:
    """Filter acceptance of a boolean value, as a realizability formula at
    ground scale: absurd exactly when the condition fails."""
    return HookArrow(ZNot(condition), Bottom())


def md_translate(f: FormulaZF) -> FormulaEps:
    """Structural translation into the realizability language: atoms become
    acceptance hooks, implication and quantifiers commute."""
    match f:
        case ZBot():
            return Bottom()
        case ZIn(_, _) | ZEq(_, _) | ZLess(_, _):
            return accepted_hook(f)
        case ZImp(a, b):
            return Arrow(md_translate(a), md_translate(b))
        case ZAnd(a, b):
            return conj(md_translate(a), md_translate(b))
        case ZOr(a, b):
            return disj(md_translate(a), md_translate(b))
        case ZNot(body):
            return neg(md_translate(body))
        case ZForall(v, body):
            return Forall(v, md_translate(body))
        case ZExists(v, body):
            return exists_f(v, md_translate(body))
    raise TypeError(f"unexpected formula: {f!r}")


def eps_ground_value(
    f: FormulaEps, ctx: Context, env: dict[str, GroundSet] | None = None
) -> bool:
    """Classical ground-scale reading of the translated fragment: hooks are
    conditional assertions, arrows are implication, quantifiers range over
    the universe."""
    env = env or {}
    match f:
        case Bottom():
            return False
        case HookArrow(condition, body):
            if not m_models(condition, ctx, env):
                return True
            return eps_ground_value(body, ctx, env)
        case Arrow(a, b):
            return (not eps_ground_value(a, ctx, env)) or eps_ground_value(b, ctx, env)
        case Forall(v, body):
            return all(eps_ground_value(body, ctx, env | {v: u}) for u in ctx.universe)
    raise TypeError(f"outside the translation fragment: {f!r}")


### formula display


def show_zf(f: FormulaZF) -> str:
    match f:
        case ZBot():
            return "bot"
        case ZIn(a, b):
            return f"{_show_term(a)} in {_show_term(b)}"
        case ZEq(a, b):
            return f"{_show_term(a)} = {_show_term(b)}"
        case ZLess(a, b):
            return f"{_show_term(a)} < {_show_term(b)}"
        case ZImp(a, b):
            return f"({_show_left(a)} -> {show_zf(b)})"
        case ZAnd(a, b):
            return f"({_show_left(a)} & {show_zf(b)})"
        case ZOr(a, b):
            return f"({_show_left(a)} | {show_zf(b)})"
        case ZNot(body):
            return f"~({show_zf(body)})"
        case ZForall(v, body):
            return f"forall {v}. {show_zf(body)}"
        case ZExists(v, body):
            return f"exists {v}. {show_zf(body)}"
    raise TypeError(f"unexpected formula: {f!r}")


def _show_left(f: FormulaZF) -> str:
    # A quantifier printed bare on the left of a connective would swallow
    # the connective on reparse; its scope must be closed explicitly.
    out = show_zf(f)
    if isinstance(f, (ZForall, ZExists)):
        return f"({out})"
    return out


def _show_term(t: NameTerm) -> str:
    match t:
        case NVar(name):
            return name
        case NConst(value):
            return show_ground(value)
        case NApp(symbol, args):
            return f"{symbol}({', '.join(_show_term(a) for a in args)})"
        case NChar(_, args):
            return f"chi({', '.join(_show_term(a) for a in args)})"
    return repr(t)


### agreement harness


def los_check(
    f: FormulaZF,
    args: tuple[GroundSet, ...],
    ctx: Context,
    probe_realizers: bool = True,
) -> tuple[bool, str | None]:
    """Confirm, for the given argument instance, that the quotient reading
    of every subformula agrees with filter acceptance of its boolean value,
    that every universal subformula satisfies the Skolem instantiation law,
    and (optionally) that a pool term realizes both implication directions
    between the translated formula and its acceptance hook.

    Returns (ok, detail); detail names the first failing subformula.
    """
    md = MDStructure(ctx)
    names = sorted(zf_free_vars(f))
    if len(names) != len(args):
        raise ValueError(
            f"arity mismatch: formula has free variables {names}, got {len(args)} args"
        )
    env = dict(zip(names, args))

    detail = _agreement_walk(f, md, env)
    if detail is not None:
        return False, detail

    if probe_realizers:
        translated = md_translate(f)
        hooked = accepted_hook(f)
        for direction, label in (
            (Arrow(translated, hooked), "translated side into acceptance"),
            (Arrow(hooked, translated), "acceptance into translated side"),
        ):
            if force_report(direction, ctx, env) is None:
                return False, f"no pool realizer for: {label} of {show_zf(f)}"
    return True, None


def _agreement_walk(
    f: FormulaZF, md: MDStructure, env: dict[str, GroundSet]
) -> str | None:
    quotient = md_evaluate(f, md, env)
    accepted = decide_D(
        ONE if m_models(f, md.ctx, env) else ZERO, md.ctx, md.universe
    )
    if quotient != accepted:
        return f"sides disagree at {show_zf(f)} under {_show_env(env)}"
    match f:
        case ZImp(a, b) | ZAnd(a, b) | ZOr(a, b):
            return _agreement_walk(a, md, env) or _agreement_walk(b, md, env)
        case ZNot(body):
            return _agreement_walk(body, md, env)
        case ZForall(v, body):
            witness = md.skolem_fn(f)(env)
            if m_models(f, md.ctx, env) != m_models(
                body, md.ctx, env | {v: witness}
            ):
                return (
                    f"Skolem law fails at {show_zf(f)} under {_show_env(env)}"
                )
            for u in md.universe:
                detail = _agreement_walk(body, md, env | {v: u})
                if detail is not None:
                    return detail
            return None
        case ZExists(v, body):
            for u in md.universe:
                detail = _agreement_walk(body, md, env | {v: u})
                if detail is not None:
                    return detail
            return None
        case _:
            return None


def _show_env(env: dict[str, GroundSet]) -> str:
    if not env:
        return "the empty binding"
    inner = ", ".join(f"{k}={show_ground(v)}" for k, v in sorted(env.items()))
    return "{" + inner + "}"


### elementarity reports


REPORT_HEADER = (
    "At this finite ground scale the decision filter accepts exactly the true "
    "booleans, so agreement between the two readings is semantically forced; "
    "the suite's value is driving the translation, the quotient predicates, "
    "and the report plumbing end to end."
)


@dataclass(frozen=True)
class ElementarityRecord:
    sentence: str
    m_value: bool
    md_value: bool

    @property
    def agree(self) -> bool:
        return self.m_value == self.md_value

    def to_json(self) -> str:
        return json.dumps(
            {
                "sentence": self.sentence,
                "m_value": self.m_value,
                "md_value": self.md_value,
                "agree": self.agree,
            },
            sort_keys=True,
        )


@dataclass(frozen=True)
class ElementarityReport:
    header: str
    records: tuple[ElementarityRecord, ...]

    @property
    def disagreements(self) -> tuple[ElementarityRecord, ...]:
        return tuple(r for r in self.records if not r.agree)

    def to_json_lines(self) -> list[str]:
        return [r.to_json() for r in self.records]


def elementarity_suite(
    corpus: tuple[str, ...] | list[str], ctx: Context
) -> ElementarityReport:
    """Evaluate each closed sentence both as plain model truth and through
    the translated quotient reading; every record is expected to agree."""
    md = MDStructure(ctx)
    records = []
    for line in corpus:
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        sentence = parse_sentence(text)
        plain = m_models(sentence, ctx)
        through = eps_ground_value(md_translate(sentence), ctx)
        records.append(ElementarityRecord(text, plain, through))
    return ElementarityReport(REPORT_HEADER, tuple(records))


def load_corpus(path: str) -> tuple[str, ...]:
    """One sentence per line; blank lines and #-comments are skipped."""
    with open(path, encoding="utf-8") as handle:
        return tuple(
            line.strip()
            for line in handle
            if line.strip() and not line.strip().startswith("#")
        )


DEFAULT_CORPUS: tuple[str, ...] = (
    "0 in 1",
    "1 in 2",
    "0 notin 0",
    "0 = 0",
    "~(0 = 1)",
    "0 < 2",
    "2 in {0,1,2}",
    "0 in {1}",
    "exists x. forall y. y notin x",
    "forall x. (x in 0 -> bot)",
    "exists x. x in 0",
    "forall x. exists y. x in y",
    "forall x. x = x",
    "forall x. forall y. (x = y -> y = x)",
    "forall x. ~(x in x)",
    "forall x. forall y. (x in y -> ~(y in x))",
    "exists z. (0 in z & 1 in z)",
    "forall x. (x in 2 -> (x = 0 | x = 1))",
    "forall x. forall y. ((x in y & y in 2) -> x in 2)",
    "exists x. (x in 1 & forall y. y notin x)",
    "forall x. forall y. ((forall z. ((z in x -> z in y) & (z in y -> z in x))) -> x = y)",
    "forall x. ((exists y. y in x) -> (exists y. (y in x & forall z. ~(z in y & z in x))))",
    "forall x. exists y. (y in x -> y = 0)",
    "forall x. (x = 0 | (exists y. y in x))",
    "exists x. exists y. (x in y & y in 2)",
    "forall x. forall y. exists z. (x in z -> y in z)",
    "forall x. (x in 1 -> x < 1)",
    "forall x. forall y. ((x in y & y in x) -> bot)",
)


### the membership collapse


class ExtensionalityError(ValueError):
    def __init__(self, pair: tuple[GroundSet, GroundSet]):
        self.pair = pair
        a, b = pair
        super().__init__(
            "quotient membership is not extensional: "
            f"{show_ground(a)} and {show_ground(b)} have the same members "
            "but are not equal"
        )


@dataclass(frozen=True)
class CollapseTable:
    """Class representatives paired with their collapsed plain-set values."""

    classes: tuple[tuple[GroundSet, GSet], ...]

    def value_of(self, name: GroundSet, md: MDStructure) -> GSet:
        for rep, value in self.classes:
            if md.eq_d(rep, name):
                return value
        raise ValueError(f"name outside the collapsed domain: {show_ground(name)}")

    def image(self) -> tuple[GSet, ...]:
        seen: dict[tuple, GSet] = {}
        for _, value in self.classes:
            seen.setdefault(struct_key(value), value)
        return tuple(sorted(seen.values(), key=struct_key))


def collapse_phi(md: MDStructure) -> CollapseTable:
    """Standard membership collapse: each class maps to the plain set of
    the values of its quotient members.  Requires quotient membership to be
    well founded and extensional modulo quotient equality."""
    reps = md.class_representatives()
    members: dict[int, tuple[int, ...]] = {
        i: tuple(j for j, y in enumerate(reps) if md.in_d(y, x))
        for i, x in enumerate(reps)
    }
    # Precondition scans must see exactly the relation the recursion uses,
    # so the cycle check runs on the member table, not a parallel route.
    cycle = _member_cycle(members)
    if cycle is not None:
        raise NotWellFounded(tuple(reps[i] for i in cycle))
    for i, x in enumerate(reps):
        for j in range(i + 1, len(reps)):
            if members[i] == members[j]:
                raise ExtensionalityError((x, reps[j]))

    values: dict[int, GSet] = {}

    def phi(i: int) -> GSet:
        if i not in values:
            values[i] = GSet(tuple(phi(j) for j in members[i]))
        return values[i]

    return CollapseTable(tuple((x, phi(i)) for i, x in enumerate(reps)))


def _member_cycle(members: dict[int, tuple[int, ...]]) -> tuple[int, ...] | None:
    """First membership cycle as an index path with equal endpoints."""
    color: dict[int, int] = {}

    def visit(i: int, path: list[int]) -> tuple[int, ...] | None:
        color[i] = 0
        path.append(i)
        for j in members[i]:
            if color.get(j) == 0:
                return tuple(path[path.index(j) :]) + (j,)
            if j not in color:
                found = visit(j, path)
                if found is not None:
                    return found
        color[i] = 1
        path.pop()
        return None

    for i in members:
        if i not in color:
            found = visit(i, [])
            if found is not None:
                return found
    return None


def linear_classes(md: MDStructure) -> tuple[GroundSet, ...]:
    """Class representatives that behave like ordinals inside the quotient:
    their hereditary quotient members are pairwise comparable and closed
    under quotient membership."""
    reps = md.class_representatives()

    def downset(x: GroundSet) -> list[GroundSet]:
        out: list[GroundSet] = []
        frontier = [y for y in reps if md.in_d(y, x)]
        while frontier:
            y = frontier.pop()
            if any(md.eq_d(y, z) for z in out):
                continue
            out.append(y)
            frontier.extend(z for z in reps if md.in_d(z, y))
        return out

    out = []
    for x in reps:
        below = downset(x)
        closed = all(
            md.in_d(z, x) for y in below for z in reps if md.in_d(z, y)
        )
        linear = all(
            md.in_d(y, z) or md.in_d(z, y) or md.eq_d(y, z)
            for y in below
            for z in below
        )
        if closed and linear:
            out.append(x)
    return tuple(out)


### well-foundedness of the quotient membership


def wf_check_mD(
    ctx: Context,
    universe: tuple[GroundSet, ...] | None = None,
    membership: FormulaZF | None = None,
) -> bool:
    """Quotient membership must be well founded on the universe.  The
    membership formula is injectable so that a poisoned relation (one no
    family of set literals could produce) demonstrates the detector."""
    base = _IN if membership is None else membership
    return is_wellfounded(DRel(base), ctx, universe).wellfounded
