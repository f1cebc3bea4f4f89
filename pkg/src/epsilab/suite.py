"""Named realizer checks driven by the batch front end and the acceptance
tests, plus single-edit term mutants used to confirm the checks can fail.

Each check pairs a closed arrow statement with the term expected to realize
it.  The statements quantify over whatever universe the supplied context
carries, and on a universe of plain sets every strong-membership truth value
is empty, so every arrow validates vacuously.  The seeded universe below
therefore mixes plain sets with entry tables: pattern rows pin truth values
to chosen stacks, one of which ends in a looping head so that a wrong
realizer is actually driven into divergence instead of slipping through.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ground import (
    GEntries,
    GSet,
    GTimesPi,
    GroundSet,
    ONE,
    PatAll,
    PatOnly,
    TWO,
    ZERO,
    NApp,
    NChar,
    NConst,
    NVar,
    ZEq,
    ZForall,
    ZIn,
    ZLess,
    ZNot,
    eval_name_term,
    skolem_select,
    transitive_closure,
)
from .logic import (
    Arrow,
    Context,
    EpsNot,
    Forall,
    ForallIn,
    FormulaEps,
    HookArrow,
    Refuted,
    Validated,
    Verdict,
    eps_in,
    name_eq,
    name_neq,
    neg,
    parse_formula,
    realizes,
    stacks_ground,
)
from .machine import (
    APPLY_I_TERM,
    App,
    I_TERM,
    K_TERM,
    Lam,
    Stack,
    Term,
    TermPool,
    TerminationPole,
    Var,
    Y_TERM,
    make_pool,
    show_stack,
)
from .symbols import default_symbols, weak_choice_f
from .wellfounded import InRel, LessAlpha, induction_claim

# terms the surface syntax can reference by name in formulas and suite files
BASE_REFS: dict[str, Term] = {
    "I": I_TERM,
    "K": K_TERM,
    "Y": Y_TERM,
    "apply_I": APPLY_I_TERM,
}

PI0 = Stack((), "pi0")

# a depth-1 plane stack whose head loops when given a further argument
BOMB_STACK = PI0.push(Y_TERM)


### context construction


def _sym_cl(ctx, env, t):
    return transitive_closure(eval_name_term(t, ctx, env), ctx)


def _sym_clsing(ctx, env, t):
    return transitive_closure(GSet((eval_name_term(t, ctx, env),)), ctx)


_CHOICE_BODY = EpsNot(NVar("y"), NApp("gimel", (NVar("x"),)))


def _sym_wch(ctx, env, xt, pt):
    choose = weak_choice_f("x", "y", _CHOICE_BODY, ctx)
    return choose(eval_name_term(xt, ctx, env), eval_name_term(pt, ctx, env))


_SKOLEM_TARGET = ZIn(NVar("y"), NVar("x"))


def _sym_skf(ctx, env, t):
    value = eval_name_term(t, ctx, env)
    return skolem_select(ZNot(_SKOLEM_TARGET), "y", ctx, {"x": value})


def suite_symbols() -> dict:
    """Default symbol table plus the adapters the named checks rely on."""
    syms = default_symbols()
    syms["cl"] = _sym_cl
    syms["clsing"] = _sym_clsing
    syms["wch"] = _sym_wch
    syms["skf"] = _sym_skf
    return syms


def seeded_universe() -> tuple[GroundSet, ...]:
    """Plain ranks, plane products, and entry tables with pinned rows.

    The trap table routes one truth value through BOMB_STACK and another
    through the whole plane; the dead table contributes an empty truth
    value, which is what lets every pool term (the looping one included)
    stand as an antecedent realizer and reach the pinned stacks.  Every
    pinned row at a minimal name carries a looping stack: a row pinned to
    the bare empty stack would let the identity pass as an induction step
    realizer and strand the fixpoint combinator on a stack the statement
    never owes an answer for.
    """
    trap = GEntries(
        (
            (ZERO, PatOnly(frozenset({BOMB_STACK}))),
            (ONE, PatAll()),
        )
    )
    dead = GEntries(((ONE, PatOnly(frozenset())),))
    return (
        ZERO,
        ONE,
        TWO,
        GTimesPi(TWO),
        GTimesPi(GSet((ZERO,))),
        trap,
        dead,
    )


def suite_context(
    pool: TermPool | None = None,
    pole=None,
    universe: tuple[GroundSet, ...] | None = None,
    fuel: int = 10_000,
) -> Context:
    """Context the named checks run in by default: pool {I, K, Y},
    termination pole, seeded universe, adapter symbols installed."""
    if pool is None:
        pool = make_pool({"K": K_TERM}, fuel=fuel)
    if pole is None:
        pole = TerminationPole(fuel)
    if universe is None:
        universe = seeded_universe()
    return Context(pool, pole, universe=universe, symbols=suite_symbols())


### the named checks


@dataclass(frozen=True)
class SuiteCheck:
    name: str
    formula: FormulaEps
    term: Term
    term_src: str
    about: str
    expect: str = "validated"


def _chi_lt(x: str, y: str) -> NChar:
    return NChar(ZLess(NVar("a"), NVar("b")), (NVar(x), NVar(y)))


def _mask_absorption(op: str) -> FormulaEps:
    lhs = NApp("scale", (NVar("al"), NApp(op, (NVar("x"), NVar("y")))))
    rhs = NApp(
        "scale",
        (NVar("al"), NApp(op, (NApp("scale", (NVar("al"), NVar("x"))), NVar("y")))),
    )
    return ForallIn("al", TWO, Forall("x", Forall("y", name_eq(lhs, rhs))))


def _mask_linearity() -> FormulaEps:
    al, al2 = NVar("al"), NVar("al2")
    x, y, x2, y2 = NVar("x"), NVar("y"), NVar("x2"), NVar("y2")
    lhs = NApp(
        "join",
        (
            NApp("join", (NApp("scale", (al, x)), NApp("scale", (al2, x2)))),
            NApp("join", (NApp("scale", (al, y)), NApp("scale", (al2, y2)))),
        ),
    )
    rhs = NApp(
        "join",
        (
            NApp("scale", (al, NApp("join", (x, y)))),
            NApp("scale", (al2, NApp("join", (x2, y2)))),
        ),
    )
    body = HookArrow(ZEq(NApp("band", (al, al2)), NConst(ZERO)), name_eq(lhs, rhs))
    for v in ("y2", "x2", "y", "x"):
        body = Forall(v, body)
    return ForallIn("al", TWO, ForallIn("al2", TWO, body))


def _scaled_closure_lift() -> FormulaEps:
    # the mask bound α ≤ χ is the boolean equation α ∧ χ = α
    cond = ZEq(NApp("band", (NVar("al"), _chi_lt("x", "y"))), NVar("al"))
    claim = eps_in(
        NApp("scale", (NVar("al"), NVar("x"))),
        NApp("gimel", (NApp("clsing", (NVar("y"),)),)),
    )
    return ForallIn("al", TWO, Forall("x", Forall("y", HookArrow(cond, claim))))


def _closure_iff_half(forward: bool) -> FormulaEps:
    gate = name_neq(_chi_lt("x", "y"), NConst(ONE))
    membership = EpsNot(NVar("x"), NApp("gimel", (NApp("cl", (NVar("y"),)),)))
    body = Arrow(gate, membership) if forward else Arrow(membership, gate)
    return Forall("x", Forall("y", body))


def _stack_choice(ctx: Context) -> FormulaEps:
    picked = EpsNot(NApp("wch", (NVar("x"), NVar("w"))), NApp("gimel", (NVar("x"),)))
    return Forall(
        "x",
        Forall(
            "y",
            Arrow(
                ForallIn("w", stacks_ground(ctx), picked),
                EpsNot(NVar("y"), NApp("gimel", (NVar("x"),))),
            ),
        ),
    )


def _char_bound() -> FormulaEps:
    whole = NChar(ZForall("y", _SKOLEM_TARGET), (NVar("x"),))
    inst = NChar(_SKOLEM_TARGET, (NVar("x"), NVar("y")))
    # boolean whole ≤ inst, again as whole ∧ inst = whole
    return Forall("x", Forall("y", name_eq(NApp("band", (whole, inst)), whole)))


def _skolem_attains() -> FormulaEps:
    whole = NChar(ZForall("y", _SKOLEM_TARGET), (NVar("x"),))
    picked = NChar(_SKOLEM_TARGET, (NVar("x"), NApp("skf", (NVar("x"),))))
    return Forall("x", name_eq(whole, picked))


def paper_suite(ctx: Context) -> tuple[SuiteCheck, ...]:
    """All named checks, in a fixed order, against the given context.

    The context must carry the adapter symbols from suite_symbols(); build
    it with suite_context() unless a check needs a custom pool or pole.
    """
    i_src, y_src, apply_i_src = "<I>", "<Y>", "\\x.(x)<I>"
    checks = [
        SuiteCheck(
            "vset-transfer",
            parse_formula(
                "forall x. forall y. forall z."
                " z eps y -> z epsnot vset(x) -> y epsnot x"
            ),
            I_TERM,
            i_src,
            "a member landing outside the closure carrier keeps its container out",
        ),
        SuiteCheck(
            "qset-membership",
            parse_formula("forall x. compr(x, z. z epsnot 0) eps qset(x)"),
            I_TERM,
            i_src,
            "every comprehension over x lands strongly inside the power carrier",
        ),
        SuiteCheck(
            "collection-exhaustion",
            # The carrier gimel(2) attaches every stack to each name the
            # target predicate can contribute through, so the hypothesis
            # realizer only ever needs the identity pushed underneath it.
            parse_formula(
                "(forall x. (x eps gimel(2) -> x epsnot gimel(1)))"
                " -> forall x. x epsnot gimel(1)"
            ),
            APPLY_I_TERM,
            apply_i_src,
            "a predicate holding on a full product carrier holds everywhere",
        ),
        SuiteCheck(
            "mask-absorption-join",
            _mask_absorption("join"),
            I_TERM,
            i_src,
            "a boolean mask absorbs into the first join argument",
        ),
        SuiteCheck(
            "mask-absorption-pair",
            _mask_absorption("pairc"),
            I_TERM,
            i_src,
            "a boolean mask absorbs into the first pairing argument",
        ),
        SuiteCheck(
            "mask-linearity",
            _mask_linearity(),
            I_TERM,
            i_src,
            "disjoint masks distribute join across both arguments",
        ),
        SuiteCheck(
            "precedence-gate",
            parse_formula("forall x. forall y. chi(x < y) != 1 -> x epsnot y"),
            I_TERM,
            i_src,
            "precedence below one blocks strong membership",
        ),
        SuiteCheck(
            "lift-membership",
            parse_formula("forall u. forall v. [u in v] ~> u eps gimel(v)"),
            I_TERM,
            i_src,
            "ground membership lifts to strong membership in the plane product",
        ),
        SuiteCheck(
            "scaled-closure-lift",
            _scaled_closure_lift(),
            I_TERM,
            i_src,
            "a mask under the precedence value scales into the singleton closure",
        ),
        SuiteCheck(
            "precedence-closure-fwd",
            _closure_iff_half(forward=True),
            I_TERM,
            i_src,
            "precedence one matches closure membership, left to right",
        ),
        SuiteCheck(
            "precedence-closure-rev",
            _closure_iff_half(forward=False),
            I_TERM,
            i_src,
            "precedence one matches closure membership, right to left",
        ),
        SuiteCheck(
            "stack-choice",
            _stack_choice(ctx),
            I_TERM,
            i_src,
            "choice against stacks collapses a stack-indexed family to any instance",
        ),
        SuiteCheck(
            "membership-induction",
            induction_claim(InRel()),
            Y_TERM,
            y_src,
            "the fixpoint combinator realizes induction along membership",
        ),
        SuiteCheck(
            "filter-accepts-one",
            induction_claim(LessAlpha(ONE)),
            Y_TERM,
            y_src,
            "the fixpoint combinator realizes induction along strict precedence",
        ),
        SuiteCheck(
            "filter-rejects-zero",
            neg(induction_claim(LessAlpha(ZERO))),
            APPLY_I_TERM,
            apply_i_src,
            "applying the identity refutes induction along the total relation",
        ),
    ]
    return tuple(checks)


### mutants: single-node edits of the realizer terms


SELF_APPLY_TERM: Term = Lam(App(Var(0), Var(0)))

_MUTANTS: dict[str, tuple[tuple[Term, str, str], ...]] = {
    "<I>": (
        (K_TERM, "<K>", "body lifted under a second binder, dropping it"),
        (SELF_APPLY_TERM, "\\x.(x)x", "bound variable duplicated into an application"),
        (Y_TERM, "<Y>", "head swapped for the fixpoint combinator"),
    ),
    "\\x.(x)<I>": (
        (Lam(App(Var(0), K_TERM)), "\\x.(x)<K>", "pushed constant swapped for K"),
        (Lam(App(Var(0), Y_TERM)), "\\x.(x)<Y>", "pushed constant swapped for Y"),
        (Lam(App(I_TERM, Var(0))), "\\x.(<I>)x", "application flipped around"),
    ),
    "<Y>": (
        (I_TERM, "<I>", "head swapped for the identity"),
        (K_TERM, "<K>", "head swapped for the discarding combinator"),
        (APPLY_I_TERM, "\\x.(x)<I>", "head swapped for the one-shot applier"),
    ),
}


def mutant_suite(ctx: Context) -> tuple[SuiteCheck, ...]:
    """Three single-edit term mutants per named check, expected Refuted."""
    out = []
    for check in paper_suite(ctx):
        for term, src, note in _MUTANTS[check.term_src]:
            out.append(
                SuiteCheck(
                    f"{check.name}--{_slug(note)}",
                    check.formula,
                    term,
                    src,
                    note,
                    expect="refuted",
                )
            )
    return tuple(out)


def _slug(note: str) -> str:
    return note.split(",")[0].replace(" ", "-")


### running


def run_check(check: SuiteCheck, ctx: Context) -> dict:
    """One machine-readable record per check; stable key order."""
    verdict = realizes(check.term, check.formula, ctx)
    record = {
        "check": check.name,
        "term": check.term_src,
        "verdict": _verdict_name(verdict),
        "tests": verdict.tests_run if isinstance(verdict, Validated) else 0,
        "expected": check.expect,
        "ok": _verdict_name(verdict) == check.expect,
    }
    if isinstance(verdict, Refuted):
        record["counterexample"] = show_stack(verdict.stack)
    return record


def _verdict_name(v: Verdict) -> str:
    return "validated" if isinstance(v, Validated) else "refuted"
