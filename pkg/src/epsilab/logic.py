"""Formulas over names, truncated truth values, and realizer checking.

A formula's truth value is the set of stacks on which a candidate term has
to succeed against the pole.  All truth values are drawn from the finite
stack plane of the evaluation context (depth-bounded stacks over the term
pool), so every check here is exact for the truncated structure and only
Refuted verdicts transfer to anything larger.

Arrows evaluate their consequent first: an arrow with an empty consequent
truth value is empty no matter what the antecedent says, and skipping the
antecedent in that case is what makes the derived membership relations
(which unfold through each other) terminate — the unfolding only ever
recurses through structurally smaller entry names.
"""

from __future__ import annotations

from dataclasses import dataclass

from .machine import (
    Instr,
    Process,
    ResourceError,
    Stack,
    Term,
    TermPool,
    Trace,
    enumerate_stacks,
    run,
    stack_key,
)
from .ground import (
    FormulaZF,
    GAtom,
    GEntries,
    GPowTimesPi,
    GSet,
    GTimesPi,
    GroundSet,
    NApp,
    NChar,
    NConst,
    NOpaque,
    NVar,
    NameTerm,
    PatAll,
    PatOnly,
    PatPushMarker,
    PatPushRealizer,
    StackPattern,
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
    _GroundParser,
    _SentenceParser,
    canon,
    decode_pair,
    elements,
    entry_table,
    eval_name_term,
    m_models,
    term_free_vars,
    zf_free_vars,
)


class CycleError(Exception):
    """A truth value depends on itself through name guards."""


### formulas


@dataclass(frozen=True)
class Bottom:
    pass


@dataclass(frozen=True)
class EpsNot:
    lhs: NameTerm
    rhs: NameTerm


@dataclass(frozen=True)
class Arrow:
    antecedent: FormulaEps
    consequent: FormulaEps


@dataclass(frozen=True)
class Forall:
    var: str
    body: FormulaEps


@dataclass(frozen=True)
class ForallIn:
    """Quantifier restricted to the elements of a fixed ground set."""

    var: str
    domain: GroundSet
    body: FormulaEps


@dataclass(frozen=True)
class HookArrow:
    """Conditional assertion: the body's truth value when the ground
    condition holds, empty otherwise."""

    condition: FormulaZF
    body: FormulaEps


@dataclass(frozen=True)
class NotIn:
    """Derived extensional non-membership.  Kept as a node because its
    definitional unfolding goes through extensional equivalence and back;
    evaluation unfolds it one level at a time."""

    lhs: NameTerm
    rhs: NameTerm


@dataclass(frozen=True)
class Incl:
    """Derived extensional inclusion; unfolds through NotIn."""

    lhs: NameTerm
    rhs: NameTerm


FormulaEps = (
    Bottom | EpsNot | Arrow | Forall | ForallIn | HookArrow | NotIn | Incl
)


### opaque symbol arguments


@dataclass(frozen=True)
class HoleArg:
    """A formula with one distinguished free variable."""

    var: str
    body: FormulaEps

    def free_vars(self) -> frozenset[str]:
        return eps_free_vars(self.body) - {self.var}


@dataclass(frozen=True)
class FnArg:
    """Reference to a registered function symbol."""

    name: str

    def free_vars(self) -> frozenset[str]:
        return frozenset()


def eps_free_vars(f: FormulaEps) -> frozenset[str]:
    match f:
        case Bottom():
            return frozenset()
        case EpsNot(a, b) | NotIn(a, b) | Incl(a, b):
            return term_free_vars(a) | term_free_vars(b)
        case Arrow(a, b):
            return eps_free_vars(a) | eps_free_vars(b)
        case Forall(v, body):
            return eps_free_vars(body) - {v}
        case ForallIn(v, _, body):
            return eps_free_vars(body) - {v}
        case HookArrow(c, body):
            return zf_free_vars(c) | eps_free_vars(body)
    raise TypeError(f"unexpected formula: {f!r}")


### closing formulas under an environment


def close_term(t: NameTerm, env: dict[str, GroundSet], skip: frozenset[str]) -> NameTerm:
    match t:
        case NVar(name):
            if name in env and name not in skip:
                return NConst(env[name])
            return t
        case NConst(_):
            return t
        case NApp(symbol, args):
            return NApp(symbol, tuple(close_term(a, env, skip) for a in args))
        case NChar(formula, args):
            # the inner formula's variables are positional placeholders
            return NChar(formula, tuple(close_term(a, env, skip) for a in args))
        case NOpaque(payload):
            if isinstance(payload, HoleArg):
                closed = close_formula(payload.body, env, skip | {payload.var})
                return NOpaque(HoleArg(payload.var, closed))
            return t
    raise TypeError(f"unexpected term: {t!r}")


def close_zf(f: FormulaZF, env: dict[str, GroundSet], skip: frozenset[str]) -> FormulaZF:
    match f:
        case ZBot():
            return f
        case ZIn(a, b):
            return ZIn(close_term(a, env, skip), close_term(b, env, skip))
        case ZEq(a, b):
            return ZEq(close_term(a, env, skip), close_term(b, env, skip))
        case ZLess(a, b):
            return ZLess(close_term(a, env, skip), close_term(b, env, skip))
        case ZImp(a, b):
            return ZImp(close_zf(a, env, skip), close_zf(b, env, skip))
        case ZAnd(a, b):
            return ZAnd(close_zf(a, env, skip), close_zf(b, env, skip))
        case ZOr(a, b):
            return ZOr(close_zf(a, env, skip), close_zf(b, env, skip))
        case ZNot(body):
            return ZNot(close_zf(body, env, skip))
        case ZForall(v, body):
            return ZForall(v, close_zf(body, env, skip | {v}))
        case ZExists(v, body):
            return ZExists(v, close_zf(body, env, skip | {v}))
    raise TypeError(f"unexpected formula: {f!r}")


def close_formula(
    f: FormulaEps, env: dict[str, GroundSet], skip: frozenset[str] = frozenset()
) -> FormulaEps:
    """Substitute ground constants for environment variables.  Values are
    closed, so no capture is possible."""
    match f:
        case Bottom():
            return f
        case EpsNot(a, b):
            return EpsNot(close_term(a, env, skip), close_term(b, env, skip))
        case NotIn(a, b):
            return NotIn(close_term(a, env, skip), close_term(b, env, skip))
        case Incl(a, b):
            return Incl(close_term(a, env, skip), close_term(b, env, skip))
        case Arrow(a, b):
            return Arrow(close_formula(a, env, skip), close_formula(b, env, skip))
        case Forall(v, body):
            return Forall(v, close_formula(body, env, skip | {v}))
        case ForallIn(v, dom, body):
            return ForallIn(v, dom, close_formula(body, env, skip | {v}))
        case HookArrow(c, body):
            return HookArrow(close_zf(c, env, skip), close_formula(body, env, skip))
    raise TypeError(f"unexpected formula: {f!r}")


### verdicts and truth values


@dataclass(frozen=True)
class TruthValue:
    stacks: frozenset[Stack]


@dataclass(frozen=True)
class Validated:
    tests_run: int


@dataclass(frozen=True)
class Refuted:
    stack: Stack
    trace: Trace


Verdict = Validated | Refuted


### evaluation context


class Context:
    """Frozen evaluation snapshot: pool, pole, universe, plus memo tables.

    The memo tables are the only mutable state and are monotone caches, so
    sharing a context across checks is safe.
    """

    def __init__(
        self,
        pool: TermPool,
        pole,
        universe: tuple[GroundSet, ...] = (),
        symbols: dict | None = None,
        eval_fuel: int = 500_000,
    ):
        self.pool = pool
        self.pole = pole
        self.universe = tuple(universe)
        self.depth = pool.depth
        if symbols is None:
            from .symbols import default_symbols

            symbols = default_symbols()
        self.symbols = dict(symbols)
        self._stacks = enumerate_stacks(pool)
        self._stack_set = frozenset(self._stacks)
        self.eval_fuel = eval_fuel
        self._fuel_left = eval_fuel
        self.canon_memo: dict = {}
        self._tv_memo: dict = {}
        self._verdict_memo: dict = {}
        self._probe_memo: dict = {}
        self._pole_memo: dict = {}
        self._pattern_memo: dict = {}
        self._in_progress: set = set()

    def with_universe(self, universe) -> Context:
        return Context(self.pool, self.pole, tuple(universe), self.symbols, self.eval_fuel)

    def all_stacks(self) -> tuple[Stack, ...]:
        return self._stacks

    def stack_set(self) -> frozenset[Stack]:
        return self._stack_set

    def pole_member(self, p: Process) -> bool:
        key = (p.term, p.stack)
        hit = self._pole_memo.get(key)
        if hit is None:
            hit = self._pole_memo[key] = self.pole.member(p)
        return hit

    def pattern_stacks(self, pat: StackPattern) -> frozenset[Stack]:
        hit = self._pattern_memo.get(pat)
        if hit is not None:
            return hit
        match pat:
            case PatAll():
                out = self._stack_set
            case PatOnly(stacks):
                out = stacks & self._stack_set
            case PatPushMarker(tag, rest):
                marker = Instr(tag)
                out = frozenset(
                    pushed
                    for pi in self.pattern_stacks(rest)
                    if (pushed := pi.push(marker)) in self._stack_set
                )
            case PatPushRealizer(formula, rest):
                tails = self.pattern_stacks(rest)
                out = set()
                if tails:
                    for _name, xi in self.pool.terms:
                        if _pool_realizes(xi, formula, self):
                            for pi in tails:
                                pushed = pi.push(xi)
                                if pushed in self._stack_set:
                                    out.add(pushed)
                out = frozenset(out)
            case _:
                raise TypeError(f"unexpected pattern: {pat!r}")
        self._pattern_memo[pat] = out
        return out


def stacks_ground(ctx: Context) -> GSet:
    """The stack plane as a ground set of atoms (the domain of stack
    quantifiers)."""
    return GSet(tuple(GAtom(s) for s in ctx.all_stacks()))


### membership lookup


def member_stacks(element: GroundSet, container: GroundSet, ctx: Context) -> frozenset[Stack]:
    """Truth value of strong non-membership: stacks paired with the element
    in the container's entry view."""
    match container:
        case GAtom(_):
            return frozenset()
        case GTimesPi(base):
            if canon(element, ctx) in set(elements(base, ctx)):
                return ctx.stack_set()
            return frozenset()
        case GPowTimesPi(base):
            if entry_subset(element, base, ctx):
                return ctx.stack_set()
            return frozenset()
        case GSet(_) | GEntries(_):
            target = canon(element, ctx)
            out: frozenset[Stack] = frozenset()
            for name, pat in entry_table(container, ctx):
                if canon(name, ctx) == target:
                    out |= ctx.pattern_stacks(pat)
            return out
    raise TypeError(f"unexpected ground value: {container!r}")


def entry_subset(candidate: GroundSet, base: GroundSet, ctx: Context) -> bool:
    """Does every entry pair (u, s) of the candidate have u among base's
    elements?  This is the symbolic subset-of-base-times-stacks test."""
    targets = set(elements(base, ctx))
    match candidate:
        case GAtom(_):
            return True
        case GTimesPi(inner):
            return set(elements(inner, ctx)) <= targets
        case GEntries(entries):
            return all(
                canon(name, ctx) in targets
                for name, pat in entries
                if ctx.pattern_stacks(pat)
            )
        case GPowTimesPi(_):
            expanded = canon(candidate, ctx)
            return entry_subset(expanded, base, ctx)
        case GSet(_):
            for e in canon(candidate, ctx).elems:
                dec = decode_pair(e)
                if dec is None:
                    return False
                name, second = dec
                if not isinstance(second, GAtom):
                    return False
                if name not in targets:
                    return False
            return True
    raise TypeError(f"unexpected ground value: {candidate!r}")


### truth values


def _env_key(f: FormulaEps, env: dict[str, GroundSet]) -> tuple:
    fv = eps_free_vars(f)
    return tuple(sorted(((k, env[k]) for k in fv if k in env), key=lambda kv: kv[0]))


def truth_value(f: FormulaEps, ctx: Context, env: dict[str, GroundSet] | None = None) -> TruthValue:
    return TruthValue(_tv(f, ctx, env or {}))


def _tv(f: FormulaEps, ctx: Context, env: dict[str, GroundSet]) -> frozenset[Stack]:
    key = (f, _env_key(f, env))
    hit = ctx._tv_memo.get(key)
    if hit is not None:
        return hit
    if key in ctx._in_progress:
        raise CycleError(f"truth value of {f!r} depends on itself")
    ctx._fuel_left -= 1
    if ctx._fuel_left < 0:
        raise ResourceError("formula evaluation fuel exhausted")
    ctx._in_progress.add(key)
    try:
        out = _tv_compute(f, ctx, env)
    finally:
        ctx._in_progress.discard(key)
    ctx._tv_memo[key] = out
    return out


def _arrow_stacks(
    antecedent: FormulaEps,
    tails: frozenset[Stack],
    ctx: Context,
    env: dict[str, GroundSet],
) -> frozenset[Stack]:
    # consequent-first: nothing to push onto means an empty truth value,
    # and the antecedent is never consulted
    if not tails:
        return frozenset()
    out = set()
    for _name, xi in ctx.pool.terms:
        if _pool_realizes(xi, antecedent, ctx, env):
            for pi in tails:
                pushed = pi.push(xi)
                if pushed in ctx.stack_set():
                    out.add(pushed)
    return frozenset(out)


def _tv_compute(f: FormulaEps, ctx: Context, env: dict[str, GroundSet]) -> frozenset[Stack]:
    match f:
        case Bottom():
            return ctx.stack_set()
        case EpsNot(a, b):
            return member_stacks(
                eval_name_term(a, ctx, env), eval_name_term(b, ctx, env), ctx
            )
        case Arrow(ant, cons):
            return _arrow_stacks(ant, _tv(cons, ctx, env), ctx, env)
        case Forall(v, body):
            out: frozenset[Stack] = frozenset()
            for a in ctx.universe:
                out |= _tv(body, ctx, env | {v: a})
            return out
        case ForallIn(v, domain, body):
            out = frozenset()
            for a in elements(domain, ctx):
                out |= _tv(body, ctx, env | {v: a})
            return out
        case HookArrow(cond, body):
            if m_models(cond, ctx, env):
                return _tv(body, ctx, env)
            return frozenset()
        case NotIn(a, b):
            # unfolds to: for every u, u equivalent to a implies u not a
            # strong member of b.  Only entry names of b contribute stacks,
            # and they are structurally smaller than b, so this terminates.
            av = eval_name_term(a, ctx, env)
            bv = eval_name_term(b, ctx, env)
            out = frozenset()
            for u in _entry_names(bv, ctx):
                tails = member_stacks(u, bv, ctx)
                ant = simeq(NConst(u), NConst(av))
                out |= _arrow_stacks(ant, tails, ctx, env)
            return out
        case Incl(a, b):
            # for every z, z extensionally outside b implies z not a strong
            # member of a; only entry names of a contribute stacks
            av = eval_name_term(a, ctx, env)
            bv = eval_name_term(b, ctx, env)
            out = frozenset()
            for z in _entry_names(av, ctx):
                tails = member_stacks(z, av, ctx)
                ant = NotIn(NConst(z), NConst(bv))
                out |= _arrow_stacks(ant, tails, ctx, env)
            return out
    raise TypeError(f"unexpected formula: {f!r}")


def _entry_names(g: GroundSet, ctx: Context) -> list[GroundSet]:
    match g:
        case GTimesPi(base):
            return list(elements(base, ctx))
        case GPowTimesPi(_):
            raise ResourceError(
                "extensional relations against powerset products are not supported"
            )
        case _:
            seen = []
            for name, _ in entry_table(g, ctx):
                c = canon(name, ctx)
                if c not in seen:
                    seen.append(c)
            return seen


### realizer checking


def realizes(
    xi: Term, f: FormulaEps, ctx: Context, env: dict[str, GroundSet] | None = None
) -> Verdict:
    env = env or {}
    key = (xi, f, _env_key(f, env))
    hit = ctx._verdict_memo.get(key)
    if hit is not None:
        return hit
    stacks = _tv(f, ctx, env)
    verdict: Verdict = Validated(len(stacks))
    for pi in sorted(stacks, key=stack_key):
        p = Process(xi, pi)
        if not ctx.pole_member(p):
            fuel = getattr(ctx.pole, "fuel", ctx.pool.fuel)
            verdict = Refuted(pi, run(p, fuel))
            break
    ctx._verdict_memo[key] = verdict
    return verdict


def _pool_realizes(
    xi: Term, f: FormulaEps, ctx: Context, env: dict[str, GroundSet] | None = None
) -> bool:
    """Same pole decisions as realizes(), minus counterexample traces.

    Antecedent and pattern probes only consume the boolean; materialising a
    fuel-long trace for every internal refutation would dominate the whole
    evaluation."""
    env = env or {}
    key = (xi, f, _env_key(f, env))
    v = ctx._verdict_memo.get(key)
    if v is not None:
        return isinstance(v, Validated)
    hit = ctx._probe_memo.get(key)
    if hit is None:
        hit = all(ctx.pole_member(Process(xi, pi)) for pi in _tv(f, ctx, env))
        ctx._probe_memo[key] = hit
    return hit


def force_report(
    f: FormulaEps, ctx: Context, env: dict[str, GroundSet] | None = None
) -> Term | None:
    """First pool term realizing the formula, if any."""
    for _name, xi in ctx.pool.terms:
        if _pool_realizes(xi, f, ctx, env):
            return xi
    return None


### derived connectives

# Arrow-encoded conjunction and disjunction, negation as implication of
# absurdity, existentials as negated universals.


def neg(f: FormulaEps) -> FormulaEps:
    return Arrow(f, Bottom())


def conj(f: FormulaEps, g: FormulaEps) -> FormulaEps:
    return Arrow(Arrow(f, Arrow(g, Bottom())), Bottom())


def disj(f: FormulaEps, g: FormulaEps) -> FormulaEps:
    return Arrow(neg(f), Arrow(neg(g), Bottom()))


def iff_f(f: FormulaEps, g: FormulaEps) -> FormulaEps:
    return conj(Arrow(f, g), Arrow(g, f))


def eps_in(a: NameTerm, b: NameTerm) -> FormulaEps:
    """Positive strong membership."""
    return neg(EpsNot(a, b))


def exists_f(var: str, body: FormulaEps) -> FormulaEps:
    return neg(Forall(var, neg(body)))


def exists_in(var: str, domain: GroundSet, body: FormulaEps) -> FormulaEps:
    return neg(ForallIn(var, domain, neg(body)))


def name_neq(a: NameTerm, b: NameTerm) -> FormulaEps:
    """Ground disequality: absurd exactly when the names are equal."""
    return HookArrow(ZEq(a, b), Bottom())


def name_eq(a: NameTerm, b: NameTerm) -> FormulaEps:
    return neg(name_neq(a, b))


def not_in(a: NameTerm, b: NameTerm) -> FormulaEps:
    """Extensional non-membership (lazy node, see NotIn)."""
    return NotIn(a, b)


def incl(a: NameTerm, b: NameTerm) -> FormulaEps:
    """Extensional inclusion (lazy node, see Incl)."""
    return Incl(a, b)


def simeq(a: NameTerm, b: NameTerm) -> FormulaEps:
    """Extensional equivalence: mutual inclusion."""
    return conj(Incl(a, b), Incl(b, a))


def fresh_var(*parts: FormulaEps | NameTerm) -> str:
    used: frozenset[str] = frozenset()
    for p in parts:
        if isinstance(p, (NVar, NConst, NApp, NChar, NOpaque)):
            used |= term_free_vars(p)
        else:
            used |= eps_free_vars(p)
    i = 0
    while f"_v{i}" in used:
        i += 1
    return f"_v{i}"


def strong_incl(a: NameTerm, b: NameTerm) -> FormulaEps:
    v = fresh_var(a, b)
    return Forall(v, Arrow(EpsNot(NVar(v), b), EpsNot(NVar(v), a)))


def cong(a: NameTerm, b: NameTerm) -> FormulaEps:
    return conj(strong_incl(a, b), strong_incl(b, a))


### surface syntax
#
#   formula := 'forall' x ('.' | ':' 'gimel' '(' ground ')' '.') formula
#            | 'exists' x '.' formula
#            | 'not' formula            (extends right, like the binders)
#            | '[' zf-sentence ']' '~>' formula
#            | atom ('->' formula)?
#   atom    := 'bot' | '(' formula ')' | term REL term
#   REL     := epsnot | eps | notin | subset | simeq | subseteq | cong
#            | '=' | '!='
#
# Terms are variables, ground literals, declared constants, or symbol
# applications; chi(<zf formula>) embeds a ground relation as its
# characteristic value, and compr/phi/gamma take a `x. F` hole argument.

SYMBOL_NAMES = frozenset(
    {
        "compr",
        "pairc",
        "paird",
        "vset",
        "qset",
        "unionbar",
        "powbar",
        "phi",
        "gamma",
        "image",
        "gimel",
        "band",
        "bor",
        "bneg",
        "scale",
        "join",
    }
)

RESERVED = SYMBOL_NAMES | frozenset(
    {
        "bot",
        "forall",
        "exists",
        "not",
        "epsnot",
        "eps",
        "notin",
        "subset",
        "simeq",
        "subseteq",
        "cong",
        "chi",
        "pair",
        "timespi",
        "subsets_timespi",
        "atom",
        "in",
    }
)


class _FormulaParser(_GroundParser):
    def _keyword(self, word: str) -> bool:
        self.skip_ws()
        end = self.pos + len(word)
        if not self.src.startswith(word, self.pos):
            return False
        if end < len(self.src) and (self.src[end].isalnum() or self.src[end] == "_"):
            return False
        self.pos = end
        return True

    def _peek_word(self) -> str:
        save = self.pos
        if not self.peek().isalpha():
            return ""
        word = self.ident()
        self.pos = save
        return word

    def _binder(self) -> str:
        var = self.ident()
        if var in RESERVED:
            self.error(f"{var!r} is reserved and cannot bind")
        return var

    def _embedded_zf(self, bound: frozenset[str]) -> FormulaZF:
        sub = _SentenceParser(self.src, self.constants)
        sub.pos = self.pos
        out = sub.formula(bound)
        self.pos = sub.pos
        return out

    def formula(self, bound: frozenset[str]) -> FormulaEps:
        ch = self.peek()
        if ch == "[":
            self.pos += 1
            cond = self._embedded_zf(bound)
            self.expect("]")
            self.skip_ws()
            if not self.src.startswith("~>", self.pos):
                self.error("expected '~>'")
            self.pos += 2
            return HookArrow(cond, self.formula(bound))
        if self._keyword("forall"):
            var = self._binder()
            if self.peek() == ":":
                self.pos += 1
                if not self._keyword("gimel"):
                    self.error("expected 'gimel' after ':'")
                self.expect("(")
                domain = self.ground()
                self.expect(")")
                self.expect(".")
                return ForallIn(var, domain, self.formula(bound | {var}))
            self.expect(".")
            return Forall(var, self.formula(bound | {var}))
        if self._keyword("exists"):
            var = self._binder()
            self.expect(".")
            return exists_f(var, self.formula(bound | {var}))
        if self._keyword("not"):
            return neg(self.formula(bound))
        lhs = self.atom_formula(bound)
        self.skip_ws()
        if self.src.startswith("->", self.pos):
            self.pos += 2
            return Arrow(lhs, self.formula(bound))
        return lhs

    def atom_formula(self, bound: frozenset[str]) -> FormulaEps:
        if self._keyword("bot"):
            return Bottom()
        if self.peek() == "(":
            self.pos += 1
            out = self.formula(bound)
            self.expect(")")
            return out
        lhs = self.name_term(bound)
        self.skip_ws()
        for word, build in (
            ("epsnot", EpsNot),
            ("eps", eps_in),
            ("notin", not_in),
            ("subseteq", strong_incl),
            ("subset", incl),
            ("simeq", simeq),
            ("cong", cong),
        ):
            if self._keyword(word):
                return build(lhs, self.name_term(bound))
        if self.src.startswith("!=", self.pos):
            self.pos += 2
            return name_neq(lhs, self.name_term(bound))
        if self.peek() == "=":
            self.pos += 1
            return name_eq(lhs, self.name_term(bound))
        self.error(
            "expected a relation: epsnot, eps, notin, subset, subseteq, "
            "simeq, cong, =, !="
        )

    def name_term(self, bound: frozenset[str]) -> NameTerm:
        ch = self.peek()
        if ch == "{" or ch.isdigit():
            return NConst(self.ground())
        if not (ch.isalpha() or ch == "_"):
            self.error("expected a name term")
        save = self.pos
        word = self.ident()
        if word in ("pair", "timespi", "subsets_timespi", "atom"):
            self.pos = save
            return NConst(self.ground())
        if word == "chi":
            self.expect("(")
            zf = self._embedded_zf(bound)
            self.expect(")")
            args = tuple(NVar(v) for v in sorted(zf_free_vars(zf)))
            return NChar(zf, args)
        if word == "compr":
            self.expect("(")
            base = self.name_term(bound)
            self.expect(",")
            var = self._binder()
            self.expect(".")
            body = self.formula(bound | {var})
            self.expect(")")
            return NApp("compr", (base, NOpaque(HoleArg(var, body))))
        if word in ("phi", "gamma"):
            self.expect("(")
            var = self._binder()
            self.expect(".")
            body = self.formula(bound | {var})
            self.expect(")")
            return NApp(word, (NOpaque(HoleArg(var, body)),))
        if word == "image":
            self.expect("(")
            fname = self.ident()
            if fname not in SYMBOL_NAMES:
                self.error(f"unknown function symbol {fname!r}")
            self.expect(",")
            base = self.name_term(bound)
            self.expect(")")
            return NApp("image", (NOpaque(FnArg(fname)), base))
        if word in SYMBOL_NAMES:
            self.expect("(")
            args = [self.name_term(bound)]
            while self.peek() == ",":
                self.pos += 1
                args.append(self.name_term(bound))
            self.expect(")")
            return NApp(word, tuple(args))
        if word in bound:
            return NVar(word)
        if word in self.constants:
            return NConst(self.constants[word])
        self.error(f"unknown name {word!r}")


def parse_formula(src: str, constants: dict[str, GroundSet] | None = None) -> FormulaEps:
    p = _FormulaParser(src, constants)
    out = p.formula(frozenset())
    p.done()
    return out
