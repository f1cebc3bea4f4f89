"""Hereditarily finite ground sets with stack atoms and lazy products.

The ground model speaks plain set theory: membership, equality, transitive
closure, a first-order formula language evaluated Tarski-style over a finite
universe.  Machine stacks enter as opaque atoms.  Set-like names used by the
realizability layer carry *entries*: pairs of a name and a stack pattern.
Three lazy variants (a product with the whole stack plane, its powerset, and
an explicit guarded entry table) expand to plain sets on demand, under a
ceiling.

Equality and ordering of plain sets are structural on canonical forms, which
coincides with extensional equality.  Lazy values compare extensionally only
after canonicalization through a context.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .machine import ResourceError, Stack, stack_key


### ground values


@dataclass(frozen=True)
class GSet:
    """Plain finite set; elements kept sorted and deduplicated."""

    elems: tuple[GroundSet, ...]

    def __post_init__(self):
        ordered = tuple(sorted(set(self.elems), key=struct_key))
        object.__setattr__(self, "elems", ordered)

    def __hash__(self):
        h = self.__dict__.get("_h")
        if h is None:
            h = hash((0x5E, self.elems))
            object.__setattr__(self, "_h", h)
        return h


@dataclass(frozen=True)
class GAtom:
    """A machine stack as an ur-element."""

    stack: Stack


@dataclass(frozen=True)
class GTimesPi:
    """base x (all stacks): every element of base paired with every stack."""

    base: GroundSet


@dataclass(frozen=True)
class GPowTimesPi:
    """powerset(base x stacks) x stacks; consulted symbolically when large."""

    base: GroundSet


@dataclass(frozen=True)
class GEntries:
    """Explicit entry table: (name, stack pattern) pairs."""

    entries: tuple[tuple[GroundSet, StackPattern], ...]


GroundSet = GSet | GAtom | GTimesPi | GPowTimesPi | GEntries


### stack patterns


@dataclass(frozen=True)
class PatAll:
    pass


@dataclass(frozen=True)
class PatOnly:
    stacks: frozenset[Stack]


@dataclass(frozen=True)
class PatPushRealizer:
    """Stacks xi.pi where xi is a pool term validated against `formula`.

    The formula is opaque here; the evaluation context interprets it.
    """

    formula: object
    rest: StackPattern


@dataclass(frozen=True)
class PatPushMarker:
    """Stacks #tag.pi — inert marker instruction on top."""

    tag: str
    rest: StackPattern


StackPattern = PatAll | PatOnly | PatPushRealizer | PatPushMarker


def pattern_key(p: StackPattern) -> tuple:
    match p:
        case PatAll():
            return (0,)
        case PatOnly(stacks):
            return (1, tuple(sorted(stack_key(s) for s in stacks)))
        case PatPushRealizer(formula, rest):
            return (2, repr(formula), pattern_key(rest))
        case PatPushMarker(tag, rest):
            return (3, tag, pattern_key(rest))
    raise TypeError(f"unexpected pattern: {p!r}")


def struct_key(g: GroundSet) -> tuple:
    """Total deterministic order; on canonical forms it is the semantic
    order (plain sets lexicographically by elements, atoms after all sets)."""
    match g:
        case GSet(elems):
            return (0, tuple(struct_key(e) for e in elems))
        case GAtom(stack):
            return (1, stack_key(stack))
        case GTimesPi(base):
            return (2, struct_key(base))
        case GPowTimesPi(base):
            return (3, struct_key(base))
        case GEntries(entries):
            return (
                4,
                tuple((struct_key(n), pattern_key(p)) for n, p in entries),
            )
    raise TypeError(f"unexpected ground value: {g!r}")


EMPTY = GSet(())
ZERO = EMPTY
ONE = GSet((ZERO,))
TWO = GSet((ZERO, ONE))


def make_set(*elems: GroundSet) -> GSet:
    return GSet(tuple(elems))


def von_neumann(n: int) -> GSet:
    out = EMPTY
    acc: list[GroundSet] = []
    for _ in range(n):
        acc.append(out)
        out = GSet(tuple(acc))
    return out


def is_canonical(g: GroundSet) -> bool:
    match g:
        case GSet(elems):
            return all(is_canonical(e) for e in elems)
        case GAtom(_):
            return True
    return False


### Kuratowski pairs


def kuratowski_pair(a: GroundSet, b: GroundSet) -> GSet:
    return make_set(make_set(a), make_set(a, b))


def decode_pair(g: GroundSet) -> tuple[GroundSet, GroundSet] | None:
    """Inverse of kuratowski_pair on canonical sets; None when not a pair."""
    if not isinstance(g, GSet):
        return None
    if len(g.elems) == 1:
        (inner,) = g.elems
        if isinstance(inner, GSet) and len(inner.elems) == 1:
            return (inner.elems[0], inner.elems[0])
        return None
    if len(g.elems) == 2:
        small = [e for e in g.elems if isinstance(e, GSet) and len(e.elems) == 1]
        large = [e for e in g.elems if isinstance(e, GSet) and len(e.elems) == 2]
        if len(small) != 1 or len(large) != 1:
            return None
        (a,) = small[0].elems
        pair = large[0].elems
        if a not in pair:
            return None
        b = pair[0] if pair[1] == a else pair[1]
        return (a, b)
    return None


### canonicalization (context supplies pattern denotations when needed)

EXPANSION_CEILING = 2**16


def canon(g: GroundSet, ctx=None) -> GroundSet:
    """Expand lazy variants to a plain-set tree over atoms.

    `ctx` must provide pattern_stacks(pattern) and all_stacks() whenever the
    value (hereditarily) contains entry tables or stack-plane products.
    """
    if ctx is not None:
        cached = ctx.canon_memo.get(g)
        if cached is not None:
            return cached
    out = _canon(g, ctx)
    if ctx is not None:
        ctx.canon_memo[g] = out
    return out


def _require_ctx(ctx, g):
    if ctx is None:
        raise ValueError(f"canonicalizing {type(g).__name__} requires a context")
    return ctx


def _canon(g: GroundSet, ctx) -> GroundSet:
    match g:
        case GSet(elems):
            return GSet(tuple(canon(e, ctx) for e in elems))
        case GAtom(_):
            return g
        case GTimesPi(base):
            _require_ctx(ctx, g)
            els = elements(base, ctx)
            return GSet(
                tuple(
                    kuratowski_pair(e, GAtom(s))
                    for e in els
                    for s in ctx.all_stacks()
                )
            )
        case GEntries(entries):
            _require_ctx(ctx, g)
            pairs = []
            for name, pat in entries:
                cn = canon(name, ctx)
                for s in ctx.pattern_stacks(pat):
                    pairs.append(kuratowski_pair(cn, GAtom(s)))
            return GSet(tuple(pairs))
        case GPowTimesPi(base):
            _require_ctx(ctx, g)
            els = elements(base, ctx)
            plane = [
                kuratowski_pair(e, GAtom(s)) for e in els for s in ctx.all_stacks()
            ]
            if 2 ** len(plane) > EXPANSION_CEILING:
                raise ResourceError(
                    f"refusing to expand a powerset of {2**len(plane)} subsets"
                )
            subsets = []
            for r in range(len(plane) + 1):
                for combo in itertools.combinations(plane, r):
                    subsets.append(GSet(tuple(combo)))
            return GSet(
                tuple(
                    kuratowski_pair(sub, GAtom(s))
                    for sub in subsets
                    for s in ctx.all_stacks()
                )
            )
    raise TypeError(f"unexpected ground value: {g!r}")


def elements(g: GroundSet, ctx=None) -> tuple[GroundSet, ...]:
    c = canon(g, ctx)
    return c.elems if isinstance(c, GSet) else ()


def ground_eq(a: GroundSet, b: GroundSet, ctx=None) -> bool:
    return canon(a, ctx) == canon(b, ctx)


def order_key(g: GroundSet, ctx=None) -> tuple:
    return struct_key(canon(g, ctx))


### transitive closure and the strict precedence it induces


def closure_members(g: GroundSet, ctx=None) -> frozenset[GroundSet]:
    """Worklist closure: members, members of members, and so on."""
    seen: set[GroundSet] = set()
    frontier = list(elements(g, ctx))
    while frontier:
        x = frontier.pop()
        if x in seen:
            continue
        seen.add(x)
        frontier.extend(elements(x, ctx))
    return frozenset(seen)


def transitive_closure(g: GroundSet, ctx=None) -> GSet:
    return GSet(tuple(closure_members(g, ctx)))


def less(a: GroundSet, b: GroundSet, ctx=None) -> bool:
    """Strict precedence: a lies in the transitive closure of b."""
    return canon(a, ctx) in closure_members(b, ctx)


### entry view (the epsilon-reading of a name)


def entry_table(g: GroundSet, ctx=None) -> tuple[tuple[GroundSet, StackPattern], ...]:
    """(name, pattern) rows this value exposes to membership queries.

    Plain sets expose only their Kuratowski (name, atom) elements; everything
    else in a plain set is invisible to the entry view.
    """
    match g:
        case GEntries(entries):
            return entries
        case GTimesPi(base):
            return tuple((e, PatAll()) for e in elements(base, ctx))
        case GSet(elems):
            rows: dict[GroundSet, set[Stack]] = {}
            order: list[GroundSet] = []
            for e in elems:
                dec = decode_pair(e)
                if dec is None:
                    continue
                name, second = dec
                if not isinstance(second, GAtom):
                    continue
                if name not in rows:
                    rows[name] = set()
                    order.append(name)
                rows[name].add(second.stack)
            return tuple((n, PatOnly(frozenset(rows[n]))) for n in order)
        case GAtom(_):
            return ()
        case GPowTimesPi(_):
            raise ResourceError(
                "powerset-product entry tables are consulted symbolically"
            )
    raise TypeError(f"unexpected ground value: {g!r}")


### first-order language of the ground model


@dataclass(frozen=True)
class NVar:
    name: str


@dataclass(frozen=True)
class NConst:
    value: GroundSet


@dataclass(frozen=True)
class NApp:
    symbol: str
    args: tuple[NameTerm, ...]


@dataclass(frozen=True)
class NChar:
    """Characteristic value of a ground formula: one term per truth."""

    formula: FormulaZF
    args: tuple[NameTerm, ...]


@dataclass(frozen=True)
class NOpaque:
    """Non-ground argument to a function symbol (a formula with a hole, a
    symbol reference).  Only the receiving symbol interprets the payload."""

    payload: object


NameTerm = NVar | NConst | NApp | NChar | NOpaque


@dataclass(frozen=True)
class ZBot:
    pass


@dataclass(frozen=True)
class ZIn:
    lhs: NameTerm
    rhs: NameTerm


@dataclass(frozen=True)
class ZEq:
    lhs: NameTerm
    rhs: NameTerm


@dataclass(frozen=True)
class ZLess:
    lhs: NameTerm
    rhs: NameTerm


@dataclass(frozen=True)
class ZImp:
    lhs: FormulaZF
    rhs: FormulaZF


@dataclass(frozen=True)
class ZAnd:
    lhs: FormulaZF
    rhs: FormulaZF


@dataclass(frozen=True)
class ZOr:
    lhs: FormulaZF
    rhs: FormulaZF


@dataclass(frozen=True)
class ZNot:
    body: FormulaZF


@dataclass(frozen=True)
class ZForall:
    var: str
    body: FormulaZF


@dataclass(frozen=True)
class ZExists:
    var: str
    body: FormulaZF


FormulaZF = ZBot | ZIn | ZEq | ZLess | ZImp | ZAnd | ZOr | ZNot | ZForall | ZExists


def zf_free_vars(f: FormulaZF) -> frozenset[str]:
    match f:
        case ZBot():
            return frozenset()
        case ZIn(a, b) | ZEq(a, b) | ZLess(a, b):
            return term_free_vars(a) | term_free_vars(b)
        case ZImp(a, b) | ZAnd(a, b) | ZOr(a, b):
            return zf_free_vars(a) | zf_free_vars(b)
        case ZNot(body):
            return zf_free_vars(body)
        case ZForall(v, body) | ZExists(v, body):
            return zf_free_vars(body) - {v}
    raise TypeError(f"unexpected formula: {f!r}")


def term_free_vars(t: NameTerm) -> frozenset[str]:
    match t:
        case NVar(name):
            return frozenset({name})
        case NConst(_):
            return frozenset()
        case NOpaque(payload):
            fv = getattr(payload, "free_vars", None)
            return fv() if callable(fv) else frozenset()
        case NApp(_, args) | NChar(_, args):
            out = frozenset()
            for a in args:
                out |= term_free_vars(a)
            return out
    raise TypeError(f"unexpected term: {t!r}")


def eval_name_term(t: NameTerm, ctx, env: dict[str, GroundSet]) -> GroundSet:
    match t:
        case NVar(name):
            if name not in env:
                raise ValueError(f"unbound ground variable {name!r}")
            return env[name]
        case NConst(value):
            return value
        case NApp(symbol, args):
            fn = ctx.symbols.get(symbol)
            if fn is None:
                raise ValueError(f"unknown function symbol {symbol!r}")
            # symbols receive raw argument terms plus the environment; most
            # evaluate them immediately, formula-carrying ones do not
            return fn(ctx, env, *args)
        case NChar(formula, args):
            values = tuple(eval_name_term(a, ctx, env) for a in args)
            return char_eval(formula, values, ctx)
        case NOpaque(_):
            raise ValueError("opaque argument used outside a symbol application")
    raise TypeError(f"unexpected term: {t!r}")


def m_models(f: FormulaZF, ctx, env: dict[str, GroundSet] | None = None) -> bool:
    """Tarskian truth over the context's finite universe."""
    env = env or {}
    match f:
        case ZBot():
            return False
        case ZIn(a, b):
            va = canon(eval_name_term(a, ctx, env), ctx)
            vb = eval_name_term(b, ctx, env)
            return va in set(elements(vb, ctx))
        case ZEq(a, b):
            return ground_eq(
                eval_name_term(a, ctx, env), eval_name_term(b, ctx, env), ctx
            )
        case ZLess(a, b):
            return less(eval_name_term(a, ctx, env), eval_name_term(b, ctx, env), ctx)
        case ZImp(a, b):
            return (not m_models(a, ctx, env)) or m_models(b, ctx, env)
        case ZAnd(a, b):
            return m_models(a, ctx, env) and m_models(b, ctx, env)
        case ZOr(a, b):
            return m_models(a, ctx, env) or m_models(b, ctx, env)
        case ZNot(body):
            return not m_models(body, ctx, env)
        case ZForall(v, body):
            return all(
                m_models(body, ctx, env | {v: x}) for x in ctx.universe
            )
        case ZExists(v, body):
            return any(
                m_models(body, ctx, env | {v: x}) for x in ctx.universe
            )
    raise TypeError(f"unexpected formula: {f!r}")


def char_eval(f: FormulaZF, args: tuple[GroundSet, ...], ctx) -> GroundSet:
    """Boolean characteristic value: ONE when the instance holds, else ZERO.

    Free variables bind positionally in alphabetical order.
    """
    names = sorted(zf_free_vars(f))
    if len(names) != len(args):
        raise ValueError(
            f"arity mismatch: formula has free variables {names}, got {len(args)} args"
        )
    env = dict(zip(names, args))
    return ONE if m_models(f, ctx, env) else ZERO


def skolem_select(
    f: FormulaZF, var: str, ctx, env: dict[str, GroundSet] | None = None
) -> GroundSet:
    """Least universe witness of f in the canonical order; least element of
    the universe when no witness exists."""
    env = env or {}
    ordered = sorted(ctx.universe, key=lambda g: order_key(g, ctx))
    if not ordered:
        raise ValueError("empty universe")
    for y in ordered:
        if m_models(f, ctx, env | {var: y}):
            return y
    return ordered[0]


### literal syntax

# Printing covers every variant that the literal grammar can express; entry
# tables carry realizer guards with no textual form and only have repr.


def _as_numeral(g: GroundSet) -> int | None:
    n = 0
    cur = g
    while isinstance(cur, GSet):
        if not cur.elems:
            return n
        expected = GSet(cur.elems[:-1])
        if cur.elems[-1] != expected:
            return None
        n += 1
        cur = expected
    return None


def show_ground(g: GroundSet) -> str:
    from .machine import show_stack

    match g:
        case GSet(elems):
            n = _as_numeral(g)
            if n is not None:
                return str(n)
            return "{" + ",".join(show_ground(e) for e in elems) + "}"
        case GAtom(stack):
            return f"atom({show_stack(stack)})"
        case GTimesPi(base):
            return f"timespi({show_ground(base)})"
        case GPowTimesPi(base):
            return f"subsets_timespi({show_ground(base)})"
        case GEntries(_):
            raise ValueError("entry tables have no literal syntax")
    raise TypeError(f"unexpected ground value: {g!r}")


class _GroundParser:
    def __init__(self, src: str, constants: dict[str, GroundSet] | None = None):
        self.src = src
        self.pos = 0
        self.constants = constants or {}

    def error(self, message: str):
        from .machine import ParseError

        raise ParseError(message, self.pos)

    def skip_ws(self):
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.src[self.pos] if self.pos < len(self.src) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def ident(self) -> str:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.src) and (
            self.src[self.pos].isalnum() or self.src[self.pos] == "_"
        ):
            self.pos += 1
        if self.pos == start:
            self.error("expected a name")
        return self.src[start : self.pos]

    def ground(self) -> GroundSet:
        ch = self.peek()
        if ch == "{":
            self.pos += 1
            elems: list[GroundSet] = []
            if self.peek() == "}":
                self.pos += 1
                return GSet(())
            elems.append(self.ground())
            while self.peek() == ",":
                self.pos += 1
                elems.append(self.ground())
            self.expect("}")
            return GSet(tuple(elems))
        if ch == "":
            self.error("expected a ground-set literal")
        word = self.ident()
        if word.isdigit():
            return von_neumann(int(word))
        if word == "pair":
            self.expect("(")
            a = self.ground()
            self.expect(",")
            b = self.ground()
            self.expect(")")
            return kuratowski_pair(a, b)
        if word == "timespi":
            self.expect("(")
            a = self.ground()
            self.expect(")")
            return GTimesPi(a)
        if word == "subsets_timespi":
            self.expect("(")
            a = self.ground()
            self.expect(")")
            return GPowTimesPi(a)
        if word == "atom":
            self.expect("(")
            depth = 0
            start = self.pos
            while self.pos < len(self.src):
                c = self.src[self.pos]
                if c == "(":
                    depth += 1
                elif c == ")":
                    if depth == 0:
                        break
                    depth -= 1
                self.pos += 1
            from .machine import _Parser as _TermParser

            inner = self.src[start : self.pos]
            sub = _TermParser(inner, None)
            stack = sub.stack()
            sub.done()
            self.expect(")")
            return GAtom(stack)
        if word in self.constants:
            return self.constants[word]
        self.error(f"unknown ground constant {word!r}")

    def done(self):
        self.skip_ws()
        if self.pos < len(self.src):
            self.error("unexpected trailing input")


def parse_ground(src: str, constants: dict[str, GroundSet] | None = None) -> GroundSet:
    p = _GroundParser(src, constants)
    out = p.ground()
    p.done()
    return out


### sentence syntax for the ground language
#
#   bot | t in u | t = u | t < u | t notin u | ~F | F & G | F "|" G | F -> G
#   | forall x. F | exists x. F | (F)
#
# -> is right associative and binds loosest; then |, &, ~. Quantifiers extend
# to the right. Terms are variables, declared constants, or ground literals.


class _SentenceParser(_GroundParser):
    KEYWORDS = {"bot", "forall", "exists", "in", "notin"}

    def _keyword(self, word: str) -> bool:
        self.skip_ws()
        end = self.pos + len(word)
        if not self.src.startswith(word, self.pos):
            return False
        if end < len(self.src) and (self.src[end].isalnum() or self.src[end] == "_"):
            return False
        self.pos = end
        return True

    def atom_term(self, bound: frozenset[str]) -> NameTerm:
        ch = self.peek()
        if ch == "{" or ch.isdigit():
            return NConst(self.ground())
        save = self.pos
        word = self.ident()
        if word in ("pair", "timespi", "subsets_timespi", "atom"):
            self.pos = save
            return NConst(self.ground())
        if word in bound:
            return NVar(word)
        if word in self.constants:
            return NConst(self.constants[word])
        if word in self.KEYWORDS:
            self.error(f"{word!r} is a keyword, not a term")
        self.error(f"unknown name {word!r}")

    def formula(self, bound: frozenset[str]) -> FormulaZF:
        lhs = self.or_formula(bound)
        self.skip_ws()
        if self.src.startswith("->", self.pos):
            self.pos += 2
            return ZImp(lhs, self.formula(bound))
        return lhs

    def or_formula(self, bound: frozenset[str]) -> FormulaZF:
        lhs = self.and_formula(bound)
        while self.peek() == "|":
            self.pos += 1
            lhs = ZOr(lhs, self.and_formula(bound))
        return lhs

    def and_formula(self, bound: frozenset[str]) -> FormulaZF:
        lhs = self.unit_formula(bound)
        while self.peek() == "&":
            self.pos += 1
            lhs = ZAnd(lhs, self.unit_formula(bound))
        return lhs

    def unit_formula(self, bound: frozenset[str]) -> FormulaZF:
        ch = self.peek()
        if ch == "~":
            self.pos += 1
            return ZNot(self.unit_formula(bound))
        if ch == "(":
            self.pos += 1
            out = self.formula(bound)
            self.expect(")")
            return out
        save = self.pos
        if ch.isalpha():
            word = self.ident()
            if word == "bot":
                return ZBot()
            if word in ("forall", "exists"):
                var = self.ident()
                if var in self.KEYWORDS:
                    self.error(f"{var!r} is a keyword, not a variable")
                self.expect(".")
                body = self.formula(bound | {var})
                return ZForall(var, body) if word == "forall" else ZExists(var, body)
            self.pos = save
        lhs = self.atom_term(bound)
        self.skip_ws()
        if self._keyword("notin"):
            return ZNot(ZIn(lhs, self.atom_term(bound)))
        if self._keyword("in"):
            return ZIn(lhs, self.atom_term(bound))
        if self.peek() == "=":
            self.pos += 1
            return ZEq(lhs, self.atom_term(bound))
        if self.peek() == "<":
            self.pos += 1
            return ZLess(lhs, self.atom_term(bound))
        self.error("expected a relation: in, notin, =, <")


def parse_sentence(
    src: str, constants: dict[str, GroundSet] | None = None
) -> FormulaZF:
    p = _SentenceParser(src, constants)
    out = p.formula(frozenset())
    p.done()
    return out


def parse_formula(
    src: str,
    free: frozenset[str] = frozenset(),
    constants: dict[str, GroundSet] | None = None,
) -> FormulaZF:
    """Parse a formula whose free variables are declared up front."""
    p = _SentenceParser(src, constants)
    out = p.formula(frozenset(free))
    p.done()
    return out


### universe construction


def exhaustive_universe(rank: int) -> tuple[GroundSet, ...]:
    """All plain hereditarily finite sets of rank <= rank, canonical order."""
    level: list[GroundSet] = [EMPTY]
    for _ in range(rank):
        subsets = []
        for r in range(len(level) + 1):
            for combo in itertools.combinations(level, r):
                subsets.append(GSet(tuple(combo)))
        level = sorted(set(subsets), key=struct_key)
    return tuple(level)


def name_support(g: GroundSet, ctx=None) -> list[GroundSet]:
    """Immediate names a universe should carry alongside g."""
    match g:
        case GTimesPi(base):
            return list(elements(base, ctx))
        case GEntries(entries):
            return [name for name, _ in entries]
        case GSet(_):
            out = []
            for name, _ in entry_table(g, ctx):
                out.append(name)
            for e in g.elems:
                if isinstance(e, GAtom):
                    continue
                if decode_pair(e) is not None:
                    continue
                out.append(e)
            return out
        case GAtom(_) | GPowTimesPi(_):
            return []
    raise TypeError(f"unexpected ground value: {g!r}")


def universe_closure(
    seeds: list[GroundSet] | tuple[GroundSet, ...],
    ctx=None,
    ceiling: int = 512,
) -> tuple[GroundSet, ...]:
    """Seeds plus their hereditary name support, deterministically ordered.

    Stack atoms never become universe members; they stay entry carriers.
    """
    out: list[GroundSet] = []
    seen: set[GroundSet] = set()
    frontier = list(seeds)
    while frontier:
        g = frontier.pop(0)
        if g in seen or isinstance(g, GAtom):
            continue
        seen.add(g)
        out.append(g)
        if len(out) > ceiling:
            raise ResourceError(f"universe closure exceeded ceiling {ceiling}")
        frontier.extend(name_support(g, ctx))
    return tuple(sorted(out, key=struct_key))
