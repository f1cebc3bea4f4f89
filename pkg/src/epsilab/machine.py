"""Deterministic stack machine for closed lambda-terms.

Terms use nameless (de Bruijn) binders internally; the surface syntax is
named and resolved at parse time.  A machine state is a term paired with a
stack; exactly four reduction rules exist (push, grab, save, restore) and at
most one applies to any state, so evaluation is a straight line.

Poles classify states: a termination pole accepts states that get stuck
within a fuel budget, an explicit pole accepts states that reach a declared
base set.  Both are closed under anti-reduction by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class MachineError(Exception):
    pass


class ParseError(MachineError):
    """Raised with a character position when surface syntax is rejected."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class ResourceError(MachineError):
    pass


### terms and stacks


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Lam:
    body: Term

    # term trees are hashed once per visited machine state, and they grow
    # under substitution, so an uncached recursive hash is quadratic in the
    # length of a run; the cache keeps it linear
    def __hash__(self):
        h = self.__dict__.get("_h")
        if h is None:
            _prime_hashes(self)
            h = self.__dict__["_h"]
        return h


@dataclass(frozen=True)
class App:
    fn: Term
    arg: Term

    def __hash__(self):
        h = self.__dict__.get("_h")
        if h is None:
            _prime_hashes(self)
            h = self.__dict__["_h"]
        return h


def _prime_hashes(root: Term) -> None:
    # fill caches bottom-up with an explicit worklist: a deep uncached spine
    # must not recurse through the interpreter stack
    todo = [root]
    while todo:
        node = todo.pop()
        if isinstance(node, Lam):
            kids = (node.body,)
        elif isinstance(node, App):
            kids = (node.fn, node.arg)
        else:
            continue
        if "_h" in node.__dict__:
            continue
        missing = [k for k in kids if isinstance(k, (Lam, App)) and "_h" not in k.__dict__]
        if missing:
            todo.append(node)
            todo.extend(missing)
        elif isinstance(node, Lam):
            object.__setattr__(node, "_h", hash((0x1A, node.body)))
        else:
            object.__setattr__(node, "_h", hash((0x2B, node.fn, node.arg)))


@dataclass(frozen=True)
class CallCC:
    pass


@dataclass(frozen=True)
class Cont:
    stack: Stack


@dataclass(frozen=True)
class Instr:
    """Inert named instruction; no reduction rule ever fires on it."""

    tag: str


Term = Var | Lam | App | CallCC | Cont | Instr


@dataclass(frozen=True)
class Stack:
    entries: tuple[Term, ...]  # leftmost entry is the top
    base: str

    def __hash__(self):
        h = self.__dict__.get("_h")
        if h is None:
            h = hash((0x3C, self.entries, self.base))
            object.__setattr__(self, "_h", h)
        return h

    def push(self, t: Term) -> Stack:
        return Stack((t,) + self.entries, self.base)

    @property
    def depth(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class Process:
    term: Term
    stack: Stack

    def __hash__(self):
        h = self.__dict__.get("_h")
        if h is None:
            h = hash((0x4D, self.term, self.stack))
            object.__setattr__(self, "_h", h)
        return h


### de Bruijn manipulation

def subst(t: Term, replacement: Term, target: int = 0) -> Term:
    """Replace the variable `target` by a CLOSED term.

    The machine only ever substitutes stack entries, and every process it
    touches is closed, so no index shifting is needed.  Inserting the
    replacement by reference keeps stepped terms shared: a run that keeps
    growing its state costs time linear in the run, not quadratic.
    """
    match t:
        case Var(i):
            if i == target:
                return replacement
            return Var(i - 1) if i > target else t
        case Lam(body):
            return Lam(subst(body, replacement, target + 1))
        case App(fn, arg):
            return App(subst(fn, replacement, target), subst(arg, replacement, target))
        case CallCC() | Cont(_) | Instr(_):
            return t
    raise TypeError(f"unexpected term: {t!r}")


def is_closed(t: Term, depth: int = 0) -> bool:
    match t:
        case Var(i):
            return i < depth
        case Lam(body):
            return is_closed(body, depth + 1)
        case App(fn, arg):
            return is_closed(fn, depth) and is_closed(arg, depth)
        case Cont(stack):
            return all(is_closed(e) for e in stack.entries)
        case CallCC() | Instr(_):
            return True
    raise TypeError(f"unexpected term: {t!r}")


def is_proof_like(t: Term, allowed_instrs: frozenset[str] = frozenset()) -> bool:
    """No continuation nodes, no instructions outside the declared set."""
    match t:
        case Var(_):
            return True
        case Lam(body):
            return is_proof_like(body, allowed_instrs)
        case App(fn, arg):
            return is_proof_like(fn, allowed_instrs) and is_proof_like(arg, allowed_instrs)
        case Cont(_):
            return False
        case CallCC():
            return True
        case Instr(tag):
            return tag in allowed_instrs
    raise TypeError(f"unexpected term: {t!r}")


### the four rules

def step(p: Process) -> Process | None:
    """One machine step, or None when the state is stuck."""
    t, st = p.term, p.stack
    match t:
        case App(fn, arg):  # push
            return Process(fn, st.push(arg))
        case Lam(body) if st.entries:  # grab
            return Process(subst(body, st.entries[0]), Stack(st.entries[1:], st.base))
        case CallCC() if st.entries:  # save
            rest = Stack(st.entries[1:], st.base)
            return Process(st.entries[0], rest.push(Cont(rest)))
        case Cont(saved) if st.entries:  # restore
            return Process(st.entries[0], saved)
    return None


@dataclass(frozen=True)
class Trace:
    states: tuple[Process, ...]
    status: str  # "stuck" | "fuel_exhausted"

    @property
    def steps(self) -> int:
        return len(self.states) - 1

    @property
    def final(self) -> Process:
        return self.states[-1]


def run(p: Process, fuel: int) -> Trace:
    """Run to a stuck state or until fuel runs out; the trace includes p."""
    states = [p]
    for _ in range(fuel):
        nxt = step(p)
        if nxt is None:
            return Trace(tuple(states), "stuck")
        p = nxt
        states.append(p)
    return Trace(tuple(states), "stuck" if step(p) is None else "fuel_exhausted")


def halts(p: Process, fuel: int) -> bool:
    """Like run() but cuts cycles: a repeated state can never get stuck."""
    seen = {p}
    for _ in range(fuel):
        nxt = step(p)
        if nxt is None:
            return True
        if nxt in seen:
            return False
        seen.add(nxt)
        p = nxt
    return step(p) is None


### poles


@dataclass(frozen=True)
class TerminationPole:
    """Accepts states that reach a stuck state within the fuel budget.

    Fuel exhaustion counts as rejection, which keeps membership conservative.
    """

    fuel: int = 10_000

    def member(self, p: Process) -> bool:
        return halts(p, self.fuel)


@dataclass(frozen=True)
class ExplicitPole:
    """Anti-reduction closure of an explicit base set of states."""

    base: frozenset[Process]
    fuel: int = 10_000

    def member(self, p: Process) -> bool:
        seen = set()
        for _ in range(self.fuel + 1):
            if p in self.base:
                return True
            if p in seen:
                return False
            seen.add(p)
            nxt = step(p)
            if nxt is None:
                return False
            p = nxt
        return False


Pole = TerminationPole | ExplicitPole


def pole_member(pole: Pole, p: Process) -> bool:
    return pole.member(p)


### well-known combinators

I_TERM: Term = Lam(Var(0))
K_TERM: Term = Lam(Lam(Var(1)))
DELTA_TERM: Term = Lam(App(Var(0), Var(0)))  # self-application
# fixpoint: (A)A with A = \x.\f.(f)((x)x)f
_A = Lam(Lam(App(Var(0), App(App(Var(1), Var(1)), Var(0)))))
Y_TERM: Term = App(_A, _A)
APPLY_I_TERM: Term = Lam(App(Var(0), I_TERM))  # \x.(x)I
OMEGA_TERM: Term = App(DELTA_TERM, DELTA_TERM)  # diverges; never proof-pool material


### term pool and stack enumeration


@dataclass(frozen=True)
class TermPool:
    """Closed proof-like terms by name, plus stack constants and budgets."""

    terms: tuple[tuple[str, Term], ...]
    constants: tuple[str, ...] = ("pi0",)
    depth: int = 2
    fuel: int = 10_000
    proof_instrs: frozenset[str] = frozenset()
    enumeration_ceiling: int = 100_000

    def __post_init__(self):
        names = [n for n, _ in self.terms]
        if len(set(names)) != len(names):
            raise ValueError("duplicate pool term names")
        if not self.constants:
            raise ValueError("pool needs at least one stack constant")
        for name, t in self.terms:
            if not is_closed(t):
                raise ValueError(f"pool term {name!r} is not closed")
            if not is_proof_like(t, self.proof_instrs):
                raise ValueError(f"pool term {name!r} is not proof-like")
        values = [t for _, t in self.terms]
        if I_TERM not in values or Y_TERM not in values:
            raise ValueError("pool must contain the identity and the fixpoint combinator")

    def values(self) -> tuple[Term, ...]:
        return tuple(t for _, t in self.terms)

    def named(self) -> dict[str, Term]:
        return dict(self.terms)


def make_pool(
    extra: dict[str, Term] | None = None,
    constants: tuple[str, ...] = ("pi0",),
    depth: int = 2,
    fuel: int = 10_000,
    proof_instrs: frozenset[str] = frozenset(),
) -> TermPool:
    terms: dict[str, Term] = {"I": I_TERM, "Y": Y_TERM}
    if extra:
        terms.update(extra)
    return TermPool(
        terms=tuple(sorted(terms.items())),
        constants=constants,
        depth=depth,
        fuel=fuel,
        proof_instrs=proof_instrs,
    )


def enumerate_stacks(pool: TermPool) -> tuple[Stack, ...]:
    """Every stack of depth <= pool.depth over the pool terms and constants.

    Deterministic order: by depth, then entry tuple (pool order), then base.
    """
    n, c, d = len(pool.terms), len(pool.constants), pool.depth
    total = sum(n**k for k in range(d + 1)) * c
    if total > pool.enumeration_ceiling:
        raise ResourceError(
            f"stack enumeration of size {total} exceeds ceiling {pool.enumeration_ceiling}"
        )
    values = pool.values()
    out: list[Stack] = []
    level: list[tuple[Term, ...]] = [()]
    for _ in range(d + 1):
        for entries in level:
            for base in pool.constants:
                out.append(Stack(entries, base))
        level = [(v,) + entries for entries in level for v in values]
    return tuple(out)


def stack_count(pool: TermPool) -> int:
    n, c, d = len(pool.terms), len(pool.constants), pool.depth
    return sum(n**k for k in range(d + 1)) * c


### printer

def show_term(t: Term, depth: int = 0) -> str:
    match t:
        case Var(i):
            if i >= depth:
                return f"?{i - depth}"  # free index; not parseable on purpose
            return f"x{depth - 1 - i}"
        case Lam(body):
            return f"\\x{depth}.{show_term(body, depth + 1)}"
        case App(fn, arg):
            return f"({show_term(fn, depth)}){show_term(arg, depth)}"
        case CallCC():
            return "cc"
        case Cont(stack):
            return f"k[{show_stack(stack)}]"
        case Instr(tag):
            return f"#{tag}"
    raise TypeError(f"unexpected term: {t!r}")


def _has_top_level_dot(s: str) -> bool:
    level = 0
    for ch in s:
        if ch in "([":
            level += 1
        elif ch in ")]":
            level -= 1
        elif ch == "." and level == 0:
            return True
    return False


def show_stack(st: Stack) -> str:
    parts = []
    for e in st.entries:
        s = show_term(e)
        parts.append(f"({s})" if _has_top_level_dot(s) else s)
    parts.append(st.base)
    return ".".join(parts)


def show_process(p: Process) -> str:
    return f"{show_term(p.term)} * {show_stack(p.stack)}"


### parser
#
# term   ::= unit | '(' term ')' spine | '\' name '.' term
# spine  ::= { atom }  then optionally one trailing '('-group or '\'-term,
#            which swallows the rest of the group (matches the usual
#            machine-literature reading of (f)(x)(x)f-style spines)
# unit   ::= name | 'cc' | '#' tag | 'k' '[' stack ']' | '<' poolname '>'
# stack  ::= { entryterm '.' } baseconst


class _Parser:
    def __init__(self, src: str, refs: dict[str, Term] | None):
        self.src = src
        self.pos = 0
        self.refs = refs or {}

    def error(self, msg: str) -> ParseError:
        return ParseError(msg, self.pos)

    def skip_ws(self):
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.src[self.pos] if self.pos < len(self.src) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            raise self.error(f"expected {ch!r}")
        self.pos += 1

    def ident(self) -> str:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.src) and (
            self.src[self.pos].isalnum() or self.src[self.pos] == "_"
        ):
            self.pos += 1
        if self.pos == start:
            raise self.error("expected an identifier")
        return self.src[start : self.pos]

    def term(self, binders: tuple[str, ...]) -> Term:
        ch = self.peek()
        if ch == "\\":
            self.pos += 1
            name = self.ident()
            self.expect(".")
            return Lam(self.term((name,) + binders))
        if ch == "(":
            self.pos += 1
            head = self.term(binders)
            self.expect(")")
        else:
            head = self.unit(binders)
        return self.spine(head, binders)

    def spine(self, head: Term, binders: tuple[str, ...]) -> Term:
        # bare atoms attach left-associatively; a parenthesized or lambda
        # argument extends as far right as possible and ends the spine
        while True:
            ch = self.peek()
            if ch == "(":
                self.pos += 1
                inner = self.term(binders)
                self.expect(")")
                return App(head, self.spine(inner, binders))
            if ch == "\\":
                return App(head, self.term(binders))
            if ch == "" or ch in ").]":
                return head
            head = App(head, self.unit(binders))

    def unit(self, binders: tuple[str, ...]) -> Term:
        ch = self.peek()
        if ch == "#":
            self.pos += 1
            return Instr(self.ident())
        if ch == "<":
            self.pos += 1
            name = self.ident()
            self.expect(">")
            if name not in self.refs:
                raise self.error(f"unknown named term {name!r}")
            return self.refs[name]
        name = self.ident()
        if name == "cc":
            return CallCC()
        if name == "k" and self.peek() == "[":
            self.pos += 1
            st = self.stack(binders)
            self.expect("]")
            return Cont(st)
        if name in binders:
            return Var(binders.index(name))
        raise self.error(f"unbound variable {name!r}")

    def stack(self, binders: tuple[str, ...] = ()) -> Stack:
        # entries separated by dots; the final identifier is the base constant
        entries: list[Term] = []
        while True:
            save = self.pos
            name = None
            try:
                name = self.ident()
            except ParseError:
                pass
            if name is not None and self.peek() in ("", "]"):
                if name == "cc":
                    raise self.error("expected a stack base constant")
                return Stack(tuple(entries), name)
            self.pos = save
            entries.append(self.term(binders))
            self.expect(".")

    def done(self):
        self.skip_ws()
        if self.pos != len(self.src):
            raise self.error("trailing input")


def parse_term(src: str, refs: dict[str, Term] | None = None) -> Term:
    p = _Parser(src, refs)
    t = p.term(())
    p.done()
    return t


def parse_stack(src: str, refs: dict[str, Term] | None = None) -> Stack:
    p = _Parser(src, refs)
    st = p.stack()
    p.done()
    return st


def parse_process(src: str, refs: dict[str, Term] | None = None) -> Process:
    if "*" not in src:
        raise ParseError("expected 'term * stack'", 0)
    tsrc, ssrc = src.split("*", 1)
    return Process(parse_term(tsrc, refs), parse_stack(ssrc, refs))


### deterministic structural ordering (used for canonical storage elsewhere)

def term_key(t: Term) -> tuple:
    match t:
        case Var(i):
            return (0, i)
        case Lam(body):
            return (1, term_key(body))
        case App(fn, arg):
            return (2, term_key(fn), term_key(arg))
        case CallCC():
            return (3,)
        case Instr(tag):
            return (4, tag)
        case Cont(stack):
            return (5, stack_key(stack))
    raise TypeError(f"unexpected term: {t!r}")


def stack_key(st: Stack) -> tuple:
    return (len(st.entries), tuple(term_key(e) for e in st.entries), st.base)
