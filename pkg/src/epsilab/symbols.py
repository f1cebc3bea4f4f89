"""Name constructors: comprehension, pairing, powerset-style bounds,
collection, images, and the boolean/mask algebra.

Value-level functions live alongside a registry of term-level adapters
(`default_symbols`), which is what formula evaluation consults.  Every
constructor is deterministic, so building the same name twice yields the
same value.
"""

from __future__ import annotations

from .ground import (
    EMPTY,
    GAtom,
    GEntries,
    GPowTimesPi,
    GSet,
    GTimesPi,
    GroundSet,
    NConst,
    NOpaque,
    NVar,
    NameTerm,
    ONE,
    PatAll,
    PatPushMarker,
    PatPushRealizer,
    ZERO,
    canon,
    char_eval,
    entry_table,
    eval_name_term,
    ground_eq,
    order_key,
    transitive_closure,
)
from .logic import (
    Arrow,
    Context,
    EpsNot,
    Forall,
    FormulaEps,
    HoleArg,
    FnArg,
    _tv,
    close_formula,
    disj,
    eps_in,
    force_report,
    fresh_var,
    member_stacks,
    name_eq,
    neg,
    strong_incl,
)


def _entries_of(a: GroundSet, ctx: Context):
    # powerset products have no direct entry table; expand first
    if isinstance(a, GPowTimesPi):
        a = canon(a, ctx)
    return entry_table(a, ctx)


def compr(
    a: GroundSet,
    var: str,
    body: FormulaEps,
    ctx: Context,
    env: dict[str, GroundSet] | None = None,
) -> GroundSet:
    """Guarded restriction: each entry of `a` keeps its pattern behind a
    realizer of the selecting formula at that entry's name."""
    env = env or {}
    rows = []
    for b, pat in _entries_of(a, ctx):
        guard = close_formula(body, env | {var: b})
        rows.append((b, PatPushRealizer(guard, pat)))
    return GEntries(tuple(rows))


def pair_c(x: GroundSet, y: GroundSet, ctx: Context) -> GroundSet:
    v = fresh_var()
    body = disj(name_eq(NVar(v), NConst(x)), name_eq(NVar(v), NConst(y)))
    return compr(GTimesPi(GSet((x, y))), v, body, ctx)


def pair_direct(x: GroundSet, y: GroundSet) -> GroundSet:
    return GEntries(
        (
            (x, PatPushMarker("1", PatAll())),
            (y, PatPushMarker("0", PatAll())),
        )
    )


def v_of(a: GroundSet, ctx: Context) -> GroundSet:
    return GTimesPi(transitive_closure(a, ctx))


def q_of(a: GroundSet, ctx: Context) -> GroundSet:
    return GPowTimesPi(transitive_closure(a, ctx))


def big_union(a: GroundSet, ctx: Context) -> GroundSet:
    z, y = "_uz", "_uy"
    inside = neg(
        Forall(y, Arrow(eps_in(NVar(z), NVar(y)), EpsNot(NVar(y), NConst(a))))
    )
    return compr(v_of(a, ctx), z, inside, ctx)


def power(a: GroundSet, ctx: Context) -> GroundSet:
    v = fresh_var()
    return compr(q_of(a, ctx), v, strong_incl(NVar(v), NConst(a)), ctx)


def collect_phi(
    var: str,
    body: FormulaEps,
    ctx: Context,
    env: dict[str, GroundSet] | None = None,
) -> GroundSet:
    # the finite surrogate of collection: the whole universe witnesses it
    psi = GSet(ctx.universe)
    return compr(GTimesPi(psi), var, body, ctx, env)


def gamma(
    var: str,
    body: FormulaEps,
    ctx: Context,
    env: dict[str, GroundSet] | None = None,
) -> GroundSet:
    """The set defined by a formula, when the universe certifies that its
    witnesses fit inside some single name.

    A witness is a universe element whose formula instance is pool-realized
    non-vacuously.  For formulas whose instances are all-or-nothing strong
    membership claims this is exact; for other shapes it can over-collect,
    which only makes the boundedness check harder to pass, never easier."""
    env = env or {}
    # vacuous realization (empty truth value) does not make a witness,
    # otherwise every name would qualify and nothing would ever be bounded
    witnesses = []
    for a in ctx.universe:
        inst = close_formula(body, env | {var: a})
        if _tv(inst, ctx, {}) and force_report(inst, ctx) is not None:
            witnesses.append(a)
    bounded = any(
        all(member_stacks(w, x, ctx) for w in witnesses) for x in ctx.universe
    )
    if not bounded:
        raise ValueError(
            "not a set: no universe name contains every witness of the formula"
        )
    xv = fresh_var(body)
    collected = Forall(var, Arrow(body, eps_in(NVar(var), NVar(xv))))
    phi = collect_phi(xv, collected, ctx, env)
    return compr(big_union(phi, ctx), var, body, ctx, env)


def image_f(fn, a: GroundSet, ctx: Context) -> GroundSet:
    rows = tuple((fn(b), pat) for b, pat in _entries_of(a, ctx))
    return GEntries(rows)


def gimel(e: GroundSet) -> GroundSet:
    return GTimesPi(e)


def _as_bool(a: GroundSet, ctx: Context) -> int:
    c = canon(a, ctx)
    if ground_eq(c, ZERO):
        return 0
    if ground_eq(c, ONE):
        return 1
    raise ValueError("expected a ground boolean (0 or 1)")


def bool_and(a: GroundSet, b: GroundSet, ctx: Context) -> GroundSet:
    return ONE if _as_bool(a, ctx) and _as_bool(b, ctx) else ZERO


def bool_or(a: GroundSet, b: GroundSet, ctx: Context) -> GroundSet:
    return ONE if _as_bool(a, ctx) or _as_bool(b, ctx) else ZERO


def bool_neg(a: GroundSet, ctx: Context) -> GroundSet:
    return ZERO if _as_bool(a, ctx) else ONE


def scale(alpha: GroundSet, x: GroundSet, ctx: Context) -> GroundSet:
    return x if _as_bool(alpha, ctx) else EMPTY


def join(x: GroundSet, y: GroundSet, ctx: Context) -> GroundSet:
    xv, yv = canon(x, ctx), canon(y, ctx)
    if isinstance(xv, GSet) and not xv.elems:
        return y
    if isinstance(yv, GSet) and not yv.elems:
        return x
    if not isinstance(xv, GSet) or not isinstance(yv, GSet):
        raise ValueError("join expects set-like names")
    return GSet(xv.elems + yv.elems)


def mix(pairs, ctx: Context) -> GroundSet:
    """Join of mask-scaled components; at most one mask may be live."""
    masks = [_as_bool(alpha, ctx) for alpha, _ in pairs]
    if sum(masks) > 1:
        raise ValueError("mix masks overlap")
    out: GroundSet = EMPTY
    for m, (_, x) in zip(masks, pairs):
        if m:
            out = join(out, x, ctx)
    return out


def char_lift(relation):
    """Wrap a ground relation as a name-level function into {0, 1}."""

    def apply(args: tuple[GroundSet, ...], ctx: Context) -> GroundSet:
        return char_eval(relation, args, ctx)

    return apply


def weak_choice_f(xvar: str, yvar: str, body: FormulaEps, ctx: Context):
    """Choice against a stack: f(x, s) is the canonical-order-least y whose
    truth value at (x, y) contains the stack s, else the least universe
    element."""
    cands = sorted(ctx.universe, key=lambda g: order_key(g, ctx))

    def choose(xv: GroundSet, piv: GroundSet) -> GroundSet:
        if not isinstance(piv, GAtom):
            raise ValueError("expected a stack atom")
        for y in cands:
            if piv.stack in _tv(body, ctx, {xvar: xv, yvar: y}):
                return y
        if not cands:
            raise ValueError("empty universe")
        return cands[0]

    return choose


### term-level adapters


def _hole(t: NameTerm) -> HoleArg:
    if isinstance(t, NOpaque) and isinstance(t.payload, HoleArg):
        return t.payload
    raise ValueError("expected a formula argument (x. F)")


def _sym_compr(ctx, env, base_t, hole_t):
    h = _hole(hole_t)
    return compr(eval_name_term(base_t, ctx, env), h.var, h.body, ctx, env)


def _sym_pairc(ctx, env, xt, yt):
    return pair_c(eval_name_term(xt, ctx, env), eval_name_term(yt, ctx, env), ctx)


def _sym_paird(ctx, env, xt, yt):
    return pair_direct(eval_name_term(xt, ctx, env), eval_name_term(yt, ctx, env))


def _sym_vset(ctx, env, at):
    return v_of(eval_name_term(at, ctx, env), ctx)


def _sym_qset(ctx, env, at):
    return q_of(eval_name_term(at, ctx, env), ctx)


def _sym_unionbar(ctx, env, at):
    return big_union(eval_name_term(at, ctx, env), ctx)


def _sym_powbar(ctx, env, at):
    return power(eval_name_term(at, ctx, env), ctx)


def _sym_phi(ctx, env, hole_t):
    h = _hole(hole_t)
    return collect_phi(h.var, h.body, ctx, env)


def _sym_gamma(ctx, env, hole_t):
    h = _hole(hole_t)
    return gamma(h.var, h.body, ctx, env)


def _sym_image(ctx, env, f_t, at):
    if not (isinstance(f_t, NOpaque) and isinstance(f_t.payload, FnArg)):
        raise ValueError("expected a function symbol reference")
    fn = ctx.symbols.get(f_t.payload.name)
    if fn is None:
        raise ValueError(f"unknown function symbol {f_t.payload.name!r}")
    return image_f(
        lambda b: fn(ctx, env, NConst(b)), eval_name_term(at, ctx, env), ctx
    )


def _sym_gimel(ctx, env, et):
    return gimel(eval_name_term(et, ctx, env))


def _sym_band(ctx, env, at, bt):
    return bool_and(eval_name_term(at, ctx, env), eval_name_term(bt, ctx, env), ctx)


def _sym_bor(ctx, env, at, bt):
    return bool_or(eval_name_term(at, ctx, env), eval_name_term(bt, ctx, env), ctx)


def _sym_bneg(ctx, env, at):
    return bool_neg(eval_name_term(at, ctx, env), ctx)


def _sym_scale(ctx, env, at, xt):
    return scale(eval_name_term(at, ctx, env), eval_name_term(xt, ctx, env), ctx)


def _sym_join(ctx, env, xt, yt):
    return join(eval_name_term(xt, ctx, env), eval_name_term(yt, ctx, env), ctx)


def default_symbols() -> dict:
    return {
        "compr": _sym_compr,
        "pairc": _sym_pairc,
        "paird": _sym_paird,
        "vset": _sym_vset,
        "qset": _sym_qset,
        "unionbar": _sym_unionbar,
        "powbar": _sym_powbar,
        "phi": _sym_phi,
        "gamma": _sym_gamma,
        "image": _sym_image,
        "gimel": _sym_gimel,
        "band": _sym_band,
        "bor": _sym_bor,
        "bneg": _sym_bneg,
        "scale": _sym_scale,
        "join": _sym_join,
    }
