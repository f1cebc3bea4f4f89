"""Ground-model tests.

Oracles in this file are written independently of the implementation:
  * denote() maps canonical values to nested frozensets, so extensional
    equality can be checked without trusting canon()
  * naive_closure() computes transitive closure by fixpoint iteration,
    cross-checking the worklist version
"""

from __future__ import annotations

from dataclasses import dataclass, field

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epsilab.ground import (
    EMPTY,
    ONE,
    TWO,
    ZERO,
    GAtom,
    GEntries,
    GPowTimesPi,
    GSet,
    GTimesPi,
    NConst,
    NVar,
    PatAll,
    PatOnly,
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
    canon,
    char_eval,
    closure_members,
    decode_pair,
    elements,
    entry_table,
    exhaustive_universe,
    ground_eq,
    kuratowski_pair,
    less,
    m_models,
    make_set,
    order_key,
    parse_ground,
    parse_sentence,
    show_ground,
    skolem_select,
    struct_key,
    transitive_closure,
    universe_closure,
    von_neumann,
)
from epsilab.machine import (
    CallCC,
    I_TERM,
    K_TERM,
    ParseError,
    ResourceError,
    Stack,
)

PI0 = Stack((), "pi0")
PI1 = Stack((), "pi1")
PUSHED = Stack((I_TERM,), "pi0")


@dataclass
class StubCtx:
    stacks: tuple[Stack, ...] = (PI0,)
    universe: tuple = ()
    symbols: dict = field(default_factory=dict)
    canon_memo: dict = field(default_factory=dict)

    def all_stacks(self):
        return self.stacks

    def pattern_stacks(self, pat):
        if isinstance(pat, PatAll):
            return frozenset(self.stacks)
        if isinstance(pat, PatOnly):
            return pat.stacks & frozenset(self.stacks)
        raise NotImplementedError(pat)


### oracle: independent denotation


def denote(g):
    """Canonical values as nested frozensets; atoms as tagged leaves."""
    if isinstance(g, GAtom):
        return ("atom", g.stack)
    assert isinstance(g, GSet)
    return frozenset(denote(e) for e in g.elems)


def naive_closure(g, ctx=None):
    """Fixpoint iteration, no worklist."""
    current = set(elements(g, ctx))
    while True:
        grown = set(current)
        for y in current:
            grown.update(elements(y, ctx))
        if grown == current:
            return frozenset(current)
        current = grown


RANK3 = exhaustive_universe(3)
RANK2 = exhaustive_universe(2)


def test_exhaustive_universe_sizes():
    assert len(exhaustive_universe(0)) == 1
    assert len(exhaustive_universe(1)) == 2
    assert len(RANK2) == 4
    assert len(RANK3) == 16


def test_structural_equality_is_extensional_on_rank3():
    for a in RANK3:
        for b in RANK3:
            assert (a == b) == (denote(a) == denote(b))


def test_out_of_order_duplicated_elements_normalize():
    a = GSet((ONE, ZERO, ONE))
    b = GSet((ZERO, ONE))
    assert a == b
    assert denote(a) == denote(b)


def test_von_neumann_matches_denotation():
    for n in range(5):
        got = denote(von_neumann(n))
        assert len(got) == n
        if n:
            assert denote(von_neumann(n - 1)) in got


def test_pair_injective_on_rank2():
    pairs = {}
    for a in RANK2:
        for b in RANK2:
            enc = kuratowski_pair(a, b)
            assert decode_pair(enc) == (a, b)
            assert pairs.setdefault(denote(enc), (a, b)) == (a, b)


def test_pair_examples():
    assert kuratowski_pair(EMPTY, EMPTY) == make_set(make_set(EMPTY))
    assert kuratowski_pair(EMPTY, ONE) == make_set(
        make_set(EMPTY), make_set(EMPTY, ONE)
    )


def test_decode_rejects_non_pairs():
    assert decode_pair(EMPTY) is None
    assert decode_pair(TWO) is None
    assert decode_pair(make_set(TWO)) is None
    assert decode_pair(GAtom(PI0)) is None


### transitive closure and precedence


def test_closure_already_transitive():
    assert transitive_closure(make_set(EMPTY)) == make_set(EMPTY)


def test_closure_one_unfolding():
    assert transitive_closure(make_set(ONE)) == make_set(ONE, EMPTY)


def test_closure_worklist_agrees_with_naive_fixpoint():
    ctx = StubCtx()
    samples = list(RANK3) + [
        kuratowski_pair(EMPTY, ONE),
        GTimesPi(TWO),
        GEntries(((ONE, PatOnly(frozenset({PI0}))),)),
    ]
    for g in samples:
        assert closure_members(g, ctx) == naive_closure(g, ctx)


def test_closure_idempotent():
    for g in RANK3:
        once = transitive_closure(g)
        assert transitive_closure(once) == once


def test_less_examples():
    assert less(EMPTY, ONE)
    assert not less(ONE, EMPTY)
    ctx = StubCtx()
    assert less(EMPTY, GTimesPi(TWO), ctx)


def test_less_irreflexive_on_universe():
    for g in RANK3:
        assert not less(g, g)


def test_less_transitive_on_universe():
    rel = {(a, b) for a in RANK3 for b in RANK3 if less(a, b)}
    for a, b in rel:
        for c in RANK3:
            if (b, c) in rel:
                assert (a, c) in rel


def test_less_graph_is_acyclic():
    incoming = {g: 0 for g in RANK3}
    succ = {g: [] for g in RANK3}
    for a in RANK3:
        for b in RANK3:
            if less(a, b):
                succ[a].append(b)
                incoming[b] += 1
    queue = [g for g in RANK3 if incoming[g] == 0]
    seen = 0
    while queue:
        x = queue.pop()
        seen += 1
        for y in succ[x]:
            incoming[y] -= 1
            if incoming[y] == 0:
                queue.append(y)
    assert seen == len(RANK3)


### canonical order


def test_order_total_and_stable():
    keys = [struct_key(g) for g in RANK3]
    assert sorted(keys) == keys
    assert len(set(keys)) == len(keys)


def test_atoms_after_all_pure_sets():
    atom = GAtom(PI0)
    for g in RANK3:
        assert struct_key(g) < struct_key(atom)


def test_order_key_uses_canonical_form():
    ctx = StubCtx()
    lazy = GTimesPi(ONE)
    assert order_key(lazy, ctx) == struct_key(canon(lazy, ctx))


### expansion


def test_timespi_expansion_lists_all_pairs():
    ctx = StubCtx(stacks=(PI0, PI1))
    expanded = canon(GTimesPi(TWO), ctx)
    want = {
        denote(kuratowski_pair(u, GAtom(s)))
        for u in (ZERO, ONE)
        for s in (PI0, PI1)
    }
    assert {denote(e) for e in expanded.elems} == want


def test_expansion_idempotent():
    ctx = StubCtx(stacks=(PI0, PI1))
    once = canon(GTimesPi(TWO), ctx)
    assert canon(once, ctx) == once


def test_entry_membership_agrees_with_expansion():
    ctx = StubCtx(stacks=(PI0, PI1))
    lazy = GTimesPi(TWO)
    expanded = canon(lazy, ctx)
    lazy_rows = {
        denote(canon(n, ctx)): ctx.pattern_stacks(p)
        for n, p in entry_table(lazy, ctx)
    }
    set_rows = {
        denote(canon(n, ctx)): ctx.pattern_stacks(p)
        for n, p in entry_table(expanded, ctx)
    }
    assert lazy_rows == set_rows


def test_entry_table_groups_stacks_per_name():
    g = make_set(
        kuratowski_pair(ONE, GAtom(PI0)),
        kuratowski_pair(ONE, GAtom(PI1)),
        kuratowski_pair(ZERO, GAtom(PI0)),
        TWO,  # not pair shaped, invisible to the entry view
    )
    rows = {denote(n): p.stacks for n, p in entry_table(g)}
    assert rows == {
        denote(ONE): frozenset({PI0, PI1}),
        denote(ZERO): frozenset({PI0}),
    }


def test_entry_table_ignores_pairs_with_set_second_component():
    g = make_set(kuratowski_pair(ZERO, ONE))
    assert entry_table(g) == ()


def test_powerset_product_expansion_refused_when_large():
    ctx = StubCtx(stacks=(PI0, PI1))
    # 9 base elements x 2 stacks = 18 plane pairs, 2^18 subsets
    with pytest.raises(ResourceError):
        canon(GPowTimesPi(GSet(RANK3[:9])), ctx)


def test_powerset_product_small_expansion():
    ctx = StubCtx(stacks=(PI0,))
    expanded = canon(GPowTimesPi(ONE), ctx)
    # base {0} x one stack -> 1 pair -> 2 subsets, each paired with the stack
    assert len(expanded.elems) == 2


def test_lazy_canonicalization_requires_context():
    with pytest.raises(ValueError):
        canon(GTimesPi(ONE))


### literal syntax


def test_parse_literals():
    assert parse_ground("{}") == EMPTY
    assert parse_ground("{{},{{}}}") == TWO
    assert parse_ground("2") == TWO
    assert parse_ground("pair(0,1)") == kuratowski_pair(ZERO, ONE)
    assert parse_ground("timespi({0,1})") == GTimesPi(TWO)
    assert parse_ground("subsets_timespi(1)") == GPowTimesPi(ONE)
    assert parse_ground("atom(pi0)") == GAtom(PI0)
    assert parse_ground("two", {"two": TWO}) == TWO


def test_parse_atom_with_pushed_entries():
    g = parse_ground(r"atom(\x.x . pi0)")
    assert g == GAtom(Stack((I_TERM,), "pi0"))


def test_parse_errors_carry_position():
    with pytest.raises(ParseError):
        parse_ground("{0,}")
    with pytest.raises(ParseError):
        parse_ground("nosuch")
    with pytest.raises(ParseError):
        parse_ground("{} {}")


def test_show_numerals_and_sets():
    assert show_ground(von_neumann(3)) == "3"
    assert show_ground(make_set(ONE)) == "{1}"
    assert show_ground(GAtom(PI0)) == "atom(pi0)"


stacks_st = st.builds(
    Stack,
    st.tuples() | st.tuples(st.sampled_from([I_TERM, K_TERM, CallCC()])),
    st.sampled_from(["pi0", "pi1"]),
)

ground_st = st.recursive(
    st.sampled_from(list(RANK2)) | st.builds(GAtom, stacks_st),
    lambda inner: st.one_of(
        st.lists(inner, max_size=3).map(lambda els: GSet(tuple(els))),
        st.builds(GTimesPi, inner),
        st.builds(GPowTimesPi, inner),
    ),
    max_leaves=6,
)


@settings(max_examples=200)
@given(ground_st)
def test_literal_round_trip(g):
    assert parse_ground(show_ground(g)) == g


@settings(max_examples=100)
@given(ground_st, ground_st)
def test_struct_key_consistent_with_equality(a, b):
    assert (a == b) == (struct_key(a) == struct_key(b))


### first-order evaluation

V3 = StubCtx(universe=RANK2)
V4 = StubCtx(universe=RANK3)


def test_empty_set_exists():
    f = ZExists("x", ZForall("y", ZNot(ZIn(NVar("y"), NVar("x")))))
    assert m_models(f, V3)
    assert m_models(f, V4)


def test_no_universal_container_in_truncation():
    f = ZForall("x", ZExists("y", ZIn(NVar("x"), NVar("y"))))
    assert not m_models(f, V3)
    assert not m_models(f, V4)


def test_pairing_within_rank_budget():
    body = ZExists("z", ZAnd(ZIn(NVar("x"), NVar("z")), ZIn(NVar("y"), NVar("z"))))
    for x in RANK2:
        for y in RANK2:
            assert m_models(body, V4, {"x": x, "y": y})


def test_connectives():
    t = ZEq(NConst(EMPTY), NConst(EMPTY))
    f = ZBot()
    assert m_models(ZImp(f, t), V3)
    assert m_models(ZImp(f, f), V3)
    assert not m_models(ZAnd(t, f), V3)
    assert m_models(ZOr(f, t), V3)
    assert m_models(ZNot(f), V3)
    assert not m_models(ZLess(NConst(EMPTY), NConst(EMPTY)), V3)
    assert m_models(ZLess(NConst(EMPTY), NConst(ONE)), V3)


def test_char_examples():
    assert char_eval(ZEq(NConst(EMPTY), NConst(EMPTY)), (), V3) == ONE
    assert char_eval(ZLess(NConst(EMPTY), NConst(ONE)), (), V3) == ONE
    assert char_eval(ZExists("z", ZIn(NVar("z"), NVar("x"))), (EMPTY,), V3) == ZERO


def test_char_agrees_with_m_models_on_corpus():
    corpus = [
        (ZIn(NVar("x"), NVar("y")), 2),
        (ZEq(NVar("x"), NVar("y")), 2),
        (ZLess(NVar("x"), NVar("y")), 2),
        (ZImp(ZIn(NVar("x"), NVar("y")), ZLess(NVar("x"), NVar("y"))), 2),
        (ZForall("z", ZImp(ZIn(NVar("z"), NVar("x")), ZIn(NVar("z"), NVar("y")))), 2),
        (ZExists("z", ZAnd(ZIn(NVar("z"), NVar("x")), ZIn(NVar("z"), NVar("y")))), 2),
    ]
    import itertools

    for f, arity in corpus:
        names = sorted({"x", "y"})
        for args in itertools.product(RANK2, repeat=arity):
            want = m_models(f, V3, dict(zip(names, args)))
            assert (char_eval(f, args, V3) == ONE) == want


def test_char_arity_mismatch():
    with pytest.raises(ValueError):
        char_eval(ZIn(NVar("x"), NVar("y")), (EMPTY,), V3)


def test_skolem_least_witness():
    assert skolem_select(ZEq(NVar("y"), NVar("y")), "y", V4) == EMPTY
    found = skolem_select(ZIn(NConst(EMPTY), NVar("y")), "y", V4)
    assert found == ONE
    assert skolem_select(ZIn(NConst(EMPTY), NVar("y")), "y", V4) == found


def test_skolem_no_witness_falls_back_to_least():
    f = ZAnd(ZBot(), ZEq(NVar("y"), NVar("y")))
    assert skolem_select(f, "y", V4) == EMPTY


### sentence syntax


def test_parse_sentences():
    assert parse_sentence("bot") == ZBot()
    assert parse_sentence("0 in 1") == ZIn(NConst(ZERO), NConst(ONE))
    assert parse_sentence("0 notin 0") == ZNot(ZIn(NConst(ZERO), NConst(ZERO)))
    assert parse_sentence("{} = 0") == ZEq(NConst(EMPTY), NConst(ZERO))
    assert parse_sentence("0 < 1") == ZLess(NConst(ZERO), NConst(ONE))
    assert parse_sentence("forall x. exists y. x in y") == ZForall(
        "x", ZExists("y", ZIn(NVar("x"), NVar("y")))
    )


def test_parse_sentence_precedence():
    f = parse_sentence("bot & bot | bot -> bot -> bot")
    assert f == ZImp(ZOr(ZAnd(ZBot(), ZBot()), ZBot()), ZImp(ZBot(), ZBot()))
    g = parse_sentence("~ 0 in 1")
    assert g == ZNot(ZIn(NConst(ZERO), NConst(ONE)))


def test_parse_sentence_quantifier_extends_right():
    f = parse_sentence("forall x. x in 1 -> bot")
    assert f == ZForall("x", ZImp(ZIn(NVar("x"), NConst(ONE)), ZBot()))


def test_parse_sentence_errors():
    with pytest.raises(ParseError):
        parse_sentence("0 in")
    with pytest.raises(ParseError):
        parse_sentence("forall in. bot")
    with pytest.raises(ParseError):
        parse_sentence("x in y")  # unbound names are rejected


def test_parsed_sentences_evaluate():
    assert m_models(parse_sentence("exists x. forall y. y notin x"), V3)
    assert not m_models(parse_sentence("forall x. exists y. x in y"), V3)


### universe builders


def test_universe_closure_adds_name_support():
    u = universe_closure([GTimesPi(TWO)])
    assert set(u) == {GTimesPi(TWO), ZERO, ONE}


def test_universe_closure_entry_names():
    name = GEntries(((TWO, PatAll()),))
    u = universe_closure([name])
    assert set(u) == {name, TWO, ZERO, ONE}


def test_universe_closure_excludes_atoms():
    u = universe_closure([make_set(GAtom(PI0), ONE)])
    assert GAtom(PI0) not in u
    assert ONE in u


def test_universe_closure_ceiling():
    with pytest.raises(ResourceError):
        universe_closure(list(RANK3), ceiling=3)


def test_universe_closure_deterministic():
    seeds = [GTimesPi(TWO), make_set(ONE)]
    assert universe_closure(seeds) == universe_closure(list(reversed(seeds)))
