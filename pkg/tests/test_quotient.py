"""Quotient view, agreement harness, elementarity reports, and collapse.

The collapse properties are checked against plain set structure directly
(membership preservation, transitive image, injectivity) rather than against
any reimplementation of the recursion.
"""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epsilab.ground import (
    ONE,
    TWO,
    ZERO,
    GEntries,
    GSet,
    GTimesPi,
    NConst,
    NVar,
    PatAll,
    PatOnly,
    ZAnd,
    ZEq,
    ZForall,
    ZIn,
    ZOr,
    canon,
    elements,
    exhaustive_universe,
    ground_eq,
    m_models,
    parse_formula,
    parse_sentence,
    struct_key,
    universe_closure,
    von_neumann,
    zf_free_vars,
)
from epsilab.logic import Arrow, Bottom, Context, EpsNot, Forall, HookArrow
from epsilab.machine import K_TERM, TerminationPole, make_pool
from epsilab.quotient import (
    DEFAULT_CORPUS,
    CollapseTable,
    ElementarityRecord,
    ExtensionalityError,
    MDStructure,
    collapse_phi,
    elementarity_suite,
    eps_ground_value,
    linear_classes,
    load_corpus,
    los_check,
    md_evaluate,
    md_translate,
    show_zf,
    wf_check_mD,
)
from epsilab.wellfounded import NotWellFounded

V2 = exhaustive_universe(2)
V3 = exhaustive_universe(3)
POOL = make_pool({"K": K_TERM})
POLE = TerminationPole(400)
CTX2 = Context(universe=V2, pole=POLE, pool=POOL)
CTX3 = Context(universe=V3, pole=POLE, pool=POOL)

# A table whose rows are all dead patterns is canonically empty, so it sits
# in the same equality class as 0 without being the same written object.
DEAD = GEntries(((ONE, PatOnly(frozenset())),))
MIXED = V2 + (DEAD, GTimesPi(TWO), GEntries(((ZERO, PatAll()),)))
CTXM = Context(universe=MIXED, pole=POLE, pool=POOL)

EXTENSIONALITY = (
    "forall x. forall y. "
    "((forall z. ((z in x -> z in y) & (z in y -> z in x))) -> x = y)"
)


### quotient predicates


def test_eq_d_is_an_equivalence_on_a_mixed_universe():
    md = MDStructure(CTXM)
    names = md.universe
    assert len(names) <= 12
    for x in names:
        assert md.eq_d(x, x)
        for y in names:
            assert md.eq_d(x, y) == md.eq_d(y, x)
            for z in names:
                if md.eq_d(x, y) and md.eq_d(y, z):
                    assert md.eq_d(x, z)


def test_in_d_is_congruent_for_eq_d():
    md = MDStructure(CTXM)
    names = md.universe
    pairs = [(x, y) for x in names for y in names if md.eq_d(x, y)]
    for x, x2 in pairs:
        for y, y2 in pairs:
            assert md.in_d(x, y) == md.in_d(x2, y2)


def test_dead_table_sits_in_the_class_of_zero():
    md = MDStructure(CTXM)
    assert md.eq_d(DEAD, ZERO)
    assert not md.eq_d(DEAD, ONE)


def test_quotient_predicates_collapse_to_plain_truth():
    md = MDStructure(CTX2)
    for x in V2:
        for y in V2:
            assert md.in_d(x, y) == m_models(
                ZIn(NConst(x), NConst(y)), CTX2
            )
            assert md.eq_d(x, y) == ground_eq(x, y, CTX2)


### the three readings agree


def test_md_evaluate_matches_plain_truth_on_the_corpus():
    md = MDStructure(CTX2)
    for text in DEFAULT_CORPUS:
        f = parse_sentence(text)
        assert md_evaluate(f, md) == m_models(f, CTX2), text


def test_translation_reads_back_to_plain_truth():
    for text in DEFAULT_CORPUS:
        f = parse_sentence(text)
        assert eps_ground_value(md_translate(f), CTX2) == m_models(f, CTX2), text


def test_translation_shapes():
    atom = ZIn(NVar("a"), NVar("b"))
    out = md_translate(atom)
    assert isinstance(out, HookArrow)
    assert isinstance(out.body, Bottom)
    imp = parse_formula("(a in b) -> bot", frozenset({"a", "b"}))
    assert isinstance(md_translate(imp), Arrow)
    quant = parse_sentence("forall x. x = x")
    out = md_translate(quant)
    assert isinstance(out, Forall) and out.var == "x"


def test_ground_value_rejects_formulas_outside_the_fragment():
    with pytest.raises(TypeError, match="fragment"):
        eps_ground_value(EpsNot(NVar("a"), NVar("b")), CTX2, {})


### agreement harness


def test_los_check_walks_the_whole_corpus():
    for text in DEFAULT_CORPUS:
        ok, detail = los_check(parse_sentence(text), (), CTX2, probe_realizers=False)
        assert ok, (text, detail)


def test_los_check_probes_realizers_on_a_sample():
    for text in DEFAULT_CORPUS[:12]:
        ok, detail = los_check(parse_sentence(text), (), CTX2)
        assert ok, (text, detail)


def test_los_check_open_formula_at_a_point():
    f = parse_formula("forall y. y notin x", frozenset({"x"}))
    assert los_check(f, (ZERO,), CTX2) == (True, None)
    assert los_check(f, (ONE,), CTX2) == (True, None)


def test_los_check_atomic_instance():
    f = parse_formula("a in b", frozenset({"a", "b"}))
    assert los_check(f, (ZERO, ONE), CTX2) == (True, None)


def test_los_check_arity_mismatch():
    f = parse_formula("a in b", frozenset({"a", "b"}))
    with pytest.raises(ValueError, match="arity"):
        los_check(f, (ZERO,), CTX2)


def test_skolem_function_law_and_cache():
    md = MDStructure(CTX2)
    f = parse_sentence("forall y. (y in 1 -> y = 0)")
    assert isinstance(f, ZForall)
    fn = md.skolem_fn(f)
    assert md.skolem_fn(f) is fn
    assert len(md.skolem_cache) == 1
    witness = fn({})
    assert m_models(f, CTX2) == m_models(f.body, CTX2, {"y": witness})


def test_skolem_witness_is_the_least_falsifier():
    md = MDStructure(CTX2)
    f = parse_formula("forall y. y notin x", frozenset({"x"}))
    assert isinstance(f, ZForall)
    fn = md.skolem_fn(f)
    # x = {1}: the only falsifier of "y notin x" is 1.
    assert ground_eq(fn({"x": GSet((ONE,))}), ONE, CTX2)
    # x = 0: nothing falsifies, so the least universe element comes back.
    assert ground_eq(fn({"x": ZERO}), ZERO, CTX2)


### elementarity reports


def test_suite_agrees_everywhere_on_v2():
    report = elementarity_suite(DEFAULT_CORPUS, CTX2)
    assert len(report.records) == len(DEFAULT_CORPUS)
    assert report.disagreements == ()


def test_suite_agrees_everywhere_on_v3():
    report = elementarity_suite(DEFAULT_CORPUS, CTX3)
    assert report.disagreements == ()
    values = {r.sentence: r.m_value for r in report.records}
    assert values["exists x. forall y. y notin x"] is True
    assert values["forall x. exists y. x in y"] is False
    assert values[EXTENSIONALITY] is True


def test_record_json_shape():
    report = elementarity_suite(DEFAULT_CORPUS[:3], CTX2)
    lines = report.to_json_lines()
    assert len(lines) == 3
    for line in lines:
        data = json.loads(line)
        assert set(data) == {"sentence", "m_value", "md_value", "agree"}
        assert data["agree"] == (data["m_value"] == data["md_value"])


def test_report_lines_are_stable_across_runs():
    a = elementarity_suite(DEFAULT_CORPUS, CTX2).to_json_lines()
    b = elementarity_suite(DEFAULT_CORPUS, CTX2).to_json_lines()
    assert a == b
    assert elementarity_suite(DEFAULT_CORPUS, CTX2).header


def test_corpus_sentences_are_closed_and_plentiful():
    assert len(DEFAULT_CORPUS) >= 20
    for text in DEFAULT_CORPUS:
        f = parse_sentence(text)
        assert zf_free_vars(f) == frozenset()


def test_load_corpus_skips_blanks_and_comments(tmp_path):
    path = tmp_path / "corpus.txt"
    path.write_text("# header\n\n0 in 1\n  1 in 2  \n\n# tail\n", encoding="utf-8")
    assert load_corpus(str(path)) == ("0 in 1", "1 in 2")


def test_suite_ignores_comment_lines_inline():
    report = elementarity_suite(("# note", "", "0 in 1"), CTX2)
    assert len(report.records) == 1


### the membership collapse


def test_collapse_on_v2_is_canonicalisation():
    md = MDStructure(CTX2)
    table = collapse_phi(md)
    assert len(table.classes) == len(V2)
    for rep, value in table.classes:
        assert struct_key(value) == struct_key(canon(rep, CTX2))


def test_collapse_two_class_universe():
    md = MDStructure(CTX2, universe=(ZERO, TWO))
    table = collapse_phi(md)
    # 2's only member inside this universe is 0, so it collapses to {0} = 1.
    assert [struct_key(v) for v in table.image()] == [
        struct_key(ZERO),
        struct_key(ONE),
    ]


def test_collapse_preserves_membership_both_ways():
    for universe in (V2, (ZERO, TWO), V3):
        md = MDStructure(CTX2, universe=universe)
        table = collapse_phi(md)
        for x, vx in table.classes:
            for y, vy in table.classes:
                assert md.in_d(x, y) == (vx in vy.elems), (x, y)


def test_collapse_image_is_transitive_and_injective():
    md = MDStructure(CTX3)
    table = collapse_phi(md)
    image_keys = {struct_key(v) for v in table.image()}
    for value in table.image():
        for member in value.elems:
            assert struct_key(member) in image_keys
    keys = [struct_key(v) for _, v in table.classes]
    assert len(keys) == len(set(keys))


def test_collapse_value_of_resolves_through_the_class():
    md = MDStructure(CTXM, universe=(ZERO, DEAD, TWO))
    table = collapse_phi(md)
    # DEAD and 0 share a class, so only two classes survive.
    assert len(table.classes) == 2
    assert struct_key(table.value_of(DEAD, md)) == struct_key(ZERO)
    with pytest.raises(ValueError, match="outside"):
        table.value_of(GSet((TWO,)), md)


def test_collapse_rejects_non_extensional_universes():
    orphan = GSet((GSet((ZERO, ONE)),))
    md = MDStructure(CTX2, universe=(ZERO, orphan))
    with pytest.raises(ExtensionalityError) as info:
        collapse_phi(md)
    a, b = info.value.pair
    assert {struct_key(canon(a, CTX2)), struct_key(canon(b, CTX2))} == {
        struct_key(ZERO),
        struct_key(canon(orphan, CTX2)),
    }


def test_collapse_rejects_cyclic_quotient_membership():
    class Poisoned(MDStructure):
        def in_d(self, x, y):
            return True

    with pytest.raises(NotWellFounded) as info:
        collapse_phi(Poisoned(CTX2, universe=(ZERO, ONE)))
    cycle = info.value.cycle
    assert ground_eq(cycle[0], cycle[-1], CTX2)


def test_linear_classes_collapse_onto_von_neumann_ordinals():
    md = MDStructure(CTX3)
    table = collapse_phi(md)
    ordinals = linear_classes(md)
    assert len(ordinals) >= 3
    ordinal_keys = {struct_key(von_neumann(k)) for k in range(6)}
    ranked = []
    for x in ordinals:
        value = table.value_of(x, md)
        assert struct_key(value) in ordinal_keys
        ranked.append((len(value.elems), x))
    # Strictly ordered by quotient membership along the value ranks.
    ranked.sort(key=lambda pair: pair[0])
    for (na, a), (nb, b) in zip(ranked, ranked[1:]):
        if na < nb:
            assert md.in_d(a, b) and not md.in_d(b, a)


@settings(max_examples=25, deadline=None)
@given(
    st.lists(
        st.sampled_from(list(V3)),
        min_size=1,
        max_size=5,
        unique_by=lambda g: struct_key(g),
    )
)
def test_collapse_properties_hold_on_sampled_universes(names):
    md = MDStructure(CTX3, universe=tuple(names))
    try:
        table = collapse_phi(md)
    except ExtensionalityError:
        # Distinct classes with the same visible members: nothing to check.
        return
    image_keys = {struct_key(v) for v in table.image()}
    for x, vx in table.classes:
        for y, vy in table.classes:
            assert md.in_d(x, y) == (vx in vy.elems)
        for member in vx.elems:
            assert struct_key(member) in image_keys
    keys = [struct_key(v) for _, v in table.classes]
    assert len(keys) == len(set(keys))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(DEFAULT_CORPUS))
def test_three_reading_routes_coincide(text):
    f = parse_sentence(text)
    md = MDStructure(CTX2)
    plain = m_models(f, CTX2)
    assert md_evaluate(f, md) == plain
    assert eps_ground_value(md_translate(f), CTX2) == plain


### well-foundedness of quotient membership


def test_wf_check_holds_on_exhaustive_and_seeded_universes():
    assert wf_check_mD(CTX2)
    assert wf_check_mD(CTX3)
    seeds = universe_closure((GTimesPi(TWO), GSet((TWO,))), CTX2)
    assert wf_check_mD(CTX2, universe=seeds)


def test_wf_check_rejects_a_poisoned_membership_relation():
    # A relation no family of set literals could produce: 0 and 1 each
    # swallow the other.
    a, b = NVar("qa"), NVar("qb")
    swap = ZAnd(ZEq(a, NConst(ZERO)), ZEq(b, NConst(ONE)))
    swap_back = ZAnd(ZEq(a, NConst(ONE)), ZEq(b, NConst(ZERO)))
    cyc = ZOr(swap, swap_back)
    assert not wf_check_mD(CTX2, membership=cyc)
    assert wf_check_mD(CTX2, membership=swap)


### display


def test_show_zf_round_trips_through_the_parser():
    for text in DEFAULT_CORPUS:
        f = parse_sentence(text)
        again = parse_sentence(show_zf(f))
        assert again == f
