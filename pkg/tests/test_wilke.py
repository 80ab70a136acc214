from __future__ import annotations

import itertools
import random

import pytest

from regtree.core import SetSystem, Sym, Var, validate
from regtree.monad import atomic, plant, plug
from regtree.wilke import (
    Letter,
    Presentation,
    PresentationError,
    Rep,
    accepts_composition,
    branch_values,
    build_delta,
    check_delta,
    delta_system,
    det_elements,
    elem_context,
    eval_lasso,
    eval_word,
    expand_composition,
    extremal_context,
    forbidden_letter_presentation,
    identify_rank1,
    loop_unit,
    omega_monotone,
    plug_rep,
    presentation_from_doc,
    presentation_to_doc,
    rep_leq,
    single,
    universal_branch_check,
    validate_presentation,
)

AVOID = forbidden_letter_presentation(
    [("a2", 2), ("a1", 1), ("b1", 1), ("c0", 0)], forbidden={"b1"}
)


def test_avoid_passes_validation():
    assert validate_presentation(AVOID) == []
    assert omega_monotone(AVOID)


def test_broken_omega_flagged():
    # omega(dead) = acc is not fixed by the dead action (act(dead, acc) = rej)
    bad = Presentation(AVOID.y1, AVOID.y0, AVOID.product, AVOID.act,
                       {"ok": "acc", "dead": "acc"}, AVOID.meet1, AVOID.meet0,
                       AVOID.accepting, AVOID.letters)
    assert any("not fixed by act" in x for x in validate_presentation(bad))


def test_non_upward_closed_accepting_flagged():
    bad = Presentation(AVOID.y1, AVOID.y0, AVOID.product, AVOID.act, AVOID.omega,
                       AVOID.meet1, AVOID.meet0, frozenset(["rej"]), AVOID.letters)
    assert any("upward closed" in x for x in validate_presentation(bad))


def test_eval_word_examples():
    assert eval_word(AVOID, [], "acc") == "acc"
    assert eval_word(AVOID, ["ok", "ok"], "acc") == "acc"
    assert eval_word(AVOID, ["ok", "dead"], "acc") == "rej"


def test_eval_lasso_examples():
    assert eval_lasso(AVOID, [], ["ok"]) == "acc"
    assert eval_lasso(AVOID, ["dead"], ["ok"]) == "rej"


def test_lasso_shift_law_exhaustive_to_length_4():
    for lu in range(0, 5):
        for u in itertools.product(AVOID.y1, repeat=lu):
            for lv in range(1, 5):
                for v in itertools.product(AVOID.y1, repeat=lv):
                    assert eval_lasso(AVOID, u, v) == eval_lasso(AVOID, list(u) + list(v), v)


def carrier_graph(labels: dict, edges, initial, roots=()):
    return SetSystem.make(
        0, list(labels), initial, roots,
        {v: Sym(l, 1 if l in AVOID.y1 else 0) for v, l in labels.items()}, edges,
    )


def test_single_ok_loop_accepted():
    g = carrier_graph({"v": "ok"}, [("v", 1, "v")], ["v"])
    assert universal_branch_check(AVOID, g)


def test_ok_chain_into_dead_loop_rejected():
    g = carrier_graph({"v": "ok", "w": "dead"}, [("v", 1, "w"), ("w", 1, "w")], ["v"])
    assert not universal_branch_check(AVOID, g)


def test_one_bad_branch_suffices():
    g = carrier_graph(
        {"v": "ok", "t": "acc", "w": "dead"},
        [("v", 1, "t"), ("v", 1, "w"), ("w", 1, "w")],
        ["v"],
    )
    assert not universal_branch_check(AVOID, g)


# brute-force oracle ----------------------------------------------------------

def brute_branches(p: Presentation, g: SetSystem) -> bool:
    """Enumerate every maximal branch explicitly (finite paths; for each simple
    cycle met twice, a lasso)."""
    kind = {v: ("y1" if g.labels[v].name in p.y1 else "y0") for v in g.vertices}

    out = {v: sorted({t for (s, d, t) in g.edges if s == v}) for v in g.vertices}
    ok = [True]

    def value_fin(word, t):
        return eval_word(p, word, t)

    def walk(v, path, word):
        if kind[v] == "y0":
            if value_fin(word, g.labels[v].name) not in p.accepting:
                ok[0] = False
            return
        if v in path:
            i = path.index(v)
            u, loop = word[:i], word[i:]
            if eval_lasso(p, u, loop) not in p.accepting:
                ok[0] = False
            return
        if not out[v]:
            return  # dead end: no maximal yield branch goes this way
        for w in out[v]:
            walk(w, path + [v], word + [g.labels[v].name])

    for v in set(g.initial) | set(g.roots):
        walk(v, [], [])
    return ok[0]


def rand_carrier_graph(rng: random.Random, n: int, acyclic: bool):
    labels = {}
    vs = [f"v{i}" for i in range(n)]
    for i, v in enumerate(vs):
        labels[v] = rng.choice(["ok", "dead"] if i < n - 1 else ["ok", "dead", "acc", "rej"])
    edges = []
    for i, v in enumerate(vs):
        if labels[v] in ("acc", "rej"):
            continue
        pool = vs[i + 1:] if acyclic else vs
        for t in rng.sample(pool, rng.randint(0, min(2, len(pool)))):
            edges.append((v, 1, t))
    initial = [vs[0]]
    roots = rng.sample(vs, rng.randint(0, 1))
    return carrier_graph({v: labels[v] for v in vs}, edges, initial, roots)


def test_saturation_agrees_with_bruteforce_random():
    rng = random.Random(0)
    for _ in range(400):
        g = rand_carrier_graph(rng, rng.randint(1, 6), acyclic=rng.random() < 0.5)
        assert universal_branch_check(AVOID, g) == brute_branches(AVOID, g)


def test_meet_semantics_sum_is_conjunction():
    rng = random.Random(1)
    from regtree.monad import sum_ss

    for _ in range(100):
        a = rand_carrier_graph(rng, rng.randint(1, 4), acyclic=False)
        b = rand_carrier_graph(rng, rng.randint(1, 4), acyclic=False)
        both = universal_branch_check(AVOID, sum_ss(a, b))
        assert both == (universal_branch_check(AVOID, a) and universal_branch_check(AVOID, b))


def test_plant_invariance():
    from regtree.wilke import check_plant_invariance

    rng = random.Random(2)
    graphs = [rand_carrier_graph(rng, rng.randint(1, 5), acyclic=False) for _ in range(100)]
    assert check_plant_invariance(AVOID, graphs) == []


# deterministic elements and rep order ---------------------------------------

def test_det_elements_rank1_is_carrier():
    assert {r.decomps for r in det_elements(AVOID, 1)} == {
        frozenset([("ok",)]), frozenset([("dead",)])
    }


def test_det_elements_rank2_count():
    assert len(det_elements(AVOID, 2)) == 4


def test_rep_leq_examples():
    dd = single(2, ("dead", "dead"))
    oo = single(2, ("ok", "ok"))
    assert rep_leq(AVOID, dd, oo) and not rep_leq(AVOID, oo, dd)
    assert rep_leq(AVOID, oo, oo)
    meet = Rep(2, frozenset([("ok", "dead"), ("dead", "ok")]))
    assert rep_leq(AVOID, meet, single(2, ("ok", "dead")))
    assert rep_leq(AVOID, meet, single(2, ("dead", "ok")))


def test_composition_examples():
    ctx = elem_context(AVOID, ["ok"])  # 0-hole through an ok loop-back
    g = plug_rep(AVOID, ctx, Rep(0, frozenset(), y0="acc"))
    assert accepts_composition(AVOID, g)
    ctx2 = elem_context(AVOID, ["ok", "dead", "ok"])
    assert not accepts_composition(AVOID, plug_rep(AVOID, ctx2, single(2, ("ok", "ok"))))


def test_composition_agrees_with_branch_brute_force_on_expansions():
    rng = random.Random(3)
    for _ in range(60):
        k = rng.randint(1, 2)
        tup = tuple(rng.choice(AVOID.y1) for _ in range(k + 1))
        a = single(k, tuple(rng.choice(AVOID.y1) for _ in range(k)))
        g = plant(plug_rep(AVOID, elem_context(AVOID, tup), a))
        ex = expand_composition(AVOID, g)
        assert universal_branch_check(AVOID, ex) == brute_branches(AVOID, ex)


# extremal contexts and the refinement -----------------------------------------

def test_extremal_all_ok_context():
    a = single(2, ("ok", "ok"))
    ms = extremal_context(AVOID, ("ok", "ok", "ok"), a)
    assert len(ms) == 3
    # exhaustive cross-check: ms is in the accepted set and minimal there
    accept = lambda tup: accepts_composition(
        AVOID, plant(plug_rep(AVOID, elem_context(AVOID, tup), a))
    )
    assert accept(ms)
    for tup in itertools.product(AVOID.y1, repeat=3):
        if tup != ms and all(AVOID.leq1(tup[i], ms[i]) for i in range(3)):
            assert not accept(tup)


def test_extremal_fixpoint_on_minimal_input():
    a = single(2, ("ok", "ok"))
    ms = extremal_context(AVOID, ("ok", "ok", "ok"), a)
    assert extremal_context(AVOID, ms, a) == ms


def test_extremal_requires_acceptance():
    a = single(2, ("dead", "dead"))
    with pytest.raises(PresentationError):
        extremal_context(AVOID, ("ok", "dead", "ok"), a)


def test_loop_unit_shape():
    u1 = loop_unit(AVOID, ("ok", "ok", "ok"), single(2, ("ok", "ok")), 1)
    rep = validate(u1)
    assert rep.ok and u1.rank == 1
    assert u1.initial == frozenset({"w"}) and u1.roots == frozenset({"m0"})


def test_identify_rank1_on_loop_units():
    a = single(2, ("ok", "ok"))
    assert identify_rank1(AVOID, loop_unit(AVOID, ("ok", "ok", "ok"), a, 1)) == "ok"
    bad = single(2, ("dead", "dead"))
    assert identify_rank1(AVOID, loop_unit(AVOID, ("ok", "ok", "ok"), bad, 1)) == "dead"


def test_build_delta_k1_returns_element():
    a = single(1, ("ok",))
    res = build_delta(AVOID, ("ok", "ok"), a)
    assert res.rep == a and res.delta is None


def test_build_delta_all_ok():
    a = single(2, ("ok", "ok"))
    ms = extremal_context(AVOID, ("ok", "ok", "ok"), a)
    res = build_delta(AVOID, ms, a)
    assert res.rep == single(2, ("ok", "ok"))
    assert all(res.checks.values())


def test_build_delta_mutation_controls():
    a = single(2, ("ok", "ok"))
    ms = extremal_context(AVOID, ("ok", "ok", "ok"), a)
    honest = build_delta(AVOID, ms, a)
    assert all(honest.checks.values())
    # shrinking a component below the honest refinement breaks acceptance
    forged_low = single(2, ("dead", "ok"))
    low = check_delta(AVOID, ms, a, delta_system(AVOID, ms, a), forged_low)
    assert not low["accepts_rep"]
    # a refinement forged above the element breaks the domination checks
    small_a = single(2, ("dead", "dead"))
    forged_high = single(2, ("ok", "ok"))
    high = check_delta(AVOID, ms, small_a, None, forged_high)
    assert not high["rep_leq"] and not high["context_leq"]


def test_presentation_doc_roundtrip():
    doc = presentation_to_doc(AVOID)
    back = presentation_from_doc(doc)
    assert back == AVOID
