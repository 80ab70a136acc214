from __future__ import annotations

import random

import pytest

from regtree.core import (
    RankedAlphabet,
    SetSystem,
    Sym,
    TransitionSystem,
    Var,
    from_expression,
    iso,
    encode_ts,
    ts_symbol,
    validate,
)
from regtree.corpus import rand_nested_system, rand_system, rand_ts, rand_unfolding
from regtree.equivalences import (
    bisimilar,
    bisimilar_naive,
    bisimilar_systems,
    minimize_system,
    unfold_class_key,
    unfold_equivalent,
)
from regtree.monad import flatten, slift
from regtree.morphisms import check_morphism

ALPH = RankedAlphabet.of(("a2", 2), ("a1", 1), ("b", 0), ("c", 0))


def loop_a1():
    return SetSystem.make(0, ["f"], ["f"], [], {"f": Sym("a1", 1)}, [("f", 1, "f")])


def two_cycle_a1():
    return SetSystem.make(
        0, ["u", "w"], ["u"], [], {"u": Sym("a1", 1), "w": Sym("a1", 1)},
        [("u", 1, "w"), ("w", 1, "u")],
    )


def unroll(t: SetSystem, v, depth: int):
    if depth == 0:
        return "?"
    l = t.labels[v]
    kids = []
    for d in range(1, l.rank + 1):
        (x,) = t.targets(v, d)
        kids.append(("x", x.index) if isinstance(x, Var) else unroll(t, x, depth - 1))
    return (l.name, tuple(kids))


def trees_equal_to_depth(a: SetSystem, b: SetSystem, depth: int) -> bool:
    (ia,), (ib,) = a.initial, b.initial
    return unroll(a, ia, depth) == unroll(b, ib, depth)


def test_reflexivity():
    rng = random.Random(0)
    for _ in range(30):
        t = rand_system(rng, ALPH, 4, rank=1)
        v = unfold_equivalent(t, t)
        assert v.equivalent


def test_loop_and_two_cycle_unfold_equivalent_with_checked_witness():
    v = unfold_equivalent(loop_a1(), two_cycle_a1())
    assert v.equivalent
    m1, m2 = v.witness
    assert check_morphism(m1.source, m1.target, m1.vmap).ok
    assert check_morphism(m2.source, m2.target, m2.vmap).ok


def test_shared_child_folding_and_negative_case():
    shared = SetSystem.make(
        0, ["r", "l"], ["r"], [],
        {"r": Sym("a2", 2), "l": Sym("b", 0)},
        [("r", 1, "l"), ("r", 2, "l")],
    )
    assert unfold_equivalent(from_expression("a2(b, b)", ALPH), shared).equivalent
    v = unfold_equivalent(from_expression("a2(b, c)", ALPH), from_expression("a2(b, b)", ALPH))
    assert not v.equivalent and v.distinguisher is not None
    # oracle: depth-6 unrolled trees
    assert trees_equal_to_depth(from_expression("a2(b, b)", ALPH), shared, 6)
    assert not trees_equal_to_depth(
        from_expression("a2(b, c)", ALPH), from_expression("a2(b, b)", ALPH), 6
    )


def test_decider_agrees_with_depth_bounded_tree_oracle():
    rng = random.Random(1)
    for _ in range(150):
        a = rand_system(rng, ALPH, 3, rank=1)
        b = rand_system(rng, ALPH, 3, rank=1)
        dec = unfold_equivalent(a, b).equivalent
        # depth 2*(|a|*|b|)+1 exceeds the product diameter: exact oracle
        depth = 2 * len(a.vertices) * len(b.vertices) + 1
        assert dec == trees_equal_to_depth(a, b, depth)


def test_symmetry_and_transitivity_on_unfolding_chains():
    rng = random.Random(2)
    for _ in range(60):
        t = rand_system(rng, ALPH, 3, rank=1)
        u1, _ = rand_unfolding(rng, t)
        u2, _ = rand_unfolding(rng, u1)
        assert unfold_equivalent(u1, t).equivalent
        assert unfold_equivalent(t, u1).equivalent
        assert unfold_equivalent(u2, u1).equivalent
        assert unfold_equivalent(u2, t).equivalent  # transitivity content


def test_transitivity_through_pullback_of_witness_spans():
    # the transitivity proof: pull the two spans back over the middle system
    from regtree.morphisms import check_morphism as chk, compose, pullback

    rng = random.Random(11)
    for _ in range(60):
        t1 = rand_system(rng, ALPH, 3, rank=1)
        mid, _ = rand_unfolding(rng, t1)
        t3, _ = rand_unfolding(rng, mid)
        v12 = unfold_equivalent(t1, mid)
        v23 = unfold_equivalent(mid, t3)
        assert v12.equivalent and v23.equivalent
        (a1, a2) = v12.witness  # common <- (t1, mid)
        (b1, b2) = v23.witness  # common <- (mid, t3)
        p, pi, pi2 = pullback(a2, b1)  # over mid
        left = compose(pi, a1)
        right = compose(pi2, b2)
        assert chk(p, t1, left.vmap).ok
        assert chk(p, t3, right.vmap).ok
        assert unfold_equivalent(t1, t3).equivalent


def test_trimming_preserves_unfold_equivalence():
    rng = random.Random(3)
    for _ in range(40):
        t = rand_system(rng, ALPH, 4, rank=1)
        extra = SetSystem.make(
            t.rank, list(t.vertices) + ["junk"], t.initial, [],
            {**t.labels, "junk": Sym("b", 0)}, t.edges,
        )
        assert unfold_equivalent(t, extra).equivalent


def test_minimize_agrees_with_decider():
    rng = random.Random(4)
    for _ in range(150):
        a = rand_system(rng, ALPH, 3, rank=1)
        b = rand_system(rng, ALPH, 3, rank=1)
        assert (unfold_class_key(a) == unfold_class_key(b)) == unfold_equivalent(a, b).equivalent


def test_inner_congruence():
    rng = random.Random(5)
    for _ in range(200):
        n = rand_nested_system(rng, ALPH, 3, 2, rank=1)
        labels2 = {}
        for v in n.vertices:
            u, _ = rand_unfolding(rng, n.labels[v])
            labels2[v] = u
        n2 = SetSystem(n.rank, n.vertices, n.initial, n.roots, labels2, n.edges)
        assert unfold_equivalent(flatten(n), flatten(n2)).equivalent


def test_outer_congruence():
    rng = random.Random(6)
    for _ in range(100):
        n = rand_nested_system(rng, ALPH, 3, 2, rank=1)
        outer2, fold = rand_unfolding(rng, n)
        assert unfold_equivalent(flatten(n), flatten(outer2)).equivalent


# bisimilarity ---------------------------------------------------------------

def test_ts_reflexive():
    rng = random.Random(7)
    for _ in range(30):
        ts = rand_ts(rng, 5)
        assert bisimilar(ts, ts).equivalent


def test_child_duplication_bisimilar():
    rng = random.Random(8)
    for _ in range(100):
        ts = rand_ts(rng, 5)
        # duplicate one state
        v = rng.choice(ts.vertices)
        dup = v + "_copy"
        trans = set(ts.transitions)
        trans |= {(dup, w) for (u, w) in ts.transitions if u == v}
        trans |= {(u, dup) for (u, w) in ts.transitions if w == v}
        ts2 = TransitionSystem.make(
            list(ts.vertices) + [dup], ts.initial, trans,
            {**{w: ts.valuation[w] for w in ts.vertices}, dup: ts.valuation[v]},
        )
        verdict = bisimilar(ts, ts2)
        assert verdict.equivalent == bisimilar_naive(ts, ts2)
        assert verdict.equivalent


def test_partition_refinement_agrees_with_naive():
    rng = random.Random(9)
    for _ in range(300):
        a, b = rand_ts(rng, 4), rand_ts(rng, 4)
        assert bisimilar(a, b).equivalent == bisimilar_naive(a, b)


def test_valuation_mismatch_distinguished_at_root():
    a = TransitionSystem.make(["s"], "s", [], {"s": frozenset({"p"})})
    b = TransitionSystem.make(["t"], "t", [], {"t": frozenset()})
    v = bisimilar(a, b)
    assert not v.equivalent
    assert v.distinguisher[0][0] == "val"


def test_encodings_with_permuted_children_bisimilar():
    ts = TransitionSystem.make(
        ["i", "j", "k"], "i", [("i", "j"), ("i", "k")],
        {"i": frozenset(), "j": frozenset({"p"}), "k": frozenset()},
    )
    s = encode_ts(ts)
    # swap the two children of i
    edges = set()
    for (u, d, t) in s.edges:
        if u == "i":
            edges.add((u, 3 - d, t))
        else:
            edges.add((u, d, t))
    s2 = SetSystem.make(0, s.vertices, s.initial, s.roots, s.labels, edges)
    assert bisimilar_systems(s, s2).equivalent


def test_unfold_equivalent_encodings_bisimilar():
    rng = random.Random(10)
    tsalph = RankedAlphabet(tuple(ts_symbol(ps, r) for ps in [(), ("p",)] for r in range(3)))
    for _ in range(300):
        t = rand_system(rng, tsalph, 4, rank=0)
        u, _ = rand_unfolding(rng, t)
        assert unfold_equivalent(t, u).equivalent
        assert bisimilar_systems(t, u).equivalent


def test_fig2_systems_reinterpreted_as_ts_bisimilar():
    nu1 = ts_symbol([], 1)
    s1 = SetSystem.make(0, ["f"], ["f"], [], {"f": nu1}, [("f", 1, "f")])
    s2 = SetSystem.make(0, ["u", "w"], ["u"], [], {"u": nu1, "w": nu1},
                        [("u", 1, "w"), ("w", 1, "u")])
    assert bisimilar_systems(s1, s2).equivalent
