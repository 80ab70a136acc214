from __future__ import annotations

import random

import pytest

from regtree.algebras import ReachabilityAlgebra, ReachElem
from regtree.core import RankedAlphabet, SetSystem, Sym, Var, from_expression, validate
from regtree.corpus import rand_ls_expansion, rand_nested_set_system, rand_set_system, rand_system
from regtree.equivalences import unfold_class_key, unfold_equivalent
from regtree.monad import atomic, flatten, hole, plant, plug, rename_vars, uproot
from regtree.morphisms import check_morphism, find_morphism, Morphism
from regtree.resolutions import (
    FlattenWitness,
    check_flatten_resolution,
    context_smallification,
    direct_resolutions,
    direct_to_flatten_resolution,
    flatten_resolution_morphism,
    in_init_yields,
    in_root_yields,
    is_resolution,
    is_small_map,
    profile,
    small_bound,
    smallify_flatten_resolution,
    yield_subsumed,
    yields,
)

ALPH = RankedAlphabet.of(("a2", 2), ("a1", 1), ("b", 0), ("c", 0), ("e", 0))
REACH = ReachabilityAlgebra()


def branching_context():
    """C[hole_1] = hole_1(b + c): the hole is initial, feeding b and c."""
    return SetSystem.make(
        0, ["h", "vb", "vc"], ["h"], [],
        {"h": hole(1), "vb": Sym("b", 0), "vc": Sym("c", 0)},
        [("h", 1, "vb"), ("h", 1, "vc")],
    )


def double_exit_s():
    return from_expression("a2(x1, x1)", ALPH, rank=1)


def test_system_resolves_to_itself_only():
    rng = random.Random(0)
    for _ in range(30):
        s = rand_system(rng, ALPH, 4, rank=1)
        rs = direct_resolutions(s, memory=0)
        assert len(rs) == 1
        assert unfold_class_key(rs[0]) == unfold_class_key(s)


def test_four_resolution_classes():
    cs = plug(branching_context(), double_exit_s())
    rs = direct_resolutions(cs, memory=0)
    expected = {
        unfold_class_key(from_expression(e, ALPH))
        for e in ("a2(b, b)", "a2(b, c)", "a2(c, b)", "a2(c, c)")
    }
    assert {unfold_class_key(t) for t in rs} == expected
    assert len(rs) == 4
    assert len(direct_resolutions(double_exit_s(), memory=0)) == 1


def test_yields_of_system():
    rng = random.Random(1)
    for _ in range(20):
        s = rand_system(rng, ALPH, 3, rank=1)
        init, root = yields(s, memory=0)
        assert len(init) == 1 and root == []


def test_enumerated_resolutions_are_members():
    rng = random.Random(2)
    for _ in range(40):
        s = rand_set_system(rng, ALPH, 3, rank=1)
        for t in direct_resolutions(s, memory=1)[:5]:
            assert in_init_yields(t, s)
        up = uproot(s)
        for t in direct_resolutions(up, memory=0)[:5]:
            assert in_root_yields(plant(t), s)


def test_membership_closed_under_unfold_equivalence():
    from regtree.corpus import rand_unfolding

    rng = random.Random(3)
    for _ in range(60):
        s = rand_set_system(rng, ALPH, 3, rank=1)
        rs = direct_resolutions(s, memory=0)
        if not rs:
            continue
        t = rs[0]
        u, _ = rand_unfolding(rng, t)
        assert in_init_yields(u, s)


def test_yield_subsumed_reflexive():
    rng = random.Random(4)
    for _ in range(30):
        s = rand_set_system(rng, ALPH, 3, rank=1)
        assert not yield_subsumed(s, s, memory=1).refuted


def test_morphism_implies_never_refuted():
    rng = random.Random(5)
    for _ in range(30):
        target = rand_set_system(rng, ALPH, 3, rank=1)
        src, _ = rand_ls_expansion(rng, target)
        # drop some structure: a sub-set-system of src still maps into target
        assert not yield_subsumed(src, target, memory=1).refuted


def test_locally_surjective_gives_both_directions():
    rng = random.Random(6)
    for _ in range(20):
        target = rand_set_system(rng, ALPH, 3, rank=1)
        src, fold = rand_ls_expansion(rng, target)
        assert check_morphism(src, target, fold).locally_surjective
        assert not yield_subsumed(src, target, memory=1).refuted
        assert not yield_subsumed(target, src, memory=1).refuted


# flatten-resolutions ---------------------------------------------------------

def nested_branching_example():
    """C[S] as a nested set-system: hole part labelled S, the rest atomic."""
    c = branching_context()
    s = double_exit_s()
    labels = {"h": s, "vb": atomic(Sym("b", 0)), "vc": atomic(Sym("c", 0))}
    return SetSystem(0, c.vertices, c.initial, c.roots, labels, c.edges)


def identity_witness(n: SetSystem) -> tuple[SetSystem, FlattenWitness]:
    sigma = {v: tuple(range(1, n.labels[v].rank + 1)) for v in n.vertices}
    gamma = {v: {w: w for w in n.labels[v].vertices} for v in n.vertices}
    return n, FlattenWitness({v: v for v in n.vertices}, sigma, gamma)


def test_identity_witness_accepted():
    from regtree.corpus import rand_nested_system

    rng = random.Random(7)
    for _ in range(40):
        n = rand_nested_system(rng, ALPH, 3, 2, rank=1)
        t, w = identity_witness(n)
        assert check_flatten_resolution(n, t, w)
        m = flatten_resolution_morphism(n, t, w)
        assert check_morphism(m.source, m.target, m.vmap).ok


def test_worked_flatten_resolution_witness():
    n = nested_branching_example()
    # T = A2(b, c): one a2 part over the hole, entering b and c parts
    ta = from_expression("a2(x1, x2)", ALPH)
    tb = atomic(Sym("b", 0))
    tc = atomic(Sym("c", 0))
    t = SetSystem.make(0, ["t", "tb", "tc"], ["t"], [],
                       {"t": ta, "tb": tb, "tc": tc},
                       [("t", 1, "tb"), ("t", 2, "tc")])
    (va,) = double_exit_s().initial
    w = FlattenWitness(
        delta={"t": "h", "tb": "vb", "tc": "vc"},
        sigma={"t": (1, 1), "tb": (), "tc": ()},
        gamma={"t": {ta.vertices[0]: va}, "tb": {"u": "u"}, "tc": {"u": "u"}},
    )
    assert check_flatten_resolution(n, t, w)
    m = flatten_resolution_morphism(n, t, w)
    assert check_morphism(m.source, m.target, m.vmap).ok
    # corrupting the tracking map breaks a bullet
    bad = FlattenWitness(w.delta, {**w.sigma, "t": (1, 2)}, w.gamma)
    ok, why = check_flatten_resolution(n, t, bad, explain=True)
    assert not ok and why


def test_direct_to_flatten_recovers_constant_tracking():
    n = nested_branching_example()
    r = from_expression("a2(b, c)", ALPH)
    t, w = direct_to_flatten_resolution(n, r)
    assert check_flatten_resolution(n, t, w)
    # the hole part is resolved by a2(x1, x2) with a constant tracking map
    (t0,) = t.initial
    assert w.delta[t0] == "h"
    assert w.sigma[t0] == (1, 1)
    assert unfold_class_key(t.labels[t0]) == unfold_class_key(from_expression("a2(x1, x2)", ALPH))
    # and flatten(t) unfolds onto r via the identity on r-vertices
    from regtree.monad import flatten_with_map

    ft, back = flatten_with_map(t)
    vmap = {nid: rv for nid, (tv, rv) in back.items()}
    assert check_morphism(ft, r, vmap).ok


def test_direct_to_flatten_roundtrip_random():
    rng = random.Random(8)
    done = 0
    while done < 100:
        n = rand_nested_set_system(rng, ALPH, 2, 2, rank=1, inner_roots=False, outer_roots=False)
        fl = flatten(n)
        rs = direct_resolutions(fl, memory=0)
        if not rs:
            continue
        r = rs[rng.randrange(len(rs))]
        t, w = direct_to_flatten_resolution(n, r)
        assert check_flatten_resolution(n, t, w)
        m = flatten_resolution_morphism(n, t, w)
        assert check_morphism(m.source, m.target, m.vmap).ok
        # r unfolds to flatten(t): the vertex projection is a morphism
        from regtree.monad import flatten_with_map

        ft, back = flatten_with_map(t)
        vmap = {nid: rv for nid, (tv, rv) in back.items()}
        assert check_morphism(ft, r, vmap).ok
        done += 1


# smallification --------------------------------------------------------------

def test_small_map_bound():
    assert small_bound(REACH) == 3
    assert is_small_map((1, 1, 1), 3) and not is_small_map((1, 1, 1, 1), 3)


def det_context_with_pieces(piece_exprs: list[str]):
    """Deterministic closed context Context-shaped from piece expressions."""
    from regtree.monad import make_context

    ps = [from_expression(e, ALPH, rank=1) for e in piece_exprs]
    return make_context(ps)


def test_context_smallification_already_small():
    t = from_expression("a2(x1, x2)", ALPH)
    c = det_context_with_pieces(["a1(x1)", "b", "c"])  # hole rank 2
    m2, tau, tau_p = context_smallification(t, c, (1, 2), REACH)
    assert m2 == 2 and tau == (1, 2) and tau_p == (1, 2)


def test_context_smallification_merges_equal_pieces():
    t = from_expression("a2(x1, x2)", ALPH)
    c = det_context_with_pieces(["a1(x1)", "b", "b"])  # equal pieces in 1 and 2
    m2, tau, tau_p = context_smallification(t, c, (1, 1), REACH)
    assert m2 == 1 and tau == (1, 1) and tau_p == (1,)


def _rand_small_instance(rng):
    m = rng.randint(1, 4)
    n = rng.randint(1, 2)
    sigma = tuple(rng.randint(1, n) for _ in range(m))
    t = rand_system(rng, ALPH, 3, rank=m, p_var=0.6)
    piece_pool = ["a1(x1)", "a1(a1(x1))", "b", "c"]
    c = det_context_with_pieces([rng.choice(piece_pool) for _ in range(m + 1)])
    return t, c, sigma


def test_context_smallification_postconditions_sampled():
    rng = random.Random(9)
    for _ in range(80):
        t, c, sigma = _rand_small_instance(rng)
        m = t.rank
        m2, tau, tau_p = context_smallification(t, c, sigma, REACH)
        assert tuple(sigma[tau_p[tau[i] - 1] - 1] for i in range(m)) == tuple(sigma)
        assert is_small_map(tuple(sigma[tau_p[k] - 1] for k in range(m2)), small_bound(REACH))
        lhs = REACH.eval_symbols(plug(c, t))
        merged = rename_vars(tuple(tau_p[tau[i] - 1] for i in range(m)), t, m)
        rhs = REACH.eval_symbols(plug(c, merged))
        assert lhs == rhs


def oversized_instance():
    """A flatten-resolution with a 4-to-1 tracking map over the 3-element bound."""
    inner = from_expression("a2(a2(x1, x1), a2(x1, x1))", ALPH, rank=1)
    n = SetSystem.make(
        0, ["o0", "o1"], ["o0"], [],
        {"o0": inner, "o1": atomic(Sym("b", 0))},
        [("o0", 1, "o1")],
    )
    r = from_expression("a2(a2(b, b), a2(b, b))", ALPH)
    return n, r


def test_smallify_flatten_resolution_merges_and_preserves_value():
    n, r = oversized_instance()
    t, w = direct_to_flatten_resolution(n, r)
    (t0,) = t.initial
    assert w.sigma[t0] == (1, 1, 1, 1)
    assert not is_small_map(w.sigma[t0], small_bound(REACH))
    before = REACH.eval_symbols(flatten(t))
    t2, w2 = smallify_flatten_resolution(n, t, w, REACH)
    assert all(is_small_map(w2.sigma[tv], small_bound(REACH)) for tv in t2.vertices)
    assert check_flatten_resolution(n, t2, w2)
    assert REACH.eval_symbols(flatten(t2)) == before


def test_smallify_keeps_small_input_unchanged():
    n = nested_branching_example()
    r = from_expression("a2(b, c)", ALPH)
    t, w = direct_to_flatten_resolution(n, r)
    t2, w2 = smallify_flatten_resolution(n, t, w, REACH)
    assert t2 == t and w2.sigma == w.sigma


# profiles ---------------------------------------------------------------------

def t_family(n: int) -> SetSystem:
    expr = "e"
    for _ in range(n):
        expr = f"a2({expr}, x1)"
    return from_expression(expr, ALPH, rank=1)


def test_profile_closed_equals_small_profile():
    rng = random.Random(10)
    for _ in range(20):
        s = rand_set_system(rng, ALPH, 3, rank=0)
        assert profile(s, REACH, "init", small=False, memory=0, max_m=0) == profile(
            s, REACH, "init", small=True, memory=0, max_m=0
        )


def test_profile_t_family_values():
    for n in range(1, 4):
        got = profile(t_family(n), REACH, "init", small=False, memory=0, max_m=4)
        expected = set()
        for m in range(1, 5):
            sg = tuple([1] * m)
            for x in range(1, 2 ** m):
                xs = frozenset(i + 1 for i in range(m) if x >> i & 1)
                if 1 <= len(xs) <= n:
                    expected.add((ReachElem(m, xs), sg))
        assert got == frozenset(expected)


def test_profile_distinguishes_t_m_from_t_n():
    p2 = profile(t_family(2), REACH, "init", small=False, memory=0, max_m=3)
    p3 = profile(t_family(3), REACH, "init", small=False, memory=0, max_m=3)
    witness = (ReachElem(3, frozenset({1, 2, 3})), (1, 1, 1))
    assert witness in p3 and witness not in p2


def test_root_profile_of_rootless_is_empty():
    assert profile(t_family(2), REACH, "root", small=True, memory=0) == frozenset()


def test_bounded_continuity_through_contexts():
    # every bounded resolution of a plugged context is reproduced after
    # replacing the filler by the sum of its bounded yields
    from regtree.corpus import rand_closed_context
    from regtree.monad import sum_many

    rng = random.Random(11)
    done = 0
    while done < 60:
        n = rng.randint(0, 2)
        c = rand_closed_context(rng, ALPH, n, max_v=3)
        s = rand_set_system(rng, ALPH, 3, rank=n)
        f = direct_resolutions(s, memory=0)
        if not f:
            continue
        plugged = plug(c, s)
        reduced = plug(c, sum_many(f))
        for r in direct_resolutions(plugged, memory=0)[:4]:
            assert in_init_yields(r, reduced)
        done += 1


def test_small_profile_congruence_on_closed_flattenings():
    # per-vertex equal bounded small-profiles imply equal bounded profiles of
    # the flattenings (closed case)
    from regtree.corpus import rand_ls_expansion, rand_nested_set_system

    rng = random.Random(12)
    done = 0
    while done < 40:
        n = rand_nested_set_system(rng, ALPH, 2, 2, rank=0,
                                   inner_roots=False, outer_roots=False)
        labels2 = {v: rand_ls_expansion(rng, n.labels[v])[0] for v in n.vertices}
        n2 = SetSystem(n.rank, n.vertices, n.initial, n.roots, labels2, n.edges)
        agree = all(
            profile(n.labels[v], REACH, "init", small=True, memory=1)
            == profile(labels2[v], REACH, "init", small=True, memory=1)
            and profile(n.labels[v], REACH, "root", small=True, memory=1)
            == profile(labels2[v], REACH, "root", small=True, memory=1)
            for v in n.vertices
        )
        if not agree:
            continue
        p1 = profile(flatten(n), REACH, "init", small=False, memory=1, max_m=0)
        p2 = profile(flatten(n2), REACH, "init", small=False, memory=1, max_m=0)
        assert p1 == p2
        done += 1
