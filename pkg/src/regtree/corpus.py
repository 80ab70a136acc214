"""Seeded generators and exhaustive enumerators for test corpora.

Everything here is a pure function of a `random.Random` instance (or of
bounds, for the exhaustive enumerators), so identical seeds reproduce
identical corpora byte for byte.
"""

from __future__ import annotations

import itertools
import random
from typing import Iterator, Sequence

from .core import RankedAlphabet, SetSystem, Sym, TransitionSystem, Var, canonical_key
from .monad import hole, pid


def rand_system(rng: random.Random, alphabet: RankedAlphabet, max_v: int, rank: int = 0,
                p_var: float = 0.35) -> SetSystem:
    """A random system: one initial vertex, exactly one successor per direction."""
    syms = list(alphabet.symbols)
    if rank == 0 and not any(s.rank == 0 for s in syms):
        raise ValueError("closed systems need a rank-0 symbol")
    n = rng.randint(1, max_v)
    vs = [f"u{i}" for i in range(n)]
    labels = {v: rng.choice(syms) for v in vs}
    edges = []
    for v in vs:
        for d in range(1, labels[v].rank + 1):
            if rank > 0 and rng.random() < p_var:
                edges.append((v, d, Var(rng.randint(1, rank))))
            else:
                edges.append((v, d, rng.choice(vs)))
    return SetSystem.make(rank, vs, [vs[0]], [], labels, edges)


def rand_set_system(rng: random.Random, alphabet: RankedAlphabet, max_v: int, rank: int = 0,
                    p_var: float = 0.3, max_succ: int = 2, allow_roots: bool = True) -> SetSystem:
    syms = list(alphabet.symbols)
    n = rng.randint(1, max_v)
    vs = [f"u{i}" for i in range(n)]
    labels = {v: rng.choice(syms) for v in vs}
    edges = []
    for v in vs:
        for d in range(1, labels[v].rank + 1):
            for t in rng.sample(vs, rng.randint(0, min(max_succ, n))):
                edges.append((v, d, t))
            if rank > 0 and rng.random() < p_var:
                edges.append((v, d, Var(rng.randint(1, rank))))
    initial = rng.sample(vs, rng.randint(1, n))
    roots = rng.sample(vs, rng.randint(0, n)) if allow_roots else []
    return SetSystem.make(rank, vs, initial, roots, labels, edges)


def rand_nested_system(rng: random.Random, alphabet: RankedAlphabet, outer_v: int,
                       inner_v: int, rank: int = 0) -> SetSystem:
    """A random (system)-system: outer deterministic, inner systems as labels."""
    n = rng.randint(1, outer_v)
    vs = [f"o{i}" for i in range(n)]
    arity = {v: rng.randint(0, 2) for v in vs}
    labels = {v: rand_system(rng, alphabet, inner_v, rank=arity[v]) for v in vs}
    edges = []
    for v in vs:
        for d in range(1, arity[v] + 1):
            if rank > 0 and rng.random() < 0.3:
                edges.append((v, d, Var(rng.randint(1, rank))))
            else:
                edges.append((v, d, rng.choice(vs)))
    return SetSystem.make(rank, vs, [vs[0]], [], labels, edges)


def rand_nested_set_system(rng: random.Random, alphabet: RankedAlphabet, outer_v: int,
                           inner_v: int, rank: int = 0, inner_roots: bool = True,
                           outer_roots: bool = True) -> SetSystem:
    n = rng.randint(1, outer_v)
    vs = [f"o{i}" for i in range(n)]
    arity = {v: rng.randint(0, 2) for v in vs}
    labels = {
        v: rand_set_system(rng, alphabet, inner_v, rank=arity[v], allow_roots=inner_roots)
        for v in vs
    }
    edges = []
    for v in vs:
        for d in range(1, arity[v] + 1):
            for t in rng.sample(vs, rng.randint(0, min(2, n))):
                edges.append((v, d, t))
            if rank > 0 and rng.random() < 0.25:
                edges.append((v, d, Var(rng.randint(1, rank))))
    initial = rng.sample(vs, rng.randint(1, n))
    roots = rng.sample(vs, rng.randint(0, max(0, n - 1))) if outer_roots else []
    return SetSystem.make(rank, vs, initial, roots, labels, edges)


def rand_unfolding(rng: random.Random, t: SetSystem, max_copies: int = 3) -> tuple[SetSystem, dict]:
    """A random unfolding of a system, with the folding map back onto it."""
    copies = {v: rng.randint(1, max_copies) for v in t.vertices}
    vs = [pid(v, i) for v in t.vertices for i in range(copies[v])]
    labels = {pid(v, i): t.labels[v] for v in t.vertices for i in range(copies[v])}
    edges = []
    for v in t.vertices:
        for d in range(1, t.labels[v].rank + 1):
            (tgt,) = t.targets(v, d)
            for i in range(copies[v]):
                if isinstance(tgt, Var):
                    edges.append((pid(v, i), d, tgt))
                else:
                    edges.append((pid(v, i), d, pid(tgt, rng.randrange(copies[tgt]))))
    (i0,) = t.initial
    u = SetSystem.make(t.rank, vs, [pid(i0, 0)], [], labels, edges)
    return u, {pid(v, i): v for v in t.vertices for i in range(copies[v])}


def rand_ls_expansion(rng: random.Random, s: SetSystem, max_copies: int = 2) -> tuple[SetSystem, dict]:
    """A locally surjective expansion of a set-system (hence yield-equivalent)."""
    copies = {v: rng.randint(1, max_copies) for v in s.vertices}
    vs = [pid(v, i) for v in s.vertices for i in range(copies[v])]
    labels = {pid(v, i): s.labels[v] for v in s.vertices for i in range(copies[v])}
    edges = []
    for v in s.vertices:
        for i in range(copies[v]):
            for (src, d, t) in s.edges:
                if src != v:
                    continue
                if isinstance(t, Var):
                    edges.append((pid(v, i), d, t))
                else:
                    picks = rng.sample(range(copies[t]), rng.randint(1, copies[t]))
                    for j in picks:
                        edges.append((pid(v, i), d, pid(t, j)))
    initial = []
    for v in s.initial:
        for j in rng.sample(range(copies[v]), rng.randint(1, copies[v])):
            initial.append(pid(v, j))
    roots = []
    for v in s.roots:
        for j in rng.sample(range(copies[v]), rng.randint(1, copies[v])):
            roots.append(pid(v, j))
    u = SetSystem.make(s.rank, vs, initial, roots, labels, edges)
    return u, {pid(v, i): v for v in s.vertices for i in range(copies[v])}


def rand_ts(rng: random.Random, max_states: int, props: Sequence[str] = ("p",)) -> TransitionSystem:
    n = rng.randint(1, max_states)
    vs = [f"s{i}" for i in range(n)]
    trans = set()
    for u in vs:
        for v in rng.sample(vs, rng.randint(0, n)):
            trans.add((u, v))
    val = {v: frozenset(p for p in props if rng.random() < 0.5) for v in vs}
    return TransitionSystem.make(vs, vs[0], trans, val)


def rand_closed_context(rng: random.Random, alphabet: RankedAlphabet, hole_rank: int,
                        max_v: int = 4, deterministic: bool = False) -> SetSystem:
    """A closed context: one hole vertex of the requested rank, no hole self-loop,
    hole neither initial nor root."""
    syms = list(alphabet.symbols)
    n = rng.randint(1, max_v)
    vs = [f"c{i}" for i in range(n)]
    labels = {v: rng.choice(syms) for v in vs}
    h = "h"
    allv = vs + [h]
    labels[h] = hole(hole_rank)
    edges = []
    for v in vs:
        for d in range(1, labels[v].rank + 1):
            pool = allv if not deterministic else None
            if deterministic:
                edges.append((v, d, rng.choice(allv)))
            else:
                for t in rng.sample(allv, rng.randint(0, 2)):
                    edges.append((v, d, t))
    for d in range(1, hole_rank + 1):
        if deterministic:
            edges.append((h, d, rng.choice(vs) if vs else h))
        else:
            for t in rng.sample(vs, rng.randint(0, min(2, len(vs)))):
                edges.append((h, d, t))
    initial = rng.sample(vs, 1 if deterministic else rng.randint(1, n))
    roots = [] if deterministic else rng.sample(vs, rng.randint(0, n))
    return SetSystem.make(0, allv, initial, roots, labels, edges)


def rand_bisim_variant(rng: random.Random, s: SetSystem, max_rank: int) -> SetSystem:
    """A bisimilar valuation-labelled system: permute child order and duplicate
    children (decoding erases both)."""
    from .core import parse_ts_symbol, ts_symbol

    labels = dict(s.labels)
    edges = set(s.edges)
    for _ in range(rng.randint(1, 3)):
        v = rng.choice(s.vertices)
        props, k = parse_ts_symbol(labels[v])
        mine = sorted((d, t) for (src, d, t) in edges if src == v)
        if k >= 2 and rng.random() < 0.5:
            perm = list(range(1, k + 1))
            rng.shuffle(perm)
            edges -= {(v, d, t) for (d, t) in mine}
            edges |= {(v, perm[d - 1], t) for (d, t) in mine}
        elif 1 <= k < max_rank and mine:
            (_, w) = rng.choice(mine)
            labels[v] = ts_symbol(props, k + 1)
            edges |= {(v, k + 1, w)}
    return SetSystem.make(s.rank, s.vertices, s.initial, s.roots, labels, edges)


# exhaustive enumeration ------------------------------------------------------

def enumerate_closed_systems(alphabet: RankedAlphabet, max_v: int) -> Iterator[SetSystem]:
    """All closed systems with <= max_v vertices, all reachable, up to isomorphism.

    Vertices are introduced in discovery order; duplicates are removed by
    canonical key.
    """
    syms = sorted(alphabet.symbols)
    seen: set = set()

    def emit(labels: list[Sym], succ: list[list[int]]):
        n = len(labels)
        vs = [f"v{i}" for i in range(n)]
        edges = []
        for i, row in enumerate(succ):
            for d, j in enumerate(row, start=1):
                edges.append((vs[i], d, vs[j]))
        s = SetSystem.make(0, vs, [vs[0]], [], {vs[i]: labels[i] for i in range(n)}, edges)
        key = canonical_key(s)
        if key not in seen:
            seen.add(key)
            return s
        return None

    def rec(labels: list[Sym], succ: list[list[int]], slots: list[tuple[int, int]]):
        if not slots:
            s = emit(labels, succ)
            if s is not None:
                yield s
            return
        (v, d) = slots[0]
        rest = slots[1:]
        for j in range(len(labels)):  # existing vertex
            succ[v][d - 1] = j
            yield from rec(labels, succ, rest)
            succ[v][d - 1] = -1
        if len(labels) < max_v:  # fresh vertex, every label
            for sym in syms:
                labels.append(sym)
                succ.append([-1] * sym.rank)
                succ[v][d - 1] = len(labels) - 1
                newslots = rest + [(len(labels) - 1, dd) for dd in range(1, sym.rank + 1)]
                yield from rec(labels, succ, newslots)
                succ[v][d - 1] = -1
                labels.pop()
                succ.pop()

    for sym in syms:
        labels = [sym]
        succ = [[-1] * sym.rank]
        yield from rec(labels, succ, [(0, d) for d in range(1, sym.rank + 1)])


def enumerate_acyclic_raw(unary: Sequence[Sym], nullary: Sequence[Sym], max_v: int):
    """All topologically-ordered acyclic single-initial structures over the
    labels, every vertex reachable, <= max_v vertices.

    Yields raw (labels, successor-rows) pairs: exhaustive but with
    relabelling duplicates; the pruning keeps only structures whose every
    vertex already has an in-edge when reached.
    """
    pool = list(unary) + list(nullary)

    def rec(labs: tuple, succ: list, hit: list, i: int):
        n = len(labs)
        if i == n:
            yield (labs, tuple(succ))
            return
        if i > 0 and hit[i] == 0:
            return
        if labs[i].rank == 0:
            succ.append(())
            yield from rec(labs, succ, hit, i + 1)
            succ.pop()
            return
        later = list(range(i + 1, n))
        for r in range(len(later) + 1):
            for sub in itertools.combinations(later, r):
                for j in sub:
                    hit[j] += 1
                succ.append(sub)
                yield from rec(labs, succ, hit, i + 1)
                succ.pop()
                for j in sub:
                    hit[j] -= 1

    for n in range(1, max_v + 1):
        for labs in itertools.product(pool, repeat=n):
            yield from rec(labs, [], [0] * n, 0)


def raw_to_set_system(labs, succ) -> SetSystem:
    n = len(labs)
    vs = [f"v{k}" for k in range(n)]
    edges = [(vs[k], 1, vs[j]) for k in range(n) for j in succ[k]]
    return SetSystem.make(0, vs, [vs[0]], [], {vs[k]: labs[k] for k in range(n)}, edges)


def behaviour_key(labs, succ):
    """Bottom-up key identifying graphs with the same branch behaviour
    (label plus set of successor behaviours, computed in topological order)."""
    n = len(labs)
    keys: list = [None] * n
    for k in range(n - 1, -1, -1):
        keys[k] = (labs[k].name, frozenset(keys[j] for j in succ[k]))
    return keys[0]


def enumerate_acyclic_branch_graphs(unary: Sequence[Sym], nullary: Sequence[Sym],
                                    max_v: int) -> Iterator[SetSystem]:
    """All acyclic single-initial set-systems over unary/nullary labels, every
    vertex reachable, <= max_v vertices, up to isomorphism."""
    seen: set = set()
    for (labs, succ) in enumerate_acyclic_raw(unary, nullary, max_v):
        s = raw_to_set_system(labs, succ)
        key = canonical_key(s)
        if key not in seen:
            seen.add(key)
            yield s


def enumerate_lasso_branch_graphs(unary: Sequence[Sym], nullary: Sequence[Sym],
                                  max_v: int) -> Iterator[SetSystem]:
    """All lasso-shaped set-systems (a stem into a single simple cycle, optional
    terminal offshoots) over the given labels, <= max_v vertices, up to iso."""
    seen: set = set()
    for stem in range(0, max_v):
        for loop in range(1, max_v - stem + 1):
            n_core = stem + loop
            free = max_v - n_core
            core_ids = [f"v{i}" for i in range(n_core)]
            core_edges = []
            for i in range(stem):
                core_edges.append((core_ids[i], 1, core_ids[i + 1]))
            for i in range(stem, n_core):
                nxt = stem + ((i - stem + 1) % loop)
                core_edges.append((core_ids[i], 1, core_ids[nxt]))
            for extra in range(0, free + 1):
                term_ids = [f"t{i}" for i in range(extra)]
                for attach in itertools.product(range(n_core), repeat=extra):
                    for labs in itertools.product(unary, repeat=n_core):
                        for tlabs in itertools.product(nullary, repeat=extra):
                            labels = {core_ids[i]: labs[i] for i in range(n_core)}
                            labels.update({term_ids[i]: tlabs[i] for i in range(extra)})
                            edges = list(core_edges)
                            for i in range(extra):
                                edges.append((core_ids[attach[i]], 1, term_ids[i]))
                            s = SetSystem.make(0, core_ids + term_ids, [core_ids[0]], [],
                                               labels, edges)
                            key = canonical_key(s)
                            if key not in seen:
                                seen.add(key)
                                yield s
