"""Yields, resolutions, flatten-resolutions, smallification and profiles.

A direct resolution of a set-system S is any system with a morphism into S;
the yields of S are the direct resolutions up to unfold-equivalence (from the
initial side) together with the planted resolutions of uproot(S) (from the
root side).  The resolution space is infinite; enumeration is bounded by a
memory parameter (histories of visited vertices), while *membership* of a
candidate system among the yields is decided exactly by a greatest-fixpoint
match, so refutations are never artefacts of the bound.

Resolutions with variable tracking (T, sigma), flatten-resolutions and the two
conversion directions implement the compositional theory; smallification
shrinks tracking maps against a rankwise-finite algebra; profiles collect the
algebra values of tracked resolutions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

from .algebras import AlgebraBase
from .core import SetSystem, Var, canonical_key, label_key, rank_of, validate
from .equivalences import minimize_system
from .monad import (
    atomic,
    dup_vars,
    flatten,
    flatten_with_map,
    hole,
    pid,
    pieces,
    plant,
    plug,
    puncture,
    rename_vars,
    slift,
    sum_many,
    uproot,
)
from .morphisms import Morphism, check_morphism, find_morphism


# ---------------------------------------------------------------------------
# bounded enumeration of direct resolutions

def _resolution_structures(s: SetSystem, memory: int, var_pool=None):
    """Backtrack over choice functions on (history-state, direction) slots.

    States are windows of the last memory+1 visited vertices.  ``var_pool``
    maps a variable index of s to the list of replacement variables (used by
    the profile enumeration); by default a variable exit stays itself.
    """
    win = memory + 1

    def options(state, d):
        cur = state[-1]
        opts = []
        for t in s.targets(cur, d):
            if isinstance(t, Var):
                if var_pool is None:
                    opts.append(("x", t.index))
                else:
                    opts.extend(("x", p) for p in var_pool(t.index))
            else:
                opts.append(("v", (state + (t,))[-win:]))
        return opts

    start_state = [None]

    def rec(assign: dict, pending: list, states: set):
        if not pending:
            yield (start_state[0], dict(assign), frozenset(states))
            return
        (state, d) = pending[0]
        rest = pending[1:]
        for opt in options(state, d):
            assign[(state, d)] = opt
            if opt[0] == "v" and opt[1] not in states:
                new = opt[1]
                states.add(new)
                slots = [(new, dd) for dd in range(1, s.labels[new[-1]].rank + 1)]
                yield from rec(assign, rest + slots, states)
                states.discard(new)
            else:
                yield from rec(assign, rest, states)
            del assign[(state, d)]

    for i0 in sorted(s.initial):
        st = (i0,)
        start_state[0] = st
        pend = [(st, d) for d in range(1, s.labels[i0].rank + 1)]
        yield from rec({}, pend, {st})


def _structure_to_system(s: SetSystem, start, assign: dict, states: frozenset,
                         rank: int) -> SetSystem:
    vs = sorted(states)
    names = {st: f"r{idx}" for idx, st in enumerate(vs)}
    labels = {names[st]: s.labels[st[-1]] for st in vs}
    edges = []
    for ((st, d), opt) in assign.items():
        if opt[0] == "x":
            edges.append((names[st], d, Var(opt[1])))
        else:
            edges.append((names[st], d, names[opt[1]]))
    return SetSystem.make(rank, [names[st] for st in vs], [names[start]], [], labels, edges)


def direct_resolutions(s: SetSystem, memory: int = 1) -> list[SetSystem]:
    """Direct resolutions realisable with the given memory, one canonical
    representative per unfold-equivalence class."""
    seen = {}
    for (start, assign, states) in _resolution_structures(s, memory):
        t = _structure_to_system(s, start, assign, states, s.rank)
        rep = minimize_system(t)
        seen.setdefault(canonical_key(rep), rep)
    return [seen[k] for k in sorted(seen.keys())]


def yields(s: SetSystem, memory: int = 1) -> tuple[list[SetSystem], list[SetSystem]]:
    """(init-yields, root-yields) at the given memory, canonical class reps."""
    init = direct_resolutions(s, memory)
    root = [plant(t) for t in direct_resolutions(uproot(s), memory)]
    return init, root


# ---------------------------------------------------------------------------
# exact yield membership

def in_init_yields(t: SetSystem, s: SetSystem) -> bool:
    """Exact: does t unfold to a direct resolution of s?

    Greatest fixpoint of the match relation between reachable t-vertices and
    s-vertices; no memory bound is involved.
    """
    rep = validate(t)
    if not rep.ok or not rep.is_system:
        raise ValueError("yield candidates are systems")
    if t.rank != s.rank:
        raise ValueError("rank mismatch")
    tt = t.trim(t.initial)
    lk_t = {u: label_key(tt.labels[u]) for u in tt.vertices}
    lk_s = {v: label_key(s.labels[v]) for v in s.vertices}
    s_tr = {
        (v, d): tuple(w for w in s.targets(v, d) if not isinstance(w, Var))
        for v in s.vertices
        for d in range(1, s.labels[v].rank + 1)
    }
    match = {
        (u, v) for u in tt.vertices for v in s.vertices if lk_t[u] == lk_s[v]
    }

    def consistent(u, v):
        for d in range(1, tt.labels[u].rank + 1):
            (x,) = tt.targets(u, d)
            if isinstance(x, Var):
                if x not in s.targets(v, d):
                    return False
            elif not any((x, w) in match for w in s_tr.get((v, d), ())):
                return False
        return True

    # worklist over t-predecessors of removed pairs
    preds: dict[str, list[str]] = {u: [] for u in tt.vertices}
    for (u, d, x) in tt.edges:
        if not isinstance(x, Var):
            preds[x].append(u)
    queue = [(u, v) for (u, v) in match if not consistent(u, v)]
    for p in queue:
        match.discard(p)
    while queue:
        (u, v) = queue.pop()
        for u0 in preds[u]:
            for v0 in s.vertices:
                if (u0, v0) in match and not consistent(u0, v0):
                    match.discard((u0, v0))
                    queue.append((u0, v0))
    (i0,) = tt.initial
    return any((i0, v) in match for v in s.initial)


def in_root_yields(p: SetSystem, s: SetSystem) -> bool:
    """Exact membership of a planted candidate among the root-yields of s."""
    return in_init_yields(uproot(p), uproot(s))


@dataclass(frozen=True)
class YieldVerdict:
    status: str  # "refuted" | "subsumed" | "consistent-up-to-k"
    witness: SetSystem | None = None
    side: str | None = None

    @property
    def refuted(self) -> bool:
        return self.status == "refuted"


def uniformly_subsumed(s: SetSystem, s2: SetSystem) -> bool:
    """Sufficient and exact-positive test for Yields(s) within Yields(s2).

    Greatest relation U on vertex pairs such that every edge option of the
    left vertex is answered by the right one (variable exits verbatim,
    successors by related successors).  When every initial vertex of s is
    U-related to an initial vertex of s2, every resolution of s (any memory)
    matches into s2, so the subsumption holds outright.  Holds in particular
    whenever a locally surjective fold onto s exists.
    """
    lk1 = {v: label_key(s.labels[v]) for v in s.vertices}
    lk2 = {v: label_key(s2.labels[v]) for v in s2.vertices}
    u = {(a, b) for a in s.vertices for b in s2.vertices if lk1[a] == lk2[b]}

    def ok(a, b):
        for d in range(1, rank_of(s.labels[a]) + 1):
            for f in s.targets(a, d):
                if isinstance(f, Var):
                    if f not in s2.targets(b, d):
                        return False
                else:
                    if not any(
                        not isinstance(g, Var) and (f, g) in u for g in s2.targets(b, d)
                    ):
                        return False
        return True

    changed = True
    while changed:
        changed = False
        for pair in list(u):
            if not ok(*pair):
                u.discard(pair)
                changed = True
    return all(any((a, b) in u for b in s2.initial) for a in s.initial)


def iter_direct_resolutions(s: SetSystem, memory: int = 1):
    """Streamed class representatives, deduplicated on the fly."""
    seen = set()
    for (start, assign, states) in _resolution_structures(s, memory):
        t = _structure_to_system(s, start, assign, states, s.rank)
        rep = minimize_system(t)
        key = canonical_key(rep)
        if key not in seen:
            seen.add(key)
            yield rep


def yield_subsumed(s: SetSystem, s2: SetSystem, memory: int = 1) -> YieldVerdict:
    """Tri-state check of yields(s) inside yields(s2).

    The uniform-matching fixpoint decides many instances outright
    ("subsumed", exact).  Otherwise every memory-bounded yield of s is tested
    for exact membership among the yields of s2 (membership is
    unfold-invariant, so raw enumeration order does not matter); a refutation
    is sound, while the remaining positive verdict is only "consistent up to
    the bound".
    """
    if s.rank != s2.rank:
        raise ValueError("rank mismatch")
    up, up2 = uproot(s), uproot(s2)
    if uniformly_subsumed(s, s2) and uniformly_subsumed(up, up2):
        return YieldVerdict("subsumed")
    if not uniformly_subsumed(s, s2):
        for (start, assign, states) in _resolution_structures(s, memory):
            t = _structure_to_system(s, start, assign, states, s.rank)
            if not in_init_yields(t, s2):
                return YieldVerdict("refuted", minimize_system(t), "init")
    for (start, assign, states) in _resolution_structures(up, memory):
        t = _structure_to_system(up, start, assign, states, s.rank)
        if not in_init_yields(t, up2):
            return YieldVerdict("refuted", plant(minimize_system(t)), "root")
    return YieldVerdict("consistent-up-to-k")


# ---------------------------------------------------------------------------
# resolutions with variable tracking

@dataclass(frozen=True)
class Resolution:
    system: SetSystem
    sigma: tuple[int, ...]


def is_resolution(t: SetSystem, sigma: Sequence[int], s: SetSystem) -> bool:
    """(t, sigma) is a resolution of s: rename_sigma(t) has a morphism into s."""
    return find_morphism(rename_vars(tuple(sigma), t, s.rank), s) is not None


@dataclass(frozen=True)
class FlattenWitness:
    """delta with per-vertex tracking maps and resolution morphisms."""

    delta: dict[str, str]
    sigma: dict[str, tuple[int, ...]]
    gamma: dict[str, dict[str, str]]


def check_flatten_resolution(n: SetSystem, t: SetSystem, w: FlattenWitness,
                             explain: bool = False):
    """Verify the four defining conditions of a flatten-resolution."""

    def fail(msg):
        return (False, msg) if explain else False

    rep = validate(t)
    if not rep.ok:
        return fail("t is not a valid set-system")
    for tv in t.vertices:
        if tv not in w.delta:
            return fail(f"delta undefined on {tv}")
    for tv in t.initial:
        if w.delta[tv] not in n.initial:
            return fail(f"initial vertex {tv} lands outside the initial vertices")
    for tv in t.vertices:
        inner_t = t.labels[tv]
        inner_n = n.labels[w.delta[tv]]
        sig = w.sigma[tv]
        if len(sig) != inner_t.rank or any(not (1 <= j <= inner_n.rank) for j in sig):
            return fail(f"sigma at {tv} is not a map [{inner_t.rank}] -> [{inner_n.rank}]")
        chk = check_morphism(rename_vars(sig, inner_t, inner_n.rank), inner_n, w.gamma[tv])
        if not chk.ok:
            return fail(f"(T({tv}), sigma) is not a resolution: {chk.witness}")
    for (tv, i, tgt) in t.edges:
        sig = w.sigma[tv]
        if isinstance(tgt, Var):
            if (w.delta[tv], sig[i - 1], tgt) not in n.edges:
                return fail(f"variable edge ({tv},{i},{tgt}) not covered")
        else:
            if (w.delta[tv], sig[i - 1], w.delta[tgt]) not in n.edges:
                return fail(f"transition edge ({tv},{i},{tgt}) not covered")
    return (True, "ok") if explain else True


def flatten_resolution_morphism(n: SetSystem, t: SetSystem, w: FlattenWitness) -> Morphism:
    """The fold (t,v) -> (delta(t), gamma_t(v)) from flatten(t) onto flatten(n)."""
    ft, back_t = flatten_with_map(t)
    fn, _ = flatten_with_map(n)
    vmap = {}
    for nid, (tv, v) in back_t.items():
        vmap[nid] = pid(w.delta[tv], w.gamma[tv][v])
    chk = check_morphism(ft, fn, vmap)
    if not chk.ok:
        raise AssertionError(f"flatten-resolution fold is not a morphism: {chk.witness}")
    return Morphism(ft, fn, vmap)


def direct_to_flatten_resolution(n: SetSystem, r: SetSystem,
                                 eta: Morphism | None = None) -> tuple[SetSystem, FlattenWitness]:
    """Repartition a direct resolution of flatten(n) into a flatten-resolution.

    Exits of each subsystem part are disambiguated by fresh directions, one per
    (outer direction, target) pair actually used by r.
    """
    fn, back = flatten_with_map(n)
    if eta is None:
        eta = find_morphism(r, fn)
        if eta is None:
            raise ValueError("r is not a direct resolution of flatten(n)")
    delta = {rv: back[eta.vmap[rv]][0] for rv in r.vertices}
    gamma = {rv: back[eta.vmap[rv]][1] for rv in r.vertices}

    def inner(nv):
        return n.labels[nv]

    # exit pairs per subsystem part: (outer direction j, ("v", r') | ("x", y))
    dirs: dict[str, set] = {nv: set() for nv in n.vertices}
    for (rv, i, tgt) in r.edges:
        s0 = delta[rv]
        if isinstance(tgt, Var):
            for (src, j, y) in n.edges:
                if src == s0 and y == tgt and (gamma[rv], i, Var(j)) in inner(s0).edges:
                    dirs[s0].add((j, ("x", tgt.index)))
        else:
            s1 = delta[tgt]
            if (gamma[rv], i, gamma[tgt]) in inner(s0).edges and s0 == s1:
                continue  # intra: not an exit
            for (src, j, y) in n.edges:
                if src == s0 and y == s1 and (gamma[rv], i, Var(j)) in inner(s0).edges \
                        and gamma[tgt] in inner(s1).initial:
                    dirs[s0].add((j, ("v", tgt)))
    dir_index = {
        nv: {pair: k for k, pair in enumerate(sorted(dirs[nv]), start=1)}
        for nv in n.vertices
    }

    t_vertices = [rv for rv in r.vertices if gamma[rv] in inner(delta[rv]).initial]
    t_vset = set(t_vertices)

    def exit_candidates(rv, i, tgt):
        """Fresh-direction choices for an r-edge leaving its subsystem part."""
        s0 = delta[rv]
        cands = []
        if isinstance(tgt, Var):
            for (pair, k) in dir_index[s0].items():
                if pair[1] == ("x", tgt.index) and (gamma[rv], i, Var(pair[0])) in inner(s0).edges \
                        and (s0, pair[0], tgt) in n.edges:
                    cands.append((pair[0], k))
        else:
            for (pair, k) in dir_index[s0].items():
                if pair[1] == ("v", tgt) and (gamma[rv], i, Var(pair[0])) in inner(s0).edges \
                        and (s0, pair[0], delta[tgt]) in n.edges:
                    cands.append((pair[0], k))
        return sorted(cands)

    # inner systems
    labels_t = {}
    sigma: dict[str, tuple[int, ...]] = {}
    gammas: dict[str, dict[str, str]] = {}
    for tv in t_vertices:
        s0 = delta[tv]
        member = [rv for rv in r.vertices if delta[rv] == s0]
        rk = len(dir_index[s0])
        edges_in = []
        for rv in member:
            for (src, d, tgt) in r.edges:
                if src != rv:
                    continue
                if not isinstance(tgt, Var) and delta[tgt] == s0 \
                        and (gamma[rv], d, gamma[tgt]) in inner(s0).edges:
                    edges_in.append((rv, d, tgt))
                    continue
                cands = exit_candidates(rv, d, tgt)
                if not cands:
                    raise AssertionError("morphism image matches no flattening case")
                edges_in.append((rv, d, Var(cands[0][1])))
        labels_t[tv] = SetSystem.make(rk, member, [tv], [],
                                      {rv: r.labels[rv] for rv in member}, edges_in)
        sigma[tv] = tuple(
            pair[0] for pair, k in sorted(dir_index[s0].items(), key=lambda kv: kv[1])
        )
        gammas[tv] = {rv: gamma[rv] for rv in member}

    # outer structure
    t_edges = []
    for tv in t_vertices:
        s0 = delta[tv]
        for (pair, k) in dir_index[s0].items():
            (j, q) = pair
            if q[0] == "v":
                t_edges.append((tv, k, q[1]))
            else:
                t_edges.append((tv, k, Var(q[1])))
    t = SetSystem.make(n.rank, t_vertices, list(r.initial), [], labels_t, t_edges)
    w = FlattenWitness(delta={tv: delta[tv] for tv in t_vertices}, sigma=sigma, gamma=gammas)
    return t, w


# ---------------------------------------------------------------------------
# smallification against a rankwise-finite algebra

def small_bound(alg: AlgebraBase) -> int:
    return len(alg.carrier(1))


def is_small_map(sigma: Sequence[int], bound: int) -> bool:
    counts: dict[int, int] = {}
    for j in sigma:
        counts[j] = counts.get(j, 0) + 1
    return all(c <= bound for c in counts.values())


def context_smallification(t: SetSystem, c: SetSystem, sigma: Sequence[int],
                           alg: AlgebraBase) -> tuple[int, tuple[int, ...], tuple[int, ...]]:
    """Merge hole directions with equal tracking image and equal piece value.

    Returns (m', tau, tau') with sigma∘tau'∘tau = sigma, sigma∘tau' small, and
    the plugged value untouched by rename_{tau'∘tau}.
    """
    m = t.rank
    ps = pieces(c)
    # P_0's value never enters the merge classes (and is degenerate when the
    # hole vertex is the initial vertex of the punctured structure)
    vals = [None] + [
        alg.eval_symbols(p) if not _elem_labelled(p) else alg.eval(p) for p in ps[1:]
    ]
    classes: list[list[int]] = []
    for i in range(1, m + 1):
        placed = False
        for cl in classes:
            j = cl[0]
            if sigma[i - 1] == sigma[j - 1] and vals[i] == vals[j]:
                cl.append(i)
                placed = True
                break
        if not placed:
            classes.append([i])
    classes.sort(key=lambda cl: cl[0])
    tau = [0] * m
    for k, cl in enumerate(classes, start=1):
        for i in cl:
            tau[i - 1] = k
    tau_p = tuple(cl[0] for cl in classes)
    return len(classes), tuple(tau), tau_p


def _elem_labelled(s: SetSystem) -> bool:
    from .core import Sym

    return not all(isinstance(l, Sym) for l in s.labels.values())


def smallify_flatten_resolution(n: SetSystem, t: SetSystem, w: FlattenWitness,
                                alg: AlgebraBase) -> tuple[SetSystem, FlattenWitness]:
    """Shrink every tracking map below the rank-1 carrier size, preserving the
    value of the flattening (downward induction over oversized vertices)."""
    bound = small_bound(alg)
    t_cur, w_cur = t, w
    while True:
        over = [tv for tv in t_cur.vertices if not is_small_map(w_cur.sigma[tv], bound)]
        if not over:
            return t_cur, w_cur
        u = over[0]
        c = puncture(t_cur, u)
        m2, tau, tau_p = context_smallification(t_cur.labels[u], c, w_cur.sigma[u], alg)
        new_labels = dict(t_cur.labels)
        new_labels[u] = rename_vars(tau, t_cur.labels[u], m2)
        new_edges = []
        for (src, i, tgt) in t_cur.edges:
            if src != u:
                new_edges.append((src, i, tgt))
        for i2 in range(1, m2 + 1):
            for tgt in t_cur.targets(u, tau_p[i2 - 1]):
                new_edges.append((u, i2, tgt))
        t_cur = SetSystem.make(t_cur.rank, t_cur.vertices, t_cur.initial, t_cur.roots,
                               new_labels, new_edges)
        sig = w_cur.sigma[u]
        new_sigma = dict(w_cur.sigma)
        new_sigma[u] = tuple(sig[tau_p[i2 - 1] - 1] for i2 in range(1, m2 + 1))
        w_cur = FlattenWitness(w_cur.delta, new_sigma, w_cur.gamma)


# ---------------------------------------------------------------------------
# profiles

def all_maps(m: int, n: int):
    """All maps [m] -> [n] as tuples."""
    if m == 0:
        yield ()
        return
    yield from itertools.product(range(1, n + 1), repeat=m)


def profile(s: SetSystem, alg: AlgebraBase, flavor: str = "init", small: bool = False,
            memory: int = 1, max_m: int | None = None) -> frozenset:
    """All (value, sigma) pairs over tracked resolutions enumerable at the bound.

    ``small`` restricts to small tracking maps and defaults the m-bound to
    rank * |A_1|; the root flavor uproots first.
    """
    base = uproot(s) if flavor == "root" else s
    n = s.rank
    bound = small_bound(alg)
    if max_m is None:
        if not small:
            raise ValueError("full profiles need an explicit max_m")
        max_m = n * bound
    out = set()
    for m in range(0, max_m + 1):
        for sg in all_maps(m, n):
            if small and not is_small_map(sg, bound):
                continue
            pool = {j: [p for p in range(1, m + 1) if sg[p - 1] == j] for j in range(1, n + 1)}
            for (start, assign, states) in _resolution_structures(
                base, memory, var_pool=lambda j: pool.get(j, [])
            ):
                tt = _structure_to_system(base, start, assign, states, m)
                out.add((alg.eval_symbols(tt), sg))
    return frozenset(out)
