"""Structural constructors: atomic units, flattening, sums, variable renamings,
plant/uproot, contexts and their decomposition into pieces.

Flattening glues a set-system whose labels are themselves set-systems into one
flat structure: inner transition edges survive unchanged, an inner exit x_e is
rerouted to the initial vertices of the subsystems reachable in direction e of
the outer pattern (or to an outer variable).  Together with `atomic` this is a
monad on set-systems, exercised as such by the tests.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .core import SetSystem, Sym, Var, rank_of

HOLE_NAME = "□"  # □


def pid(v, w) -> str:
    return str((v, w))


def atomic(label) -> SetSystem:
    """One initial vertex carrying the label, one variable exit per direction."""
    k = rank_of(label)
    return SetSystem.make(k, ["u"], ["u"], [], {"u": label},
                          [("u", i, Var(i)) for i in range(1, k + 1)])


def slift(fn, s: SetSystem) -> SetSystem:
    return s.relabel(fn)


def is_nested(s: SetSystem) -> bool:
    return all(isinstance(l, SetSystem) for l in s.labels.values())


def flatten_with_map(outer: SetSystem) -> tuple[SetSystem, dict[str, tuple[str, str]]]:
    """Flatten a (set-system)-set-system; also return pair decomposition of ids."""
    if not is_nested(outer):
        raise ValueError("flatten needs set-system labels at every vertex")
    inner = {v: outer.labels[v] for v in outer.vertices}
    for (v, e, t) in outer.edges:
        if e > inner[v].rank:
            raise ValueError(f"outer direction {e} at {v} exceeds the inner rank {inner[v].rank}")

    vs = []
    back = {}
    labels = {}
    for v in outer.vertices:
        for w in inner[v].vertices:
            nid = pid(v, w)
            vs.append(nid)
            back[nid] = (v, w)
            labels[nid] = inner[v].labels[w]

    initial = {pid(v, w) for v in outer.initial for w in inner[v].initial}
    roots = {pid(v, w) for v in outer.vertices for w in inner[v].roots}
    roots |= {pid(v, w) for v in outer.roots for w in inner[v].initial}

    edges = []
    outer_tr: dict[tuple[str, int], list[str]] = {}
    outer_var: dict[tuple[str, int], list[Var]] = {}
    for (v, e, t) in outer.edges:
        if isinstance(t, Var):
            outer_var.setdefault((v, e), []).append(t)
        else:
            outer_tr.setdefault((v, e), []).append(t)

    for v in outer.vertices:
        for (w, d, t) in inner[v].edges:
            if not isinstance(t, Var):
                edges.append((pid(v, w), d, pid(v, t)))  # intra-subsystem
                continue
            e = t.index
            for v2 in outer_tr.get((v, e), ()):  # inter-subsystem
                for w2 in inner[v2].initial:
                    edges.append((pid(v, w), d, pid(v2, w2)))
            for y in outer_var.get((v, e), ()):  # outer variable
                edges.append((pid(v, w), d, y))

    flat = SetSystem.make(outer.rank, vs, initial, roots, labels, edges)
    return flat, back


def flatten(outer: SetSystem) -> SetSystem:
    return flatten_with_map(outer)[0]


def sum_many(parts: Sequence[SetSystem]) -> SetSystem:
    """Disjoint union of same-rank set-systems."""
    if not parts:
        raise ValueError("empty sum")
    rank = parts[0].rank
    for p in parts:
        if p.rank != rank:
            raise ValueError("sum of set-systems of different ranks")
    vs, ini, roots, labels, edges = [], [], [], {}, []
    for i, p in enumerate(parts):
        ren = p.rename_vertices(lambda v, i=i: pid(i, v))
        vs.extend(ren.vertices)
        ini.extend(ren.initial)
        roots.extend(ren.roots)
        labels.update(ren.labels)
        edges.extend(ren.edges)
    return SetSystem.make(rank, vs, ini, roots, labels, edges)


def sum_ss(a: SetSystem, b: SetSystem) -> SetSystem:
    return sum_many([a, b])


# variable renamings ---------------------------------------------------------

def sigma_check(sigma: Sequence[int], m: int, n: int):
    if len(sigma) != m or any(not (1 <= j <= n) for j in sigma):
        raise ValueError(f"map {sigma} is not [{m}] -> [{n}]")


def renamerel(rel: Iterable[tuple[int, int]], s: SetSystem, new_rank: int) -> SetSystem:
    """Generalised renaming: (r,i,x_j) in the result iff (k,j) in rel and (r,i,x_k) in s."""
    rel = set(rel)
    edges = []
    for (src, d, t) in s.edges:
        if isinstance(t, Var):
            for (k, j) in rel:
                if k == t.index:
                    edges.append((src, d, Var(j)))
        else:
            edges.append((src, d, t))
    return SetSystem.make(new_rank, s.vertices, s.initial, s.roots, s.labels, edges)


def rename_vars(sigma: Sequence[int], s: SetSystem, n: int) -> SetSystem:
    """x_k becomes x_sigma(k); rank m -> n. Preserves systems."""
    sigma_check(sigma, s.rank, n)
    return renamerel([(k + 1, j) for k, j in enumerate(sigma)], s, n)


def dup_vars(sigma: Sequence[int], s: SetSystem, m: int) -> SetSystem:
    """(r,i,x_j) iff (r,i,x_sigma(j)); rank n -> m. Need not preserve systems."""
    sigma_check(sigma, m, s.rank)
    return renamerel([(j, k + 1) for k, j in enumerate(sigma)], s, m)


def apply_renaming(mode: str, arg, s: SetSystem, new_rank: int) -> SetSystem:
    if mode == "rename":
        return rename_vars(arg, s, new_rank)
    if mode == "dupname":
        return dup_vars(arg, s, new_rank)
    if mode == "renamerel":
        return renamerel(arg, s, new_rank)
    raise ValueError(f"unknown renaming mode {mode!r}")


# initial/root plumbing ------------------------------------------------------

def uproot(s: SetSystem) -> SetSystem:
    """Roots become the initial vertices, the old initial vertices are forgotten."""
    return SetSystem(s.rank, s.vertices, frozenset(s.roots), frozenset(), s.labels, s.edges)


def plant(s: SetSystem) -> SetSystem:
    """Initial vertices are put in the ground: they join the roots."""
    return SetSystem(s.rank, s.vertices, frozenset(), s.roots | s.initial, s.labels, s.edges)


def fuproot(outer: SetSystem) -> SetSystem:
    """Two-copy companion of uproot: flatten(fuproot(S)) folds onto uproot(flatten(S))."""
    if not is_nested(outer):
        raise ValueError("fuproot needs a nested set-system")
    vs, ini, labels, edges = [], [], {}, []
    for m in (0, 1):
        for v in outer.vertices:
            nid = pid(m, v)
            vs.append(nid)
            labels[nid] = uproot(outer.labels[v]) if m == 0 else outer.labels[v]
    ini = [pid(0, v) for v in outer.vertices] + [pid(1, v) for v in outer.roots]
    for (v, d, t) in outer.edges:
        for m in (0, 1):
            if isinstance(t, Var):
                edges.append((pid(m, v), d, t))
            else:
                edges.append((pid(m, v), d, pid(1, t)))
    return SetSystem.make(outer.rank, vs, ini, [], labels, edges)


# contexts --------------------------------------------------------------------

def hole(k: int) -> Sym:
    return Sym(HOLE_NAME, k)


def is_hole(label) -> bool:
    return isinstance(label, Sym) and label.name == HOLE_NAME


def hole_vertex(c: SetSystem) -> str:
    hs = [v for v in c.vertices if is_hole(c.labels[v])]
    if len(hs) != 1:
        raise ValueError(f"a context must label exactly one vertex with the hole, found {len(hs)}")
    return hs[0]


def hole_rank(c: SetSystem) -> int:
    return c.labels[hole_vertex(c)].rank


def plug(c: SetSystem, s: SetSystem) -> SetSystem:
    """Substitute s for the hole of c (a flattening with atomic labels elsewhere)."""
    h = hole_vertex(c)
    k = c.labels[h].rank
    if s.rank != k:
        raise ValueError(f"cannot plug rank {s.rank} into a {k}-hole")
    labels = {v: (s if v == h else atomic(c.labels[v])) for v in c.vertices}
    nested = SetSystem(c.rank, c.vertices, c.initial, c.roots, labels, c.edges)
    return flatten(nested)


def plug_elem(c: SetSystem, label) -> SetSystem:
    return plug(c, atomic(label))


def puncture(outer: SetSystem, u: str) -> SetSystem:
    """Flatten the nested set-system with vertex u replaced by a hole."""
    m = rank_of(outer.labels[u])
    labels = dict(outer.labels)
    labels[u] = atomic(hole(m))
    return flatten(SetSystem(outer.rank, outer.vertices, outer.initial, outer.roots,
                             labels, outer.edges))


def make_context(parts: Sequence[SetSystem]) -> SetSystem:
    """Context(S_0,...,S_n): a closed context with an n-hole.

    x_1 exits of every part are rerouted to the hole; hole direction d feeds
    the initial vertices of S_d.  Entry is through S_0; roots are kept.
    """
    n = len(parts) - 1
    if n < 0:
        raise ValueError("Context needs at least S_0")
    for p in parts:
        if p.rank != 1:
            raise ValueError("Context takes rank-1 set-systems")
    h = "hole"
    vs, roots, labels, edges = [h], [], {h: hole(n)}, []
    for i, p in enumerate(parts):
        ren = p.rename_vertices(lambda v, i=i: pid(i, v))
        vs.extend(ren.vertices)
        roots.extend(ren.roots)
        labels.update(ren.labels)
        for (src, d, t) in ren.edges:
            if isinstance(t, Var):
                edges.append((src, d, h))
            else:
                edges.append((src, d, t))
    for d in range(1, n + 1):
        for w in parts[d].initial:
            edges.append((h, d, pid(d, w)))
    initial = [pid(0, w) for w in parts[0].initial]
    return SetSystem.make(0, vs, initial, roots, labels, edges)


def pieces(c: SetSystem) -> list[SetSystem]:
    """Decompose a closed context into rank-1 pieces P_0..P_n.

    The hole vertex is removed, edges into it become x_1 exits; P_0 keeps the
    context's initial vertices, P_i starts at the direction-i successors of
    the hole.
    """
    if c.rank != 0:
        raise ValueError("pieces are defined for closed contexts")
    h = hole_vertex(c)
    n = c.labels[h].rank
    keep = [v for v in c.vertices if v != h]
    labels = {v: c.labels[v] for v in keep}
    edges = []
    for (src, d, t) in c.edges:
        if src == h:
            continue
        if t == h:
            edges.append((src, d, Var(1)))
        else:
            edges.append((src, d, t))
    out = []
    p0 = SetSystem.make(1, keep, c.initial - {h}, c.roots - {h}, labels, edges)
    out.append(p0)
    for i in range(1, n + 1):
        ini = [t for t in c.targets(h, i) if not isinstance(t, Var) and t != h]
        out.append(SetSystem.make(1, keep, ini, c.roots - {h}, labels, edges))
    return out
