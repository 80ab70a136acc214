"""Morphisms of set-systems: checking, search, composition, pullbacks.

A morphism maps vertices so that initial vertices, root vertices, labels and
direction-indexed edges are preserved; it is locally surjective when initial
and root images are onto and every outgoing edge of an image vertex is hit.
Morphisms between systems witness unfoldings; pullbacks provide the product
construction used by the equivalence deciders.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .core import SetSystem, Var, label_key
from .monad import dup_vars, pid, rename_vars

NOT_A_MORPHISM = "not-a-morphism"
MORPHISM = "morphism"
LOCALLY_SURJECTIVE = "locally-surjective-morphism"


@dataclass(frozen=True)
class MorphismCheck:
    kind: str
    witness: str | None = None

    @property
    def ok(self) -> bool:
        return self.kind != NOT_A_MORPHISM

    @property
    def locally_surjective(self) -> bool:
        return self.kind == LOCALLY_SURJECTIVE


@dataclass(frozen=True)
class Morphism:
    source: SetSystem
    target: SetSystem
    vmap: dict[str, str]

    def __call__(self, v: str) -> str:
        return self.vmap[v]


def _edge_image(vmap, e):
    (src, d, t) = e
    return (vmap[src], d, t if isinstance(t, Var) else vmap[t])


def check_morphism(src: SetSystem, dst: SetSystem, vmap: Mapping[str, str]) -> MorphismCheck:
    """Classify a vertex map as no morphism / morphism / locally surjective."""
    if src.rank != dst.rank:
        raise ValueError(f"rank mismatch: {src.rank} vs {dst.rank}")
    for v in src.vertices:
        if v not in vmap:
            return MorphismCheck(NOT_A_MORPHISM, f"map undefined on vertex {v}")
        if vmap[v] not in dst.labels:
            return MorphismCheck(NOT_A_MORPHISM, f"image of {v} is not a target vertex")
    for v in src.vertices:
        if label_key(src.labels[v]) != label_key(dst.labels[vmap[v]]):
            return MorphismCheck(NOT_A_MORPHISM, f"label mismatch at vertex {v}")
    for v in src.initial:
        if vmap[v] not in dst.initial:
            return MorphismCheck(NOT_A_MORPHISM, f"initial vertex {v} maps to a non-initial vertex")
    for v in src.roots:
        if vmap[v] not in dst.roots:
            return MorphismCheck(NOT_A_MORPHISM, f"root vertex {v} maps to a non-root vertex")
    for e in src.edges:
        if _edge_image(vmap, e) not in dst.edges:
            return MorphismCheck(NOT_A_MORPHISM, f"edge {e} has no image edge")

    surj = {vmap[v] for v in src.initial} == dst.initial
    surj = surj and {vmap[v] for v in src.roots} == dst.roots
    if surj:
        for v in src.vertices:
            have = {( d, t if isinstance(t, Var) else vmap[t])
                    for (s0, d, t) in src.edges if s0 == v}
            want = {(d, t if isinstance(t, Var) else t)
                    for (s0, d, t) in dst.edges if s0 == vmap[v]}
            if have != want:
                surj = False
                break
    return MorphismCheck(LOCALLY_SURJECTIVE if surj else MORPHISM)


def _candidates(src: SetSystem, dst: SetSystem) -> dict[str, list[str]]:
    cand = {}
    for v in src.vertices:
        lk = label_key(src.labels[v])
        opts = [w for w in dst.vertices if label_key(dst.labels[w]) == lk]
        if v in src.initial:
            opts = [w for w in opts if w in dst.initial]
        if v in src.roots:
            opts = [w for w in opts if w in dst.roots]
        cand[v] = opts
    return cand


def find_morphism(src: SetSystem, dst: SetSystem) -> Morphism | None:
    """Backtracking search for any morphism; exhaustive at desk scale."""
    for m in iter_morphisms(src, dst):
        return m
    return None


def iter_morphisms(src: SetSystem, dst: SetSystem):
    """All morphisms src -> dst, initial-vertices-first assignment order."""
    if src.rank != dst.rank:
        raise ValueError(f"rank mismatch: {src.rank} vs {dst.rank}")
    cand = _candidates(src, dst)
    order = sorted(src.vertices, key=lambda v: (v not in src.initial, len(cand[v]), v))
    by_src: dict[str, list] = {v: [] for v in src.vertices}
    for e in src.edges:
        by_src[e[0]].append(e)
    incoming: dict[str, list] = {v: [] for v in src.vertices}
    for e in src.edges:
        if not isinstance(e[2], Var):
            incoming[e[2]].append(e)

    vmap: dict[str, str] = {}

    def consistent(v: str) -> bool:
        for (s0, d, t) in by_src[v]:
            if isinstance(t, Var):
                if (vmap[v], d, t) not in dst.edges:
                    return False
            elif t in vmap and (vmap[v], d, vmap[t]) not in dst.edges:
                return False
        for (s0, d, t) in incoming[v]:
            if s0 in vmap and (vmap[s0], d, vmap[v]) not in dst.edges:
                return False
        return True

    def rec(i: int):
        if i == len(order):
            yield Morphism(src, dst, dict(vmap))
            return
        v = order[i]
        for w in cand[v]:
            vmap[v] = w
            if consistent(v):
                yield from rec(i + 1)
            del vmap[v]

    yield from rec(0)


def compose(f: Morphism, g: Morphism) -> Morphism:
    """g after f: a morphism from f.source to g.target (checked by construction)."""
    if f.target is not g.source and f.target != g.source:
        raise ValueError("morphisms do not chain")
    return Morphism(f.source, g.target, {v: g.vmap[f.vmap[v]] for v in f.source.vertices})


def pullback(f: Morphism, g: Morphism, trim: bool = False) -> tuple[SetSystem, Morphism, Morphism]:
    """The universal square completion of f: S -> T and g: S' -> T.

    Vertices are the pairs agreeing in T; edges are the synchronous ones.  With
    ``trim`` the product is restricted to vertices reachable from initial and
    root pairs (the universal property is stated for the full product).
    """
    s, s2, t = f.source, g.source, f.target
    if g.target != t and g.target is not t:
        raise ValueError("pullback needs a common target")
    pairs = [(v, w) for v in s.vertices for w in s2.vertices if f.vmap[v] == g.vmap[w]]
    vs = [pid(v, w) for (v, w) in pairs]
    labels = {pid(v, w): s.labels[v] for (v, w) in pairs}
    initial = [pid(v, w) for (v, w) in pairs if v in s.initial and w in s2.initial]
    roots = [pid(v, w) for (v, w) in pairs if v in s.roots and w in s2.roots]
    pairset = set(pairs)
    edges = []
    for (v, d, x) in s.edges:
        for (w, d2, y) in s2.edges:
            if d != d2 or w not in s2.vertices:
                continue
            if isinstance(x, Var) and isinstance(y, Var):
                if x == y and (v, w) in pairset:
                    edges.append((pid(v, w), d, x))
            elif not isinstance(x, Var) and not isinstance(y, Var):
                if (v, w) in pairset and (x, y) in pairset:
                    edges.append((pid(v, w), d, pid(x, y)))
    p = SetSystem.make(s.rank, vs, initial, roots, labels, edges)
    if trim:
        p = p.trim()
        pairs = [pr for pr in pairs if pid(*pr) in set(p.vertices)]
    pi = Morphism(p, s, {pid(v, w): v for (v, w) in pairs})
    pi2 = Morphism(p, s2, {pid(v, w): w for (v, w) in pairs})
    return p, pi, pi2


def rename_transport(sigma, rho: Mapping[str, str], s: SetSystem, s2: SetSystem) -> bool:
    """Decide whether rho is a morphism rename_sigma(s) -> s2.

    The same map is a morphism s -> dupname_sigma(s2); both readings are
    computed and must agree.
    """
    n = s2.rank
    m = s.rank
    left = check_morphism(rename_vars(sigma, s, n), s2, rho).ok
    right = check_morphism(s, dup_vars(sigma, s2, m), rho).ok
    if left != right:
        raise AssertionError("rename/dupname transport disagreement")
    return left
