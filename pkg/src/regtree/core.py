"""Core structures: ranked alphabets, set-systems, systems, transition systems.

A set-system is a finite vertex/edge structure over a ranked alphabet: every
vertex carries a ranked label, each edge leaves a vertex in a numbered
direction and ends either in a vertex or in a variable x_1..x_n (n is the rank
of the whole structure).  Set-systems have a set of initial vertices and a set
of root vertices.  Systems are the deterministic fragment: a single initial
vertex, no roots, and exactly one successor per (vertex, direction); they are
folded presentations of infinite regular trees.

Structural comparisons are "up to isomorphism" throughout, decided by a
canonical form (colour refinement with individualisation, minimal encoding).
Vertex ids are opaque strings.  Labels are any objects exposing an integer
``rank`` attribute: alphabet symbols (`Sym`), set-systems themselves (for
nested structures), or algebra elements.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Iterable, Mapping


@dataclass(frozen=True, order=True)
class Sym:
    """An alphabet symbol with its arity."""

    name: str
    rank: int

    def sort_key(self):
        return ("sym", self.name, self.rank)


@dataclass(frozen=True, order=True)
class Var:
    """A variable exit x_i (1-based)."""

    index: int


Target = "str | Var"
Edge = "tuple[str, int, str | Var]"


@dataclass(frozen=True)
class RankedAlphabet:
    symbols: tuple[Sym, ...]

    def __post_init__(self):
        names = [s.name for s in self.symbols]
        if len(set(names)) != len(names):
            raise ValueError("duplicate symbol names in alphabet")
        for s in self.symbols:
            if s.rank < 0:
                raise ValueError(f"negative rank for symbol {s.name}")

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "RankedAlphabet":
        return cls(tuple(Sym(n, r) for n, r in pairs))

    @cached_property
    def _by_name(self) -> dict[str, Sym]:
        return {s.name: s for s in self.symbols}

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __getitem__(self, name: str) -> Sym:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"unknown symbol {name!r}") from None

    def __iter__(self):
        return iter(self.symbols)


def rank_of(label: Any) -> int:
    """Arity of a vertex label (symbol, inner set-system, algebra element)."""
    r = getattr(label, "rank", None)
    if not isinstance(r, int):
        raise TypeError(f"label {label!r} has no integer rank")
    return r


def label_key(label: Any):
    """Deterministic, orderable key for a label; recurses into inner systems."""
    if isinstance(label, Sym):
        return ("sym", label.name, label.rank)
    if isinstance(label, SetSystem):
        return ("sys",) + canonical_key(label)
    sk = getattr(label, "sort_key", None)
    if callable(sk):
        return ("obj",) + tuple(sk())
    raise TypeError(f"label {label!r} is not keyable")


@dataclass(frozen=True)
class SetSystem:
    """Finite set-system of a given rank.

    ``labels`` maps every vertex to a ranked label; ``edges`` contains triples
    (src, direction, target) with targets either vertex ids or `Var`.
    """

    rank: int
    vertices: tuple[str, ...]
    initial: frozenset[str]
    roots: frozenset[str]
    labels: dict[str, Any]
    edges: frozenset[Edge]

    @classmethod
    def make(
        cls,
        rank: int,
        vertices: Iterable[str],
        initial: Iterable[str],
        roots: Iterable[str],
        labels: Mapping[str, Any],
        edges: Iterable[Edge],
    ) -> "SetSystem":
        return cls(
            rank=rank,
            vertices=tuple(vertices),
            initial=frozenset(initial),
            roots=frozenset(roots),
            labels=dict(labels),
            edges=frozenset(tuple(e) for e in edges),
        )

    def label(self, v: str) -> Any:
        return self.labels[v]

    @cached_property
    def succ(self) -> dict[str, dict[int, tuple]]:
        """Per-vertex, per-direction tuple of targets (sorted deterministically)."""
        out: dict[str, dict[int, list]] = {v: {} for v in self.vertices}
        for (s, d, t) in self.edges:
            out.setdefault(s, {}).setdefault(d, []).append(t)
        return {
            v: {d: tuple(sorted(ts, key=_target_sort_key)) for d, ts in dd.items()}
            for v, dd in out.items()
        }

    def targets(self, v: str, d: int) -> tuple:
        return self.succ.get(v, {}).get(d, ())

    def out_edges(self, v: str) -> list[Edge]:
        return [e for e in self.edges if e[0] == v]

    def relabel(self, fn) -> "SetSystem":
        """Apply a rank-preserving map to every label (the functor lift)."""
        new = {v: fn(l) for v, l in self.labels.items()}
        for v in self.vertices:
            if rank_of(new[v]) != rank_of(self.labels[v]):
                raise ValueError(f"relabelling changed the rank at vertex {v}")
        return SetSystem(self.rank, self.vertices, self.initial, self.roots, new, self.edges)

    def rename_vertices(self, fn) -> "SetSystem":
        def tgt(t):
            return t if isinstance(t, Var) else fn(t)

        return SetSystem.make(
            self.rank,
            [fn(v) for v in self.vertices],
            [fn(v) for v in self.initial],
            [fn(v) for v in self.roots],
            {fn(v): l for v, l in self.labels.items()},
            [(fn(s), d, tgt(t)) for (s, d, t) in self.edges],
        )

    def reachable(self, sources: Iterable[str] | None = None) -> set[str]:
        """Vertices reachable from the given sources (default initial ∪ roots)."""
        if sources is None:
            sources = set(self.initial) | set(self.roots)
        seen = set()
        todo = [v for v in sources]
        while todo:
            v = todo.pop()
            if v in seen:
                continue
            seen.add(v)
            for dd in self.succ.get(v, {}).values():
                for t in dd:
                    if not isinstance(t, Var) and t not in seen:
                        todo.append(t)
        return seen

    def trim(self, sources: Iterable[str] | None = None) -> "SetSystem":
        keep = self.reachable(sources)
        return SetSystem.make(
            self.rank,
            [v for v in self.vertices if v in keep],
            self.initial & keep,
            self.roots & keep,
            {v: l for v, l in self.labels.items() if v in keep},
            [e for e in self.edges if e[0] in keep and (isinstance(e[2], Var) or e[2] in keep)],
        )


def _target_sort_key(t):
    return ("x", t.index, "") if isinstance(t, Var) else ("v", 0, t)


@dataclass(frozen=True)
class Violation:
    code: str
    subject: str
    message: str

    def __str__(self):
        return f"[{self.code}] {self.subject}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]
    is_system: bool
    is_closed: bool

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def kind(self) -> str:
        if not self.ok:
            return "invalid"
        k = "system" if self.is_system else "set-system"
        return f"closed {k}" if self.is_closed else k


def validate(s: SetSystem) -> ValidationReport:
    """Check every structural invariant; classify as set-system / system / closed."""
    bad: list[Violation] = []
    vs = set(s.vertices)
    if len(vs) != len(s.vertices):
        bad.append(Violation("dup-vertex", "vertices", "duplicate vertex ids"))
    if s.rank < 0:
        bad.append(Violation("rank", "rank", "negative rank"))
    for v in s.initial - vs:
        bad.append(Violation("initial", v, "initial vertex not in vertex set"))
    for v in s.roots - vs:
        bad.append(Violation("root", v, "root vertex not in vertex set"))
    for v in s.vertices:
        if v not in s.labels:
            bad.append(Violation("label", v, "vertex has no label"))
    for v in s.labels:
        if v not in vs:
            bad.append(Violation("label", v, "label on unknown vertex"))
    for (src, d, t) in s.edges:
        if src not in vs:
            bad.append(Violation("edge-src", f"{src}", "edge source not a vertex"))
            continue
        if src in s.labels:
            try:
                k = rank_of(s.labels[src])
            except TypeError:
                bad.append(Violation("label", src, "unrankable label"))
                continue
            if not (1 <= d <= k):
                bad.append(
                    Violation("edge-dir", f"({src},{d})", f"direction exceeds symbol rank {k}")
                )
        if isinstance(t, Var):
            if not (1 <= t.index <= s.rank):
                bad.append(Violation("edge-var", f"({src},{d},x{t.index})", "variable out of range"))
        elif t not in vs:
            bad.append(Violation("edge-dst", f"({src},{d},{t})", "edge target not a vertex"))

    is_system = not bad and len(s.initial) == 1 and not s.roots
    if is_system:
        for v in s.vertices:
            k = rank_of(s.labels[v])
            for d in range(1, k + 1):
                if len(s.targets(v, d)) != 1:
                    is_system = False
                    break
            if not is_system:
                break
    return ValidationReport(tuple(bad), is_system, is_closed=s.rank == 0)


def is_system(s: SetSystem) -> bool:
    return validate(s).is_system


# ---------------------------------------------------------------------------
# Canonical forms

def _canonical_order(nodes, payload, out_edges):
    """Minimal encoding of a finite labelled digraph.

    ``payload(v)`` is an orderable tuple; ``out_edges(v)`` yields orderable
    items of the form (tag..., node) with the node last, or terminal items
    (tag...,) with no node.  Returns (encoding, ordered node list).  Colour
    refinement plus individualisation; exact on all inputs.
    """
    nodes = list(nodes)
    n = len(nodes)
    if n == 0:
        return ((), ()), []
    edges = {v: list(out_edges(v)) for v in nodes}

    def refine(colors):
        while True:
            sigs = {}
            for v in nodes:
                row = []
                for item in edges[v]:
                    *tag, tgt = item
                    if tgt is None:
                        row.append((tuple(tag), ("t",)))
                    else:
                        row.append((tuple(tag), ("c", colors[tgt])))
                sigs[v] = (colors[v], tuple(sorted(row)))
            order = sorted(set(sigs.values()))
            remap = {sig: i for i, sig in enumerate(order)}
            new = {v: remap[sigs[v]] for v in nodes}
            # signatures start with the old colour, so classes only ever split
            if len(order) == len(set(colors.values())):
                return new
            colors = new

    def encode(order_list):
        idx = {v: i for i, v in enumerate(order_list)}
        pays = tuple(payload(v) for v in order_list)
        erows = []
        for v in order_list:
            for item in edges[v]:
                *tag, tgt = item
                if tgt is None:
                    erows.append((idx[v], tuple(tag), ("t",)))
                else:
                    erows.append((idx[v], tuple(tag), ("n", idx[tgt])))
        return (pays, tuple(sorted(erows)))

    base_pal = sorted({payload(v) for v in nodes})
    base = {v: base_pal.index(payload(v)) for v in nodes}

    best = [None]

    def search(colors):
        colors = refine(colors)
        cells: dict[int, list] = {}
        for v in nodes:
            cells.setdefault(colors[v], []).append(v)
        split = [c for c, vs in sorted(cells.items()) if len(vs) > 1]
        if not split:
            ordering = sorted(nodes, key=lambda v: colors[v])
            enc = encode(ordering)
            if best[0] is None or enc < best[0][0]:
                best[0] = (enc, ordering)
            return
        cell = cells[split[0]]
        fresh = max(colors.values()) + 1
        for v in cell:
            c2 = dict(colors)
            c2[v] = fresh
            search(c2)

    search(base)
    return best[0]


def canonical_key(s: SetSystem):
    """Isomorphism-invariant key: equal keys iff isomorphic set-systems."""

    def payload(v):
        return (label_key(s.labels[v]), v in s.initial, v in s.roots)

    def out_edges(v):
        for (src, d, t) in s.edges:
            if src != v:
                continue
            if isinstance(t, Var):
                yield (d, "x", t.index, None)
            else:
                yield (d, "v", 0, t)

    enc, _ = _canonical_order(s.vertices, payload, out_edges)
    return (s.rank, len(s.vertices), enc)


def iso(a: SetSystem, b: SetSystem) -> bool:
    """Structural equality up to vertex renaming."""
    return canonical_key(a) == canonical_key(b)


def canonicalize(s: SetSystem) -> SetSystem:
    """Rename vertices into the canonical order v0, v1, ..."""

    def payload(v):
        return (label_key(s.labels[v]), v in s.initial, v in s.roots)

    def out_edges(v):
        for (src, d, t) in s.edges:
            if src != v:
                continue
            if isinstance(t, Var):
                yield (d, "x", t.index, None)
            else:
                yield (d, "v", 0, t)

    _, order = _canonical_order(s.vertices, payload, out_edges)
    names = {v: f"v{i}" for i, v in enumerate(order)}
    out = s.rename_vertices(lambda v: names[v])
    return SetSystem.make(out.rank, sorted(out.vertices, key=lambda v: int(v[1:])),
                          out.initial, out.roots, out.labels, out.edges)


# ---------------------------------------------------------------------------
# Expression notation

class ExprError(ValueError):
    pass


def _tokenize(text: str):
    toks = []
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
        elif c in "(),":
            toks.append((c, i))
            i += 1
        else:
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] in "_'{}+-"):
                j += 1
            if j == i:
                raise ExprError(f"unexpected character {c!r} at position {i}")
            toks.append((text[i:j], i))
            i = j
    return toks


def from_expression(text: str, alphabet: RankedAlphabet, rank: int | None = None) -> SetSystem:
    """Build the tree-shaped system denoted by an expression like ``a2(x1, a2(b, x2))``.

    Each symbol occurrence becomes a fresh vertex; argument positions either
    name a variable xj or recurse.  Arity mismatches are rejected with the
    position of the offending token.
    """
    toks = _tokenize(text)
    pos = [0]
    counter = itertools.count()
    vertices: list[str] = []
    labels: dict[str, Any] = {}
    edges: list = []
    max_var = [0]

    def peek():
        return toks[pos[0]] if pos[0] < len(toks) else (None, len(text))

    def next_tok():
        t = peek()
        pos[0] += 1
        return t

    def parse() -> "str | Var":
        name, at = next_tok()
        if name is None or name in "(),":
            raise ExprError(f"expected a symbol or variable at position {at}")
        if name.startswith("x") and name[1:].isdigit():
            return Var(int(name[1:]))
        if name not in alphabet:
            raise ExprError(f"unknown symbol {name!r} at position {at}")
        sym = alphabet[name]
        vid = f"n{next(counter)}"
        vertices.append(vid)
        labels[vid] = sym
        args: list = []
        if peek()[0] == "(":
            next_tok()
            if peek()[0] != ")":
                while True:
                    args.append((parse(), peek()[1]))
                    t, _ = next_tok()
                    if t == ")":
                        break
                    if t != ",":
                        raise ExprError(f"expected ',' or ')' at position {peek()[1]}")
            else:
                next_tok()
        if len(args) != sym.rank:
            raise ExprError(
                f"symbol {name!r} of rank {sym.rank} applied to {len(args)} arguments at position {at}"
            )
        for d, (arg, _) in enumerate(args, start=1):
            if isinstance(arg, Var):
                max_var[0] = max(max_var[0], arg.index)
                edges.append((vid, d, arg))
            else:
                edges.append((vid, d, arg))
        return vid

    root = parse()
    if pos[0] != len(toks):
        raise ExprError(f"trailing input at position {peek()[1]}")
    if isinstance(root, Var):
        raise ExprError("a bare variable is not a system")
    r = max_var[0] if rank is None else rank
    if r < max_var[0]:
        raise ExprError(f"declared rank {r} below used variable x{max_var[0]}")
    return SetSystem.make(r, vertices, [root], [], labels, edges)


# ---------------------------------------------------------------------------
# Transition systems and their system encodings

@dataclass(frozen=True)
class TransitionSystem:
    vertices: tuple[str, ...]
    initial: str
    transitions: frozenset[tuple[str, str]]
    valuation: dict[str, frozenset[str]]

    @classmethod
    def make(cls, vertices, initial, transitions, valuation) -> "TransitionSystem":
        ts = cls(
            tuple(vertices),
            initial,
            frozenset(tuple(t) for t in transitions),
            {v: frozenset(ps) for v, ps in valuation.items()},
        )
        vs = set(ts.vertices)
        if ts.initial not in vs:
            raise ValueError("initial state not among states")
        for (u, v) in ts.transitions:
            if u not in vs or v not in vs:
                raise ValueError(f"transition ({u},{v}) outside state set")
        for v in ts.vertices:
            if v not in ts.valuation:
                raise ValueError(f"state {v} has no valuation")
        return ts

    @cached_property
    def succ(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {v: [] for v in self.vertices}
        for (u, v) in self.transitions:
            out[u].append(v)
        return {u: tuple(sorted(vs)) for u, vs in out.items()}


def ts_symbol(props: Iterable[str], rank: int) -> Sym:
    """The valuation symbol ν_rank for a predicate set."""
    body = "&".join(sorted(props))
    return Sym(f"nu({body})_{rank}", rank)


def parse_ts_symbol(sym: Sym) -> tuple[frozenset[str], int]:
    name = sym.name
    if not (name.startswith("nu(") and "_" in name):
        raise ValueError(f"{name!r} is not a valuation symbol")
    body, _, rk = name.rpartition("_")
    inner = body[3:-1]
    props = frozenset(p for p in inner.split("&") if p)
    return props, int(rk)


def ts_alphabet(props: Iterable[str], max_rank: int) -> RankedAlphabet:
    """All valuation symbols ν_0..ν_max_rank over subsets of the predicates."""
    props = sorted(set(props))
    syms = []
    for r in range(max_rank + 1):
        for k in range(len(props) + 1):
            for sub in itertools.combinations(props, k):
                syms.append(ts_symbol(sub, r))
    return RankedAlphabet(tuple(syms))


def encode_ts(ts: TransitionSystem, padded: bool = False) -> SetSystem:
    """Closed system encoding a transition system; out-degree k gets ν_k.

    With ``padded=True`` every vertex of out-degree k>0 is encoded with the
    symbol ν_{n·k} (n the maximal out-degree), children repeated in the
    interleaved order i + k·j; decoding erases the padding.
    """
    n = max((len(ts.succ[v]) for v in ts.vertices), default=0)
    vertices = list(ts.vertices)
    labels = {}
    edges = []
    for v in vertices:
        ss = ts.succ[v]
        k = len(ss)
        if k == 0:
            labels[v] = ts_symbol(ts.valuation[v], 0)
            continue
        if padded:
            labels[v] = ts_symbol(ts.valuation[v], n * k)
            for i, w in enumerate(ss, start=1):
                for j in range(n):
                    edges.append((v, i + k * j, w))
        else:
            labels[v] = ts_symbol(ts.valuation[v], k)
            for i, w in enumerate(ss, start=1):
                edges.append((v, i, w))
    return SetSystem.make(0, vertices, [ts.initial], [], labels, edges)


def decode_ts(s: SetSystem) -> TransitionSystem:
    """Direction-erased reading of a closed valuation-labelled system."""
    rep = validate(s)
    if not rep.ok or not rep.is_system or s.rank != 0:
        raise ValueError("decode requires a closed system")
    val = {}
    for v in s.vertices:
        props, _ = parse_ts_symbol(s.labels[v])
        val[v] = props
    trans = set()
    for (u, d, t) in s.edges:
        trans.add((u, t))
    (init,) = s.initial
    return TransitionSystem.make(s.vertices, init, trans, val)


def ts_canonical_key(ts: TransitionSystem):
    def payload(v):
        return (tuple(sorted(ts.valuation[v])), v == ts.initial)

    def out_edges(v):
        for w in ts.succ[v]:
            yield ("t", w)

    enc, _ = _canonical_order(ts.vertices, payload, out_edges)
    return (len(ts.vertices), enc)


def ts_iso(a: TransitionSystem, b: TransitionSystem) -> bool:
    return ts_canonical_key(a) == ts_canonical_key(b)


# ---------------------------------------------------------------------------
# Serialization (JSON documents) and DOT export

def alphabet_to_doc(a: RankedAlphabet) -> dict:
    return {"symbols": [{"name": s.name, "rank": s.rank} for s in a.symbols]}


def alphabet_from_doc(doc: dict) -> RankedAlphabet:
    return RankedAlphabet(tuple(Sym(d["name"], int(d["rank"])) for d in doc["symbols"]))


def system_to_doc(s: SetSystem) -> dict:
    def lab(l):
        if isinstance(l, Sym):
            return l.name
        if isinstance(l, SetSystem):
            return system_to_doc(l)
        raise TypeError(f"cannot serialise label {l!r}")

    doc = {
        "rank": s.rank,
        "vertices": [
            {
                "id": v,
                "label": lab(s.labels[v]),
                "initial": v in s.initial,
                "root": v in s.roots,
            }
            for v in s.vertices
        ],
        "edges": [],
    }
    for (src, d, t) in sorted(s.edges, key=lambda e: (e[0], e[1], _target_sort_key(e[2]))):
        if isinstance(t, Var):
            doc["edges"].append({"src": src, "dir": d, "var": t.index})
        else:
            doc["edges"].append({"src": src, "dir": d, "dst": t})
    return doc


def system_from_doc(doc: dict, alphabet: RankedAlphabet | None = None) -> SetSystem:
    if "alphabet" in doc and alphabet is None:
        alphabet = alphabet_from_doc(doc["alphabet"])
    labels = {}
    vertices = []
    initial = []
    roots = []
    for vd in doc["vertices"]:
        v = vd["id"]
        vertices.append(v)
        l = vd["label"]
        if isinstance(l, dict):
            labels[v] = system_from_doc(l, alphabet)
        else:
            if alphabet is None:
                raise ValueError("symbol labels need an alphabet")
            labels[v] = alphabet[l]
        if vd.get("initial"):
            initial.append(v)
        if vd.get("root"):
            roots.append(v)
    edges = []
    for ed in doc["edges"]:
        t = Var(int(ed["var"])) if "var" in ed else ed["dst"]
        edges.append((ed["src"], int(ed["dir"]), t))
    return SetSystem.make(int(doc["rank"]), vertices, initial, roots, labels, edges)


def ts_to_doc(ts: TransitionSystem) -> dict:
    return {
        "states": [{"id": v, "props": sorted(ts.valuation[v])} for v in ts.vertices],
        "initial": ts.initial,
        "transitions": sorted([u, v] for (u, v) in ts.transitions),
    }


def ts_from_doc(doc: dict) -> TransitionSystem:
    return TransitionSystem.make(
        [s["id"] for s in doc["states"]],
        doc["initial"],
        [tuple(t) for t in doc["transitions"]],
        {s["id"]: frozenset(s.get("props", [])) for s in doc["states"]},
    )


def to_dot(s: SetSystem, name: str = "S") -> str:
    lines = [f"digraph {json.dumps(name)} {{", "  rankdir=LR;"]
    for v in s.vertices:
        l = s.labels[v]
        txt = l.name if isinstance(l, Sym) else "[sys]"
        shape = "doublecircle" if v in s.initial else ("house" if v in s.roots else "circle")
        lines.append(f"  {json.dumps(v)} [label={json.dumps(txt)}, shape={shape}];")
    xn = itertools.count()
    for (src, d, t) in sorted(s.edges, key=lambda e: (e[0], e[1], _target_sort_key(e[2]))):
        if isinstance(t, Var):
            xv = f"__x{next(xn)}"
            lines.append(f"  {json.dumps(xv)} [label=\"x{t.index}\", shape=none];")
            lines.append(f"  {json.dumps(src)} -> {json.dumps(xv)} [label=\"{d}\"];")
        else:
            lines.append(f"  {json.dumps(src)} -> {json.dumps(t)} [label=\"{d}\"];")
    lines.append("}")
    return "\n".join(lines)
