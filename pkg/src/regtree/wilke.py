"""Finite algebra presentations with branch semantics.

A presentation is a pair of finite carriers: unary elements composed by an
associative product and acting on nullary elements, an omega value on
idempotents, meet tables inducing the orders, an upward-closed accepting set,
and per-letter data (a nullary value, or a nonempty set of unary
decomposition tuples).  A closed graph labelled in the carriers is accepted
when every maximal branch evaluates into the accepting set: finite branches
through the word tables, infinite ones by Ramsey-style lasso evaluation on
(prefix value, idempotent loop value) pairs.

Elements of higher rank are represented as meets of deterministic tuples
(`Rep`); the comparison `rep_leq` is the downward-closure rule, exact on the
shipped presentations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .core import RankedAlphabet, SetSystem, Sym, Var, validate
from .monad import atomic, make_context, plant, plug, rename_vars, sum_many

EPS = None  # empty prefix


class PresentationError(ValueError):
    pass


@dataclass(frozen=True)
class Letter:
    name: str
    rank: int
    value0: "str | None" = None
    decomps: "frozenset[tuple[str, ...]] | None" = None


@dataclass(frozen=True)
class Rep:
    """A rank-n element as a meet of deterministic tuples, with an optional
    nullary meet component."""

    rank: int
    decomps: frozenset
    y0: "str | None" = None

    def sort_key(self):
        return ("rep", self.rank, tuple(sorted(self.decomps)), self.y0 or "")

    def __repr__(self):
        ts = " ^ ".join("(" + ",".join(t) + ")" for t in sorted(self.decomps))
        return f"<{ts}{' ^ ' + self.y0 if self.y0 else ''}>_{self.rank}"


def single(rank: int, tup: Sequence[str]) -> Rep:
    return Rep(rank, frozenset([tuple(tup)]))


@dataclass(frozen=True)
class Presentation:
    y1: tuple[str, ...]
    y0: tuple[str, ...]
    product: dict  # (a, b) -> c, composition "a then b"
    act: dict  # (a, t) -> t'
    omega: dict  # a -> t, defined on (at least) all idempotents
    meet1: dict
    meet0: dict
    accepting: frozenset  # subset of y0, upward closed
    letters: dict  # name -> Letter

    # raw table access -------------------------------------------------------
    def mul(self, a: str, b: str) -> str:
        return self.product[(a, b)]

    def act_on(self, a: str, t: str) -> str:
        return self.act[(a, t)]

    def m1(self, a: str, b: str) -> str:
        return self.meet1[(a, b)]

    def m0(self, a: str, b: str) -> str:
        return self.meet0[(a, b)]

    def leq1(self, a: str, b: str) -> bool:
        return self.m1(a, b) == a

    def leq0(self, a: str, b: str) -> bool:
        return self.m0(a, b) == a

    def fold(self, w: Sequence[str]) -> "str | None":
        out = EPS
        for a in w:
            out = a if out is EPS else self.mul(out, a)
        return out

    def idempotent_power(self, e0: str) -> tuple[str, int]:
        """(e, k) with e = e0^k idempotent, least such k."""
        cur = e0
        for k in range(1, len(self.y1) + 2):
            if self.mul(cur, cur) == cur:
                return cur, k
            cur = self.mul(cur, e0)
        raise PresentationError(f"no idempotent power of {e0}: product table broken")

    def is_idempotent(self, e: str) -> bool:
        return self.mul(e, e) == e

    def alphabet(self) -> RankedAlphabet:
        return RankedAlphabet(tuple(Sym(l.name, l.rank) for l in self.letters.values()))

    def letter_rep(self, name: str) -> "Rep | Sym":
        l = self.letters[name]
        if l.rank == 0:
            return Sym(l.value0, 0)
        return Rep(l.rank, l.decomps)


def validate_presentation(p: Presentation, lasso_len: int = 4) -> list[str]:
    """Exhaustive table checks; returns the list of violated laws."""
    bad: list[str] = []
    y1, y0 = p.y1, p.y0

    def total(table, dom, what):
        for key in dom:
            if key not in table:
                bad.append(f"{what} undefined on {key}")
                return False
        return True

    ok = total(p.product, itertools.product(y1, y1), "product")
    ok &= total(p.act, itertools.product(y1, y0), "act")
    ok &= total(p.meet1, itertools.product(y1, y1), "meet1")
    ok &= total(p.meet0, itertools.product(y0, y0), "meet0")
    if not ok:
        return bad

    for (name, m, car) in (("meet1", p.m1, y1), ("meet0", p.m0, y0)):
        for a in car:
            if m(a, a) != a:
                bad.append(f"{name} not idempotent at {a}")
            for b in car:
                if m(a, b) != m(b, a):
                    bad.append(f"{name} not commutative at ({a},{b})")
                for c in car:
                    if m(m(a, b), c) != m(a, m(b, c)):
                        bad.append(f"{name} not associative at ({a},{b},{c})")
    for a in y1:
        for b in y1:
            for c in y1:
                if p.mul(p.mul(a, b), c) != p.mul(a, p.mul(b, c)):
                    bad.append(f"product not associative at ({a},{b},{c})")
    # monotonicity of product and act in both arguments
    for a in y1:
        for b in y1:
            if not p.leq1(a, b):
                continue
            for c in y1:
                if not p.leq1(p.mul(a, c), p.mul(b, c)):
                    bad.append(f"product not monotone left at ({a},{b},{c})")
                if not p.leq1(p.mul(c, a), p.mul(c, b)):
                    bad.append(f"product not monotone right at ({a},{b},{c})")
            for t in y0:
                if not p.leq0(p.act_on(a, t), p.act_on(b, t)):
                    bad.append(f"act not monotone in Y1 at ({a},{b},{t})")
    for t in y0:
        for t2 in y0:
            if not p.leq0(t, t2):
                continue
            for a in y1:
                if not p.leq0(p.act_on(a, t), p.act_on(a, t2)):
                    bad.append(f"act not monotone in Y0 at ({a},{t},{t2})")
    # action composes with the product
    for a in y1:
        for b in y1:
            for t in y0:
                if p.act_on(p.mul(a, b), t) != p.act_on(a, p.act_on(b, t)):
                    bad.append(f"act incompatible with product at ({a},{b},{t})")
    # omega on idempotents, fixed by the action
    for e in y1:
        if p.is_idempotent(e):
            if e not in p.omega:
                bad.append(f"omega undefined on idempotent {e}")
            elif p.act_on(e, p.omega[e]) != p.omega[e]:
                bad.append(f"omega({e}) not fixed by act({e},-)")
    # accepting set: upward closed and meet-closed
    for t in p.accepting:
        for t2 in y0:
            if p.leq0(t, t2) and t2 not in p.accepting:
                bad.append(f"accepting set not upward closed: {t} <= {t2}")
        for t2 in p.accepting:
            if p.m0(t, t2) not in p.accepting:
                bad.append(f"accepting set not meet-closed at ({t},{t2})")
    # letters
    for l in p.letters.values():
        if l.rank == 0:
            if l.value0 not in y0:
                bad.append(f"letter {l.name}: value0 outside the nullary carrier")
        else:
            if not l.decomps:
                bad.append(f"letter {l.name}: empty decomposition set")
            else:
                for tup in l.decomps:
                    if len(tup) != l.rank or any(x not in y1 for x in tup):
                        bad.append(f"letter {l.name}: malformed tuple {tup}")
    # lasso alignment independence, exhaustive to the requested length
    if not bad:
        for lu in range(0, lasso_len + 1):
            for u in itertools.product(y1, repeat=lu):
                for lv in range(1, lasso_len + 1):
                    for v in itertools.product(y1, repeat=lv):
                        try:
                            eval_lasso(p, u, v)
                        except PresentationError as e:
                            bad.append(str(e))
                            return bad
    return bad


def check_plant_invariance(p: Presentation, graphs: Iterable[SetSystem]) -> list[str]:
    """Acceptance must not change when initial vertices are planted as roots.

    Holds by construction of the branch semantics (initial and root branches
    are checked alike); exposed so user presentations can assert it over a
    sample.
    """
    bad = []
    for i, g in enumerate(graphs):
        if universal_branch_check(p, g) != universal_branch_check(p, plant(g)):
            bad.append(f"sample {i}: planting changed the verdict")
    return bad


def omega_monotone(p: Presentation) -> bool:
    """Whether omega preserves the order on idempotents (enables the
    maximal-tuple restriction in strategy search)."""
    for e in p.y1:
        for f in p.y1:
            if p.is_idempotent(e) and p.is_idempotent(f) and p.leq1(e, f):
                if not p.leq0(p.omega[e], p.omega[f]):
                    return False
    return True


# word and lasso evaluation ---------------------------------------------------

def eval_word(p: Presentation, w: Sequence[str], t: str) -> str:
    s = p.fold(w)
    return t if s is EPS else p.act_on(s, t)


def eval_lasso(p: Presentation, u: Sequence[str], v: Sequence[str]) -> str:
    """Value of the ultimately periodic branch u v^omega."""
    if not v:
        raise ValueError("the loop part must be nonempty")
    s = p.fold(u)
    e0 = p.fold(v)
    e, k = p.idempotent_power(e0)
    vals = []
    shift = EPS
    for j in range(k):
        pref = s if shift is EPS else (shift if s is EPS else p.mul(s, shift))
        vals.append(p.omega[e] if pref is EPS else p.act_on(pref, p.omega[e]))
        shift = e0 if shift is EPS else p.mul(shift, e0)
    if len(set(vals)) != 1:
        raise PresentationError(
            f"lasso alignment disagreement on u={list(u)}, v={list(v)}: {vals}"
        )
    return vals[0]


# branch semantics over closed graphs ------------------------------------------

@dataclass(frozen=True)
class BranchReport:
    ok: bool
    values: frozenset
    failure: "tuple | None" = None


def _carrier_label(p: Presentation, label) -> tuple[str, str]:
    """('y1'|'y0', name) for a carrier symbol."""
    if isinstance(label, Sym):
        if label.rank == 1 and label.name in p.y1:
            return ("y1", label.name)
        if label.rank == 0 and label.name in p.y0:
            return ("y0", label.name)
    raise PresentationError(f"label {label!r} is not a carrier symbol")


def branch_values(p: Presentation, g: SetSystem) -> BranchReport:
    """All branch values of a closed carrier-labelled graph, from initial and
    root vertices alike: finite branches via the word tables, infinite ones via
    lasso evaluation on reachable (prefix, idempotent loop) pairs."""
    if g.rank != 0:
        raise PresentationError("branch semantics applies to closed graphs")
    kind = {}
    for v in g.vertices:
        kind[v] = _carrier_label(p, g.labels[v])

    succ: dict[str, list[str]] = {v: [] for v in g.vertices}
    for (v, d, t) in g.edges:
        if isinstance(t, Var):
            raise PresentationError("closed graphs cannot have variable exits")
        succ[v].append(t)

    values: set[str] = set()
    failure = None

    # prefix saturation
    prefixes: dict[str, set] = {v: set() for v in g.vertices}
    todo = []
    for v in set(g.initial) | set(g.roots):
        if EPS not in prefixes[v]:
            prefixes[v].add(EPS)
            todo.append((v, EPS))
    while todo:
        (v, s) = todo.pop()
        (kd, name) = kind[v]
        if kd == "y0":
            values.add(name if s is EPS else p.act_on(s, name))
            continue
        for w in succ[v]:
            s2 = name if s is EPS else p.mul(s, name)
            if s2 not in prefixes[w]:
                prefixes[w].add(s2)
                todo.append((w, s2))

    # loop value saturation: products along nonempty cycles
    reach: dict[tuple[str, str], set] = {}
    work = []
    for (v, d, t) in g.edges:
        if kind[v][0] != "y1":
            continue
        key = (v, t)
        val = kind[v][1]
        if val not in reach.setdefault(key, set()):
            reach[key].add(val)
            work.append((v, t, val))
    while work:
        (v, w, val) = work.pop()
        # extend on the right by every edge leaving w
        if kind[w][0] == "y1":
            for z in succ[w]:
                nv = p.mul(val, kind[w][1])
                key = (v, z)
                if nv not in reach.setdefault(key, set()):
                    reach[key].add(nv)
                    work.append((v, z, nv))

    for v in g.vertices:
        for e in reach.get((v, v), ()):
            if not p.is_idempotent(e):
                continue
            for s in prefixes[v]:
                val = p.omega[e] if s is EPS else p.act_on(s, p.omega[e])
                values.add(val)
                if failure is None and val not in p.accepting:
                    failure = ("lasso", v, s, e, val)

    if failure is None:
        for val in values:
            if val not in p.accepting:
                failure = ("finite", val)
                break
    return BranchReport(failure is None, frozenset(values), failure)


def universal_branch_check(p: Presentation, g: SetSystem) -> bool:
    """True iff every maximal branch evaluates into the accepting set."""
    return branch_values(p, g).ok


# compositions with reps and letters -------------------------------------------

def _entries(p: Presentation, u, label, nodes, labels):
    """Local expansion of one vertex; returns its entry node ids."""
    if isinstance(label, Sym) and label.name in p.letters:
        label = p.letter_rep(label.name)
    if isinstance(label, Sym):
        _carrier_label(p, label)
        nodes.append(u)
        labels[u] = label
        return [u]
    if isinstance(label, Rep):
        outs = []
        for tup in sorted(label.decomps):
            for i in range(1, label.rank + 1):
                nid = f"{u}#{'|'.join(tup)}#{i}"
                nodes.append(nid)
                labels[nid] = Sym(tup[i - 1], 1)
                outs.append(nid)
        if label.y0 is not None:
            nid = f"{u}#t"
            nodes.append(nid)
            labels[nid] = Sym(label.y0, 0)
            outs.append(nid)
        if not outs:
            raise PresentationError(f"vertex {u}: empty element representation")
        return outs
    raise PresentationError(f"vertex {u}: unsupported label {label!r}")


def expand_composition(p: Presentation, g: SetSystem) -> SetSystem:
    """Replace rep/letter labels by their deterministic-branching sums."""
    nodes: list[str] = []
    labels: dict = {}
    entries: dict[str, list[str]] = {}
    for u in g.vertices:
        entries[u] = _entries(p, u, g.labels[u], nodes, labels)
    edges = []
    for u in g.vertices:
        lab = g.labels[u]
        if isinstance(lab, Sym) and lab.name in p.letters:
            lab = p.letter_rep(lab.name)
        if isinstance(lab, Sym):
            for t in g.targets(u, 1):
                if isinstance(t, Var):
                    edges.append((u, 1, t))
                else:
                    edges.extend((u, 1, e) for e in entries[t])
        else:
            for node in entries[u]:
                if node.endswith("#t"):
                    continue
                i = int(node.rsplit("#", 1)[1])
                for t in g.targets(u, i):
                    if isinstance(t, Var):
                        edges.append((node, 1, t))
                    else:
                        edges.extend((node, 1, e) for e in entries[t])
    initial = [e for u in g.initial for e in entries[u]]
    roots = [e for u in g.roots for e in entries[u]]
    return SetSystem.make(g.rank, nodes, initial, roots, labels, edges)


def accepts_composition(p: Presentation, g: SetSystem) -> bool:
    """f <= eval(g) for a closed graph labelled by reps, letters or carriers."""
    return universal_branch_check(p, expand_composition(p, g))


# deterministic elements and the representation order ---------------------------

def det_elements(p: Presentation, rank: int) -> list[Rep]:
    if rank < 1:
        raise ValueError("deterministic tuples exist at rank >= 1")
    seen: dict = {}
    for tup in itertools.product(p.y1, repeat=rank):
        r = single(rank, tup)
        for other in list(seen.values()):
            if rep_leq(p, r, other) and rep_leq(p, other, r):
                break
        else:
            seen[tup] = r
    return list(seen.values())


def rep_leq(p: Presentation, x: Rep, y: Rep) -> bool:
    """x below y: every meet component of y dominates one of x (downward-closure
    rule on represented meets)."""
    if x.rank != y.rank:
        raise ValueError("rank mismatch")
    for c in y.decomps:
        if not any(all(p.leq1(b[i], c[i]) for i in range(x.rank)) for b in x.decomps):
            return False
    if y.y0 is not None:
        if x.y0 is None or not p.leq0(x.y0, y.y0):
            return False
    return True


# contexts over carrier elements ------------------------------------------------

def elem_piece(p: Presentation, part) -> SetSystem:
    """A rank-1 piece from a unary element name, a sequence of names (their
    sum), or a ready-made set-system."""
    if isinstance(part, SetSystem):
        return part
    if isinstance(part, str):
        return atomic(Sym(part, 1))
    return sum_many([atomic(Sym(x, 1)) for x in part])


def elem_context(p: Presentation, parts: Sequence) -> SetSystem:
    return make_context([elem_piece(p, q) for q in parts])


def plug_rep(p: Presentation, ctx: SetSystem, a: "Rep | SetSystem") -> SetSystem:
    filler = a if isinstance(a, SetSystem) else atomic(a)
    return plug(ctx, filler)


def extremal_context(p: Presentation, ts: Sequence[str], a: Rep) -> tuple[str, ...]:
    """A componentwise-minimal acceptance-preserving weakening of the context
    elements, searched exhaustively over the unary carrier."""
    k = len(ts) - 1
    if a.rank != k:
        raise ValueError("filler rank must match the context arity")

    def accept(tup) -> bool:
        return accepts_composition(p, plant(plug_rep(p, elem_context(p, tup), a)))

    if not accept(tuple(ts)):
        raise PresentationError("the starting context does not accept the element")
    z = [
        tup
        for tup in itertools.product(p.y1, repeat=k + 1)
        if all(p.leq1(tup[i], ts[i]) for i in range(k + 1)) and accept(tup)
    ]
    minimal = [
        tup for tup in z
        if not any(
            other != tup and all(p.leq1(other[i], tup[i]) for i in range(k + 1))
            for other in z
        )
    ]
    out = sorted(minimal)[0]
    # single-coordinate weakening minimality, verified per run
    for i in range(k + 1):
        for t in p.y1:
            widened = list(out)
            widened[i] = (out[i], t)
            parts = [elem_piece(p, w) for w in widened]
            if accepts_composition(p, plant(plug_rep(p, make_context(parts), a))):
                if not p.leq1(out[i], t):
                    raise PresentationError(
                        f"extremal context violates minimality at {i} with {t}"
                    )
    return out


# the deterministic refinement construction --------------------------------------

def loop_unit(p: Presentation, ms: Sequence[str], a: Rep, exit_dir: int) -> SetSystem:
    """The rank-1 set-system threading the element through the minimal context:
    entry at the element vertex, a root above it, loops through the m's, and a
    nondeterministic exit in the chosen direction."""
    k = len(ms) - 1
    vs = ["w", "m0"] + [f"m{d}" for d in range(1, k + 1)]
    labels = {"w": a, "m0": Sym(ms[0], 1)}
    for d in range(1, k + 1):
        labels[f"m{d}"] = Sym(ms[d], 1)
    edges = [("m0", 1, "w")]
    for d in range(1, k + 1):
        edges.append(("w", d, f"m{d}"))
        edges.append((f"m{d}", 1, "w"))
    edges.append(("w", exit_dir, Var(1)))
    return SetSystem.make(1, vs, ["w"], ["m0"], labels, edges)


def delta_system(p: Presentation, ms: Sequence[str], a: Rep) -> SetSystem:
    k = len(ms) - 1
    return sum_many([rename_vars((i,), loop_unit(p, ms, a, i), k) for i in range(1, k + 1)])


def identify_rank1(p: Presentation, g: SetSystem) -> str:
    """The unary carrier element behaving like the rank-1 composition g.

    Matching is behavioural: action on every nullary element (branch meets
    with the exit plugged) and the looped omega behaviour.  Exact on the
    shipped presentations; raises when no or several candidates match.
    """
    if g.rank != 1:
        raise ValueError("rank-1 compositions only")

    def plugged(t: str) -> SetSystem:
        term = f"__exit_{t}"
        edges = []
        for (v, d, x) in g.edges:
            if isinstance(x, Var):
                edges.append((v, d, term))
            else:
                edges.append((v, d, x))
        return SetSystem.make(
            0, list(g.vertices) + [term], g.initial, g.roots,
            {**g.labels, term: Sym(t, 0)}, edges,
        )

    def looped() -> SetSystem:
        edges = []
        for (v, d, x) in g.edges:
            if isinstance(x, Var):
                for i in g.initial:
                    edges.append((v, d, i))
            else:
                edges.append((v, d, x))
        return SetSystem.make(0, g.vertices, g.initial, g.roots, g.labels, edges)

    def meet_all(vals: Iterable[str]) -> str:
        vals = list(vals)
        if not vals:
            raise PresentationError("no branches to compare")
        out = vals[0]
        for v in vals[1:]:
            out = p.m0(out, v)
        return out

    behaviour = {}
    for t in p.y0:
        rep = branch_values(p, expand_composition(p, plugged(t)))
        behaviour[t] = meet_all(rep.values)
    loop_val = meet_all(branch_values(p, expand_composition(p, looped())).values)

    cands = []
    for y in p.y1:
        if any(p.act_on(y, t) != behaviour[t] for t in p.y0):
            continue
        e, _ = p.idempotent_power(y)
        if p.omega[e] != loop_val:
            continue
        cands.append(y)
    if len(cands) != 1:
        raise PresentationError(
            f"rank-1 identification found {len(cands)} candidates ({cands}); "
            "the carrier cannot represent this composition uniquely"
        )
    return cands[0]


@dataclass(frozen=True)
class DeltaResult:
    delta: "SetSystem | None"
    rep: Rep
    checks: dict


def check_delta(p: Presentation, ms: Sequence[str], a: Rep, dsys: "SetSystem | None",
                drep: Rep) -> dict:
    """The three properties of the refinement: deterministic representation,
    acceptance preservation (exact re-evaluation on the minimal context, both
    through the literal structure and through the identified tuple), and
    domination of the original element (representation order plus bounded
    context quantification)."""
    k = len(ms) - 1
    ctx = elem_context(p, tuple(ms))
    out = {"deterministic": len(drep.decomps) == 1 and drep.y0 is None}
    acc_rep = accepts_composition(p, plant(plug_rep(p, ctx, drep)))
    acc_lit = (
        accepts_composition(p, plant(plug_rep(p, ctx, dsys))) if dsys is not None else acc_rep
    )
    out["accepts_rep"] = acc_rep
    out["accepts_literal"] = acc_lit
    out["rep_leq"] = rep_leq(p, drep, a)
    consistent = True
    for tup in itertools.product(p.y1, repeat=k + 1):
        d = elem_context(p, tup)
        if accepts_composition(p, plant(plug_rep(p, d, drep))):
            if not accepts_composition(p, plant(plug_rep(p, d, a))):
                consistent = False
                break
    out["context_leq"] = consistent
    return out


def build_delta(p: Presentation, ms: Sequence[str], a: Rep,
                verify: bool = True) -> DeltaResult:
    """Refine an accepted element into a deterministic one below it.

    For arities 0 and 1 the element is already deterministic and is returned
    unchanged; otherwise the loop units through the extremal context are
    built, their values identified, and the three defining properties checked.
    """
    k = len(ms) - 1
    if k <= 1:
        res = DeltaResult(None, a, check_delta(p, ms, a, None, a))
    else:
        dsys = delta_system(p, ms, a)
        comps = tuple(identify_rank1(p, loop_unit(p, ms, a, i)) for i in range(1, k + 1))
        drep = single(k, comps)
        res = DeltaResult(dsys, drep, check_delta(p, ms, a, dsys, drep))
    if verify:
        failed = [k2 for k2, v in res.checks.items() if not v]
        if failed:
            raise PresentationError(f"refinement checks failed: {failed}")
    return res


# built-in presentation family ----------------------------------------------------

def forbidden_letter_presentation(letters: Sequence[tuple[str, int]],
                                  forbidden: Iterable[str]) -> Presentation:
    """Accepts exactly the closed systems that never reach a forbidden letter.

    Carriers: ok/dead at rank 1, acc/rej at rank 0; dead is absorbing and
    rejecting, orders dead < ok and rej < acc.
    """
    forbidden = set(forbidden)
    y1 = ("ok", "dead")
    y0 = ("acc", "rej")
    product = {
        ("ok", "ok"): "ok", ("ok", "dead"): "dead",
        ("dead", "ok"): "dead", ("dead", "dead"): "dead",
    }
    act = {
        ("ok", "acc"): "acc", ("ok", "rej"): "rej",
        ("dead", "acc"): "rej", ("dead", "rej"): "rej",
    }
    omega = {"ok": "acc", "dead": "rej"}
    meet1 = {
        ("ok", "ok"): "ok", ("ok", "dead"): "dead",
        ("dead", "ok"): "dead", ("dead", "dead"): "dead",
    }
    meet0 = {
        ("acc", "acc"): "acc", ("acc", "rej"): "rej",
        ("rej", "acc"): "rej", ("rej", "rej"): "rej",
    }
    lets = {}
    for (name, rank) in letters:
        mark = "dead" if name in forbidden else "ok"
        if rank == 0:
            lets[name] = Letter(name, 0, value0="rej" if name in forbidden else "acc")
        else:
            lets[name] = Letter(name, rank, decomps=frozenset([(mark,) * rank]))
    return Presentation(y1, y0, product, act, omega, meet1, meet0,
                        frozenset(["acc"]), lets)


def graded_cap_presentation(letters: Sequence[tuple[str, int]],
                            level: Mapping[str, str]) -> Presentation:
    """Three-graded family member: a branch is worth the worst grade it meets
    (hi > lo > dead); accepted unless some branch degrades to dead.

    ``level`` assigns each letter its grade.
    """
    y1 = ("hi", "lo", "dead")
    y0 = ("good", "poor", "rej")
    rank1 = {"dead": 0, "lo": 1, "hi": 2}
    rank0 = {"rej": 0, "poor": 1, "good": 2}
    cap = {"hi": "good", "lo": "poor", "dead": "rej"}

    def min1(a, b):
        return a if rank1[a] <= rank1[b] else b

    def min0(a, b):
        return a if rank0[a] <= rank0[b] else b

    product = {(a, b): min1(a, b) for a in y1 for b in y1}
    act = {(a, t): min0(cap[a], t) for a in y1 for t in y0}
    omega = {a: cap[a] for a in y1}
    meet1 = dict(product)
    meet0 = {(t, t2): min0(t, t2) for t in y0 for t2 in y0}
    lets = {}
    for (name, rank) in letters:
        lv = level[name]
        if rank == 0:
            lets[name] = Letter(name, 0, value0=cap[lv])
        else:
            lets[name] = Letter(name, rank, decomps=frozenset([(lv,) * rank]))
    return Presentation(y1, y0, product, act, omega, meet1, meet0,
                        frozenset(["good", "poor"]), lets)


# serialization --------------------------------------------------------------------

def presentation_to_doc(p: Presentation) -> dict:
    def tab2(t):
        return {f"{a},{b}": c for ((a, b), c) in sorted(t.items())}

    letters = []
    for l in sorted(p.letters.values(), key=lambda l: l.name):
        d = {"name": l.name, "rank": l.rank}
        if l.rank == 0:
            d["value0"] = l.value0
        else:
            d["decomps"] = sorted(list(t) for t in l.decomps)
        letters.append(d)
    return {
        "Y1": list(p.y1),
        "Y0": list(p.y0),
        "product": tab2(p.product),
        "act": tab2(p.act),
        "omega": dict(sorted(p.omega.items())),
        "meet1": tab2(p.meet1),
        "meet0": tab2(p.meet0),
        "P": sorted(p.accepting),
        "letters": letters,
    }


def presentation_from_doc(doc: dict) -> Presentation:
    def untab(t):
        return {tuple(k.split(",")): v for k, v in t.items()}

    lets = {}
    for l in doc["letters"]:
        if l["rank"] == 0:
            lets[l["name"]] = Letter(l["name"], 0, value0=l["value0"])
        else:
            lets[l["name"]] = Letter(
                l["name"], int(l["rank"]), decomps=frozenset(tuple(t) for t in l["decomps"])
            )
    return Presentation(
        tuple(doc["Y1"]),
        tuple(doc["Y0"]),
        untab(doc["product"]),
        untab(doc["act"]),
        dict(doc["omega"]),
        untab(doc["meet1"]),
        untab(doc["meet0"]),
        frozenset(doc["P"]),
        lets,
    )
