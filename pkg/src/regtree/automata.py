"""Unfold-automata over closed systems, parity machinery, compilation from
algebra presentations, bisimulation closure, and disjunctive formulas.

An unfold-automaton is stateless: per symbol it offers tuples of unary types
(one per direction) and per nullary symbol a set of terminal types; acceptance
constrains the type word along every branch, given either by the branch
semantics of a presentation (Wilke mode) or by a deterministic parity
automaton on types (DPA mode, min-even on transitions).  Membership is decided
on the finite system directly: a parity game in DPA mode, strategy search with
prefix-value memory in Wilke mode.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .core import RankedAlphabet, SetSystem, Sym, parse_ts_symbol, validate
from .monad import pid
from .wilke import EPS, Presentation, omega_monotone, universal_branch_check

EVE = "E"
ADAM = "A"


class EngineLimit(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# parity games

@dataclass
class ParityGame:
    """Min-even parity game: positions carry owner and priority."""

    owner: dict
    priority: dict
    moves: dict
    initial: object = None

    def positions(self):
        return list(self.owner)


def close_dead_ends(g: ParityGame) -> ParityGame:
    """Dead ends lose for their owner: reroute into a losing self-loop sink."""
    owner = dict(g.owner)
    prio = dict(g.priority)
    moves = {p: list(ms) for p, ms in g.moves.items()}
    sink_e = ("__sink", EVE)
    sink_a = ("__sink", ADAM)
    need_e = need_a = False
    for p in list(owner):
        if not moves.get(p):
            if owner[p] == EVE:
                moves[p] = [sink_e]
                need_e = True
            else:
                moves[p] = [sink_a]
                need_a = True
    if need_e:
        owner[sink_e], prio[sink_e], moves[sink_e] = EVE, 1, [sink_e]
    if need_a:
        owner[sink_a], prio[sink_a], moves[sink_a] = ADAM, 0, [sink_a]
    return ParityGame(owner, prio, moves, g.initial)


def _attractor(positions: set, moves, owner, player: str, targets: set):
    """Player-attractor of the target set within the subgame; returns the set
    and the attraction strategy for the player's newly attracted positions."""
    attr = set(targets)
    strat = {}
    preds: dict = {p: [] for p in positions}
    for p in positions:
        for q in moves[p]:
            if q in preds:
                preds[q].append(p)
    out_deg = {p: sum(1 for q in moves[p] if q in positions) for p in positions}
    count = dict(out_deg)
    todo = list(targets)
    while todo:
        q = todo.pop()
        for p in preds[q]:
            if p in attr:
                continue
            if owner[p] == player:
                attr.add(p)
                strat[p] = q
                todo.append(p)
            else:
                count[p] -= 1
                if count[p] == 0:
                    attr.add(p)
                    todo.append(p)
    return attr, strat


def zielonka(g: ParityGame) -> tuple[dict, dict]:
    """Winning regions and positional strategies (both players), exact."""
    g = close_dead_ends(g)

    def solve(positions: set):
        if not positions:
            return set(), set(), {}, {}
        d = min(g.priority[p] for p in positions)
        player = EVE if d % 2 == 0 else ADAM
        opp = ADAM if player == EVE else EVE
        targets = {p for p in positions if g.priority[p] == d}
        moves_in = {p: [q for q in g.moves[p] if q in positions] for p in positions}
        a, strat_a = _attractor(positions, moves_in, g.owner, player, targets)
        rest = positions - a
        we, wa, se, sa = solve(rest)
        win_opp = wa if player == EVE else we
        strat_player = strat_a
        if not win_opp:
            win_p = set(positions)
            # inside the target/attractor, any move staying in the region works
            for p in win_p:
                if g.owner[p] == player and p not in strat_player:
                    inner = se if player == EVE else sa
                    if p in inner:
                        strat_player[p] = inner[p]
                    else:
                        strat_player[p] = next(q for q in moves_in[p] if q in win_p)
            if player == EVE:
                return win_p, set(), strat_player, {}
            return set(), win_p, {}, strat_player
        b, strat_b = _attractor(positions, moves_in, g.owner, opp, set(win_opp))
        we2, wa2, se2, sa2 = solve(positions - b)
        opp_strat = dict(strat_b)
        opp_strat.update(sa if opp == ADAM else se)
        opp_strat.update(sa2 if opp == ADAM else se2)
        player_strat = dict(se2 if player == EVE else sa2)
        win_opp_total = b | (wa2 if opp == ADAM else we2)
        win_p_total = positions - win_opp_total
        for p in win_opp_total:
            if g.owner[p] == opp and p not in opp_strat:
                opp_strat[p] = next(q for q in moves_in[p] if q in win_opp_total)
        if player == EVE:
            return win_p_total, win_opp_total, player_strat, opp_strat
        return win_opp_total, win_p_total, opp_strat, player_strat

    we, wa, se, sa = solve(set(g.positions()))
    winner = {p: (EVE if p in we else ADAM) for p in g.positions()}
    strategy = {}
    for p in g.positions():
        if winner[p] == EVE and g.owner[p] == EVE and p in se:
            strategy[p] = se[p]
        if winner[p] == ADAM and g.owner[p] == ADAM and p in sa:
            strategy[p] = sa[p]
    return winner, strategy


# ---------------------------------------------------------------------------
# acceptance specifications

@dataclass(frozen=True)
class WilkeAcceptance:
    presentation: Presentation

    @property
    def kind(self):
        return "wilke"


@dataclass(frozen=True)
class DpaAcceptance:
    """Deterministic parity automaton on type words, min-even on transitions;
    terminal types checked by a finality table."""

    states: tuple[str, ...]
    initial: str
    trans: dict  # (q, x1) -> q'
    prio: dict  # (q, x1) -> int
    final: frozenset  # accepted (q, x0) pairs

    @property
    def kind(self):
        return "dpa"

    def check_total(self, x1: Sequence[str]):
        for q in self.states:
            for b in x1:
                if (q, b) not in self.trans or (q, b) not in self.prio:
                    raise ValueError(f"DPA not total at ({q},{b})")


@dataclass(frozen=True)
class UnfoldAutomaton:
    x1: tuple[str, ...]
    x0: tuple[str, ...]
    alphabet: RankedAlphabet
    delta_plus: dict  # symbol name -> frozenset of tuples over x1
    delta_zero: dict  # symbol name -> frozenset over x0
    omega: "WilkeAcceptance | DpaAcceptance"

    def __post_init__(self):
        for sym in self.alphabet:
            if sym.rank == 0:
                continue
            for tup in self.delta_plus.get(sym.name, ()):
                if len(tup) != sym.rank:
                    raise ValueError(f"tuple length mismatch for {sym.name}")
        if self.omega.kind == "dpa":
            self.omega.check_total(self.x1)

    def delta(self, sym: Sym):
        if sym.rank == 0:
            return self.delta_zero.get(sym.name, frozenset())
        return self.delta_plus.get(sym.name, frozenset())


@dataclass(frozen=True)
class Run:
    kind: str  # "simple" | "dpa" | "prefix"
    choices: dict
    initial_memory: object = None


# ---------------------------------------------------------------------------
# run checking

def _require_closed_system(s: SetSystem):
    rep = validate(s)
    if not rep.ok or not rep.is_system or s.rank != 0:
        raise ValueError("automata run on closed systems")


def _port_graph(s: SetSystem, choice: Mapping[str, object]) -> SetSystem:
    """Edge-type reading of a run: one port per (vertex, direction) labelled by
    the chosen tuple component; terminals labelled by the chosen nullary type."""
    nodes, labels, edges = [], {}, []

    def ports(v):
        k = s.labels[v].rank
        if k == 0:
            return [f"{v}℗t"]
        return [f"{v}℗{d}" for d in range(1, k + 1)]

    for v in s.vertices:
        k = s.labels[v].rank
        ch = choice[v]
        for node in ports(v):
            nodes.append(node)
        if k == 0:
            labels[f"{v}℗t"] = Sym(ch, 0)
        else:
            for d in range(1, k + 1):
                labels[f"{v}℗{d}"] = Sym(ch[d - 1], 1)
            for d in range(1, k + 1):
                (w,) = s.targets(v, d)
                for nxt in ports(w):
                    edges.append((f"{v}℗{d}", 1, nxt))
    (i0,) = s.initial
    return SetSystem.make(0, nodes, ports(i0), [], labels, edges)


def _dpa_all_branches_ok(dpa: DpaAcceptance, port: SetSystem) -> bool:
    """Every branch of the port graph is accepted by the DPA."""
    start = [(v, dpa.initial) for v in port.initial]
    seen = set(start)
    todo = list(start)
    edges = []  # (node, node, priority)
    while todo:
        (v, q) = todo.pop()
        lab = port.labels[v]
        if lab.rank == 0:
            if (q, lab.name) not in dpa.final:
                return False
            continue
        q2 = dpa.trans[(q, lab.name)]
        pr = dpa.prio[(q, lab.name)]
        for w in port.targets(v, 1):
            edges.append(((v, q), (w, q2), pr))
            if (w, q2) not in seen:
                seen.add((w, q2))
                todo.append((w, q2))
    # a rejected branch exists iff some reachable cycle has odd minimal priority
    prios = sorted({pr for (_, _, pr) in edges})
    for p in prios:
        if p % 2 == 0:
            continue
        sub = [(a, b) for (a, b, pr) in edges if pr >= p]
        marked = {(a, b) for (a, b, pr) in edges if pr == p}
        if _cycle_through(sub, marked):
            return False
    return True


def _cycle_through(edges: list, marked: set) -> bool:
    """Does some cycle of the graph use a marked edge? (SCC analysis)"""
    adj: dict = {}
    nodes = set()
    for (a, b) in edges:
        adj.setdefault(a, []).append(b)
        nodes.add(a)
        nodes.add(b)
    index = {}
    low = {}
    onstack = {}
    stack = []
    comp = {}
    counter = itertools.count()
    cidx = itertools.count()

    def strong(v0):
        work = [(v0, iter(adj.get(v0, ())))]
        index[v0] = low[v0] = next(counter)
        stack.append(v0)
        onstack[v0] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = next(counter)
                    stack.append(w)
                    onstack[w] = True
                    work.append((w, iter(adj.get(w, ()))))
                    advanced = True
                    break
                elif onstack.get(w):
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                cid = next(cidx)
                while True:
                    w = stack.pop()
                    onstack[w] = False
                    comp[w] = cid
                    if w == v:
                        break
            if work:
                u, _ = work[-1]
                low[u] = min(low[u], low[v])

    for v in nodes:
        if v not in index:
            strong(v)
    # a marked edge inside one SCC closes a cycle through it
    return any(comp[a] == comp[b] for (a, b) in marked)


def product_system(s: SetSystem, run: Run, aut: UnfoldAutomaton) -> tuple[SetSystem, dict]:
    """Unfold a memoried run into a plain system with per-vertex choices."""
    _require_closed_system(s)
    (i0,) = s.initial

    def step(mem, lab, tup, d):
        if run.kind == "dpa":
            return aut.omega.trans[(mem, tup[d - 1])]
        b = tup[d - 1]
        return b if mem is EPS else aut.omega.presentation.mul(mem, b)

    start = (i0, run.initial_memory)
    seen = {start}
    todo = [start]
    vs, labels, edges, choice = [], {}, [], {}
    while todo:
        (v, mem) = todo.pop()
        nid = pid(v, mem)
        vs.append(nid)
        labels[nid] = s.labels[v]
        ch = run.choices[(v, mem)]
        choice[nid] = ch
        k = s.labels[v].rank
        for d in range(1, k + 1):
            (w,) = s.targets(v, d)
            mem2 = step(mem, s.labels[v], ch, d)
            edges.append((nid, d, pid(w, mem2)))
            if (w, mem2) not in seen:
                seen.add((w, mem2))
                todo.append((w, mem2))
    prod = SetSystem.make(0, vs, [pid(*start)], [], labels, edges)
    return prod, choice


def check_run(aut: UnfoldAutomaton, s: SetSystem, run: Run) -> bool:
    """Local transition conditions at every vertex plus the branch condition."""
    _require_closed_system(s)
    if run.kind in ("dpa", "prefix"):
        prod, choice = product_system(s, run, aut)
        return check_run(aut, prod, Run("simple", choice))
    choice = run.choices
    for v in s.vertices:
        sym = s.labels[v]
        if v not in choice:
            raise ValueError(f"run undefined at vertex {v}")
        if choice[v] not in aut.delta(sym):
            return False
    port = _port_graph(s, choice)
    if aut.omega.kind == "wilke":
        return universal_branch_check(aut.omega.presentation, port)
    return _dpa_all_branches_ok(aut.omega, port)


# ---------------------------------------------------------------------------
# membership

def _maximal_tuples(p: Presentation, tuples: Iterable[tuple]) -> list[tuple]:
    ts = list(tuples)
    out = []
    for t in ts:
        if not any(
            o != t and all(p.leq1(t[i], o[i]) for i in range(len(t))) for o in ts
        ):
            out.append(t)
    return sorted(set(out))


def accepts(aut: UnfoldAutomaton, s: SetSystem,
            strategy_budget: int = 500_000) -> "Run | None":
    """A checkable accepting run, or None.

    DPA mode reduces to a parity game (Eve picks tuples, Adam directions,
    priorities from the DPA).  Wilke mode enumerates Eve strategies with the
    branch-prefix value as memory, restricted to maximal tuples when the
    presentation's omega is monotone; the branch condition is checked per
    strategy graph.
    """
    _require_closed_system(s)
    for v in s.vertices:
        if s.labels[v].name not in {sym.name for sym in aut.alphabet}:
            raise ValueError(f"symbol {s.labels[v].name} outside the automaton alphabet")
    if aut.omega.kind == "dpa":
        return _accepts_dpa(aut, s)
    return _accepts_wilke(aut, s, strategy_budget)


def _accepts_dpa(aut: UnfoldAutomaton, s: SetSystem) -> "Run | None":
    dpa: DpaAcceptance = aut.omega
    (i0,) = s.initial
    owner, prio, moves = {}, {}, {}
    neutral = max(list(dpa.prio.values()) + [0]) + 2

    def epos(v, q):
        return ("E", v, q)

    start = epos(i0, dpa.initial)
    todo = [(i0, dpa.initial)]
    seen = {(i0, dpa.initial)}
    win_sink = ("WIN",)
    used_win = False
    while todo:
        (v, q) = todo.pop()
        pe = epos(v, q)
        owner[pe], prio[pe], moves[pe] = EVE, neutral, []
        sym = s.labels[v]
        if sym.rank == 0:
            for x in aut.delta(sym):
                if (q, x) in dpa.final:
                    moves[pe].append(win_sink)
                    used_win = True
            continue
        for tup in sorted(aut.delta(sym)):
            pa = ("A", v, q, tup)
            owner[pa], prio[pa], moves[pa] = ADAM, neutral, []
            moves[pe].append(pa)
            for d in range(1, sym.rank + 1):
                (w,) = s.targets(v, d)
                q2 = dpa.trans[(q, tup[d - 1])]
                pm = ("M", v, q, tup, d)
                owner[pm], prio[pm] = EVE, dpa.prio[(q, tup[d - 1])]
                moves[pm] = [epos(w, q2)]
                moves[pa].append(pm)
                if (w, q2) not in seen:
                    seen.add((w, q2))
                    todo.append((w, q2))
    if used_win:
        owner[win_sink], prio[win_sink], moves[win_sink] = ADAM, 0, [win_sink]
    game = ParityGame(owner, prio, moves, start)
    winner, strat = zielonka(game)
    if winner[start] != EVE:
        return None
    choices = {}
    for p, mv in strat.items():
        if p[0] != "E" or winner[p] != EVE:
            continue
        (_, v, q) = p
        if mv == win_sink:
            sym = s.labels[v]
            choices[(v, q)] = sorted(x for x in aut.delta(sym) if (q, x) in dpa.final)[0]
        elif isinstance(mv, tuple) and mv[0] == "A":
            choices[(v, q)] = mv[3]
    run = Run("dpa", choices, dpa.initial)
    return run


def _accepts_wilke(aut: UnfoldAutomaton, s: SetSystem, budget: int) -> "Run | None":
    p = aut.omega.presentation
    restrict = omega_monotone(p)
    (i0,) = s.initial

    opts: dict = {}
    for v in s.vertices:
        sym = s.labels[v]
        if sym.rank == 0:
            opts[v] = sorted(aut.delta(sym))
        else:
            tuples = aut.delta(sym)
            opts[v] = _maximal_tuples(p, tuples) if restrict else sorted(tuples)

    work = [0]

    def extend(choice: dict, frontier: list):
        """Depth-first over positions (v, prefix-value) in discovery order."""
        work[0] += 1
        if work[0] > budget:
            raise EngineLimit("strategy search budget exceeded")
        if not frontier:
            simple = {}
            prod, chs = product_system(s, Run("prefix", choice, EPS), aut)
            if check_run(aut, prod, Run("simple", chs)):
                return dict(choice)
            return None
        (v, mem) = frontier[0]
        rest = frontier[1:]
        sym = s.labels[v]
        for ch in opts[v]:
            choice[(v, mem)] = ch
            new = []
            if sym.rank > 0:
                for d in range(1, sym.rank + 1):
                    (w,) = s.targets(v, d)
                    b = ch[d - 1]
                    mem2 = b if mem is EPS else p.mul(mem, b)
                    pos = (w, mem2)
                    if pos not in choice and pos not in rest and pos not in new:
                        new.append(pos)
            got = extend(choice, rest + new)
            if got is not None:
                return got
            del choice[(v, mem)]
        return None

    for v in s.vertices:
        if not opts[v]:
            if v in s.reachable(s.initial):
                return None
    got = extend({}, [(i0, EPS)])
    if got is None:
        return None
    return Run("prefix", got, EPS)


# ---------------------------------------------------------------------------
# compilation and bisimulation closure

def compile_algebra(p: Presentation) -> UnfoldAutomaton:
    """Types are the carriers; per letter, the componentwise downward closure
    of its decomposition tuples; acceptance is the presentation itself."""
    from .wilke import validate_presentation

    bad = validate_presentation(p)
    if bad:
        raise ValueError(f"invalid presentation: {bad[:3]}")
    dplus = {}
    dzero = {}
    for l in p.letters.values():
        if l.rank == 0:
            dzero[l.name] = frozenset([l.value0])
            continue
        closed = set()
        for c in l.decomps:
            for b in itertools.product(p.y1, repeat=l.rank):
                if all(p.leq1(b[i], c[i]) for i in range(l.rank)):
                    closed.add(b)
        dplus[l.name] = frozenset(closed)
    return UnfoldAutomaton(tuple(p.y1), tuple(p.y0), p.alphabet(), dplus, dzero,
                           WilkeAcceptance(p))


def surjections(n: int, m: int):
    """All surjective maps [n] -> [m] as tuples."""
    for f in itertools.product(range(1, m + 1), repeat=n):
        if set(f) == set(range(1, m + 1)):
            yield f


def bisim_closure(aut: UnfoldAutomaton) -> UnfoldAutomaton:
    """Close the transition table under surjective re-indexing of child tuples,
    per valuation symbol: acceptance becomes invariant under child duplication
    and permutation of bisimilar encodings."""
    by_val: dict[frozenset, dict[int, str]] = {}
    for sym in aut.alphabet:
        props, rank = parse_ts_symbol(sym)
        by_val.setdefault(props, {})[rank] = sym.name
    dplus = {}
    for props, ranks in by_val.items():
        for n, name in ranks.items():
            if n == 0:
                continue
            out = set()
            for m in range(1, n + 1):
                if m not in ranks:
                    continue
                for tup in aut.delta_plus.get(ranks[m], ()):
                    for sg in surjections(n, m):
                        out.add(tuple(tup[sg[i] - 1] for i in range(n)))
            dplus[name] = frozenset(out)
    return UnfoldAutomaton(aut.x1, aut.x0, aut.alphabet, dplus, dict(aut.delta_zero),
                           aut.omega)


def emit_disjunctive_formula(aut: UnfoldAutomaton) -> str:
    """The transition shape per valuation: a disjunction over arities and
    tuples of "some children of each listed type, no child of another type"."""
    by_val: dict = {}
    for sym in aut.alphabet:
        props, rank = parse_ts_symbol(sym)
        key = "&".join(sorted(props))
        by_val.setdefault(key, {})[rank] = sym.name
    lines = []
    for key in sorted(by_val):
        ranks = by_val[key]
        disjuncts = []
        if 0 in ranks and aut.delta_zero.get(ranks[0]):
            disjuncts.append("∀z. false")
        seen_multisets = set()
        for n in sorted(r for r in ranks if r > 0):
            for tup in sorted(aut.delta_plus.get(ranks[n], ())):
                ms = tuple(sorted(tup))
                if ms in seen_multisets:
                    continue
                seen_multisets.add(ms)
                xs = " ∧ ".join(f"{b}(x{i})" for i, b in enumerate(tup, start=1))
                exists = ",".join(f"x{i}" for i in range(1, n + 1))
                kinds = sorted(set(tup))
                if len(kinds) == 1:
                    forall = f"∀z. {kinds[0]}(z)"
                else:
                    forall = "∀z.(" + " ∨ ".join(f"{b}(z)" for b in kinds) + ")"
                disjuncts.append(f"∃{exists}. {xs} ∧ {forall}")
        head = f"delta(nu({key})) ="
        if not disjuncts:
            lines.append(f"{head} false")
        elif len(disjuncts) == 1:
            lines.append(f"{head} {disjuncts[0]}")
        else:
            lines.append(head)
            lines.append("    " + disjuncts[0])
            for d in disjuncts[1:]:
                lines.append("  ∨ " + d)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# serialization

def automaton_to_doc(aut: UnfoldAutomaton) -> dict:
    from .core import alphabet_to_doc
    from .wilke import presentation_to_doc

    if aut.omega.kind == "wilke":
        om = {"kind": "wilke", "presentation": presentation_to_doc(aut.omega.presentation)}
    else:
        om = {
            "kind": "dpa",
            "states": list(aut.omega.states),
            "initial": aut.omega.initial,
            "trans": {f"{q},{b}": q2 for ((q, b), q2) in sorted(aut.omega.trans.items())},
            "prio": {f"{q},{b}": pr for ((q, b), pr) in sorted(aut.omega.prio.items())},
            "final": sorted([q, x] for (q, x) in aut.omega.final),
        }
    delta = {}
    for name, tups in sorted(aut.delta_plus.items()):
        delta[name] = sorted(list(t) for t in tups)
    for name, xs in sorted(aut.delta_zero.items()):
        delta[name] = sorted(xs)
    return {
        "X1": list(aut.x1),
        "X0": list(aut.x0),
        "alphabet": alphabet_to_doc(aut.alphabet),
        "delta": delta,
        "omega": om,
    }


def automaton_from_doc(doc: dict) -> UnfoldAutomaton:
    from .core import alphabet_from_doc
    from .wilke import presentation_from_doc

    alphabet = alphabet_from_doc(doc["alphabet"])
    om = doc["omega"]
    if om["kind"] == "wilke":
        omega = WilkeAcceptance(presentation_from_doc(om["presentation"]))
    else:
        omega = DpaAcceptance(
            tuple(om["states"]),
            om["initial"],
            {tuple(k.split(",")): v for k, v in om["trans"].items()},
            {tuple(k.split(",")): int(v) for k, v in om["prio"].items()},
            frozenset((q, x) for q, x in om["final"]),
        )
    dplus, dzero = {}, {}
    for sym in alphabet:
        if sym.name not in doc["delta"]:
            continue
        val = doc["delta"][sym.name]
        if sym.rank == 0:
            dzero[sym.name] = frozenset(val)
        else:
            dplus[sym.name] = frozenset(tuple(t) for t in val)
    return UnfoldAutomaton(tuple(doc["X1"]), tuple(doc["X0"]), alphabet, dplus, dzero, omega)
