"""Rankwise-finite algebras over systems: interface, the built-in reachability
algebra, recognition, and law validation.

An algebra evaluates element-labelled systems into elements so that atomic
units are fixed points and evaluation commutes with flattening.  Algebras are
supplied as code plug-ins honouring `AlgebraBase`; only the reachability
algebra ships built in.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import SetSystem, Sym, Var, validate
from .monad import flatten, is_nested, slift


@dataclass(frozen=True)
class ReachElem:
    """Element of the reachability algebra: bottom, or a set of live directions."""

    rank: int
    value: "frozenset[int] | None"  # None encodes bottom

    def sort_key(self):
        if self.value is None:
            return ("reach", self.rank, -1, ())
        return ("reach", self.rank, len(self.value), tuple(sorted(self.value)))

    def __repr__(self):
        if self.value is None:
            return f"bot_{self.rank}"
        return f"{{{','.join(map(str, sorted(self.value)))}}}_{self.rank}"


def bot(rank: int) -> ReachElem:
    return ReachElem(rank, None)


def full(rank: int) -> ReachElem:
    return ReachElem(rank, frozenset(range(1, rank + 1)))


class AlgebraBase:
    """Contract for rankwise-finite algebras.

    Implementations must be stateless (or internally synchronised): evaluation
    is called from batch loops.
    """

    name = "abstract"
    max_rank = 6

    def carrier(self, rank: int) -> Sequence:
        raise NotImplementedError

    def eval(self, s: SetSystem):
        """Value of an element-labelled system."""
        raise NotImplementedError

    def letter(self, sym: Sym):
        """The recognising morphism on alphabet symbols."""
        raise NotImplementedError

    def eval_symbols(self, s: SetSystem):
        """Value of a symbol-labelled system through the letter map."""
        return self.eval(slift(self.letter, s))


class ReachabilityAlgebra(AlgebraBase):
    """A_n = powerset of [n] plus bottom; eval follows live directions only.

    A vertex labelled X continues along directions in X; reaching a bottom
    label poisons the whole value, otherwise the value is the set of variable
    indices reachable from the initial vertex.
    """

    name = "reach"

    def __init__(self, forbidden: Iterable[str] = (), max_rank: int = 6):
        self.forbidden = frozenset(forbidden)
        self.max_rank = max_rank

    def carrier(self, rank: int) -> list[ReachElem]:
        subs = [frozenset()]
        for i in range(1, rank + 1):
            subs = subs + [s | {i} for s in subs]
        out = [ReachElem(rank, None)] + [ReachElem(rank, s) for s in subs]
        return out

    def letter(self, sym: Sym) -> ReachElem:
        if sym.name in self.forbidden:
            return bot(sym.rank)
        return full(sym.rank)

    def eval(self, s: SetSystem) -> ReachElem:
        rep = validate(s)
        if not rep.ok or not rep.is_system:
            raise ValueError("the algebra evaluates systems")
        (i0,) = s.initial
        seen = set()
        todo = [i0]
        vars_hit: set[int] = set()
        while todo:
            v = todo.pop()
            if v in seen:
                continue
            seen.add(v)
            e: ReachElem = s.labels[v]
            if not isinstance(e, ReachElem):
                raise TypeError(f"vertex {v} is not labelled by a reachability element")
            if e.value is None:
                return bot(s.rank)
            for d in e.value:
                for t in s.targets(v, d):
                    if isinstance(t, Var):
                        vars_hit.add(t.index)
                    else:
                        todo.append(t)
        return ReachElem(s.rank, frozenset(vars_hit))


def recognises(alg: AlgebraBase, accepting, s: SetSystem) -> bool:
    """Membership of a closed symbol-labelled system in the recognised language."""
    if s.rank != 0:
        raise ValueError("recognition is defined on closed systems")
    return alg.eval_symbols(s) in set(accepting)


@dataclass(frozen=True)
class LawFailure:
    law: str
    detail: str


def check_algebra_laws(alg: AlgebraBase, nested_samples: Iterable[SetSystem],
                       context_samples: Iterable[tuple[SetSystem, SetSystem]] = ()) -> list[LawFailure]:
    """Evaluate both sides of the defining identities on every sample."""
    out: list[LawFailure] = []
    for i, n in enumerate(nested_samples):
        if not is_nested(n):
            raise ValueError("law samples must be nested systems")
        lhs = alg.eval(slift(alg.eval, n))
        rhs = alg.eval(flatten(n))
        if lhs != rhs:
            out.append(LawFailure("flatten", f"sample {i}: {lhs} != {rhs}"))
    from .monad import plug, plug_elem

    for i, (c, s) in enumerate(context_samples):
        lhs = alg.eval(plug(c, s))
        rhs = alg.eval(plug_elem(c, alg.eval(s)))
        if lhs != rhs:
            out.append(LawFailure("context", f"sample {i}: {lhs} != {rhs}"))
    return out
