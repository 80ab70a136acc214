"""Finite systems and set-systems for regular trees: the flatten monad,
morphisms and pullbacks, equivalence deciders, yields and profiles,
recognising algebras, finite presentations with branch semantics, and the
compilation pipeline to unfold-automata and disjunctive formulas."""

from .core import (
    RankedAlphabet,
    SetSystem,
    Sym,
    TransitionSystem,
    Var,
    canonical_key,
    canonicalize,
    decode_ts,
    encode_ts,
    from_expression,
    iso,
    validate,
)
from .monad import atomic, flatten, make_context, pieces, plant, plug, sum_ss, uproot

__all__ = [
    "RankedAlphabet", "SetSystem", "Sym", "TransitionSystem", "Var",
    "canonical_key", "canonicalize", "decode_ts", "encode_ts",
    "from_expression", "iso", "validate",
    "atomic", "flatten", "make_context", "pieces", "plant", "plug",
    "sum_ss", "uproot",
]

__version__ = "0.1.0"
