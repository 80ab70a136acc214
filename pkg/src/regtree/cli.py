"""Command-line entry point.

Subcommands mirror the library surface: validation, the monad operations,
morphism queries, the equivalence deciders, yields and profiles, recognition,
presentation operations, automata, corpus generation, and the desk-example
suite.  Every command is deterministic in its inputs and the seed; reports go
to stdout as JSON (plus optional files and figures).

Exit codes: 0 success / decision "yes"; 1 decision "no"; 2 input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import corpus as corpusmod
from .algebras import ReachabilityAlgebra, ReachElem, bot
from .automata import (
    Run,
    accepts,
    automaton_from_doc,
    automaton_to_doc,
    bisim_closure,
    check_run,
    compile_algebra,
    emit_disjunctive_formula,
)
from .core import (
    RankedAlphabet,
    SetSystem,
    alphabet_from_doc,
    canonical_key,
    from_expression,
    iso,
    system_from_doc,
    system_to_doc,
    to_dot,
    ts_from_doc,
    ts_to_doc,
    validate,
)
from .equivalences import bisimilar, bisimilar_systems, unfold_equivalent
from .monad import flatten, make_context, pieces, plug
from .morphisms import Morphism, check_morphism, find_morphism, pullback
from .report import (
    draw_system,
    make_report,
    render_corpus_figure,
    render_suite_figure,
    write_json,
    write_tsv,
)
from .resolutions import direct_resolutions, profile, yields
from .wilke import (
    Rep,
    build_delta,
    presentation_from_doc,
    presentation_to_doc,
    eval_lasso,
    eval_word,
    extremal_context,
    forbidden_letter_presentation,
    single,
    validate_presentation,
)


class InputError(Exception):
    pass


def _load(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"{path}: {e}") from None


def _load_system(path: str, alphabet: "RankedAlphabet | None") -> SetSystem:
    doc = _load(path)
    try:
        return system_from_doc(doc, alphabet)
    except (KeyError, ValueError, TypeError) as e:
        raise InputError(f"{path}: {e}") from None


def _load_alphabet(args) -> "RankedAlphabet | None":
    if getattr(args, "alphabet", None):
        return alphabet_from_doc(_load(args.alphabet))
    return None


def workers() -> int:
    try:
        return max(1, int(os.environ.get("REGTREE_WORKERS", "1")))
    except ValueError:
        return 1


def map_batch(fn, items):
    """Deterministic parallel map: results merged in input order."""
    n = workers()
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _emit(args, command: str, ok: bool, result) -> int:
    doc = make_report(command, ok, result)
    text = write_json(doc, getattr(args, "report", None))
    sys.stdout.write(text)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# subcommand handlers

def cmd_validate(args) -> int:
    alph = _load_alphabet(args)
    s = _load_system(args.input, alph)
    rep = validate(s)
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(to_dot(s))
    if args.figure:
        draw_system(s, args.figure)
    return _emit(args, "validate", rep.ok, {
        "kind": rep.kind,
        "violations": [str(v) for v in rep.violations],
    })


def cmd_flatten(args) -> int:
    alph = _load_alphabet(args)
    s = _load_system(args.input, alph)
    out = flatten(s)
    doc = system_to_doc(out)
    if args.out:
        write_json(doc, args.out)
    return _emit(args, "flatten", True, doc)


def cmd_plug(args) -> int:
    alph = _load_alphabet(args)
    c = _load_system(args.context, alph)
    s = _load_system(args.filler, alph)
    doc = system_to_doc(plug(c, s))
    if args.out:
        write_json(doc, args.out)
    return _emit(args, "plug", True, doc)


def cmd_pieces(args) -> int:
    alph = _load_alphabet(args)
    c = _load_system(args.input, alph)
    ps = pieces(c)
    return _emit(args, "pieces", True, [system_to_doc(p) for p in ps])


def cmd_context(args) -> int:
    alph = _load_alphabet(args)
    parts = [_load_system(p, alph) for p in args.pieces]
    return _emit(args, "context", True, system_to_doc(make_context(parts)))


def cmd_morphism(args) -> int:
    alph = _load_alphabet(args)
    lhs = _load_system(args.lhs, alph)
    rhs = _load_system(args.rhs, alph)
    if args.action == "check":
        if not args.map:
            raise InputError("morphism check needs --map")
        vmap = _load(args.map)
        chk = check_morphism(lhs, rhs, vmap)
        return _emit(args, "morphism check", chk.ok,
                     {"kind": chk.kind, "witness": chk.witness})
    if args.action == "find":
        m = find_morphism(lhs, rhs)
        if m is None:
            return _emit(args, "morphism find", False, {"found": False})
        return _emit(args, "morphism find", True, {"found": True, "map": m.vmap})
    if args.action == "pullback":
        return cmd_pullback(args)
    raise InputError(f"unknown morphism action {args.action}")


def cmd_pullback(args) -> int:
    alph = _load_alphabet(args)
    lhs = _load_system(args.lhs, alph)
    rhs = _load_system(args.rhs, alph)
    tgt = _load_system(args.target, alph)
    f = Morphism(lhs, tgt, _load(args.lmap))
    g = Morphism(rhs, tgt, _load(args.rmap))
    p, pi, pi2 = pullback(f, g, trim=args.trim)
    return _emit(args, "pullback", True, {
        "product": system_to_doc(p),
        "left": pi.vmap,
        "right": pi2.vmap,
    })


def cmd_decide(args) -> int:
    alph = _load_alphabet(args)
    if args.relation == "unfold-eq":
        lhs = _load_system(args.lhs, alph)
        rhs = _load_system(args.rhs, alph)
        v = unfold_equivalent(lhs, rhs)
        witness = None
        if v.witness:
            witness = {"common": system_to_doc(v.witness[0].source),
                       "left": v.witness[0].vmap, "right": v.witness[1].vmap}
        if args.witness and witness:
            write_json(witness, args.witness)
        return _emit(args, "decide unfold-eq", v.equivalent, {
            "equivalent": v.equivalent,
            "distinguisher": [str(x) for x in (v.distinguisher or ())],
        })
    if args.relation == "bisim":
        ldoc, rdoc = _load(args.lhs), _load(args.rhs)
        if "states" in ldoc:
            v = bisimilar(ts_from_doc(ldoc), ts_from_doc(rdoc))
        else:
            v = bisimilar_systems(system_from_doc(ldoc, alph), system_from_doc(rdoc, alph))
        if args.witness and v.relation:
            write_json({"relation": sorted(map(list, v.relation))}, args.witness)
        return _emit(args, "decide bisim", v.equivalent, {
            "bisimilar": v.equivalent,
            "distinguisher": [str(x) for x in (v.distinguisher or ())],
        })
    raise InputError(f"unknown relation {args.relation}")


def cmd_yields(args) -> int:
    alph = _load_alphabet(args)
    s = _load_system(args.input, alph)
    init, root = yields(s, memory=args.memory)
    return _emit(args, "yields", True, {
        "memory": args.memory,
        "init": [system_to_doc(t) for t in init],
        "root": [system_to_doc(t) for t in root],
    })


def cmd_resolve(args) -> int:
    alph = _load_alphabet(args)
    s = _load_system(args.input, alph)
    rs = direct_resolutions(s, memory=args.memory)
    return _emit(args, "resolve", True, [system_to_doc(t) for t in rs])


def _algebra(args) -> ReachabilityAlgebra:
    if args.algebra != "reach":
        raise InputError(f"unknown algebra {args.algebra!r} (built-in: reach)")
    forbidden = set()
    if args.letters:
        if not args.letters.startswith("R="):
            raise InputError("--letters expects R=name1,name2,...")
        forbidden = {x for x in args.letters[2:].split(",") if x}
    return ReachabilityAlgebra(forbidden=forbidden)


def cmd_profile(args) -> int:
    alph = _load_alphabet(args)
    s = _load_system(args.input, alph)
    alg = _algebra(args)
    from .resolutions import small_bound

    max_m = args.max_m if args.max_m is not None else s.rank * small_bound(alg)
    prof = profile(s, alg, flavor=args.flavor, small=args.small,
                   memory=args.memory, max_m=max_m)
    rows = sorted([repr(e), list(sg)] for (e, sg) in prof)
    return _emit(args, "profile", True, {
        "flavor": args.flavor, "small": args.small, "memory": args.memory,
        "entries": rows,
    })


def cmd_recognise(args) -> int:
    alph = _load_alphabet(args)
    s = _load_system(args.input, alph)
    alg = _algebra(args)
    if args.accept == "bottom":
        accepting = {bot(0)}
    elif args.accept == "empty":
        accepting = {ReachElem(0, frozenset())}
    else:
        raise InputError("--accept must be bottom or empty")
    from .algebras import recognises

    ok = recognises(alg, accepting, s)
    return _emit(args, "recognise", ok, {"accepted": ok})


def cmd_ya(args) -> int:
    p = presentation_from_doc(_load(args.presentation))
    if args.action == "validate":
        bad = validate_presentation(p)
        return _emit(args, "ya validate", not bad, {"violations": bad})
    if args.action == "eval":
        if args.loop:
            u = [x for x in (args.word or "").split(",") if x]
            v = [x for x in args.loop.split(",") if x]
            return _emit(args, "ya eval", True, {"value": eval_lasso(p, u, v)})
        w = [x for x in (args.word or "").split(",") if x]
        if not args.terminal:
            raise InputError("ya eval needs --terminal (or --loop)")
        return _emit(args, "ya eval", True, {"value": eval_word(p, w, args.terminal)})
    if args.action in ("extremal", "delta"):
        ts = tuple(x for x in args.elements.split(",") if x)
        if args.letter:
            a = p.letter_rep(args.letter)
            if not isinstance(a, Rep):
                raise InputError("--letter must have positive rank")
        elif args.tuple:
            a = single(len(ts) - 1, tuple(args.tuple.split(",")))
        else:
            raise InputError("need --letter or --tuple for the filler element")
        if args.action == "extremal":
            ms = extremal_context(p, ts, a)
            return _emit(args, "ya extremal", True, {"minimal": list(ms)})
        res = build_delta(p, extremal_context(p, ts, a), a, verify=False)
        ok = all(res.checks.values())
        return _emit(args, "ya delta", ok, {
            "tuple": sorted(res.rep.decomps)[0] if res.rep.decomps else [],
            "checks": res.checks,
        })
    raise InputError(f"unknown ya action {args.action}")


def cmd_aut(args) -> int:
    if args.action == "compile":
        p = presentation_from_doc(_load(args.presentation))
        aut = compile_algebra(p)
        doc = automaton_to_doc(aut)
        if args.out:
            write_json(doc, args.out)
        return _emit(args, "aut compile", True, doc)
    aut = automaton_from_doc(_load(args.automaton))
    if args.action == "accept":
        alph = aut.alphabet
        s = _load_system(args.input, alph)
        run = accepts(aut, s)
        if run is not None and args.run:
            write_json({"kind": run.kind,
                        "choices": {str(k): list(v) if isinstance(v, tuple) else v
                                    for k, v in run.choices.items()},
                        "initial_memory": run.initial_memory}, args.run)
        return _emit(args, "aut accept", run is not None, {"accepted": run is not None})
    if args.action == "closure":
        closed = bisim_closure(aut)
        doc = automaton_to_doc(closed)
        if args.out:
            write_json(doc, args.out)
        return _emit(args, "aut closure", True, doc)
    if args.action == "emit-formula":
        text = emit_disjunctive_formula(aut)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        sys.stdout.write(text)
        return 0
    raise InputError(f"unknown aut action {args.action}")


def cmd_corpus(args) -> int:
    import random

    rng = random.Random(args.seed)
    if args.alphabet:
        alph = alphabet_from_doc(_load(args.alphabet))
    else:
        alph = RankedAlphabet.of(("a2", 2), ("a1", 1), ("b1", 1), ("c0", 0))
    docs = []
    sizes = []
    for _ in range(args.count):
        if args.kind == "system":
            s = corpusmod.rand_system(rng, alph, args.max_v, rank=args.rank)
            docs.append(system_to_doc(s))
            sizes.append(len(s.vertices))
        elif args.kind == "set-system":
            s = corpusmod.rand_set_system(rng, alph, args.max_v, rank=args.rank)
            docs.append(system_to_doc(s))
            sizes.append(len(s.vertices))
        elif args.kind == "ts":
            ts = corpusmod.rand_ts(rng, args.max_v)
            docs.append(ts_to_doc(ts))
            sizes.append(len(ts.vertices))
        else:
            raise InputError(f"unknown corpus kind {args.kind}")
    text = "\n".join(json.dumps(d, sort_keys=True) for d in docs) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.figures:
        os.makedirs(args.figures, exist_ok=True)
        write_tsv([[i, sz] for i, sz in enumerate(sizes)], ["index", "vertices"],
                  os.path.join(args.figures, "corpus.tsv"))
        render_corpus_figure(sizes, os.path.join(args.figures, "corpus.png"))
    return 0


def _paper_examples() -> list[tuple[str, object]]:
    """The bundled desk examples, re-run through the library."""
    out = []

    def check(name, fn):
        out.append((name, fn))

    alph = RankedAlphabet.of(("a2", 2), ("a1", 1), ("b1", 1), ("c0", 0),
                             ("a3", 3), ("b", 0), ("c", 0))

    def ex_expression():
        s = from_expression("a2(x1, a2(b, x2))", alph)
        rep = validate(s)
        return rep.is_system and s.rank == 2, rep.kind

    def ex_reach_value():
        alg = ReachabilityAlgebra()
        v = alg.eval_symbols(from_expression("a3(x3, x1, x1)", alph))
        return v == ReachElem(3, frozenset({1, 3})), repr(v)

    def ex_four_resolutions():
        from .monad import hole
        from .core import Sym
        from .equivalences import unfold_class_key

        c = SetSystem.make(0, ["h", "vb", "vc"], ["h"], [],
                           {"h": hole(1), "vb": Sym("b", 0), "vc": Sym("c", 0)},
                           [("h", 1, "vb"), ("h", 1, "vc")])
        s = from_expression("a2(x1, x1)", alph, rank=1)
        rs = direct_resolutions(plug(c, s), memory=0)
        single_class = direct_resolutions(s, memory=0)
        return len(rs) == 4 and len(single_class) == 1, f"{len(rs)} classes"

    def ex_unit_laws():
        from .monad import atomic, flatten as fl

        s = from_expression("a2(b, a1(c))", alph)
        return iso(fl(atomic(s)), s), "flatten(atomic(S)) = S"

    def ex_fig2():
        from .core import Sym, ts_symbol

        nu1 = ts_symbol([], 1)
        s1 = SetSystem.make(0, ["f"], ["f"], [], {"f": nu1}, [("f", 1, "f")])
        s2 = SetSystem.make(0, ["u", "w"], ["u"], [], {"u": nu1, "w": nu1},
                            [("u", 1, "w"), ("w", 1, "u")])
        return (unfold_equivalent(s1, s2).equivalent
                and bisimilar_systems(s1, s2).equivalent), "loop ~ 2-cycle"

    def ex_decomposition():
        import random

        rng = random.Random(7)
        c = corpusmod.rand_closed_context(rng, alph, 1, max_v=3)
        rec = make_context(pieces(c))
        m = find_morphism(rec, c)
        return m is not None, "recomposition folds onto the context"

    def ex_avoid_tables():
        p = forbidden_letter_presentation(
            [("a2", 2), ("a1", 1), ("b1", 1), ("c0", 0)], {"b1"})
        bad = validate_presentation(p)
        ok = not bad and eval_word(p, ["ok", "dead"], "acc") == "rej" \
            and eval_lasso(p, [], ["ok"]) == "acc"
        return ok, "tables valid, word and lasso examples agree"

    def ex_compiled_language():
        p = forbidden_letter_presentation(
            [("a2", 2), ("a1", 1), ("b1", 1), ("c0", 0)], {"b1"})
        aut = compile_algebra(p)
        good = from_expression("a2(c0, a1(c0))", alph)
        bad = from_expression("a2(c0, b1(c0))", alph)
        return (accepts(aut, good) is not None and accepts(aut, bad) is None,
                "avoid-compiled automaton separates the examples")

    def ex_surjections():
        return len(list(__import__("regtree.automata", fromlist=["surjections"])
                        .surjections(3, 2))) == 6, "6 surjections [3]->[2]"

    def ex_delta():
        p = forbidden_letter_presentation(
            [("a2", 2), ("a1", 1), ("b1", 1), ("c0", 0)], {"b1"})
        a = single(2, ("ok", "ok"))
        ms = extremal_context(p, ("ok", "ok", "ok"), a)
        res = build_delta(p, ms, a)
        return all(res.checks.values()), str(res.checks)

    check("expression-system", ex_expression)
    check("reachability-{1,3}", ex_reach_value)
    check("four-direct-resolutions", ex_four_resolutions)
    check("monad-unit", ex_unit_laws)
    check("fig2-unfold-equivalence", ex_fig2)
    check("context-decomposition", ex_decomposition)
    check("avoid-presentation", ex_avoid_tables)
    check("compiled-language", ex_compiled_language)
    check("closure-surjections", ex_surjections)
    check("delta-construction", ex_delta)
    return out


def _run_check(item):
    name, fn = item
    try:
        ok, detail = fn()
    except Exception as e:  # report, do not crash the suite
        ok, detail = False, f"error: {e}"
    return {"name": name, "ok": bool(ok), "detail": detail}


def cmd_suite(args) -> int:
    if not args.paper_examples:
        raise InputError("suite currently runs --paper-examples")
    results = map_batch(_run_check, _paper_examples())
    ok = all(r["ok"] for r in results)
    for r in results:
        sys.stdout.write(f"{'PASS' if r['ok'] else 'FAIL'}  {r['name']}: {r['detail']}\n")
    if args.figures:
        os.makedirs(args.figures, exist_ok=True)
        write_tsv([[r["name"], "pass" if r["ok"] else "fail", r["detail"]] for r in results],
                  ["check", "status", "detail"],
                  os.path.join(args.figures, "suite.tsv"))
        render_suite_figure(results, os.path.join(args.figures, "suite.png"))
    doc = make_report("suite", ok, results)
    if args.report:
        write_json(doc, args.report)
    return 0 if ok else 1


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="regtree", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    def add(name, fn, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(fn=fn)
        p.add_argument("--alphabet", help="alphabet JSON file")
        p.add_argument("--report", help="write the JSON report here too")
        return p

    p = add("validate", cmd_validate)
    p.add_argument("--input", required=True)
    p.add_argument("--dot", help="write a DOT rendering")
    p.add_argument("--figure", help="write a PNG drawing")

    p = add("flatten", cmd_flatten)
    p.add_argument("--input", required=True)
    p.add_argument("--out")

    p = add("plug", cmd_plug)
    p.add_argument("--context", required=True)
    p.add_argument("--filler", required=True)
    p.add_argument("--out")

    p = add("pieces", cmd_pieces)
    p.add_argument("--input", required=True)

    p = add("context", cmd_context)
    p.add_argument("--pieces", nargs="+", required=True)

    p = add("morphism", cmd_morphism)
    p.add_argument("action", choices=["check", "find", "pullback"])
    p.add_argument("--lhs", required=True)
    p.add_argument("--rhs", required=True)
    p.add_argument("--map")
    p.add_argument("--target")
    p.add_argument("--lmap")
    p.add_argument("--rmap")
    p.add_argument("--trim", action="store_true")

    p = add("pullback", cmd_pullback)
    p.add_argument("--lhs", required=True)
    p.add_argument("--rhs", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--lmap", required=True)
    p.add_argument("--rmap", required=True)
    p.add_argument("--trim", action="store_true")

    p = add("decide", cmd_decide)
    p.add_argument("relation", choices=["unfold-eq", "bisim"])
    p.add_argument("--lhs", required=True)
    p.add_argument("--rhs", required=True)
    p.add_argument("--witness")

    p = add("yields", cmd_yields)
    p.add_argument("--input", required=True)
    p.add_argument("--memory", type=int, default=1)

    p = add("resolve", cmd_resolve)
    p.add_argument("--input", required=True)
    p.add_argument("--memory", type=int, default=1)

    p = add("profile", cmd_profile)
    p.add_argument("--input", required=True)
    p.add_argument("--algebra", default="reach")
    p.add_argument("--letters", help="R=name1,name2 distinguished letters")
    p.add_argument("--flavor", choices=["init", "root"], default="init")
    p.add_argument("--small", action="store_true")
    p.add_argument("--memory", type=int, default=1)
    p.add_argument("--max-m", type=int, default=None, dest="max_m")

    p = add("recognise", cmd_recognise)
    p.add_argument("--input", required=True)
    p.add_argument("--algebra", default="reach")
    p.add_argument("--letters", help="R=name1,name2 distinguished letters")
    p.add_argument("--accept", choices=["bottom", "empty"], required=True)

    p = add("ya", cmd_ya)
    p.add_argument("action", choices=["validate", "eval", "extremal", "delta"])
    p.add_argument("--presentation", required=True)
    p.add_argument("--word", help="comma-separated unary elements")
    p.add_argument("--terminal", help="nullary element closing a finite word")
    p.add_argument("--loop", help="comma-separated loop part for lasso evaluation")
    p.add_argument("--elements", help="comma-separated context elements m0..mk")
    p.add_argument("--letter", help="letter naming the filler element")
    p.add_argument("--tuple", help="comma-separated deterministic filler tuple")

    p = add("aut", cmd_aut)
    p.add_argument("action", choices=["compile", "accept", "closure", "emit-formula"])
    p.add_argument("--presentation")
    p.add_argument("--automaton")
    p.add_argument("--input")
    p.add_argument("--run", help="write the accepting run here")
    p.add_argument("--out")

    p = add("corpus", cmd_corpus)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--kind", choices=["system", "set-system", "ts"], default="system")
    p.add_argument("--max-v", type=int, default=6, dest="max_v")
    p.add_argument("--rank", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--figures", help="directory for figures and TSV summaries")

    p = add("suite", cmd_suite)
    p.add_argument("--paper-examples", action="store_true", dest="paper_examples")
    p.add_argument("--figures", help="directory for figures and TSV summaries")

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except InputError as e:
        sys.stderr.write(f"input error: {e}\n")
        return 2
    except (KeyError, ValueError) as e:
        sys.stderr.write(f"input error: {e}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
