"""Report writing and figure rendering for the CLI.

Reports are versioned JSON documents plus a delimited (TSV) summary; when a
figures directory is given, matplotlib renders the companion charts there.
All output is a pure function of the inputs (no timestamps).
"""

from __future__ import annotations

import json
import os
from typing import Sequence

SCHEMA = "regtree-report/1"


def make_report(command: str, ok: bool, result) -> dict:
    return {"schema": SCHEMA, "command": command, "ok": ok, "result": result}


def write_json(doc: dict, path: "str | None") -> str:
    text = json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def write_tsv(rows: Sequence[Sequence], header: Sequence[str], path: str) -> None:
    with open(path, "w") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(str(x) for x in row) + "\n")


def _mpl():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_suite_figure(results: Sequence[dict], path: str) -> None:
    """One bar per check, green for pass, red for fail."""
    plt = _mpl()
    names = [r["name"] for r in results]
    vals = [1 if r["ok"] else -1 for r in results]
    colors = ["#2a9d4e" if v > 0 else "#c23b3b" for v in vals]
    fig, ax = plt.subplots(figsize=(max(6, 0.55 * len(names)), 3.5))
    ax.bar(range(len(names)), vals, color=colors)
    ax.axhline(0, color="black", linewidth=0.8)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=60, ha="right", fontsize=7)
    ax.set_yticks([-1, 1])
    ax.set_yticklabels(["fail", "pass"])
    ax.set_title("desk-example suite")
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)


def render_corpus_figure(sizes: Sequence[int], path: str) -> None:
    plt = _mpl()
    fig, ax = plt.subplots(figsize=(5, 3.2))
    if sizes:
        ax.hist(sizes, bins=range(1, max(sizes) + 2), color="#46689b", edgecolor="white")
    ax.set_xlabel("vertices")
    ax.set_ylabel("count")
    ax.set_title("corpus size distribution")
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)


def draw_system(s, path: str) -> None:
    """A small layered drawing of a set-system (BFS layers from the entry)."""
    from .core import Sym, Var

    plt = _mpl()
    layers: dict[str, int] = {}
    frontier = sorted(set(s.initial) | set(s.roots)) or list(s.vertices[:1])
    depth = 0
    seen = set()
    while frontier:
        nxt = []
        for v in frontier:
            if v in seen:
                continue
            seen.add(v)
            layers[v] = depth
            for dd in s.succ.get(v, {}).values():
                for t in dd:
                    if not isinstance(t, Var) and t not in seen:
                        nxt.append(t)
        frontier = sorted(set(nxt))
        depth += 1
    for v in s.vertices:
        layers.setdefault(v, depth)
    cols: dict[int, list[str]] = {}
    for v in s.vertices:
        cols.setdefault(layers[v], []).append(v)
    pos = {}
    for d, vs in cols.items():
        for i, v in enumerate(sorted(vs)):
            pos[v] = (d * 1.6, -i * 1.2)
    fig, ax = plt.subplots(figsize=(max(4, 1.8 * (depth + 1)), max(3, 0.9 * max(len(v) for v in cols.values()))))
    xn = 0
    for (src, d, t) in sorted(s.edges):
        (x0, y0) = pos[src]
        if isinstance(t, Var):
            x1, y1 = x0 + 0.9, y0 + 0.45
            ax.annotate(f"x{t.index}", (x1, y1), fontsize=8, color="#777777")
            xn += 1
        else:
            (x1, y1) = pos[t]
        ax.annotate(
            "", xy=(x1, y1), xytext=(x0, y0),
            arrowprops=dict(arrowstyle="-|>", color="#555555", lw=0.9,
                            connectionstyle="arc3,rad=0.12"),
        )
        ax.annotate(str(d), ((x0 + x1) / 2, (y0 + y1) / 2), fontsize=7, color="#888888")
    for v in s.vertices:
        (x, y) = pos[v]
        l = s.labels[v]
        txt = l.name if isinstance(l, Sym) else "[sys]"
        face = "#dce8f7" if v in s.initial else ("#f8e3c9" if v in s.roots else "white")
        ax.annotate(
            f"{txt}", (x, y), ha="center", va="center", fontsize=9,
            bbox=dict(boxstyle="circle", facecolor=face, edgecolor="#333333"),
        )
    ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)
