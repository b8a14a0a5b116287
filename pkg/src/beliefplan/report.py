"""Static reports: figures of a plan tree plus flat CSV extracts.

Everything lands in one directory: the tree drawing, a bar chart of the root
candidates, CSVs of nodes / candidate evaluations / treatment rankings /
pignistic beliefs, and the canonical JSON document.  The CSVs are the
spreadsheet-friendly view of exactly what the tree document contains;
numbers are written with ``repr`` so nothing is rounded away.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # file output only, no display required
import matplotlib.pyplot as plt

from .planner import NO_TEST, PlanNode
from .treedoc import plan_document, to_json, walk_paths

_KIND_STYLE = {
    "test": dict(facecolor="#cfe3f7", edgecolor="#2a6bb0"),
    "no_test": dict(facecolor="#d8f0d3", edgecolor="#3d8b37"),
    "contradiction": dict(facecolor="#f6cfcf", edgecolor="#b03030"),
}


def _node_label(node: PlanNode) -> str:
    if node.kind == "contradiction":
        return "contradiction"
    if node.kind == "no_test":
        treat, eu = node.ranking.best
        return f"treat: {treat}\nEU {eu:.2f}"
    return f"{node.selected}\nMaxU {node.max_u_selected:.2f}"


def _layout(root: PlanNode) -> dict[tuple[str, ...], tuple[float, float]]:
    """x = depth, y = DFS leaf order (positive branch on top)."""
    pos: dict[tuple[str, ...], tuple[float, float]] = {}
    next_leaf = [0.0]

    def place(node: PlanNode, path: tuple[str, ...], depth: int) -> float:
        if node.children is None:
            y = next_leaf[0]
            next_leaf[0] += 1.0
        else:
            ys = [
                place(child, path + (child.evidence_path[-1][1],), depth + 1)
                for child in node.children
            ]
            y = sum(ys) / len(ys)
        pos[path] = (float(depth), y)
        return y

    place(root, (), 0)
    return pos


def render_tree_figure(root: PlanNode, path: str | Path) -> Path:
    """Draw the tree left-to-right and write it to ``path`` (format from the suffix)."""
    pos = _layout(root)
    nodes = dict(walk_paths(root))
    depth_max = max(x for x, _ in pos.values())
    n_leaves = sum(1 for n in nodes.values() if n.children is None)

    fig, ax = plt.subplots(figsize=(2.6 * (depth_max + 1) + 2, 0.9 * n_leaves + 1.2))
    for node_path, node in nodes.items():
        x, y = pos[node_path]
        if node.children is not None:
            for child in node.children:
                outcome = child.evidence_path[-1][1]
                cx, cy = pos[node_path + (outcome,)]
                ax.plot([x, cx], [y, cy], color="#777777", linewidth=1.2, zorder=1)
                ax.annotate(
                    outcome,
                    ((x + cx) / 2, (y + cy) / 2),
                    fontsize=8,
                    ha="center",
                    va="bottom",
                    color="#444444",
                )
        ax.annotate(
            _node_label(node),
            (x, y),
            fontsize=9,
            ha="center",
            va="center",
            zorder=2,
            bbox=dict(boxstyle="round,pad=0.35", **_KIND_STYLE[node.kind]),
        )
    ax.invert_yaxis()  # positive branch drawn on top
    ax.set_axis_off()
    ax.margins(0.12)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_candidates_figure(node: PlanNode, path: str | Path, title: str = "root") -> Path:
    """Bar chart of every candidate's MaxU at one node, best at the top."""
    items = list(node.explanation.items())  # no-test first, then declaration order
    labels = [t for t, _ in items][::-1]
    values = [u for _, u in items][::-1]
    colors = [
        "#b0b0b0" if t == NO_TEST else ("#e8a33d" if t == node.selected else "#5b8fc9")
        for t in labels
    ]
    fig, ax = plt.subplots(figsize=(7, 0.4 * len(items) + 1.6))
    bars = ax.barh(labels, values, color=colors)
    ax.bar_label(bars, fmt="%.2f", fontsize=7, padding=2)
    ax.set_xlabel("expected utility of choosing this next (MaxU)")
    ax.set_title(f"candidates at {title}")
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


# ---------------------------------------------------------------------------
# CSV extracts
# ---------------------------------------------------------------------------

def _path_text(path: tuple[str, ...]) -> str:
    return ",".join(path)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_nodes_csv(root: PlanNode, path: str | Path) -> Path:
    rows = []
    for node_path, node in walk_paths(root):
        best = node.ranking.best_treatment if node.ranking else ""
        rows.append([
            _path_text(node_path),
            node.kind,
            node.selected,
            repr(node.max_u_selected) if node.max_u_selected is not None else "",
            repr(node.explanation[NO_TEST]) if NO_TEST in node.explanation else "",
            best,
        ])
    return _write_csv(
        Path(path),
        ["path", "kind", "selected", "max_u", "no_test_max_u", "best_treatment"],
        rows,
    )


def write_candidates_csv(root: PlanNode, path: str | Path) -> Path:
    rows = []
    for node_path, node in walk_paths(root):
        text = _path_text(node_path)
        if NO_TEST in node.explanation:
            rows.append([text, NO_TEST, "", "", "", "", "", repr(node.explanation[NO_TEST])])
        for ev in node.details.values():
            rows.append([
                text, ev.test_id, repr(ev.cost),
                repr(ev.p_positive), repr(ev.p_negative),
                repr(ev.max_u_positive), repr(ev.max_u_negative), repr(ev.max_u),
            ])
    return _write_csv(
        Path(path),
        ["path", "candidate", "cost", "p_positive", "p_negative",
         "max_u_positive", "max_u_negative", "max_u"],
        rows,
    )


def write_rankings_csv(root: PlanNode, path: str | Path) -> Path:
    rows = []
    for node_path, node in walk_paths(root):
        if node.ranking is None:
            continue
        for rank, (treatment, eu) in enumerate(node.ranking.entries, start=1):
            rows.append([_path_text(node_path), rank, treatment, repr(eu)])
    return _write_csv(
        Path(path), ["path", "rank", "treatment", "expected_utility"], rows
    )


def write_beliefs_csv(root: PlanNode, path: str | Path) -> Path:
    rows = []
    for node_path, node in walk_paths(root):
        if node.ranking is None or node.ranking.distribution is None:
            continue
        for outcome, p in node.ranking.distribution.probabilities.items():
            rows.append([_path_text(node_path), outcome, repr(p)])
    return _write_csv(Path(path), ["path", "outcome", "probability"], rows)


def write_report(
    root: PlanNode, outdir: str | Path, depth: int, evidence: dict[str, str]
) -> dict[str, Path]:
    """Render every artifact into ``outdir`` (created if missing)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    doc_path = outdir / "plan.json"
    doc_path.write_text(to_json(plan_document(root, depth, evidence)), encoding="utf-8")
    return {
        "plan.json": doc_path,
        "tree.png": render_tree_figure(root, outdir / "tree.png"),
        "candidates.png": render_candidates_figure(root, outdir / "candidates.png"),
        "nodes.csv": write_nodes_csv(root, outdir / "nodes.csv"),
        "candidates.csv": write_candidates_csv(root, outdir / "candidates.csv"),
        "rankings.csv": write_rankings_csv(root, outdir / "rankings.csv"),
        "beliefs.csv": write_beliefs_csv(root, outdir / "beliefs.csv"),
    }
