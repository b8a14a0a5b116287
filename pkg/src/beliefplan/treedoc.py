"""Plan trees as plain documents, plus the text rendering and node paths.

The document form is what leaves the process: the CLI writes it to disk and
the session service returns it over the wire, so it must be (a) JSON-ready —
dicts, lists, strings, floats, None — and (b) canonical: the same tree always
serializes to the same bytes.  :func:`to_json` therefore fixes every option
that could wobble (key order, separators, indentation), and the producers
feed it nothing but deterministically computed values.

Nodes inside a tree are addressed by the outcome labels taken from the root,
e.g. ``+,-`` for "positive branch, then negative branch".  The empty path is
the root.
"""

from __future__ import annotations

import json
from typing import Sequence

from .decision import TreatmentRanking
from .errors import PlanError
from .planner import PlanNode, TestEvaluation

#: Schema version stamped on every document this module produces.
SCHEMA_VERSION = "v1"


def ranking_to_doc(ranking: TreatmentRanking | None) -> dict | None:
    if ranking is None:
        return None
    doc: dict = {"treatments": [[t, u] for t, u in ranking.entries]}
    if ranking.distribution is not None:
        doc["bet_p"] = dict(ranking.distribution.probabilities)
    else:
        doc["bet_p"] = None
    return doc


def evaluation_to_doc(ev: TestEvaluation) -> dict:
    return {
        "test": ev.test_id,
        "cost": ev.cost,
        "p_positive": ev.p_positive,
        "p_negative": ev.p_negative,
        "max_u_positive": ev.max_u_positive,
        "max_u_negative": ev.max_u_negative,
        "max_u": ev.max_u,
    }


def node_to_doc(node: PlanNode) -> dict:
    """One node, children included, as a JSON-ready dict.

    ``candidates`` keeps declaration order (JSON objects do not), and
    ``explanation`` repeats the MaxU values keyed by candidate so the "why"
    inquiry is a plain lookup.
    """
    doc = {
        "kind": node.kind,
        "selected": node.selected,
        "evidence_path": [[t, o] for t, o in node.evidence_path],
        "max_u_selected": node.max_u_selected,
        "explanation": dict(node.explanation),
        "candidates": [evaluation_to_doc(node.details[t]) for t in node.details],
        "ranking": ranking_to_doc(node.ranking),
        "children": None,
    }
    if node.children is not None:
        doc["children"] = {
            "positive": node_to_doc(node.children[0]),
            "negative": node_to_doc(node.children[1]),
        }
    return doc


def plan_document(root: PlanNode, depth: int, evidence: dict[str, str]) -> dict:
    """The full tree document: versioned envelope around the root node."""
    return {
        "version": SCHEMA_VERSION,
        "depth": depth,
        "evidence": dict(evidence),
        "root": node_to_doc(root),
    }


def to_json(doc: dict, compact: bool = False) -> str:
    """Canonical JSON text; byte-identical for equal documents."""
    if compact:
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# node addressing
# ---------------------------------------------------------------------------

def parse_node_path(text: str) -> tuple[str, ...]:
    """Outcome labels from root, comma-separated; empty or blank is the root."""
    text = text.strip()
    if not text:
        return ()
    return tuple(token.strip() for token in text.split(","))


def walk_paths(root: PlanNode):
    """Preorder (path-from-root, node) pairs; positive branch first."""
    stack: list[tuple[tuple[str, ...], PlanNode]] = [((), root)]
    while stack:
        path, node = stack.pop()
        yield path, node
        if node.children is not None:
            for child in reversed(node.children):
                outcome = child.evidence_path[-1][1]
                stack.append((path + (outcome,), child))


def node_at(root: PlanNode, path: Sequence[str]) -> PlanNode:
    """The node reached by taking ``path``'s outcomes from the root.

    Children record the outcome that led to them as the last entry of their
    evidence path, which is what each path token is matched against.
    """
    node = root
    for i, outcome in enumerate(path):
        so_far = ",".join(path[: i + 1])
        if node.children is None:
            raise PlanError(f"no node at path {so_far!r}: {node.kind} node has no children")
        match = next(
            (c for c in node.children if c.evidence_path[-1][1] == outcome), None
        )
        if match is None:
            valid = [c.evidence_path[-1][1] for c in node.children]
            raise PlanError(
                f"no node at path {so_far!r}: outcome {outcome!r} not one of {valid}"
            )
        node = match
    return node


# ---------------------------------------------------------------------------
# text rendering
# ---------------------------------------------------------------------------

def _node_line(node: PlanNode) -> str:
    if node.kind == "contradiction":
        return "contradiction (evidence fully conflicting)"
    if node.kind == "no_test":
        treat, eu = node.ranking.best
        return f"no further test  MaxU={node.max_u_selected:.4f}  treat={treat} (EU={eu:.4f})"
    treat = node.ranking.best_treatment
    return (
        f"test {node.selected}  MaxU={node.max_u_selected:.4f}  "
        f"now-best={treat} (MaxU(0)={node.explanation['no-test']:.4f})"
    )


def render_text(root: PlanNode) -> str:
    """The tree as indented text, positive branch printed first."""
    lines: list[str] = []

    def walk(node: PlanNode, depth: int, label: str) -> None:
        lines.append("  " * depth + label + _node_line(node))
        if node.children is not None:
            for child in node.children:
                outcome = child.evidence_path[-1][1]
                walk(child, depth + 1, f"{node.selected}={outcome} -> ")
        elif node.kind == "test":
            lines.append("  " * (depth + 1) + "(children beyond depth limit)")

    walk(root, 0, "")
    return "\n".join(lines) + "\n"
