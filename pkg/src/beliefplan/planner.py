"""Greedy myopic test sequencing: which test to run next, and why.

At every node the planner compares "stop and treat now" against each not-yet-
performed test, scoring a test by its one-step value of information

    MaxU(i) = BetP(i+)·MaxU(i+) + BetP(i−)·MaxU(i−) − Cost(i)

where MaxU(i±) is the best treatment expected utility after conditioning on
that outcome and MaxU(0) (the no-test option) is the best expected utility
right now.  The argmax wins; ties go to no-test first, then to the earliest-
declared test, so identical inputs always produce the identical tree.

Each node keeps the complete score map, the per-test evaluation details and
the treatment ranking, so "why this test?" is answerable from the tree alone.
The tree is binary: the positive branch is the first child, and tests are
required to have two-outcome frames (there is no n-ary variant of the value
formula here; asking for one is an error, not a silent generalization).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .decision import DecisionModel, TreatmentRanking, bet_p, rank_treatments
from .errors import BeliefPlanError, ContradictionError, PlanError
from .mass import MassFunction
from .propagation import ValuationNetwork, propagate

#: Sentinel candidate id for "perform no further test, treat now".
NO_TEST = "no-test"

EvidencePath = tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class PlanConfig:
    """Planning parameters: tree depth and evidence already in hand."""

    max_depth: int = 1
    evidence: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")


@dataclass(frozen=True)
class TestEvaluation:
    """Everything that went into one candidate's MaxU(i)."""

    test_id: str
    cost: float
    p_positive: float
    p_negative: float
    max_u_positive: float
    max_u_negative: float
    max_u: float


@dataclass(frozen=True)
class PlanNode:
    """One node of the suggested-test tree.

    ``kind`` is ``"test"`` (a test is suggested; children present unless the
    depth limit cut them off), ``"no_test"`` (treat now), or
    ``"contradiction"`` (the evidence on this path is fully conflicting, so
    there is nothing to rank).  ``explanation`` maps every candidate —
    including :data:`NO_TEST` — to its MaxU; ``children`` is (positive,
    negative).
    """

    kind: str
    selected: str
    evidence_path: EvidencePath
    max_u_selected: float | None = None
    explanation: dict[str, float] = field(default_factory=dict)
    details: dict[str, TestEvaluation] = field(default_factory=dict)
    ranking: TreatmentRanking | None = None
    children: tuple["PlanNode", "PlanNode"] | None = None

    def __post_init__(self):
        if self.kind not in ("test", "no_test", "contradiction"):
            raise ValueError(f"unknown node kind {self.kind!r}")
        if self.kind != "test" and self.children is not None:
            raise ValueError(f"{self.kind} nodes cannot have children")
        if self.kind == "test" and self.selected == NO_TEST:
            raise ValueError("test node cannot select no-test")

    @property
    def positive_child(self) -> "PlanNode | None":
        return self.children[0] if self.children else None

    @property
    def negative_child(self) -> "PlanNode | None":
        return self.children[1] if self.children else None

    def walk(self):
        yield self
        if self.children:
            yield from self.children[0].walk()
            yield from self.children[1].walk()


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _diagnosis_ranking(net: ValuationNetwork, model: DecisionModel) -> TreatmentRanking:
    marginal = propagate(net, [model.diagnosis_id])[model.diagnosis_id]
    return rank_treatments(bet_p(marginal), model)


def evaluate_no_test(net: ValuationNetwork, model: DecisionModel) -> float:
    """MaxU(0): best treatment expected utility with the evidence as it stands."""
    return _diagnosis_ranking(net, model).best_utility


def evaluate_test(
    net: ValuationNetwork,
    model: DecisionModel,
    test_id: str,
    _marginal: MassFunction | None = None,
) -> TestEvaluation:
    """Score one candidate test by the myopic value formula.

    Raises :class:`ContradictionError` when an outcome branch is fully
    contradictory (its pignistic probability is zero), and :class:`PlanError`
    for tests without a two-outcome frame.  ``_marginal`` lets the tree
    builder hand over an already-propagated marginal for the test variable;
    callers without one in hand should leave it unset.
    """
    cost = model.cost_of(test_id)
    var = net.variable(test_id)
    if len(var.frame) != 2:
        raise PlanError(
            f"test {test_id!r} has a {len(var.frame)}-outcome frame; "
            f"the value formula is defined for two outcomes"
        )
    positive, negative = var.frame
    if _marginal is None:
        _marginal = propagate(net, [test_id])[test_id]
    dist = bet_p(_marginal)
    branch_u = {}
    for outcome in var.frame:
        branch_u[outcome] = _diagnosis_ranking(net.with_evidence(test_id, outcome), model).best_utility
    p_pos, p_neg = dist.of(positive), dist.of(negative)
    max_u = p_pos * branch_u[positive] + p_neg * branch_u[negative] - cost
    return TestEvaluation(
        test_id=test_id,
        cost=cost,
        p_positive=p_pos,
        p_negative=p_neg,
        max_u_positive=branch_u[positive],
        max_u_negative=branch_u[negative],
        max_u=max_u,
    )


def _candidates(net: ValuationNetwork, model: DecisionModel) -> list[str]:
    """Unperformed tests, in declaration order."""
    return [t for t in model.test_costs if t not in net.evidence]


def _select(explanation: Mapping[str, float], order: list[str]) -> tuple[str, float]:
    """Argmax with no-test-first, then declaration-order tie-breaks."""
    best, best_u = NO_TEST, explanation[NO_TEST]
    for t in order:
        if explanation[t] > best_u:
            best, best_u = t, explanation[t]
    return best, best_u


def build_tree(net: ValuationNetwork, model: DecisionModel, config: PlanConfig) -> PlanNode:
    """The full suggested-test tree for the current evidence.

    Children exist only below test nodes whose depth is under the limit; a
    contradictory branch becomes a leaf recording the path that led there.
    Evidence from the config seeds the root's evidence path, so every node
    states the complete history behind its numbers.
    """
    for var_id in sorted(config.evidence):
        net = net.with_evidence(var_id, config.evidence[var_id])
    root_path = tuple((v, config.evidence[v]) for v in sorted(config.evidence))
    return _build_node(net, model, config, root_path, 1)


def _build_node(
    net: ValuationNetwork,
    model: DecisionModel,
    config: PlanConfig,
    path: EvidencePath,
    depth: int,
) -> PlanNode:
    try:
        # one propagation run serves the diagnosis ranking and every
        # candidate's outcome probabilities; only the conditioned branch
        # rankings inside evaluate_test need further runs
        order = _candidates(net, model)
        marginals = propagate(net, [model.diagnosis_id] + order)
        try:
            ranking = rank_treatments(bet_p(marginals[model.diagnosis_id]), model)
        except ContradictionError:
            return PlanNode(kind="contradiction", selected=NO_TEST, evidence_path=path)

        explanation = {NO_TEST: ranking.best_utility}
        details = {}
        for t in order:
            ev = evaluate_test(net, model, t, _marginal=marginals[t])
            explanation[t] = ev.max_u
            details[t] = ev
        selected, max_u = _select(explanation, order)
    except PlanError:
        raise
    except BeliefPlanError as exc:
        raise PlanError(str(exc), path) from exc

    if selected == NO_TEST:
        return PlanNode(
            kind="no_test",
            selected=NO_TEST,
            evidence_path=path,
            max_u_selected=max_u,
            explanation=explanation,
            details=details,
            ranking=ranking,
        )

    children = None
    if depth < config.max_depth:
        positive, negative = net.variable(selected).frame
        children = (
            _build_node(net.with_evidence(selected, positive), model, config,
                        path + ((selected, positive),), depth + 1),
            _build_node(net.with_evidence(selected, negative), model, config,
                        path + ((selected, negative),), depth + 1),
        )
    return PlanNode(
        kind="test",
        selected=selected,
        evidence_path=path,
        max_u_selected=max_u,
        explanation=explanation,
        details=details,
        ranking=ranking,
        children=children,
    )
