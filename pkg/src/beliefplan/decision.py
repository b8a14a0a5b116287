"""The pignistic level: probabilities for action, and ranked treatments.

Credal-level marginals (mass functions) are held for representing what is
known; when a decision must be made they are transformed into a probability
distribution by :func:`bet_p`, which splits each focal mass equally among its
members.  Expected utilities of treatments are then ordinary expectations
against that distribution.

``bet_p`` normalizes by ``1 - m(∅)`` so that marginals carrying conflict from
unnormalized combination still yield a probability distribution; fully
contradictory evidence is an explicit error rather than a division by zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ContradictionError, DomainMismatchError
from .frames import Variable
from .mass import MASS_TOL, PRUNE_EPS, MassFunction


@dataclass(frozen=True)
class PignisticDistribution:
    """A probability distribution over one variable's frame.

    ``probabilities`` has exactly one entry per frame label (zeros included),
    in frame order.
    """

    variable: Variable
    probabilities: dict[str, float]

    def __post_init__(self):
        probs = dict(self.probabilities)
        if set(probs) != set(self.variable.frame):
            raise ValueError(
                f"probabilities must cover the frame of {self.variable.id!r} exactly; "
                f"got labels {sorted(probs)}"
            )
        for label, p in probs.items():
            if p < 0:
                raise ValueError(f"negative probability {p} for {label!r}")
        total = sum(probs[label] for label in self.variable.frame)
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"probabilities sum to {total!r}, expected 1")
        object.__setattr__(
            self, "probabilities", {label: probs[label] for label in self.variable.frame}
        )

    def of(self, label: str) -> float:
        self.variable.index_of(label)  # unknown labels are bugs, not zeros
        return self.probabilities[label]

    def items(self) -> list[tuple[str, float]]:
        return list(self.probabilities.items())


def bet_p(m: MassFunction) -> PignisticDistribution:
    """Pignistic transformation of a single-variable mass function.

    BetP(ω) = Σ_{A ∋ ω} m(A) / (|A| · (1 − m(∅))).  With no conflict this is
    the plain equal-split rule; conflict rescales what remains.
    """
    if len(m.domain) != 1:
        raise DomainMismatchError(
            f"pignistic transformation needs a single-variable marginal, got {m.domain.ids}"
        )
    conflict = m.conflict()
    if conflict >= 1.0 - PRUNE_EPS:
        raise ContradictionError(
            "contradictory evidence: all mass on the empty set, no pignistic distribution"
        )
    var = m.domain.variables[0]
    norm = 1.0 - conflict
    probs = {label: 0.0 for label in var.frame}
    for bits in sorted(m.masses):
        if bits == 0:
            continue
        share = m.masses[bits] / (bits.bit_count() * norm)
        i = 0
        rest = bits
        while rest:
            if rest & 1:
                probs[var.frame[i]] += share
            rest >>= 1
            i += 1
    return PignisticDistribution(var, probs)


@dataclass(frozen=True)
class DecisionModel:
    """Treatments, their utilities against each diagnosis, and test costs.

    ``utility[treatment][diagnosis]`` is a payoff (sign included).  The
    matrix must be complete.  ``diagnosis_id`` names the credal-level
    variable whose frame is ``diagnoses``, tying the two levels together.
    ``test_costs`` preserves declaration order, which is also the tie-break
    order used by the planner.
    """

    treatments: tuple[str, ...]
    diagnoses: tuple[str, ...]
    utility: dict[str, dict[str, float]]
    test_costs: dict[str, float] = field(default_factory=dict)
    diagnosis_id: str = "diagnosis"

    def __post_init__(self):
        object.__setattr__(self, "treatments", tuple(self.treatments))
        object.__setattr__(self, "diagnoses", tuple(self.diagnoses))
        if not self.treatments:
            raise ValueError("decision model needs at least one treatment")
        if len(set(self.treatments)) != len(self.treatments):
            raise ValueError("duplicate treatment labels")
        if len(set(self.diagnoses)) != len(self.diagnoses):
            raise ValueError("duplicate diagnosis labels")
        if set(self.utility) != set(self.treatments):
            raise ValueError("utility matrix rows must match the treatments exactly")
        for t in self.treatments:
            row = self.utility[t]
            if set(row) != set(self.diagnoses):
                missing = sorted(set(self.diagnoses) - set(row))
                extra = sorted(set(row) - set(self.diagnoses))
                raise ValueError(
                    f"utility row {t!r} incomplete: missing {missing}, unexpected {extra}"
                )
        for test_id, cost in self.test_costs.items():
            if cost < 0:
                raise ValueError(f"negative cost {cost} for test {test_id!r}")

    def cost_of(self, test_id: str) -> float:
        try:
            return self.test_costs[test_id]
        except KeyError:
            raise KeyError(f"unknown test {test_id!r}") from None


@dataclass(frozen=True)
class TreatmentRanking:
    """Treatments with expected utilities, best first.

    Order is by descending expected utility; exact ties keep declaration
    order (the constructor only verifies the sort, :func:`rank_treatments`
    establishes it).  ``distribution`` is the pignistic distribution the
    expected utilities were taken against, kept so a ranking can always
    show where its numbers came from.
    """

    entries: tuple[tuple[str, float], ...]
    distribution: PignisticDistribution | None = None

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((t, float(u)) for t, u in self.entries))
        if not self.entries:
            raise ValueError("empty ranking")
        for (_, a), (_, b) in zip(self.entries, self.entries[1:]):
            if a < b:
                raise ValueError("ranking entries must be sorted by descending utility")

    @property
    def best(self) -> tuple[str, float]:
        return self.entries[0]

    @property
    def best_treatment(self) -> str:
        return self.entries[0][0]

    @property
    def best_utility(self) -> float:
        return self.entries[0][1]

    def utility_of(self, treatment: str) -> float:
        for t, u in self.entries:
            if t == treatment:
                return u
        raise KeyError(f"treatment {treatment!r} not in ranking")


def rank_treatments(dist: PignisticDistribution, model: DecisionModel) -> TreatmentRanking:
    """Expected utility of every treatment under ``dist``, sorted best-first."""
    if tuple(dist.variable.frame) != model.diagnoses:
        raise DomainMismatchError(
            f"distribution frame {dist.variable.frame} does not match "
            f"model diagnoses {model.diagnoses}"
        )
    scored = []
    for idx, t in enumerate(model.treatments):
        row = model.utility[t]
        eu = sum(dist.probabilities[d] * row[d] for d in model.diagnoses)
        scored.append((idx, t, eu))
    scored.sort(key=lambda s: (-s[2], s[0]))
    return TreatmentRanking(tuple((t, eu) for _, t, eu in scored), distribution=dist)


def payoff_from_costs(dig_cost: float, delay_cost: float, is_correct_site: bool) -> float:
    """Payoff of acting at a site: pay the action cost, plus the delay cost
    when the site was the wrong one."""
    if dig_cost < 0 or delay_cost < 0:
        raise ValueError(f"costs must be nonnegative, got {dig_cost} and {delay_cost}")
    if is_correct_site:
        return -dig_cost
    return -(dig_cost + delay_cost)
