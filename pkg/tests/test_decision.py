"""Pignistic transformation and treatment ranking."""

import random

import pytest

from beliefplan.decision import (
    DecisionModel,
    PignisticDistribution,
    TreatmentRanking,
    bet_p,
    payoff_from_costs,
    rank_treatments,
)
from beliefplan.errors import ContradictionError, DomainMismatchError
from beliefplan.frames import Domain, Variable
from beliefplan.mass import MassFunction, vacuous

AB = Variable("diag", ("a", "b"))

# the 2x2 corner of the site-digging payoff table used throughout
SUB_MODEL = DecisionModel(
    treatments=("dig-a", "dig-b"),
    diagnoses=("a", "b"),
    utility={"dig-a": {"a": -50.0, "b": -360.0}, "dig-b": {"a": -360.0, "b": -60.0}},
    diagnosis_id="diag",
)


def point_mass(label: str) -> PignisticDistribution:
    return PignisticDistribution(AB, {l: (1.0 if l == label else 0.0) for l in AB.frame})


# ---------------------------------------------------------------------------
# bet_p
# ---------------------------------------------------------------------------

def test_vacuous_eight_outcomes_is_uniform():
    v = Variable("v", tuple("abcdefgh"))
    dist = bet_p(vacuous(Domain((v,))))
    assert all(p == 0.125 for p in dist.probabilities.values())


def test_half_singleton_half_pair():
    m = MassFunction(Domain((AB,)), {0b01: 0.5, 0b11: 0.5})
    dist = bet_p(m)
    # a gets 0.5 + 0.5/2, b gets 0.5/2
    assert dist.of("a") == 0.75
    assert dist.of("b") == 0.25


def test_conflict_renormalizes():
    m = MassFunction(Domain((AB,)), {0: 0.2, 0b11: 0.8})
    dist = bet_p(m)
    assert dist.of("a") == pytest.approx(0.5, abs=1e-12)
    assert dist.of("b") == pytest.approx(0.5, abs=1e-12)


def test_bayesian_masses_are_identity():
    m = MassFunction(Domain((AB,)), {0b01: 0.3, 0b10: 0.7})
    dist = bet_p(m)
    assert dist.of("a") == 0.3
    assert dist.of("b") == 0.7


def test_total_conflict_rejected():
    with pytest.raises(ContradictionError, match="contradictory"):
        bet_p(MassFunction(Domain((AB,)), {0: 1.0}))
    # numerically-total conflict is just as dead
    with pytest.raises(ContradictionError):
        bet_p(MassFunction(Domain((AB,)), {0: 1.0 - 1e-13, 0b11: 1e-13}))


def test_multivariable_marginal_rejected():
    other = Variable("x", ("1", "2"))
    with pytest.raises(DomainMismatchError, match="single-variable"):
        bet_p(vacuous(Domain((AB, other))))


def test_bet_p_sums_to_one_on_random_masses():
    rng = random.Random(7)
    v = Variable("v", ("p", "q", "r"))
    dom = Domain((v,))
    for _ in range(100):
        n = rng.randint(1, 7)
        focals = rng.sample(range(0, 8), n)
        raw = [rng.random() + 0.01 for _ in focals]
        total = sum(raw)
        m = MassFunction(dom, {f: w / total for f, w in zip(focals, raw)})
        if m.conflict() >= 1.0 - 1e-12:
            continue
        dist = bet_p(m)
        assert abs(sum(dist.probabilities.values()) - 1.0) <= 1e-9


def test_bet_p_linear_in_the_mass():
    dom = Domain((AB,))
    m1 = MassFunction(dom, {0b01: 0.6, 0b11: 0.4})
    m2 = MassFunction(dom, {0b10: 0.9, 0b11: 0.1})
    lam = 0.3
    mix = MassFunction(
        dom,
        {
            k: lam * m1.masses.get(k, 0.0) + (1 - lam) * m2.masses.get(k, 0.0)
            for k in set(m1.masses) | set(m2.masses)
        },
    )
    d1, d2, dmix = bet_p(m1), bet_p(m2), bet_p(mix)
    for label in AB.frame:
        expect = lam * d1.of(label) + (1 - lam) * d2.of(label)
        assert dmix.of(label) == pytest.approx(expect, abs=1e-12)


def test_distribution_validation():
    with pytest.raises(ValueError, match="cover the frame"):
        PignisticDistribution(AB, {"a": 1.0})
    with pytest.raises(ValueError, match="negative"):
        PignisticDistribution(AB, {"a": 1.5, "b": -0.5})
    with pytest.raises(ValueError, match="sum"):
        PignisticDistribution(AB, {"a": 0.6, "b": 0.6})


# ---------------------------------------------------------------------------
# rank_treatments
# ---------------------------------------------------------------------------

def test_point_mass_picks_the_column_argmax():
    ranking = rank_treatments(point_mass("a"), SUB_MODEL)
    assert ranking.best == ("dig-a", -50.0)
    assert ranking.utility_of("dig-b") == -360.0


def test_uniform_two_diagnosis_expectations():
    dist = PignisticDistribution(AB, {"a": 0.5, "b": 0.5})
    ranking = rank_treatments(dist, SUB_MODEL)
    assert ranking.entries == (("dig-a", -205.0), ("dig-b", -210.0))


def test_tie_keeps_declaration_order():
    model = DecisionModel(
        treatments=("first", "second"),
        diagnoses=("a", "b"),
        utility={"first": {"a": 10.0, "b": 0.0}, "second": {"a": 0.0, "b": 10.0}},
    )
    dist = PignisticDistribution(AB, {"a": 0.5, "b": 0.5})
    ranking = rank_treatments(dist, model)
    assert ranking.entries == (("first", 5.0), ("second", 5.0))
    assert ranking.best_treatment == "first"


def test_argmax_invariant_under_affine_utility_changes():
    rng = random.Random(21)
    dist = PignisticDistribution(AB, {"a": 0.3, "b": 0.7})
    for _ in range(25):
        utility = {
            t: {d: rng.uniform(-100, 100) for d in ("a", "b")} for t in ("t1", "t2", "t3")
        }
        base = DecisionModel(("t1", "t2", "t3"), ("a", "b"), utility)
        shift, scale = rng.uniform(-50, 50), rng.uniform(0.1, 5)
        moved = DecisionModel(
            ("t1", "t2", "t3"),
            ("a", "b"),
            {t: {d: u * scale + shift for d, u in row.items()} for t, row in utility.items()},
        )
        assert (
            rank_treatments(dist, base).best_treatment
            == rank_treatments(dist, moved).best_treatment
        )


def test_frame_mismatch_rejected():
    other = Variable("diag", ("a", "b", "c"))
    dist = PignisticDistribution(other, {"a": 1.0, "b": 0.0, "c": 0.0})
    with pytest.raises(DomainMismatchError, match="does not match"):
        rank_treatments(dist, SUB_MODEL)


def test_model_validation():
    with pytest.raises(ValueError, match="incomplete"):
        DecisionModel(("t",), ("a", "b"), {"t": {"a": 1.0}})
    with pytest.raises(ValueError, match="rows"):
        DecisionModel(("t",), ("a",), {"t": {"a": 1.0}, "extra": {"a": 0.0}})
    with pytest.raises(ValueError, match="negative cost"):
        DecisionModel(("t",), ("a",), {"t": {"a": 1.0}}, test_costs={"x": -1})
    with pytest.raises(ValueError, match="sorted"):
        TreatmentRanking((("low", 0.0), ("high", 1.0)))


# ---------------------------------------------------------------------------
# payoff_from_costs
# ---------------------------------------------------------------------------

def test_payoffs():
    assert payoff_from_costs(50, 300, True) == -50
    assert payoff_from_costs(60, 300, False) == -360
    assert payoff_from_costs(0, 0, False) == 0


def test_negative_costs_rejected():
    with pytest.raises(ValueError):
        payoff_from_costs(-1, 0, True)
    with pytest.raises(ValueError):
        payoff_from_costs(0, -1, False)
