"""Mass functions and the belief-function algebra, example by example.

Derived expectations here were computed by hand from the definitions
(enumerating intersection products, projecting focal sets) before the
implementation existed; they are frozen as literals.
"""

import pytest

from beliefplan.errors import ContradictionError, DomainMismatchError
from beliefplan.frames import ConfigurationSet, Domain, Variable
from beliefplan.mass import (
    ConditionalBelief,
    MassFunction,
    balloon,
    categorical,
    combine,
    combine_all,
    combine_dempster,
    condition_on,
    marginalize,
    simple_support,
    vacuous,
    vacuous_extension,
)

SYMP = Variable("symp", ("yes", "no"))
TEST = Variable("test", ("+", "-"))
DIAG = Variable("diagnosis", ("a", "b", "c", "d", "e", "f", "g", "omega"))
AB = Variable("X", ("a", "b"))


def fs(domain, *configs):
    return ConfigurationSet.of(domain, configs)


def bits(domain, *configs):
    return ConfigurationSet.of(domain, configs).bits


# ---------------------------------------------------------------------------
# construction invariants
# ---------------------------------------------------------------------------

def test_masses_must_sum_to_one():
    d = Domain((AB,))
    with pytest.raises(ValueError):
        MassFunction(d, {fs(d, ("a",)): 0.5})
    with pytest.raises(ValueError):
        MassFunction(d, {fs(d, ("a",)): -0.2, fs(d, ("b",)): 1.2})


def test_zero_mass_entries_are_removed():
    d = Domain((AB,))
    m = MassFunction(d, {fs(d, ("a",)): 1.0, fs(d, ("b",)): 0.0})
    assert m.masses == {bits(d, ("a",)): 1.0}


def test_empty_set_may_carry_mass():
    d = Domain((AB,))
    m = MassFunction(d, {0: 0.2, fs(d, ("a",), ("b",)): 0.8})
    assert m.conflict() == 0.2


# ---------------------------------------------------------------------------
# vacuous
# ---------------------------------------------------------------------------

def test_vacuous_on_diagnosis_frame():
    d = Domain((DIAG,))
    m = vacuous(d)
    assert m.masses == {(1 << 8) - 1: 1.0}
    assert m.is_vacuous


def test_vacuous_on_binary_frame():
    d = Domain((TEST,))
    assert vacuous(d).masses == {0b11: 1.0}


def test_vacuous_is_combine_identity():
    d = Domain((AB,))
    m = MassFunction(d, {fs(d, ("a",)): 0.6, ConfigurationSet.full(d): 0.4})
    assert combine(vacuous(d), m).masses == m.masses
    assert combine(m, vacuous(d)).masses == m.masses


# ---------------------------------------------------------------------------
# simple support
# ---------------------------------------------------------------------------

def test_simple_support_paper_weight():
    # the 0.99 support on a positive test result, rest to the whole frame
    d = Domain((TEST,))
    m = simple_support(d, fs(d, ("+",)), 0.99)
    assert m.masses == {bits(d, ("+",)): 0.99, 0b11: 1 - 0.99}


def test_simple_support_weight_one_is_categorical():
    d = Domain((SYMP,))
    m = simple_support(d, fs(d, ("yes",)), 1.0)
    assert m.masses == {bits(d, ("yes",)): 1.0}


def test_simple_support_on_wide_frame():
    d = Domain((DIAG,))
    m = simple_support(d, fs(d, ("a",), ("b",)), 0.6)
    assert m.mass_of(fs(d, ("a",), ("b",))) == 0.6
    assert m.mass_of(ConfigurationSet.full(d)) == pytest.approx(0.4)


def test_simple_support_rejects_bad_inputs():
    d = Domain((TEST,))
    with pytest.raises(ValueError):
        simple_support(d, fs(d, ("+",)), 0.0)
    with pytest.raises(ValueError):
        simple_support(d, fs(d, ("+",)), 1.2)
    with pytest.raises(ValueError):
        simple_support(d, ConfigurationSet.empty(d), 0.5)
    with pytest.raises(ValueError):
        simple_support(d, ConfigurationSet.full(d), 0.5)


# ---------------------------------------------------------------------------
# combine
# ---------------------------------------------------------------------------

def test_combine_two_simple_supports():
    # hand enumeration of the four intersection products:
    # {a}&{a}=.30  {a}&Ω=.30  Ω&{a}=.20  Ω&Ω=.20  ->  {a}: .8, Ω: .2
    d = Domain((AB,))
    m1 = MassFunction(d, {fs(d, ("a",)): 0.6, ConfigurationSet.full(d): 0.4})
    m2 = MassFunction(d, {fs(d, ("a",)): 0.5, ConfigurationSet.full(d): 0.5})
    out = combine(m1, m2)
    assert out.mass_of(fs(d, ("a",))) == pytest.approx(0.8, abs=1e-12)
    assert out.mass_of(ConfigurationSet.full(d)) == pytest.approx(0.2, abs=1e-12)
    assert len(out.masses) == 2


def test_combine_disjoint_certainty_is_total_conflict():
    d = Domain((AB,))
    out = combine(categorical(AB, "a"), categorical(AB, "b"))
    assert out.masses == {0: 1.0}
    assert out.is_total_conflict()


def test_combine_requires_same_domain():
    with pytest.raises(DomainMismatchError):
        combine(vacuous(Domain((AB,))), vacuous(Domain((TEST,))))


def test_combine_dempster_renormalizes_conflict():
    d = Domain((AB,))
    m1 = MassFunction(d, {fs(d, ("a",)): 0.6, ConfigurationSet.full(d): 0.4})
    m2 = MassFunction(d, {fs(d, ("b",)): 0.5, ConfigurationSet.full(d): 0.5})
    # conjunctive: ∅ .30, {a} .30, {b} .20, Ω .20 -> Dempster scales by 1/.7
    out = combine_dempster(m1, m2)
    assert out.conflict() == 0.0
    assert out.mass_of(fs(d, ("a",))) == pytest.approx(0.3 / 0.7)
    with pytest.raises(ContradictionError):
        combine_dempster(categorical(AB, "a"), categorical(AB, "b"))


# ---------------------------------------------------------------------------
# marginalize
# ---------------------------------------------------------------------------

def test_marginalize_ballooned_relation_to_test():
    # both focal sets project onto the full test frame
    joint = Domain((SYMP, TEST))
    m = MassFunction(
        joint,
        {fs(joint, ("yes", "+"), ("no", "+"), ("no", "-")): 0.99, ConfigurationSet.full(joint): 0.01},
    )
    out = marginalize(m, Domain((TEST,)))
    assert out.masses == {0b11: pytest.approx(1.0)}


def test_marginalize_identity_on_same_domain():
    d = Domain((SYMP, TEST))
    m = MassFunction(d, {fs(d, ("yes", "+")): 1.0})
    assert marginalize(m, d) is m


def test_marginalize_singleton_projection():
    joint = Domain((DIAG, TEST))
    m = MassFunction(joint, {fs(joint, ("a", "+")): 1.0})
    out = marginalize(m, Domain((DIAG,)))
    d = Domain((DIAG,))
    assert out.masses == {bits(d, ("a",)): 1.0}


def test_marginalize_requires_subdomain():
    with pytest.raises(DomainMismatchError):
        marginalize(vacuous(Domain((SYMP,))), Domain((TEST,)))


# ---------------------------------------------------------------------------
# vacuous extension
# ---------------------------------------------------------------------------

def test_extension_of_singleton_is_cylinder():
    t = Domain((TEST,))
    joint = Domain((SYMP, TEST))
    m = MassFunction(t, {fs(t, ("+",)): 1.0})
    out = vacuous_extension(m, joint)
    assert out.masses == {bits(joint, ("yes", "+"), ("no", "+")): 1.0}


def test_extension_then_marginalize_is_identity():
    t = Domain((TEST,))
    joint = Domain((SYMP, TEST, DIAG))
    m = MassFunction(t, {fs(t, ("+",)): 0.7, ConfigurationSet.full(t): 0.3})
    back = marginalize(vacuous_extension(m, joint), t)
    assert back.masses == m.masses


def test_extension_of_vacuous_is_vacuous():
    t = Domain((TEST,))
    joint = Domain((SYMP, TEST))
    assert vacuous_extension(vacuous(t), joint).is_vacuous


# ---------------------------------------------------------------------------
# ballooning
# ---------------------------------------------------------------------------

def test_balloon_worked_example():
    # "if symp = yes then test positive with mass .99" balloons to
    # .99 on {(yes,+),(no,+),(no,-)} and .01 on the whole joint frame
    t = Domain((TEST,))
    cond = ConditionalBelief(
        SYMP, "yes", MassFunction(t, {fs(t, ("+",)): 0.99, ConfigurationSet.full(t): 0.01})
    )
    out = balloon(cond)
    joint = Domain((SYMP, TEST))
    assert out.domain == joint
    assert out.masses == {
        bits(joint, ("yes", "+"), ("no", "+"), ("no", "-")): 0.99,
        (1 << 4) - 1: 0.01,
    }


def test_balloon_vacuous_conditional_is_vacuous():
    t = Domain((TEST,))
    cond = ConditionalBelief(SYMP, "yes", vacuous(t))
    assert balloon(cond).is_vacuous


def test_balloon_categorical_conditional():
    # if X = x0 then certainly y1: focal {(x0,y1),(x1,y1),(x1,y2)}
    x = Variable("X", ("x0", "x1"))
    y = Variable("Y", ("y1", "y2"))
    yd = Domain((y,))
    cond = ConditionalBelief(x, "x0", MassFunction(yd, {fs(yd, ("y1",)): 1.0}))
    out = balloon(cond)
    joint = Domain((x, y))
    assert out.masses == {bits(joint, ("x0", "y1"), ("x1", "y1"), ("x1", "y2")): 1.0}


def test_balloon_rejects_overlapping_domains():
    t = Domain((TEST,))
    with pytest.raises(DomainMismatchError):
        ConditionalBelief(TEST, "+", vacuous(t))


# ---------------------------------------------------------------------------
# conditioning
# ---------------------------------------------------------------------------

def test_condition_vacuous_restricts_to_slice():
    joint = Domain((SYMP, TEST))
    out = condition_on(vacuous(joint), "test", "+")
    assert out.masses == {bits(joint, ("yes", "+"), ("no", "+")): 1.0}


def test_conditioning_is_idempotent():
    joint = Domain((SYMP, TEST))
    m = MassFunction(
        joint,
        {fs(joint, ("yes", "+"), ("no", "+"), ("no", "-")): 0.99, ConfigurationSet.full(joint): 0.01},
    )
    once = condition_on(m, "test", "+")
    twice = condition_on(once, "test", "+")
    assert once.masses == twice.masses


def test_positive_test_alone_does_not_confirm_symptom():
    # condition the ballooned relation on test=+ and marginalize to symp:
    # both focal sets intersect the slice in {(yes,+),(no,+)}, whose symp
    # projection is the whole frame, so the result is vacuous
    t = Domain((TEST,))
    cond = ConditionalBelief(
        SYMP, "yes", MassFunction(t, {fs(t, ("+",)): 0.99, ConfigurationSet.full(t): 0.01})
    )
    out = marginalize(condition_on(balloon(cond), "test", "+"), Domain((SYMP,)))
    assert out.is_vacuous


def test_condition_on_unknown_value():
    with pytest.raises(ValueError):
        condition_on(vacuous(Domain((TEST,))), "test", "maybe")


# ---------------------------------------------------------------------------
# combine_all
# ---------------------------------------------------------------------------

def test_combine_all_extends_to_union():
    ds, dt = Domain((SYMP,)), Domain((TEST,))
    out = combine_all([categorical(SYMP, "yes"), categorical(TEST, "+")])
    joint = Domain((SYMP, TEST))
    assert out.domain == joint
    assert out.masses == {bits(joint, ("yes", "+")): 1.0}


def test_combine_all_empty_needs_domain():
    with pytest.raises(ValueError):
        combine_all([])
    assert combine_all([], domain=Domain((TEST,))).is_vacuous
