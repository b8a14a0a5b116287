"""Basic belief masses over product frames and the belief-function algebra.

The credal-level currency is the :class:`MassFunction`: a map from focal
subsets of a domain's product frame to strictly positive masses summing to
one.  Combination is the unnormalized conjunctive rule (mass may land on the
empty set; this is the open-world reading where the empty-set mass measures
conflict), with Dempster's normalized rule available as an explicit variant.
Marginalization, vacuous extension, ballooning of conditional belief
functions and conditioning complete the algebra.

All values are immutable after construction and all operations are pure
functions, so everything here is safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import ContradictionError, DomainMismatchError
from .frames import ConfigurationSet, Domain, Variable, _cylinder_masks

#: Tolerance on the "masses sum to one" invariant.
MASS_TOL = 1e-9

#: Masses below this after a combination are numerical dust and get pruned.
PRUNE_EPS = 1e-12


def _as_bits(domain: Domain, focal) -> int:
    if isinstance(focal, ConfigurationSet):
        if focal.domain != domain:
            raise DomainMismatchError(
                f"focal set on domain {focal.domain.ids}, expected {domain.ids}"
            )
        return focal.bits
    return int(focal)


@dataclass(frozen=True)
class MassFunction:
    """Basic belief masses on the subsets of a domain's product frame.

    ``masses`` maps bit-encoded focal sets to masses in (0, 1].  Zero-mass
    entries are dropped at construction, negative masses are rejected, and
    the total must be 1 within ``MASS_TOL``.  The empty set may carry mass.
    """

    domain: Domain
    masses: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        clean: dict[int, float] = {}
        limit = 1 << self.domain.size
        for focal, mass in self.masses.items():
            bits = _as_bits(self.domain, focal)
            if not 0 <= bits < limit:
                raise ValueError(f"focal bitmask {bits} out of range for domain {self.domain.ids}")
            if mass < 0:
                raise ValueError(f"negative mass {mass} on focal set {bits:#x}")
            if mass == 0:
                continue
            clean[bits] = clean.get(bits, 0.0) + mass
        total = sum(clean.values())
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"masses sum to {total!r}, expected 1 within {MASS_TOL}")
        object.__setattr__(self, "masses", clean)

    # -- access -------------------------------------------------------------

    def mass_of(self, focal) -> float:
        """Mass of a focal set (0.0 if not focal); accepts a ConfigurationSet or bitmask."""
        return self.masses.get(_as_bits(self.domain, focal), 0.0)

    def conflict(self) -> float:
        """Mass on the empty set."""
        return self.masses.get(0, 0.0)

    def focal_sets(self) -> Iterator[tuple[ConfigurationSet, float]]:
        """Iterate (focal set, mass) pairs in ascending bitmask order."""
        for bits in sorted(self.masses):
            yield ConfigurationSet(self.domain, bits), self.masses[bits]

    @property
    def is_vacuous(self) -> bool:
        full = (1 << self.domain.size) - 1
        return set(self.masses) == {full}

    def is_total_conflict(self, tol: float = PRUNE_EPS) -> bool:
        return self.conflict() >= 1.0 - tol

    def allclose(self, other: "MassFunction", tol: float = MASS_TOL) -> bool:
        """Per-focal-mass comparison within ``tol`` (missing focal sets count as 0)."""
        if self.domain != other.domain:
            return False
        keys = set(self.masses) | set(other.masses)
        return all(
            abs(self.masses.get(k, 0.0) - other.masses.get(k, 0.0)) <= tol for k in keys
        )

    def __repr__(self) -> str:
        parts = ", ".join(
            f"{set(map('|'.join, cs.configs())) if not cs.is_empty else '{}'}"
            f"{'=Ω' if cs.is_full else ''}: {m:.6g}"
            for cs, m in self.focal_sets()
        )
        return f"MassFunction({list(self.domain.ids)}; {parts})"


@dataclass(frozen=True)
class ConditionalBelief:
    """A belief function on a target domain, held conditionally on one value
    of a variable outside that domain ("if X = x0 then masses...")."""

    condition_variable: Variable
    condition_value: str
    conditional: MassFunction

    def __post_init__(self):
        self.condition_variable.index_of(self.condition_value)
        if self.condition_variable.id in self.conditional.domain:
            raise DomainMismatchError(
                f"condition variable {self.condition_variable.id!r} overlaps the target domain"
            )

    @property
    def target_domain(self) -> Domain:
        return self.conditional.domain


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def vacuous(domain: Domain) -> MassFunction:
    """Total ignorance: the whole frame carries mass 1."""
    return MassFunction(domain, {(1 << domain.size) - 1: 1.0})


def simple_support(domain: Domain, support: ConfigurationSet, weight: float) -> MassFunction:
    """Mass ``weight`` on ``support`` and the rest on the whole frame.

    ``support`` must be a non-empty proper subset; ``weight`` in (0, 1].
    A weight of exactly 1 yields a categorical mass function.
    """
    bits = _as_bits(domain, support)
    if not 0 < weight <= 1:
        raise ValueError(f"simple-support weight must be in (0, 1], got {weight}")
    if bits == 0:
        raise ValueError("simple-support set must be non-empty")
    if bits == (1 << domain.size) - 1:
        raise ValueError("simple-support set must be a proper subset of the frame")
    if weight == 1:
        return MassFunction(domain, {bits: 1.0})
    return MassFunction(domain, {bits: weight, (1 << domain.size) - 1: 1.0 - weight})


def categorical(variable: Variable, label: str) -> MassFunction:
    """Certainty that ``variable`` takes ``label``: mass 1 on that singleton."""
    dom = Domain((variable,))
    return MassFunction(dom, {1 << dom.index_of((label,)): 1.0})


# ---------------------------------------------------------------------------
# the algebra
# ---------------------------------------------------------------------------

def combine(m1: MassFunction, m2: MassFunction) -> MassFunction:
    """Unnormalized conjunctive combination (TBM).

    m(C) = sum over A∩B = C of m1(A)·m2(B), including C = ∅.  Both operands
    must live on the same domain; extend first via :func:`vacuous_extension`.
    Numerical dust below ``PRUNE_EPS`` is pruned and the remainder rescaled
    so the total mass is preserved.
    """
    if m1.domain != m2.domain:
        raise DomainMismatchError(
            f"cannot combine mass functions on {m1.domain.ids} and {m2.domain.ids}"
        )
    acc: dict[int, float] = {}
    for a, wa in m1.masses.items():
        for b, wb in m2.masses.items():
            c = a & b
            acc[c] = acc.get(c, 0.0) + wa * wb
    total = sum(acc.values())
    pruned = {k: v for k, v in acc.items() if v >= PRUNE_EPS}
    if len(pruned) != len(acc):
        scale = total / sum(pruned.values())
        pruned = {k: v * scale for k, v in pruned.items()}
    return MassFunction(m1.domain, pruned)


def combine_dempster(m1: MassFunction, m2: MassFunction) -> MassFunction:
    """Dempster's rule: conjunctive combination with conflict renormalized away."""
    raw = combine(m1, m2)
    k = raw.conflict()
    if k >= 1.0 - PRUNE_EPS:
        raise ContradictionError("total conflict: Dempster combination undefined")
    if k == 0.0:
        return raw
    scale = 1.0 / (1.0 - k)
    return MassFunction(raw.domain, {b: w * scale for b, w in raw.masses.items() if b != 0})


def marginalize(m: MassFunction, target: Domain) -> MassFunction:
    """Project every focal set onto ``target`` and sum masses of equal projections."""
    if target == m.domain:
        return m
    if not m.domain.subsumes(target):
        raise DomainMismatchError(f"{target.ids} is not a subdomain of {m.domain.ids}")
    # bitmask arithmetic directly: this runs once per focal set per message
    masks = _cylinder_masks(m.domain, target)
    acc: dict[int, float] = {}
    for bits, w in m.masses.items():
        p = 0
        for j, mask in enumerate(masks):
            if bits & mask:
                p |= 1 << j
        acc[p] = acc.get(p, 0.0) + w
    return MassFunction(target, acc)


def vacuous_extension(m: MassFunction, superdomain: Domain) -> MassFunction:
    """Cylinder each focal set into ``superdomain``; masses unchanged."""
    if superdomain == m.domain:
        return m
    if not superdomain.subsumes(m.domain):
        raise DomainMismatchError(f"{m.domain.ids} is not a subdomain of {superdomain.ids}")
    masks = _cylinder_masks(superdomain, m.domain)
    ext: dict[int, float] = {}
    for bits, w in m.masses.items():
        out = 0
        j = 0
        while bits:
            if bits & 1:
                out |= masks[j]
            bits >>= 1
            j += 1
        ext[out] = w
    return MassFunction(superdomain, ext)


def balloon(cond: ConditionalBelief, size_bound: int | None = None) -> MassFunction:
    """Ballooning extension of a conditional belief function.

    Each conditional focal set B with mass w becomes the joint focal set
    ({x0} × B) ∪ ({x0}ᶜ × Ω_target): the belief constrains only the slice
    where the condition holds and is vacuous everywhere else.  The joint
    domain is built here, so this is the place a caller's size bound applies.
    """
    joint = cond.target_domain.union(Domain((cond.condition_variable,)), size_bound=size_bound)
    slice_mask = ConfigurationSet.where(joint, cond.condition_variable.id, cond.condition_value)
    rest = slice_mask.complement()
    acc: dict[int, float] = {}
    for bits, w in cond.conditional.masses.items():
        cyl = ConfigurationSet(cond.target_domain, bits).extend(joint)
        focal = ((cyl & slice_mask) | rest).bits
        acc[focal] = acc.get(focal, 0.0) + w
    return MassFunction(joint, acc)


def condition_on(m: MassFunction, var_id: str, label: str) -> MassFunction:
    """Combine ``m`` with certainty that ``var_id`` equals ``label``."""
    var = m.domain.variable(var_id)
    return combine(m, vacuous_extension(categorical(var, label), m.domain))


def combine_all(masses: Sequence[MassFunction], domain: Domain | None = None) -> MassFunction:
    """Fold a sequence of mass functions with :func:`combine`.

    Operands are vacuously extended step by step to the running union of
    domains (or directly to ``domain`` when given).  An empty sequence
    yields the vacuous belief on ``domain``, which is then mandatory.
    """
    if not masses:
        if domain is None:
            raise ValueError("combine_all of nothing needs an explicit domain")
        return vacuous(domain)
    if domain is not None:
        out = vacuous_extension(masses[0], domain)
        for m in masses[1:]:
            out = combine(out, vacuous_extension(m, domain))
        return out
    out = masses[0]
    for m in masses[1:]:
        if out.domain != m.domain:
            union = out.domain.union(m.domain)
            out = vacuous_extension(out, union)
            m = vacuous_extension(m, union)
        out = combine(out, m)
    return out
