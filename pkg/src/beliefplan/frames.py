"""Finite frames, product domains, and bit-indexed configuration sets.

A :class:`Variable` owns a finite ordered frame of outcome labels.  A
:class:`Domain` is a set of variables with a canonical order (sorted by id);
its product frame is enumerated row-major with the last variable varying
fastest, and that enumeration is the contract every other module relies on:
a subset of the product frame is stored as a plain Python int whose bit ``i``
is set iff configuration number ``i`` belongs to the subset.  Intersection,
union and complement are then single integer operations, and results are
bit-exact reproducible across runs.

Configurations themselves are plain tuples of labels, one per variable in
domain order.
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import DomainMismatchError, DomainSizeError

#: Default cap on product-frame size; domains beyond it are rejected early.
DEFAULT_SIZE_BOUND = 1 << 20

#: A configuration is one outcome label per variable, in domain order.
Configuration = tuple[str, ...]


@dataclass(frozen=True)
class Variable:
    """A named variable with a finite ordered frame of at least two outcomes.

    The frame order is fixed at creation and is canonical for subset
    encoding, so two variables with the same id must be the same object
    semantically (same labels in the same order).
    """

    id: str
    frame: tuple[str, ...]

    def __post_init__(self):
        if not self.id:
            raise ValueError("variable id must be non-empty")
        frame = tuple(self.frame)
        object.__setattr__(self, "frame", frame)
        if len(frame) < 2:
            raise ValueError(f"variable {self.id!r}: frame needs >= 2 outcomes, got {frame!r}")
        if len(set(frame)) != len(frame):
            raise ValueError(f"variable {self.id!r}: duplicate outcome labels in {frame!r}")

    def index_of(self, label: str) -> int:
        try:
            return self.frame.index(label)
        except ValueError:
            raise ValueError(f"label {label!r} not in frame of {self.id!r} {self.frame!r}") from None


def binary_variable(id: str, positive: str = "+", negative: str = "-") -> Variable:
    """Convenience constructor for two-outcome variables (tests default to +/-)."""
    return Variable(id, (positive, negative))


@dataclass(frozen=True, eq=False)
class Domain:
    """An ordered set of variables spanning a product frame.

    Variables are re-sorted by id at construction, so domains over the same
    variables compare and hash equal no matter the input order.  Construction
    fails when the product frame would exceed ``size_bound`` (default
    ``DEFAULT_SIZE_BOUND``): the propagation layer exists precisely to avoid
    large joint domains, so building one is almost always a mistake.

    Equality and hashing go through a precomputed key: domains sit in cache
    dictionaries on every hot path, and re-hashing the variable tuple each
    time dominates profiles otherwise.
    """

    variables: tuple[Variable, ...]
    size_bound: InitVar[int | None] = None

    # derived, filled in __post_init__ (not part of eq/hash)
    size: int = field(init=False, repr=False, default=1)

    def __post_init__(self, size_bound):
        ordered = tuple(sorted(self.variables, key=lambda v: v.id))
        object.__setattr__(self, "variables", ordered)
        ids = [v.id for v in ordered]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate variable ids in domain: {ids}")
        bound = DEFAULT_SIZE_BOUND if size_bound is None else size_bound
        size = 1
        for v in ordered:
            size *= len(v.frame)
            if size > bound:
                raise DomainSizeError(
                    f"product frame of domain {ids} exceeds size bound {bound}"
                )
        object.__setattr__(self, "size", size)
        # row-major strides, last variable varies fastest
        strides = [1] * len(ordered)
        for i in range(len(ordered) - 2, -1, -1):
            strides[i] = strides[i + 1] * len(ordered[i + 1].frame)
        object.__setattr__(self, "_strides", tuple(strides))
        object.__setattr__(self, "_pos", {v.id: i for i, v in enumerate(ordered)})
        key = tuple((v.id, v.frame) for v in ordered)
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))

    def __eq__(self, other):
        if not isinstance(other, Domain):
            return NotImplemented
        return self._key == other._key

    def __hash__(self):
        return self._hash

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(v.id for v in self.variables)

    def __len__(self) -> int:
        return len(self.variables)

    def __contains__(self, var_id: str) -> bool:
        return var_id in self._pos

    def variable(self, var_id: str) -> Variable:
        try:
            return self.variables[self._pos[var_id]]
        except KeyError:
            raise KeyError(f"variable {var_id!r} not in domain {self.ids}") from None

    def subsumes(self, other: "Domain") -> bool:
        """True if every variable of ``other`` is also a variable of self."""
        return all(v.id in self._pos and self.variable(v.id) == v for v in other.variables)

    def union(self, other: "Domain", size_bound: int | None = None) -> "Domain":
        merged: dict[str, Variable] = {v.id: v for v in self.variables}
        for v in other.variables:
            if v.id in merged and merged[v.id] != v:
                raise DomainMismatchError(
                    f"variable {v.id!r} declared with two different frames"
                )
            merged[v.id] = v
        return Domain(tuple(merged.values()), size_bound=size_bound)

    def restrict(self, var_ids: Iterable[str]) -> "Domain":
        """Subdomain over the given variable ids (must all belong to self)."""
        return Domain(tuple(self.variable(i) for i in var_ids))

    def index_of(self, config: Sequence[str] | Mapping[str, str]) -> int:
        """Enumeration index of a configuration.

        Accepts either a tuple of labels in domain order or a mapping
        var id -> label covering every variable.
        """
        if isinstance(config, Mapping):
            config = tuple(config[v.id] for v in self.variables)
        if len(config) != len(self.variables):
            raise ValueError(
                f"configuration {config!r} has {len(config)} labels, domain has {len(self.variables)}"
            )
        idx = 0
        for label, v, stride in zip(config, self.variables, self._strides):
            idx += v.index_of(label) * stride
        return idx

    def config_at(self, index: int) -> Configuration:
        if not 0 <= index < self.size:
            raise IndexError(f"configuration index {index} out of range for size {self.size}")
        labels = []
        for v, stride in zip(self.variables, self._strides):
            pos, index = divmod(index, stride)
            labels.append(v.frame[pos])
        return tuple(labels)


# ---------------------------------------------------------------------------
# index maps between nested domains (cached; domains are small and immutable)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4096)
def _index_projection(sup: Domain, sub: Domain) -> tuple[int, ...]:
    """For each configuration index of ``sup``, its projection index in ``sub``."""
    if not sup.subsumes(sub):
        raise DomainMismatchError(f"{sub.ids} is not a subdomain of {sup.ids}")
    positions = [sup.ids.index(i) for i in sub.ids]
    out = []
    for i in range(sup.size):
        cfg = sup.config_at(i)
        out.append(sub.index_of(tuple(cfg[p] for p in positions)))
    return tuple(out)


@lru_cache(maxsize=4096)
def _cylinder_masks(sup: Domain, sub: Domain) -> tuple[int, ...]:
    """For each ``sub`` index, the bitmask of all ``sup`` indices projecting to it."""
    masks = [0] * sub.size
    for i, j in enumerate(_index_projection(sup, sub)):
        masks[j] |= 1 << i
    return tuple(masks)


@dataclass(frozen=True)
class ConfigurationSet:
    """A subset of a domain's product frame, encoded as an int bitmask."""

    domain: Domain
    bits: int

    def __post_init__(self):
        if not 0 <= self.bits < (1 << self.domain.size):
            raise ValueError("bitmask out of range for domain size")

    # -- constructors -------------------------------------------------------

    @classmethod
    def empty(cls, domain: Domain) -> "ConfigurationSet":
        return cls(domain, 0)

    @classmethod
    def full(cls, domain: Domain) -> "ConfigurationSet":
        return cls(domain, (1 << domain.size) - 1)

    @classmethod
    def of(cls, domain: Domain, configs: Iterable[Sequence[str] | Mapping[str, str]]) -> "ConfigurationSet":
        bits = 0
        for cfg in configs:
            bits |= 1 << domain.index_of(cfg)
        return cls(domain, bits)

    @classmethod
    def where(cls, domain: Domain, var_id: str, label: str) -> "ConfigurationSet":
        """All configurations of ``domain`` whose ``var_id`` coordinate equals ``label``."""
        var = domain.variable(var_id)
        var.index_of(label)  # validate
        sub = Domain((var,))
        mask = _cylinder_masks(domain, sub)[sub.index_of((label,))]
        return cls(domain, mask)

    # -- set algebra --------------------------------------------------------

    def __and__(self, other: "ConfigurationSet") -> "ConfigurationSet":
        self._check_same_domain(other)
        return ConfigurationSet(self.domain, self.bits & other.bits)

    def __or__(self, other: "ConfigurationSet") -> "ConfigurationSet":
        self._check_same_domain(other)
        return ConfigurationSet(self.domain, self.bits | other.bits)

    def complement(self) -> "ConfigurationSet":
        return ConfigurationSet(self.domain, ((1 << self.domain.size) - 1) ^ self.bits)

    def issubset(self, other: "ConfigurationSet") -> bool:
        self._check_same_domain(other)
        return self.bits & ~other.bits == 0

    @property
    def is_empty(self) -> bool:
        return self.bits == 0

    @property
    def is_full(self) -> bool:
        return self.bits == (1 << self.domain.size) - 1

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __contains__(self, config: Sequence[str] | Mapping[str, str]) -> bool:
        return bool(self.bits >> self.domain.index_of(config) & 1)

    def configs(self) -> Iterator[Configuration]:
        """Iterate member configurations in enumeration order."""
        bits = self.bits
        i = 0
        while bits:
            if bits & 1:
                yield self.domain.config_at(i)
            bits >>= 1
            i += 1

    # -- moving between domains --------------------------------------------

    def project(self, target: Domain) -> "ConfigurationSet":
        """Image of the set under coordinate projection onto ``target``."""
        if target == self.domain:
            return self
        masks = _cylinder_masks(self.domain, target)
        out = 0
        for j, mask in enumerate(masks):
            if self.bits & mask:
                out |= 1 << j
        return ConfigurationSet(target, out)

    def extend(self, superdomain: Domain) -> "ConfigurationSet":
        """Cylinder of the set in ``superdomain`` (cross product with added frames)."""
        if superdomain == self.domain:
            return self
        masks = _cylinder_masks(superdomain, self.domain)
        out = 0
        bits = self.bits
        j = 0
        while bits:
            if bits & 1:
                out |= masks[j]
            bits >>= 1
            j += 1
        return ConfigurationSet(superdomain, out)

    def _check_same_domain(self, other: "ConfigurationSet") -> None:
        if self.domain != other.domain:
            raise DomainMismatchError(
                f"configuration sets on different domains: {self.domain.ids} vs {other.domain.ids}"
            )

    def __repr__(self) -> str:
        members = ",".join("(" + ",".join(c) + ")" for c in self.configs())
        return f"ConfigurationSet({list(self.domain.ids)}: {{{members}}})"
