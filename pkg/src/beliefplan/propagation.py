"""Marginals of a network of local belief relations without big joints.

A :class:`ValuationNetwork` is a set of variables, a list of mass functions
on small subdomains, and categorical evidence.  Queries ask for the marginal
on single variables of the conjunctive combination of everything; computing
that joint directly is exponential, so :func:`propagate` runs Shafer-Shenoy
message passing on a join tree instead.  :func:`brute_force_marginal` is the
deliberately naive oracle: it really does build the joint, and exists so the
clever path can be checked against it.

Evidence is handled by appending one categorical relation per observed
variable (in sorted variable order) before anything else happens, which makes
"evidence entered via the map" and "evidence supplied as an explicit
categorical relation" literally the same computation.

Everything is deterministic: min-degree elimination with lexicographic
tie-breaks, Kruskal tree construction with index tie-breaks, and messages
that are pure functions of the tree, so the evaluation order cannot matter.

Two things keep repeated queries cheap.  Join trees depend only on the
*shape* of a network (variables, relation domains, size bound), never on the
masses, so construction is memoized on that shape; entering evidence for a
variable that already has evidence reuses the tree outright.  And messages
are computed on demand with memoization, so a single-variable query only
pays for the messages flowing toward its host clique.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

from .errors import BeliefPlanError, DomainMismatchError, DomainSizeError
from .frames import Domain, Variable
from .mass import MassFunction, categorical, combine, combine_all, marginalize, vacuous, vacuous_extension


@dataclass(frozen=True)
class ValuationNetwork:
    """Variables, local belief relations, and categorical evidence."""

    variables: tuple[Variable, ...]
    relations: tuple[MassFunction, ...] = ()
    evidence: dict[str, str] = field(default_factory=dict)
    size_bound: int | None = None

    def __post_init__(self):
        ordered = tuple(sorted(self.variables, key=lambda v: v.id))
        object.__setattr__(self, "variables", ordered)
        by_id = {v.id: v for v in ordered}
        if len(by_id) != len(ordered):
            raise ValueError("duplicate variable ids in network")
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "relations", tuple(self.relations))
        for r in self.relations:
            for v in r.domain.variables:
                declared = by_id.get(v.id)
                if declared is None:
                    raise DomainMismatchError(f"relation uses undeclared variable {v.id!r}")
                if declared != v:
                    raise DomainMismatchError(
                        f"relation redeclares variable {v.id!r} with a different frame"
                    )
        for var_id, label in self.evidence.items():
            self.variable(var_id).index_of(label)

    def variable(self, var_id: str) -> Variable:
        try:
            return self._by_id[var_id]
        except KeyError:
            raise KeyError(f"unknown variable {var_id!r}") from None

    def with_evidence(self, var_id: str, label: str) -> "ValuationNetwork":
        """A copy of the network with one more observation (replacing any prior value)."""
        self.variable(var_id).index_of(label)
        merged = dict(self.evidence)
        merged[var_id] = label
        return ValuationNetwork(self.variables, self.relations, merged, self.size_bound)

    def effective_relations(self) -> tuple[MassFunction, ...]:
        """Declared relations followed by one categorical per evidence entry."""
        extra = tuple(
            categorical(self.variable(var_id), self.evidence[var_id])
            for var_id in sorted(self.evidence)
        )
        return self.relations + extra


@dataclass(frozen=True)
class JoinTree:
    """Cliques of variables forming a forest with the running-intersection property.

    ``cliques[i]`` is a sorted tuple of variable ids; ``edges`` carry the
    separator (intersection of the endpoints); ``relation_clique[r]`` names
    the clique hosting effective relation ``r``.
    """

    cliques: tuple[tuple[str, ...], ...]
    edges: tuple[tuple[int, int, tuple[str, ...]], ...]
    relation_clique: tuple[int, ...]
    domains: tuple[Domain, ...] = field(compare=False, repr=False)

    def neighbors(self, i: int) -> list[tuple[int, tuple[str, ...]]]:
        out = []
        for a, b, sep in self.edges:
            if a == i:
                out.append((b, sep))
            elif b == i:
                out.append((a, sep))
        return out


def _variable_graph(rel_domains: Sequence[Domain]) -> dict[str, set[str]]:
    adj: dict[str, set[str]] = {}
    for rd in rel_domains:
        ids = rd.ids
        for v in ids:
            adj.setdefault(v, set())
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                adj[a].add(b)
                adj[b].add(a)
    return adj


def _components(adj: dict[str, set[str]]) -> list[list[str]]:
    seen: set[str] = set()
    comps = []
    for start in sorted(adj):
        if start in seen:
            continue
        comp = []
        stack = [start]
        seen.add(start)
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in sorted(adj[v]):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def _eliminate(component: list[str], adj: dict[str, set[str]]) -> list[tuple[str, ...]]:
    """Min-degree elimination (lexicographic tie-break) over one component.

    Returns the elimination cliques in creation order; mutates nothing.
    """
    local = {v: set(adj[v]) for v in component}
    cliques: list[tuple[str, ...]] = []
    while local:
        v = min(local, key=lambda u: (len(local[u]), u))
        neigh = sorted(local[v])
        cliques.append(tuple(sorted([v] + neigh)))
        for a in neigh:
            for b in neigh:
                if a != b:
                    local[a].add(b)
            local[a].discard(v)
        del local[v]
    return cliques


def _maximal(cliques: list[tuple[str, ...]]) -> list[tuple[str, ...]]:
    kept = []
    for i, c in enumerate(cliques):
        ci = set(c)
        absorbed = False
        for j, d in enumerate(cliques):
            if i == j:
                continue
            dj = set(d)
            if ci <= dj and (ci != dj or j < i):
                absorbed = True
                break
        if not absorbed:
            kept.append(c)
    return kept


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def build_join_tree(net: ValuationNetwork) -> JoinTree:
    """Deterministic join tree (forest for disconnected networks) covering
    every effective relation of the network."""
    rel_domains = tuple(r.domain for r in net.effective_relations())
    return _tree_for_shape(net.variables, rel_domains, net.size_bound)


@lru_cache(maxsize=1024)
def _tree_for_shape(
    variables: tuple[Variable, ...],
    rel_domains: tuple[Domain, ...],
    size_bound: int | None,
) -> JoinTree:
    by_id = {v.id: v for v in variables}
    adj = _variable_graph(rel_domains)
    cliques: list[tuple[str, ...]] = []
    for comp in _components(adj):
        cliques.extend(_maximal(_eliminate(comp, adj)))

    domains = []
    for c in cliques:
        try:
            domains.append(Domain(tuple(by_id[v] for v in c), size_bound=size_bound))
        except DomainSizeError as exc:
            raise DomainSizeError(f"join-tree clique {c} too large: {exc}") from exc

    clique_sets = [set(c) for c in cliques]
    candidates = []
    for i in range(len(cliques)):
        for j in range(i + 1, len(cliques)):
            sep = clique_sets[i] & clique_sets[j]
            if sep:
                candidates.append((-len(sep), i, j))
    candidates.sort()
    uf = _UnionFind(len(cliques))
    edges = []
    for negw, i, j in candidates:
        if uf.union(i, j):
            edges.append((i, j, tuple(sorted(clique_sets[i] & clique_sets[j]))))

    assignment = []
    for rd in rel_domains:
        needed = set(rd.ids)
        host = next((i for i, cs in enumerate(clique_sets) if needed <= cs), None)
        if host is None:
            raise BeliefPlanError(f"no clique covers relation on {rd.ids}")
        assignment.append(host)

    tree = JoinTree(tuple(cliques), tuple(edges), tuple(assignment), tuple(domains))
    _verify_running_intersection(tree)
    return tree


def _verify_running_intersection(tree: JoinTree) -> None:
    """Every variable's cliques must form a connected subtree."""
    adj: dict[int, set[int]] = {i: set() for i in range(len(tree.cliques))}
    for a, b, _ in tree.edges:
        adj[a].add(b)
        adj[b].add(a)
    vars_all = {v for c in tree.cliques for v in c}
    for v in vars_all:
        holding = [i for i, c in enumerate(tree.cliques) if v in c]
        seen = {holding[0]}
        stack = [holding[0]]
        while stack:
            i = stack.pop()
            for j in adj[i]:
                if j not in seen and v in tree.cliques[j]:
                    seen.add(j)
                    stack.append(j)
        if seen != set(holding):
            raise BeliefPlanError(f"running intersection violated for variable {v!r}")


def _clique_potentials(net: ValuationNetwork, tree: JoinTree) -> list[MassFunction]:
    relations = net.effective_relations()
    grouped: dict[int, list[MassFunction]] = {}
    for r_idx, c_idx in enumerate(tree.relation_clique):
        grouped.setdefault(c_idx, []).append(relations[r_idx])
    return [
        combine_all(grouped.get(i, []), domain=tree.domains[i])
        for i in range(len(tree.cliques))
    ]


class _Engine:
    """On-demand Shafer-Shenoy messages over one network's join tree.

    A message i->j is the clique-i potential combined with every incoming
    message except the one from j, marginalized to the separator.  Messages
    are memoized, so asking for several clique beliefs shares work; asking
    for one only ever touches the part of the tree feeding it.
    """

    def __init__(self, net: ValuationNetwork, tree: JoinTree):
        self.tree = tree
        self.potentials = _clique_potentials(net, tree)
        self._adj: dict[int, list[int]] = {i: [] for i in range(len(tree.cliques))}
        self._sep: dict[tuple[int, int], tuple[str, ...]] = {}
        for a, b, sep in tree.edges:
            self._adj[a].append(b)
            self._adj[b].append(a)
            self._sep[(a, b)] = sep
            self._sep[(b, a)] = sep
        for lst in self._adj.values():
            lst.sort()
        self._messages: dict[tuple[int, int], MassFunction] = {}
        self._beliefs: dict[int, MassFunction] = {}

    def components(self) -> list[list[int]]:
        """Connected clique components, each sorted, ordered by lowest clique."""
        seen: set[int] = set()
        comps = []
        for root in range(len(self.tree.cliques)):
            if root in seen:
                continue
            comp = [root]
            seen.add(root)
            qi = 0
            while qi < len(comp):
                for j in self._adj[comp[qi]]:
                    if j not in seen:
                        seen.add(j)
                        comp.append(j)
                qi += 1
            comps.append(sorted(comp))
        return comps

    def message(self, src: int, dst: int) -> MassFunction:
        done = self._messages
        out = done.get((src, dst))
        if out is not None:
            return out
        # explicit stack instead of recursion: long chains must not hit the
        # interpreter recursion limit
        stack = [(src, dst)]
        while stack:
            a, b = stack[-1]
            if (a, b) in done:
                stack.pop()
                continue
            pending = [(k, a) for k in self._adj[a] if k != b and (k, a) not in done]
            if pending:
                stack.extend(pending)
                continue
            dom = self.tree.domains[a]
            combined = self.potentials[a]
            for k in self._adj[a]:
                if k != b:
                    combined = combine(combined, vacuous_extension(done[(k, a)], dom))
            done[(a, b)] = marginalize(combined, dom.restrict(self._sep[(a, b)]))
            stack.pop()
        return done[(src, dst)]

    def clique_belief(self, i: int) -> MassFunction:
        """Potential of clique ``i`` combined with every incoming message."""
        out = self._beliefs.get(i)
        if out is None:
            dom = self.tree.domains[i]
            out = self.potentials[i]
            for k in self._adj[i]:
                out = combine(out, vacuous_extension(self.message(k, i), dom))
            self._beliefs[i] = out
        return out


def propagate(net: ValuationNetwork, targets: Sequence[str | Variable]) -> dict[str, MassFunction]:
    """Marginal mass function on each target variable.

    Each marginal equals the one the brute-force joint combination would
    give, computed by local message passing instead.  Conflict (mass on the
    empty set) is global: a contradiction anywhere in the network shows up in
    every marginal, so per-component conflicts are folded into each result.
    """
    ids = [t.id if isinstance(t, Variable) else t for t in targets]
    for t in ids:
        net.variable(t)  # raises on unknown target
    tree = build_join_tree(net)
    engine = _Engine(net, tree)

    comps = engine.components()
    component_of = {i: ci for ci, comp in enumerate(comps) for i in comp}

    host_of: dict[str, int | None] = {}
    for t in ids:
        host_of[t] = next((i for i, c in enumerate(tree.cliques) if t in c), None)

    # marginalizing never maps a non-empty set to the empty set, so the
    # conflict seen at any clique is exactly its whole component's conflict.
    # Probe each component at a clique we need anyway when possible.
    probes: dict[int, int] = {}
    for t in ids:
        h = host_of[t]
        if h is not None:
            probes.setdefault(component_of[h], h)
    conflicts = [
        engine.clique_belief(probes.get(ci, comp[0])).conflict()
        for ci, comp in enumerate(comps)
    ]

    out: dict[str, MassFunction] = {}
    for t in ids:
        dom = Domain((net.variable(t),))
        i = host_of[t]
        if i is None:
            surviving = math.prod(1.0 - k for k in conflicts)
            if surviving == 1.0:
                out[t] = vacuous(dom)
            else:
                out[t] = MassFunction(
                    dom, {(1 << dom.size) - 1: surviving, 0: 1.0 - surviving}
                )
            continue
        local = marginalize(engine.clique_belief(i), dom)
        other = math.prod(
            1.0 - k for ci, k in enumerate(conflicts) if ci != component_of[i]
        )
        if other == 1.0:
            out[t] = local  # exact floats preserved on the conflict-free path
        else:
            scaled = {b: w * other for b, w in local.masses.items() if b != 0}
            scaled[0] = 1.0 - other * (1.0 - local.conflict())
            out[t] = MassFunction(dom, scaled)
    return out


def propagate_single(net: ValuationNetwork, target: str | Variable) -> MassFunction:
    """Marginal on one variable; shorthand for ``propagate(net, [target])``."""
    tid = target.id if isinstance(target, Variable) else target
    return propagate(net, [tid])[tid]


def brute_force_marginal(net: ValuationNetwork, target: str | Variable) -> MassFunction:
    """Oracle: combine everything on the full joint domain, then marginalize.

    Only usable when the joint product frame is within the size bound.
    """
    tid = target.id if isinstance(target, Variable) else target
    tvar = net.variable(tid)
    joint = Domain(net.variables, size_bound=net.size_bound)
    combined = combine_all(list(net.effective_relations()), domain=joint)
    return marginalize(combined, Domain((tvar,)))
