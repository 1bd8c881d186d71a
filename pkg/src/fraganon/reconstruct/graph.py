"""Dependency graph over equivalence classes and the three enforcement strategies.

Enforcement mutates the equivalence classes referenced by the graph in place;
callers that need the pre-enforcement state should copy fragments first.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..mondrian import EC_LEVEL, TUPLE_LEVEL, AnonymizedFragment, EquivalenceClass
from .joins import Violation
from .versions import eta, eta_shape_at_least

log = logging.getLogger(__name__)

DEFAULT_SEED = 0


class EnforcementError(RuntimeError):
    """A component could not be brought into compliance."""


@dataclass
class EnforcementReport:
    strategy: str
    distorted_class_values: int = 0
    removed_class_values: int = 0
    pairs_checked: int = 0
    components: int = 0
    changed_classes: int = 0

    @property
    def total(self) -> int:
        return self.distorted_class_values + self.removed_class_values

    def as_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "distorted_class_values": self.distorted_class_values,
            "removed_class_values": self.removed_class_values,
            "pairs_checked": self.pairs_checked,
            "components": self.components,
            "changed_classes": self.changed_classes,
        }


@dataclass(eq=False)
class DependencyGraph:
    """Nodes are (fragment id, class) pairs; edges join classes of different
    fragments that share a class value."""

    fragment_ids: np.ndarray
    eqs: list[EquivalenceClass]
    adjacency: np.ndarray
    component_ids: np.ndarray
    visit_order: list[int]
    seed: int = DEFAULT_SEED
    positions: list[int] = field(default_factory=list)

    def __len__(self):
        return len(self.eqs)

    @property
    def n_components(self) -> int:
        return int(self.component_ids.max()) + 1 if len(self.eqs) else 0

    def neighbors(self, u: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[u])

    def edges(self) -> set[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return set(zip(i.tolist(), j.tolist()))

    def components(self) -> list[list[int]]:
        """Nodes of each component, listed in discovery order."""
        out: list[list[int]] = [[] for _ in range(self.n_components)]
        for u in self.visit_order:
            out[self.component_ids[u]].append(u)
        return out


def build_dependency_graph(all_eqs: Sequence[tuple[int, EquivalenceClass]], seed: int = DEFAULT_SEED) -> DependencyGraph:
    """Build the graph and label components by BFS from randomly chosen unvisited roots."""
    frag = np.array([f for f, _ in all_eqs], dtype=int)
    eqs = [eq for _, eq in all_eqs]
    n = len(eqs)
    domain = sorted(set().union(*(eq.class_values for eq in eqs))) if eqs else []
    pos = {c: i for i, c in enumerate(domain)}
    member = np.zeros((n, len(domain)), dtype=np.int32)
    for i, eq in enumerate(eqs):
        for c in eq.class_values:
            member[i, pos[c]] = 1
    adjacency = ((member @ member.T) > 0) & (frag[:, None] != frag[None, :])

    rng = np.random.default_rng(seed)
    comp = np.full(n, -1, dtype=int)
    order: list[int] = []
    cid = 0
    while (unvisited := np.flatnonzero(comp < 0)).size:
        root = int(rng.choice(unvisited))
        comp[root] = cid
        queue = deque([root])
        while queue:
            u = queue.popleft()
            order.append(u)
            for v in np.flatnonzero(adjacency[u] & (comp < 0)):
                comp[v] = cid
                queue.append(int(v))
        cid += 1
    return DependencyGraph(frag, eqs, adjacency, comp, order, seed)


def graph_from_fragments(fragments: Sequence[AnonymizedFragment], seed: int = DEFAULT_SEED) -> DependencyGraph:
    nodes = []
    positions = []
    for f, frag in enumerate(fragments):
        for i, eq in enumerate(frag.classes):
            nodes.append((f, eq))
            positions.append(i)
    g = build_dependency_graph(nodes, seed)
    g.positions = positions
    return g


def naive_enforce(fragments: Sequence[AnonymizedFragment]) -> EnforcementReport:
    """Relabel every class to its majority value."""
    report = EnforcementReport("naive")
    for frag in fragments:
        for eq in frag.classes:
            if eq.mode != TUPLE_LEVEL:
                raise ValueError("naive enforcement needs tuple-level publishing")
            top = eq.majority()
            moved = eq.size - eq.class_counts[top]
            if moved:
                report.distorted_class_values += moved
                report.changed_classes += 1
            eq.class_counts = {top: eq.size}
    return report


def _minority(eq: EquivalenceClass) -> str | None:
    """Least frequent non-majority value, lexicographically smallest on ties."""
    top = eq.majority()
    rest = [c for c in eq.class_counts if c != top]
    if not rest:
        return None
    return min(rest, key=lambda c: (eq.class_counts[c], c))


def _move_one_to_majority(eq: EquivalenceClass) -> bool:
    c = _minority(eq)
    if c is None:
        return False
    top = eq.majority()
    eq.class_counts[c] -= 1
    if eq.class_counts[c] == 0:
        del eq.class_counts[c]
    eq.class_counts[top] += 1
    return True


def _drop_rarest(eq: EquivalenceClass) -> str | None:
    """Remove the published value that was rarest before EC-level conversion."""
    if len(eq.ec_values) <= 1:
        return None
    c = min(eq.ec_values, key=lambda v: (eq.class_counts.get(v, 0), v))
    eq.ec_values = eq.ec_values - {c}
    return c


def _enforce(graph: DependencyGraph, report: EnforcementReport, satisfied, change, seed: int | None,
             satisfied_many=None) -> None:
    """BFS per component; fix unvisited neighbours of the current node, then
    re-fix their already-visited neighbours after every change.

    ``satisfied(u, v)`` and ``change(u)`` work on node indices. The optional
    ``satisfied_many(u, vs)`` checks a batch of pairs at once; it is only used
    for the first check of each neighbour of the current node, which is safe
    because fixing one neighbour never changes another.
    """
    rng = np.random.default_rng(graph.seed if seed is None else seed)
    changed: set[int] = set()
    for members in graph.components():
        report.components += 1
        budget = sum(graph.eqs[u].size for u in members) ** 2
        steps = 0

        def apply(u: int) -> None:
            nonlocal steps
            if not change(u):
                raise EnforcementError(f"component of node {u}: class cannot be changed further")
            changed.add(u)
            steps += 1
            if steps > budget:
                raise EnforcementError(f"component of node {u}: exceeded {budget} changes")

        def ok(u: int, v: int) -> bool:
            report.pairs_checked += 1
            return satisfied(u, v)

        visited = np.zeros(len(graph), dtype=bool)
        root = int(rng.choice(members))
        queue = deque([root])
        while queue:
            cur = queue.popleft()
            if visited[cur]:
                continue
            todo = graph.neighbors(cur)
            todo = todo[~visited[todo]]
            if satisfied_many is not None and len(todo):
                first = satisfied_many(cur, todo)
                report.pairs_checked += len(todo)
            else:
                first = None
            for i, un in enumerate(todo.tolist()):
                passed = first[i] if first is not None else ok(cur, un)
                while not passed:
                    apply(un)
                    done = [int(v) for v in graph.neighbors(un) if visited[v]]
                    while any(not ok(un, v) for v in done):
                        apply(un)
                    passed = ok(cur, un)
                queue.append(un)
            visited[cur] = True
        if not visited[members].all():
            raise EnforcementError("BFS did not reach every node of a component")
    report.changed_classes = len(changed)


def dgbe_enforce(graph: DependencyGraph, k: int, seed: int | None = None) -> EnforcementReport:
    """Dependency-graph-based enforcement: change only classes whose joins violate k."""
    for eq in graph.eqs:
        if eq.mode != TUPLE_LEVEL:
            raise ValueError("DGBE needs tuple-level publishing")
    report = EnforcementReport("dgbe")
    domain = sorted(set().union(*(eq.class_counts for eq in graph.eqs))) if graph.eqs else []
    pos = {c: i for i, c in enumerate(domain)}
    # per-class value counts, kept in step with the classes as they change
    counts = np.zeros((len(graph), len(domain)), dtype=np.int64)

    def refresh(u: int) -> None:
        counts[u] = 0
        for c, n in graph.eqs[u].class_counts.items():
            counts[u, pos[c]] = n

    for u in range(len(graph)):
        refresh(u)

    def satisfied(u, v):
        s = int(counts[u] @ counts[v])
        return s == 0 or s >= k

    def satisfied_many(u, vs):
        s = counts[vs] @ counts[u]
        return (s == 0) | (s >= k)

    def change(u):
        if _move_one_to_majority(graph.eqs[u]):
            refresh(u)
            report.distorted_class_values += 1
            return True
        return False

    _enforce(graph, report, satisfied, change, seed, satisfied_many)
    log.debug("dgbe: %s", report)
    return report


def delta_enforce(graph: DependencyGraph, delta: float | Fraction, k: int, seed: int | None = None) -> EnforcementReport:
    """Drop class values from EC-level classes until every joinable pair has eta >= delta."""
    if not 0 < delta <= 1:
        raise ValueError("delta must be in (0, 1]")
    for eq in graph.eqs:
        if eq.mode != EC_LEVEL:
            raise ValueError("delta-selectivity needs EC-level publishing")
    delta = _as_fraction(delta)
    report = EnforcementReport("delta")
    num, den = delta.numerator, delta.denominator

    def satisfied(u, v):
        a, b = graph.eqs[u], graph.eqs[v]
        shared = len(a.ec_values & b.ec_values)
        if not shared:
            return True
        return eta_shape_at_least((a.size, len(a.ec_values), b.size, len(b.ec_values), shared), k, num, den)

    def change(u):
        if _drop_rarest(graph.eqs[u]) is None:
            return False
        report.removed_class_values += 1
        return True

    _enforce(graph, report, satisfied, change, seed)
    log.debug("delta: %s", report)
    return report


def _as_fraction(delta: float | Fraction) -> Fraction:
    return Fraction(delta).limit_denominator(10**9) if isinstance(delta, float) else Fraction(delta)


def delta_violations(fragments: Sequence[AnonymizedFragment], delta: float | Fraction, k: int,
                     names: Sequence[str] | None = None) -> list[Violation]:
    """Exhaustive scan of cross-fragment class pairs sharing a value with eta < delta.

    Pairs are grouped by their (size, |C|, shared) shape so each distinct shape
    is evaluated once.
    """
    names = list(names) if names is not None else [f"F{i + 1}" for i in range(len(fragments))]
    delta = _as_fraction(delta)
    for frag in fragments:
        for eq in frag.classes:
            if eq.mode != EC_LEVEL:
                raise ValueError("delta-selectivity needs EC-level publishing")
    domain = sorted(set().union(*(f.class_domain for f in fragments))) if fragments else []
    pos = {c: i for i, c in enumerate(domain)}

    def membership(frag):
        m = np.zeros((len(frag.classes), len(domain)), dtype=np.int64)
        for i, eq in enumerate(frag.classes):
            m[i, [pos[c] for c in eq.ec_values]] = 1
        sizes = np.array([eq.size for eq in frag.classes], dtype=np.int64)
        return m, sizes, m.sum(axis=1)

    tables = [membership(f) for f in fragments]
    out = []
    for x in range(len(fragments)):
        for y in range(x + 1, len(fragments)):
            ma, sa, na = tables[x]
            mb, sb, nb = tables[y]
            shared = ma @ mb.T
            i, j = np.nonzero(shared)
            if not len(i):
                continue
            cols = (sa[i], na[i], sb[j], nb[j], shared[i, j])
            codes = np.ravel_multi_index(cols, tuple(int(c.max()) + 1 for c in cols))
            _, first, inverse = np.unique(codes, return_index=True, return_inverse=True)
            ok = np.array([eta_shape_at_least(tuple(int(c[f]) for c in cols), k, delta.numerator, delta.denominator)
                           for f in first])
            for p in np.flatnonzero(~ok[inverse]):
                a, b = fragments[x].classes[i[p]], fragments[y].classes[j[p]]
                out.append(Violation(names[x], (int(i[p]),), names[y], (int(j[p]),), float(eta(a, b, k)), float(delta)))
    return out
