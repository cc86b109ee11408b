"""Grouping microcells into scopes and electing terminal microcells.

Scopes are found with asynchronous label propagation in which a vertex
adopts the neighbor label carrying the largest summed edge weight.
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, TextIO

from trustscope.graph import MicrocellGraph


@dataclass(frozen=True)
class ScopeAssignment:
    labels: Mapping[int, int]
    converged: bool
    iterations: int

    def groups(self) -> dict[int, frozenset[int]]:
        members: dict[int, set[int]] = defaultdict(set)
        for v, label in self.labels.items():
            members[label].add(v)
        return {label: frozenset(vs) for label, vs in members.items()}

    def partition(self) -> frozenset[frozenset[int]]:
        """Label-free view of the grouping, for comparing assignments."""
        return frozenset(self.groups().values())


@dataclass(frozen=True)
class Scope:
    scope_id: int
    members: frozenset[int]
    terminal: int

    def __post_init__(self):
        if not self.members:
            raise ValueError("a scope needs at least one microcell")
        if self.terminal not in self.members:
            raise ValueError(f"terminal {self.terminal} is not a member of scope {self.scope_id}")


def _best_label(graph: MicrocellGraph, v: int, labels: dict[int, int]) -> int:
    strength: dict[int, int] = defaultdict(int)
    for u, w in graph.neighbors(v).items():
        strength[labels[u]] += w
    if not strength:
        return labels[v]
    top = max(strength.values())
    tied = [label for label, s in strength.items() if s == top]
    if labels[v] in tied:
        return labels[v]
    return min(tied)


def label_propagation(graph: MicrocellGraph, seed: int = 0, max_iterations: int = 100) -> ScopeAssignment:
    if max_iterations < 1:
        raise ValueError("max_iterations must be at least 1")
    rng = random.Random(seed)
    order = sorted(graph.vertices)
    labels = {v: v for v in order}

    for sweep in range(1, max_iterations + 1):
        rng.shuffle(order)
        changed = False
        for v in order:
            new = _best_label(graph, v, labels)
            if new != labels[v]:
                labels[v] = new
                changed = True
        if not changed:
            return ScopeAssignment(labels, True, sweep)
    return ScopeAssignment(labels, False, max_iterations)


def select_terminals(assignment: ScopeAssignment, graph: MicrocellGraph) -> list[Scope]:
    """One terminal per scope: the member with the most edges leaving the scope."""
    missing = graph.vertices - assignment.labels.keys()
    if missing:
        raise ValueError(f"assignment does not cover microcells {sorted(missing)[:5]}")
    labels = assignment.labels
    scopes = []
    for label, members in sorted(assignment.groups().items()):

        def outward(v: int) -> int:
            return sum(1 for u in graph.neighbors(v) if labels[u] != label)

        terminal = min(members, key=lambda v: (-outward(v), v))
        scopes.append(Scope(label, members, terminal))
    return scopes


def single_microcell_scopes(vertices: Iterable[int]) -> list[Scope]:
    return [Scope(v, frozenset((v,)), v) for v in sorted(set(vertices))]


def scope_index(scopes: Iterable[Scope]) -> dict[int, Scope]:
    """Microcell id -> the scope containing it; rejects overlapping scopes."""
    index: dict[int, Scope] = {}
    for scope in scopes:
        for v in scope.members:
            if v in index:
                raise ValueError(f"microcell {v} is in scopes {index[v].scope_id} and {scope.scope_id}")
            index[v] = scope
    return index


def write_scopes(scopes: Iterable[Scope], out: TextIO) -> None:
    rows = sorted((v, s.scope_id, int(v == s.terminal)) for s in scopes for v in s.members)
    for v, scope_id, is_terminal in rows:
        out.write(f"{v}\t{scope_id}\t{is_terminal}\n")
