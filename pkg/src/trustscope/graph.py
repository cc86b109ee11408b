"""Weighted, undirected microcell graph built from provider movements."""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

from trustscope.ingest import Movement


def edge_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class MicrocellGraph:
    vertices: frozenset[int]
    edges: dict[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        adjacency: dict[int, dict[int, int]] = {v: {} for v in self.vertices}
        for (u, v), weight in self.edges.items():
            if u == v:
                raise ValueError(f"self-loop on microcell {u}")
            if u not in adjacency or v not in adjacency:
                raise ValueError(f"edge {(u, v)} has an endpoint outside the vertex set")
            if weight < 1:
                raise ValueError(f"edge {(u, v)} has non-positive weight {weight}")
            adjacency[u][v] = weight
            adjacency[v][u] = weight
        object.__setattr__(self, "_adjacency", adjacency)

    def neighbors(self, v: int) -> dict[int, int]:
        """Neighbor -> edge weight for microcell ``v``."""
        return self._adjacency[v]  # type: ignore[attr-defined]

    def weight(self, u: int, v: int) -> int:
        return self.edges.get(edge_key(u, v), 0)

    @property
    def total_weight(self) -> int:
        return sum(self.edges.values())

    def iter_edges(self) -> Iterator[tuple[int, int, int]]:
        for (u, v) in sorted(self.edges):
            yield u, v, self.edges[(u, v)]

    def write_edgelist(self, out: TextIO) -> None:
        for u, v, w in self.iter_edges():
            out.write(f"{u}\t{v}\t{w}\n")


def build_graph(movements: Iterable[Movement], vertices: Iterable[int]) -> MicrocellGraph:
    """Count movements per unordered microcell pair.

    Movements with an endpoint outside ``vertices`` are dropped.
    """
    vertex_set = frozenset(vertices)
    counts: Counter[tuple[int, int]] = Counter()
    for m in movements:
        if m.from_microcell in vertex_set and m.to_microcell in vertex_set:
            counts[edge_key(m.from_microcell, m.to_microcell)] += 1
    return MicrocellGraph(vertex_set, dict(counts))


def filter_movements(movements: list[Movement], fraction: float, seed: int) -> list[Movement]:
    """Keep ``round(fraction * N)`` movements chosen uniformly, in original order."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    n = len(movements)
    keep = round(fraction * n)
    if keep == n:
        return list(movements)
    chosen = sorted(random.Random(seed).sample(range(n), keep))
    return [movements[i] for i in chosen]
