"""Federated Byzantine agreement over quorum slices.

A quorum is a node set that contains at least one slice of every member.
Unions of quorums are quorums, so every node set contains a unique largest
quorum; :func:`max_quorum_within` finds it by repeatedly discarding nodes
that have no slice inside the remaining set. Voting and the large-network
path are built on that fixpoint; exhaustive enumeration is only used for
small networks.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Mapping, TextIO

NodeId = Hashable

EDGE_SERVER = "edge-server"
IOT_DEVICE = "iot-device"
HONEST = "honest"
BYZANTINE = "byzantine"

MAX_ENUMERATION_NODES = 20


class NetworkTooLarge(ValueError):
    """Exhaustive quorum enumeration was asked for on a network above the cap."""


@dataclass(frozen=True)
class QuorumSlice:
    members: frozenset

    def __post_init__(self):
        if not self.members:
            raise ValueError("quorum slices must be nonempty")

    def __iter__(self):
        return iter(self.members)


@dataclass(frozen=True)
class FbaNode:
    node_id: NodeId
    slices: tuple[QuorumSlice, ...]
    role: str = EDGE_SERVER
    behavior: str = HONEST

    def __post_init__(self):
        if not self.slices:
            raise ValueError(f"node {self.node_id!r} declares no quorum slice")
        if self.role not in (EDGE_SERVER, IOT_DEVICE):
            raise ValueError(f"unknown role {self.role!r}")
        if self.behavior not in (HONEST, BYZANTINE):
            raise ValueError(f"unknown behavior {self.behavior!r}")

    @property
    def honest(self) -> bool:
        return self.behavior == HONEST


@dataclass(frozen=True)
class VoteOutcome:
    accepted: bool
    quorum: frozenset | None = None
    value: bytes | None = None


@dataclass(frozen=True)
class FbaNetwork:
    nodes: Mapping[NodeId, FbaNode] = field(default_factory=dict)

    def __post_init__(self):
        for node_id, node in self.nodes.items():
            if node.node_id != node_id:
                raise ValueError(f"node registered as {node_id!r} calls itself {node.node_id!r}")
            for s in node.slices:
                unknown = s.members - self.nodes.keys()
                if unknown:
                    raise ValueError(f"slice of {node_id!r} references unknown nodes {sorted(map(str, unknown))}")

    @classmethod
    def from_slices(
        cls,
        slices: Mapping[NodeId, Iterable[Iterable[NodeId]]],
        byzantine: Iterable[NodeId] = (),
        roles: Mapping[NodeId, str] | None = None,
    ) -> "FbaNetwork":
        """Convenience constructor: ``{"A": [["B", "C"]], ...}``."""
        bad = set(byzantine)
        roles = roles or {}
        return cls({
            n: FbaNode(
                n,
                tuple(QuorumSlice(frozenset(s)) for s in node_slices),
                roles.get(n, EDGE_SERVER),
                BYZANTINE if n in bad else HONEST,
            )
            for n, node_slices in slices.items()
        })

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def honest_nodes(self) -> frozenset:
        return frozenset(n for n, node in self.nodes.items() if node.honest)

    @cached_property
    def honest_quorum(self) -> frozenset:
        """Largest quorum made only of honest nodes (empty if none)."""
        return max_quorum_within(self, self.honest_nodes)

    def dump(self, out: TextIO) -> None:
        doc = {
            str(n): {
                "role": node.role,
                "behavior": node.behavior,
                "slices": [sorted(map(str, s.members)) for s in node.slices],
            }
            for n, node in sorted(self.nodes.items(), key=lambda kv: str(kv[0]))
        }
        json.dump(doc, out, indent=2, sort_keys=True)

    @classmethod
    def load(cls, src: TextIO) -> "FbaNetwork":
        doc = json.load(src)
        return cls({
            n: FbaNode(
                n,
                tuple(QuorumSlice(frozenset(s)) for s in spec["slices"]),
                spec.get("role", EDGE_SERVER),
                spec.get("behavior", HONEST),
            )
            for n, spec in doc.items()
        })


def _check_candidate(network: FbaNetwork, candidate: Iterable[NodeId]) -> frozenset:
    candidate = frozenset(candidate)
    if not candidate:
        raise ValueError("candidate quorum must be nonempty")
    unknown = candidate - network.nodes.keys()
    if unknown:
        raise ValueError(f"unknown nodes in candidate: {sorted(map(str, unknown))}")
    return candidate


def is_quorum(network: FbaNetwork, candidate: Iterable[NodeId]) -> bool:
    candidate = _check_candidate(network, candidate)
    return all(
        any(s.members <= candidate for s in network.nodes[v].slices)
        for v in candidate
    )


def max_quorum_within(network: FbaNetwork, nodes: Iterable[NodeId]) -> frozenset:
    """Greatest fixpoint: drop nodes with no slice inside the set until stable."""
    current = set(nodes) & network.nodes.keys()
    while True:
        keep = {
            v for v in current
            if any(s.members <= current for s in network.nodes[v].slices)
        }
        if keep == current:
            return frozenset(current)
        current = keep


def _sort_key(nodes: Iterable[NodeId]):
    members = sorted(nodes, key=str)
    return (len(members), [str(m) for m in members])


def enumerate_minimal_quorums(network: FbaNetwork) -> list[frozenset]:
    """All inclusion-minimal quorums, ordered by size then sorted member names.

    A quorum ``Q`` is minimal exactly when no ``Q - {v}`` still contains a
    quorum, which the fixpoint answers without scanning subsets of ``Q``.
    """
    n = len(network.nodes)
    if n > MAX_ENUMERATION_NODES:
        raise NetworkTooLarge(
            f"exhaustive enumeration is capped at {MAX_ENUMERATION_NODES} nodes "
            f"(got {n}); use max_quorum_within / federated_vote for larger networks"
        )
    ids = sorted(network.nodes, key=str)
    bit = {node: 1 << i for i, node in enumerate(ids)}
    slice_masks = [
        [sum(bit[m] for m in s.members) for s in network.nodes[node].slices]
        for node in ids
    ]

    def quorum_mask(mask: int) -> bool:
        m = mask
        while m:
            low = m & -m
            i = low.bit_length() - 1
            if not any(sm & ~mask == 0 for sm in slice_masks[i]):
                return False
            m ^= low
        return True

    found = []
    for mask in range(1, 1 << n):
        if not quorum_mask(mask):
            continue
        members = frozenset(ids[i] for i in range(n) if mask >> i & 1)
        if all(not max_quorum_within(network, members - {v}) for v in members):
            found.append(members)
    found.sort(key=_sort_key)
    return found


def quorums_intersect(network: FbaNetwork) -> bool:
    quorums = enumerate_minimal_quorums(network)
    return all(a & b for i, a in enumerate(quorums) for b in quorums[i + 1:])


def federated_vote(network: FbaNetwork, value: bytes | None = None, honest_vote: bool = True) -> VoteOutcome:
    """Single synchronous round of quorum agreement on ``value``.

    Honest nodes vote ``honest_vote``; Byzantine nodes always reject. The
    value is accepted when some quorum votes accept unanimously, and the
    largest such quorum is returned.
    """
    if not honest_vote:
        return VoteOutcome(False, None, value)
    quorum = network.honest_quorum
    if quorum:
        return VoteOutcome(True, quorum, value)
    return VoteOutcome(False, None, value)


def ba_tolerance(n: int) -> int:
    """Largest ``f`` with ``n >= 3f + 1``."""
    if n < 1:
        raise ValueError("a network needs at least one node")
    return (n - 1) // 3


def edge_server_id(microcell: int) -> str:
    return f"es:{microcell}"


def device_id(microcell: int, index: int) -> str:
    return f"dev:{microcell}:{index}"


def build_scope_network(
    scope,
    devices_per_microcell: int = 2,
    slice_size: int = 3,
    seed: int = 0,
    byzantine_fraction: float = 0.0,
) -> FbaNetwork:
    """Edge servers and devices of one scope, each with a single slice.

    A node's slice is its microcell's edge server plus ``slice_size - 1``
    distinct peers from the same scope (fewer if the scope is too small).
    ``byzantine_fraction`` marks that share of devices (never edge servers)
    as Byzantine.
    """
    if slice_size < 1:
        raise ValueError("slice_size must be at least 1")
    rng = random.Random(f"{seed}:{scope.scope_id}")
    home: dict[str, str] = {}
    order: list[str] = []
    for mc in sorted(scope.members):
        es = edge_server_id(mc)
        home[es] = es
        order.append(es)
        for i in range(devices_per_microcell):
            dev = device_id(mc, i)
            home[dev] = es
            order.append(dev)

    devices = [n for n in order if home[n] != n]
    n_bad = round(byzantine_fraction * len(devices))
    bad = set(rng.sample(devices, n_bad)) if n_bad else set()

    nodes = {}
    for node in order:
        peers = [p for p in order if p != node and p != home[node]]
        extra = rng.sample(peers, min(slice_size - 1, len(peers)))
        members = frozenset([home[node], *extra])
        nodes[node] = FbaNode(
            node,
            (QuorumSlice(members),),
            EDGE_SERVER if home[node] == node else IOT_DEVICE,
            BYZANTINE if node in bad else HONEST,
        )
    return FbaNetwork(nodes)
