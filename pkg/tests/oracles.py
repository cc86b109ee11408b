"""Brute-force reference implementations and fixtures used only by the tests.

The oracles are written from the definitions and share no code with the package.
"""

import dataclasses
from itertools import combinations


def all_subsets(nodes):
    nodes = sorted(nodes, key=str)
    for r in range(1, len(nodes) + 1):
        for combo in combinations(nodes, r):
            yield frozenset(combo)


def oracle_is_quorum(slices, candidate):
    """slices: node -> list of sets. Every member must have a slice inside."""
    if not candidate:
        return False
    return all(any(set(s) <= candidate for s in slices[v]) for v in candidate)


def oracle_minimal_quorums(slices):
    # subsets come in size order, so every non-minimal quorum arrives after a minimal one inside it
    minimal = []
    for q in all_subsets(slices):
        if oracle_is_quorum(slices, q) and not any(m < q for m in minimal):
            minimal.append(q)
    return set(minimal)


def weighted_modularity(edges, partition):
    """Newman modularity of a weighted undirected graph."""
    m = sum(edges.values())
    if m == 0:
        return 0.0
    degree = {}
    for (u, v), w in edges.items():
        degree[u] = degree.get(u, 0) + w
        degree[v] = degree.get(v, 0) + w
    q = 0.0
    for group in partition:
        inner = sum(w for (u, v), w in edges.items() if u in group and v in group)
        tot = sum(degree.get(v, 0) for v in group)
        q += inner / m - (tot / (2 * m)) ** 2
    return q


def best_bipartition(vertices, edges):
    """Maximum-modularity split into two nonempty groups, by exhaustion."""
    vertices = sorted(vertices)
    first, rest = vertices[0], vertices[1:]
    best, best_q = None, float("-inf")
    for r in range(0, len(rest)):
        for combo in combinations(rest, r):
            a = frozenset((first,) + combo)
            b = frozenset(vertices) - a
            q = weighted_modularity(edges, (a, b))
            if q > best_q:
                best, best_q = frozenset((a, b)), q
    return best


def random_slices(rng, n, max_slices=2, max_slice_size=None):
    """node -> list of slices over n integer-named nodes (a slice may include the node)."""
    nodes = list(range(n))
    max_slice_size = min(max_slice_size or n, n)
    out = {}
    for v in nodes:
        out[v] = [
            set(rng.sample(nodes, rng.randint(1, max_slice_size)))
            for _ in range(rng.randint(1, max_slices))
        ]
    return out


TAMPER_FIELDS = ("index", "prev_hash", "timestamp", "hash", "key", "record_timestamp", "data")


def flip_bit(raw: bytes, bit: int) -> bytes:
    out = bytearray(raw)
    out[bit // 8] ^= 1 << (bit % 8)
    return bytes(out)


def tamper_block(block, rng):
    """Copy of ``block`` with one bit flipped in one field.

    Payload data must be raw bytes so any flip stays representable.
    """
    from trustscope.ledger import StoreOp, TrustRecord

    name = rng.choice(TAMPER_FIELDS)
    if name in ("index", "timestamp"):
        return dataclasses.replace(block, **{name: getattr(block, name) ^ (1 << rng.randrange(63))})
    if name in ("prev_hash", "hash"):
        raw = getattr(block, name)
        return dataclasses.replace(block, **{name: flip_bit(raw, rng.randrange(len(raw) * 8))})
    i = rng.randrange(len(block.payload))
    op = block.payload[i]
    if name == "key":
        raw = op.key.encode("utf-8", "surrogateescape")
        op = StoreOp(flip_bit(raw, rng.randrange(len(raw) * 8)).decode("utf-8", "surrogateescape"), op.record)
    elif name == "record_timestamp":
        op = StoreOp(op.key, TrustRecord(op.record.timestamp ^ (1 << rng.randrange(63)), op.record.data))
    else:
        data = op.record.data
        op = StoreOp(op.key, TrustRecord(op.record.timestamp, flip_bit(data, rng.randrange(len(data) * 8))))
    payload = block.payload[:i] + (op,) + block.payload[i + 1:]
    return dataclasses.replace(block, payload=payload)
