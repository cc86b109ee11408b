"""Per-scope hash-chained ledger and the trust information contract.

Block layout (all integers unsigned big-endian, 8 bytes)::

    index | prev_hash (32 bytes) | payload length | payload | timestamp

where the payload is a sequence of store operations, each
``len(key) key | record timestamp | len(data) data``. Keys are UTF-8;
data is tagged: ``0x00`` + raw bytes, or ``0x01`` + JSON for scalars.
Block hashes are SHA-256 over that layout.
"""

from __future__ import annotations

import hashlib
import json
import struct
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, Mapping, Sequence, TextIO

from trustscope.consensus import FbaNetwork, federated_vote
from trustscope.scoping import Scope

ZERO_HASH = bytes(32)
_U64 = struct.Struct(">Q")
_TEXT_ERRORS = "surrogateescape"


class ConsensusRejected(RuntimeError):
    """The scope's consensus network did not agree on a candidate block."""


class UnknownMicrocell(KeyError):
    """No contract address is registered for a microcell."""


@dataclass(frozen=True)
class TrustRecord:
    timestamp: int
    data: Any


@dataclass(frozen=True)
class StoreOp:
    key: str
    record: TrustRecord


def _u64(value: int) -> bytes:
    return _U64.pack(value)


def _prefixed(raw: bytes) -> bytes:
    return _u64(len(raw)) + raw


def encode_data(data: Any) -> bytes:
    if isinstance(data, (bytes, bytearray)):
        return b"\x00" + bytes(data)
    return b"\x01" + json.dumps(data, sort_keys=True, separators=(",", ":")).encode()


def decode_data(raw: bytes) -> Any:
    if raw[:1] == b"\x00":
        return raw[1:]
    if raw[:1] == b"\x01":
        return json.loads(raw[1:])
    raise ValueError(f"unknown data tag {raw[:1]!r}")


def encode_payload(ops: Sequence[StoreOp]) -> bytes:
    parts = []
    for op in ops:
        parts.append(_prefixed(op.key.encode("utf-8", _TEXT_ERRORS)))
        parts.append(_u64(op.record.timestamp))
        parts.append(_prefixed(encode_data(op.record.data)))
    return b"".join(parts)


def serialize_block(index: int, prev_hash: bytes, payload: Sequence[StoreOp], timestamp: int) -> bytes:
    body = encode_payload(payload)
    return _u64(index) + bytes(prev_hash) + _prefixed(body) + _u64(timestamp)


def block_hash(index: int, prev_hash: bytes, payload: Sequence[StoreOp], timestamp: int) -> bytes:
    return hashlib.sha256(serialize_block(index, prev_hash, payload, timestamp)).digest()


@dataclass(frozen=True)
class Block:
    index: int
    prev_hash: bytes
    payload: tuple[StoreOp, ...]
    timestamp: int
    hash: bytes

    @classmethod
    def create(cls, index: int, prev_hash: bytes, payload: Iterable[StoreOp], timestamp: int) -> "Block":
        payload = tuple(payload)
        return cls(index, prev_hash, payload, timestamp, block_hash(index, prev_hash, payload, timestamp))

    def recompute_hash(self) -> bytes:
        return block_hash(self.index, self.prev_hash, self.payload, self.timestamp)

    def to_json(self) -> str:
        return json.dumps({
            "index": self.index,
            "prev_hash": self.prev_hash.hex(),
            "payload": [
                {"key": op.key, "timestamp": op.record.timestamp,
                 "data": encode_data(op.record.data).hex()}
                for op in self.payload
            ],
            "timestamp": self.timestamp,
            "hash": self.hash.hex(),
        }, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "Block":
        doc = json.loads(line)
        payload = tuple(
            StoreOp(op["key"], TrustRecord(op["timestamp"], decode_data(bytes.fromhex(op["data"]))))
            for op in doc["payload"]
        )
        return cls(doc["index"], bytes.fromhex(doc["prev_hash"]), payload,
                   doc["timestamp"], bytes.fromhex(doc["hash"]))


def wall_clock() -> int:
    return int(time.time())


class LogicalClock:
    """Deterministic clock that ticks once per reading."""

    def __init__(self, start: int = 0):
        self.now = start

    def __call__(self) -> int:
        value = self.now
        self.now += 1
        return value


def replay(blocks: Iterable[Block]) -> dict[str, TrustRecord]:
    state: dict[str, TrustRecord] = {}
    for block in blocks:
        for op in block.payload:
            state[op.key] = op.record
    return state


class Chain:
    """Append-only chain of one scope with its materialized key/value state.

    Mutation goes through :meth:`store` only; ``blocks`` is exposed as a
    read-only tuple.
    """

    def __init__(self, scope_id: int, clock: Callable[[], int] = wall_clock):
        self.scope_id = scope_id
        self.clock = clock
        self._blocks: list[Block] = []
        self._state: dict[str, TrustRecord] = {}

    def __len__(self) -> int:
        return len(self._blocks)

    @property
    def blocks(self) -> tuple[Block, ...]:
        return tuple(self._blocks)

    @property
    def state(self) -> Mapping[str, TrustRecord]:
        return self._state

    @property
    def head_hash(self) -> bytes:
        return self._blocks[-1].hash if self._blocks else ZERO_HASH

    def store(self, key: str, data: Any, consensus: FbaNetwork) -> Block:
        """Wrap one record in a block and append it if consensus accepts it."""
        now = self.clock()
        op = StoreOp(key, TrustRecord(now, data))
        block = Block.create(len(self._blocks), self.head_hash, (op,), now)
        outcome = federated_vote(consensus, block.hash)
        if not outcome.accepted:
            raise ConsensusRejected(f"no quorum of scope {self.scope_id} accepted block {block.index}")
        self._blocks.append(block)
        self._state[key] = op.record
        return block

    def retrieve(self, key: str) -> TrustRecord | None:
        """Latest record for ``key``, or None on a miss."""
        return self._state.get(key)

    def history(self, key: str) -> list[TrustRecord]:
        return [op.record for b in self._blocks for op in b.payload if op.key == key]

    def verify(self) -> bool:
        return verify_blocks(self._blocks)

    def dump(self, out: TextIO) -> None:
        for block in self._blocks:
            out.write(block.to_json() + "\n")

    @classmethod
    def load(cls, src: Iterable[str], scope_id: int = 0, clock: Callable[[], int] = wall_clock) -> "Chain":
        """Rebuild a chain from an NDJSON dump, refusing corrupted input."""
        blocks = [Block.from_json(line) for line in src if line.strip()]
        if not verify_blocks(blocks):
            raise ValueError("chain dump fails verification")
        chain = cls(scope_id, clock)
        chain._blocks = blocks
        chain._state = replay(blocks)
        return chain


def verify_blocks(blocks: Sequence[Block]) -> bool:
    prev = ZERO_HASH
    for i, block in enumerate(blocks):
        if block.index != i or block.prev_hash != prev:
            return False
        if block.recompute_hash() != block.hash:
            return False
        prev = block.hash
    return True


def store(chain: Chain, key: str, data: Any, consensus: FbaNetwork) -> Chain:
    chain.store(key, data, consensus)
    return chain


def retrieve(chain: Chain, key: str) -> TrustRecord | None:
    return chain.retrieve(key)


def verify_chain(chain: Chain) -> bool:
    return chain.verify()


def contract_address(scope_id: int) -> str:
    digest = hashlib.sha256(f"TrustInformationHandler:{scope_id}".encode()).hexdigest()
    return "0x" + digest[:40]


class TrustInformationHandler:
    """The per-scope contract: an ``information`` map with store/retrieve.

    Every write is a consensus-approved block on the scope's chain; the
    handler's behavior is fixed at construction.
    """

    def __init__(self, scope: Scope, network: FbaNetwork, clock: Callable[[], int] = wall_clock):
        self.scope = scope
        self.network = network
        self.chain = Chain(scope.scope_id, clock)
        self.address = contract_address(scope.scope_id)

    @property
    def information(self) -> Mapping[str, TrustRecord]:
        return self.chain.state

    def store(self, key: str, data: Any) -> Block:
        return self.chain.store(key, data, self.network)

    def retrieve(self, key: str) -> TrustRecord | None:
        return self.chain.retrieve(key)


@dataclass
class ContractRegistry:
    """Edge-server view: microcell -> (scope id, contract address)."""

    addresses: dict[int, tuple[int, str]] = field(default_factory=dict)

    @classmethod
    def from_scopes(cls, scopes: Iterable[Scope]) -> "ContractRegistry":
        registry = cls()
        registry.rebuild(scopes)
        return registry

    def rebuild(self, scopes: Iterable[Scope]) -> None:
        addresses = {}
        for scope in scopes:
            address = contract_address(scope.scope_id)
            for mc in scope.members:
                addresses[mc] = (scope.scope_id, address)
        self.addresses = addresses

    def lookup(self, microcell: int) -> str:
        try:
            return self.addresses[microcell][1]
        except KeyError:
            raise UnknownMicrocell(microcell) from None

    def scope_of(self, microcell: int) -> int:
        try:
            return self.addresses[microcell][0]
        except KeyError:
            raise UnknownMicrocell(microcell) from None


def lookup_contract(registry: ContractRegistry, microcell: int) -> str:
    return registry.lookup(microcell)


@dataclass(frozen=True)
class Retrieval:
    record: TrustRecord | None
    local_miss: bool
    found_in: int | None
    route: tuple[int, ...]


def cross_scope_retrieve(
    key: str,
    requester: int,
    registry: ContractRegistry,
    handlers: Mapping[int, TrustInformationHandler],
) -> Retrieval:
    """Look up ``key`` in the requester's scope, then via terminal microcells.

    Other scopes are tried in ascending scope id order; the route lists the
    terminals traversed, starting with the local one. A local miss stays a
    miss even when another scope answers.
    """
    local_id = registry.scope_of(requester)
    local = handlers[local_id]
    record = local.retrieve(key)
    if record is not None:
        return Retrieval(record, False, local_id, ())

    route = [local.scope.terminal]
    for scope_id in sorted(handlers):
        if scope_id == local_id:
            continue
        other = handlers[scope_id]
        route.append(other.scope.terminal)
        record = other.retrieve(key)
        if record is not None:
            return Retrieval(record, True, scope_id, tuple(route))
    return Retrieval(None, True, None, tuple(route))


def iter_records(handlers: Mapping[int, TrustInformationHandler]) -> Iterator[tuple[int, str, TrustRecord]]:
    for scope_id in sorted(handlers):
        for key, record in handlers[scope_id].information.items():
            yield scope_id, key, record


class TerminalRouter:
    """Precomputed form of :func:`cross_scope_retrieve` for repeated lookups.

    Scope order, terminals and the live state maps are captured once, so a
    routed lookup is a scan of dict membership tests. Handlers must not be
    added or removed afterwards; stores into them are seen.
    """

    def __init__(self, registry: ContractRegistry, handlers: Mapping[int, TrustInformationHandler]):
        self.registry = registry
        self.order = sorted(handlers)
        self.position = {scope_id: i for i, scope_id in enumerate(self.order)}
        self.terminals = [handlers[s].scope.terminal for s in self.order]
        self.states = [handlers[s].information for s in self.order]

    def retrieve(self, key: str, requester: int) -> Retrieval:
        local = self.position[self.registry.scope_of(requester)]
        record = self.states[local].get(key)
        if record is not None:
            return Retrieval(record, False, self.order[local], ())
        route = [self.terminals[local]]
        for i, state in enumerate(self.states):
            if i == local:
                continue
            route.append(self.terminals[i])
            if key in state:
                return Retrieval(state[key], True, self.order[i], tuple(route))
        return Retrieval(None, True, None, tuple(route))
