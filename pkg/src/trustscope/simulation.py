"""Service-session simulation over scoped ledgers.

Phase 1 (generation): every sampled microcell hosts ``services_per_microcell``
service sessions spread round-robin over its providers. The providers are
the microcell's earliest distinct visitors in the check-in history, padded
with synthetic providers when there are too few. Each session stores one
record per trust attribute of its provider through the scope's contract.

Phase 2 (access): each consumer draws uniformly from what is on offer at the
microcell: the still-unconsumed sessions plus the historical check-ins. A
drawn session is consumed. The consumer then retrieves the chosen
provider's trust attributes from the microcell's scope. Because check-ins
include visitors who never provided there, consumers who arrive after the
sessions run out miss more often.

Storage efficiency counts a stored record as used when any member of its
scope retrieved it at least once; access misses are per attribute lookup.
"""

from __future__ import annotations

import csv
import random
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence, TextIO

from trustscope.consensus import build_scope_network
from trustscope.graph import build_graph, filter_movements
from trustscope.ingest import CheckIn, Movement, derive_movements, sample_microcells
from trustscope.ledger import (
    ContractRegistry,
    LogicalClock,
    TerminalRouter,
    TrustInformationHandler,
)
from trustscope.scoping import Scope, label_propagation, scope_index, select_terminals, single_microcell_scopes

MM = "mm"
SM = "sm"
TRUST_ATTRIBUTES = ("owner_rating", "device_model", "session_count")
DEVICE_MODELS = ("watch-a1", "watch-b2", "phone-c3", "phone-d4", "tablet-e5", "hub-f6")

CSV_COLUMNS = ("mode", "consumers", "providers", "movement_fraction", "seed",
               "se", "am", "used", "unused", "misses", "accesses")


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    microcell_count: int = 5000
    providers_per_microcell: int = 40
    services_per_microcell: int = 40
    consumers_per_microcell: int = 100
    movement_fraction: float = 1.0
    scoping_mode: str = MM
    devices_per_microcell: int = 2
    slice_size: int = 3
    seed: int = 0
    max_iterations: int = 100
    route_misses: bool = True

    def __post_init__(self):
        counts = (self.microcell_count, self.providers_per_microcell, self.services_per_microcell,
                  self.consumers_per_microcell, self.devices_per_microcell)
        if any(c < 0 for c in counts):
            raise ConfigurationError("counts must be non-negative")
        if not 0.0 <= self.movement_fraction <= 1.0:
            raise ConfigurationError("movement_fraction must lie in [0, 1]")
        if self.scoping_mode not in (MM, SM):
            raise ConfigurationError(f"scoping_mode must be {MM!r} or {SM!r}")
        if self.slice_size < 1:
            raise ConfigurationError("slice_size must be at least 1")


@dataclass(frozen=True)
class ServiceSession:
    provider_id: int | str
    microcell_id: int
    previous_microcell_id: int | None
    session_index: int


@dataclass
class ProviderState:
    provider_id: int | str
    last_microcell: int | None = None
    sessions: int = 0


def announce_session(provider: ProviderState, microcell: int) -> ServiceSession:
    """Start a session; the provider reports where it last provided."""
    session = ServiceSession(provider.provider_id, microcell, provider.last_microcell, provider.sessions)
    provider.last_microcell = microcell
    provider.sessions += 1
    return session


def compute_se(used: int, unused: int, literal: bool = False) -> float:
    """Storage efficiency: ``used / (used + unused)``, or ``used / unused`` if literal."""
    denominator = unused if literal else used + unused
    if denominator <= 0:
        return 0.0
    return used / denominator


def compute_am(misses: int, accesses: int) -> float:
    if misses < 0 or accesses < 0:
        raise ValueError("counts must be non-negative")
    if misses > accesses:
        raise ValueError(f"misses ({misses}) exceed accesses ({accesses})")
    if accesses == 0:
        return 0.0
    return misses / accesses


def trust_keys(provider_id) -> tuple[str, ...]:
    return tuple(f"{attr}:{provider_id}" for attr in TRUST_ATTRIBUTES)


@dataclass(frozen=True)
class ScopeStats:
    scope_id: int
    microcells: int
    records: int
    used: int
    misses: int
    accesses: int
    synthetic_providers: int
    blocks: int


@dataclass(frozen=True)
class SimResult:
    storage_efficiency: float
    access_misses: float
    used_records: int
    unused_records: int
    miss_count: int
    access_count: int
    remote_hits: int = 0
    synthetic_providers: int = 0
    chains_verified: bool = True
    per_scope: tuple[ScopeStats, ...] = ()

    @property
    def storage_ratio(self) -> float:
        return compute_se(self.used_records, self.unused_records, literal=True)


def _providers_for(microcell: int, visitors: Sequence, count: int) -> tuple[list, int]:
    distinct = list(dict.fromkeys(visitors))[:count]
    pads = [f"syn{microcell}x{i}" for i in range(count - len(distinct))]
    return distinct + pads, len(pads)


def run_simulation(
    visits: Mapping[int, Sequence[int]],
    scopes: Sequence[Scope],
    config: SimConfig,
) -> SimResult:
    """Run both phases over ``visits`` (microcell -> chronological visitor ids)."""
    return run_with_handlers(visits, scopes, config)[0]


def run_with_handlers(
    visits: Mapping[int, Sequence[int]],
    scopes: Sequence[Scope],
    config: SimConfig,
) -> tuple[SimResult, dict[int, TrustInformationHandler]]:
    index = scope_index(scopes)
    uncovered = set(visits) - index.keys()
    if uncovered:
        raise ConfigurationError(f"microcells without a scope: {sorted(uncovered)[:5]}")

    clock = LogicalClock()
    handlers = {
        s.scope_id: TrustInformationHandler(
            s,
            build_scope_network(s, config.devices_per_microcell, config.slice_size, config.seed),
            clock,
        )
        for s in scopes
    }
    registry = ContractRegistry.from_scopes(scopes)
    cells = sorted(visits)

    # Phase 1: generation
    providers: dict[int | str, ProviderState] = {}
    offered: dict[int, list] = {}
    synthetic: dict[int, int] = defaultdict(int)
    for mc in cells:
        local, pads = _providers_for(mc, visits[mc], config.providers_per_microcell)
        synthetic[index[mc].scope_id] += pads
        sessions = []
        if local:
            handler = handlers[registry.scope_of(mc)]
            for s in range(config.services_per_microcell):
                pid = local[s % len(local)]
                state = providers.setdefault(pid, ProviderState(pid))
                session = announce_session(state, mc)
                rng = random.Random(f"{config.seed}:record:{pid}:{session.session_index}")
                values = (round(rng.uniform(1.0, 5.0), 1), rng.choice(DEVICE_MODELS), state.sessions)
                for key, value in zip(trust_keys(pid), values):
                    handler.store(key, value)
                sessions.append(pid)
        offered[mc] = sessions

    # Phase 2: access
    router = TerminalRouter(registry, handlers)
    used: dict[int, set[str]] = defaultdict(set)
    misses: dict[int, int] = defaultdict(int)
    accesses: dict[int, int] = defaultdict(int)
    remote_hits = 0
    for mc in cells:
        scope_id = index[mc].scope_id
        handler = handlers[scope_id]
        sessions = list(offered[mc])
        history = visits[mc]
        rng = random.Random(f"{config.seed}:consumers:{mc}")
        for _ in range(config.consumers_per_microcell):
            pick = rng.randrange(len(sessions) + len(history)) if sessions or history else None
            if pick is None:
                break
            target = sessions.pop(pick) if pick < len(sessions) else history[pick - len(sessions)]
            for key in trust_keys(target):
                accesses[scope_id] += 1
                if handler.retrieve(key) is not None:
                    used[scope_id].add(key)
                    continue
                misses[scope_id] += 1
                if config.route_misses:
                    remote = router.retrieve(key, mc)
                    remote_hits += remote.record is not None

    per_scope = []
    for scope_id in sorted(handlers):
        h = handlers[scope_id]
        per_scope.append(ScopeStats(
            scope_id=scope_id,
            microcells=len(h.scope.members),
            records=len(h.information),
            used=len(used[scope_id]),
            misses=misses[scope_id],
            accesses=accesses[scope_id],
            synthetic_providers=synthetic[scope_id],
            blocks=len(h.chain),
        ))
    total_used = sum(s.used for s in per_scope)
    total_records = sum(s.records for s in per_scope)
    total_misses = sum(s.misses for s in per_scope)
    total_accesses = sum(s.accesses for s in per_scope)
    result = SimResult(
        storage_efficiency=compute_se(total_used, total_records - total_used),
        access_misses=compute_am(total_misses, total_accesses),
        used_records=total_used,
        unused_records=total_records - total_used,
        miss_count=total_misses,
        access_count=total_accesses,
        remote_hits=remote_hits,
        synthetic_providers=sum(synthetic.values()),
        chains_verified=all(h.chain.verify() for h in handlers.values()),
        per_scope=tuple(per_scope),
    )
    return result, handlers


@dataclass(frozen=True)
class Workload:
    """The sampled microcells with their visit history and internal movements."""

    microcells: tuple[int, ...]
    visits: Mapping[int, tuple[int, ...]]
    movements: tuple[Movement, ...] = field(repr=False)


def prepare_workload(checkins: Iterable[CheckIn], microcell_count: int, seed: int) -> Workload:
    checkins = list(checkins)
    cells = sample_microcells({c.location_id for c in checkins}, microcell_count, seed)
    return workload_from(checkins, cells)


def workload_from(checkins: Iterable[CheckIn], cells: Iterable[int]) -> Workload:
    """Restrict check-ins to ``cells`` and project every user's trail onto them.

    Movements are consecutive check-ins of a user among these microcells
    only, so two cells are linked when a user went from one to the other
    without checking in at another selected cell in between.
    """
    cells = set(cells)
    inside = [c for c in checkins if c.location_id in cells]
    visits: dict[int, list[int]] = {mc: [] for mc in cells}
    for c in sorted(inside, key=lambda c: c.timestamp):
        visits[c.location_id].append(c.user_id)
    return Workload(
        microcells=tuple(sorted(cells)),
        visits={mc: tuple(v) for mc, v in sorted(visits.items())},
        movements=tuple(derive_movements(inside)),
    )


def build_scopes(workload: Workload, config: SimConfig) -> list[Scope]:
    if config.scoping_mode == SM:
        return single_microcell_scopes(workload.microcells)
    kept = filter_movements(list(workload.movements), config.movement_fraction, config.seed)
    graph = build_graph(kept, workload.microcells)
    assignment = label_propagation(graph, config.seed, config.max_iterations)
    return select_terminals(assignment, graph)


def simulate(workload: Workload, config: SimConfig) -> SimResult:
    return run_simulation(workload.visits, build_scopes(workload, config), config)


def result_row(config: SimConfig, result: SimResult) -> dict:
    return {
        "mode": config.scoping_mode,
        "consumers": config.consumers_per_microcell,
        "providers": config.providers_per_microcell,
        "movement_fraction": config.movement_fraction,
        "seed": config.seed,
        "se": f"{result.storage_efficiency:.6f}",
        "am": f"{result.access_misses:.6f}",
        "used": result.used_records,
        "unused": result.unused_records,
        "misses": result.miss_count,
        "accesses": result.access_count,
    }


def write_results(rows: Iterable[dict], out: TextIO) -> None:
    writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


def config_dict(config: SimConfig) -> dict:
    return asdict(config)
