"""Geo-scoped, blockchain-backed storage of IoT trust information.

Modules follow the pipeline: ``ingest`` (check-in data) -> ``graph``
(microcell movement graph) -> ``scoping`` (label propagation, terminals) ->
``ledger`` + ``consensus`` (per-scope chains guarded by federated voting) ->
``simulation`` / ``experiments`` (storage efficiency and access misses).
"""

__version__ = "0.1.0"
