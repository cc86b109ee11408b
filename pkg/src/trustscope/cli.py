"""Command-line harness: dataset stats, sweeps, scope dumps and chain checks.

Exit codes: 0 success, 1 invalid arguments or failed verification,
2 unreadable dataset.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

from trustscope.experiments import (
    DEFAULT_POINTS,
    EXPERIMENTS,
    ExperimentSpec,
    SpecError,
    load_workloads,
    resolve_dataset,
    run_sweep,
    stats_for,
    summarize,
)
from trustscope.graph import build_graph, filter_movements
from trustscope.ingest import IngestError
from trustscope.ledger import Chain
from trustscope.simulation import MM, SM, ConfigurationError, SimConfig, build_scopes, run_with_handlers, write_results
from trustscope.scoping import write_scopes

log = logging.getLogger("trustscope")

EXIT_USAGE = 1
EXIT_DATASET = 2

# flag name -> value type; also the accepted keys of --config files
CONFIG_KEYS = {
    "dataset": str,
    "experiment": str,
    "cells": int,
    "providers": int,
    "consumers": int,
    "services": int,
    "movement-fraction": float,
    "seeds": str,
    "mode": str,
    "points": str,
    "workers": int,
    "out": str,
}

DEFAULTS = {
    "cells": 500,
    "providers": 40,
    "consumers": 100,
    "services": 40,
    "movement-fraction": 1.0,
    "seeds": "0,1,2,3,4",
    "mode": "both",
    "workers": 1,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file mirroring the flags; flags win")
    p.add_argument("--dataset", help="SNAP check-in file, or a directory holding one")
    p.add_argument("--cells", type=int, help="microcells to sample (default 500)")
    p.add_argument("--providers", type=int, help="providers per microcell (default 40)")
    p.add_argument("--consumers", type=int, help="consumers per microcell (default 100)")
    p.add_argument("--services", type=int, help="service sessions per microcell (default 40)")
    p.add_argument("--movement-fraction", type=float, dest="movement_fraction",
                   help="fraction of movements used for scoping (default 1.0)")
    p.add_argument("--seeds", help="comma-separated seeds (default 0,1,2,3,4)")
    p.add_argument("--mode", choices=("mm", "sm", "both"), help="scoping strategy (default both)")
    p.add_argument("--out", help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trustscope", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("stats", help="print dataset counts (nodes, edges, check-ins, locations)")
    p.add_argument("--dataset", required=True)
    p.add_argument("--json", action="store_true", help="emit JSON instead of a table")

    p = sub.add_parser("experiment", help="run a consumers/providers/movements sweep to CSV")
    _add_common(p)
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--points", help="comma-separated sweep points (default per experiment)")
    p.add_argument("--workers", type=int, help="parallel worker processes (default 1)")

    p = sub.add_parser("scope-dump", help="write microcell<TAB>scope<TAB>is_terminal for one seed")
    _add_common(p)
    p.add_argument("--edges-out", help="also write the microcell graph edge list here")

    p = sub.add_parser("simulate", help="run one configuration, print the result as JSON")
    _add_common(p)
    p.add_argument("--chains-dir", help="dump every scope chain as NDJSON into this directory")

    p = sub.add_parser("chain-verify", help="verify NDJSON chain dumps")
    p.add_argument("chains", nargs="+", help="chain dump files")
    return parser


def _settings(args: argparse.Namespace) -> dict:
    """Merge hard defaults < config file < explicit flags."""
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        cp = configparser.ConfigParser()
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
        cp.read_string("[trustscope]\n" + text)
        for key, value in cp["trustscope"].items():
            key = key.replace("_", "-")
            if key not in CONFIG_KEYS:
                raise UsageError(f"unknown config key {key!r}")
            try:
                merged[key] = CONFIG_KEYS[key](value)
            except ValueError as exc:
                raise UsageError(f"bad value for {key}: {value!r}") from exc
    for key in CONFIG_KEYS:
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            merged[key] = value
    return merged


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def _modes(mode: str) -> tuple[str, ...]:
    return (MM, SM) if mode == "both" else (mode,)


def _open_out(path: str | None):
    return open(path, "w", newline="") if path else sys.stdout


def _require_dataset(settings: dict) -> str:
    if not settings.get("dataset"):
        raise UsageError("--dataset is required")
    return settings["dataset"]


def cmd_stats(args) -> int:
    files = resolve_dataset(args.dataset)
    if files.edges is None:
        raise IngestError(f"no edge file found next to {files.checkins}")
    stats, checkin_report, edge_report = stats_for(files)
    if args.json:
        print(json.dumps(asdict(stats)))
    else:
        print(f"Nodes\t{stats.node_count:,}")
        print(f"Edges\t{stats.edge_count:,}")
        print(f"Check-ins\t{stats.checkin_count:,}")
        print(f"Locations\t{stats.location_count:,}")
    if checkin_report.skipped or edge_report.skipped:
        log.warning("skipped %d malformed check-in lines and %d malformed edge lines",
                    checkin_report.skipped, edge_report.skipped)
    return 0


def _spec(settings: dict, experiment: str) -> ExperimentSpec:
    points = settings.get("points")
    if points:
        points = _float_list(points) if experiment == "movements" else _int_list(points)
    return ExperimentSpec(
        experiment=experiment,
        dataset=Path(_require_dataset(settings)),
        microcell_count=settings["cells"],
        points=points or DEFAULT_POINTS[experiment],
        seeds=_int_list(settings["seeds"]),
        out=Path(settings["out"]) if settings.get("out") else None,
        providers=settings["providers"],
        consumers=settings["consumers"],
        services=settings["services"],
        movement_fraction=settings["movement-fraction"],
        modes=_modes(settings["mode"]),
        workers=settings["workers"],
    )


def cmd_experiment(args) -> int:
    settings = _settings(args)
    if not settings.get("experiment"):
        raise UsageError("--experiment is required")
    spec = _spec(settings, settings["experiment"])
    files = resolve_dataset(spec.dataset)
    workloads = load_workloads(files.checkins, spec.microcell_count, spec.seeds)
    rows = run_sweep(spec, workloads)

    out = _open_out(settings.get("out"))
    try:
        write_results(rows, out)
    finally:
        if out is not sys.stdout:
            out.close()

    summary_stream = sys.stderr if out is sys.stdout else sys.stdout
    print(f"{'mode':<4} {'point':>8} {'SE mean':>8} {'SE range':>15} {'AM mean':>8} {'AM range':>15}",
          file=summary_stream)
    for s in summarize(spec, rows):
        print(f"{s.mode:<4} {s.point:>8g} {s.se_mean:>8.3f} [{s.se_min:.3f}, {s.se_max:.3f}] "
              f"{s.am_mean:>8.3f} [{s.am_min:.3f}, {s.am_max:.3f}]", file=summary_stream)
    return 0


def _single_config(settings: dict, mode: str) -> tuple[SimConfig, int]:
    seeds = _int_list(settings["seeds"])
    seed = seeds[0] if seeds else 0
    config = SimConfig(
        microcell_count=settings["cells"],
        providers_per_microcell=settings["providers"],
        services_per_microcell=settings["services"],
        consumers_per_microcell=settings["consumers"],
        movement_fraction=settings["movement-fraction"],
        scoping_mode=mode,
        seed=seed,
    )
    return config, seed


def cmd_scope_dump(args) -> int:
    settings = _settings(args)
    mode = MM if settings["mode"] == "both" else settings["mode"]
    config, seed = _single_config(settings, mode)
    files = resolve_dataset(_require_dataset(settings))
    workload = load_workloads(files.checkins, config.microcell_count, (seed,))[seed]
    scopes = build_scopes(workload, config)
    out = _open_out(settings.get("out"))
    try:
        write_scopes(scopes, out)
    finally:
        if out is not sys.stdout:
            out.close()
    if args.edges_out:
        kept = filter_movements(list(workload.movements), config.movement_fraction, seed)
        with open(args.edges_out, "w") as fh:
            build_graph(kept, workload.microcells).write_edgelist(fh)
    log.info("%d microcells in %d scopes", len(workload.microcells), len(scopes))
    return 0


def cmd_simulate(args) -> int:
    settings = _settings(args)
    mode = MM if settings["mode"] == "both" else settings["mode"]
    config, seed = _single_config(settings, mode)
    files = resolve_dataset(_require_dataset(settings))
    workload = load_workloads(files.checkins, config.microcell_count, (seed,))[seed]
    scopes = build_scopes(workload, config)
    result, handlers = run_with_handlers(workload.visits, scopes, config)
    doc = asdict(result)
    doc.pop("per_scope")
    doc["scopes"] = len(result.per_scope)
    doc["config"] = asdict(config)
    out = _open_out(settings.get("out"))
    try:
        out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    if args.chains_dir:
        target = Path(args.chains_dir)
        target.mkdir(parents=True, exist_ok=True)
        for scope_id, handler in handlers.items():
            with open(target / f"scope-{scope_id}.ndjson", "w") as fh:
                handler.chain.dump(fh)
    return 0


def cmd_chain_verify(args) -> int:
    bad = 0
    for path in args.chains:
        try:
            with open(path) as fh:
                lines = fh.readlines()
            Chain.load(lines)
            print(f"OK\t{path}\t{sum(1 for line in lines if line.strip())} blocks")
        except (ValueError, KeyError) as exc:
            bad += 1
            print(f"FAIL\t{path}\t{exc}")
        except OSError as exc:
            print(f"ERROR\t{path}\t{exc}", file=sys.stderr)
            return EXIT_DATASET
    return 1 if bad else 0


COMMANDS = {
    "stats": cmd_stats,
    "experiment": cmd_experiment,
    "scope-dump": cmd_scope_dump,
    "simulate": cmd_simulate,
    "chain-verify": cmd_chain_verify,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, SpecError, ConfigurationError) as exc:
        parser.print_usage(sys.stderr)
        print(f"trustscope: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IngestError as exc:
        print(f"trustscope: dataset error: {exc}", file=sys.stderr)
        return EXIT_DATASET


if __name__ == "__main__":
    sys.exit(main())
