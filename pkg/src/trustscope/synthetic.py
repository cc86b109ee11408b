"""Synthetic location-based social network in the SNAP check-in format.

Used for tests and desk experiments when the Gowalla/Brightkite dumps are
not available. Users live in spatial neighborhoods and keep routines: a
short list of favourite locations, mostly near home, visited repeatedly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import TextIO

from trustscope.ingest import CheckIn

EPOCH = datetime(2010, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class WorldConfig:
    users: int = 3000
    locations: int = 1500
    neighborhoods: int = 60
    favourites: int = 6
    checkins_per_user: int = 25
    travel_probability: float = 0.1
    friends_per_user: int = 4
    popularity_shape: float = 1.2
    seed: int = 0


def generate_world(config: WorldConfig = WorldConfig()) -> tuple[list[CheckIn], set[tuple[int, int]]]:
    rng = random.Random(config.seed)
    hoods = config.neighborhoods
    centers = [(rng.uniform(-60, 60), rng.uniform(-170, 170)) for _ in range(hoods)]
    hood_of = [i % hoods for i in range(config.locations)]
    coords = []
    for loc in range(config.locations):
        lat, lon = centers[hood_of[loc]]
        coords.append((round(lat + rng.gauss(0, 0.05), 6), round(lon + rng.gauss(0, 0.05), 6)))
    by_hood: list[list[int]] = [[] for _ in range(hoods)]
    for loc, h in enumerate(hood_of):
        by_hood[h].append(loc)
    popularity = [rng.paretovariate(config.popularity_shape) for _ in range(config.locations)]

    checkins: list[CheckIn] = []
    members: list[list[int]] = [[] for _ in range(hoods)]
    for user in range(config.users):
        home = rng.randrange(hoods)
        members[home].append(user)
        favourites = []
        for _ in range(config.favourites):
            hood = rng.randrange(hoods) if rng.random() < config.travel_probability else home
            pool = by_hood[hood]
            favourites.append(rng.choices(pool, weights=[popularity[p] for p in pool])[0])
        weights = [1.0 / (rank + 1) for rank in range(len(favourites))]
        t = EPOCH + timedelta(seconds=rng.randrange(86400 * 30))
        for _ in range(config.checkins_per_user):
            loc = rng.choices(favourites, weights=weights)[0]
            t += timedelta(seconds=rng.randrange(600, 86400))
            lat, lon = coords[loc]
            checkins.append(CheckIn(user, t, lat, lon, loc))

    edges: set[tuple[int, int]] = set()
    for group in members:
        if len(group) < 2:
            continue
        for user in group:
            for friend in rng.sample(group, min(config.friends_per_user, len(group) - 1)):
                if friend != user:
                    edges.add((min(user, friend), max(user, friend)))
    return checkins, edges


def write_checkins(checkins: list[CheckIn], out: TextIO) -> None:
    for c in checkins:
        stamp = c.timestamp.strftime("%Y-%m-%dT%H:%M:%SZ")
        out.write(f"{c.user_id}\t{stamp}\t{c.latitude}\t{c.longitude}\t{c.location_id}\n")


def write_edges(edges: set[tuple[int, int]], out: TextIO) -> None:
    # SNAP edge files list both directions
    for a, b in sorted(edges):
        out.write(f"{a}\t{b}\n{b}\t{a}\n")
