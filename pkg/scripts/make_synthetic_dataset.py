"""Write a synthetic check-in/edge dataset in SNAP layout.

    python scripts/make_synthetic_dataset.py data/synthetic --users 12000 --locations 2000
"""

import argparse
import gzip
from pathlib import Path

from trustscope.synthetic import WorldConfig, generate_world, write_checkins, write_edges


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("outdir")
    p.add_argument("--users", type=int, default=12000)
    p.add_argument("--locations", type=int, default=2000)
    p.add_argument("--checkins-per-user", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    config = WorldConfig(users=args.users, locations=args.locations,
                         checkins_per_user=args.checkins_per_user, seed=args.seed)
    checkins, edges = generate_world(config)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    with gzip.open(out / "loc-synthetic_totalCheckins.txt.gz", "wt") as fh:
        write_checkins(checkins, fh)
    with gzip.open(out / "loc-synthetic_edges.txt.gz", "wt") as fh:
        write_edges(edges, fh)
    print(f"{len(checkins)} check-ins, {len(edges)} friendships -> {out}")


if __name__ == "__main__":
    main()
