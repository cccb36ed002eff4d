"""Serve a freshly mined sample dataset over HTTP for manual poking.

Mines a synthetic population into an in-memory store and starts the
query service on it. Useful for trying the filter parameters and the
export endpoint without credentials or a database file.

    python3 scripts/serve_sample.py --port 8080 --size 3000
"""

from __future__ import annotations

import argparse
from datetime import datetime, timezone

import uvicorn

from repoharvest.clock import SimulatedClock
from repoharvest.extractor import PageExtractor
from repoharvest.forge import SearchClient
from repoharvest.mining import Miner, MinerConfig
from repoharvest.ratelimit import RateGovernor
from repoharvest.service import create_app
from repoharvest.store import MemoryRepositoryStore
from repoharvest.synthetic import (
    PopulationParams,
    SyntheticForgeBackend,
    SyntheticPageSource,
    generate_population,
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--size", type=int, default=3000, help="population size")
    parser.add_argument("--seed", type=int, default=11, help="population seed")
    parser.add_argument("--cors-origin", default=None, help="origin allowed to call from a browser")
    args = parser.parse_args()

    languages = ("Java", "Python", "C++", "TypeScript")
    population = generate_population(
        args.seed, PopulationParams(size=args.size, languages=languages)
    )
    clock = SimulatedClock(datetime.now(timezone.utc))
    backend = SyntheticForgeBackend(population)
    client = SearchClient(backend, RateGovernor(["demo"], clock), clock)
    store = MemoryRepositoryStore()
    miner = Miner(
        client,
        PageExtractor(SyntheticPageSource(population)),
        store,
        MinerConfig(languages=languages),
        clock,
    )
    miner.mine_all()
    print(f"serving {store.count()} repositories; try:")
    base = f"http://{args.host}:{args.port}"
    print(f"    curl '{base}/api/stats'")
    print(f"    curl '{base}/api/repos?language=Java&starsMin=50&sort=commits'")
    print(f"    curl -OJ '{base}/api/repos/export?format=csv&starsMin=100'")
    uvicorn.run(
        create_app(store, cors_origin=args.cors_origin),
        host=args.host,
        port=args.port,
        log_level="warning",
    )


if __name__ == "__main__":
    main()
