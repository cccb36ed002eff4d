"""Operator commands: mine, serve, export, stats.

Configuration precedence everywhere is flags, then environment, then the
optional YAML config file. Exit codes are disciplined: 0 for success,
1 for runtime failures, 2 for usage errors.
"""

from __future__ import annotations

import dataclasses
import json
import os
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any

import click
import yaml

from .clock import Clock, SimulatedClock, SystemClock
from .errors import RepoHarvestError
from .exporting import export_chunks
from .extractor import PageExtractor, SelectorConfig
from .forge import SearchClient
from .mining import Miner, MinerConfig, Scheduler, SchedulerConfig
from .models import Bounds, RepoFilter, format_instant
from .ratelimit import RateGovernor
from .service import create_app
from .store import open_store
from .synthetic import PopulationParams, SyntheticForgeBackend, SyntheticPageSource, generate_population
from .webforge import HttpForgeBackend, HttpPageSource

TOKENS_ENV = "GHS_TOKENS"
STORE_ENV = "REPOHARVEST_STORE"
DEFAULT_STORE = "sqlite:///repoharvest.db"

DEFAULT_LANGUAGES = (
    "Python",
    "Java",
    "C++",
    "C",
    "C#",
    "Objective-C",
    "JavaScript",
    "TypeScript",
    "Swift",
    "Kotlin",
)


def _load_config(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    loaded = yaml.safe_load(Path(path).read_text())
    if loaded is None:
        return {}
    if not isinstance(loaded, dict):
        raise click.UsageError(f"config file {path} must hold a mapping")
    return loaded


def _resolve_store(flag: str | None, config: dict) -> str:
    return flag or os.environ.get(STORE_ENV) or config.get("store") or DEFAULT_STORE


def _resolve_languages(flags: tuple[str, ...], config: dict) -> tuple[str, ...]:
    """Requested languages, validated against the configured set."""
    configured = tuple(config.get("languages") or ())
    known = {lang.lower(): lang for lang in (*DEFAULT_LANGUAGES, *configured)}
    requested = flags or configured or ()
    if not requested:
        raise click.UsageError("no languages selected; pass --language or configure a list")
    resolved = []
    for lang in requested:
        canonical = known.get(lang.lower())
        if canonical is None:
            raise click.UsageError(f"unknown language {lang!r}; known: {', '.join(sorted(known.values()))}")
        if canonical not in resolved:
            resolved.append(canonical)
    return tuple(resolved)


def _resolve_tokens(backend: str) -> tuple[str, ...]:
    raw = os.environ.get(TOKENS_ENV, "")
    tokens = tuple(part.strip() for part in raw.split(",") if part.strip())
    if tokens:
        return tokens
    if backend == "real":
        raise click.UsageError(f"no credentials: set {TOKENS_ENV} (comma-separated) to mine the live forge")
    return ("offline-a", "offline-b", "offline-c", "offline-d")


def _selector_config(flag: str | None, config: dict) -> SelectorConfig:
    path = flag or config.get("selectors")
    return SelectorConfig.load(path) if path else SelectorConfig.default()


def _run_line(run) -> str:
    payload = dataclasses.asdict(run)
    for key, value in payload.items():
        if isinstance(value, datetime):
            payload[key] = format_instant(value)
    return json.dumps(payload)


def _build_miner(
    *,
    backend: str,
    languages: tuple[str, ...],
    store_url: str,
    min_stars: int,
    workers: int,
    selectors: SelectorConfig,
    seed: int,
    population_size: int,
    pages: bool,
):
    store = open_store(store_url)
    tokens = _resolve_tokens(backend)
    clock: Clock
    if backend == "synthetic":
        # The synthetic forge exists for offline verification, so it runs
        # on an accelerated simulated clock: governor waits cost nothing.
        clock = SimulatedClock(datetime.now(timezone.utc))
        population = generate_population(seed, PopulationParams(size=population_size, languages=languages))
        search_backend = SyntheticForgeBackend(population)
        page_source = SyntheticPageSource(population)
    else:
        clock = SystemClock()
        search_backend = HttpForgeBackend()
        page_source = HttpPageSource()
    governor = RateGovernor(list(tokens), clock)
    client = SearchClient(search_backend, governor, clock)
    extractor = PageExtractor(page_source, selectors) if pages else None
    config = MinerConfig(languages=languages, min_stars=min_stars, workers=workers)
    return Miner(client, extractor, store, config, clock), store, clock


@click.group()
def main() -> None:
    """Harvest repository metadata and serve it for filtered sampling."""


@main.command()
@click.option("--language", "languages", multiple=True, help="Language to mine; repeatable.")
@click.option("--once/--loop", default=True, help="Single pass, or keep mining on a fixed cadence.")
@click.option("--backend", type=click.Choice(["real", "synthetic"]), default="real", show_default=True)
@click.option("--store", "store_flag", help="Store target (sqlite:///path.db or memory://).")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--min-stars", default=10, show_default=True)
@click.option("--workers", default=8, show_default=True)
@click.option("--cycle-hours", default=6.0, show_default=True, help="Cadence for --loop.")
@click.option("--cycles", default=0, show_default=True, help="Stop --loop after N cycles; 0 runs forever.")
@click.option("--seed", default=0, show_default=True, help="Synthetic population seed.")
@click.option("--population-size", default=1000, show_default=True, help="Synthetic population size.")
@click.option("--selectors", "selectors_flag", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--pages/--no-pages",
    default=True,
    help="Scrape repository pages for activity metrics, or persist search metadata only.",
)
def mine(
    languages,
    once,
    backend,
    store_flag,
    config_path,
    min_stars,
    workers,
    cycle_hours,
    cycles,
    seed,
    population_size,
    selectors_flag,
    pages,
) -> None:
    """Run the mining pipeline, printing one JSON report line per pass."""
    config = _load_config(config_path)
    selected = _resolve_languages(tuple(languages), config)
    miner, store, clock = _build_miner(
        backend=backend,
        languages=selected,
        store_url=_resolve_store(store_flag, config),
        min_stars=min_stars,
        workers=workers,
        selectors=_selector_config(selectors_flag, config),
        seed=seed,
        population_size=population_size,
        pages=pages,
    )
    try:
        if once:
            for run in miner.mine_all():
                click.echo(_run_line(run))
        else:
            scheduler = Scheduler(
                miner,
                store,
                SchedulerConfig(cycle_interval=timedelta(hours=cycle_hours)),
                clock,
            )
            before = 0
            while cycles == 0 or scheduler.cycles_completed < cycles:
                scheduler.run(max_cycles=scheduler.cycles_completed + 1)
                for run in scheduler.history[before:]:
                    click.echo(_run_line(run))
                before = len(scheduler.history)
    except RepoHarvestError as err:
        raise click.ClickException(str(err)) from err
    finally:
        store.close()


@main.command()
@click.option("--port", default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--store", "store_flag", help="Store target to serve from.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--cors-origin", default=None, help="Origin allowed to call the API from a browser.")
def serve(port, host, store_flag, config_path, cors_origin) -> None:
    """Serve the filter and export API over HTTP."""
    import uvicorn

    config = _load_config(config_path)
    store = open_store(_resolve_store(store_flag, config))
    app = create_app(store, cors_origin=cors_origin)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except (OSError, SystemExit) as err:
        raise click.ClickException(f"server failed to start on {host}:{port}: {err}") from err
    finally:
        store.close()


def _instant(text: str | None) -> datetime | None:
    if text is None:
        return None
    for fmt in ("%Y-%m-%d", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M:%SZ"):
        try:
            return datetime.strptime(text, fmt).replace(tzinfo=timezone.utc)
        except ValueError:
            continue
    raise click.BadParameter(f"{text!r} is not YYYY-MM-DD or YYYY-MM-DDTHH:MM:SSZ")


def _range(name: str, low, high) -> Bounds | None:
    if low is None and high is None:
        return None
    if low is not None and high is not None and low > high:
        raise click.UsageError(f"--{name}-min exceeds --{name}-max")
    return Bounds(low, high)


_COUNT_RANGES = ("commits", "contributors", "issues", "pulls", "branches", "releases", "stars", "watchers", "forks")


def _count_range_options(command):
    for name in reversed(_COUNT_RANGES):
        command = click.option(f"--{name}-max", type=click.IntRange(min=0))(command)
        command = click.option(f"--{name}-min", type=click.IntRange(min=0))(command)
    return command


@main.command()
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default="-", show_default=True)
@click.option("--store", "store_flag")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--name-contains")
@click.option("--language")
@click.option("--license", "license_equals")
@_count_range_options
@click.option("--created-min")
@click.option("--created-max")
@click.option("--last-commit-min")
@click.option("--last-commit-max")
@click.option("--exclude-forks", is_flag=True)
@click.option("--only-with-license", is_flag=True)
@click.option("--only-with-open-issues", is_flag=True)
@click.option("--exclude-archived", is_flag=True)
@click.option("--sort", default="stars", show_default=True)
@click.option("--order", type=click.Choice(["asc", "desc"]), default="desc", show_default=True)
def export(fmt, out, store_flag, config_path, name_contains, language, license_equals, **flags) -> None:
    """Write a filtered export without going through the server."""
    flt = RepoFilter(
        name_contains=name_contains,
        language_equals=language,
        license_equals=license_equals,
        created_between=_range("created", _instant(flags["created_min"]), _instant(flags["created_max"])),
        last_commit_between=_range(
            "last-commit", _instant(flags["last_commit_min"]), _instant(flags["last_commit_max"])
        ),
        exclude_forks=flags["exclude_forks"],
        only_with_license=flags["only_with_license"],
        only_with_open_issues=flags["only_with_open_issues"],
        exclude_archived=flags["exclude_archived"],
        **{
            name: bounds
            for name in _COUNT_RANGES
            if (bounds := _range(name, flags[f"{name}_min"], flags[f"{name}_max"])) is not None
        },
    )
    config = _load_config(config_path)
    store = open_store(_resolve_store(store_flag, config))
    try:
        rows = store.iter_filtered(flt, sort=flags["sort"], order=flags["order"])
        chunks = export_chunks(rows, fmt)
        if out == "-":
            for chunk in chunks:
                click.echo(chunk, nl=False)
        else:
            with open(out, "w", newline="", encoding="utf-8") as fh:
                for chunk in chunks:
                    fh.write(chunk)
    except RepoHarvestError as err:
        raise click.ClickException(str(err)) from err
    finally:
        store.close()


@main.command()
@click.option("--store", "store_flag")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--runs", "run_count", default=5, show_default=True, help="Recent passes to include per language.")
def stats(store_flag, config_path, run_count) -> None:
    """Print corpus counts and recent mining passes as JSON."""
    config = _load_config(config_path)
    store = open_store(_resolve_store(store_flag, config))
    try:
        languages = store.language_stats()
        recent = []
        for language in languages:
            for run in store.runs(language)[-run_count:]:
                recent.append(json.loads(_run_line(run)))
        recent.sort(key=lambda r: r["started_at"])
        click.echo(
            json.dumps(
                {"total_records": store.count(), "languages": languages, "recent_runs": recent},
                indent=2,
                sort_keys=True,
            )
        )
    finally:
        store.close()


if __name__ == "__main__":
    main()
