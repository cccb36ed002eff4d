"""Metric extraction from repository web pages.

The page-sourced metrics (commit totals, branch counts, issue and pull
tallies, the latest commit) never appear in search results, so they are
scraped from three pages per repository: the landing page, the issues list,
and the pull-request list. Selectors live in a versioned YAML document, not
in code, because page layouts drift and redeploying a config beats
re-releasing the package.

Fetching tries a `primary` layout first and a `fallback` layout only when
the primary fetch fails outright or its markup is unrecognizable (missing
anchor, unparseable matched value). A metric that is merely absent from a
recognized page stays absent; absence is data, not an error.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime
from decimal import Decimal, InvalidOperation
from importlib import resources
from typing import Any, Mapping, Protocol

import yaml

from .errors import ExtractionError, PageFetchError, PageUnavailable
from .htmldoc import Element, _parse_selector, parse_html
from .models import PAGE_SOURCED_FIELDS, utc_second

PAGES = ("landing", "issues", "pulls")
VARIANTS = ("primary", "fallback")
_KINDS = ("count", "instant", "sha", "text")

_NUMBER_RE = re.compile(r"(\d[\d,]*(?:\.\d+)?)\s*([kKmM]?)")
_SHA_RE = re.compile(r"^[0-9a-fA-F]{40}$")
_MULTIPLIERS = {"": 1, "k": 1_000, "m": 1_000_000}


def parse_count(text: str) -> int:
    """First number in `text`, honoring comma grouping and k/m suffixes.

    "12,034" -> 12034; "2.1k" -> 2100; "3.5m" -> 3500000; "381 Open" -> 381.
    """
    m = _NUMBER_RE.search(text)
    if m is None:
        raise ValueError(f"no number in {text!r}")
    digits, suffix = m.group(1).replace(",", ""), m.group(2).lower()
    try:
        value = Decimal(digits) * _MULTIPLIERS[suffix]
    except InvalidOperation as exc:
        raise ValueError(f"bad number {m.group(1)!r}") from exc
    if value != int(value):
        raise ValueError(f"{text!r} does not resolve to a whole count")
    return int(value)


def _parse_instant(text: str) -> datetime:
    cleaned = text.strip()
    if cleaned.endswith(("Z", "z")):
        cleaned = cleaned[:-1] + "+00:00"
    return utc_second(datetime.fromisoformat(cleaned))


def _parse_sha(text: str) -> str:
    cleaned = text.strip()
    if not _SHA_RE.match(cleaned):
        raise ValueError(f"not a commit sha: {text!r}")
    return cleaned.lower()


@dataclass(frozen=True)
class MetricRule:
    selector: str
    kind: str = "count"
    attr: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        _parse_selector(self.selector)  # fail at load time, not scrape time

    def read(self, el: Element) -> Any:
        raw = el.get(self.attr) if self.attr else el.text
        if raw is None:
            raise ValueError(f"attribute {self.attr!r} missing")
        if self.kind == "count":
            return parse_count(raw)
        if self.kind == "instant":
            return _parse_instant(raw)
        if self.kind == "sha":
            return _parse_sha(raw)
        return raw.strip()


@dataclass(frozen=True)
class PageProfile:
    anchor: tuple[str, ...]
    metrics: Mapping[str, tuple[MetricRule, ...]]

    def __post_init__(self) -> None:
        if not self.anchor:
            raise ValueError("every page profile needs an anchor selector")
        for sel in self.anchor:
            _parse_selector(sel)
        unknown = set(self.metrics) - PAGE_SOURCED_FIELDS
        if unknown:
            raise ValueError(f"selectors configured for unknown metrics: {sorted(unknown)}")


@dataclass(frozen=True)
class SelectorConfig:
    version: int
    profiles: Mapping[str, Mapping[str, PageProfile]]

    def profile(self, variant: str, page: str) -> PageProfile | None:
        return self.profiles.get(variant, {}).get(page)

    @classmethod
    def from_mapping(cls, doc: Mapping[str, Any]) -> SelectorConfig:
        if not isinstance(doc, Mapping) or "version" not in doc:
            raise ValueError("selector config must be a mapping with a version")
        profiles: dict[str, dict[str, PageProfile]] = {}
        for variant, pages in (doc.get("profiles") or {}).items():
            if variant not in VARIANTS:
                raise ValueError(f"unknown profile {variant!r}")
            profiles[variant] = {}
            for page, body in (pages or {}).items():
                if page not in PAGES:
                    raise ValueError(f"unknown page {page!r}")
                rules: dict[str, tuple[MetricRule, ...]] = {}
                for metric, entries in (body.get("metrics") or {}).items():
                    rules[metric] = tuple(
                        MetricRule(
                            selector=e["selector"],
                            kind=e.get("kind", "count"),
                            attr=e.get("attr"),
                        )
                        for e in entries
                    )
                profiles[variant][page] = PageProfile(tuple(body.get("anchor") or ()), rules)
        if "primary" not in profiles:
            raise ValueError("a primary profile is required")
        return cls(version=int(doc["version"]), profiles=profiles)

    @classmethod
    def load(cls, path: str) -> SelectorConfig:
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_mapping(yaml.safe_load(fh))

    @classmethod
    def default(cls) -> SelectorConfig:
        text = resources.files("repoharvest.data").joinpath("selectors.yaml").read_text("utf-8")
        return cls.from_mapping(yaml.safe_load(text))


class PageSource(Protocol):
    """Delivers raw page markup; raises :class:`PageFetchError` on failure."""

    def fetch(self, repo_name: str, page: str, variant: str) -> str:
        """Markup of `page` (landing | issues | pulls) in layout `variant`."""


@dataclass
class HarvestOutcome:
    """Everything scraping one repository produced."""

    metrics: dict[str, Any]
    variants: dict[str, str]
    failures: dict[str, PageUnavailable]

    @property
    def complete(self) -> bool:
        return not self.failures


def extract_page(html: str, profile: PageProfile) -> dict[str, Any]:
    """Metrics from one recognized page; raises when the layout is wrong."""
    root = parse_html(html)
    if not any(root.select_one(sel) for sel in profile.anchor):
        raise ExtractionError(f"page anchor not found (tried {', '.join(profile.anchor)})")
    found: dict[str, Any] = {}
    for metric, rules in profile.metrics.items():
        for rule in rules:
            el = root.select_one(rule.selector)
            if el is None:
                continue
            try:
                found[metric] = rule.read(el)
            except ValueError as exc:
                raise ExtractionError(f"{metric}: {exc}") from exc
            break
    return found


class PageExtractor:
    """Scrapes the three metric pages of a repository through a PageSource."""

    def __init__(self, source: PageSource, config: SelectorConfig | None = None) -> None:
        self._source = source
        self.config = config or SelectorConfig.default()

    def _attempt(self, repo_name: str, page: str, variant: str) -> dict[str, Any]:
        profile = self.config.profile(variant, page)
        if profile is None:
            raise PageFetchError(f"no {variant} selectors configured for {page}")
        html = self._source.fetch(repo_name, page, variant)
        return extract_page(html, profile)

    def harvest(self, repo_name: str) -> HarvestOutcome:
        """Scrape all pages, falling back per page; never raises for one repo.

        Pages where both layouts fail are recorded in `failures`; metrics
        from the pages that worked are still returned, so a partly dead
        repository still yields a partial harvest.
        """
        outcome = HarvestOutcome(metrics={}, variants={}, failures={})
        for page in PAGES:
            try:
                found = self._attempt(repo_name, page, "primary")
                outcome.variants[page] = "primary"
            except (PageFetchError, ExtractionError) as primary_error:
                try:
                    found = self._attempt(repo_name, page, "fallback")
                    outcome.variants[page] = "fallback"
                except (PageFetchError, ExtractionError) as fallback_error:
                    outcome.failures[page] = PageUnavailable(
                        f"{repo_name}/{page}", primary_error, fallback_error
                    )
                    continue
            outcome.metrics.update(found)
        return outcome
