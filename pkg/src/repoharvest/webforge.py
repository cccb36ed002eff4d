"""HTTP adapters for the live forge: search wire protocol and page fetches.

`HttpForgeBackend` speaks the REST search endpoint and translates wire
items into the same field maps the synthetic backend produces, so
everything above the `ForgeBackend` protocol is oblivious to which one
it is driving. `HttpPageSource` fetches the three public metric pages
of a repository; layout variants share one fetch because a live page
decides its own layout, the variant only selects which selector profile
is tried on it.
"""

from __future__ import annotations

from typing import Any

import httpx

from .errors import (
    AuthenticationRejected,
    BackendUnavailable,
    PageFetchError,
    RateLimited,
)

DEFAULT_API_URL = "https://api.github.com"
DEFAULT_PAGES_URL = "https://github.com"
REQUEST_TIMEOUT_SECONDS = 30.0

_PAGE_PATHS = {"landing": "", "issues": "/issues", "pulls": "/pulls"}


def _license_id(wire: dict | None) -> str | None:
    if not wire:
        return None
    spdx = wire.get("spdx_id")
    if not spdx or spdx == "NOASSERTION":
        return wire.get("name")
    return spdx


def item_from_wire(wire: dict[str, Any]) -> dict[str, Any]:
    """Search-result JSON to the field vocabulary the miner validates."""
    return {
        "name": wire.get("full_name"),
        "main_language": wire.get("language"),
        "created_at": wire.get("created_at"),
        "pushed_at": wire.get("pushed_at"),
        "updated_at": wire.get("updated_at"),
        "default_branch": wire.get("default_branch", "main"),
        "stars": wire.get("stargazers_count", 0),
        "forks": wire.get("forks_count", 0),
        "size": wire.get("size", 0),
        "is_fork_project": wire.get("fork", False),
        "has_wiki": wire.get("has_wiki", False),
        "archived": wire.get("archived", False),
        "license": _license_id(wire.get("license")),
        "homepage": wire.get("homepage"),
    }


def _retry_after_seconds(response: httpx.Response) -> float:
    header = response.headers.get("Retry-After")
    if header is not None:
        try:
            return max(float(header), 0.0)
        except ValueError:
            pass
    return 60.0


def _rate_limited(response: httpx.Response) -> bool:
    if response.status_code == 429:
        return True
    return (
        response.status_code == 403
        and response.headers.get("X-RateLimit-Remaining") == "0"
    )


class HttpForgeBackend:
    """`ForgeBackend` over the live search API."""

    def __init__(self, base_url: str = DEFAULT_API_URL, client: httpx.Client | None = None) -> None:
        self._base = base_url.rstrip("/")
        self._client = client or httpx.Client(timeout=REQUEST_TIMEOUT_SECONDS)

    def close(self) -> None:
        self._client.close()

    def _search(self, query: str, page_index: int, per_page: int, token: str) -> dict[str, Any]:
        # The query is already grammar-encoded; letting a URL encoder at it
        # would escape the qualifier separators the endpoint expects raw.
        url = f"{self._base}/search/repositories?q={query}&per_page={per_page}&page={page_index}"
        try:
            response = self._client.get(
                url,
                headers={
                    "Authorization": f"token {token}",
                    "Accept": "application/vnd.github+json",
                },
            )
        except httpx.HTTPError as err:
            raise BackendUnavailable(str(err)) from err
        if _rate_limited(response):
            raise RateLimited(retry_after=_retry_after_seconds(response))
        if response.status_code in (401, 403):
            raise AuthenticationRejected(token)
        if response.status_code >= 500:
            raise BackendUnavailable(f"search endpoint returned {response.status_code}")
        if response.status_code != 200:
            raise BackendUnavailable(f"unexpected status {response.status_code}")
        return response.json()

    def count(self, query: str, token: str) -> int:
        return int(self._search(query, 1, 1, token)["total_count"])

    def page(self, query: str, page_index: int, per_page: int, token: str) -> list[dict[str, Any]]:
        body = self._search(query, page_index, per_page, token)
        return [item_from_wire(item) for item in body.get("items", [])]


class HttpPageSource:
    """Fetches the landing, issues, and pulls pages of a repository."""

    def __init__(self, base_url: str = DEFAULT_PAGES_URL, client: httpx.Client | None = None) -> None:
        self._base = base_url.rstrip("/")
        self._client = client or httpx.Client(timeout=REQUEST_TIMEOUT_SECONDS, follow_redirects=True)

    def close(self) -> None:
        self._client.close()

    def fetch(self, repo_name: str, page: str, variant: str) -> str:
        path = _PAGE_PATHS.get(page)
        if path is None:
            raise PageFetchError(f"unknown page kind {page!r}")
        url = f"{self._base}/{repo_name}{path}"
        try:
            response = self._client.get(url)
        except httpx.HTTPError as err:
            raise PageFetchError(f"{url}: {err}") from err
        if response.status_code != 200:
            raise PageFetchError(f"{url}: status {response.status_code}")
        return response.text
