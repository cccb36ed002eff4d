"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class RepoHarvestError(Exception):
    """Base class for all errors raised by this package."""


class RecordValidationError(RepoHarvestError):
    """A raw field map could not be turned into a valid repository record."""

    def __init__(self, problems: dict[str, str]) -> None:
        self.problems = dict(problems)
        detail = "; ".join(f"{field}: {reason}" for field, reason in sorted(self.problems.items()))
        super().__init__(f"invalid repository record ({detail})")


class FilterValidationError(RepoHarvestError):
    """A filter clause is malformed, e.g. a range with min above max."""

    def __init__(self, field: str, reason: str) -> None:
        self.field = field
        self.reason = reason
        super().__init__(f"invalid filter {field}: {reason}")


class QueryGrammarError(RepoHarvestError):
    """A search query string does not follow the documented grammar."""


class PageCapError(RepoHarvestError):
    """A page past the backend's hard pagination cap was requested."""


class BackendUnavailable(RepoHarvestError):
    """Transient backend failure; the request may be retried."""


class AuthenticationRejected(RepoHarvestError):
    """The backend rejected the credential; fatal for that token."""

    def __init__(self, token: str, message: str = "authentication rejected") -> None:
        self.token = token
        super().__init__(message)


class RateLimited(RepoHarvestError):
    """The backend asked us to back off."""

    def __init__(self, retry_after: float = 60.0) -> None:
        self.retry_after = float(retry_after)
        super().__init__(f"rate limited, retry after {retry_after}s")


class RateBudgetExceeded(RepoHarvestError):
    """A request was recorded against a budget with no remaining allowance."""


class GovernorShutdown(RepoHarvestError):
    """A waiter was aborted because the rate governor shut down."""


class ExtractionError(RepoHarvestError):
    """A document could not be processed at all (distinct from per-metric absence)."""


class PageFetchError(RepoHarvestError):
    """A fetch strategy failed to produce a document."""


class PageUnavailable(RepoHarvestError):
    """Both fetch strategies failed for one page."""

    def __init__(self, url: str, primary_error: Exception, fallback_error: Exception | None) -> None:
        self.url = url
        self.primary_error = primary_error
        self.fallback_error = fallback_error
        super().__init__(f"page unavailable: {url}")


class StoreError(RepoHarvestError):
    """Persistence failure; callers may replay idempotent writes."""


class CheckpointMonotonicityError(StoreError):
    """A checkpoint save would move the per-language marker backwards."""


class ExportLimitExceeded(RepoHarvestError):
    """An export matched more rows than the configured ceiling."""

    def __init__(self, total: int, ceiling: int) -> None:
        self.total = total
        self.ceiling = ceiling
        super().__init__(f"export of {total} rows exceeds ceiling of {ceiling}")
