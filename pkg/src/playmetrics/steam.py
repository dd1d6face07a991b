"""HTTP client for the public per-app Steam reviews endpoint.

Cursor-paginated, rate-limited, and retried with exponential backoff. The
base URL is configurable so tests can point at a local mock server.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass

import requests

from .errors import NetworkError, ParseError
from .ingest import RawReview

logger = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://store.steampowered.com"


@dataclass
class SteamClientConfig:
    base_url: str = DEFAULT_BASE_URL
    request_interval: float = 1.5  # seconds between request starts
    max_retries: int = 3
    backoff_base: float = 0.5  # first retry sleeps this long, then doubles
    timeout: float = 10.0
    num_per_page: int = 100


class RateLimiter:
    """Spaces request starts at least ``min_interval`` seconds apart.

    Safe to share across threads: each caller reserves the next slot under a
    lock and sleeps outside it.
    """

    def __init__(self, min_interval: float):
        self.min_interval = min_interval
        self._lock = threading.Lock()
        self._next_allowed = 0.0

    def wait(self) -> None:
        if self.min_interval <= 0:
            return
        with self._lock:
            now = time.monotonic()
            delay = self._next_allowed - now
            self._next_allowed = max(now, self._next_allowed) + self.min_interval
        if delay > 0:
            time.sleep(delay)


def _get_with_retries(
    session: requests.Session,
    url: str,
    params: dict,
    config: SteamClientConfig,
    limiter: RateLimiter,
) -> dict:
    last_error: Exception | None = None
    retries = 0
    for attempt in range(config.max_retries + 1):
        limiter.wait()
        try:
            response = session.get(url, params=params, timeout=config.timeout)
        except requests.RequestException as exc:
            last_error = exc
        else:
            if response.status_code == 200:
                try:
                    return response.json()
                except ValueError as exc:
                    raise ParseError(f"non-JSON response from {url}") from exc
            if response.status_code == 429 or response.status_code >= 500:
                last_error = NetworkError(f"HTTP {response.status_code} from {url}")
            else:
                raise NetworkError(f"HTTP {response.status_code} from {url}")
        if attempt < config.max_retries:
            retries += 1
            sleep = config.backoff_base * (2**attempt)
            logger.warning("retrying %s in %.2fs (%s)", url, sleep, last_error)
            time.sleep(sleep)
    raise NetworkError(f"{url} failed after {retries} retries: {last_error}")


def fetch_steam_reviews(
    app_id: str,
    max_reviews: int,
    config: SteamClientConfig | None = None,
    limiter: RateLimiter | None = None,
    session: requests.Session | None = None,
) -> list[RawReview]:
    """Fetch up to ``max_reviews`` reviews for one app, all languages.

    Reviews come back in the endpoint's rating order and are ranked 1..n.
    An app with no reviews yields an empty list, not an error.
    """
    if not str(app_id).isdigit():
        raise ValueError(f"app_id must be a numeric string, got {app_id!r}")
    config = config or SteamClientConfig()
    limiter = limiter or RateLimiter(config.request_interval)
    if max_reviews <= 0:
        return []

    own_session = session is None
    session = session or requests.Session()
    url = f"{config.base_url.rstrip('/')}/appreviews/{app_id}"
    reviews: list[RawReview] = []
    cursor = "*"
    seen_cursors = {cursor}
    try:
        while len(reviews) < max_reviews:
            payload = _get_with_retries(
                session,
                url,
                params={
                    "json": 1,
                    "filter": "all",
                    "language": "all",
                    "num_per_page": config.num_per_page,
                    "cursor": cursor,
                },
                config=config,
                limiter=limiter,
            )
            if not isinstance(payload, dict) or payload.get("success") != 1:
                raise ParseError(f"unexpected payload from {url}: success != 1")
            page = payload.get("reviews")
            if not isinstance(page, list):
                raise ParseError(f"unexpected payload from {url}: missing reviews list")
            if not page:
                break
            for entry in page:
                if len(reviews) >= max_reviews:
                    break
                reviews.append(
                    RawReview(
                        review_id=str(entry.get("recommendationid", "")),
                        game_id=str(app_id),
                        text=str(entry.get("review", "")),
                        rating_rank=len(reviews) + 1,
                    )
                )
            cursor = payload.get("cursor")
            if not cursor or cursor in seen_cursors:
                break
            seen_cursors.add(cursor)
    finally:
        if own_session:
            session.close()
    return reviews
