"""Shared fixtures: a scripted local HTTP server and merged-row builders."""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

import pytest

from playmetrics.aggregate import GameElementAverages, MergedGameRow
from playmetrics.ingest import GameMetadata, Store
from playmetrics.schema import DESIGN_ELEMENTS, price_category_from_price


class MockSteamServer:
    """Local HTTP server that plays back a scripted list of responses.

    Each script entry is ``(status, payload)`` where payload is a JSON-able
    object. Requests beyond the script get a 500. Arrival times and parsed
    query strings are recorded for assertions.
    """

    def __init__(self, script: list[tuple[int, object]]):
        self.script = list(script)
        self.requests: list[dict] = []
        self._lock = threading.Lock()

        server = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):  # noqa: N802 (http.server API)
                parsed = urlparse(self.path)
                with server._lock:
                    server.requests.append(
                        {
                            "time": time.monotonic(),
                            "path": parsed.path,
                            "query": {k: v[0] for k, v in parse_qs(parsed.query).items()},
                        }
                    )
                    entry = server.script.pop(0) if server.script else (500, {"error": "script exhausted"})
                status, payload = entry
                body = json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):  # keep test output quiet
                pass

        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self._httpd.server_address
        return f"http://{host}:{port}"

    def start(self) -> "MockSteamServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()


@pytest.fixture
def steam_server():
    """Factory for scripted mock servers; all started servers are stopped."""
    servers: list[MockSteamServer] = []

    def _make(script: list[tuple[int, object]]) -> MockSteamServer:
        server = MockSteamServer(script).start()
        servers.append(server)
        return server

    yield _make
    for server in servers:
        server.stop()


def make_metadata(game_id: str, *, vr: bool = False, price: float = 9.99, **flags) -> GameMetadata:
    meta = GameMetadata(
        game_id=game_id,
        name=f"Game {game_id}",
        store=Store.META if vr else Store.STEAM,
        release_year=2021,
        price_usd=price,
        price_category=price_category_from_price(price),
        required_age=0,
        pegi_bucket=3,
    )
    if vr:
        meta.Is_VR = 1
        meta.Is_3D = 1
    meta.Free_To_Play = 1 if price == 0 else 0
    for name, value in flags.items():
        setattr(meta, name, value)
    return meta


def make_averages(game_id: str, avgs: dict[str, float | None], review_count: int = 5,
                  total_high_pct: float | None = None) -> GameElementAverages:
    """Averages record from a sparse element->avg map (missing => absent)."""
    record = GameElementAverages(game_id=game_id, review_count=review_count)
    for element in DESIGN_ELEMENTS:
        value = avgs.get(element)
        record.avgs[element] = value
        record.rated_counts[element] = review_count if value is not None else 0
        record.high_pcts[element] = None if value is None else (1.0 if value >= 4 else 0.0)
    present = [v for v in record.avgs.values() if v is not None]
    record.overall_rating = sum(present) / len(present) if present else None
    if total_high_pct is not None:
        record.total_high_pct = total_high_pct
    else:
        pcts = [p for p in record.high_pcts.values() if p is not None]
        record.total_high_pct = sum(pcts) / len(pcts) if pcts else None
    return record


def make_merged_row(game_id: str, *, vr: bool = False, price: float = 9.99,
                    avgs: dict[str, float | None] | None = None,
                    total_high_pct: float | None = None, **flags) -> MergedGameRow:
    meta = make_metadata(game_id, vr=vr, price=price, **flags)
    averages = make_averages(game_id, avgs or {}, total_high_pct=total_high_pct)
    return MergedGameRow(meta, averages)


def pytest_runtest_logreport(report):
    """Print one visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    print(f"\nACCEPTANCE {name}: {'PASS' if report.passed else 'FAIL'}")
