"""Shared fixtures and test doubles."""

import json
from pathlib import Path

import pytest

from ragmend.cli import default_fixtures_dir
from ragmend.errors import FetchError
from ragmend.harness import load_dataset
from ragmend.scoring import LexicalScorer
from ragmend.websearch import SearchResult


class FakeResponse:
    """A canned requests-style response."""

    def __init__(self, status_code=200, payload=None, text=""):
        self.status_code = status_code
        self._payload = payload
        self.text = text or (json.dumps(payload) if payload is not None else "")

    def json(self):
        if self._payload is None:
            raise ValueError("no JSON body")
        return self._payload


class FakeSession:
    """Replays queued responses; an Exception in the queue is raised instead."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.calls = []

    def _next(self):
        if not self.replies:
            raise AssertionError("FakeSession ran out of replies")
        reply = self.replies.pop(0)
        if isinstance(reply, Exception):
            raise reply
        return reply

    def post(self, url, json=None, timeout=None, headers=None):
        self.calls.append(("post", url, json))
        return self._next()

    def get(self, url, params=None, timeout=None, headers=None):
        self.calls.append(("get", url, params, headers))
        return self._next()


class CountingTransport:
    """Serves bodies from a dict and counts every network call."""

    def __init__(self, pages):
        self.pages = dict(pages)
        self.calls = 0
        self.urls = []

    def get(self, url, timeout):
        self.calls += 1
        self.urls.append(url)
        if url not in self.pages:
            raise FetchError(url, "no such page")
        return self.pages[url]


class ListSearchClient:
    """Returns preconfigured results per query string and counts calls."""

    def __init__(self, mapping=None):
        self.mapping = dict(mapping or {})
        self.calls = 0
        self.queries = []

    def search(self, query):
        self.calls += 1
        self.queries.append(query)
        return list(self.mapping.get(query, []))


class FixtureWeb:
    """In-memory stand-in for the mock web server, built from the fixture files."""

    def __init__(self, fixtures_dir: Path):
        raw = json.loads((fixtures_dir / "search.json").read_text("utf-8"))
        self.pages = {}
        self.search_map = {}
        for query, items in raw.items():
            results = []
            for i, item in enumerate(items):
                name = item["url"].rsplit("/", 1)[-1]
                url = f"mock://web/{name}"
                self.pages[url] = (fixtures_dir / "pages" / name).read_text("utf-8")
                results.append(SearchResult(url=url, title=item.get("title"), rank=i + 1))
            self.search_map[query] = results

    def search_client(self) -> ListSearchClient:
        return ListSearchClient(self.search_map)

    def transport(self) -> CountingTransport:
        return CountingTransport(self.pages)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return default_fixtures_dir()


@pytest.fixture(scope="session")
def fixture_dataset(fixtures_dir):
    return load_dataset(fixtures_dir / "dataset_20.jsonl")


@pytest.fixture(scope="session")
def fixture_web(fixtures_dir) -> FixtureWeb:
    return FixtureWeb(fixtures_dir)


@pytest.fixture
def lexical() -> LexicalScorer:
    return LexicalScorer()


def pytest_runtest_logreport(report):
    """Print one PASS/FAIL line per acceptance criterion."""
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    print(f"\n[ACCEPTANCE] {name}: {'PASS' if report.passed else 'FAIL'}")
