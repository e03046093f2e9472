"""Live HTTP tests against the bundled mock service."""

import json

import pytest
import requests

from ragmend.mockserver import MockService
from ragmend.scoring import LexicalScorer


@pytest.fixture(scope="module")
def service(fixtures_dir):
    with MockService(fixtures_dir) as svc:
        yield svc


class TestSearchRoute:
    def test_known_query_substitutes_base(self, service):
        resp = requests.get(
            f"{service.base_url}/search",
            params={"q": "What is the capital city of France?"},
            timeout=5,
        )
        assert resp.status_code == 200
        results = resp.json()["results"]
        assert len(results) == 1
        assert results[0]["url"] == f"{service.base_url}/page/q01.html"
        assert "{base}" not in results[0]["url"]

    def test_unknown_query_empty(self, service):
        resp = requests.get(
            f"{service.base_url}/search", params={"q": "zzz nothing"}, timeout=5
        )
        assert resp.json() == {"results": []}

    def test_missing_q_param(self, service):
        resp = requests.get(f"{service.base_url}/search", timeout=5)
        assert resp.status_code == 200
        assert resp.json() == {"results": []}


class TestPageRoute:
    def test_serves_fixture_page(self, service):
        resp = requests.get(f"{service.base_url}/page/q01.html", timeout=5)
        assert resp.status_code == 200
        assert "text/html" in resp.headers["Content-Type"]
        assert "<p>" in resp.text

    def test_unknown_page_404(self, service):
        resp = requests.get(f"{service.base_url}/page/nope.html", timeout=5)
        assert resp.status_code == 404

    def test_no_path_traversal(self, service):
        resp = requests.get(
            f"{service.base_url}/page/..%2Fsearch.json", timeout=5
        )
        assert resp.status_code == 404


class TestScoreRoute:
    def test_fixture_pair_wins(self, service):
        resp = requests.post(
            f"{service.base_url}/score",
            json={"query": "zzz-score-probe anything", "document": "whatever"},
            timeout=5,
        )
        assert resp.json() == {"score": 0.25}

    def test_falls_back_to_lexical(self, service):
        query = "capital of France"
        document = "The capital of France is Paris."
        resp = requests.post(
            f"{service.base_url}/score",
            json={"query": query, "document": document},
            timeout=5,
        )
        expected = LexicalScorer().score_text(query, document)
        assert resp.json()["score"] == pytest.approx(expected)

    def test_invalid_body_400(self, service):
        resp = requests.post(
            f"{service.base_url}/score",
            data="{broken",
            headers={"Content-Type": "application/json"},
            timeout=5,
        )
        assert resp.status_code == 400


class TestGenerateRoute:
    def test_fixture_reply_wins(self, service):
        resp = requests.post(
            f"{service.base_url}/generate",
            json={"prompt": "say zzz-fixture-probe now", "max_tokens": 16},
            timeout=5,
        )
        assert resp.json() == {"text": "fixture reply"}

    def test_falls_back_to_stub(self, service):
        prompt = "Paris is the capital.\n\nQuestion: capital of France\nAnswer:"
        resp = requests.post(
            f"{service.base_url}/generate",
            json={"prompt": prompt, "max_tokens": 16},
            timeout=5,
        )
        assert resp.json() == {"text": "Paris is the capital."}


class TestUnknownRoutes:
    def test_get_404(self, service):
        assert requests.get(f"{service.base_url}/nope", timeout=5).status_code == 404

    def test_post_404(self, service):
        resp = requests.post(f"{service.base_url}/nope", json={}, timeout=5)
        assert resp.status_code == 404


class TestFixtureFallbacks:
    def test_empty_dir_still_serves(self, tmp_path):
        with MockService(tmp_path) as svc:
            resp = requests.get(f"{svc.base_url}/search", params={"q": "x"}, timeout=5)
            assert resp.json() == {"results": []}
            resp = requests.post(
                f"{svc.base_url}/generate", json={"prompt": "free text"}, timeout=5
            )
            assert resp.json() == {"text": "UNKNOWN"}

    def test_generate_default_key(self, tmp_path):
        (tmp_path / "generate.json").write_text(
            json.dumps({"replies": [], "default": "canned"}), encoding="utf-8"
        )
        with MockService(tmp_path) as svc:
            resp = requests.post(
                f"{svc.base_url}/generate", json={"prompt": "anything"}, timeout=5
            )
            assert resp.json() == {"text": "canned"}
