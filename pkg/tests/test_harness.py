"""Experiment harness: dataset loading, degradation, accuracy, reports."""

import hashlib
import json

import pytest

from conftest import CountingTransport, ListSearchClient
from ragmend.errors import DatasetError, InputError, ScorerUnavailableError
from ragmend.harness import (
    PLACEHOLDER_DOC_ID,
    PLACEHOLDER_TEXT,
    DatasetInstance,
    ExperimentReport,
    accuracy,
    csv_row,
    degrade,
    load_dataset,
    removal_draw,
    run_experiment,
)
from ragmend.pipeline import PipelineConfig
from ragmend.refinement import BundleKind
from ragmend.scoring import Document
from ragmend.trigger import Action
from ragmend.websearch import SearchConfig, SearchResult


def write_jsonl(tmp_path, lines):
    path = tmp_path / "data.jsonl"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def valid_line(instance_id="q1", **extra):
    payload = {
        "id": instance_id,
        "question": "What is the capital city of France?",
        "answers": ["Paris"],
        "docs": [{"id": "d1", "text": "The capital city of France is Paris."}],
    }
    payload.update(extra)
    return json.dumps(payload)


class TestLoadDataset:
    def test_parses_instances(self, tmp_path):
        path = write_jsonl(
            tmp_path,
            [
                valid_line("q1", relevant_doc_ids=["d1"]),
                valid_line("q2", docs=[{"text": "a"}, {"text": "b", "title": "T"}]),
            ],
        )
        instances = load_dataset(path)
        assert [i.id for i in instances] == ["q1", "q2"]
        assert instances[0].relevant_doc_ids == ("d1",)
        assert instances[1].relevant_doc_ids is None
        assert [d.id for d in instances[1].docs] == ["doc0", "doc1"]
        assert instances[1].docs[1].title == "T"

    def test_blank_lines_skipped(self, tmp_path):
        path = write_jsonl(tmp_path, [valid_line("q1"), "", valid_line("q2")])
        assert len(load_dataset(path)) == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError, match="not found"):
            load_dataset(tmp_path / "nope.jsonl")

    def test_invalid_json_names_line(self, tmp_path):
        path = write_jsonl(tmp_path, [valid_line("q1"), "{not json"])
        with pytest.raises(DatasetError, match="line 2"):
            load_dataset(path)

    @pytest.mark.parametrize("missing", ["id", "question", "answers", "docs"])
    def test_missing_field_named(self, tmp_path, missing):
        payload = json.loads(valid_line())
        del payload[missing]
        path = write_jsonl(tmp_path, [json.dumps(payload)])
        with pytest.raises(DatasetError, match=f"line 1.*{missing}"):
            load_dataset(path)

    def test_doc_without_text(self, tmp_path):
        path = write_jsonl(tmp_path, [valid_line(docs=[{"id": "d1"}])])
        with pytest.raises(DatasetError, match=r"docs\[0\]"):
            load_dataset(path)

    def test_duplicate_instance_id(self, tmp_path):
        path = write_jsonl(tmp_path, [valid_line("q1"), valid_line("q1")])
        with pytest.raises(DatasetError, match="line 2.*duplicate"):
            load_dataset(path)

    def test_empty_answers_rejected(self, tmp_path):
        path = write_jsonl(tmp_path, [valid_line(answers=[])])
        with pytest.raises(DatasetError, match="line 1"):
            load_dataset(path)

    def test_duplicate_doc_ids_rejected(self, tmp_path):
        docs = [{"id": "d", "text": "a"}, {"id": "d", "text": "b"}]
        path = write_jsonl(tmp_path, [valid_line(docs=docs)])
        with pytest.raises(DatasetError, match="line 1"):
            load_dataset(path)


class TestRemovalDraw:
    def test_unit_interval_and_distinct(self):
        draws = [removal_draw(1, "inst", f"d{i}") for i in range(2000)]
        assert all(0.0 <= d < 1.0 for d in draws)
        assert len(set(draws)) == 2000

    def test_roughly_uniform(self):
        draws = [removal_draw(1, "inst", f"d{i}") for i in range(2000)]
        mean = sum(draws) / len(draws)
        assert 0.45 < mean < 0.55

    def test_deterministic(self):
        assert removal_draw(7, "a", "b") == removal_draw(7, "a", "b")

    def test_sensitive_to_each_component(self):
        base = removal_draw(1, "a", "b")
        assert base != removal_draw(2, "a", "b")
        assert base != removal_draw(1, "x", "b")
        assert base != removal_draw(1, "a", "y")


def many_docs_instance(n, question="q?", answer="a"):
    docs = tuple(Document(id=f"d{i}", text=f"text {i}") for i in range(n))
    return DatasetInstance(
        id="big",
        question=question,
        answers=(answer,),
        docs=docs,
        relevant_doc_ids=tuple(d.id for d in docs),
    )


class TestDegrade:
    def simple_instance(self):
        docs = (
            Document(id="irr", text="noise"),
            Document(id="rel", text="signal"),
        )
        return DatasetInstance(
            id="q1", question="q?", answers=("a",), docs=docs, relevant_doc_ids=("rel",)
        )

    def test_p_zero_keeps_everything(self):
        inst = many_docs_instance(50)
        [out] = degrade([inst], 0.0, seed=1)
        assert out.docs == inst.docs

    def test_p_one_removes_all_relevant(self):
        [out] = degrade([self.simple_instance()], 1.0, seed=1)
        assert [d.id for d in out.docs] == ["irr"]

    def test_placeholder_when_everything_removed(self):
        inst = many_docs_instance(5)
        [out] = degrade([inst], 1.0, seed=1)
        assert len(out.docs) == 1
        assert out.docs[0].id == PLACEHOLDER_DOC_ID
        assert out.docs[0].text == PLACEHOLDER_TEXT

    def test_deterministic(self):
        inst = many_docs_instance(100)
        a = degrade([inst], 0.5, seed=9)
        b = degrade([inst], 0.5, seed=9)
        assert [d.id for d in a[0].docs] == [d.id for d in b[0].docs]

    def test_levels_nest(self):
        inst = many_docs_instance(60)
        kept = {}
        for p in (0.2, 0.5, 0.8):
            [out] = degrade([inst], p, seed=7)
            kept[p] = {d.id for d in out.docs if d.id != PLACEHOLDER_DOC_ID}
        assert kept[0.8] <= kept[0.5] <= kept[0.2]

    def test_matches_per_doc_draws(self):
        inst = many_docs_instance(60)
        [out] = degrade([inst], 0.5, seed=3)
        expected = {
            d.id for d in inst.docs if removal_draw(3, inst.id, d.id) >= 0.5
        }
        assert {d.id for d in out.docs} == expected

    def test_removal_rate_plausible(self):
        inst = many_docs_instance(400)
        [out] = degrade([inst], 0.5, seed=11)
        kept = [d for d in out.docs if d.id != PLACEHOLDER_DOC_ID]
        assert 160 <= len(kept) <= 240

    def test_irrelevant_docs_immune(self):
        [out] = degrade([self.simple_instance()], 1.0, seed=2)
        assert any(d.id == "irr" for d in out.docs)

    def test_other_fields_preserved(self):
        inst = self.simple_instance()
        [out] = degrade([inst], 1.0, seed=2)
        assert (out.id, out.question, out.answers) == (inst.id, inst.question, inst.answers)
        assert out.relevant_doc_ids == inst.relevant_doc_ids

    def test_missing_labels_rejected(self):
        inst = DatasetInstance(
            id="q1",
            question="q?",
            answers=("a",),
            docs=(Document(id="d", text="t"),),
        )
        with pytest.raises(DatasetError, match="relevant_doc_ids"):
            degrade([inst], 0.5, seed=1)

    @pytest.mark.parametrize("p", [-0.1, 1.5])
    def test_out_of_range_probability(self, p):
        with pytest.raises(InputError):
            degrade([self.simple_instance()], p, seed=1)


class TestAccuracy:
    def test_substring_case_insensitive(self):
        assert accuracy("The answer is PARIS, France.", ["paris"])
        assert not accuracy("The answer is Lyon.", ["Paris"])

    def test_any_gold_suffices(self):
        assert accuracy("It was Mozart.", ["Beethoven", "mozart"])

    def test_empty_answer(self):
        assert not accuracy("", ["Paris"])

    def test_no_golds_rejected(self):
        with pytest.raises(ValueError):
            accuracy("anything", [])


def make_instance(tag, question, gold, rel_text, irr_text):
    docs = (
        Document(id=f"{tag}_irr", text=irr_text),
        Document(id=f"{tag}_rel", text=rel_text),
    )
    return DatasetInstance(
        id=tag,
        question=question,
        answers=(gold,),
        docs=docs,
        relevant_doc_ids=(f"{tag}_rel",),
    )


# Lexical scores against the popqa thresholds: i1 and i2 land Correct,
# i3 lands Ambiguous, i4 (no relevant doc at all) lands Incorrect.
INSTANCES = [
    make_instance(
        "i1",
        "What is the capital city of France?",
        "Paris",
        "The capital city of France is Paris.",
        "Granite weathers slowly under arid climates.",
    ),
    make_instance(
        "i2",
        "Which metal has the symbol Au on the periodic table?",
        "gold",
        "The metal that has the symbol Au on the periodic table is gold.",
        "Maple sap flows during early spring thaw.",
    ),
    make_instance(
        "i3",
        "Who wrote the novel Dracula?",
        "Bram Stoker",
        "The novel Dracula is famous. Bram Stoker is the author.",
        "Deep ocean trenches stay cold.",
    ),
    DatasetInstance(
        id="i4",
        question="What is the melting point of nobelium?",
        answers=("nobelium melts",),
        docs=(Document(id="i4_irr", text="Quartz sand dunes shift overnight."),),
        relevant_doc_ids=(),
    ),
]

PAGE_URL = "mock://web/france"
PAGE_HTML = "<p>The capital city of France is Paris.</p>"


class BoomScorer:
    """Fails the test if any scoring happens."""

    def score(self, query, doc):
        raise AssertionError("scorer used")

    def score_batch(self, query, docs):
        raise AssertionError("scorer used")


class TestRunExperiment:
    def test_unknown_mode(self, lexical):
        with pytest.raises(InputError, match="mode"):
            run_experiment(INSTANCES, PipelineConfig(), "turbo", scorer=lexical)

    def test_bad_workers(self, lexical):
        with pytest.raises(InputError):
            run_experiment(INSTANCES, PipelineConfig(), "crag", scorer=lexical, workers=0)

    def test_empty_instances(self, lexical):
        report = run_experiment([], PipelineConfig(), "crag", scorer=lexical)
        assert report.accuracy == 0.0
        assert report.records == []

    def test_crag_accuracy_and_histogram(self, lexical):
        report = run_experiment(INSTANCES, PipelineConfig(), "crag", scorer=lexical)
        assert report.accuracy == pytest.approx(0.75)
        assert report.action_histogram == {"Correct": 2, "Ambiguous": 1, "Incorrect": 1}
        assert [r.instance_id for r in report.records] == ["i1", "i2", "i3", "i4"]
        by_id = {r.instance_id: r for r in report.records}
        assert by_id["i1"].correct and by_id["i3"].correct
        assert not by_id["i4"].correct

    def test_crag_full_degradation_breaks_it(self, lexical):
        report = run_experiment(
            INSTANCES, PipelineConfig(), "crag", degradation=(1.0, 42), scorer=lexical
        )
        assert report.degradation_level == 1.0
        assert report.accuracy == 0.0
        assert report.action_histogram == {"Incorrect": 4}

    def test_plain_rag_ignores_scorer_and_search(self):
        client = ListSearchClient()
        report = run_experiment(
            INSTANCES, PipelineConfig(), "plain_rag", scorer=BoomScorer(), search_client=client
        )
        assert report.accuracy == pytest.approx(0.75)
        assert report.action_histogram == {}
        assert client.calls == 0
        record = report.records[0].run
        assert record.judgment is None and record.action is None
        assert record.doc_scores == ()

    def test_plain_rag_degrades_with_retrieval(self):
        report = run_experiment(
            INSTANCES, PipelineConfig(), "plain_rag", degradation=(1.0, 42), scorer=BoomScorer()
        )
        assert report.accuracy == 0.0

    def test_rag_web_always_combines(self, tmp_path, lexical):
        client = ListSearchClient(
            {"capital city France": [SearchResult(url=PAGE_URL, rank=1)]}
        )
        transport = CountingTransport({PAGE_URL: PAGE_HTML})
        cfg = PipelineConfig(search=SearchConfig(cache_dir=tmp_path / "cache"))
        report = run_experiment(
            INSTANCES[:1],
            cfg,
            "rag_web",
            scorer=lexical,
            search_client=client,
            fetch_transport=transport,
        )
        record = report.records[0].run
        assert record.knowledge.kind is BundleKind.COMBINED
        assert record.searched_urls == (PAGE_URL,)
        assert client.calls == 1
        assert report.records[0].correct

    def test_workers_match_serial(self, lexical):
        def project(report):
            return (
                report.accuracy,
                report.action_histogram,
                [(r.instance_id, r.correct, r.run.answer, r.run.action) for r in report.records],
            )

        serial = run_experiment(INSTANCES, PipelineConfig(), "crag", scorer=lexical)
        threaded = run_experiment(
            INSTANCES, PipelineConfig(), "crag", scorer=lexical, workers=4
        )
        assert project(serial) == project(threaded)

    def test_generation_failure_counts_incorrect(self, lexical):
        from ragmend.errors import GenerationError

        class Exploding:
            def generate(self, prompt):
                raise GenerationError("kaput")

        report = run_experiment(
            INSTANCES[:2], PipelineConfig(), "crag", scorer=lexical, generator=Exploding()
        )
        assert report.accuracy == 0.0
        assert all(r.run.error for r in report.records)
        assert all(r.run.answer == "" for r in report.records)

    def test_scorer_failure_aborts(self):
        class Unavailable:
            def score_batch(self, query, docs):
                raise ScorerUnavailableError("down")

        with pytest.raises(ScorerUnavailableError):
            run_experiment(INSTANCES[:1], PipelineConfig(), "crag", scorer=Unavailable())

    def test_report_round_trips_through_json(self, lexical):
        report = run_experiment(INSTANCES, PipelineConfig(), "crag", scorer=lexical)
        parsed = json.loads(json.dumps(report.to_dict()))
        assert parsed["accuracy"] == pytest.approx(0.75)
        assert parsed["mode"] == "crag"
        assert parsed["config"]["thresholds"] == {"upper": 0.59, "lower": -0.99}
        first = parsed["records"][0]
        assert first["instance_id"] == "i1"
        assert first["judgment"]["action"] == "Correct"
        assert first["knowledge_kind"] == "Internal"

    def test_action_values_are_strings(self, lexical):
        report = run_experiment(INSTANCES[:1], PipelineConfig(), "crag", scorer=lexical)
        assert set(report.action_histogram) == {Action.CORRECT.value}


class TestCsvRow:
    def test_flattens_report(self):
        report = ExperimentReport(
            mode="crag",
            degradation_level=0.25,
            accuracy=0.5,
            action_histogram={"Correct": 3, "Incorrect": 1},
            config={},
            records=[],
        )
        assert csv_row(report) == {
            "mode": "crag",
            "degradation_level": 0.25,
            "accuracy": 0.5,
            "correct": 3,
            "incorrect": 1,
            "ambiguous": 0,
        }
