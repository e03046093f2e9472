"""Experiment harness: datasets, degradation, accuracy, and reports.

Datasets arrive as JSONL with precomputed retrieval. The degradation
simulator removes ground-truth-relevant documents with a seeded per-document
draw so different probability levels nest exactly. Experiments run the full
pipeline (crag), a no-trigger baseline (plain_rag), or the baseline plus web
knowledge on every query (rag_web), and emit a JSON-serializable report.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from . import pipeline
from .errors import DatasetError, GenerationError, InputError
from .pipeline import PipelineConfig, RunRecord, StubGenerator
from .refinement import BundleKind, KnowledgeBundle
from .scoring import Document, Query, Scorer

logger = logging.getLogger(__name__)

MODES = ("crag", "plain_rag", "rag_web")

PLACEHOLDER_DOC_ID = "placeholder"
PLACEHOLDER_TEXT = "no information available"


@dataclass(frozen=True)
class DatasetInstance:
    """One question with gold answers and precomputed retrieved documents."""

    id: str
    question: str
    answers: tuple[str, ...]
    docs: tuple[Document, ...]
    relevant_doc_ids: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "answers", tuple(self.answers))
        object.__setattr__(self, "docs", tuple(self.docs))
        if self.relevant_doc_ids is not None:
            object.__setattr__(self, "relevant_doc_ids", tuple(self.relevant_doc_ids))
        if not self.answers or any(not a.strip() for a in self.answers):
            raise ValueError(f"instance {self.id!r} needs non-empty answers")
        ids = [d.id for d in self.docs]
        if len(set(ids)) != len(ids):
            raise ValueError(f"instance {self.id!r} has duplicate doc ids")


def _parse_instance(payload: dict, line_no: int) -> DatasetInstance:
    for field_name in ("id", "question", "answers", "docs"):
        if field_name not in payload:
            raise DatasetError(f"line {line_no}: missing field {field_name!r}")
    docs = []
    for i, raw in enumerate(payload["docs"]):
        if not isinstance(raw, dict) or "text" not in raw:
            raise DatasetError(f"line {line_no}: docs[{i}] needs a 'text' field")
        docs.append(
            Document(
                id=str(raw.get("id", f"doc{i}")),
                text=raw["text"],
                title=raw.get("title"),
            )
        )
    relevant = payload.get("relevant_doc_ids")
    try:
        return DatasetInstance(
            id=str(payload["id"]),
            question=payload["question"],
            answers=tuple(str(a) for a in payload["answers"]),
            docs=tuple(docs),
            relevant_doc_ids=tuple(str(r) for r in relevant) if relevant is not None else None,
        )
    except ValueError as exc:
        raise DatasetError(f"line {line_no}: {exc}") from exc


def load_dataset(path: Union[str, Path]) -> list[DatasetInstance]:
    """Read a JSONL dataset, attaching line numbers to every error."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset not found: {path}")
    instances = []
    seen_ids = set()
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except ValueError as exc:
                raise DatasetError(f"line {line_no}: invalid JSON: {exc}") from exc
            instance = _parse_instance(payload, line_no)
            if instance.id in seen_ids:
                raise DatasetError(f"line {line_no}: duplicate instance id {instance.id!r}")
            seen_ids.add(instance.id)
            instances.append(instance)
    return instances


def removal_draw(seed: int, instance_id: str, doc_id: str) -> float:
    """Deterministic uniform draw in [0, 1) for one (seed, instance, doc)."""
    key = f"{seed}\x1f{instance_id}\x1f{doc_id}".encode("utf-8")
    digest = hashlib.sha256(key).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


def degrade(
    instances: Sequence[DatasetInstance], p: float, seed: int
) -> list[DatasetInstance]:
    """Remove each relevant document with probability p, deterministically.

    The per-document draw depends only on (seed, instance id, doc id), so the
    removed sets nest as p grows: anything removed at p1 is also removed at
    any p2 >= p1 under the same seed. Instances left with no documents get a
    placeholder so the pipeline precondition still holds.
    """
    if not 0.0 <= p <= 1.0:
        raise InputError(f"degradation probability must be in [0, 1], got {p}")
    degraded = []
    for instance in instances:
        if instance.relevant_doc_ids is None:
            raise DatasetError(
                f"instance {instance.id!r} has no relevant_doc_ids; cannot degrade"
            )
        relevant = set(instance.relevant_doc_ids)
        kept = [
            doc
            for doc in instance.docs
            if doc.id not in relevant or removal_draw(seed, instance.id, doc.id) >= p
        ]
        if not kept:
            kept = [Document(id=PLACEHOLDER_DOC_ID, text=PLACEHOLDER_TEXT)]
        degraded.append(dataclasses.replace(instance, docs=tuple(kept)))
    return degraded


def accuracy(answer: str, golds: Sequence[str]) -> bool:
    """True iff any gold answer appears in the answer, case-insensitively."""
    if not golds:
        raise ValueError("golds must be non-empty")
    lowered = answer.lower()
    return any(gold.lower() in lowered for gold in golds)


@dataclass
class InstanceRecord:
    """One instance's outcome inside a report."""

    instance_id: str
    golds: tuple[str, ...]
    correct: bool
    run: RunRecord


@dataclass
class ExperimentReport:
    """Aggregated experiment outcome plus everything needed to rerun it."""

    mode: str
    degradation_level: float
    accuracy: float
    action_histogram: dict
    config: dict
    records: list[InstanceRecord]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "degradation_level": self.degradation_level,
            "accuracy": self.accuracy,
            "action_histogram": dict(self.action_histogram),
            "config": self.config,
            "records": [_record_dict(r) for r in self.records],
        }


def _record_dict(record: InstanceRecord) -> dict:
    run = record.run
    return {
        "instance_id": record.instance_id,
        "golds": list(record.golds),
        "correct": record.correct,
        "question": run.question,
        "doc_scores": list(run.doc_scores),
        "judgment": None
        if run.judgment is None
        else {"action": run.judgment.action.value, "max_score": run.judgment.max_score},
        "action": None if run.action is None else run.action.value,
        "knowledge_kind": None if run.knowledge is None else run.knowledge.kind.value,
        "knowledge": None if run.knowledge is None else run.knowledge.text,
        "searched_urls": list(run.searched_urls),
        "answer": run.answer,
        "timings": dict(run.timings),
        "error": run.error,
    }


def config_snapshot(cfg: PipelineConfig) -> dict:
    """JSON-safe copy of the pipeline config for report reproducibility."""
    return json.loads(json.dumps(dataclasses.asdict(cfg), default=str))


def _generate_record(
    question: Query,
    bundle: KnowledgeBundle,
    doc_scores: tuple[float, ...],
    generator,
) -> RunRecord:
    """Build a no-trigger RunRecord: assemble the prompt and generate."""
    timings: dict = {}
    t_total = time.perf_counter()
    prompt = pipeline.assemble_prompt(question, bundle)
    error = None
    t0 = time.perf_counter()
    try:
        answer = pipeline.generate(prompt, generator)
    except GenerationError as exc:
        logger.warning("generation failed: %s", exc)
        answer = ""
        error = f"generation failed: {exc}"
    timings["generate"] = time.perf_counter() - t0
    timings["total"] = time.perf_counter() - t_total
    return RunRecord(
        question=question.text,
        doc_scores=doc_scores,
        judgment=None,
        action=None,
        knowledge=bundle,
        searched_urls=(),
        answer=answer,
        timings=timings,
        error=error,
    )


def run_experiment(
    instances: Sequence[DatasetInstance],
    cfg: PipelineConfig,
    mode: str,
    degradation: Optional[tuple[float, int]] = None,
    *,
    scorer: Scorer,
    search_client=None,
    rewriter=None,
    generator=None,
    fetch_transport=None,
    workers: int = 1,
) -> ExperimentReport:
    """Run one experiment over a dataset and aggregate the report.

    degradation is an optional (p, seed) pair applied before dispatch.
    Generation failures are recorded per instance and counted incorrect;
    scorer failures abort the whole experiment.
    """
    if mode not in MODES:
        raise InputError(f"unknown mode {mode!r}; choose from {MODES}")
    if workers < 1:
        raise InputError("workers must be >= 1")
    if generator is None:
        generator = StubGenerator()

    level = 0.0
    if degradation is not None:
        p, seed = degradation
        instances = degrade(instances, p, seed)
        level = p

    def run_one(instance: DatasetInstance) -> InstanceRecord:
        question = Query(instance.question)
        if mode == "crag":
            record = pipeline.run(
                question,
                instance.docs,
                cfg,
                scorer,
                search_client,
                rewriter,
                generator,
                fetch_transport=fetch_transport,
            )
        elif mode == "plain_rag":
            bundle = pipeline.raw_internal_bundle(instance.docs)
            record = _generate_record(question, bundle, (), generator)
        else:
            internal = pipeline.raw_internal_bundle(instance.docs)
            external, urls = pipeline.external_knowledge(
                question, cfg, scorer, search_client, rewriter, fetch_transport
            )
            record = _generate_record(
                question, pipeline.combine(internal, external), (), generator
            )
            record.searched_urls = tuple(urls)
        correct = record.error is None and accuracy(record.answer, instance.answers)
        return InstanceRecord(
            instance_id=instance.id,
            golds=instance.answers,
            correct=correct,
            run=record,
        )

    if workers == 1:
        records = [run_one(instance) for instance in instances]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run_one, instances))

    histogram = Counter(
        r.run.action.value for r in records if r.run.action is not None
    )
    correct_count = sum(1 for r in records if r.correct)
    return ExperimentReport(
        mode=mode,
        degradation_level=level,
        accuracy=correct_count / len(records) if records else 0.0,
        action_histogram=dict(histogram),
        config=config_snapshot(cfg),
        records=records,
    )


def csv_row(report: ExperimentReport) -> dict:
    """Flat summary row for degradation curves: mode, p, accuracy, actions."""
    row = {
        "mode": report.mode,
        "degradation_level": report.degradation_level,
        "accuracy": report.accuracy,
    }
    for action in ("Correct", "Incorrect", "Ambiguous"):
        row[action.lower()] = report.action_histogram.get(action, 0)
    return row
