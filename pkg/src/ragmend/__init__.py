"""Corrective retrieval-augmented generation pipeline.

Scores retrieved documents against the question, triggers one of three
actions (Correct, Incorrect, Ambiguous), refines or replaces the knowledge
accordingly (document refinement, web search, or both), and generates the
answer. Ships an experiment harness with seeded retrieval degradation,
ablations, and a mock server for hermetic runs.
"""

from .errors import (
    ConfigError,
    DatasetError,
    EmptyDocumentError,
    FetchError,
    GenerationError,
    InputError,
    NoDocumentsError,
    OfflineViolationError,
    RagmendError,
    RemoteError,
    RewriteError,
    ScorerUnavailableError,
    SearchUnavailableError,
)
from .harness import (
    DatasetInstance,
    ExperimentReport,
    InstanceRecord,
    accuracy,
    degrade,
    load_dataset,
    run_experiment,
)
from .pipeline import (
    AblationFlags,
    PipelineConfig,
    RemoteGenerator,
    RunRecord,
    StubGenerator,
    assemble_prompt,
    run,
)
from .refinement import (
    BundleKind,
    KnowledgeBundle,
    KnowledgeStrip,
    RefineConfig,
    filter_strips,
    refine,
    segment,
    split_sentences,
)
from .scoring import (
    Document,
    LexicalScorer,
    Query,
    RemoteScorer,
    Scorer,
    ScorerConfig,
    build_scorer,
    tokenize,
)
from .trigger import THRESHOLD_PRESETS, Action, ActionJudgment, Thresholds, judge
from .websearch import (
    HttpSearchClient,
    KeywordRewriter,
    PageContent,
    RemoteRewriter,
    SearchConfig,
    SearchQuery,
    SearchResult,
    fetch_and_extract,
    rewrite,
    search,
    select_external,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActionJudgment",
    "AblationFlags",
    "BundleKind",
    "ConfigError",
    "DatasetError",
    "DatasetInstance",
    "Document",
    "EmptyDocumentError",
    "ExperimentReport",
    "FetchError",
    "GenerationError",
    "HttpSearchClient",
    "InputError",
    "InstanceRecord",
    "KeywordRewriter",
    "KnowledgeBundle",
    "KnowledgeStrip",
    "LexicalScorer",
    "NoDocumentsError",
    "OfflineViolationError",
    "PageContent",
    "PipelineConfig",
    "Query",
    "RagmendError",
    "RefineConfig",
    "RemoteError",
    "RemoteGenerator",
    "RemoteRewriter",
    "RemoteScorer",
    "RewriteError",
    "RunRecord",
    "Scorer",
    "ScorerConfig",
    "ScorerUnavailableError",
    "SearchConfig",
    "SearchQuery",
    "SearchResult",
    "SearchUnavailableError",
    "StubGenerator",
    "THRESHOLD_PRESETS",
    "Thresholds",
    "accuracy",
    "assemble_prompt",
    "build_scorer",
    "degrade",
    "fetch_and_extract",
    "filter_strips",
    "judge",
    "load_dataset",
    "refine",
    "rewrite",
    "run",
    "run_experiment",
    "search",
    "segment",
    "select_external",
    "split_sentences",
    "tokenize",
]
