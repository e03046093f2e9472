"""Command-line entry point.

Subcommands: judge (standalone action trigger), run (experiment driver), and
mock-serve (fixture-backed endpoints for hermetic runs). Exit codes: 0 on
success, 2 for usage or input errors, 3 for runtime or network errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Optional
from urllib.parse import urlparse

from . import config as config_mod
from . import harness
from .errors import ConfigError, InputError, OfflineViolationError, RemoteError
from .mockserver import MockService
from .pipeline import PipelineConfig, RemoteGenerator, StubGenerator
from .scoring import Document, Query, build_scorer
from .trigger import Action, judge
from .websearch import HttpSearchClient, HttpTransport, KeywordRewriter, RemoteRewriter

logger = logging.getLogger(__name__)

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

_LOCAL_HOSTS = {"localhost", "127.0.0.1", "::1"}


def _is_local_url(url: str) -> bool:
    return (urlparse(url).hostname or "") in _LOCAL_HOSTS


class OfflineGuardTransport:
    """Fetch transport that refuses to touch non-local hosts."""

    def __init__(self, inner=None):
        self.inner = inner or HttpTransport()

    def get(self, url: str, timeout: float) -> str:
        if not _is_local_url(url):
            raise OfflineViolationError(f"offline mode forbids fetching {url}")
        return self.inner.get(url, timeout)


def _check_offline(cfg: PipelineConfig) -> None:
    """Reject any configured non-local endpoint before network activity."""
    endpoints = {
        "scorer.endpoint": cfg.scorer.endpoint,
        "search.endpoint": cfg.search.endpoint,
        "generator.endpoint": cfg.generator_endpoint,
        "rewriter.endpoint": cfg.rewriter_endpoint,
    }
    for name, url in endpoints.items():
        if url and not _is_local_url(url):
            raise ConfigError(f"--offline forbids non-local endpoint {name}={url}")


def _add_common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="config override, highest precedence (repeatable)",
    )
    parser.add_argument(
        "--log-level", choices=sorted(_LOG_LEVELS), default="warn", help="log verbosity"
    )
    parser.add_argument(
        "--offline",
        action="store_true",
        help="forbid all non-local endpoints and fetches",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ragmend",
        description="Corrective retrieval-augmented generation pipeline.",
        epilog="A real search backend API key can be supplied via RAGMEND_SEARCH_API_KEY.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_judge = sub.add_parser("judge", help="score documents and print the action")
    p_judge.add_argument("question", help="the question text")
    p_judge.add_argument("docs_file", type=Path, help="JSONL file of documents")
    _add_common_options(p_judge)

    p_run = sub.add_parser("run", help="run an experiment over a dataset")
    p_run.add_argument("dataset", type=Path, help="JSONL dataset file")
    _add_common_options(p_run)
    p_run.add_argument("--mode", choices=harness.MODES, default="crag")
    p_run.add_argument(
        "--degrade-p", type=float, default=None, help="relevant-doc removal probability"
    )
    p_run.add_argument("--seed", type=int, default=0, help="degradation seed")
    p_run.add_argument("--report", type=Path, default=Path("report.json"))
    p_run.add_argument("--csv", type=Path, default=None, help="append a summary row")
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument(
        "--disable-action", choices=[a.value for a in Action], default=None
    )
    p_run.add_argument("--only-action", choices=[a.value for a in Action], default=None)
    p_run.add_argument("--no-refinement", action="store_true")
    p_run.add_argument("--no-rewriting", action="store_true")
    p_run.add_argument("--no-selection", action="store_true")

    p_mock = sub.add_parser("mock-serve", help="serve fixture-backed mock endpoints")
    _add_common_options(p_mock)
    p_mock.add_argument("--host", default="127.0.0.1")
    p_mock.add_argument("--port", type=int, default=8080)
    p_mock.add_argument(
        "--fixtures", type=Path, default=None, help="fixtures directory (default: bundled)"
    )

    return parser


def _load_docs_jsonl(path: Path) -> list[Document]:
    if not path.exists():
        raise InputError(f"docs file not found: {path}")
    docs = []
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except ValueError as exc:
                raise InputError(f"line {line_no}: invalid JSON: {exc}") from exc
            if not isinstance(payload, dict) or "text" not in payload:
                raise InputError(f"line {line_no}: document needs a 'text' field")
            docs.append(
                Document(
                    id=str(payload.get("id", f"doc{line_no}")),
                    text=payload["text"],
                    title=payload.get("title"),
                )
            )
    if not docs:
        raise InputError(f"no documents in {path}")
    return docs


def cmd_judge(args: argparse.Namespace) -> int:
    cfg = config_mod.load_config(args.config, args.overrides)
    if args.offline:
        _check_offline(cfg)
    docs = _load_docs_jsonl(args.docs_file)
    scorer = build_scorer(cfg.scorer)
    scores = scorer.score_batch(Query(args.question), docs)
    judgment = judge(scores, cfg.thresholds)
    print(
        json.dumps(
            {
                "action": judgment.action.value,
                "max_score": judgment.max_score,
                "scores": list(judgment.scores),
            }
        )
    )
    return 0


def _ablation_overrides(args: argparse.Namespace) -> list[str]:
    pairs = []
    if args.disable_action:
        pairs.append(f"ablations.disable_action={args.disable_action}")
    if args.only_action:
        pairs.append(f"ablations.only_action={args.only_action}")
    for flag in ("no_refinement", "no_rewriting", "no_selection"):
        if getattr(args, flag):
            pairs.append(f"ablations.{flag}=true")
    return pairs


def cmd_run(args: argparse.Namespace) -> int:
    overrides = list(args.overrides) + _ablation_overrides(args)
    cfg = config_mod.load_config(args.config, overrides)
    if args.offline:
        _check_offline(cfg)

    instances = harness.load_dataset(args.dataset)
    scorer = build_scorer(cfg.scorer)
    search_client = None
    if cfg.search.endpoint:
        search_client = HttpSearchClient(
            cfg.search.endpoint, timeout=cfg.search.timeout, retries=cfg.search.retries
        )
    rewriter = (
        RemoteRewriter(cfg.rewriter_endpoint, timeout=cfg.generator_timeout)
        if cfg.rewriter_endpoint
        else KeywordRewriter()
    )
    generator = (
        RemoteGenerator(
            cfg.generator_endpoint,
            timeout=cfg.generator_timeout,
            retries=cfg.generator_retries,
            max_tokens=cfg.generator_max_tokens,
        )
        if cfg.generator_endpoint
        else StubGenerator()
    )
    fetch_transport = OfflineGuardTransport() if args.offline else None
    degradation = None if args.degrade_p is None else (args.degrade_p, args.seed)

    report = harness.run_experiment(
        instances,
        cfg,
        args.mode,
        degradation,
        scorer=scorer,
        search_client=search_client,
        rewriter=rewriter,
        generator=generator,
        fetch_transport=fetch_transport,
        workers=args.workers,
    )

    args.report.parent.mkdir(parents=True, exist_ok=True)
    args.report.write_text(json.dumps(report.to_dict(), indent=2) + "\n", "utf-8")
    if args.csv is not None:
        _append_csv(args.csv, harness.csv_row(report))
    logger.info(
        "mode=%s p=%.2f accuracy=%.3f actions=%s",
        report.mode,
        report.degradation_level,
        report.accuracy,
        report.action_histogram,
    )
    print(args.report)
    return 0


def _append_csv(path: Path, row: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    new_file = not path.exists()
    with path.open("a", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(row))
        if new_file:
            writer.writeheader()
        writer.writerow(row)


def default_fixtures_dir() -> Path:
    """The fixtures bundled inside the package."""
    return Path(__file__).resolve().parent / "fixtures"


def cmd_mock_serve(args: argparse.Namespace) -> int:
    fixtures = args.fixtures if args.fixtures is not None else default_fixtures_dir()
    if not Path(fixtures).is_dir():
        raise InputError(f"fixtures directory not found: {fixtures}")
    try:
        service = MockService(fixtures, host=args.host, port=args.port)
    except OSError as exc:
        raise RemoteError(f"cannot bind {args.host}:{args.port}: {exc}") from exc
    print(service.base_url, flush=True)
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=_LOG_LEVELS[args.log_level], format="%(levelname)s %(name)s: %(message)s")
    handlers = {"judge": cmd_judge, "run": cmd_run, "mock-serve": cmd_mock_serve}
    try:
        return handlers[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RemoteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
