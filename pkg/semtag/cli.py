#!/usr/bin/env python3
"""
semtag command line

Core Function: bind configuration, corpus ingestion, the ensemble pipeline
and reporting into the `clean`, `tag`, `score`, `report` and `validate`
commands.

Exit codes: 0 success, 1 partial failure, 2 usage or configuration error.
"""

import argparse
import asyncio
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import orjson
from dotenv import load_dotenv
from loguru import logger

from semtag import __version__
from semtag.config import Config, load_config
from semtag.corpus import CorpusReader, CorpusStore, read_ledger, report, write_report
from semtag.errors import (
    AllRunsFailedError, ConfigError, CorpusError, EmptyPromptError, ProviderError, StorageError,
)
from semtag.pipeline import EnsembleRunner, Task, score
from semtag.prompts import TaskKind
from semtag.providers import CompletionBackend, create_backend
from semtag.tagparser import audit, n_tags, tokenize, twf

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2

LOG_LEVEL_ENV = "SEMTAG_LOG_LEVEL"
RULE = "=" * 60


def configure_logging(level: Optional[str] = None) -> None:
    """One stderr sink; stdout is reserved for command results"""
    logger.remove()
    logger.add(
        sys.stderr,
        level=(level or os.getenv(LOG_LEVEL_ENV, "INFO")).upper(),
        format="<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {name}: {message}",
    )


def emit_json(payload: Any) -> None:
    sys.stdout.write(orjson.dumps(payload, option=orjson.OPT_INDENT_2).decode("utf-8") + "\n")


def task_for(kind: TaskKind, config: Config) -> Task:
    return Task.clean() if kind is TaskKind.CLEAN else Task.tag(config.vocabulary())


# ===== CLEAN / TAG =====

async def run_corpus_task(kind: TaskKind,
                          input_dir: Path,
                          output_dir: Path,
                          config: Config,
                          backend: Optional[CompletionBackend] = None) -> Dict[str, Any]:
    """
    Run one task over every document of `input_dir`.

    Documents are processed one at a time in doc_id order; completions within
    a document run concurrently. A document whose selected run is already in
    the ledger is skipped; one with ledgered runs but no selection is
    reported as failed.

    Args:
        kind: Clean or Tag
        input_dir: Directory of `*.txt` documents
        output_dir: Root of the output tree
        config: Validated configuration
        backend: Completion backend; built from the config when omitted

    Returns:
        Summary with selected, skipped and failed documents
    """
    documents = CorpusReader(input_dir).ingest()
    store = CorpusStore(output_dir, winners_only=config.winners_only)
    task = task_for(kind, config)
    roster = config.model_specs()

    summary: Dict[str, Any] = {
        "task": kind.value,
        "documents": len(documents),
        "selected": [],
        "skipped": [],
        "failed": [],
    }
    if not documents:
        return summary

    owns_backend = backend is None
    backend = backend or create_backend(config)
    runner = EnsembleRunner(backend, config.temperature, config.max_tokens, config.parallelism)

    try:
        for doc in documents:
            if store.has_selection(doc.doc_id, kind):
                logger.warning("{}: {} already in ledger, skipping", doc.doc_id, kind.value)
                summary["skipped"].append(doc.doc_id)
                continue
            if store.has_entries(doc.doc_id, kind):
                # earlier runs are ledgered without a winner; their keys block a rerun
                error = f"{kind.value} runs already ledgered without a selected output"
                logger.error("{}: {}", doc.doc_id, error)
                summary["failed"].append({"doc_id": doc.doc_id, "error": error})
                continue

            try:
                records = await runner.run_task(doc, task, roster, config.runs_per_model)
            except AllRunsFailedError as exc:
                logger.error("{}", exc)
                summary["failed"].append({"doc_id": doc.doc_id, "error": str(exc)})
                try:
                    await store.persist_all(exc.records)
                except StorageError as storage_exc:
                    logger.error("{}: {}", doc.doc_id, storage_exc)
                continue
            except EmptyPromptError as exc:
                logger.error("{}: {}", doc.doc_id, exc)
                summary["failed"].append({"doc_id": doc.doc_id, "error": str(exc)})
                continue

            try:
                await store.persist_all(records)
            except StorageError as exc:
                logger.error("{}: {}", doc.doc_id, exc)
                summary["failed"].append({"doc_id": doc.doc_id, "error": str(exc)})
                continue

            winner = next(record for record in records if record.selected)
            summary["selected"].append({
                "doc_id": doc.doc_id,
                "model": winner.model,
                "run_index": winner.run_index,
                "cpr": winner.metrics.cpr,
                "twf": winner.metrics.twf,
                "n_tags": winner.metrics.n_tags,
                "output_path": winner.output_path,
            })
    finally:
        if owns_backend:
            await backend.aclose()

    return summary


def print_task_summary(summary: Dict[str, Any]) -> None:
    icon = "🧹" if summary["task"] == TaskKind.CLEAN.value else "🏷️ "
    print(f"{icon} {summary['task']}: {summary['documents']} documents")
    for item in summary["selected"]:
        line = f"  ✅ {item['doc_id']}: {item['model']} run {item['run_index']} cpr={item['cpr']:.4f}"
        if item["twf"] is not None:
            line += f" twf={item['twf']:.4f} tags={item['n_tags']}"
        print(line)
    for doc_id in summary["skipped"]:
        print(f"  ⏭️  {doc_id}: already in ledger")
    for item in summary["failed"]:
        print(f"  ❌ {item['doc_id']}: {item['error']}")

    if summary["documents"]:
        print(RULE)
        print(f"Selected: {len(summary['selected'])}  "
              f"Skipped: {len(summary['skipped'])}  Failed: {len(summary['failed'])}")


def cmd_task(kind: TaskKind, args: argparse.Namespace, config: Config) -> int:
    summary = asyncio.run(run_corpus_task(kind, Path(args.input_dir), Path(args.output_dir), config))
    if args.json:
        emit_json(summary)
    else:
        print_task_summary(summary)
    return EXIT_PARTIAL if summary["failed"] else EXIT_OK


# ===== SCORE =====

def _read_text(path: Path) -> str:
    return path.read_bytes().decode("utf-8", errors="replace")


def cmd_score(args: argparse.Namespace, config: Config) -> int:
    kind = TaskKind(args.task)
    try:
        input_text = _read_text(Path(args.input_file))
        output_text = _read_text(Path(args.output_file))
    except OSError as exc:
        logger.error("cannot read input: {}", exc)
        return EXIT_USAGE

    metrics = score(task_for(kind, config), input_text, output_text)
    result = {"task": kind.value, "cpr": metrics.cpr, "twf": metrics.twf, "n_tags": metrics.n_tags}

    if args.json:
        emit_json(result)
    else:
        print(f"📏 cpr    {metrics.cpr:.4f}")
        if kind is TaskKind.TAG:
            print(f"🏷️  twf    {metrics.twf:.4f}")
            print(f"🔢 n_tags {metrics.n_tags}")
    return EXIT_OK


# ===== REPORT =====

def cmd_report(args: argparse.Namespace, config: Config) -> int:
    ledger_path = Path(args.ledger)
    entries, corrupt = read_ledger(ledger_path)
    model_report = report(entries)
    text_path, csv_path = write_report(model_report, ledger_path.parent)

    if args.json:
        emit_json({
            "entries": len(entries),
            "corrupt_lines": corrupt,
            "rows": model_report.to_records(),
            "report_txt": str(text_path),
            "report_csv": str(csv_path),
        })
    else:
        print(model_report.to_text(), end="")
        print(RULE)
        print(f"📊 {len(entries)} ledger entries, {corrupt} corrupt line(s) skipped")
        print(f"📝 {text_path}")
        print(f"📝 {csv_path}")
    return EXIT_OK


# ===== VALIDATE =====

def validate_directory(tagged_dir: Path, config: Config) -> Dict[str, Any]:
    """Audit every `*.xml` file of a tagged directory"""
    if not tagged_dir.is_dir():
        raise CorpusError(f"tagged directory not found: {tagged_dir}")

    vocab = config.vocabulary()
    files: List[Dict[str, Any]] = []
    unreadable: List[str] = []

    for path in sorted(tagged_dir.glob("*.xml")):
        try:
            text = path.read_bytes().decode("utf-8", errors="replace")
        except OSError as exc:
            logger.error("Cannot read {}: {}", path, exc)
            unreadable.append(path.name)
            continue

        result = audit(tokenize(text, vocab))
        files.append({
            "file": path.name,
            "twf": twf(result),
            "n_tags": n_tags(result),
            "n_malformed": result.n_malformed,
            "problems": [
                {"kind": problem.kind.value, "tag": problem.tag, "offset": problem.offset}
                for problem in result.problems
            ],
        })

    return {
        "files": files,
        "unreadable": unreadable,
        "malformed_files": [item["file"] for item in files if item["twf"] < 1.0],
    }


def cmd_validate(args: argparse.Namespace, config: Config) -> int:
    outcome = validate_directory(Path(args.tagged_dir), config)

    if args.json:
        emit_json(outcome)
    else:
        print(f"🔍 {len(outcome['files'])} files")
        for item in outcome["files"]:
            mark = "✅" if item["twf"] == 1.0 else "❌"
            line = f"  {mark} {item['file']}: twf={item['twf']:.4f} tags={item['n_tags']}"
            if item["problems"]:
                first = item["problems"][0]
                line += f" ({first['kind']} <{first['tag']}> at offset {first['offset']})"
            print(line)
        for name in outcome["unreadable"]:
            print(f"  ⚠️  {name}: unreadable")
        print(RULE)
        print(f"Well-formed: {len(outcome['files']) - len(outcome['malformed_files'])}  "
              f"Malformed: {len(outcome['malformed_files'])}  Unreadable: {len(outcome['unreadable'])}")

    if outcome["malformed_files"] or outcome["unreadable"]:
        return EXIT_PARTIAL
    return EXIT_OK


# ===== ENTRY POINT =====

def global_options(suppress_defaults: bool = False) -> argparse.ArgumentParser:
    """
    Flags accepted before or after the sub-command.

    The sub-command copy suppresses defaults so it never overwrites a value
    given before the sub-command.
    """
    default = argparse.SUPPRESS if suppress_defaults else None
    flag_default = argparse.SUPPRESS if suppress_defaults else False

    options = argparse.ArgumentParser(add_help=False)
    options.add_argument("--config", type=Path, default=default, help="JSON configuration file")
    options.add_argument("--backend", choices=["live", "mock", "replay", "record"], default=default,
                         help="Completion backend (overrides the config file)")
    options.add_argument("--parallelism", type=int, default=default, help="Maximum completions in flight")
    options.add_argument("--runs", type=int, default=default, help="Runs per model")
    options.add_argument("--winners-only", action="store_true", default=flag_default,
                         help="Store only selected outputs, no candidates/ tree")
    options.add_argument("--json", action="store_true", default=flag_default,
                         help="Print machine-readable JSON on stdout")
    return options


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semtag",
        description="Clean and semantically tag OCR documents with a model ensemble",
        parents=[global_options()],
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    commands = parser.add_subparsers(dest="command", required=True)
    shared = [global_options(suppress_defaults=True)]

    clean = commands.add_parser("clean", parents=shared, help="Clean every document of a directory")
    clean.add_argument("input_dir", help="Directory of .txt documents")
    clean.add_argument("output_dir", help="Output tree root")

    tag = commands.add_parser("tag", parents=shared, help="Tag every cleaned document of a directory")
    tag.add_argument("input_dir", help="Directory of cleaned .txt documents (usually <output_dir>/cleaned)")
    tag.add_argument("output_dir", help="Output tree root")

    score_cmd = commands.add_parser("score", parents=shared, help="Score one output file against its input")
    score_cmd.add_argument("task", choices=[kind.value for kind in TaskKind])
    score_cmd.add_argument("input_file")
    score_cmd.add_argument("output_file")

    report_cmd = commands.add_parser("report", parents=shared,
                                     help="Aggregate a ledger into report.txt and report.csv")
    report_cmd.add_argument("ledger", help="Path to ledger.jsonl")

    validate = commands.add_parser("validate", parents=shared, help="Check tag well-formedness of tagged files")
    validate.add_argument("tagged_dir", help="Directory of .xml files")

    return parser


def resolve_config(args: argparse.Namespace) -> Config:
    """Defaults < config file < command-line flags"""
    config = load_config(args.config)
    return config.with_overrides(
        backend=args.backend,
        parallelism=args.parallelism,
        runs_per_model=args.runs,
        winners_only=True if args.winners_only else None,
    )


COMMANDS = {
    "clean": lambda args, config: cmd_task(TaskKind.CLEAN, args, config),
    "tag": lambda args, config: cmd_task(TaskKind.TAG, args, config),
    "score": cmd_score,
    "report": cmd_report,
    "validate": cmd_validate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    load_dotenv()
    configure_logging()

    try:
        config = resolve_config(args)
        return COMMANDS[args.command](args, config)
    except (ConfigError, CorpusError) as exc:
        logger.error("{}", exc)
        return EXIT_USAGE
    except ProviderError as exc:
        # raised before any document ran, e.g. a missing API key
        logger.error("{}", exc)
        return EXIT_USAGE
    except StorageError as exc:
        logger.error("{}", exc)
        return EXIT_USAGE if args.command == "report" else EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
