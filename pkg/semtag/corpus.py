#!/usr/bin/env python3
"""
Corpus Store - Ingestion, Output Tree, Run Ledger and Model Reports

Reads a directory of UTF-8 text documents, writes every candidate and the
selected output per document, appends one JSON line per run to an
append-only ledger, and aggregates the ledger into per-model reports.

Output tree:
    cleaned/<doc_id>.txt
    tagged/<doc_id>.xml
    candidates/<doc_id>/<task>.<model>.<run_index>.txt
    ledger.jsonl
    report.txt, report.csv
"""

import asyncio
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, List, Literal, Optional, Set, Tuple, Union

import aiofiles
import orjson
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, ValidationError

from semtag import __version__
from semtag.errors import CorpusError, DuplicateLedgerKeyError, StorageError
from semtag.pipeline import RunRecord
from semtag.prompts import TaskKind

LEDGER_NAME = "ledger.jsonl"
REPORT_TEXT_NAME = "report.txt"
REPORT_CSV_NAME = "report.csv"

SELECTED_LOCATIONS = {
    TaskKind.CLEAN: ("cleaned", ".txt"),
    TaskKind.TAG: ("tagged", ".xml"),
}


# ===== INGESTION =====

@dataclass(frozen=True)
class Document:
    """One source text file"""
    doc_id: str
    raw_text: str
    source_path: Path
    replacements: int = 0


class CorpusReader:
    """
    Loads `*.txt` files of one directory as Documents.

    Empty files and unreadable files are skipped and counted.
    """

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)
        self.skipped_empty = 0
        self.unreadable = 0

    def ingest(self) -> List[Document]:
        """
        Read every document, sorted by doc_id.

        Returns:
            List of Document

        Raises:
            CorpusError: the directory is missing or cannot be listed
        """
        if not self.directory.is_dir():
            raise CorpusError(f"input directory not found: {self.directory}")
        try:
            paths = sorted(self.directory.glob("*.txt"), key=lambda p: p.stem)
        except OSError as exc:
            raise CorpusError(f"cannot list {self.directory}: {exc}") from exc

        documents = []
        for path in paths:
            document = self._read(path)
            if document is not None:
                documents.append(document)

        if self.skipped_empty:
            logger.warning("Skipped {} empty file(s) in {}", self.skipped_empty, self.directory)
        if self.unreadable:
            logger.warning("Skipped {} unreadable file(s) in {}", self.unreadable, self.directory)
        logger.info("Ingested {} document(s) from {}", len(documents), self.directory)
        return documents

    def _read(self, path: Path) -> Optional[Document]:
        try:
            data = path.read_bytes()
        except OSError as exc:
            logger.error("Cannot read {}: {}", path, exc)
            self.unreadable += 1
            return None

        if not data:
            self.skipped_empty += 1
            return None

        replacements = 0
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError:
            text = data.decode("utf-8", errors="replace")
            replacements = text.count("�")
            logger.warning("{}: replaced {} invalid UTF-8 sequence(s)", path.name, replacements)

        return Document(doc_id=path.stem, raw_text=text, source_path=path, replacements=replacements)


def ingest(directory: Union[str, Path]) -> List[Document]:
    return CorpusReader(directory).ingest()


# ===== LEDGER =====

class LedgerEntry(BaseModel):
    """One ledger line: a RunRecord plus timestamp and pipeline version"""
    model_config = ConfigDict(extra="forbid")

    doc_id: str
    task: Literal["clean", "tag"]
    model: str
    run_index: int
    temperature: float
    max_tokens: int
    prompt_tokens: int
    completion_tokens: int
    latency_ms: float
    cost_usd: float
    cpr: Optional[float] = None
    twf: Optional[float] = None
    n_tags: Optional[Union[int, float]] = None
    selected: bool = False
    failure: Optional[str] = None
    output_path: Optional[str] = None
    timestamp: str
    version: str

    @property
    def key(self) -> Tuple[str, str, str, int]:
        return (self.doc_id, self.task, self.model, self.run_index)

    @classmethod
    def from_record(cls, record: RunRecord, timestamp: str, version: str = __version__) -> "LedgerEntry":
        metrics = record.metrics
        return cls(
            doc_id=record.doc_id,
            task=record.task.value,
            model=record.model,
            run_index=record.run_index,
            temperature=record.temperature,
            max_tokens=record.max_tokens,
            prompt_tokens=record.usage.prompt_tokens,
            completion_tokens=record.usage.completion_tokens,
            latency_ms=record.latency_ms,
            cost_usd=record.cost,
            cpr=metrics.cpr if metrics else None,
            twf=metrics.twf if metrics else None,
            n_tags=metrics.n_tags if metrics else None,
            selected=record.selected,
            failure=record.failure,
            output_path=record.output_path,
            timestamp=timestamp,
            version=version,
        )

    def to_line(self) -> bytes:
        return orjson.dumps(self.model_dump()) + b"\n"

    @classmethod
    def from_line(cls, line: Union[str, bytes]) -> "LedgerEntry":
        return cls.model_validate(orjson.loads(line))


def read_ledger(path: Union[str, Path]) -> Tuple[List[LedgerEntry], int]:
    """
    Parse a ledger file.

    Returns:
        (entries in file order, number of corrupt lines skipped)

    Raises:
        StorageError: the ledger does not exist or cannot be read
    """
    path = Path(path)
    if not path.is_file():
        raise StorageError(f"ledger not found: {path}")
    try:
        lines = path.read_bytes().splitlines()
    except OSError as exc:
        raise StorageError(f"cannot read ledger {path}: {exc}") from exc

    entries: List[LedgerEntry] = []
    corrupt = 0
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            entries.append(LedgerEntry.from_line(line))
        except (orjson.JSONDecodeError, ValidationError) as exc:
            corrupt += 1
            logger.warning("{}:{}: skipping corrupt ledger line ({})", path.name, number,
                           type(exc).__name__)
    return entries, corrupt


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


class CorpusStore:
    """
    Owns the output tree and the append-only ledger.

    Ledger appends go through a single lock; output files of distinct
    documents may be written concurrently.
    """

    def __init__(self,
                 output_dir: Union[str, Path],
                 winners_only: bool = False,
                 clock: Callable[[], str] = _utc_now):
        self.output_dir = Path(output_dir)
        self.winners_only = winners_only
        self.clock = clock
        self.ledger_path = self.output_dir / LEDGER_NAME
        self._ledger_lock = asyncio.Lock()
        self._keys: Optional[Set[Tuple[str, str, str, int]]] = None
        self._selected: Set[Tuple[str, str]] = set()

    # ----- paths -----

    def selected_path(self, doc_id: str, task: TaskKind) -> Path:
        folder, suffix = SELECTED_LOCATIONS[task]
        return self.output_dir / folder / f"{doc_id}{suffix}"

    def candidate_path(self, record: RunRecord) -> Path:
        return (self.output_dir / "candidates" / record.doc_id
                / f"{record.task.value}.{record.model}.{record.run_index}.txt")

    def _relative(self, path: Path) -> str:
        return path.relative_to(self.output_dir).as_posix()

    # ----- ledger keys -----

    def _known_keys(self) -> Set[Tuple[str, str, str, int]]:
        if self._keys is None:
            self._keys = set()
            if self.ledger_path.is_file():
                entries, _ = read_ledger(self.ledger_path)
                self._keys = {entry.key for entry in entries}
                self._selected = {(entry.doc_id, entry.task) for entry in entries if entry.selected}
        return self._keys

    def has_entries(self, doc_id: str, task: TaskKind) -> bool:
        """True when the ledger already holds any run of (doc_id, task)"""
        return any(key[0] == doc_id and key[1] == task.value for key in self._known_keys())

    def has_selection(self, doc_id: str, task: TaskKind) -> bool:
        """True when the ledger holds the selected run of (doc_id, task)"""
        self._known_keys()
        return (doc_id, task.value) in self._selected

    # ----- writes -----

    async def _write_text(self, path: Path, text: str) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        async with aiofiles.open(path, "w", encoding="utf-8", newline="") as handle:
            await handle.write(text)

    async def append(self, entry: LedgerEntry) -> None:
        """Append one ledger line, refusing keys that are already present"""
        async with self._ledger_lock:
            keys = self._known_keys()
            if entry.key in keys:
                raise DuplicateLedgerKeyError(entry.key)
            try:
                self.output_dir.mkdir(parents=True, exist_ok=True)
                async with aiofiles.open(self.ledger_path, "ab") as handle:
                    await handle.write(entry.to_line())
            except OSError as exc:
                raise StorageError(f"cannot append to {self.ledger_path}: {exc}") from exc
            keys.add(entry.key)
            if entry.selected:
                self._selected.add((entry.doc_id, entry.task))

    def _check_new(self, records: List[RunRecord]) -> None:
        keys = self._known_keys()
        for record in records:
            if record.key in keys:
                raise DuplicateLedgerKeyError(record.key)

    async def _store_outputs(self, record: RunRecord, text: Optional[str]) -> List[Path]:
        written: List[Path] = []
        record.output_path = None
        if record.failed or text is None:
            return written

        try:
            if not self.winners_only:
                candidate = self.candidate_path(record)
                await self._write_text(candidate, text)
                written.append(candidate)
                record.output_path = self._relative(candidate)
            if record.selected:
                final = self.selected_path(record.doc_id, record.task)
                await self._write_text(final, text)
                written.append(final)
                record.output_path = self._relative(final)
        except OSError as exc:
            raise StorageError(f"cannot store output for {record.key}: {exc}") from exc
        return written

    async def persist(self, record: RunRecord, output_text: Optional[str] = None) -> List[Path]:
        """
        Store one scored record: its output files and its ledger line.

        Args:
            record: Scored (or failed) RunRecord
            output_text: Text to store; defaults to record.output_text

        Returns:
            Paths of the files written (ledger excluded)

        Raises:
            DuplicateLedgerKeyError: the record's key is already in the ledger
            StorageError: a file could not be written
        """
        self._check_new([record])
        text = output_text if output_text is not None else record.output_text
        written = await self._store_outputs(record, text)
        await self.append(LedgerEntry.from_record(record, timestamp=self.clock()))
        return written

    async def persist_all(self, records: List[RunRecord]) -> List[Path]:
        """
        Store every record of one document.

        All output files are written before the first ledger line, so a
        failed write leaves no ledger entry for the document.
        """
        self._check_new(records)
        written: List[Path] = []
        for record in records:
            written.extend(await self._store_outputs(record, record.output_text))
        for record in records:
            await self.append(LedgerEntry.from_record(record, timestamp=self.clock()))
        return written


# ===== REPORTING =====

REPORT_COLUMNS = [
    "task", "model", "runs", "failures", "mean_cpr", "mean_twf", "mean_n_tags",
    "mean_cost_usd", "mean_latency_ms", "cost_ratio",
]

NUMERIC_COLUMNS = ["cpr", "twf", "n_tags", "cost_usd", "latency_ms"]


def _fmt(digits: int) -> Callable[[Optional[float]], str]:
    def render(value: Optional[float]) -> str:
        if value is None or math.isnan(value):
            return "-"
        return f"{value:.{digits}f}"
    return render


TEXT_FORMATTERS = {
    "mean_cpr": _fmt(4),
    "mean_twf": _fmt(4),
    "mean_n_tags": _fmt(2),
    "mean_cost_usd": _fmt(6),
    "mean_latency_ms": _fmt(1),
    "cost_ratio": _fmt(4),
}


@dataclass
class ModelRow:
    """Aggregates of one model on one task; means exclude failed runs"""
    task: str
    model: str
    runs: int
    failures: int
    mean_cpr: Optional[float]
    mean_twf: Optional[float]
    mean_n_tags: Optional[float]
    mean_cost_usd: Optional[float]
    mean_latency_ms: Optional[float]
    cost_ratio: Optional[float]


@dataclass
class ModelReport:
    """Per-model comparison table"""
    rows: List[ModelRow] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([vars(row) for row in self.rows], columns=REPORT_COLUMNS)

    def to_text(self) -> str:
        if not self.rows:
            return "  ".join(REPORT_COLUMNS) + "\n"
        return self.to_frame().to_string(index=False, formatters=TEXT_FORMATTERS) + "\n"

    def to_csv(self) -> str:
        return self.to_frame().to_csv(index=False, float_format="%.6f", na_rep="", lineterminator="\n")

    def to_records(self) -> List[Dict]:
        return [vars(row) for row in self.rows]


def _optional(value) -> Optional[float]:
    return None if pd.isna(value) else float(value)


def report(entries: List[LedgerEntry]) -> ModelReport:
    """
    Aggregate ledger entries per (task, model).

    Means are arithmetic over non-failed runs across documents and runs;
    `runs` counts every attempt and `failures` the failed ones. Rows sort by
    task, then mean cpr descending, then model name. `cost_ratio` relates
    each row's mean cost to the top row of its task.

    Args:
        entries: Parsed ledger entries

    Returns:
        ModelReport
    """
    if not entries:
        return ModelReport()

    frame = pd.DataFrame([entry.model_dump() for entry in entries])
    for column in NUMERIC_COLUMNS:
        frame[column] = pd.to_numeric(frame[column], errors="coerce")
    frame["failed"] = frame["failure"].notna()
    # failed runs still count as runs but never enter a mean
    frame.loc[frame["failed"], NUMERIC_COLUMNS] = float("nan")

    table = frame.groupby(["task", "model"]).agg(
        runs=("failed", "size"),
        failures=("failed", "sum"),
        mean_cpr=("cpr", "mean"),
        mean_twf=("twf", "mean"),
        mean_n_tags=("n_tags", "mean"),
        mean_cost_usd=("cost_usd", "mean"),
        mean_latency_ms=("latency_ms", "mean"),
    ).reset_index()
    table = table.sort_values(["task", "mean_cpr", "model"], ascending=[True, False, True],
                              na_position="last", kind="mergesort")

    top_cost = table.groupby("task")["mean_cost_usd"].transform(lambda costs: costs.iloc[0])
    table["cost_ratio"] = (table["mean_cost_usd"] / top_cost).where(top_cost > 0)

    rows = [
        ModelRow(
            task=item.task,
            model=item.model,
            runs=int(item.runs),
            failures=int(item.failures),
            mean_cpr=_optional(item.mean_cpr),
            mean_twf=_optional(item.mean_twf),
            mean_n_tags=_optional(item.mean_n_tags),
            mean_cost_usd=_optional(item.mean_cost_usd),
            mean_latency_ms=_optional(item.mean_latency_ms),
            cost_ratio=_optional(item.cost_ratio),
        )
        for item in table.itertuples(index=False)
    ]
    return ModelReport(rows=rows)


def write_report(model_report: ModelReport, directory: Union[str, Path]) -> Tuple[Path, Path]:
    """Write report.txt and report.csv into `directory`"""
    directory = Path(directory)
    text_path, csv_path = directory / REPORT_TEXT_NAME, directory / REPORT_CSV_NAME
    try:
        directory.mkdir(parents=True, exist_ok=True)
        text_path.write_text(model_report.to_text(), encoding="utf-8")
        csv_path.write_text(model_report.to_csv(), encoding="utf-8", newline="")
    except OSError as exc:
        raise StorageError(f"cannot write report to {directory}: {exc}") from exc
    return text_path, csv_path
