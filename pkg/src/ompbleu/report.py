"""Batch evaluation: dataset ingestion, candidate ranking, report assembly.

Reports are deterministic: records are merged in id order and no
timestamps are embedded, so identical inputs and configuration produce
byte-identical canonical JSON.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .classify import (
    ClassificationReport,
    ClauseVocabulary,
    aggregate,
    classification_report,
    clause_confusion,
)
from .config import EvalConfig
from .metrics import ScoreBreakdown, analyze, ompbleu_score

SUBSCORE_KEYS = ("wc", "vu", "is", "or", "rc", "cc", "pl", "compile")


@dataclass(frozen=True)
class DatasetRecord:
    """One reference with one or more candidate parallelizations."""

    id: str
    reference: str
    candidates: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.candidates:
            raise ValueError(f"record {self.id!r} has no candidates")


@dataclass
class RankedCandidate:
    candidate_index: int
    rank: int
    breakdown: ScoreBreakdown | None
    error: str | None = None

    def as_dict(self) -> dict:
        return {
            "candidate_index": self.candidate_index,
            "rank": self.rank,
            "breakdown": self.breakdown.as_dict() if self.breakdown else None,
            "error": self.error,
        }


class DatasetError(ValueError):
    """The dataset itself is unusable (empty or unreadable)."""


def load_jsonl(path: str | Path) -> tuple[list[DatasetRecord], list[str]]:
    """Records from JSONL lines of {id, reference, candidates:[...]}."""
    records: list[DatasetRecord] = []
    errors: list[str] = []
    seen: set[str] = set()
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise DatasetError(f"cannot read dataset {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
            rec_id = str(raw["id"])
            reference = raw["reference"]
            candidates = raw["candidates"]
            if not isinstance(reference, str) or not isinstance(candidates, list):
                raise TypeError("reference must be a string, candidates a list")
            if rec_id in seen:
                raise ValueError(f"duplicate record id {rec_id!r}")
            record = DatasetRecord(
                id=rec_id,
                reference=reference,
                candidates=tuple(str(c) for c in candidates),
            )
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"line {lineno}: skipped malformed record ({exc})")
            continue
        seen.add(rec_id)
        records.append(record)
    return records, errors


def load_paired_dirs(path: str | Path) -> tuple[list[DatasetRecord], list[str]]:
    """Records from ref/ and gen/ subdirectories matched by filename."""
    root = Path(path)
    ref_dir, gen_dir = root / "ref", root / "gen"
    if not ref_dir.is_dir() or not gen_dir.is_dir():
        raise DatasetError(f"{path} must contain ref/ and gen/ directories")
    records: list[DatasetRecord] = []
    errors: list[str] = []
    for ref_file in sorted(ref_dir.iterdir()):
        if not ref_file.is_file():
            continue
        gen_file = gen_dir / ref_file.name
        if not gen_file.is_file():
            errors.append(f"{ref_file.name}: no matching file under gen/")
            continue
        records.append(
            DatasetRecord(
                id=ref_file.name,
                reference=ref_file.read_text(),
                candidates=(gen_file.read_text(),),
            )
        )
    return records, errors


def load_dataset(path: str | Path, fmt: str) -> tuple[list[DatasetRecord], list[str]]:
    if fmt == "jsonl":
        return load_jsonl(path)
    if fmt == "dirs":
        return load_paired_dirs(path)
    raise DatasetError(f"unknown dataset format: {fmt!r}")


def rank_candidates(record: DatasetRecord, config: EvalConfig) -> list[RankedCandidate]:
    """Score every candidate and rank by composite, best first.

    Ties break toward the earlier candidate; a candidate that fails hard is
    ranked after every scored one with the error recorded, never dropped.
    """
    scored: list[RankedCandidate] = []
    for idx, candidate in enumerate(record.candidates):
        try:
            breakdown = ompbleu_score(record.reference, candidate, config)
            scored.append(RankedCandidate(candidate_index=idx, rank=0, breakdown=breakdown))
        except Exception as exc:  # noqa: BLE001 - candidate faults must not abort the run
            scored.append(
                RankedCandidate(candidate_index=idx, rank=0, breakdown=None, error=str(exc))
            )
    scored.sort(
        key=lambda rc: (
            -(rc.breakdown.composite if rc.breakdown else float("-inf")),
            rc.candidate_index,
        )
    )
    for pos, rc in enumerate(scored, 1):
        rc.rank = pos
    return scored


@dataclass
class Report:
    """Full evaluation output; aggregates are recomputable from the rows."""

    records: list[dict]
    aggregates: dict
    classification: ClassificationReport | None
    errors: list[str]
    config_echo: dict
    version: str = __version__

    def as_dict(self) -> dict:
        return {
            "version": self.version,
            "config": self.config_echo,
            "records": self.records,
            "aggregates": self.aggregates,
            "classification": self.classification.as_dict() if self.classification else None,
            "errors": self.errors,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["id", "best_candidate", "composite", *SUBSCORE_KEYS, "error"])
        for row in self.records:
            b = row.get("breakdown")
            writer.writerow(
                [
                    row["id"],
                    row.get("best_candidate", ""),
                    f"{b['composite']:.6f}" if b else "",
                    *(f"{b[k]:.6f}" if b else "" for k in SUBSCORE_KEYS),
                    row.get("error", "") or "",
                ]
            )
        return buf.getvalue()

    def per_clause_csv(self) -> str:
        """Per-clause F1 as CSV, one row per vocabulary kind."""
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["clause", "f1"])
        if self.classification:
            for kind, value in self.classification.per_clause_f1.items():
                writer.writerow([kind, value if isinstance(value, str) else f"{value:.4f}"])
        return buf.getvalue()

    def to_table(self) -> str:
        headers = ["id", "composite", *SUBSCORE_KEYS]
        rows = []
        for row in self.records:
            b = row.get("breakdown")
            if b:
                rows.append(
                    [row["id"], f"{b['composite']:.2f}"]
                    + [f"{b[k]:.4f}" for k in SUBSCORE_KEYS]
                )
            else:
                rows.append([row["id"], "error"] + [""] * len(SUBSCORE_KEYS))
        agg = self.aggregates.get("mean", {})
        if agg:
            rows.append(
                ["MEAN", f"{agg.get('composite', 0):.2f}"]
                + [f"{agg.get(k, 0):.4f}" for k in SUBSCORE_KEYS]
            )
        widths = [
            max(len(headers[i]), *(len(r[i]) for r in rows)) if rows else len(headers[i])
            for i in range(len(headers))
        ]
        lines = [
            "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
            "  ".join("-" * w for w in widths),
        ]
        lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
        return "\n".join(lines) + "\n"


def _score_record(record: DatasetRecord, config: EvalConfig, vocab: ClauseVocabulary) -> dict:
    ranked = rank_candidates(record, config)
    best = ranked[0]
    row: dict = {
        "id": record.id,
        "candidates": [rc.as_dict() for rc in ranked],
        "best_candidate": best.candidate_index,
    }
    if best.breakdown is None:
        row["error"] = best.error or "all candidates failed"
        return row
    row["breakdown"] = best.breakdown.as_dict()
    try:
        gt_dirs = analyze(record.reference).directives
        gen_dirs = analyze(record.candidates[best.candidate_index]).directives
        row["_confusion"] = clause_confusion(list(gt_dirs), list(gen_dirs), vocab)
    except Exception as exc:  # noqa: BLE001
        row["error"] = f"classification failed: {exc}"
    return row


def evaluate_dataset(
    records: list[DatasetRecord],
    config: EvalConfig,
    jobs: int = 1,
    load_errors: list[str] | None = None,
) -> Report:
    """Score every record (top-1 of its ranking) and aggregate."""
    if not records:
        raise DatasetError("no records in dataset")
    vocab = (
        ClauseVocabulary.load(config.clause_vocabulary_path)
        if config.clause_vocabulary_path
        else ClauseVocabulary.default()
    )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda r: _score_record(r, config, vocab), records))
    else:
        rows = [_score_record(r, config, vocab) for r in records]

    rows.sort(key=lambda r: r["id"])
    errors = list(load_errors or [])
    confusions = []
    scored_rows = []
    for row in rows:
        if "error" in row and "breakdown" not in row:
            errors.append(f"record {row['id']}: {row['error']}")
        if "breakdown" in row:
            scored_rows.append(row)
        conf = row.pop("_confusion", None)
        if conf is not None:
            confusions.append(conf)

    aggregates: dict = {"scored_records": len(scored_rows), "total_records": len(rows)}
    if scored_rows:
        for stat_name, fn in (("mean", statistics.fmean), ("median", statistics.median)):
            aggregates[stat_name] = {
                "composite": fn(r["breakdown"]["composite"] for r in scored_rows),
                **{
                    k: fn(r["breakdown"][k] for r in scored_rows)
                    for k in SUBSCORE_KEYS
                },
            }

    classification = classification_report(aggregate(confusions)) if confusions else None
    return Report(
        records=rows,
        aggregates=aggregates,
        classification=classification,
        errors=errors,
        config_echo=config.echo(),
    )
