"""Collapse per-review records into one row per game and merge with metadata.

Score 0 means "insufficient data" and is excluded from every mean and
percentage; averages therefore live in [1, 5] whenever they exist at all.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import ConflictingIdsError, EmptyDatasetError, EmptyGameError, ParseError
from .ingest import GameMetadata, METADATA_COLUMNS, read_game_metadata_csv
from .quantify import read_quantified_csv
from .schema import DESIGN_ELEMENTS, ReviewScores

logger = logging.getLogger(__name__)

HIGH_SCORE_THRESHOLD = 4  # inclusive

AVERAGES_FILENAME = "Tokenized_Reviews_Averages.csv"
MERGED_FILENAME = "merged_games.csv"

AVERAGES_COLUMNS: tuple[str, ...] = (
    ("game_id", "review_count")
    + tuple(
        col
        for element in DESIGN_ELEMENTS
        for col in (f"{element}_avg", f"{element}_rated_count", f"{element}_high_pct")
    )
    + ("overall_rating", "total_high_pct")
)


@dataclass
class GameElementAverages:
    """Per-game mean score, rated count, and high-rating share per element.

    ``None`` marks an absent statistic (no review rated that element).
    """

    game_id: str
    review_count: int
    avgs: dict[str, float | None] = field(default_factory=dict)
    rated_counts: dict[str, int] = field(default_factory=dict)
    high_pcts: dict[str, float | None] = field(default_factory=dict)
    overall_rating: float | None = None
    total_high_pct: float | None = None

    def present_elements(self) -> list[str]:
        return [e for e in DESIGN_ELEMENTS if self.avgs.get(e) is not None]


@dataclass
class MergedGameRow:
    meta: GameMetadata
    averages: GameElementAverages

    @property
    def game_id(self) -> str:
        return self.meta.game_id


def overall_rating(averages: GameElementAverages) -> float | None:
    """Unweighted mean of the present element averages; None if all absent."""
    present = [averages.avgs[e] for e in averages.present_elements()]
    if not present:
        return None
    return sum(present) / len(present)


def average_elements(game_id: str, scores: Sequence[ReviewScores]) -> GameElementAverages:
    """Average one game's reviews per element, excluding score-0 entries."""
    if not scores:
        raise EmptyGameError(f"game {game_id!r} has no quantified reviews")
    result = GameElementAverages(game_id=game_id, review_count=len(scores))
    for element in DESIGN_ELEMENTS:
        rated = [getattr(s, element) for s in scores if getattr(s, element) >= 1]
        result.rated_counts[element] = len(rated)
        if rated:
            result.avgs[element] = sum(rated) / len(rated)
            high = sum(1 for v in rated if v >= HIGH_SCORE_THRESHOLD)
            result.high_pcts[element] = high / len(rated)
        else:
            result.avgs[element] = None
            result.high_pcts[element] = None
    result.overall_rating = overall_rating(result)
    present_pcts = [p for p in result.high_pcts.values() if p is not None]
    result.total_high_pct = sum(present_pcts) / len(present_pcts) if present_pcts else None
    return result


def merge_metadata_averages(
    metas: Sequence[GameMetadata],
    averages: Sequence[GameElementAverages],
) -> tuple[list[MergedGameRow], list[str], list[str]]:
    """Inner-join metadata with averages on game_id.

    Returns (rows, unmatched metadata ids, unmatched averages ids); rows are
    sorted by game_id. Duplicate ids on either side are an error.
    """
    meta_by_id: dict[str, GameMetadata] = {}
    for meta in metas:
        if meta.game_id in meta_by_id:
            raise ConflictingIdsError(f"duplicate game id {meta.game_id!r} in metadata")
        meta_by_id[meta.game_id] = meta
    avg_by_id: dict[str, GameElementAverages] = {}
    for avg in averages:
        if avg.game_id in avg_by_id:
            raise ConflictingIdsError(f"duplicate game id {avg.game_id!r} in averages")
        avg_by_id[avg.game_id] = avg

    shared = sorted(meta_by_id.keys() & avg_by_id.keys())
    rows = [MergedGameRow(meta_by_id[g], avg_by_id[g]) for g in shared]
    unmatched_meta = sorted(meta_by_id.keys() - avg_by_id.keys())
    unmatched_avgs = sorted(avg_by_id.keys() - meta_by_id.keys())
    for game_id in unmatched_meta:
        logger.info("game %s has metadata but no averages; dropped from merge", game_id)
    for game_id in unmatched_avgs:
        logger.info("game %s has averages but no metadata; dropped from merge", game_id)
    return rows, unmatched_meta, unmatched_avgs


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.4f}"


def _averages_row(avg: GameElementAverages) -> list[str]:
    row: list[str] = [avg.game_id, str(avg.review_count)]
    for element in DESIGN_ELEMENTS:
        row.append(_fmt(avg.avgs[element]))
        row.append(str(avg.rated_counts[element]))
        row.append(_fmt(avg.high_pcts[element]))
    row.append(_fmt(avg.overall_rating))
    row.append(_fmt(avg.total_high_pct))
    return row


def write_averages_csv(path: str | Path, averages: Sequence[GameElementAverages]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(AVERAGES_COLUMNS)
        for avg in sorted(averages, key=lambda a: a.game_id):
            writer.writerow(_averages_row(avg))


def _parse_opt_float(text: str) -> float | None:
    return None if text == "" else float(text)


def read_averages_csv(path: str | Path) -> list[GameElementAverages]:
    path = Path(path)
    out: list[GameElementAverages] = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing = [c for c in AVERAGES_COLUMNS if c not in header]
        if missing:
            raise ParseError(f"missing columns {missing}", path=str(path))
        for row in reader:
            avg = GameElementAverages(
                game_id=row["game_id"], review_count=int(row["review_count"])
            )
            for element in DESIGN_ELEMENTS:
                avg.avgs[element] = _parse_opt_float(row[f"{element}_avg"])
                avg.rated_counts[element] = int(row[f"{element}_rated_count"])
                avg.high_pcts[element] = _parse_opt_float(row[f"{element}_high_pct"])
            avg.overall_rating = _parse_opt_float(row["overall_rating"])
            avg.total_high_pct = _parse_opt_float(row["total_high_pct"])
            out.append(avg)
    return out


MERGED_COLUMNS: tuple[str, ...] = METADATA_COLUMNS + AVERAGES_COLUMNS[1:]


def write_merged_csv(path: str | Path, rows: Sequence[MergedGameRow]) -> None:
    """Write the merged analytics table: metadata columns then averages columns."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(MERGED_COLUMNS)
        for row in sorted(rows, key=lambda r: r.game_id):
            meta = row.meta
            record = [
                meta.game_id,
                meta.name,
                meta.store.value,
                meta.release_year,
                f"{meta.price_usd:.2f}",
                meta.price_category.value,
                meta.required_age,
                meta.pegi_bucket,
            ]
            record.extend(str(v) for v in meta.platform_flags().values())
            record.extend(str(v) for v in meta.genre_flags().values())
            record.extend(_averages_row(row.averages)[1:])
            writer.writerow(record)


def load_merged_rows(path: str | Path) -> list[MergedGameRow]:
    """Read the merged analytics table back into typed rows."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    metas = read_game_metadata_csv(path)  # shares the metadata column subset
    rows: list[MergedGameRow] = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing = [c for c in MERGED_COLUMNS if c not in header]
        if missing:
            raise ParseError(f"missing columns {missing}", path=str(path))
        for meta, row in zip(metas, reader):
            avg = GameElementAverages(
                game_id=meta.game_id, review_count=int(row["review_count"])
            )
            for element in DESIGN_ELEMENTS:
                avg.avgs[element] = _parse_opt_float(row[f"{element}_avg"])
                avg.rated_counts[element] = int(row[f"{element}_rated_count"])
                avg.high_pcts[element] = _parse_opt_float(row[f"{element}_high_pct"])
            avg.overall_rating = _parse_opt_float(row["overall_rating"])
            avg.total_high_pct = _parse_opt_float(row["total_high_pct"])
            rows.append(MergedGameRow(meta, avg))
    return rows


@dataclass
class DatasetBuildResult:
    averages_path: Path
    merged_path: Path
    games: int
    merged: int
    skipped_games: list[str]
    unmatched_meta: list[str]
    unmatched_avgs: list[str]


def build_dataset(
    quantified_dir: str | Path,
    metadata_file: str | Path,
    out_dir: str | Path,
) -> DatasetBuildResult:
    """Aggregate every ``*_quantified.csv`` and merge with tokenized metadata.

    Deterministic: games are processed and written in game_id order, so a
    rerun over identical inputs is byte-identical.
    """
    quantified_dir = Path(quantified_dir)
    out_dir = Path(out_dir)
    files = sorted(quantified_dir.glob("*_quantified.csv"))
    averages: list[GameElementAverages] = []
    skipped: list[str] = []
    for file in files:
        game_id = file.name[: -len("_quantified.csv")]
        rows = read_quantified_csv(file)  # raises on unreadable/invalid member files
        if not rows:
            logger.warning("game %s: quantified file is empty; skipped", game_id)
            skipped.append(game_id)
            continue
        averages.append(average_elements(game_id, [scores for _, scores in rows]))
    if not averages:
        raise EmptyDatasetError(f"no usable quantified files under {quantified_dir}")

    metas = read_game_metadata_csv(metadata_file)
    merged, unmatched_meta, unmatched_avgs = merge_metadata_averages(metas, averages)

    out_dir.mkdir(parents=True, exist_ok=True)
    averages_path = out_dir / AVERAGES_FILENAME
    merged_path = out_dir / MERGED_FILENAME
    write_averages_csv(averages_path, averages)
    write_merged_csv(merged_path, merged)
    return DatasetBuildResult(
        averages_path=averages_path,
        merged_path=merged_path,
        games=len(averages),
        merged=len(merged),
        skipped_games=skipped,
        unmatched_meta=unmatched_meta,
        unmatched_avgs=unmatched_avgs,
    )
