"""Statistical analyses over the merged game dataset.

Price/rating correlations, VR-vs-PC comparison, genre unpivot with
per-genre element averages, and deterministic report emission. An
undefined statistic (zero variance, too few points) is reported as None,
never fabricated as 0.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .aggregate import MergedGameRow
from .ingest import GENRE_FLAGS
from .schema import DESIGN_ELEMENTS, encode_price_ordinal

logger = logging.getLogger(__name__)

HIGH_AVERAGE_THRESHOLD = 4.0  # inclusive


class Platform(str, enum.Enum):
    PC = "pc"
    VR = "vr"


def platform_of(row: MergedGameRow) -> Platform:
    return Platform.VR if row.meta.Is_VR == 1 else Platform.PC


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Sample Pearson coefficient; None when undefined (n < 2 or zero variance)."""
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        return None
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt(np.dot(dx, dx)))
    sy = float(np.sqrt(np.dot(dy, dy)))
    if sx == 0.0 or sy == 0.0:
        return None
    return float(np.dot(dx, dy) / (sx * sy))


def correlate_price_vs_ratings(
    rows: Sequence[MergedGameRow], platform: Platform
) -> float | None:
    """Per-game correlation between price ordinal and total high-rating share."""
    pairs = [
        (encode_price_ordinal(row.meta.price_category), row.averages.total_high_pct)
        for row in rows
        if platform_of(row) is platform and row.averages.total_high_pct is not None
    ]
    if len(pairs) < 2:
        return None
    return pearson([p for p, _ in pairs], [t for _, t in pairs])


def _tier_high_percentages(
    rows: Sequence[MergedGameRow], element: str, platform: Platform
) -> list[tuple[int, float]]:
    """(price ordinal, % of tier's games with element average >= 4) per populated tier."""
    tiers: dict[int, list[MergedGameRow]] = {}
    for row in rows:
        if platform_of(row) is platform:
            tiers.setdefault(encode_price_ordinal(row.meta.price_category), []).append(row)
    points: list[tuple[int, float]] = []
    for ordinal in sorted(tiers):
        games = tiers[ordinal]
        high = sum(
            1
            for g in games
            if g.averages.avgs.get(element) is not None
            and g.averages.avgs[element] >= HIGH_AVERAGE_THRESHOLD
        )
        points.append((ordinal, 100.0 * high / len(games)))
    return points


def correlate_price_vs_element(
    rows: Sequence[MergedGameRow], element: str, platform: Platform
) -> float | None:
    """Correlation between price tier and that tier's high-rating percentage.

    Aggregates per price tier (at most 6 points); games whose element average
    is absent stay in the tier denominator.
    """
    if element not in DESIGN_ELEMENTS:
        raise ValueError(f"unknown design element {element!r}")
    points = _tier_high_percentages(rows, element, platform)
    if len(points) < 2:
        return None
    return pearson([float(c) for c, _ in points], [p for _, p in points])


@dataclass
class CorrelationReport:
    platform: Platform
    total_r: float | None
    total_n: int
    per_element_r: dict[str, float | None] = field(default_factory=dict)
    per_element_n: dict[str, int] = field(default_factory=dict)


def build_correlation_report(
    rows: Sequence[MergedGameRow], platform: Platform
) -> CorrelationReport:
    total_n = sum(
        1
        for row in rows
        if platform_of(row) is platform and row.averages.total_high_pct is not None
    )
    report = CorrelationReport(
        platform=platform,
        total_r=correlate_price_vs_ratings(rows, platform),
        total_n=total_n,
    )
    for element in DESIGN_ELEMENTS:
        points = _tier_high_percentages(rows, element, platform)
        report.per_element_r[element] = correlate_price_vs_element(rows, element, platform)
        report.per_element_n[element] = len(points)
    return report


@dataclass
class PlatformComparison:
    """Percent of games per platform whose element average is >= 4.

    Games with an absent element average count in the denominator but never
    the numerator. Totals are the mean of the 12 element percentages.
    """

    pct: dict[Platform, dict[str, float]] = field(default_factory=dict)
    totals: dict[Platform, float] = field(default_factory=dict)
    n_games: dict[Platform, int] = field(default_factory=dict)


def platform_comparison(rows: Sequence[MergedGameRow]) -> PlatformComparison:
    result = PlatformComparison()
    for platform in Platform:
        games = [row for row in rows if platform_of(row) is platform]
        if not games:
            logger.warning("no %s games; platform omitted from comparison", platform.value)
            continue
        percentages: dict[str, float] = {}
        for element in DESIGN_ELEMENTS:
            high = sum(
                1
                for g in games
                if g.averages.avgs.get(element) is not None
                and g.averages.avgs[element] >= HIGH_AVERAGE_THRESHOLD
            )
            percentages[element] = 100.0 * high / len(games)
        result.pct[platform] = percentages
        result.totals[platform] = sum(percentages.values()) / len(percentages)
        result.n_games[platform] = len(games)
    return result


class GenreElementRecord(NamedTuple):
    game_id: str
    platform: Platform
    genre: str
    element: str
    value: float


def unpivot_genres(rows: Sequence[MergedGameRow]) -> list[GenreElementRecord]:
    """Long-format records: one per (game, set genre flag, present element)."""
    records: list[GenreElementRecord] = []
    for row in rows:
        platform = platform_of(row)
        genres = [g for g in GENRE_FLAGS if getattr(row.meta, g) == 1]
        present = [(e, row.averages.avgs[e]) for e in row.averages.present_elements()]
        for genre in genres:
            for element, value in present:
                records.append(
                    GenreElementRecord(row.game_id, platform, genre, element, value)
                )
    return records


@dataclass
class GenreElementTable:
    """Mean of per-game element averages per (genre, element) for one platform."""

    platform: Platform
    means: dict[str, dict[str, float]] = field(default_factory=dict)


def genre_element_averages(
    long_rows: Sequence[GenreElementRecord], platform: Platform
) -> GenreElementTable:
    sums: dict[str, dict[str, list[float]]] = {}
    for record in long_rows:
        if record.platform is not platform:
            continue
        sums.setdefault(record.genre, {}).setdefault(record.element, []).append(record.value)
    table = GenreElementTable(platform=platform)
    for genre in GENRE_FLAGS:
        if genre not in sums:
            continue
        table.means[genre] = {
            element: sum(values) / len(values)
            for element, values in sums[genre].items()
        }
    return table


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.4f}"


def _jround(value: float | None) -> float | None:
    return None if value is None else round(value, 4)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[object]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def emit_report(
    correlations: dict[Platform, CorrelationReport],
    comparison: PlatformComparison,
    genre_tables: dict[Platform, GenreElementTable],
    out_dir: str | Path,
    reference: dict | None = None,
) -> list[Path]:
    """Write per-table CSVs plus a single report.json bundling everything.

    Numbers are emitted at 4 decimal places; reruns are byte-identical.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    for platform, report in sorted(correlations.items(), key=lambda kv: kv[0].value):
        path = out_dir / f"correlations_{platform.value}.csv"
        rows: list[list[object]] = [
            ["total_high_pct", "per_game", _fmt(report.total_r), report.total_n]
        ]
        for element in DESIGN_ELEMENTS:
            rows.append(
                [
                    element,
                    "per_tier",
                    _fmt(report.per_element_r[element]),
                    report.per_element_n[element],
                ]
            )
        _write_csv(path, ["statistic", "method", "r", "n"], rows)
        written.append(path)

    comparison_path = out_dir / "platform_comparison.csv"
    comparison_rows: list[list[object]] = []
    for element in DESIGN_ELEMENTS:
        comparison_rows.append(
            [
                element,
                _fmt(comparison.pct.get(Platform.PC, {}).get(element)),
                _fmt(comparison.pct.get(Platform.VR, {}).get(element)),
            ]
        )
    comparison_rows.append(
        [
            "Total_Average",
            _fmt(comparison.totals.get(Platform.PC)),
            _fmt(comparison.totals.get(Platform.VR)),
        ]
    )
    _write_csv(comparison_path, ["element", "pc_pct", "vr_pct"], comparison_rows)
    written.append(comparison_path)

    for platform, table in sorted(genre_tables.items(), key=lambda kv: kv[0].value):
        path = out_dir / f"genre_elements_{platform.value}.csv"
        rows = [
            [genre] + [_fmt(table.means[genre].get(element)) for element in DESIGN_ELEMENTS]
            for genre in GENRE_FLAGS
            if genre in table.means
        ]
        _write_csv(path, ["genre", *DESIGN_ELEMENTS], rows)
        written.append(path)

    bundle = {
        "metadata": {
            "high_threshold_inclusive": True,
            "absent_elements_in_denominator": True,
            "decimal_places": 4,
        },
        "correlations": {
            platform.value: {
                "total": {"r": _jround(report.total_r), "n": report.total_n, "method": "per_game"},
                "per_element": {
                    element: {
                        "r": _jround(report.per_element_r[element]),
                        "n": report.per_element_n[element],
                        "method": "per_tier",
                    }
                    for element in DESIGN_ELEMENTS
                },
            }
            for platform, report in correlations.items()
        },
        "platform_comparison": {
            platform.value: {
                "per_element": {
                    element: _jround(pcts[element]) for element in DESIGN_ELEMENTS
                },
                "total_average": _jround(comparison.totals[platform]),
                "n_games": comparison.n_games[platform],
            }
            for platform, pcts in comparison.pct.items()
        },
        "genre_elements": {
            platform.value: {
                genre: {
                    element: _jround(mean)
                    for element, mean in sorted(table.means[genre].items())
                }
                for genre in GENRE_FLAGS
                if genre in table.means
            }
            for platform, table in genre_tables.items()
        },
    }
    if reference is not None:
        bundle["reference_values"] = reference
    report_path = out_dir / "report.json"
    report_path.write_text(
        json.dumps(bundle, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    written.append(report_path)
    return written
