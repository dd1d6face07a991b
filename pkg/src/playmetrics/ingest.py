"""Parse raw store metadata and review files into canonical game records.

Covers file parsing, eligibility filtering, keyword-to-category mapping for
both stores, review-file loading, and dataset summaries. Network fetching
lives in :mod:`playmetrics.steam`.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConflictingIdsError, FileNameError, ParseError
from .schema import PriceCategory, pegi_bucket, price_category_from_price

logger = logging.getLogger(__name__)

GENRE_FLAGS: tuple[str, ...] = (
    "Action",
    "Adventure",
    "Casual",
    "Puzzle",
    "Role_Playing_Game",
    "Racing",
    "Simulation",
    "Sports",
    "Strategy",
    "Fighting",
    "Horror",
    "Battle_Royale",
    "Shooter",
    "Survival",
    "Music",
    "Education",
    "Entertainment",
)

PLATFORM_FLAGS: tuple[str, ...] = (
    "Is_VR",
    "Is_3D",
    "Is_Indie",
    "Free_To_Play",
    "Is_Coop",
    "Is_Singleplayer",
    "Is_Multiplayer",
    "Is_Steam",
    "Is_Early_Access",
)

# keyword_bags source keys
SOURCE_GENRE = "Genre"
SOURCE_TAGS = "TagMapping"
SOURCE_CATEGORIES = "CategoryFlag"
SOURCE_GAME_MODES = "GameMode"
SOURCE_KEYS: tuple[str, ...] = (SOURCE_GENRE, SOURCE_TAGS, SOURCE_CATEGORIES, SOURCE_GAME_MODES)


class Store(str, enum.Enum):
    STEAM = "Steam"
    META = "Meta"


class ExclusionReason(str, enum.Enum):
    TOO_FEW_REVIEWS = "TooFewReviews"
    TOO_OLD = "TooOld"
    UNRELEASED_OR_UNKNOWN_DATE = "UnreleasedOrUnknownDate"


# Category -> (keyword list, source bags searched). Matching is
# case-insensitive exact equality on whole tags, never substring.
STEAM_CATEGORY_KEYWORDS: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "Action": (
        ("Action", "Action RPG", "Action Roguelike", "Action-Adventure", "Beat 'em up",
         "Character Action Game", "Combat", "FPS", "Fighting", "Hack and Slash", "Shooter",
         "Swordplay", "Twin Stick Shooter"),
        (SOURCE_GENRE, SOURCE_TAGS),
    ),
    "Adventure": (
        ("Action-Adventure", "Adventure", "Atmospheric", "Exploration", "Fantasy",
         "Open World", "Puzzle", "Story Rich", "Visual Novel"),
        (SOURCE_GENRE, SOURCE_TAGS),
    ),
    "Battle_Royale": (
        ("Battle Royale", "FPS", "Multiplayer", "PvP", "Shooter", "Survival"),
        (SOURCE_GENRE, SOURCE_TAGS),
    ),
    "Casual": (
        ("2D", "Casual", "Cute", "Family Friendly", "Free to Play", "Indie", "Puzzle",
         "Relaxing", "Simulation"),
        (SOURCE_GENRE, SOURCE_TAGS),
    ),
    "Education": (
        ("Education", "Game Development", "Programming", "Software Training", "Trivia",
         "Web Publishing"),
        (SOURCE_GENRE, SOURCE_TAGS),
    ),
    "Entertainment": (
        ("Entertainment", "Feature Film", "Movie", "Streaming", "TV", "Video Production"),
        (SOURCE_GENRE, SOURCE_TAGS),
    ),
    "Fighting": (
        ("2D Fighter", "3D Fighter", "Beat 'em up", "Boxing", "Competitive", "Fighting",
         "Martial Arts", "Wrestling"),
        (SOURCE_GENRE, SOURCE_TAGS),
    ),
    "Free_To_Play": (
        ("Free to Play",),
        (SOURCE_CATEGORIES, SOURCE_TAGS),
    ),
    "Horror": (
        ("Dark", "Gore", "Gothic", "Horror", "Lovecraftian", "Psychological Horror",
         "Survival Horror", "Thriller", "Vampires", "Zombies"),
        (SOURCE_GENRE, SOURCE_TAGS),
    ),
    "Is_3D": (("3D",), (SOURCE_TAGS,)),
    "Is_Coop": (("Co-op", "Online Co-op"), (SOURCE_CATEGORIES,)),
    "Is_Early_Access": (("Early Access",), (SOURCE_CATEGORIES,)),
    "Is_Indie": (("Indie",), (SOURCE_CATEGORIES,)),
    "Is_Multiplayer": (
        ("MMO", "Multi-player", "Multiplayer", "Online PvP", "PvP"),
        (SOURCE_CATEGORIES,),
    ),
    "Is_Singleplayer": (("Single-player",), (SOURCE_CATEGORIES,)),
    "Is_Steam": (("Steam Achievements",), (SOURCE_CATEGORIES,)),
    "Is_VR": (("VR Only", "VR Support", "VR Supported"), (SOURCE_CATEGORIES,)),
    "Music": (
        ("8-bit Music", "Electronic Music", "Instrumental Music", "Music",
         "Music-Based Procedural Generation", "Rhythm", "Rock Music", "Soundtrack"),
        (SOURCE_GENRE, SOURCE_TAGS),
    ),
    "Puzzle": (
        ("Card Game", "Hidden Object", "Logic", "Match 3", "Puzzle", "Puzzle Platformer",
         "Sokoban", "Sudoku", "Time Manipulation", "Word Game"),
        (SOURCE_GENRE, SOURCE_TAGS),
    ),
    "Racing": (
        ("ATV", "BMX", "Combat Racing", "Cycling", "Driving", "Motorbike", "Offroad",
         "Racing", "Vehicular Combat"),
        (SOURCE_GENRE, SOURCE_TAGS),
    ),
    "Role_Playing_Game": (
        ("Action RPG", "CRPG", "Dungeon Crawler", "JRPG", "Party-Based RPG", "RPG",
         "Roguelike", "Roguelite", "Strategy RPG", "Turn-Based RPG"),
        (SOURCE_GENRE, SOURCE_TAGS),
    ),
    "Shooter": (
        ("Arena Shooter", "FPS", "Gun Customization", "Hero Shooter", "Looter Shooter",
         "On-Rails Shooter", "Shooter", "Tactical Shooter", "Third-Person Shooter",
         "Twin Stick Shooter"),
        (SOURCE_GENRE, SOURCE_TAGS),
    ),
    "Simulation": (
        ("City Builder", "Colony Sim", "Farming Sim", "Immersive Sim", "Management",
         "Medical Sim", "Simulation", "Space Sim", "Trading", "Train Sim", "Transportation"),
        (SOURCE_GENRE, SOURCE_TAGS),
    ),
    "Sports": (
        ("Baseball", "Basketball", "Boxing", "Football (American)", "Football (Soccer)",
         "Golf", "Hockey", "Motocross", "Pool", "Racing", "Rugby", "Skateboarding",
         "Sports", "Tennis", "Volleyball"),
        (SOURCE_GENRE, SOURCE_TAGS),
    ),
    "Strategy": (
        ("4X", "Card Battler", "Chess", "Deckbuilding", "Grand Strategy", "RTS",
         "Real Time Tactics", "Strategy", "Strategy RPG", "Tactical RPG", "Tower Defense",
         "Turn-Based Strategy", "Turn-Based Tactics"),
        (SOURCE_GENRE, SOURCE_TAGS),
    ),
    "Survival": (
        ("Base Building", "Crafting", "Open World Survival Craft", "Resource Management",
         "Roguelike", "Roguelite", "Survival", "Survival Horror"),
        (SOURCE_GENRE, SOURCE_TAGS),
    ),
}

# The Meta store exposes far fewer labels; unlisted categories are either
# inferred (price, platform) or fixed at 0.
META_CATEGORY_KEYWORDS: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "Action": (("Action", "Arcade", "Fighting", "Party Game", "Platformer", "Shooter"),
               (SOURCE_GENRE,)),
    "Adventure": (("Adventure", "Narrative", "Sandbox", "World Creation"), (SOURCE_GENRE,)),
    "Casual": (("Hangout", "Party Game", "Platformer", "Puzzle", "Tabletop"), (SOURCE_GENRE,)),
    "Education": (("Learning",), (SOURCE_GENRE,)),
    "Fighting": (("Fighting",), (SOURCE_GENRE,)),
    "Horror": (("Survival",), (SOURCE_GENRE,)),
    "Is_Coop": (("Co-op",), (SOURCE_GAME_MODES,)),
    "Is_Multiplayer": (("Multiplayer",), (SOURCE_GAME_MODES,)),
    "Is_Singleplayer": (("Einzelspieler", "Single User"), (SOURCE_GAME_MODES,)),
    "Music": (("Rhythm",), (SOURCE_GENRE,)),
    "Puzzle": (("Puzzle", "Tabletop"), (SOURCE_GENRE,)),
    "Racing": (("Racing",), (SOURCE_GENRE,)),
    "Role_Playing_Game": (("Role Playing",), (SOURCE_GENRE,)),
    "Shooter": (("Shooter",), (SOURCE_GENRE,)),
    "Simulation": (("Sandbox", "Simulation", "World Creation"), (SOURCE_GENRE,)),
    "Sports": (("Sports",), (SOURCE_GENRE,)),
    "Strategy": (("Strategy", "Tabletop"), (SOURCE_GENRE,)),
    "Survival": (("Sandbox", "Survival", "World Creation"), (SOURCE_GENRE,)),
}


@dataclass
class RawGameRecord:
    """One game as parsed from a raw store metadata file."""

    game_id: str
    name: str
    store: Store
    release_date: date | str
    price_usd: float | None
    required_age: int | None
    keyword_bags: dict[str, list[str]] = field(default_factory=dict)
    review_count: int = 0


@dataclass
class RawReview:
    review_id: str
    game_id: str
    text: str
    rating_rank: int  # 1 = highest-rated review in its file


@dataclass
class ParseIssue:
    game_id: str
    message: str


@dataclass
class ExcludedGame:
    record: RawGameRecord
    reason: ExclusionReason


@dataclass
class DatasetSummary:
    total_games: int
    total_reviews: int
    top_k: list[tuple[str, int]]


@dataclass
class GameMetadata:
    """One tokenized game: identity, platform flags, price tier, genre flags."""

    game_id: str
    name: str
    store: Store
    release_year: int
    price_usd: float
    price_category: PriceCategory
    required_age: int
    pegi_bucket: int
    Is_VR: int = 0
    Is_3D: int = 0
    Is_Indie: int = 0
    Free_To_Play: int = 0
    Is_Coop: int = 0
    Is_Singleplayer: int = 0
    Is_Multiplayer: int = 0
    Is_Steam: int = 0
    Is_Early_Access: int = 0
    Action: int = 0
    Adventure: int = 0
    Casual: int = 0
    Puzzle: int = 0
    Role_Playing_Game: int = 0
    Racing: int = 0
    Simulation: int = 0
    Sports: int = 0
    Strategy: int = 0
    Fighting: int = 0
    Horror: int = 0
    Battle_Royale: int = 0
    Shooter: int = 0
    Survival: int = 0
    Music: int = 0
    Education: int = 0
    Entertainment: int = 0

    def genre_flags(self) -> dict[str, int]:
        return {name: getattr(self, name) for name in GENRE_FLAGS}

    def platform_flags(self) -> dict[str, int]:
        return {name: getattr(self, name) for name in PLATFORM_FLAGS}


METADATA_COLUMNS: tuple[str, ...] = (
    "game_id",
    "name",
    "store",
    "release_year",
    "price_usd",
    "price_category",
    "required_age",
    "pegi_bucket",
) + PLATFORM_FLAGS + GENRE_FLAGS


_DATE_FORMATS = ("%Y-%m-%d", "%b %d, %Y", "%d %b, %Y", "%B %d, %Y", "%d %B %Y", "%Y/%m/%d")
_YEAR_RE = re.compile(r"\b(19|20)\d{2}\b")


def _parse_release_date(value: object) -> date | str:
    """Best-effort date parse; unparseable values come back as the raw string."""
    if isinstance(value, dict):
        value = value.get("date", "")
    if value is None:
        return ""
    text = str(value).strip()
    if not text:
        return ""
    for fmt in _DATE_FORMATS:
        try:
            return datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    if text.isdigit() and len(text) == 4:
        return date(int(text), 1, 1)
    match = _YEAR_RE.search(text)
    if match:
        return date(int(match.group(0)), 1, 1)
    return text


def _parse_price(value: object) -> float | None:
    if value is None:
        return None
    if isinstance(value, bool):
        raise ValueError(f"price cannot be a boolean: {value!r}")
    if isinstance(value, (int, float)):
        price = float(value)
    else:
        text = str(value).strip()
        if not text or text.casefold() in ("free", "free to play", "free-to-play"):
            return 0.0
        text = text.lstrip("$").replace(",", "")
        price = float(text)  # raises ValueError on junk
    if price < 0:
        raise ValueError(f"price must be non-negative: {price}")
    return price


def _parse_required_age(value: object) -> int | None:
    if value is None or value == "":
        return None
    age = int(str(value).strip())
    if age < 0:
        raise ValueError(f"required_age must be non-negative: {age}")
    return age


def _parse_review_count(entry: dict) -> int:
    for key in ("review_count", "reviews", "ratings", "recommendations"):
        value = entry.get(key)
        if isinstance(value, dict):
            value = value.get("total")
        if isinstance(value, int) and not isinstance(value, bool):
            return max(0, value)
    positive, negative = entry.get("positive"), entry.get("negative")
    if isinstance(positive, int) and isinstance(negative, int):
        return max(0, positive + negative)
    return 0


def _string_bag(value: object) -> list[str]:
    """Keyword list from a raw JSON value: list of strings or a tag->weight map."""
    if value is None:
        return []
    if isinstance(value, dict):
        return [str(k) for k in value.keys()]
    if isinstance(value, (list, tuple)):
        return [item for item in value if isinstance(item, str)]
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return []


def _reject_duplicate_keys(pairs: list[tuple[str, object]]) -> dict:
    seen: dict[str, object] = {}
    for key, value in pairs:
        if key in seen:
            raise ConflictingIdsError(f"duplicate key {key!r} in JSON object")
        seen[key] = value
    return seen


def _load_json(path: Path) -> object:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc.msg}", path=str(path), offset=exc.pos) from exc


def parse_raw_steam_metadata(path: str | Path) -> tuple[list[RawGameRecord], list[ParseIssue]]:
    """Parse the raw Steam metadata JSON map (AppID -> attributes).

    Unparseable entries are returned in the issue list, never dropped silently.
    """
    path = Path(path)
    data = _load_json(path)
    if not isinstance(data, dict):
        raise ParseError("top level must be a JSON object keyed by AppID", path=str(path), offset=0)

    records: list[RawGameRecord] = []
    issues: list[ParseIssue] = []
    for app_id, entry in data.items():
        game_id = str(app_id).strip()
        if not game_id:
            issues.append(ParseIssue(game_id, "empty AppID"))
            continue
        if not isinstance(entry, dict):
            issues.append(ParseIssue(game_id, f"entry is not an object: {type(entry).__name__}"))
            continue
        name = str(entry.get("name") or "").strip()
        if not name:
            issues.append(ParseIssue(game_id, "missing game name"))
            continue
        try:
            price = _parse_price(entry.get("price"))
            required_age = _parse_required_age(entry.get("required_age"))
        except ValueError as exc:
            issues.append(ParseIssue(game_id, str(exc)))
            continue
        records.append(
            RawGameRecord(
                game_id=game_id,
                name=name,
                store=Store.STEAM,
                release_date=_parse_release_date(entry.get("release_date")),
                price_usd=price,
                required_age=required_age,
                keyword_bags={
                    SOURCE_GENRE: _string_bag(entry.get("genres")),
                    SOURCE_TAGS: _string_bag(entry.get("tags")),
                    SOURCE_CATEGORIES: _string_bag(entry.get("categories")),
                },
                review_count=_parse_review_count(entry),
            )
        )
    return records, issues


def parse_raw_meta_metadata(path: str | Path) -> tuple[list[RawGameRecord], list[ParseIssue]]:
    """Parse the raw Meta store metadata JSON array."""
    path = Path(path)
    data = _load_json(path)
    if not isinstance(data, list):
        raise ParseError("top level must be a JSON array of games", path=str(path), offset=0)

    records: list[RawGameRecord] = []
    issues: list[ParseIssue] = []
    seen_ids: set[str] = set()
    for index, entry in enumerate(data):
        if not isinstance(entry, dict):
            issues.append(ParseIssue(f"#{index}", f"entry is not an object: {type(entry).__name__}"))
            continue
        game_id = str(entry.get("id") or "").strip()
        if not game_id:
            issues.append(ParseIssue(f"#{index}", "missing game id"))
            continue
        if game_id in seen_ids:
            raise ConflictingIdsError(f"duplicate game id {game_id!r}", path=str(path))
        seen_ids.add(game_id)
        name = str(entry.get("name") or "").strip()
        if not name:
            issues.append(ParseIssue(game_id, "missing game name"))
            continue
        try:
            price = _parse_price(entry.get("price"))
            required_age = _parse_required_age(entry.get("required_age"))
        except ValueError as exc:
            issues.append(ParseIssue(game_id, str(exc)))
            continue
        records.append(
            RawGameRecord(
                game_id=game_id,
                name=name,
                store=Store.META,
                release_date=_parse_release_date(entry.get("release_date")),
                price_usd=price,
                required_age=required_age,
                keyword_bags={
                    SOURCE_GENRE: _string_bag(entry.get("genres")),
                    SOURCE_GAME_MODES: _string_bag(entry.get("game_modes")),
                },
                review_count=_parse_review_count(entry),
            )
        )
    return records, issues


def filter_eligible_games(
    records: Sequence[RawGameRecord],
    min_reviews: int = 25,
    min_year: int = 2020,
) -> tuple[list[RawGameRecord], list[ExcludedGame]]:
    """Partition records into eligible games and excluded ones with reasons."""
    eligible: list[RawGameRecord] = []
    excluded: list[ExcludedGame] = []
    for record in records:
        if not isinstance(record.release_date, date):
            excluded.append(ExcludedGame(record, ExclusionReason.UNRELEASED_OR_UNKNOWN_DATE))
        elif record.release_date.year < min_year:
            excluded.append(ExcludedGame(record, ExclusionReason.TOO_OLD))
        elif record.review_count < min_reviews:
            excluded.append(ExcludedGame(record, ExclusionReason.TOO_FEW_REVIEWS))
        else:
            eligible.append(record)
    return eligible, excluded


def _match_categories(
    raw: RawGameRecord,
    table: dict[str, tuple[tuple[str, ...], tuple[str, ...]]],
    unmatched: Counter | None,
) -> dict[str, int]:
    normalized_bags = {
        source: {kw.strip().casefold() for kw in bag}
        for source, bag in raw.keyword_bags.items()
    }
    flags: dict[str, int] = {}
    matched_per_bag: dict[str, set[str]] = {source: set() for source in normalized_bags}
    for category, (keywords, sources) in table.items():
        wanted = {kw.casefold() for kw in keywords}
        hit = False
        for source in sources:
            bag = normalized_bags.get(source, set())
            found = bag & wanted
            if found:
                hit = True
                matched_per_bag.setdefault(source, set()).update(found)
        flags[category] = 1 if hit else 0
    if unmatched is not None:
        for source, bag in normalized_bags.items():
            for keyword in sorted(bag - matched_per_bag.get(source, set())):
                unmatched[keyword] += 1
    return flags


def _release_year(raw: RawGameRecord) -> int:
    if isinstance(raw.release_date, date):
        return raw.release_date.year
    logger.warning("game %s has no parseable release date; year set to 0", raw.game_id)
    return 0


def _price_fields(raw: RawGameRecord) -> tuple[float, PriceCategory]:
    price = raw.price_usd
    if price is None:
        logger.warning("game %s has no price; treating as free", raw.game_id)
        price = 0.0
    return price, price_category_from_price(price)


def _age_fields(raw: RawGameRecord) -> tuple[int, int]:
    age = raw.required_age or 0
    return age, pegi_bucket(min(age, 21))


def map_steam_categories(raw: RawGameRecord, unmatched: Counter | None = None) -> GameMetadata:
    """Tokenize a Steam record via the Steam keyword table.

    ``Free_To_Play`` follows the price (price 0 <=> free) so the flag, the
    price, and the price tier can never disagree; a tag/price mismatch is
    logged. Unmatched keywords are tallied into ``unmatched`` when given.
    """
    if raw.store is not Store.STEAM:
        raise ValueError(f"map_steam_categories got a {raw.store.value} record")
    flags = _match_categories(raw, STEAM_CATEGORY_KEYWORDS, unmatched)
    price, tier = _price_fields(raw)
    free_to_play = 1 if price == 0 else 0
    if flags.get("Free_To_Play", 0) != free_to_play:
        logger.warning(
            "game %s: free-to-play tag disagrees with price %.2f; price wins",
            raw.game_id, price,
        )
    age, bucket = _age_fields(raw)
    meta = GameMetadata(
        game_id=raw.game_id,
        name=raw.name,
        store=Store.STEAM,
        release_year=_release_year(raw),
        price_usd=price,
        price_category=tier,
        required_age=age,
        pegi_bucket=bucket,
    )
    for name, value in flags.items():
        setattr(meta, name, value)
    meta.Free_To_Play = free_to_play
    return meta


def map_meta_categories(raw: RawGameRecord, unmatched: Counter | None = None) -> GameMetadata:
    """Tokenize a Meta store record via the Meta keyword table.

    Every Meta title is VR (hence 3D) and not on Steam; free-to-play is
    inferred from the price; categories the store cannot express stay 0.
    """
    if raw.store is not Store.META:
        raise ValueError(f"map_meta_categories got a {raw.store.value} record")
    flags = _match_categories(raw, META_CATEGORY_KEYWORDS, unmatched)
    price, tier = _price_fields(raw)
    age, bucket = _age_fields(raw)
    meta = GameMetadata(
        game_id=raw.game_id,
        name=raw.name,
        store=Store.META,
        release_year=_release_year(raw),
        price_usd=price,
        price_category=tier,
        required_age=age,
        pegi_bucket=bucket,
    )
    for name, value in flags.items():
        setattr(meta, name, value)
    meta.Is_VR = 1
    meta.Is_3D = 1
    meta.Is_Steam = 0
    meta.Free_To_Play = 1 if price == 0 else 0
    return meta


_REVIEW_FILE_RE = re.compile(r"^(?P<game_id>.+)_(?P<count>\d+)$")


def parse_review_filename(path: str | Path) -> tuple[str, int]:
    """Split a ``<gameid>_<count>.csv`` file name into (game_id, declared count)."""
    stem = Path(path).stem
    match = _REVIEW_FILE_RE.match(stem)
    if not match:
        raise FileNameError(
            f"review file name must be <gameid>_<count>.csv, got {Path(path).name!r}",
            path=str(path),
        )
    return match.group("game_id"), int(match.group("count"))


def load_review_file(path: str | Path, diagnostics: list[str] | None = None) -> list[RawReview]:
    """Load one review CSV; rows keep file order and get ranks 1..n."""
    path = Path(path)
    game_id, declared = parse_review_filename(path)
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for column in ("review_id", "text"):
            if column not in header:
                raise ParseError(f"missing column {column!r}", path=str(path))
        reviews = [
            RawReview(
                review_id=str(row["review_id"]),
                game_id=game_id,
                text=row["text"] or "",
                rating_rank=rank,
            )
            for rank, row in enumerate(reader, start=1)
        ]
    if declared != len(reviews):
        message = (
            f"{path.name}: declared count {declared} != {len(reviews)} rows (rows kept)"
        )
        logger.warning(message)
        if diagnostics is not None:
            diagnostics.append(message)
    return reviews


def summarize_dataset(games: Iterable[tuple[str, int]], k: int = 10) -> DatasetSummary:
    """Totals plus the top-k games by review count (ties by game_id ascending)."""
    pairs = list(games)
    ranked = sorted(pairs, key=lambda item: (-item[1], item[0]))
    return DatasetSummary(
        total_games=len(pairs),
        total_reviews=sum(count for _, count in pairs),
        top_k=ranked[: max(k, 0)],
    )


def write_game_metadata_csv(path: str | Path, metas: Sequence[GameMetadata]) -> None:
    """Write the tokenized metadata table, one row per game, game_id ascending."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(METADATA_COLUMNS)
        for meta in sorted(metas, key=lambda m: m.game_id):
            row = [
                meta.game_id,
                meta.name,
                meta.store.value,
                meta.release_year,
                f"{meta.price_usd:.2f}",
                meta.price_category.value,
                meta.required_age,
                meta.pegi_bucket,
            ]
            row.extend(getattr(meta, name) for name in PLATFORM_FLAGS)
            row.extend(getattr(meta, name) for name in GENRE_FLAGS)
            writer.writerow(row)


def read_game_metadata_csv(path: str | Path) -> list[GameMetadata]:
    path = Path(path)
    metas: list[GameMetadata] = []
    seen: set[str] = set()
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing = [c for c in METADATA_COLUMNS if c not in header]
        if missing:
            raise ParseError(f"missing columns {missing}", path=str(path))
        for row in reader:
            game_id = row["game_id"]
            if game_id in seen:
                raise ConflictingIdsError(f"duplicate game id {game_id!r}", path=str(path))
            seen.add(game_id)
            meta = GameMetadata(
                game_id=game_id,
                name=row["name"],
                store=Store(row["store"]),
                release_year=int(row["release_year"]),
                price_usd=float(row["price_usd"]),
                price_category=PriceCategory.from_label(row["price_category"]),
                required_age=int(row["required_age"]),
                pegi_bucket=int(row["pegi_bucket"]),
            )
            for name in PLATFORM_FLAGS + GENRE_FLAGS:
                setattr(meta, name, int(row[name]))
            metas.append(meta)
    return metas
