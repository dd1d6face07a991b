"""Canonical domain types, enumerations, and pure encoding/validation rules.

Everything here is a pure function on value types; no I/O, no shared state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Mapping

from .errors import (
    ConflictViolationError,
    MissingFieldError,
    RangeViolationError,
    TypeViolationError,
)

# The twelve rated facets of a game, in fixed schema order.
DESIGN_ELEMENTS: tuple[str, ...] = (
    "Gameplay",
    "Graphics",
    "Difficulty",
    "Story",
    "Audio",
    "Avatar_Customization",
    "Controls",
    "Monetization_Model",
    "Replayability",
    "Community",
    "Multiplayer",
    "Spatial_Presence",
)

BINARY_FIELDS: tuple[str, ...] = (
    "Is_Helpful",
    "Is_Pro",
    "Is_Con",
    "Is_Video",
    "Is_Suggestion",
    "Is_Bug",
    "Recommended",
)

# Canonical key order for JSON objects and CSV columns.
REVIEW_FIELD_ORDER: tuple[str, ...] = (
    "Is_Helpful",
    "Is_Pro",
    "Is_Con",
    "Is_Video",
    "Is_Suggestion",
    "Is_Bug",
    "Language",
    "Recommended",
) + DESIGN_ELEMENTS

# Accepted on input as an alias of Language; never emitted.
LANGUAGE_ALIAS = "Review_Language"

LANGUAGE_NAMES: dict[int, str] = {
    1: "Chinese",
    2: "English",
    3: "Russian",
    4: "Spanish",
    5: "Portuguese",
    6: "German",
    7: "Japanese",
    8: "French",
    9: "Polish",
    10: "Turkish",
    11: "Others",
}

LANGUAGE_OTHER = 11

PEGI_LABELS: tuple[int, ...] = (3, 7, 12, 16, 18)


class DesignElement(enum.Enum):
    """Closed set of the 12 design elements; iteration order is schema order."""

    GAMEPLAY = "Gameplay"
    GRAPHICS = "Graphics"
    DIFFICULTY = "Difficulty"
    STORY = "Story"
    AUDIO = "Audio"
    AVATAR_CUSTOMIZATION = "Avatar_Customization"
    CONTROLS = "Controls"
    MONETIZATION_MODEL = "Monetization_Model"
    REPLAYABILITY = "Replayability"
    COMMUNITY = "Community"
    MULTIPLAYER = "Multiplayer"
    SPATIAL_PRESENCE = "Spatial_Presence"


class PriceCategory(enum.Enum):
    """Six price tiers with a fixed ordinal encoding 0-5."""

    FREE = "Free"
    LOW_PRICED_INDIE = "Low-Priced Indie"
    MID_PRICED_INDIE = "Mid-Priced Indie"
    AA_GAMES = "AA Games"
    AAA_GAMES = "AAA Games"
    PREMIUM_AAA_GAMES = "Premium AAA Games"

    @property
    def ordinal(self) -> int:
        return _PRICE_ORDINALS[self]

    @classmethod
    def from_label(cls, label: str) -> "PriceCategory":
        for tier in cls:
            if tier.value == label:
                return tier
        raise ValueError(f"unknown price category label {label!r}")


_PRICE_ORDINALS: dict[PriceCategory, int] = {
    PriceCategory.FREE: 0,
    PriceCategory.LOW_PRICED_INDIE: 1,
    PriceCategory.MID_PRICED_INDIE: 2,
    PriceCategory.AA_GAMES: 3,
    PriceCategory.AAA_GAMES: 4,
    PriceCategory.PREMIUM_AAA_GAMES: 5,
}


@dataclass(frozen=True)
class ReviewScores:
    """One quantified review: 7 binary attributes, a language code, 12 element scores.

    Element score 0 means "insufficient data to evaluate"; 1-5 are real ratings.
    """

    Is_Helpful: int
    Is_Pro: int
    Is_Con: int
    Is_Video: int
    Is_Suggestion: int
    Is_Bug: int
    Language: int
    Recommended: int
    Gameplay: int
    Graphics: int
    Difficulty: int
    Story: int
    Audio: int
    Avatar_Customization: int
    Controls: int
    Monetization_Model: int
    Replayability: int
    Community: int
    Multiplayer: int
    Spatial_Presence: int

    def to_dict(self) -> dict[str, int]:
        """Serialize in canonical key order."""
        return {name: getattr(self, name) for name in REVIEW_FIELD_ORDER}

    def element_score(self, element: DesignElement) -> int:
        return getattr(self, element.value)


assert tuple(f.name for f in fields(ReviewScores)) == REVIEW_FIELD_ORDER


def field_range(name: str) -> tuple[int, int]:
    """Inclusive (lo, hi) bounds of a canonical review field."""
    if name in BINARY_FIELDS:
        return (0, 1)
    if name == "Language":
        return (1, 11)
    if name in DESIGN_ELEMENTS:
        return (0, 5)
    raise ValueError(f"unknown review field {name!r}")


def price_category_from_price(price_usd: float) -> PriceCategory:
    """Map a USD price to its tier. Bands are half-open [lo, hi)."""
    if isinstance(price_usd, bool) or not isinstance(price_usd, (int, float)):
        raise ValueError(f"price must be a number, got {type(price_usd).__name__}")
    if not math.isfinite(price_usd):
        raise ValueError(f"price must be finite, got {price_usd!r}")
    if price_usd < 0:
        raise ValueError(f"price must be non-negative, got {price_usd}")
    if price_usd == 0:
        return PriceCategory.FREE
    if price_usd < 5:
        return PriceCategory.LOW_PRICED_INDIE
    if price_usd < 15:
        return PriceCategory.MID_PRICED_INDIE
    if price_usd < 25:
        return PriceCategory.AA_GAMES
    if price_usd < 40:
        return PriceCategory.AAA_GAMES
    return PriceCategory.PREMIUM_AAA_GAMES


def encode_price_ordinal(tier: PriceCategory) -> int:
    """Free=0 through Premium AAA=5."""
    return _PRICE_ORDINALS[tier]


def pegi_bucket(required_age: int) -> int:
    """Smallest PEGI label >= required_age; ages above 18 clamp to 18."""
    if isinstance(required_age, bool) or not isinstance(required_age, int):
        raise ValueError(f"required_age must be an integer, got {required_age!r}")
    if required_age < 0 or required_age > 21:
        raise ValueError(f"required_age {required_age} outside [0, 21]")
    for label in PEGI_LABELS:
        if required_age <= label:
            return label
    return PEGI_LABELS[-1]


def normalize_explicit_rating(numerator: float, denominator: float) -> int:
    """Rescale an in-text rating like 7/10 to the 1-5 range.

    Rounds half-up, then clamps to [1, 5]: an explicit 0/10 is data (worst),
    not "insufficient data", so the floor is 1 rather than 0.
    """
    if denominator <= 0:
        raise ValueError(f"denominator must be positive, got {denominator}")
    if numerator < 0 or numerator > denominator:
        raise ValueError(f"numerator {numerator} outside [0, {denominator}]")
    # Exact rational arithmetic so x/d and kx/kd round identically.
    value = Fraction(numerator) / Fraction(denominator) * 5
    rounded = math.floor(value + Fraction(1, 2))
    return max(1, min(5, rounded))


def validate_review_scores(raw: Mapping[str, object]) -> ReviewScores:
    """Check a field map against the schema and build a ReviewScores.

    Accepts ``Review_Language`` as an input alias of ``Language``; if both are
    present they must agree. Unknown keys are ignored. Booleans and non-integer
    numbers are rejected as type violations.
    """
    data = dict(raw)
    if LANGUAGE_ALIAS in data:
        alias_value = data.pop(LANGUAGE_ALIAS)
        if "Language" in data and data["Language"] != alias_value:
            raise ConflictViolationError(
                "Language",
                f"Language={data['Language']!r} conflicts with "
                f"{LANGUAGE_ALIAS}={alias_value!r}",
            )
        data.setdefault("Language", alias_value)

    values: dict[str, int] = {}
    for name in REVIEW_FIELD_ORDER:
        if name not in data:
            raise MissingFieldError(name)
        value = data[name]
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeViolationError(name, value)
        lo, hi = field_range(name)
        if value < lo or value > hi:
            raise RangeViolationError(name, value, lo, hi)
        values[name] = value
    return ReviewScores(**values)
