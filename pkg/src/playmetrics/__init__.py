"""Game-review quantification and analytics pipeline."""

__version__ = "0.1.0"

from .schema import (
    DESIGN_ELEMENTS,
    REVIEW_FIELD_ORDER,
    DesignElement,
    PriceCategory,
    ReviewScores,
    encode_price_ordinal,
    normalize_explicit_rating,
    pegi_bucket,
    price_category_from_price,
    validate_review_scores,
)

__all__ = [
    "DESIGN_ELEMENTS",
    "REVIEW_FIELD_ORDER",
    "DesignElement",
    "PriceCategory",
    "ReviewScores",
    "encode_price_ordinal",
    "normalize_explicit_rating",
    "pegi_bucket",
    "price_category_from_price",
    "validate_review_scores",
]
