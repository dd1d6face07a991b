"""Convert raw review text into validated numeric records via a chat endpoint.

The prompt contract is strict: the completion must be exactly one JSON
object (optionally inside a fenced code block) whose fields pass the review
schema. Failures are retried with the identical prompt, then discarded with
an auditable reason. Per-game outputs are checkpointed so reruns are no-ops.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Sequence

import requests

from .errors import SchemaValidationError
from .ingest import RawReview
from .schema import (
    DESIGN_ELEMENTS,
    LANGUAGE_OTHER,
    REVIEW_FIELD_ORDER,
    ReviewScores,
    normalize_explicit_rating,
    validate_review_scores,
)

logger = logging.getLogger(__name__)

QUANTIFIED_HEADER: tuple[str, ...] = ("review_id",) + REVIEW_FIELD_ORDER
DISCARDED_HEADER: tuple[str, ...] = ("review_id", "reason", "text")

ENV_ENDPOINT = "QUANT_ENDPOINT"
ENV_MODEL = "QUANT_MODEL"
ENV_API_KEY = "QUANT_API_KEY"

# The conversion prompt. The numbered rules and the worked example are part
# of the contract; {format_instructions} and {review} are the only slots.
PROMPT_TEMPLATE = """\
Use the below schemas to convert any game text review into numerical values as per the schemas provided.
IMPORTANT: Your response MUST be exactly one valid JSON object, and nothing else.
Do not output multiple JSON blocks or repeated keys.
No comments, no trailing commas, no extra text.
Adhere to the following rules strictly:
1-If a review contains only symbols (e.g., "♥♥♥♥") or non-alphanumeric characters you should set all fields to 0 except for 'Language', which should be set to 11 (Other).
2-Do not infer positivity, negativity, or other attributes from special characters or emojis. Treat such reviews as uninformative unless meaningful words are present.
3-Ensure 'Recommended' is strictly 0 or 1.
4-All rating fields ( 'Gameplay', 'Graphics', etc.) must be integers between 0 and 5, in case you cant find sufficient data in the review that satisfies a specific field you should set that field to 0. Never give a 1 to 5 rating for any field if you cant find sufficient data in the review that supports it. NEVER MAKE UP DATA.
5-For binary fields (e.g., 'Is_Helpful', 'Is_Pro'), ensure values are strictly 0 or 1.
6-If a game review includes numerical ratings (e.g., "gameplay is 7/10"), you should normalize these ratings to the required range of 1-5 where 0 represents insufficient data. Never use the ratings in the review directly without ensuring they abide to the schema. For example, a review that states "story is 7/10" would equate to setting the value for the 'Story' field to 4/5.

For example if text review is: "This game is amazing" your output would look like this:
{{"Is_Helpful": 0,"Is_Pro": 1,"Is_Con": 0,"Is_Video": 0,"Is_Suggestion": 0,"Is_Bug": 0,"Language": 2,"Recommended": 1,"Gameplay": 0,"Graphics": 0,"Difficulty": 0,"Story": 0,"Audio": 0,"Avatar_Customization": 0,"Controls": 0,"Monetization_Model": 0,"Replayability": 0,"Community": 0,"Multiplayer": 0,"Spatial_Presence": 0}}

{format_instructions}

Actual review to be tokenized is: "{review}"
"""

_REVIEW_MARKER = 'Actual review to be tokenized is: "'


class DiscardReason(str, enum.Enum):
    EMPTY_AFTER_SANITIZE = "EmptyAfterSanitize"
    INVALID_CHARACTERS = "InvalidCharacters"
    LLM_PARSE_FAILURE = "LlmParseFailure"
    VALIDATION_FAILURE = "ValidationFailure"
    TIMEOUT = "Timeout"


@dataclass
class QuantifierConfig:
    endpoint_url: str = ""
    model_name: str = ""
    api_key: str = ""
    temperature: float = 0.0
    max_retries: int = 2
    request_timeout: float = 60.0
    concurrency: int = 1
    top_n_reviews: int = 100

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.concurrency < 1:
            raise ValueError("concurrency must be >= 1")
        if self.top_n_reviews < 1:
            raise ValueError("top_n_reviews must be >= 1")

    @classmethod
    def from_env(cls, **overrides) -> "QuantifierConfig":
        values = {
            "endpoint_url": os.environ.get(ENV_ENDPOINT, ""),
            "model_name": os.environ.get(ENV_MODEL, ""),
            "api_key": os.environ.get(ENV_API_KEY, ""),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass
class QuantifyOutcome:
    """Either a quantified record or a discard with a reason, never both."""

    review_id: str
    scores: ReviewScores | None = None
    reason: DiscardReason | None = None
    text: str = ""

    def __post_init__(self):
        if (self.scores is None) == (self.reason is None):
            raise ValueError("outcome must have exactly one of scores or reason")

    @property
    def quantified(self) -> bool:
        return self.scores is not None


class TransportFailure(Exception):
    """Raised by clients when the completion request itself fails."""


class CompletionClient(Protocol):
    def complete(self, prompt: str) -> str: ...


class HttpChatClient:
    """Minimal chat-completion client: POST one user message, read one choice."""

    def __init__(self, config: QuantifierConfig, session: requests.Session | None = None):
        if not config.endpoint_url:
            raise ValueError("endpoint_url is required (set QUANT_ENDPOINT or config)")
        self.config = config
        self.session = session or requests.Session()

    def complete(self, prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        body = {
            "model": self.config.model_name,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        try:
            response = self.session.post(
                self.config.endpoint_url,
                json=body,
                headers=headers,
                timeout=self.config.request_timeout,
            )
        except requests.RequestException as exc:
            raise TransportFailure(str(exc)) from exc
        if response.status_code != 200:
            raise TransportFailure(f"HTTP {response.status_code} from endpoint")
        try:
            payload = response.json()
            return payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportFailure(f"malformed completion payload: {exc}") from exc

    def probe(self) -> None:
        """Cheap reachability check; any HTTP answer counts as reachable."""
        try:
            self.session.head(self.config.endpoint_url, timeout=self.config.request_timeout)
        except requests.RequestException as exc:
            raise TransportFailure(f"endpoint unreachable: {exc}") from exc


class MockLlmClient:
    """Deterministic stand-in for the real endpoint.

    Responses come from a script: exact review text -> completion, with an
    optional default. Unscripted reviews fall back to serializing the
    rule-based quantifier's output, so whole-pipeline runs stay hermetic.
    Scripted lists play back one response per call (for retry tests).
    """

    def __init__(
        self,
        responses: dict[str, str | list[str]] | None = None,
        default: str | None = None,
        fallback: Callable[[str], str] | None = None,
    ):
        self.responses = dict(responses or {})
        self.default = default
        self.fallback = fallback or (lambda text: serialize_scores(rule_based_quantifier(text)))
        self.calls = 0
        self._cursors: dict[str, int] = {}

    @classmethod
    def from_script_file(cls, path: str | Path) -> "MockLlmClient":
        with Path(path).open(encoding="utf-8") as handle:
            script = json.load(handle)
        return cls(responses=script.get("responses"), default=script.get("default"))

    def complete(self, prompt: str) -> str:
        self.calls += 1
        review = extract_review_from_prompt(prompt)
        scripted = self.responses.get(review)
        if isinstance(scripted, list):
            index = min(self._cursors.get(review, 0), len(scripted) - 1)
            self._cursors[review] = index + 1
            return scripted[index]
        if scripted is not None:
            return scripted
        if self.default is not None:
            return self.default
        return self.fallback(review)

    def probe(self) -> None:
        return None


class Checkpoint:
    """Append-only set of completed game ids, persisted one per line."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.completed: set[str] = set()
        if self.path.exists():
            self.completed = {
                line.strip()
                for line in self.path.read_text(encoding="utf-8").splitlines()
                if line.strip()
            }

    def __contains__(self, game_id: str) -> bool:
        return game_id in self.completed

    def mark(self, game_id: str) -> None:
        if game_id in self.completed:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(f"{game_id}\n")
            handle.flush()
            os.fsync(handle.fileno())
        self.completed.add(game_id)


def sanitize_review(text: str) -> tuple[str, DiscardReason | None]:
    """Strip control/format characters and surrounding whitespace.

    Returns (sanitized, None) or ("", reason). Symbol-only text passes
    through untouched: classifying it is the model's job, not ours.
    """
    try:
        text.encode("utf-8")
    except UnicodeEncodeError:
        return "", DiscardReason.INVALID_CHARACTERS
    cleaned = "".join(
        ch for ch in text if ch in "\n\t" or (ch.isprintable() or ch == " ")
    )
    cleaned = cleaned.strip()
    if not cleaned:
        return "", DiscardReason.EMPTY_AFTER_SANITIZE
    return cleaned, None


def _escape_for_prompt(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _unescape_from_prompt(text: str) -> str:
    return text.replace('\\"', '"').replace("\\\\", "\\")


def build_prompt(review_text: str, format_instructions: str = "") -> str:
    """Render the conversion prompt with the review quoted and escaped."""
    return PROMPT_TEMPLATE.format(
        format_instructions=format_instructions,
        review=_escape_for_prompt(review_text),
    )


def extract_review_from_prompt(prompt: str) -> str:
    """Recover the raw review text from a rendered prompt (mock clients use this)."""
    start = prompt.rfind(_REVIEW_MARKER)
    if start < 0:
        raise ValueError("prompt does not contain the review marker")
    tail = prompt[start + len(_REVIEW_MARKER):]
    end = tail.rfind('"')
    if end < 0:
        raise ValueError("prompt review slot is not closed")
    return _unescape_from_prompt(tail[:end])


class LlmParseFailure(Exception):
    pass


_FENCE_RE = re.compile(r"^\s*```[a-zA-Z]*\s*(.*?)\s*```\s*$", re.DOTALL)


def _extract_single_object(raw: str) -> str:
    """Return the one balanced {...} span, rejecting any other content."""
    text = raw
    fenced = _FENCE_RE.match(text)
    if fenced:
        text = fenced.group(1)
    start = text.find("{")
    if start < 0:
        raise LlmParseFailure("no JSON object in completion")
    if text[:start].strip():
        raise LlmParseFailure("unexpected content before JSON object")
    depth = 0
    in_string = False
    escaped = False
    end = -1
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                end = i
                break
    if end < 0:
        raise LlmParseFailure("unbalanced JSON object")
    if text[end + 1:].strip():
        raise LlmParseFailure("unexpected content after JSON object")
    return text[start : end + 1]


def parse_llm_response(raw: str) -> ReviewScores:
    """Parse a completion into validated scores.

    Raises LlmParseFailure when there is no single clean JSON object, and
    SchemaValidationError (naming the field) when the object is out of spec.
    """
    span = _extract_single_object(raw)
    try:
        data = json.loads(span)
    except json.JSONDecodeError as exc:
        raise LlmParseFailure(f"invalid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise LlmParseFailure("completion JSON is not an object")
    return validate_review_scores(data)


def serialize_scores(scores: ReviewScores) -> str:
    """Canonical single-line JSON for a scores record (key order fixed)."""
    return json.dumps(scores.to_dict(), separators=(",", ":"))


def quantify_review(
    review: RawReview,
    cfg: QuantifierConfig,
    client: CompletionClient,
    format_instructions: str = "",
) -> QuantifyOutcome:
    """Sanitize, prompt, parse, validate; retry the identical prompt on failure.

    Never raises past this boundary: every failure mode becomes a discard.
    """
    sanitized, discard = sanitize_review(review.text)
    if discard is not None:
        return QuantifyOutcome(review.review_id, reason=discard, text=review.text)
    prompt = build_prompt(sanitized, format_instructions)
    failure = DiscardReason.LLM_PARSE_FAILURE
    for _attempt in range(cfg.max_retries + 1):
        try:
            completion = client.complete(prompt)
        except TransportFailure as exc:
            logger.warning("review %s: transport failure: %s", review.review_id, exc)
            failure = DiscardReason.TIMEOUT
            continue
        except Exception as exc:  # defensive: clients should only raise TransportFailure
            logger.error("review %s: unexpected client error: %s", review.review_id, exc)
            failure = DiscardReason.TIMEOUT
            continue
        try:
            scores = parse_llm_response(completion)
            return QuantifyOutcome(review.review_id, scores=scores, text=review.text)
        except LlmParseFailure as exc:
            logger.warning("review %s: %s", review.review_id, exc)
            failure = DiscardReason.LLM_PARSE_FAILURE
        except SchemaValidationError as exc:
            logger.warning("review %s: field %s invalid: %s", review.review_id, exc.field, exc)
            failure = DiscardReason.VALIDATION_FAILURE
    return QuantifyOutcome(review.review_id, reason=failure, text=review.text)


@dataclass
class GameQuantifyResult:
    game_id: str
    quantified_path: Path | None
    discarded_path: Path | None
    attempted: int
    quantified: int
    discarded: int
    skipped: bool = False


def quantify_game(
    game_id: str,
    reviews: Sequence[RawReview],
    cfg: QuantifierConfig,
    client: CompletionClient,
    checkpoint: Checkpoint,
    out_dir: str | Path,
    format_instructions: str = "",
) -> GameQuantifyResult:
    """Quantify the top-N reviews of one game into per-game CSV files.

    Output row order is input rank order regardless of completion order, so
    runs are reproducible at any concurrency. The checkpoint is marked only
    after both files are fully written.
    """
    out_dir = Path(out_dir)
    if game_id in checkpoint:
        return GameQuantifyResult(game_id, None, None, 0, 0, 0, skipped=True)

    batch = sorted(reviews, key=lambda r: r.rating_rank)[: cfg.top_n_reviews]

    if cfg.concurrency > 1 and len(batch) > 1:
        with ThreadPoolExecutor(max_workers=cfg.concurrency) as pool:
            outcomes = list(
                pool.map(lambda r: quantify_review(r, cfg, client, format_instructions), batch)
            )
    else:
        outcomes = [quantify_review(r, cfg, client, format_instructions) for r in batch]

    out_dir.mkdir(parents=True, exist_ok=True)
    quantified_path = out_dir / f"{game_id}_quantified.csv"
    discarded_path = out_dir / f"{game_id}_discarded.csv"
    quantified = discarded = 0
    with quantified_path.open("w", newline="", encoding="utf-8") as qf, discarded_path.open(
        "w", newline="", encoding="utf-8"
    ) as df:
        qwriter = csv.writer(qf, lineterminator="\n")
        dwriter = csv.writer(df, lineterminator="\n")
        qwriter.writerow(QUANTIFIED_HEADER)
        dwriter.writerow(DISCARDED_HEADER)
        for outcome in outcomes:
            if outcome.scores is not None:
                qwriter.writerow(
                    [outcome.review_id] + [outcome.scores.to_dict()[k] for k in REVIEW_FIELD_ORDER]
                )
                quantified += 1
            else:
                dwriter.writerow([outcome.review_id, outcome.reason.value, outcome.text])
                discarded += 1
    checkpoint.mark(game_id)
    return GameQuantifyResult(
        game_id, quantified_path, discarded_path, len(batch), quantified, discarded
    )


def read_quantified_csv(path: str | Path) -> list[tuple[str, ReviewScores]]:
    """Load a quantified file, re-validating every row against the schema."""
    rows: list[tuple[str, ReviewScores]] = []
    with Path(path).open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing = [c for c in QUANTIFIED_HEADER if c not in header]
        if missing:
            raise SchemaValidationError(missing[0], f"{path}: missing column {missing[0]!r}")
        for row in reader:
            raw = {name: int(row[name]) for name in REVIEW_FIELD_ORDER}
            rows.append((row["review_id"], validate_review_scores(raw)))
    return rows


# --- deterministic rule-based quantifier (test oracle, not a model) ---------

_POSITIVE_WORDS = frozenset(
    "amazing awesome great excellent fantastic love loved fun masterpiece perfect "
    "wonderful brilliant enjoyable addictive recommend recommended".split()
)
_NEGATIVE_WORDS = frozenset(
    "terrible awful bad boring broken refund trash waste worst hate hated "
    "disappointing unplayable mediocre".split()
)
_NEGATED_RECOMMEND_RE = re.compile(
    r"\b(?:not|don'?t|do not|wouldn'?t|would not|can'?t|cannot)\s+recommend", re.IGNORECASE
)
_BUG_WORDS = frozenset("bug bugs buggy crash crashes crashed glitch glitches glitchy".split())
_SUGGESTION_RE = re.compile(r"\b(?:should add|please add|would be better if|i wish)\b", re.IGNORECASE)
_VIDEO_RE = re.compile(r"(?:youtube\.com|youtu\.be|\bvideo review\b)", re.IGNORECASE)
_WORD_RE = re.compile(r"[a-zA-Z']+")

_ELEMENT_KEYWORDS: dict[str, tuple[str, ...]] = {
    "Gameplay": ("gameplay", "mechanics"),
    "Graphics": ("graphics", "visuals"),
    "Difficulty": ("difficulty", "challenge"),
    "Story": ("story", "narrative", "plot"),
    "Audio": ("audio", "sound", "music", "soundtrack"),
    "Avatar_Customization": ("customization", "avatar"),
    "Controls": ("controls", "input"),
    "Monetization_Model": ("monetization", "microtransactions", "pricing"),
    "Replayability": ("replayability", "replay value"),
    "Community": ("community",),
    "Multiplayer": ("multiplayer", "co-op"),
    "Spatial_Presence": ("immersion", "presence", "immersive"),
}

_RATIO_RE = r"(\d{1,3}(?:\.\d+)?)\s*/\s*(\d{1,3})"


def _detect_language(text: str) -> int:
    """Crude script/diacritic heuristics; deterministic, not linguistics."""
    if any("぀" <= ch <= "ヿ" for ch in text):
        return 7  # kana -> Japanese
    if any("一" <= ch <= "鿿" for ch in text):
        return 1  # CJK ideographs -> Chinese
    if any("Ѐ" <= ch <= "ӿ" for ch in text):
        return 3  # Cyrillic -> Russian
    lowered = text.casefold()
    if any(ch in lowered for ch in "ąęłńśźż"):
        return 9  # Polish
    if any(ch in lowered for ch in "ğış") or "İ" in text:
        return 10  # Turkish
    if any(ch in lowered for ch in "äöüß"):
        return 6  # German
    if any(ch in text for ch in "¿¡ñ"):
        return 4  # Spanish
    if any(ch in lowered for ch in "ãõ"):
        return 5  # Portuguese
    if any(ch in lowered for ch in "œèêâîôûëï"):
        return 8  # French
    if _WORD_RE.search(text):
        return 2  # plain Latin words -> English
    return LANGUAGE_OTHER


def rule_based_quantifier(text: str) -> ReviewScores:
    """Deterministic keyword/pattern extraction standing in for the model.

    Exists so plumbing, conservation, and aggregation logic are testable
    hermetically; it makes no attempt to rival a real language model.
    """
    values = {name: 0 for name in REVIEW_FIELD_ORDER}
    values["Language"] = _detect_language(text)

    words = {w.casefold() for w in _WORD_RE.findall(text)}
    positives = len(words & _POSITIVE_WORDS)
    negatives = len(words & _NEGATIVE_WORDS)
    if _NEGATED_RECOMMEND_RE.search(text):
        positives = max(0, positives - 1)
        negatives += 1
    if positives:
        values["Is_Pro"] = 1
    if negatives:
        values["Is_Con"] = 1
    values["Recommended"] = 1 if positives > negatives else 0

    if words & _BUG_WORDS:
        values["Is_Bug"] = 1
    if _SUGGESTION_RE.search(text):
        values["Is_Suggestion"] = 1
    if _VIDEO_RE.search(text):
        values["Is_Video"] = 1

    for element in DESIGN_ELEMENTS:
        for keyword in _ELEMENT_KEYWORDS[element]:
            pattern = re.compile(
                re.escape(keyword) + r"\b[^/.]{0,40}?" + _RATIO_RE, re.IGNORECASE
            )
            match = pattern.search(text)
            if match:
                numerator, denominator = float(match.group(1)), int(match.group(2))
                if denominator > 0 and 0 <= numerator <= denominator:
                    values[element] = normalize_explicit_rating(numerator, denominator)
                    break

    informative = any(values[e] for e in DESIGN_ELEMENTS) or values["Is_Bug"] or values["Is_Suggestion"]
    if informative and len(_WORD_RE.findall(text)) >= 10:
        values["Is_Helpful"] = 1

    return validate_review_scores(values)
