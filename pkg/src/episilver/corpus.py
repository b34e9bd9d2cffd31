"""Streaming tweet-archive ingestion: parse, filter, normalize, deduplicate.

Input is line-delimited JSON, optionally gzip-compressed, one tweet
object per line. Recognized fields: ``id_str``/``id``, ``full_text``/
``text``, ``lang``, and ``retweeted_status`` (presence only).
"""

from __future__ import annotations

import gzip
import json
import re
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

from .errors import ParseError, SchemaError

URL_PATTERN = re.compile(r"(?i)\b(?:https?://|www\.)\S+")

# The auditable definition of what counts as an emoji: symbol planes,
# misc symbols/dingbats, arrows, skin-tone modifiers (inside the first
# range, listed so the audit is explicit), variation selector 16 and
# the zero-width joiner used in emoji sequences.
EMOJI_RANGES: tuple[tuple[int, int], ...] = (
    (0x1F000, 0x1FAFF),
    (0x2600, 0x27BF),
    (0x2190, 0x21FF),
    (0x1F3FB, 0x1F3FF),
    (0xFE0F, 0xFE0F),
    (0x200D, 0x200D),
)

EMOJI_PATTERN = re.compile(
    "["
    + "".join(
        re.escape(chr(lo)) + (f"-{re.escape(chr(hi))}" if hi > lo else "")
        for lo, hi in EMOJI_RANGES
    )
    + "]"
)

# Western ASCII emoticons, removed only when they stand alone as a
# whitespace-delimited token.
EMOTICONS: frozenset[str] = frozenset({
    ":)", ":-)", ":))", ":D", ":-D", ":(", ":-(", ":((", ";)", ";-)",
    ":P", ":-P", ":p", ":-p", ";P", ";p", ":O", ":-O", ":o", ":3",
    ":/", ":-/", ":\\", ":-\\", ":|", ":-|", ":*", ":-*", "=)", "=(",
    "=D", "=P", "xD", "XD", "xd", "D:", "<3", "</3", "^_^", "-_-",
    "o_O", "O_o", "T_T", ";_;", ":'(", ":'-(", ":')", ":'-)",
})

_RT_PREFIX = "RT @"


@dataclass(frozen=True, slots=True)
class TweetRecord:
    """One parsed tweet. ``id`` is a non-empty decimal-digit string."""

    id: str
    text: str
    lang: str | None
    is_retweet: bool
    source_tag: str


@dataclass(frozen=True, slots=True)
class NormalizedDocument:
    id: str
    text: str


def _extract_id(obj: dict, source_tag: str) -> str:
    raw = obj.get("id_str")
    if raw is None:
        raw = obj.get("id")
    if isinstance(raw, bool) or raw is None:
        raise SchemaError(f"missing tweet id in {source_tag}")
    if isinstance(raw, int):
        if raw < 0:
            raise SchemaError(f"negative tweet id {raw} in {source_tag}")
        return str(raw)
    if isinstance(raw, str) and raw and raw.isascii() and raw.isdigit():
        return raw
    raise SchemaError(f"tweet id {raw!r} is not a digit string in {source_tag}")


def _extract_text(obj: dict, source_tag: str) -> str:
    # Long-form field wins; either field must be a non-empty string to count.
    for key in ("full_text", "text"):
        value = obj.get(key)
        if isinstance(value, str) and value:
            return value
    raise SchemaError(f"no usable text field in {source_tag}")


def parse_record(line: str, source_tag: str, *, byte_offset: int = 0) -> TweetRecord:
    """Parse one JSON line into a TweetRecord.

    Raises ParseError (with the byte offset of the failure) for invalid
    JSON and SchemaError for a missing id or missing text; both are
    recoverable, the caller is expected to skip and count them.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        offset = byte_offset + len(line[: exc.pos].encode("utf-8"))
        raise ParseError(f"malformed JSON in {source_tag}: {exc.msg}", offset) from exc
    if not isinstance(obj, dict):
        raise SchemaError(f"expected a JSON object in {source_tag}")
    tweet_id = _extract_id(obj, source_tag)
    text = _extract_text(obj, source_tag)
    lang = obj.get("lang")
    if not isinstance(lang, str):
        lang = None
    is_retweet = "retweeted_status" in obj or text.startswith(_RT_PREFIX)
    return TweetRecord(
        id=tweet_id, text=text, lang=lang, is_retweet=is_retweet,
        source_tag=source_tag,
    )


def filter_original(record: TweetRecord, require_lang: str | None = None) -> bool:
    """True for original (non-retweet) tweets in the required language.

    A record with no language tag passes the filter: public archives
    predate consistent lang tagging.
    """
    if record.is_retweet:
        return False
    if require_lang is None or record.lang is None:
        return True
    return record.lang == require_lang


def _normalize_pass(text: str) -> str:
    text = URL_PATTERN.sub(" ", text)
    text = EMOJI_PATTERN.sub("", text)
    tokens = [t for t in text.split() if t not in EMOTICONS]
    return " ".join(tokens)


def normalize_text(text: str) -> str:
    """Strip URLs, emoji codepoints and emoticon tokens; collapse whitespace.

    The pass order is URLs, then emoji, then emoticons, then whitespace
    collapse and trim. The pass repeats until stable: a removal can
    splice something new together (an emoji embedded inside a URL, an
    emoticon assembled from stripped emoji), and the output must carry
    none of the stripped constructs. Each changing pass strictly
    shortens the string, so the loop terminates. May return "".
    """
    out = _normalize_pass(text)
    while True:
        again = _normalize_pass(out)
        if again == out:
            return out
        out = again


def deduplicate(
    docs: Iterable[NormalizedDocument],
) -> tuple[list[NormalizedDocument], int]:
    """Keep the first occurrence of each distinct text, in input order.

    Returns (kept documents, number dropped).
    """
    seen: set[str] = set()
    kept: list[NormalizedDocument] = []
    dropped = 0
    for doc in docs:
        if doc.text in seen:
            dropped += 1
        else:
            seen.add(doc.text)
            kept.append(doc)
    return kept, dropped


@dataclass
class IngestStats:
    """Per-stage record accounting for one ingest run.

    Identities maintained:
      lines = parsed + parse_errors + schema_errors
      parsed = originals + retweets
      originals = lang_filtered + kept
      kept = empty_after_normalize + normalized
      normalized = duplicates_removed + documents
    """

    files: int = 0
    lines: int = 0
    parse_errors: int = 0
    schema_errors: int = 0
    parsed: int = 0
    retweets: int = 0
    originals: int = 0
    lang_filtered: int = 0
    kept: int = 0
    empty_after_normalize: int = 0
    normalized: int = 0
    duplicates_removed: int = 0
    documents: int = 0

    def merge(self, other: "IngestStats") -> None:
        for name in self.__dataclass_fields__:
            setattr(self, name, getattr(self, name) + getattr(other, name))

    def as_dict(self) -> dict:
        return asdict(self)


def _open_stream(path: str):
    if str(path).endswith(".gz"):
        return gzip.open(path, "rb")
    return open(path, "rb")


def parse_file(
    path: str, require_lang: str | None = None
) -> tuple[list[NormalizedDocument], IngestStats]:
    """Parse one archive file into normalized documents (not deduplicated)."""
    stats = IngestStats(files=1)
    docs: list[NormalizedDocument] = []
    offset = 0
    with _open_stream(path) as fh:
        for raw in fh:
            line_offset = offset
            offset += len(raw)
            if not raw.strip():
                continue
            stats.lines += 1
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError:
                stats.parse_errors += 1
                continue
            try:
                record = parse_record(line, str(path), byte_offset=line_offset)
            except ParseError:
                stats.parse_errors += 1
                continue
            except SchemaError:
                stats.schema_errors += 1
                continue
            stats.parsed += 1
            if record.is_retweet:
                stats.retweets += 1
                continue
            stats.originals += 1
            if not filter_original(record, require_lang):
                stats.lang_filtered += 1
                continue
            stats.kept += 1
            text = normalize_text(record.text)
            if not text:
                stats.empty_after_normalize += 1
                continue
            stats.normalized += 1
            docs.append(NormalizedDocument(id=record.id, text=text))
    return docs, stats


def ingest_files(
    paths: Sequence[str],
    require_lang: str | None = None,
    threads: int = 1,
) -> tuple[list[NormalizedDocument], IngestStats]:
    """Parse, filter, normalize and deduplicate a set of archive files.

    Files may be read in parallel, but results are merged in file order
    (then line order), so the output equals the sequential keep-first
    result regardless of thread count.
    """
    stats = IngestStats()
    if threads > 1 and len(paths) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda p: parse_file(p, require_lang), paths
            ))
    else:
        results = [parse_file(p, require_lang) for p in paths]
    merged: list[NormalizedDocument] = []
    for docs, file_stats in results:
        merged.extend(docs)
        stats.merge(file_stats)
    deduped, dropped = deduplicate(merged)
    stats.duplicates_removed = dropped
    stats.documents = len(deduped)
    return deduped, stats
