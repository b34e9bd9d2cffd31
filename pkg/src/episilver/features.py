"""TF-IDF features: tokenizer, fitted vocabulary and sparse document vectors.

idf uses the smoothed form ln((1+N)/(1+df)) + 1 and document vectors
are L2-normalized. Vocabulary order is lexicographic so fitting is
order-independent and shard-mergeable.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from collections import Counter
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import DataError, FitError


@dataclass(frozen=True, slots=True)
class TokenizerConfig:
    lowercase: bool = True
    min_token_len: int = 2


DEFAULT_TOKENIZER = TokenizerConfig()


@lru_cache(maxsize=8)
def _token_pattern(min_len: int) -> re.Pattern:
    return re.compile(rf"\w{{{min_len},}}")


def tokenize(text: str, config: TokenizerConfig = DEFAULT_TOKENIZER) -> list[str]:
    """Maximal runs of word characters of the configured minimum length."""
    if config.lowercase:
        text = text.lower()
    return _token_pattern(config.min_token_len).findall(text)


@dataclass(frozen=True, slots=True)
class SparseVector:
    """Entries strictly increasing by column index, no zero values.

    Non-empty transformed vectors carry unit Euclidean norm (checked by
    the property suite, not at construction, so deserialized and
    hand-built vectors are representable).
    """

    entries: tuple[tuple[int, float], ...]
    dim: int

    def __post_init__(self):
        last = -1
        for idx, value in self.entries:
            if idx <= last or idx >= self.dim:
                raise ValueError(f"entry index {idx} out of order or out of range")
            if value == 0.0:
                raise ValueError(f"zero-valued entry at index {idx}")
            last = idx

    def norm(self) -> float:
        return math.sqrt(sum(v * v for _, v in self.entries))


@dataclass
class TfIdfModel:
    vocabulary: dict[str, int]
    idf: np.ndarray
    doc_freq: np.ndarray
    doc_count: int
    config: TokenizerConfig

    @property
    def dim(self) -> int:
        return len(self.vocabulary)


def _smoothed_idf(doc_count: int, doc_freq: np.ndarray) -> np.ndarray:
    return np.log((1.0 + doc_count) / (1.0 + doc_freq)) + 1.0


def fit_tfidf(
    docs: Iterable[str],
    config: TokenizerConfig = DEFAULT_TOKENIZER,
    exclude: Callable[[str], bool] | None = None,
) -> TfIdfModel:
    """Fit vocabulary and idf weights over normalized texts.

    ``exclude`` drops matching tokens from the vocabulary before
    fitting (used to mask labeling-rule keywords); transform then
    ignores them as out-of-vocabulary.
    """
    df: Counter[str] = Counter()
    n_docs = 0
    for text in docs:
        n_docs += 1
        df.update(set(tokenize(text, config)))
    if exclude is not None:
        df = Counter({t: c for t, c in df.items() if not exclude(t)})
    if not df:
        raise FitError("no usable tokens in the fitted documents")
    vocabulary = {token: i for i, token in enumerate(sorted(df))}
    doc_freq = np.array([df[token] for token in vocabulary], dtype=np.float64)
    return TfIdfModel(
        vocabulary=vocabulary,
        idf=_smoothed_idf(n_docs, doc_freq),
        doc_freq=doc_freq,
        doc_count=n_docs,
        config=config,
    )


def transform(model: TfIdfModel, text: str) -> SparseVector:
    """Counts x idf, L2-normalized; out-of-vocabulary tokens ignored."""
    counts: Counter[int] = Counter()
    for token in tokenize(text, model.config):
        idx = model.vocabulary.get(token)
        if idx is not None:
            counts[idx] += 1
    if not counts:
        return SparseVector(entries=(), dim=model.dim)
    indices = sorted(counts)
    values = np.array([counts[i] * model.idf[i] for i in indices])
    values /= np.linalg.norm(values)
    return SparseVector(
        entries=tuple(zip(indices, values.tolist())), dim=model.dim
    )


def idf_checksum(model: TfIdfModel) -> str:
    """SHA-256 of the idf array bytes; persisted and trained against."""
    return hashlib.sha256(
        np.ascontiguousarray(model.idf, dtype="<f8").tobytes()
    ).hexdigest()


TFIDF_FORMAT_VERSION = 1


def save_tfidf(model: TfIdfModel, path: str | Path) -> None:
    doc = {
        "format_version": TFIDF_FORMAT_VERSION,
        "config": {
            "lowercase": model.config.lowercase,
            "min_token_len": model.config.min_token_len,
        },
        "doc_count": model.doc_count,
        "vocabulary": {
            token: [idx, int(model.doc_freq[idx])]
            for token, idx in model.vocabulary.items()
        },
        "idf_sha256": idf_checksum(model),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")


def load_tfidf(path: str | Path) -> TfIdfModel:
    """Load a persisted model; idf is recomputed and checksum-verified."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != TFIDF_FORMAT_VERSION:
        raise DataError(f"{path}: unsupported format version")
    vocabulary = {}
    doc_freq = np.zeros(len(doc["vocabulary"]), dtype=np.float64)
    for token, (idx, df) in doc["vocabulary"].items():
        vocabulary[token] = idx
        doc_freq[idx] = df
    config = TokenizerConfig(
        lowercase=doc["config"]["lowercase"],
        min_token_len=doc["config"]["min_token_len"],
    )
    model = TfIdfModel(
        vocabulary=vocabulary,
        idf=_smoothed_idf(doc["doc_count"], doc_freq),
        doc_freq=doc_freq,
        doc_count=doc["doc_count"],
        config=config,
    )
    if idf_checksum(model) != doc["idf_sha256"]:
        raise DataError(f"{path}: idf checksum mismatch")
    return model
