"""Regex labeling heuristic and silver-standard dataset assembly.

Rules live in data, not code: the built-in ruleset ships as a TSV
resource (see ``default_rules.tsv``) so users can substitute their own
reading of the keyword list. Each rule maps a pattern to one epidemic
class; the single case-sensitive rule matches the exact uppercase token
AIDS.
"""

from __future__ import annotations

import enum
import random
import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import NormalizedDocument
from .errors import (
    BalanceError,
    ConfigError,
    DataError,
    DuplicateTextError,
    InsufficientNegativesError,
    PatternError,
)

DEFAULT_RULES_RESOURCE = "default_rules.tsv"


class EpidemicClass(enum.IntEnum):
    """Ten epidemic classes plus the negative class.

    Declaration order fixes the class index used for tie-breaking and
    file formats; labels are the lowercase member names.
    """

    CHOLERA = 0
    EBOLA = 1
    FLU = 2
    H1N1 = 3
    HIV_AIDS = 4
    INFLUENZA = 5
    MERS = 6
    SARS = 7
    SWINE_FLU = 8
    YELLOW_FEVER = 9
    NON_EPIDEMIC = 10

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, token: str) -> "EpidemicClass":
        try:
            return cls[token.strip().upper()]
        except KeyError:
            raise ConfigError(f"unknown class label {token!r}") from None

    @classmethod
    def epidemic_members(cls) -> tuple["EpidemicClass", ...]:
        return tuple(m for m in cls if m is not cls.NON_EPIDEMIC)


@dataclass(frozen=True, slots=True)
class LabelRule:
    target: EpidemicClass
    pattern: str
    case_sensitive: bool
    priority: int


@dataclass(frozen=True)
class Ruleset:
    """Priority-ordered rules with their compiled patterns."""

    rules: tuple[LabelRule, ...]
    compiled: tuple[re.Pattern, ...]

    def __iter__(self):
        return iter(zip(self.rules, self.compiled))


def compile_ruleset(rules: Sequence[LabelRule]) -> Ruleset:
    """Validate and compile rules, sorted by ascending priority."""
    if not rules:
        raise ConfigError("ruleset is empty")
    priorities = [r.priority for r in rules]
    if len(set(priorities)) != len(priorities):
        dupes = sorted({p for p in priorities if priorities.count(p) > 1})
        raise ConfigError(f"duplicate rule priorities: {dupes}")
    ordered = tuple(sorted(rules, key=lambda r: r.priority))
    compiled = []
    for rule in ordered:
        flags = 0 if rule.case_sensitive else re.IGNORECASE
        try:
            compiled.append(re.compile(rule.pattern, flags))
        except re.error as exc:
            raise PatternError(
                f"rule {rule.target.label} (priority {rule.priority}) "
                f"does not compile: {exc}"
            ) from exc
    return Ruleset(rules=ordered, compiled=tuple(compiled))


def parse_ruleset_text(text: str, origin: str = "<string>") -> Ruleset:
    """Parse the tab-separated ruleset format.

    ``class <TAB> case_sensitive(0|1) <TAB> priority <TAB> pattern``
    with '#'-prefixed comment lines.
    """
    rules = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = line.split("\t", 3)
        if len(parts) != 4:
            raise ConfigError(
                f"{origin}:{lineno}: expected 4 tab-separated fields, got {len(parts)}"
            )
        cls_token, cs_token, prio_token, pattern = parts
        if cs_token not in ("0", "1"):
            raise ConfigError(f"{origin}:{lineno}: case_sensitive must be 0 or 1")
        try:
            priority = int(prio_token)
        except ValueError:
            raise ConfigError(f"{origin}:{lineno}: bad priority {prio_token!r}") from None
        rules.append(LabelRule(
            target=EpidemicClass.from_label(cls_token),
            pattern=pattern.strip(),
            case_sensitive=cs_token == "1",
            priority=priority,
        ))
    return compile_ruleset(rules)


def load_ruleset(path: str | Path) -> Ruleset:
    text = Path(path).read_text(encoding="utf-8")
    return parse_ruleset_text(text, origin=str(path))


_default_ruleset: Ruleset | None = None


def default_ruleset() -> Ruleset:
    """The built-in 11-rule set, loaded once from package data."""
    global _default_ruleset
    if _default_ruleset is None:
        text = (
            resources.files(__package__).joinpath(DEFAULT_RULES_RESOURCE)
            .read_text(encoding="utf-8")
        )
        _default_ruleset = parse_ruleset_text(text, origin=DEFAULT_RULES_RESOURCE)
    return _default_ruleset


def match_rules(ruleset: Ruleset, text: str) -> tuple[LabelRule, ...]:
    """All rules matching anywhere in text, in priority order."""
    return tuple(rule for rule, rx in ruleset if rx.search(text))


def match_classes(ruleset: Ruleset, text: str) -> set[EpidemicClass]:
    """Every epidemic class whose rule matches anywhere in text."""
    return {rule.target for rule in match_rules(ruleset, text)}


MULTI_MATCH_POLICIES = ("exclude", "priority")


def resolve_label(
    matched: Sequence[LabelRule], policy: str = "exclude"
) -> EpidemicClass | None:
    """Resolve matched rules to a single class or None.

    One distinct class wins outright. Several distinct classes resolve
    to the lowest-priority rule's class under "priority", or to None
    under "exclude" (the default, minimizing cross-class label noise).
    """
    if policy not in MULTI_MATCH_POLICIES:
        raise ConfigError(f"unknown multi-match policy {policy!r}")
    classes = {rule.target for rule in matched}
    if not classes:
        return None
    if len(classes) == 1:
        return next(iter(classes))
    if policy == "priority":
        return matched[0].target
    return None


def assign_label(
    ruleset: Ruleset, text: str, policy: str = "exclude"
) -> EpidemicClass | None:
    return resolve_label(match_rules(ruleset, text), policy)


@dataclass(frozen=True, slots=True)
class LabeledExample:
    id: str
    text: str
    label: EpidemicClass


def sample_negatives(
    stream: Iterable[NormalizedDocument],
    ruleset: Ruleset,
    n: int,
    seed: int,
) -> list[LabeledExample]:
    """Uniform reservoir sample of n documents matching no rule.

    Deterministic given (stream order, seed). Raises
    InsufficientNegativesError reporting the shortfall when fewer than
    n documents qualify.
    """
    if n < 0:
        raise ConfigError(f"negative sample size {n}")
    rng = random.Random(seed)
    reservoir: list[NormalizedDocument] = []
    qualifying = 0
    for doc in stream:
        if match_classes(ruleset, doc.text):
            continue
        if qualifying < n:
            reservoir.append(doc)
        else:
            j = rng.randrange(qualifying + 1)
            if j < n:
                reservoir[j] = doc
        qualifying += 1
    if qualifying < n:
        raise InsufficientNegativesError(n, qualifying)
    return [
        LabeledExample(id=d.id, text=d.text, label=EpidemicClass.NON_EPIDEMIC)
        for d in reservoir
    ]


@dataclass(frozen=True)
class SilverDataset:
    """Deduplicated labeled examples with per-class counts.

    Invariant: the NON_EPIDEMIC count equals the sum of the epidemic
    counts. ``from_counts`` builds a counts-only view (empty examples)
    for accounting at scales where materializing examples is pointless.
    """

    examples: tuple[LabeledExample, ...]
    class_counts: dict[EpidemicClass, int]
    seed: int = 0

    @property
    def total(self) -> int:
        return sum(self.class_counts.values())

    @classmethod
    def from_counts(
        cls, counts: Mapping[EpidemicClass, int], seed: int = 0
    ) -> "SilverDataset":
        for c, n in counts.items():
            if n < 0:
                raise DataError(f"negative count {n} for {c.label}")
        _check_balance(
            counts.get(EpidemicClass.NON_EPIDEMIC, 0),
            sum(n for c, n in counts.items() if c is not EpidemicClass.NON_EPIDEMIC),
        )
        return cls(examples=(), class_counts=dict(counts), seed=seed)


def _check_balance(n_negative: int, n_positive: int) -> None:
    if n_negative != n_positive:
        raise BalanceError(
            f"{n_negative} negatives != {n_positive} positives; the negative "
            "class must exactly balance the sum of the epidemic classes"
        )


def build_silver_dataset(
    positives: Mapping[EpidemicClass, Sequence[LabeledExample]],
    negatives: Sequence[LabeledExample],
    seed: int = 0,
) -> SilverDataset:
    """Assemble and validate a balanced silver-standard dataset.

    Rejects unbalanced counts, mislabeled examples and duplicate texts
    (including duplicates across classes).
    """
    for cls, examples in positives.items():
        if cls is EpidemicClass.NON_EPIDEMIC:
            raise ConfigError("positives must not include the non-epidemic class")
        for ex in examples:
            if ex.label is not cls:
                raise DataError(
                    f"example {ex.id} labeled {ex.label.label} under key {cls.label}"
                )
    for ex in negatives:
        if ex.label is not EpidemicClass.NON_EPIDEMIC:
            raise DataError(f"negative example {ex.id} labeled {ex.label.label}")
    n_positive = sum(len(v) for v in positives.values())
    _check_balance(len(negatives), n_positive)

    ordered: list[LabeledExample] = []
    counts: dict[EpidemicClass, int] = {}
    for cls in sorted(positives):
        ordered.extend(positives[cls])
        counts[cls] = len(positives[cls])
    ordered.extend(negatives)
    counts[EpidemicClass.NON_EPIDEMIC] = len(negatives)

    seen: set[str] = set()
    for ex in ordered:
        if ex.text in seen:
            raise DuplicateTextError(
                f"duplicate text in dataset (example {ex.id}): {ex.text[:60]!r}"
            )
        seen.add(ex.text)
    return SilverDataset(examples=tuple(ordered), class_counts=counts, seed=seed)


DATASET_HEADER = "id\tlabel\ttext"


def write_dataset_tsv(dataset: SilverDataset, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(DATASET_HEADER + "\n")
        for ex in dataset.examples:
            fh.write(f"{ex.id}\t{ex.label.label}\t{ex.text}\n")


def read_dataset_tsv(path: str | Path) -> list[LabeledExample]:
    examples = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != DATASET_HEADER:
            raise DataError(f"{path}: unexpected dataset header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 fields")
            tweet_id, label, text = parts
            examples.append(LabeledExample(
                id=tweet_id, text=text, label=EpidemicClass.from_label(label)
            ))
    return examples
