"""Labeled-data derivation from a partial alignment table.

Positives are alignment-table pairs with no name equivalence (pairs whose
lowercased name/alias string sets intersect are dropped: the exact-match
pre-pass already handles them). Each positive gets one easy negative
(uniform over targets outside the positive set) and one hard negative
(top eligible entity from the candidate selector). Examples split
64/16/20 by seeded shuffle.

Labeled example file: UTF-8 TSV with columns source_id, target_id,
label, kind; no header.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from typing import IO, Iterable

from .blocking import CandidateIndex
from .errors import KbParseError, UnresolvableIdError, ValidationError
from .kb import Ontology, ReferenceAlignment, _iter_text_lines

logger = logging.getLogger(__name__)

SPLIT_FRACTIONS = (0.64, 0.16, 0.20)

KINDS = ("positive", "easy_negative", "hard_negative")


@dataclass(frozen=True)
class LabeledExample:
    source_id: str
    target_id: str
    label: int
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown example kind: {self.kind!r}")
        if (self.label == 1) != (self.kind == "positive"):
            raise ValidationError(
                f"label {self.label} inconsistent with kind {self.kind!r}"
            )


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[LabeledExample, ...]
    dev: tuple[LabeledExample, ...]
    test: tuple[LabeledExample, ...]
    seed: int


def name_equivalent(e_s, e_t) -> bool:
    """True when the entities share any lowercased name or alias string."""
    return bool(e_s.surface_strings() & e_t.surface_strings())


def extract_positives(
    table: ReferenceAlignment, source: Ontology, target: Ontology
) -> list[LabeledExample]:
    """Label-1 examples for table positives that pass the name filter."""
    positives = []
    for source_id, target_id in sorted(table.positives):
        if source_id not in source:
            raise UnresolvableIdError(source_id)
        if target_id not in target:
            raise UnresolvableIdError(target_id)
        if name_equivalent(source[source_id], target[target_id]):
            continue
        positives.append(LabeledExample(source_id, target_id, 1, "positive"))
    return positives


def sample_negatives(
    positives: list[LabeledExample],
    source: Ontology,
    target: Ontology,
    index: CandidateIndex,
    rng: random.Random,
) -> list[LabeledExample]:
    """One easy and one hard negative per positive, skipping on exhaustion.

    Targets appearing in any positive are never sampled; the hard negative
    is the highest-ranked remaining candidate and must differ from the
    easy pick. Skips are logged, not raised.
    """
    positive_targets = {p.target_id for p in positives}
    eligible = sorted(t.id for t in target if t.id not in positive_targets)
    negatives = []
    for positive in positives:
        easy_id = None
        if eligible:
            easy_id = rng.choice(eligible)
            negatives.append(
                LabeledExample(positive.source_id, easy_id, 0, "easy_negative")
            )
        else:
            logger.warning(
                "no easy negative for %s: all targets appear in positives",
                positive.source_id,
            )
        hard_id = None
        candidates = index.select(source[positive.source_id], index.k_default)
        for candidate_id, _ in candidates.candidates:
            if candidate_id not in positive_targets and candidate_id != easy_id:
                hard_id = candidate_id
                break
        if hard_id is not None:
            negatives.append(
                LabeledExample(positive.source_id, hard_id, 0, "hard_negative")
            )
        else:
            logger.warning(
                "no hard negative for %s: candidate list exhausted",
                positive.source_id,
            )
    return negatives


def split(examples: list[LabeledExample], seed: int) -> DatasetSplit:
    """Seeded shuffle then 64/16/20 prefix slicing."""
    shuffled = list(examples)
    random.Random(seed).shuffle(shuffled)
    n = len(shuffled)
    cut1 = int(SPLIT_FRACTIONS[0] * n)
    cut2 = int((SPLIT_FRACTIONS[0] + SPLIT_FRACTIONS[1]) * n)
    return DatasetSplit(
        train=tuple(shuffled[:cut1]),
        dev=tuple(shuffled[cut1:cut2]),
        test=tuple(shuffled[cut2:]),
        seed=seed,
    )


def derive_examples(
    table: ReferenceAlignment,
    source: Ontology,
    target: Ontology,
    seed: int,
    k: int | None = None,
) -> list[LabeledExample]:
    """Full derivation: positives, then seeded negative sampling."""
    index = CandidateIndex.build(target) if k is None else CandidateIndex.build(target, k)
    positives = extract_positives(table, source, target)
    negatives = sample_negatives(positives, source, target, index, random.Random(seed))
    return positives + negatives


def write_examples(examples: Iterable[LabeledExample], stream: IO[str]) -> None:
    for ex in examples:
        stream.write(f"{ex.source_id}\t{ex.target_id}\t{ex.label}\t{ex.kind}\n")


def read_examples(stream: IO) -> list[LabeledExample]:
    examples = []
    for lineno, line in enumerate(_iter_text_lines(stream), start=1):
        if not line.strip():
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 4:
            raise KbParseError(f"expected 4 TSV columns, got {len(parts)}", line=lineno)
        source_id, target_id, label_text, kind = parts
        if label_text not in ("0", "1"):
            raise KbParseError(f"label must be 0 or 1, got {label_text!r}", line=lineno)
        try:
            examples.append(LabeledExample(source_id, target_id, int(label_text), kind))
        except ValidationError as exc:
            raise KbParseError(str(exc), line=lineno) from exc
    return examples


def save_examples(examples: Iterable[LabeledExample], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_examples(examples, fh)


def load_examples(path) -> list[LabeledExample]:
    with open(path, "rb") as fh:
        return read_examples(fh)
