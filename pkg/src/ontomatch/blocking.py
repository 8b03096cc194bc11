"""Idf-weighted candidate selection over an inverted token index.

The index treats each target entity as the set union of tokens from its
name, aliases, and definition. For a source entity, candidates are the
target entities with the highest summed idf over shared tokens.
"""

from __future__ import annotations

import heapq
import math
import re
from dataclasses import dataclass, field

from .errors import ValidationError
from .kb import Entity, Ontology

DEFAULT_K = 50

_TOKEN_RE = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercased maximal runs of Unicode letters and digits, in order."""
    return _TOKEN_RE.findall(text.lower())


def entity_tokens(entity: Entity) -> set[str]:
    """Token set of an entity document: name, every alias, definition."""
    tokens = set(tokenize(entity.name))
    for alias in entity.aliases:
        tokens.update(tokenize(alias))
    if entity.definition is not None:
        tokens.update(tokenize(entity.definition))
    return tokens


@dataclass(frozen=True)
class CandidateList:
    source_id: str
    candidates: tuple[tuple[str, float], ...]  # (target_id, idf_total), score desc

    def ids(self) -> list[str]:
        return [target_id for target_id, _ in self.candidates]


@dataclass
class CandidateIndex:
    """Inverted index token -> target entity positions, with df counts."""

    target: Ontology
    postings: dict[str, list[int]] = field(default_factory=dict)
    df: dict[str, int] = field(default_factory=dict)
    n_docs: int = 0
    k_default: int = DEFAULT_K

    @classmethod
    def build(cls, target: Ontology, k_default: int = DEFAULT_K) -> "CandidateIndex":
        if len(target) == 0:
            raise ValidationError("cannot index an empty ontology")
        index = cls(target=target, n_docs=len(target), k_default=k_default)
        for pos, entity in enumerate(target):
            for token in entity_tokens(entity):
                index.postings.setdefault(token, []).append(pos)
        index.df = {token: len(posting) for token, posting in index.postings.items()}
        return index

    def idf(self, token: str) -> float:
        """ln(n_docs / df); callers must only pass indexed tokens."""
        return math.log(self.n_docs / self.df[token])

    def select(self, source: Entity, k: int | None = None) -> CandidateList:
        """Top-k target entities by summed idf of shared tokens.

        Shared tokens are counted once each (set semantics). Ties are broken
        by ascending target id; targets sharing no token are excluded.
        """
        if k is None:
            k = self.k_default
        if k < 1:
            raise ValidationError(f"k must be >= 1, got {k}")
        scores: dict[int, float] = {}
        # Iterate tokens in sorted order so each target accumulates its sum
        # in a canonical order (keeps ranking reproducible bit-for-bit).
        for token in sorted(entity_tokens(source)):
            posting = self.postings.get(token)
            if posting is None:
                continue
            idf = self.idf(token)
            for pos in posting:
                scores[pos] = scores.get(pos, 0.0) + idf
        entities = self.target.entities
        ranked = heapq.nsmallest(
            k,
            ((-total, entities[pos].id) for pos, total in scores.items()),
        )
        return CandidateList(
            source_id=source.id,
            candidates=tuple((target_id, -neg) for neg, target_id in ranked),
        )
