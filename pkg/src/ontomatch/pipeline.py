"""End-to-end alignment: exact-match pre-pass, candidate scoring,
threshold + greedy one-to-one matching, and P/R/F1 evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .blocking import DEFAULT_K, CandidateIndex
from .errors import ValidationError
from .features import PairFeaturizer
from .kb import Alignment, Entity, Ontology, ReferenceAlignment
from .lr import LogisticRegressionMatcher
from .scorer import NeuralMatcher


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    true_positives: int
    predicted: int
    gold: int

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "true_positives": self.true_positives,
            "predicted": self.predicted,
            "gold": self.gold,
        }


@dataclass
class AlignConfig:
    k: int = DEFAULT_K
    threshold: float = 0.5
    one_to_one: bool = True

    def __post_init__(self):
        if not 0.0 < self.threshold <= 1.0:
            raise ValidationError(f"threshold must be in (0, 1], got {self.threshold}")
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")


def exact_match_prepass(
    source: Ontology, target: Ontology
) -> tuple[list[Alignment], set[str]]:
    """Align pairs whose lowercased name/alias string sets intersect.

    Matched pairs score 1.0 with exact_match provenance; the pre-pass is
    not one-to-one (a source aligns to every string-matching target).
    Returns the alignments and the ids of still-unmatched source entities.
    """
    surface_to_targets: dict[str, list[str]] = {}
    for entity in target:
        for s in entity.surface_strings():
            surface_to_targets.setdefault(s, []).append(entity.id)
    alignments = []
    remaining = set()
    for entity in source:
        matched: set[str] = set()
        for s in entity.surface_strings():
            matched.update(surface_to_targets.get(s, ()))
        if matched:
            for target_id in sorted(matched):
                alignments.append(Alignment(entity.id, target_id, 1.0, "exact_match"))
        else:
            remaining.add(entity.id)
    return alignments, remaining


def score_pairs(model, pairs: list[tuple[Entity, Entity]]) -> np.ndarray:
    """Match probabilities from either matcher kind."""
    if isinstance(model, NeuralMatcher):
        return model.predict_proba(pairs)[:, 1]
    if isinstance(model, LogisticRegressionMatcher):
        features = PairFeaturizer().transform(pairs)
        return model.predict_proba(features)[:, 1]
    raise ValidationError(f"unsupported model type: {type(model).__name__}")


def align(
    source: Ontology,
    target: Ontology,
    model,
    config: AlignConfig | None = None,
) -> list[Alignment]:
    """Full alignment of two ontologies with a trained matcher."""
    config = config or AlignConfig()
    prepass, remaining = exact_match_prepass(source, target)
    matched_targets = {a.target_id for a in prepass}

    index = CandidateIndex.build(target, k_default=config.k)
    pairs: list[tuple[Entity, Entity]] = []
    for entity in source:
        if entity.id not in remaining:
            continue
        for target_id, _ in index.select(entity, config.k).candidates:
            if target_id in matched_targets:
                continue
            pairs.append((entity, target[target_id]))

    model_alignments: list[Alignment] = []
    if pairs:
        probs = score_pairs(model, pairs)
        kept = [
            (float(p), e_s.id, e_t.id)
            for (e_s, e_t), p in zip(pairs, probs)
            if p >= config.threshold
        ]
        kept.sort(key=lambda item: (-item[0], item[1], item[2]))
        if config.one_to_one:
            used_sources: set[str] = set()
            used_targets: set[str] = set()
            for p, source_id, target_id in kept:
                if source_id in used_sources or target_id in used_targets:
                    continue
                used_sources.add(source_id)
                used_targets.add(target_id)
                model_alignments.append(Alignment(source_id, target_id, p, "model"))
        else:
            model_alignments = [
                Alignment(source_id, target_id, p, "model")
                for p, source_id, target_id in kept
            ]
    combined = prepass + model_alignments
    combined.sort(key=lambda a: (a.source_id, -a.score, a.target_id))
    return combined


def evaluate(predicted: list[Alignment], reference: ReferenceAlignment) -> Metrics:
    """Precision/recall/F1 of predicted pairs against gold positives."""
    predicted_pairs = {(a.source_id, a.target_id) for a in predicted}
    gold = reference.positives
    true_positives = len(predicted_pairs & gold)
    precision = true_positives / len(predicted_pairs) if predicted_pairs else 0.0
    recall = true_positives / len(gold) if gold else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return Metrics(
        precision=precision,
        recall=recall,
        f1=f1,
        true_positives=true_positives,
        predicted=len(predicted_pairs),
        gold=len(gold),
    )
