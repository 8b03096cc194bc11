"""Synthetic aligned-ontology benchmark generator.

Builds a clean ontology and a corrupted copy with a known gold mapping.
Corruption mirrors the messiness of real ontology pairs: synonym swaps
drawn from a generated thesaurus, token shuffles, alias dropout, and
sparse definitions/contexts (present for configurable fractions of
entities). Also emits the side artifacts a full run needs: per-side
context corpora, a definition fixture covering the corrupted side's
names, and a token corpus for training word vectors.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .enrich import ContextCorpus
from .kb import DefinitionOrigin, Entity, Ontology, ReferenceAlignment

CONSONANTS = "bcdfglmnprstvz"
VOWELS = "aeiou"

COMMON_TOKENS = (
    "syndrome", "disease", "disorder", "deficiency", "acute", "chronic",
    "type", "familial", "primary", "receptor", "factor", "complex",
)


def _word(rng: random.Random, syllables: int) -> str:
    return "".join(
        rng.choice(CONSONANTS) + rng.choice(VOWELS) for _ in range(syllables)
    )


@dataclass(frozen=True)
class SyntheticBenchmark:
    source: Ontology
    target: Ontology
    reference: ReferenceAlignment
    source_contexts: ContextCorpus
    target_contexts: ContextCorpus
    definition_fixture: dict[str, str]
    corpus_sentences: list[list[str]]


def _make_synsets(rng: random.Random, count: int, size: int = 3) -> list[list[str]]:
    synsets = []
    seen = set()
    while len(synsets) < count:
        group = []
        while len(group) < size:
            token = _word(rng, rng.randint(2, 4))
            if token not in seen:
                seen.add(token)
                group.append(token)
        synsets.append(group)
    return synsets


def _categories(rng: random.Random, count: int = 10, size: int = 4) -> list[list[str]]:
    cats = []
    seen = set()
    while len(cats) < count:
        group = []
        while len(group) < size:
            token = _word(rng, rng.randint(2, 3))
            if token not in seen:
                seen.add(token)
                group.append(token)
        cats.append(group)
    return cats


def generate_benchmark(
    n_entities: int = 500,
    seed: int = 0,
    definition_fraction: float = 0.5,
    context_fraction: float = 0.3,
    synonym_swap_prob: float = 0.5,
    shuffle_prob: float = 0.3,
    alias_keep_prob: float = 0.25,
    strip_target_definitions: bool = False,
    inline_contexts: bool = True,
) -> SyntheticBenchmark:
    """Aligned pair of ontologies with a known gold mapping.

    With ``inline_contexts`` the sampled context sentences are attached to
    the entities themselves (the corpora still carry the full pools); turn
    it off to exercise context attachment as an enrichment step. With
    ``strip_target_definitions`` the corrupted side carries no definitions
    at all, restorable through the returned fixture.
    """
    rng = random.Random(seed)
    synsets = _make_synsets(rng, n_entities + 400)
    categories = _categories(rng)
    fillers = [_word(rng, rng.randint(1, 2)) for _ in range(30)]

    def corrupt_tokens(
        token_groups: list[tuple[str, int]],
        swap_prob: float | None = None,
        shuf_prob: float | None = None,
    ) -> list[str]:
        """Synonym-swap and maybe shuffle a (token, synset index) list."""
        swap_prob = synonym_swap_prob if swap_prob is None else swap_prob
        shuf_prob = shuffle_prob if shuf_prob is None else shuf_prob
        out = []
        for token, synset_idx in token_groups:
            if synset_idx >= 0 and rng.random() < swap_prob:
                options = [t for t in synsets[synset_idx] if t != token]
                token = rng.choice(options)
            out.append(token)
        if len(out) > 1 and rng.random() < shuf_prob:
            rng.shuffle(out)
        return out

    source_entities = []
    target_entities = []
    labels = {}
    source_ctx: dict[str, list[str]] = {}
    target_ctx: dict[str, list[str]] = {}
    fixture: dict[str, str] = {}
    corpus: list[list[str]] = []

    for i in range(n_entities):
        k = rng.randint(2, 3)
        picked = rng.sample(range(len(synsets)), k)
        groups = [(rng.choice(synsets[g]), g) for g in picked]
        if rng.random() < 0.65:
            groups.append((rng.choice(COMMON_TOKENS), -1))
        category = rng.choice(categories)

        name_a = " ".join(t for t, _ in groups)
        aliases_a = []
        for _ in range(rng.randint(1, 3)):
            # Aliases swap harder than names so the two sides rarely share
            # an exact surface string through them.
            variant = " ".join(corrupt_tokens(groups, swap_prob=0.8, shuf_prob=0.5))
            if variant.lower() != name_a.lower():
                aliases_a.append(variant)

        def_words = [
            "the", *(t for t, _ in groups), "is", "a", rng.choice(category),
            rng.choice(fillers), "that", "affects", "the",
            rng.choice(category), rng.choice(fillers),
        ]
        definition = " ".join(def_words) + ". " + " ".join(
            ["it", "involves", rng.choice(category), rng.choice(fillers)]
        ) + "."
        lead_sentence = definition.split(". ")[0] + "."

        ctx_pool = []
        for _ in range(rng.randint(3, 6)):
            mention = " ".join(corrupt_tokens(groups))
            ctx_pool.append(
                " ".join(
                    [mention, rng.choice(("causes", "shows", "links")),
                     rng.choice(category), rng.choice(fillers), "cases"]
                )
            )

        source_id, target_id = f"A{i:04d}", f"B{i:04d}"
        ctx_a: list[str] = []
        ctx_b: list[str] = []
        if rng.random() < context_fraction:
            source_ctx[source_id] = rng.sample(ctx_pool, rng.randint(1, 3))
            ctx_a = source_ctx[source_id]
        if rng.random() < context_fraction:
            target_ctx[target_id] = rng.sample(ctx_pool, rng.randint(1, 3))
            ctx_b = target_ctx[target_id]
        if not inline_contexts:
            ctx_a = []
            ctx_b = []

        has_def_a = rng.random() < definition_fraction
        source_entities.append(
            Entity(
                id=source_id,
                name=name_a,
                aliases=tuple(aliases_a),
                definition=definition if has_def_a else None,
                contexts=tuple(ctx_a),
                definition_source=(
                    DefinitionOrigin.NATIVE if has_def_a else DefinitionOrigin.NONE
                ),
            )
        )

        name_b = " ".join(corrupt_tokens(groups))
        aliases_b = [a for a in aliases_a if rng.random() < alias_keep_prob]
        for _ in range(rng.randint(0, 2)):
            variant = " ".join(corrupt_tokens(groups, swap_prob=0.8, shuf_prob=0.5))
            if variant.lower() != name_b.lower():
                aliases_b.append(variant)
        has_def_b = (not strip_target_definitions) and rng.random() < definition_fraction
        target_entities.append(
            Entity(
                id=target_id,
                name=name_b,
                aliases=tuple(aliases_b),
                definition=definition if has_def_b else None,
                contexts=tuple(ctx_b),
                definition_source=(
                    DefinitionOrigin.NATIVE if has_def_b else DefinitionOrigin.NONE
                ),
            )
        )
        labels[(source_id, target_id)] = 1
        fixture[name_b] = lead_sentence + " it is documented in the registry."

        corpus.append([t.lower() for t in def_words])
        corpus.extend([c.split() for c in ctx_pool])

    # Synonym co-occurrence sentences so trained vectors cluster synsets.
    for synset in synsets:
        shared = [rng.choice(fillers), rng.choice(fillers)]
        for _ in range(6):
            pair = rng.sample(synset, 2)
            corpus.append([shared[0], pair[0], pair[1], shared[1]])

    return SyntheticBenchmark(
        source=Ontology.from_entities(source_entities),
        target=Ontology.from_entities(target_entities),
        reference=ReferenceAlignment(labels=labels),
        source_contexts=ContextCorpus(source_ctx),
        target_contexts=ContextCorpus(target_ctx),
        definition_fixture=fixture,
        corpus_sentences=corpus,
    )
