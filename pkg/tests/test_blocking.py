import math
import random

import pytest

from ontomatch.blocking import CandidateIndex, entity_tokens, tokenize
from ontomatch.errors import ValidationError
from ontomatch.kb import Entity, Ontology


def brute_force_ranking(source: Entity, target: Ontology, index: CandidateIndex):
    """Independent idf_total scoring of every target entity.

    Scans full documents pair by pair; shares nothing with the inverted
    index path except the idf definition.
    """
    source_tokens = entity_tokens(source)
    scored = []
    for entity in target:
        shared = sorted(source_tokens & entity_tokens(entity))
        if not shared:
            continue
        total = 0.0
        for token in shared:
            df = sum(1 for e in target if token in entity_tokens(e))
            total += math.log(len(target) / df)
        scored.append((entity.id, total))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored


def make_ontology(*specs) -> Ontology:
    entities = []
    for i, spec in enumerate(specs):
        if isinstance(spec, str):
            spec = {"name": spec}
        entities.append(
            Entity(
                id=spec.get("id", f"T{i}"),
                name=spec["name"],
                aliases=tuple(spec.get("aliases", ())),
                definition=spec.get("definition"),
            )
        )
    return Ontology.from_entities(entities)


class TestTokenize:
    def test_basic_words(self):
        assert tokenize("Carpal Tunnel Syndrome") == ["carpal", "tunnel", "syndrome"]

    def test_empty(self):
        assert tokenize("") == []

    def test_hyphen_splits_digits_kept(self):
        assert tokenize("atrophin-1 protein") == ["atrophin", "1", "protein"]

    def test_underscore_splits(self):
        assert tokenize("foo_bar") == ["foo", "bar"]


class TestBuildIndex:
    def test_single_doc_postings(self):
        index = CandidateIndex.build(make_ontology("x y"))
        assert index.postings == {"x": [0], "y": [0]}
        assert index.n_docs == 1

    def test_df_counts(self):
        index = CandidateIndex.build(make_ontology("x", "x"))
        assert index.df["x"] == 2

    def test_document_includes_aliases_and_definition(self):
        index = CandidateIndex.build(
            make_ontology({"name": "x", "aliases": ["y z"], "definition": "w."})
        )
        assert set(index.postings) == {"x", "y", "z", "w"}

    def test_four_entity_fixture_df_by_hand(self):
        onto = make_ontology("a b", "a c", "a b c", "d")
        index = CandidateIndex.build(onto)
        assert index.df == {"a": 3, "b": 2, "c": 2, "d": 1}
        for token, posting in index.postings.items():
            assert posting == sorted(posting)
            assert len(posting) == index.df[token]

    def test_empty_ontology_rejected(self):
        with pytest.raises(ValidationError):
            CandidateIndex.build(Ontology.from_entities([]))


class TestIdf:
    def test_rare_token(self):
        index = CandidateIndex.build(make_ontology("a b", "a c", "a b c", "d"))
        assert index.idf("d") == pytest.approx(math.log(4), abs=1e-12)

    def test_token_in_half_of_docs(self):
        index = CandidateIndex.build(make_ontology("a b", "a c", "a b c", "d"))
        assert index.idf("b") == pytest.approx(math.log(2), abs=1e-12)

    def test_token_in_all_docs_zero(self):
        index = CandidateIndex.build(make_ontology("a x", "a y", "a z", "a w"))
        assert index.idf("a") == 0.0


class TestSelectCandidates:
    def test_no_shared_tokens_empty(self):
        index = CandidateIndex.build(make_ontology("a b", "c d"))
        result = index.select(Entity(id="S", name="zzz qqq"), k=5)
        assert result.candidates == ()

    def test_self_retrieval(self):
        onto = make_ontology("alpha beta", "gamma", "delta epsilon")
        index = CandidateIndex.build(onto)
        twin = Entity(id="S", name="alpha beta")
        result = index.select(twin, k=1)
        assert len(result.candidates) == 1
        target_id, total = result.candidates[0]
        assert target_id == "T0"
        expected = math.log(3) + math.log(3)
        assert total == pytest.approx(expected, abs=1e-12)

    def test_top2_matches_brute_force(self):
        onto = make_ontology("a b", "a c", "a b c", "d e")
        index = CandidateIndex.build(onto)
        source = Entity(id="S", name="a b d")
        expected = brute_force_ranking(source, onto, index)[:2]
        got = list(index.select(source, k=2).candidates)
        assert [(i, pytest.approx(s)) for i, s in expected] == got

    def test_k_must_be_positive(self):
        index = CandidateIndex.build(make_ontology("a"))
        with pytest.raises(ValidationError):
            index.select(Entity(id="S", name="a"), k=0)


def random_entity(rng: random.Random, vocab, prefix, i) -> Entity:
    name = " ".join(rng.choices(vocab, k=rng.randrange(1, 4)))
    aliases = tuple(
        " ".join(rng.choices(vocab, k=rng.randrange(1, 3)))
        for _ in range(rng.randrange(0, 3))
    )
    definition = (
        " ".join(rng.choices(vocab, k=rng.randrange(2, 6)))
        if rng.random() < 0.5
        else None
    )
    return Entity(id=f"{prefix}{i}", name=name, aliases=aliases, definition=definition)


class TestProperties:
    def test_oracle_equivalence_random(self):
        rng = random.Random(101)
        vocab = [f"w{i}" for i in range(30)]
        for _ in range(10):
            targets = Ontology.from_entities(
                random_entity(rng, vocab, "T", i) for i in range(rng.randrange(2, 40))
            )
            index = CandidateIndex.build(targets)
            source = random_entity(rng, vocab, "S", 0)
            expected = brute_force_ranking(source, targets, index)
            got = list(index.select(source, k=len(targets)).candidates)
            assert [i for i, _ in got] == [i for i, _ in expected]
            for (_, a), (_, b) in zip(got, expected):
                assert a == pytest.approx(b, abs=1e-12)

    def test_recall_any_shared_token_is_retrieved(self):
        rng = random.Random(55)
        vocab = [f"w{i}" for i in range(12)]
        targets = Ontology.from_entities(
            random_entity(rng, vocab, "T", i) for i in range(25)
        )
        index = CandidateIndex.build(targets)
        for trial in range(20):
            source = random_entity(rng, vocab, "S", trial)
            retrieved = set(index.select(source, k=len(targets)).ids())
            for entity in targets:
                if entity_tokens(source) & entity_tokens(entity):
                    assert entity.id in retrieved

    def test_smaller_k_is_prefix_of_larger(self):
        rng = random.Random(77)
        vocab = [f"w{i}" for i in range(10)]
        targets = Ontology.from_entities(
            random_entity(rng, vocab, "T", i) for i in range(30)
        )
        index = CandidateIndex.build(targets)
        source = random_entity(rng, vocab, "S", 0)
        full = index.select(source, k=30).candidates
        for k in (1, 3, 7, 15):
            assert index.select(source, k=k).candidates == full[:k]

    def test_duplicate_tokens_do_not_change_score(self):
        targets = make_ontology("a b c")
        index = CandidateIndex.build(targets)
        once = Entity(id="S1", name="a b")
        repeated = Entity(id="S2", name="a a b", aliases=("b a",))
        score_once = index.select(once, k=1).candidates[0][1]
        score_rep = index.select(repeated, k=1).candidates[0][1]
        assert score_once == score_rep
