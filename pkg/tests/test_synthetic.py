from ontomatch.synthetic import generate_benchmark


class TestGenerator:
    def test_deterministic(self):
        a = generate_benchmark(n_entities=40, seed=9)
        b = generate_benchmark(n_entities=40, seed=9)
        assert a.source == b.source
        assert a.target == b.target
        assert a.reference == b.reference

    def test_gold_mapping_is_bijective(self):
        bench = generate_benchmark(n_entities=50, seed=2)
        assert len(bench.reference.positives) == 50
        sources = {s for s, _ in bench.reference.positives}
        targets = {t for _, t in bench.reference.positives}
        assert len(sources) == 50 and len(targets) == 50
        for s, t in bench.reference.positives:
            assert s in bench.source
            assert t in bench.target

    def test_sparsity_fractions(self):
        bench = generate_benchmark(n_entities=400, seed=1)
        def_frac = sum(1 for e in bench.source if e.definition) / 400
        ctx_frac = sum(1 for e in bench.source if e.contexts) / 400
        assert 0.4 < def_frac < 0.6
        assert 0.2 < ctx_frac < 0.4

    def test_strip_target_definitions(self):
        bench = generate_benchmark(
            n_entities=30, seed=4, strip_target_definitions=True
        )
        assert all(e.definition is None for e in bench.target)
        # every corrupted name is restorable through the fixture
        for entity in bench.target:
            assert entity.name in bench.definition_fixture

    def test_inline_contexts_flag(self):
        bare = generate_benchmark(n_entities=30, seed=4, inline_contexts=False)
        assert all(not e.contexts for e in bare.source)
        assert all(not e.contexts for e in bare.target)

    def test_corruption_changes_surfaces(self):
        bench = generate_benchmark(n_entities=100, seed=6)
        changed = sum(
            1
            for (s, t) in bench.reference.positives
            if bench.source[s].name.lower() != bench.target[t].name.lower()
        )
        assert changed > 30
