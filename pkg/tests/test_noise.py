import io
from collections import Counter
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gecforge.corpus import AnnotatedPair, Edit
from gecforge.noise import (
    EditDictionary,
    NoiseEngine,
    NoiseStream,
    NoisingConfig,
    build_dictionary,
    generate_corpus,
    noise_random,
    noise_sentence,
)
from gecforge.spellcheck import fixture_corpus

DATA = Path(__file__).parent / "data"


def _pair(source, edits=()):
    return AnnotatedPair(tuple(source.split()), ((0, tuple(edits)),))


def for_four_fixture():
    """for->for x5, for->four x4, for->to x2 (correct token first)."""
    pairs = [_pair("wait for me") for _ in range(5)]
    pairs += [_pair("wait four me", [Edit(1, 2, ("for",))]) for _ in range(4)]
    pairs += [_pair("wait to me", [Edit(1, 2, ("for",))]) for _ in range(2)]
    return pairs


def test_dictionary_hand_traced_fixture():
    d = build_dictionary(for_four_fixture(), min_count=4)
    assert d.entries == {"for": (("for", 5), ("four", 4))}


def test_noop_only_entries_are_deleted():
    assert build_dictionary([_pair("a") for _ in range(10)], 4).entries == {}


def test_min_count_one():
    d = build_dictionary([_pair("x", [Edit(0, 1, ("b",))])], 1)
    assert d.entries == {"b": (("x", 1),)}


def test_multi_token_edits_skipped_and_all_annotators_counted():
    pair = AnnotatedPair(
        ("a", "b", "c"),
        ((0, (Edit(0, 2, ("x",)),)), (1, (Edit(2, 3, ("d",)),))),
    )
    d = build_dictionary([pair], 1)
    assert "x" not in d
    assert d.entries["d"] == (("c", 1),)
    assert "c" not in d  # noop-only from annotator 0


def test_empty_input_gives_empty_dictionary():
    assert len(build_dictionary([], 4)) == 0


def test_dictionary_json_round_trip(tmp_path):
    d = build_dictionary(for_four_fixture(), 1)
    path = tmp_path / "d.json"
    d.save(path)
    assert EditDictionary.load(path) == d
    assert d.dumps() == EditDictionary.load(path).dumps()


@st.composite
def parallel_corpus(draw):
    vocab = ["a", "b", "c", "for", "to"]
    pairs = []
    for _ in range(draw(st.integers(1, 15))):
        src = draw(st.lists(st.sampled_from(vocab), min_size=1, max_size=5))
        edits = []
        for i in range(len(src)):
            if draw(st.booleans()):
                edits.append(Edit(i, i + 1, (draw(st.sampled_from(vocab)),)))
        pairs.append(AnnotatedPair(tuple(src), ((0, tuple(edits)),)))
    return pairs


@given(parallel_corpus(), st.integers(1, 5))
def test_dictionary_pruning_invariants(pairs, k):
    d = build_dictionary(pairs, k)
    for key, variants in d.entries.items():
        assert all(c >= k for _, c in variants)
        assert [t for t, _ in variants] != [key]
        counts = [c for _, c in variants]
        assert counts == sorted(counts, reverse=True)


# ---------------------------------------------------------------------------
# realistic noising


def test_identity_configuration(lexicon):
    d = EditDictionary({"for": (("four", 3),)})
    cfg = NoisingConfig(token_error_prob=0, type_error_prob=0)
    sent = ("I", "waited", "for", "the", "cats", "at", "home")
    assert noise_sentence(sent, d, lexicon, cfg) == sent


def test_variant_proportions(lexicon):
    d = EditDictionary({"for": (("during", 1), ("four", 1), ("in", 1))})
    engine = NoiseEngine(d, lexicon, NoisingConfig(token_error_prob=1.0, seed=5))
    n = 100_000
    out = engine.noise_batch([["for"]] * n, 0, 0)
    counts = Counter(tuple(x) for x in out)
    assert set(counts) == {("during",), ("four",), ("in",)}
    for c in counts.values():
        assert abs(c / n - 1 / 3) < 0.02


def test_type_toggle_noun(lexicon):
    cfg = NoisingConfig(type_error_prob=1.0)
    assert noise_sentence(("cats",), EditDictionary({}), lexicon, cfg) == ("cat",)


def test_preposition_deletion_is_possible(lexicon):
    cfg = NoisingConfig(type_error_prob=1.0, preposition_set=frozenset({"", "on"}))
    outs = {noise_sentence(("in",), EditDictionary({}), lexicon, cfg, NoiseStream(0, i)) for i in range(50)}
    assert outs == {(), ("on",)}


def test_preposition_set_requires_empty_token():
    with pytest.raises(ValueError):
        NoisingConfig(preposition_set=frozenset({"on"}))


def _type_allowed(tok, out, lexicon, preps):
    kind = lexicon.token_type(tok)
    low = [t.lower() for t in out]
    if kind == "PREP":
        return (low == [] and "" in preps) or (len(low) == 1 and low[0] in preps)
    if kind == "NOUN":
        return low == [lexicon.noun_pairs[tok.lower()]]
    return len(low) == 1 and low[0] in lexicon.paradigm(tok) and low[0] != tok.lower()


def test_type_preservation(lexicon):
    cfg = NoisingConfig(type_error_prob=1.0, seed=3)
    preps = set(cfg.prepositions(lexicon))
    words = sorted(lexicon.token_types)
    changed = 0
    for i, tok in enumerate(words * 3):
        trace = []
        out = noise_sentence((tok,), EditDictionary({}), lexicon, cfg, NoiseStream(3, i), trace)
        if trace == ["type"]:
            changed += 1
            assert _type_allowed(tok, out, lexicon, preps), (tok, out)
    assert changed > len(words)


def test_engine_matches_reference(lexicon):
    d = EditDictionary.load(DATA / "noise_dict.json")
    cfg = NoisingConfig(seed=13, type_error_prob=0.3)
    lines = [line.split() for line in fixture_corpus()] * 20
    engine = NoiseEngine(d, lexicon, cfg)
    for rep in range(2):
        batch = engine.noise_batch(lines, 100, rep)
        for i, toks in enumerate(lines):
            ref = noise_sentence(toks, d, lexicon, cfg, NoiseStream(13, 100 + i, rep))
            assert tuple(batch[i]) == ref


def test_token_error_rate(lexicon):
    d = EditDictionary({"for": (("for", 5), ("four", 4))})
    cfg = NoisingConfig(seed=1)
    fired = 0
    n = 100_000
    for i in range(n):
        trace = []
        noise_sentence(("for",), d, lexicon, cfg, NoiseStream(1, i), trace)
        fired += trace == ["token"]
    assert abs(fired / n - 0.9) < 0.01


# ---------------------------------------------------------------------------
# random mode


def test_random_identity():
    cfg = NoisingConfig(mode="random", random_op_prob=0.0)
    assert noise_random(("a", "b", "c"), ["x"], cfg) == ("a", "b", "c")


def test_random_rates():
    cfg = NoisingConfig(mode="random", random_op_prob=0.1, seed=9)
    counts, n = Counter(), 0
    for line in range(10_000):
        trace = []
        noise_random(tuple("abcdefghij"), ["x", "y"], cfg, NoiseStream(9, line), trace)
        n += 10
        counts.update(op for op, _ in trace)
    for op in ("insert", "substitute"):
        assert abs(counts[op] / n - 0.1) < 0.005
    assert abs((counts["delete"] + counts["delete-suppressed"]) / n - 0.1) < 0.005


def test_single_token_never_empty():
    cfg = NoisingConfig(mode="random", random_op_prob=1.0)
    for i in range(200):
        assert len(noise_random(("a",), ["x"], cfg, NoiseStream(0, i))) >= 1


@given(st.lists(st.sampled_from("abc"), min_size=1, max_size=6), st.integers(0, 2**32), st.floats(0, 1))
def test_random_mode_never_empties(sentence, seed, p):
    cfg = NoisingConfig(mode="random", random_op_prob=p, seed=seed)
    assert noise_random(tuple(sentence), ["x"], cfg) != ()


# ---------------------------------------------------------------------------
# corpus generation


def test_generate_corpus_order(lexicon):
    out = io.StringIO()
    n = generate_corpus(["a b", "c d"], out, EditDictionary({}), lexicon, NoisingConfig(), repetitions=3)
    lines = out.getvalue().splitlines()
    assert n == 2 and len(lines) == 6
    assert [l.split("\t")[1] for l in lines] == ["a b"] * 3 + ["c d"] * 3


def test_generate_corpus_golden_file(lexicon):
    d = EditDictionary.load(DATA / "noise_dict.json")
    expected = (DATA / "golden_noise_seed7.tsv").read_text()
    for workers, chunk in [(1, 4096), (1, 5), (3, 7)]:
        out = io.StringIO()
        generate_corpus(fixture_corpus(), out, d, lexicon, NoisingConfig(seed=7), 3, workers, chunk_size=chunk)
        assert out.getvalue() == expected
    for line, clean in zip(expected.splitlines()[::3], fixture_corpus()):
        assert line.split("\t")[1] == clean


def test_random_mode_corpus_is_worker_independent(lexicon):
    lines = fixture_corpus() * 10
    cfg = NoisingConfig(mode="random", seed=2)
    outs = []
    for workers in (1, 2):
        buf = io.StringIO()
        generate_corpus(lines, buf, EditDictionary({}), lexicon, cfg, 2, workers, vocab=["x", "y"], chunk_size=16)
        outs.append(buf.getvalue())
    assert outs[0] == outs[1]
