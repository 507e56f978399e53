import math
import random
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import trigram_table

from gecforge.lm import BOS, EOS, UNK, LmError, NGramLm, extract_capital_words, train_lm

FIVE_TOKENS = [["a", "b", "a"], ["b", "c"]]


def test_matches_exact_oracle_on_five_token_corpus():
    lambdas, alpha = (0.2, 0.3, 0.5), 0.5
    lm = train_lm(FIVE_TOKENS, lambdas, alpha)
    oracle, words = trigram_table(FIVE_TOKENS, lambdas, alpha)
    contexts = [BOS, "a", "b", "c", "zzz"]
    for u in contexts:
        for v in contexts:
            if v == BOS and u != BOS:
                continue
            for w in words + ["zzz"]:
                ow = w if w in words else UNK
                ou = u if u in words or u == BOS else UNK
                ov = v if v in words or v == BOS else UNK
                assert abs(lm.prob(w, (u, v)) - float(oracle(ow, ou, ov))) < 1e-12


def test_hand_values():
    # unigram over 7 events (5 tokens + 2 </s>), |V'| = 5, alpha 0.5 -> denominator 9.5
    lm = train_lm(FIVE_TOKENS, (1.0, 0.0, 0.0), 0.5)
    assert lm.prob("a") == pytest.approx(2.5 / 9.5, abs=1e-15)
    assert lm.prob("zzz") == pytest.approx(0.5 / 9.5, abs=1e-15)


@pytest.fixture(scope="module")
def toy_lm():
    rng = random.Random(4)
    vocab = [f"w{i}" for i in range(40)]
    corpus = [[rng.choice(vocab[: rng.randint(5, 40)]) for _ in range(rng.randint(1, 12))] for _ in range(300)]
    return train_lm(corpus), vocab


def test_normalization_random_contexts(toy_lm):
    lm, vocab = toy_lm
    assert len(lm.vocab) <= 50
    rng = random.Random(0)
    pool = vocab + [BOS, "unseen"]
    for _ in range(100):
        ctx = (rng.choice(pool), rng.choice(pool))
        probs = lm.distribution(ctx)
        assert abs(math.fsum(probs.values()) - 1.0) < 1e-9
        assert min(probs.values()) > 0


def test_two_sentence_normalization():
    lm = train_lm(["the cat sat", "the dog ran"])
    for ctx in [(BOS, BOS), (BOS, "the"), ("the", "cat"), ("x", "y")]:
        assert abs(math.fsum(lm.distribution(ctx).values()) - 1.0) < 1e-9


def test_degenerate_unigram_limit():
    lm = train_lm(["a a a"], (1.0, 0.0, 0.0), 1e-9)
    # "a" takes 3 of the 4 counted events; the rest is the </s> transition
    assert abs(lm.prob("a", ("x", "y")) - 0.75) < 1e-8
    assert abs(lm.prob("a") + lm.prob(EOS) - 1.0) < 1e-8


def test_empty_sentence_scores_eos_only():
    lm = train_lm(FIVE_TOKENS)
    assert lm.score([]) == math.log(lm.prob(EOS, (BOS, BOS)))


def test_order_sensitivity():
    lm = train_lm(["a b", "a b", "a c", "b c"])
    assert lm.score(["a", "b"]) != lm.score(["b", "a"])


def test_token_probabilities_resum(toy_lm):
    lm, vocab = toy_lm
    sent = vocab[:6]
    padded = [BOS, BOS] + sent
    for i in range(len(sent)):
        total = math.fsum(math.exp(lm.logprob(w, (padded[i], padded[i + 1]))) for w in lm.vocab)
        assert abs(total - 1.0) < 1e-9


def test_trigram_count_monotonicity():
    base = train_lm(["a b c", "a b d", "x b c"])
    for key in list(base.trigrams):
        bumped = Counter(base.trigrams)
        bumped[key] += 3
        lm = NGramLm(base.unigrams, base.bigrams, bumped, base.lambdas, base.alpha)
        u, v, w = key
        assert lm.prob(w, (u, v)) >= base.prob(w, (u, v))


def test_round_trip_is_bit_identical(toy_lm, tmp_path):
    lm, vocab = toy_lm
    path = tmp_path / "lm.txt"
    lm.save(path)
    again = NGramLm.load(path)
    rng = random.Random(1)
    for _ in range(50):
        sent = [rng.choice(vocab + ["oov"]) for _ in range(rng.randint(0, 10))]
        assert again.score(sent) == lm.score(sent)


def test_substitution_delta_matches_rescoring(toy_lm):
    lm, vocab = toy_lm
    rng = random.Random(2)
    for _ in range(200):
        sent = [rng.choice(vocab) for _ in range(rng.randint(1, 9))]
        i = rng.randrange(len(sent))
        new = list(sent)
        new[i] = rng.choice(vocab + ["oov"])
        assert lm.substitution_delta(sent, i, new[i]) == pytest.approx(lm.score(new) - lm.score(sent), abs=1e-9)


@given(st.lists(st.sampled_from(["a", "b", "c", "q"]), max_size=6), st.lists(st.sampled_from(["a", "b", "q"]), max_size=6))
def test_prefix_scores_never_increase(s1, s2):
    lm = train_lm(FIVE_TOKENS)
    assert lm.score(s1 + s2, eos=False) <= lm.score(s1, eos=False)


def test_errors(tmp_path):
    with pytest.raises(LmError):
        train_lm([])
    with pytest.raises(LmError):
        train_lm(["a"], lambdas=(0.5, 0.5, 0.5))
    with pytest.raises(LmError):
        train_lm(["a"], lambdas=(0.0, 0.5, 0.5))
    with pytest.raises(LmError):
        NGramLm.loads("nonsense")
    with pytest.raises(LmError):
        NGramLm.loads("#gecforge-ngram-lm\tformat_version=1\n#lambdas\t0.1\t0.3\t0.6\nbad-row\n")


def test_capital_words_ratio_rule():
    corpus = ["we saw Paris today"] * 200 + ["paris is a word"]
    assert extract_capital_words(corpus) == {"paris"}


def test_sentence_initial_capitals_do_not_count():
    assert extract_capital_words(["The cat"] * 500) == frozenset()


def test_zero_lowercase_and_min_support():
    assert extract_capital_words(["in London"] * 50) == {"london"}
    assert extract_capital_words(["in London"] * 9) == frozenset()


def test_difference_rule():
    corpus = ["in Rome"] * 30 + ["in rome"] * 20
    assert extract_capital_words(corpus, ratio_threshold=5, rule="difference") == {"rome"}
    assert extract_capital_words(corpus, ratio_threshold=5) == frozenset()
