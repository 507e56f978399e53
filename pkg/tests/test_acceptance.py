"""Acceptance gate: one test per criterion, each reporting a single PASS/FAIL line.

The lines are collected in ``RESULTS`` and repeated in the pytest terminal
summary, so they are visible without ``-s``.
"""

import hashlib
import itertools
import math
import random
import time

import numpy as np
import pytest
from oracles import brute_force_alignment_cost, exhaustive_pairs, trigram_table

from gecforge.align import alignment_cost, extract_edits
from gecforge.cli import main
from gecforge.copymix import CopyMixInputs, forward, grad_check, output_distribution
from gecforge.corpus import AnnotatedPair, Edit, apply_edits
from gecforge.evalstats import (
    best_annotator,
    edit_density,
    permutation_test,
    permutation_test_exact,
    precision_recall_f,
    score,
)
from gecforge.lm import BOS, train_lm
from gecforge.noise import EditDictionary, NoiseStream, NoisingConfig, build_dictionary, noise_random, noise_sentence
from gecforge.postprocess import PostprocessConfig, category_filter_search, lm_select_edits
from gecforge.spellcheck import correct, top_candidate
from gecforge.subword import bpe_apply, bpe_learn, bpe_revert

RESULTS: dict[int, str] = {}


def report(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[number] = line
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------
# 1 alignment


def test_criterion_01_alignment():
    start = time.perf_counter()
    total = bad_trip = bad_cost = 0
    for src, tgt in exhaustive_pairs():
        total += 1
        if apply_edits(src, extract_edits(src, tgt)) != tgt:
            bad_trip += 1
        if alignment_cost(src, tgt) != brute_force_alignment_cost(src, tgt):
            bad_cost += 1
    rng = random.Random(1)
    words = ["the", "The", "a", "cat", "cats", "on", "in", ".", ",", "sat"]
    for _ in range(1000):
        src = tuple(rng.choice(words) for _ in range(rng.randint(9, 40)))
        tgt = list(src)
        for _ in range(rng.randint(0, 8)):
            op = rng.random()
            i = rng.randrange(len(tgt) + 1)
            if op < 0.3:
                tgt.insert(i, rng.choice(words))
            elif op < 0.6 and i < len(tgt) and len(tgt) > 1:
                del tgt[i]
            elif op < 0.8 and i < len(tgt):
                tgt[i] = rng.choice(words)
            elif i + 1 < len(tgt):
                tgt[i], tgt[i + 1] = tgt[i + 1], tgt[i]
        total += 1
        if apply_edits(src, extract_edits(src, tuple(tgt))) != tuple(tgt):
            bad_trip += 1
    elapsed = time.perf_counter() - start
    ok = bad_trip == 0 and bad_cost == 0 and elapsed < 60
    report(1, ok, f"{total} pairs, {bad_trip} round-trip failures, {bad_cost} cost mismatches, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 2 dictionary construction


def test_criterion_02_dictionary():
    def pair(text, edits=()):
        return AnnotatedPair(tuple(text.split()), ((0, tuple(edits)),))

    fixture = [pair("wait for me") for _ in range(5)]
    fixture += [pair("wait four me", [Edit(1, 2, ("for",))]) for _ in range(4)]
    fixture += [pair("wait to me", [Edit(1, 2, ("for",))]) for _ in range(2)]
    d = build_dictionary(fixture, min_count=4)
    # "wait" and "me" only ever map to themselves and disappear
    expected = {"for": (("for", 5), ("four", 4))}
    report(2, d.entries == expected, f"entries {d.entries}")


# ---------------------------------------------------------------------------
# 3 noising rates


def test_criterion_03_noise_rates(lexicon):
    n = 100_000
    d = EditDictionary({"for": (("for", 5), ("four", 4))})
    cfg = NoisingConfig(seed=1)
    fired = 0
    for i in range(n):
        trace = []
        noise_sentence(("for",), d, lexicon, cfg, NoiseStream(1, i), trace)
        fired += trace == ["token"]
    token_rate = fired / n

    rcfg = NoisingConfig(mode="random", random_op_prob=0.1, seed=9)
    ops = {"insert": 0, "delete": 0, "substitute": 0, "swap": 0}
    swap_attempts = 0
    for line in range(n // 10):
        trace = []
        out = noise_random(tuple("abcdefghij"), ["x", "y"], rcfg, NoiseStream(9, line), trace)
        for op, pos in trace:
            ops["delete" if op == "delete-suppressed" else op] += 1
            # a swap consumes the following pair, which is then not tried
            swap_attempts -= op == "swap" and pos + 1 <= len(out) - 2
        swap_attempts += len(out) - 1
    rates = {op: c / n for op, c in ops.items()}
    rates["swap"] = ops["swap"] / swap_attempts

    tcfg = NoisingConfig(type_error_prob=1.0, seed=3)
    preps = set(tcfg.prepositions(lexicon))
    changed = violations = 0
    for i, tok in enumerate(sorted(lexicon.token_types) * 3):
        trace = []
        out = noise_sentence((tok,), EditDictionary({}), lexicon, tcfg, NoiseStream(3, i), trace)
        if trace != ["type"]:
            continue
        changed += 1
        kind, low = lexicon.token_type(tok), [t.lower() for t in out]
        if kind == "PREP":
            good = (low == [] and "" in preps) or (len(low) == 1 and low[0] in preps)
        elif kind == "NOUN":
            good = low == [lexicon.noun_pairs[tok.lower()]]
        else:
            good = len(low) == 1 and low[0] in lexicon.paradigm(tok) and low[0] != tok.lower()
        violations += not good

    ok = abs(token_rate - 0.9) <= 0.01 and all(abs(r - 0.1) <= 0.005 for r in rates.values()) and violations == 0
    detail = f"token {token_rate:.4f}, random " + ", ".join(f"{k} {v:.4f}" for k, v in rates.items())
    report(3, ok and changed > 0, f"{detail}, type changes {changed} with {violations} violations")


# ---------------------------------------------------------------------------
# 4 language model


def test_criterion_04_lm():
    rng = random.Random(4)
    vocab = [f"w{i}" for i in range(40)]
    corpus = [[rng.choice(vocab) for _ in range(rng.randint(1, 12))] for _ in range(300)]
    lm = train_lm(corpus)
    pool = vocab + [BOS, "unseen"]
    worst_sum = 0.0
    for _ in range(100):
        probs = lm.distribution((rng.choice(pool), rng.choice(pool)))
        worst_sum = max(worst_sum, abs(math.fsum(probs.values()) - 1.0))

    small = [["a", "b", "a"], ["b", "c"]]
    lambdas, alpha = (0.2, 0.3, 0.5), 0.5
    small_lm = train_lm(small, lambdas, alpha)
    oracle, words = trigram_table(small, lambdas, alpha)
    worst_cell = 0.0
    for u in [BOS] + words:
        for v in [BOS] + words:
            if v == BOS and u != BOS:
                continue
            for w in words:
                worst_cell = max(worst_cell, abs(small_lm.prob(w, (u, v)) - float(oracle(w, u, v))))
    ok = len(lm.vocab) <= 50 and worst_sum <= 1e-9 and worst_cell <= 1e-12
    report(4, ok, f"|V'| {len(lm.vocab)}, max |sum-1| {worst_sum:.2e}, max oracle diff {worst_cell:.2e}")


# ---------------------------------------------------------------------------
# 5 spellchecker


def test_criterion_05_spellcheck(spell_lm, spell_vocab, capitals):
    essay = tuple("This is an esay about my favorite sport .".split())
    runs = [correct(essay, spell_lm, spell_vocab, capitals) for _ in range(2)]
    with_lm = runs[0][0][3]
    without = top_candidate("esay", spell_vocab)
    paris = tuple("We flew to paris last summer .".split())
    case_runs = [correct(paris, spell_lm, spell_vocab, capitals) for _ in range(2)]
    ok = (
        with_lm == "essay"
        and without == "easy"
        and case_runs[0][0][3] == "Paris"
        and runs[0] == runs[1]
        and case_runs[0] == case_runs[1]
    )
    report(5, ok, f"LM picks {with_lm!r}, no-LM picks {without!r}, case fix {case_runs[0][0][3]!r}")


# ---------------------------------------------------------------------------
# 6 scorer


def test_criterion_06_scorer():
    f = precision_recall_f(2, 1, 2)[2]
    src = tuple("a b c d e f".split())

    def e(i, rep):
        return Edit(i, i + 1, (rep,))

    hyp = [e(0, "x"), e(1, "y")]
    pair = AnnotatedPair(src, ((0, (e(0, "x"), e(2, "m"), e(3, "n"))), (1, (e(0, "x"), e(1, "y"), e(4, "z")))))
    chosen = best_annotator(hyp, pair)
    gold = [
        AnnotatedPair(src, ((0, (e(0, "x"), e(3, "k"))),)),
        AnnotatedPair(src[:3], ((0, ()),)),
        AnnotatedPair(src, ((0, (Edit(2, 4, ()), Edit(6, 6, ("end",)))),)),
    ]
    self_f = score([g.edits() for g in gold], gold).f_half
    ok = abs(f - 0.625) <= 1e-12 and chosen == 1 and self_f == 1.0
    report(6, ok, f"F0.5 {f:.12f}, best annotator {chosen}, self-score {self_f}")


# ---------------------------------------------------------------------------
# 7 permutation test and density fixture


def test_criterion_07_permutation():
    rng = random.Random(7)
    worst, fixtures = 0.0, 0
    for n_a in range(1, 8):
        for n_b in range(1, 9 - n_a):
            a = [round(rng.random(), 3) for _ in range(n_a)]
            b = [round(rng.random() + 0.2, 3) for _ in range(n_b)]
            gap = abs(permutation_test(a, b, rounds=10_000, seed=fixtures) - permutation_test_exact(a, b))
            worst = max(worst, gap)
            fixtures += 1

    drng = random.Random(0)
    counts = [4] * 39 + [5] * 61
    drng.shuffle(counts)
    pairs = [
        AnnotatedPair(("w",) * 50, ((0, tuple(Edit(i, i + 1, ("v",)) for i in sorted(drng.sample(range(50), k)))),))
        for k in counts
    ]
    density = edit_density(pairs)
    ok = worst <= 0.02 and abs(density - 0.0922) <= 1e-6
    report(7, ok, f"{fixtures} fixtures, max |MC-exact| {worst:.4f}, density {density:.6f}")


# ---------------------------------------------------------------------------
# 8 copy mixture


def test_criterion_08_copymix():
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    worst_sum, alpha_lo, alpha_hi, worst_grad = 0.0, 1.0, 0.0, 0.0
    half_ok = True
    for trial in range(1000):
        d, v, t = int(rng.integers(1, 9)), int(rng.integers(2, 31)), int(rng.integers(1, 9))
        x = CopyMixInputs.random(rng, d, v, t)
        f = forward(x)
        worst_sum = max(worst_sum, abs(math.fsum(f.p) - 1.0))
        alpha_lo, alpha_hi = min(alpha_lo, f.alpha), max(alpha_hi, f.alpha)
        zeroed = CopyMixInputs(x.H_enc, x.h_dec, x.W_gen, np.zeros(d), x.source_token_ids)
        half_ok &= output_distribution(zeroed)[1] == 0.5
        worst_grad = max(worst_grad, grad_check(x, int(rng.integers(0, v))))
    elapsed = time.perf_counter() - start
    ok = worst_sum <= 1e-12 and 0 < alpha_lo and alpha_hi < 1 and half_ok and worst_grad < 1e-4 and elapsed < 30
    report(
        8, ok,
        f"max |sum-1| {worst_sum:.1e}, alpha in [{alpha_lo:.4f}, {alpha_hi:.4f}], "
        f"max grad rel err {worst_grad:.1e}, {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# 9 post-processing


def test_criterion_09_postprocess():
    lm = train_lm(["the cat sat on the mat ."] * 20 + ["a dog ran in the park ."] * 5 + ["the cat ate ."] * 3)
    words = "the cat sat on mat a dog ran in park ate . zebra".split()
    rng = random.Random(9)
    mismatches = cases = 0
    for n in range(0, 13):
        for _ in range(3 if n < 10 else 1):
            src = tuple(rng.choice(words) for _ in range(n + 2))
            edits = [Edit(i, i + 1, (rng.choice(words),)) for i in sorted(rng.sample(range(len(src)), n))]
            cfg = PostprocessConfig(max_removed_edits=min(n, 4), exhaustive_edit_limit=12)
            got = lm.score(apply_edits(src, lm_select_edits(src, edits, lm, cfg)))
            best = max(
                lm.score(apply_edits(src, [e for i, e in enumerate(edits) if i not in rem]))
                for k in range(cfg.max_removed_edits + 1)
                for rem in itertools.combinations(range(n), k)
            )
            mismatches += got != best
            cases += 1

    src = ("w",) * 6
    cats = ["ART", "PREP", "SPELL", "OTHER", None]
    losses = 0
    for trial in range(200):
        gold, hyps = [], []
        for _ in range(rng.randint(1, 5)):
            g = sorted(rng.sample(range(6), rng.randint(0, 3)))
            h = sorted(rng.sample(range(6), rng.randint(0, 4)))
            gold.append(AnnotatedPair(src, ((0, tuple(Edit(i, i + 1, ("x",), rng.choice(cats)) for i in g)),)))
            hyps.append([Edit(i, i + 1, (rng.choice("xy"),), rng.choice(cats)) for i in h])
        _, rep = category_filter_search(hyps, gold, config=PostprocessConfig(search_rounds=8, seed=trial))
        losses += rep.f_half < score(hyps, gold).f_half

    gold = [AnnotatedPair(src, ((0, (Edit(0, 1, ("x",), "ART"),)),)) for _ in range(4)]
    hyps = [[Edit(0, 1, ("x",), "ART"), Edit(3, 4, ("q",), "OTHER")] for _ in range(4)]
    chosen = category_filter_search(hyps, gold)[0]
    ok = mismatches == 0 and losses == 0 and chosen == ("OTHER",)
    report(9, ok, f"{cases} LM fixtures with {mismatches} mismatches, {losses} category losses, selected {chosen}")


# ---------------------------------------------------------------------------
# 10 throughput, determinism, BPE round trip


def _million_line_corpus(path):
    rng = random.Random(10)
    vocab = "for the a an is are cat cats dog dogs go goes went in on at to of with house houses big red .".split()
    with open(path, "w", encoding="utf-8") as fh:
        for _ in range(1000):
            block = [" ".join(rng.choices(vocab, k=rng.randint(3, 12))) for _ in range(1000)]
            fh.write("\n".join(block) + "\n")


@pytest.mark.slow
def test_criterion_10_throughput_and_bpe(tmp_path):
    corpus, dict_path = tmp_path / "corpus.txt", tmp_path / "dict.json"
    _million_line_corpus(corpus)
    EditDictionary({"for": (("for", 5), ("four", 4)), "the": (("the", 6), ("a", 4)), "is": (("are", 4),)}).save(dict_path)
    digests, rates = {}, {}
    for workers in (1, 4, 8):
        out = tmp_path / f"noisy{workers}.tsv"
        start = time.perf_counter()
        rc = main([
            "noise", "--corpus", str(corpus), "--dict", str(dict_path), "--out", str(out),
            "--seed", "10", "--workers", str(workers),
        ])
        rates[workers] = 1_000_000 / (time.perf_counter() - start)
        assert rc == 0
        digests[workers] = hashlib.sha256(out.read_bytes()).hexdigest()
        out.unlink()

    rng = random.Random(11)
    words = ["".join(rng.choice("abcdefghijklmnop") for _ in range(rng.randint(1, 10))) for _ in range(2000)]
    sentences = [[rng.choice(words) for _ in range(rng.randint(1, 15))] for _ in range(10_000)]
    model = bpe_learn([" ".join(s) for s in sentences], 1000)
    trips = sum(list(bpe_revert(model, bpe_apply(model, s))) == s for s in sentences)

    identical = len(set(digests.values())) == 1
    ok = identical and rates[8] >= 50_000 and trips == len(sentences)
    detail = ", ".join(f"{w} workers {r:,.0f} lines/s" for w, r in rates.items())
    report(10, ok, f"{detail}; outputs identical: {identical}; BPE round trips {trips}/{len(sentences)}")
