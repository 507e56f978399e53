"""Interpolated trigram language model and the common-capital-word list.

The model interpolates maximum-likelihood trigram and bigram estimates with
an add-alpha unigram (Jelinek-Mercer).  When a history was never seen its ML
estimate is replaced by the next lower order, so every conditional
distribution sums to one over the vocabulary plus ``</s>`` and ``<unk>``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

BOS, EOS, UNK = "<s>", "</s>", "<unk>"
FORMAT_VERSION = 1
_HEADER = "#gecforge-ngram-lm"


class LmError(ValueError):
    pass


@dataclass
class NGramLm:
    unigrams: Counter
    bigrams: Counter
    trigrams: Counter
    lambdas: tuple[float, float, float] = (0.1, 0.3, 0.6)
    alpha: float = 0.5
    order: int = field(default=3, init=False)

    def __post_init__(self):
        lambdas = tuple(float(x) for x in self.lambdas)
        if len(lambdas) != 3 or any(x < 0 for x in lambdas) or abs(sum(lambdas) - 1.0) > 1e-12:
            raise LmError(f"lambdas must be three non-negative weights summing to 1, got {self.lambdas}")
        if lambdas[0] <= 0 or self.alpha <= 0:
            raise LmError("the unigram weight and alpha must be positive so every probability is non-zero")
        self.lambdas = lambdas
        self.vocab = frozenset(w for w in self.unigrams if w != UNK) | {EOS, UNK}
        self.total = sum(self.unigrams.values())
        self._uni_denom = self.total + self.alpha * len(self.vocab)
        self.bi_hist: Counter = Counter()
        for (v, _), c in self.bigrams.items():
            self.bi_hist[v] += c
        self.tri_hist: Counter = Counter()
        for (u, v, _), c in self.trigrams.items():
            self.tri_hist[(u, v)] += c

    # -- probabilities -----------------------------------------------------

    def map_token(self, tok: str) -> str:
        return tok if tok in self.vocab or tok == BOS else UNK

    def prob(self, word: str, history: Sequence[str] = (BOS, BOS)) -> float:
        """p(word | two-token history); out-of-vocabulary tokens map to <unk>."""
        hist = [BOS, BOS] + list(history[-2:])
        u, v = self.map_token(hist[-2]), self.map_token(hist[-1])
        w = word if word in self.vocab else UNK
        p1 = (self.unigrams.get(w, 0) + self.alpha) / self._uni_denom
        h2 = self.bi_hist.get(v, 0)
        p2 = self.bigrams.get((v, w), 0) / h2 if h2 else p1
        h3 = self.tri_hist.get((u, v), 0)
        p3 = self.trigrams.get((u, v, w), 0) / h3 if h3 else p2
        l1, l2, l3 = self.lambdas
        return l1 * p1 + l2 * p2 + l3 * p3

    def logprob(self, word: str, history: Sequence[str] = (BOS, BOS)) -> float:
        return math.log(self.prob(word, history))

    def distribution(self, history: Sequence[str]) -> dict[str, float]:
        return {w: self.prob(w, history) for w in self.vocab}

    def token_logprobs(self, sentence: Sequence[str], eos: bool = True) -> list[float]:
        """Per-position log p(token | previous two), plus the </s> transition."""
        padded = [BOS, BOS] + [self.map_token(t) for t in sentence]
        targets = padded[2:] + ([EOS] if eos else [])
        padded.append(EOS)
        return [self.logprob(w, (padded[i], padded[i + 1])) for i, w in enumerate(targets)]

    def score(self, sentence: Sequence[str], eos: bool = True) -> float:
        """Natural-log probability of the sentence."""
        return math.fsum(self.token_logprobs(sentence, eos))

    def substitution_delta(self, sentence: Sequence[str], index: int, token: str, base: Sequence[float] | None = None) -> float:
        """Score change from replacing ``sentence[index]`` with ``token``.

        Only the three trigrams that see the substituted position are
        rescored.  ``base`` is :meth:`token_logprobs` of the unmodified
        sentence, if already computed.
        """
        if base is None:
            base = self.token_logprobs(sentence)
        new = [BOS, BOS] + list(sentence) + [EOS]
        new[index + 2] = token
        delta = 0.0
        for k in range(index, min(index + 3, len(sentence) + 1)):
            w_new = new[k + 2]
            delta += self.logprob(w_new, (new[k], new[k + 1])) - base[k]
        return delta

    # -- persistence -------------------------------------------------------

    def dumps(self) -> str:
        lines = [
            f"{_HEADER}\tformat_version={FORMAT_VERSION}",
            "#lambdas\t" + "\t".join(repr(x) for x in self.lambdas),
            f"#alpha\t{self.alpha!r}",
        ]
        for table in (self.unigrams, self.bigrams, self.trigrams):
            rows = sorted((" ".join(k) if isinstance(k, tuple) else k, c) for k, c in table.items())
            lines.extend(f"{ng}\t{c}" for ng, c in rows)
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "NGramLm":
        lines = text.splitlines()
        if not lines or not lines[0].startswith(_HEADER):
            raise LmError("not a gecforge n-gram model file")
        version = lines[0].split("format_version=")[-1]
        if version != str(FORMAT_VERSION):
            raise LmError(f"model format_version {version}, expected {FORMAT_VERSION}")
        lambdas: tuple[float, ...] = ()
        alpha = 0.5
        tables = (Counter(), Counter(), Counter())
        for lineno, line in enumerate(lines[1:], 2):
            if line.startswith("#lambdas\t"):
                lambdas = tuple(float(x) for x in line.split("\t")[1:])
            elif line.startswith("#alpha\t"):
                alpha = float(line.split("\t")[1])
            elif line:
                try:
                    ngram, count = line.rsplit("\t", 1)
                    toks = ngram.split(" ")
                    key = toks[0] if len(toks) == 1 else tuple(toks)
                    tables[len(toks) - 1][key] = int(count)
                except (ValueError, IndexError):
                    raise LmError(f"line {lineno}: malformed n-gram row") from None
        return cls(*tables, lambdas=lambdas, alpha=alpha)

    @classmethod
    def load(cls, path) -> "NGramLm":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


def train_lm(
    sentences: Iterable[Sequence[str] | str],
    lambdas: tuple[float, float, float] = (0.1, 0.3, 0.6),
    alpha: float = 0.5,
) -> NGramLm:
    """Count padded n-grams over tokenized sentences (strings are split on whitespace)."""
    uni, bi, tri = Counter(), Counter(), Counter()
    n_sent = 0
    for sent in sentences:
        toks = sent.split() if isinstance(sent, str) else list(sent)
        if not toks:
            continue
        n_sent += 1
        padded = [BOS, BOS] + toks + [EOS]
        for i in range(2, len(padded)):
            u, v, w = padded[i - 2], padded[i - 1], padded[i]
            uni[w] += 1
            bi[(v, w)] += 1
            tri[(u, v, w)] += 1
    if n_sent == 0:
        raise LmError("cannot train a language model on an empty corpus")
    return NGramLm(uni, bi, tri, lambdas=lambdas, alpha=alpha)


# ---------------------------------------------------------------------------
# capital words


def _is_capitalized(tok: str) -> bool:
    return tok[:1].isupper() and tok.isalpha() and tok[1:] == tok[1:].lower()


def extract_capital_words(
    sentences: Iterable[Sequence[str] | str],
    ratio_threshold: float = 99,
    min_capital_count: int = 10,
    rule: str = "ratio",
) -> frozenset[str]:
    """Lowercase forms of words that are almost always written capitalized.

    With ``rule="ratio"`` a word qualifies when its capitalized count exceeds
    ``ratio_threshold`` times its lowercase count; ``rule="difference"`` asks
    for the capitalized count to exceed the lowercase count by more than
    ``ratio_threshold``.  Sentence-initial tokens never count as capitalized
    and the capitalized count must reach ``min_capital_count``.
    """
    if rule not in ("ratio", "difference"):
        raise ValueError(f"unknown rule {rule!r}")
    cap, low = Counter(), Counter()
    for sent in sentences:
        toks = sent.split() if isinstance(sent, str) else sent
        for i, tok in enumerate(toks):
            if not tok.isalpha():
                continue
            if tok.islower():
                low[tok] += 1
            elif i > 0 and _is_capitalized(tok):
                cap[tok.lower()] += 1
    words = set()
    for w, c in cap.items():
        if c < min_capital_count:
            continue
        ok = c > ratio_threshold * low[w] if rule == "ratio" else c - low[w] > ratio_threshold
        if ok:
            words.add(w)
    return frozenset(words)
