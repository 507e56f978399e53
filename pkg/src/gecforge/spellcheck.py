"""Context-aware spelling correction.

Misspelled tokens are found by a vocabulary lookup, candidate words are drawn
from the vocabulary by bounded Damerau-Levenshtein distance, and each
candidate is judged by the language-model score of the whole sentence it
produces.  Words that are almost always written capitalized get their
capitalized form offered as an extra candidate.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from importlib import resources
from typing import Collection, Iterable, Sequence

from .align import char_distance
from .corpus import Edit, Sentence
from .lm import NGramLm


@dataclass(frozen=True)
class SpellConfig:
    max_edit_distance: int = 2
    max_candidates: int = 10
    lm_weight: float = 1.0
    frequency_tiebreak: bool = True

    def __post_init__(self):
        if self.max_edit_distance not in (1, 2):
            raise ValueError("max_edit_distance must be 1 or 2")
        if self.max_candidates < 1:
            raise ValueError("max_candidates must be at least 1")
        if self.lm_weight < 0:
            raise ValueError("lm_weight must be non-negative")


class Vocab:
    """Lowercase word frequencies with a by-length index for candidate lookup."""

    def __init__(self, counts: dict[str, int] | Counter):
        self.counts: dict[str, int] = {}
        for w, c in counts.items():
            low = w.lower()
            self.counts[low] = self.counts.get(low, 0) + int(c)
        self._by_length: dict[int, list[str]] = {}
        for w in sorted(self.counts):
            if w.isalpha():
                self._by_length.setdefault(len(w), []).append(w)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.counts

    def __len__(self) -> int:
        return len(self.counts)

    def freq(self, word: str) -> int:
        return self.counts.get(word.lower(), 0)

    def words_of_length(self, n: int) -> list[str]:
        return self._by_length.get(n, [])

    @classmethod
    def from_sentences(cls, sentences: Iterable[Sequence[str] | str], extra_words: Iterable[str] = ()) -> "Vocab":
        """Count tokens of a clean corpus; ``extra_words`` (e.g. lexicon entries) get count 0 if unseen."""
        counts: Counter = Counter()
        for sent in sentences:
            toks = sent.split() if isinstance(sent, str) else sent
            counts.update(t.lower() for t in toks)
        for w in extra_words:
            if w and w.lower() not in counts:
                counts[w.lower()] = 0
        return cls(counts)

    def dumps(self) -> str:
        return "".join(f"{w}\t{c}\n" for w, c in sorted(self.counts.items()))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "Vocab":
        counts: dict[str, int] = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split("\t")
            try:
                counts[parts[0]] = int(parts[1]) if len(parts) > 1 else 0
            except ValueError:
                raise ValueError(f"vocab line {lineno}: bad count {parts[1]!r}") from None
        return cls(counts)

    @classmethod
    def load(cls, path) -> "Vocab":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


def detect(sentence: Sequence[str], vocab: Collection[str] | Vocab) -> list[int]:
    """Indices of alphabetic tokens missing from ``vocab`` (case-insensitive)."""
    return [i for i, tok in enumerate(sentence) if tok.isalpha() and tok.lower() not in vocab]


def _ranked(token: str, vocab: Vocab, config: SpellConfig) -> list[tuple[int, str]]:
    low = token.lower()
    d_max = config.max_edit_distance
    found = []
    for n in range(max(1, len(low) - d_max), len(low) + d_max + 1):
        for w in vocab.words_of_length(n):
            d = char_distance(low, w, cap=d_max)
            if d <= d_max:
                found.append((d, -vocab.freq(w) if config.frequency_tiebreak else 0, w))
    found.sort()
    return [(d, w) for d, _, w in found[: config.max_candidates]]


def _match_case(template: str, word: str) -> str:
    if template.isupper() and len(template) > 1:
        return word.upper()
    if template[:1].isupper():
        return word[:1].upper() + word[1:]
    return word


def candidates(token: str, vocab: Vocab, config: SpellConfig = SpellConfig()) -> list[str]:
    """Vocabulary words near ``token``, best first, with ``token`` itself kept as the last option.

    Ranking is by distance, then corpus frequency (descending), then
    alphabetically.  Candidates copy the capitalisation of ``token``.
    """
    out = []
    for _, w in _ranked(token, vocab, config):
        cand = _match_case(token, w)
        if cand not in out:
            out.append(cand)
    if token not in out:
        out.append(token)
    return out


def top_candidate(token: str, vocab: Vocab, config: SpellConfig = SpellConfig()) -> str:
    """The first-ranked suggestion without any context (the original if nothing is close)."""
    return candidates(token, vocab, config)[0]


def _capitalized(word: str) -> str:
    return word[:1].upper() + word[1:].lower()


def correct(
    sentence: Sequence[str],
    lm: NGramLm,
    vocab: Vocab,
    capital_list: Collection[str] = frozenset(),
    config: SpellConfig = SpellConfig(),
) -> tuple[Sentence, list[Edit]]:
    """Correct flagged tokens left to right, each choice seeing earlier fixes.

    A position is considered when its token is out of vocabulary or when its
    lowercase form is in ``capital_list`` and the token is not already
    capitalized.  The winner maximises ``lm_weight`` times the sentence
    log-probability; ties go to the smaller edit distance and then to the
    original token.
    """
    sent = list(sentence)
    flagged = set(detect(sent, vocab))
    for i, tok in enumerate(sent):
        if tok.isalpha() and tok.lower() in capital_list and tok != _capitalized(tok):
            flagged.add(i)
    edits: list[Edit] = []
    for i in sorted(flagged):
        orig = sent[i]
        options = candidates(orig, vocab, config) if orig.lower() not in vocab else [orig]
        pool: list[str] = []
        for c in options:
            pool.append(c)
            if c.lower() in capital_list:
                pool.append(_capitalized(c))
        base = lm.token_logprobs(sent)
        best_key, best = None, orig
        seen = set()
        for rank, cand in enumerate(pool):
            if cand in seen:
                continue
            seen.add(cand)
            gain = 0.0 if cand == orig else config.lm_weight * lm.substitution_delta(sent, i, cand, base)
            dist = char_distance(orig.lower(), cand.lower())
            key = (gain, -dist, cand == orig, -rank)
            if best_key is None or key > best_key:
                best_key, best = key, cand
        if best != orig:
            sent[i] = best
            cat = "ORTH" if best.lower() == orig.lower() else "SPELL"
            edits.append(Edit(i, i + 1, (best,), cat))
    return tuple(sent), edits


def fixture_corpus() -> list[str]:
    """Small clean corpus shipped with the package for demos and tests."""
    text = resources.files("gecforge").joinpath("data").joinpath("spell_fixture.txt").read_text(encoding="utf-8")
    return [line for line in text.splitlines() if line.strip()]
