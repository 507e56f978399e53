"""Byte-pair encoding with an explicit end-of-word symbol.

Words are split into characters followed by ``</w>``; learning repeatedly
merges the most frequent adjacent symbol pair (ties go to the
lexicographically smallest pair).  Characters never seen in training become
``<unk>`` when the model is applied.
"""

from __future__ import annotations

import heapq
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

END = "</w>"
UNK = "<unk>"
FORMAT_VERSION = 1
_HEADER = "#gecforge-bpe"


class BpeError(ValueError):
    pass


@dataclass
class BpeModel:
    alphabet: frozenset[str]
    merges: list[tuple[str, str]]
    target_vocab_size: int
    _ranks: dict[tuple[str, str], int] = field(init=False, repr=False)
    _cache: dict[str, tuple[str, ...]] = field(init=False, repr=False)

    def __post_init__(self):
        self.merges = [tuple(m) for m in self.merges]
        if len(set(self.merges)) != len(self.merges):
            raise BpeError("duplicate merges")
        self._ranks = {m: i for i, m in enumerate(self.merges)}
        self._cache = {}

    @property
    def vocab(self) -> set[str]:
        return set(self.alphabet) | {END} | {a + b for a, b in self.merges}

    def segment_word(self, word: str) -> tuple[str, ...]:
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        symbols = [ch if ch in self.alphabet else UNK for ch in word] + [END]
        ranks = self._ranks
        while len(symbols) > 1:
            best, best_rank = None, None
            for pair in zip(symbols, symbols[1:]):
                r = ranks.get(pair)
                if r is not None and (best_rank is None or r < best_rank):
                    best, best_rank = pair, r
            if best is None:
                break
            merged, i = [], 0
            while i < len(symbols):
                if i + 1 < len(symbols) and (symbols[i], symbols[i + 1]) == best:
                    merged.append(symbols[i] + symbols[i + 1])
                    i += 2
                else:
                    merged.append(symbols[i])
                    i += 1
            symbols = merged
        out = tuple(symbols)
        if len(self._cache) < 1_000_000:
            self._cache[word] = out
        return out

    # -- persistence -------------------------------------------------------

    def dumps(self) -> str:
        lines = [f"{_HEADER}\tformat_version={FORMAT_VERSION}", f"#target_vocab_size\t{self.target_vocab_size}"]
        lines += [f"char\t{ch}" for ch in sorted(self.alphabet)]
        lines += [f"merge\t{a}\t{b}" for a, b in self.merges]
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "BpeModel":
        lines = text.splitlines()
        if not lines or not lines[0].startswith(_HEADER):
            raise BpeError("not a gecforge BPE model file")
        version = lines[0].split("format_version=")[-1]
        if version != str(FORMAT_VERSION):
            raise BpeError(f"BPE format_version {version}, expected {FORMAT_VERSION}")
        size, chars, merges = 0, set(), []
        for lineno, line in enumerate(lines[1:], 2):
            parts = line.split("\t")
            if parts[0] == "#target_vocab_size":
                size = int(parts[1])
            elif parts[0] == "char" and len(parts) == 2:
                chars.add(parts[1])
            elif parts[0] == "merge" and len(parts) == 3:
                merges.append((parts[1], parts[2]))
            elif line:
                raise BpeError(f"line {lineno}: malformed BPE model row")
        return cls(frozenset(chars), merges, size)

    @classmethod
    def load(cls, path) -> "BpeModel":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


def bpe_learn(corpus: Iterable[str | Sequence[str]], target_vocab_size: int) -> BpeModel:
    """Learn merges until the symbol inventory reaches ``target_vocab_size``.

    The starting inventory is the character set plus ``</w>``, so a target at
    or below that size learns nothing.
    """
    word_freq: Counter = Counter()
    for line in corpus:
        word_freq.update(line.split() if isinstance(line, str) else line)
    if not word_freq:
        raise BpeError("cannot learn BPE from an empty corpus")
    alphabet = frozenset(ch for w in word_freq for ch in w)
    budget = target_vocab_size - (len(alphabet) + 1)

    words = [list(w) + [END] for w in sorted(word_freq)]
    freqs = [word_freq[w] for w in sorted(word_freq)]
    pair_counts: Counter = Counter()
    where: dict[tuple[str, str], set[int]] = defaultdict(set)
    for idx, syms in enumerate(words):
        f = freqs[idx]
        for pair in zip(syms, syms[1:]):
            pair_counts[pair] += f
            where[pair].add(idx)
    heap = [(-c, p) for p, c in pair_counts.items()]
    heapq.heapify(heap)

    merges: list[tuple[str, str]] = []
    while len(merges) < budget and heap:
        neg, pair = heapq.heappop(heap)
        count = pair_counts.get(pair, 0)
        if count <= 0:
            continue
        if -neg != count:
            # stale heap entry
            heapq.heappush(heap, (-count, pair))
            continue
        merges.append(pair)
        a, b = pair
        joined = a + b
        touched: set[tuple[str, str]] = set()
        for idx in sorted(where.pop(pair, ())):
            syms, f = words[idx], freqs[idx]
            for p in zip(syms, syms[1:]):
                pair_counts[p] -= f
                touched.add(p)
            merged, i = [], 0
            while i < len(syms):
                if i + 1 < len(syms) and syms[i] == a and syms[i + 1] == b:
                    merged.append(joined)
                    i += 2
                else:
                    merged.append(syms[i])
                    i += 1
            words[idx] = merged
            for p in zip(merged, merged[1:]):
                pair_counts[p] += f
                where[p].add(idx)
                touched.add(p)
        for p in touched:
            c = pair_counts.get(p, 0)
            if c > 0:
                heapq.heappush(heap, (-c, p))
            else:
                pair_counts.pop(p, None)
    return BpeModel(alphabet, merges, target_vocab_size)


def bpe_apply(model: BpeModel, sentence: Sequence[str] | str) -> list[str]:
    toks = sentence.split() if isinstance(sentence, str) else sentence
    out: list[str] = []
    for tok in toks:
        out.extend(model.segment_word(tok))
    return out


def bpe_revert(model: BpeModel, subwords: Sequence[str]) -> tuple[str, ...]:
    """Join pieces back into words, splitting wherever ``</w>`` ends a piece."""
    words: list[str] = []
    buf: list[str] = []
    for piece in subwords:
        if piece.endswith(END):
            buf.append(piece[: -len(END)])
            words.append("".join(buf))
            buf = []
        else:
            buf.append(piece)
    if buf:
        words.append("".join(buf))
    return tuple(words)
