"""Noise dictionary construction and synthetic error generation.

Randomness comes from a counter-based hash generator: every uniform draw is a
pure function of ``(seed, line index, repetition, token position, slot)``.
Output therefore depends only on the seed and the input, never on how lines
are batched or spread across worker processes.
"""

from __future__ import annotations

import json
import logging
import math
import multiprocessing as mp
from collections import Counter
from dataclasses import dataclass, field
from itertools import islice
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

from .corpus import AnnotatedPair, Sentence
from .lexicon import NOUN, PREP, VERB, MorphLexicon, restore_case

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
REALISTIC, RANDOM = "realistic", "random"

# ---------------------------------------------------------------------------
# counter-based uniforms

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_SLOTS = 8  # uniforms reserved per token position
_TO_UNIT = 2.0**-53


def _mix(z: int) -> int:
    z = (z + _GAMMA) & _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


_U = np.uint64


def _mix_np(z: np.ndarray) -> np.ndarray:
    z = z + _U(_GAMMA)
    z = (z ^ (z >> _U(30))) * _U(_M1)
    z = (z ^ (z >> _U(27))) * _U(_M2)
    return z ^ (z >> _U(31))


def stream_key(seed: int, line: int, rep: int) -> int:
    """Key of the substream owned by one (line, repetition) pair."""
    return _mix(_mix(_mix(seed & _MASK) ^ (line & _MASK)) ^ (rep & _MASK))


@dataclass(frozen=True)
class NoiseStream:
    """Deterministic uniforms for one sentence: ``uniform(pos, slot)`` in [0, 1)."""

    seed: int
    line: int = 0
    rep: int = 0
    key: int = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "key", stream_key(self.seed, self.line, self.rep))

    def uniform(self, pos: int, slot: int) -> float:
        return (_mix(self.key ^ _mix(pos * _SLOTS + slot)) >> 11) * _TO_UNIT


def _uniform_np(keys: np.ndarray, positions: np.ndarray, slot: int) -> np.ndarray:
    counters = positions.astype(np.uint64) * _U(_SLOTS) + _U(slot)
    h = _mix_np(keys ^ _mix_np(counters))
    return (h >> _U(11)).astype(np.float64) * _TO_UNIT


def _draw_index(u: float, n: int) -> int:
    return min(int(math.floor(u * n)), n - 1)


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class NoisingConfig:
    min_count: int = 4
    token_error_prob: float = 0.9
    type_error_prob: float = 0.1
    seed: int = 0
    preposition_set: frozenset[str] | None = None  # None: the lexicon's prepositions
    mode: str = REALISTIC
    random_op_prob: float = 0.1

    def __post_init__(self):
        for name in ("token_error_prob", "type_error_prob", "random_op_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")
        if self.mode not in (REALISTIC, RANDOM):
            raise ValueError(f"mode must be {REALISTIC!r} or {RANDOM!r}, got {self.mode!r}")
        if self.preposition_set is not None:
            preps = frozenset(self.preposition_set)
            if "" not in preps:
                raise ValueError("preposition_set must contain the empty token")
            object.__setattr__(self, "preposition_set", preps)

    def prepositions(self, lexicon: MorphLexicon) -> tuple[str, ...]:
        preps = self.preposition_set if self.preposition_set is not None else lexicon.prepositions
        return tuple(sorted(preps))


# ---------------------------------------------------------------------------
# dictionary


def _variant_order(item: tuple[str, int]) -> tuple[int, str]:
    return (-item[1], item[0])


@dataclass(frozen=True)
class EditDictionary:
    """Correct token -> erroneous variants with their observed counts."""

    entries: dict[str, tuple[tuple[str, int], ...]]
    min_count: int = 1

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def variants(self, token: str) -> tuple[tuple[str, int], ...]:
        return self.entries.get(token, ())

    def to_json(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "min_count": self.min_count,
            "entries": {k: [[t, c] for t, c in self.entries[k]] for k in sorted(self.entries)},
        }

    @classmethod
    def from_json(cls, data: dict) -> "EditDictionary":
        version = data.get("format_version")
        if version != FORMAT_VERSION:
            raise ValueError(f"dictionary format_version {version!r}, expected {FORMAT_VERSION}")
        entries = {k: tuple((t, int(c)) for t, c in v) for k, v in data["entries"].items()}
        return cls(entries, int(data.get("min_count", 1)))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False, sort_keys=True, indent=1) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "EditDictionary":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def token_pairs(pair: AnnotatedPair, annotator: int) -> Iterator[tuple[str, str]]:
    """(correct, original) token pairs: unchanged tokens and 1:1 edits."""
    source = pair.source
    pos = 0
    for e in pair.edits(annotator):
        for tok in source[pos : e.span_start]:
            yield tok, tok
        if e.span_end - e.span_start == 1 and len(e.replacement) == 1:
            yield e.replacement[0], source[e.span_start]
        pos = e.span_end
    for tok in source[pos:]:
        yield tok, tok


def build_dictionary(pairs: Iterable[AnnotatedPair], min_count: int = 4) -> EditDictionary:
    """Count (correct, original) token pairs and prune rare variants.

    Every annotator of every pair contributes.  Variants seen fewer than
    ``min_count`` times are dropped, then entries whose only surviving variant
    is the key itself (pure noop) are dropped.  Edits spanning more or fewer
    than one token on either side are skipped.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: dict[str, Counter] = {}
    for pair in pairs:
        for annotator, _ in pair.annotations:
            for cor, ori in token_pairs(pair, annotator):
                counts.setdefault(cor, Counter())[ori] += 1
    entries: dict[str, tuple[tuple[str, int], ...]] = {}
    for cor, variants in counts.items():
        kept = sorted(((ori, c) for ori, c in variants.items() if c >= min_count), key=_variant_order)
        if not kept or (len(kept) == 1 and kept[0][0] == cor):
            continue
        entries[cor] = tuple(kept)
    return EditDictionary(entries, min_count)


# ---------------------------------------------------------------------------
# realistic noising, reference implementation

_TOKEN_FIRE, _TOKEN_PICK, _TYPE_FIRE, _TYPE_PICK = 0, 1, 2, 3


def _token_choice(variants: Sequence[tuple[str, int]], u: float) -> str:
    total = sum(c for _, c in variants)
    r = min(int(math.floor(u * total)), total - 1)
    cum = 0
    for tok, c in variants:
        cum += c
        if r < cum:
            return tok
    return variants[-1][0]


def _type_change(token: str, kind: str, u: float, lexicon: MorphLexicon, preps: Sequence[str]) -> str | None:
    if kind == PREP:
        return restore_case(token, preps[_draw_index(u, len(preps))])
    if kind == NOUN:
        return lexicon.inflect_noun(token).token
    alts = lexicon.verb_alternatives(token)
    return alts[_draw_index(u, len(alts))]


def _typed(token: str, lexicon: MorphLexicon) -> str | None:
    kind = lexicon.token_type(token)
    if kind == NOUN and not lexicon.inflect_noun(token).supported:
        return None
    if kind == VERB and not lexicon.verb_alternatives(token):
        return None
    return kind if kind in (PREP, NOUN, VERB) else None


def noise_sentence(
    sentence: Sequence[str],
    dictionary: EditDictionary,
    lexicon: MorphLexicon,
    config: NoisingConfig,
    stream: NoiseStream | None = None,
    trace: list[str] | None = None,
) -> Sentence:
    """Corrupt one sentence with the token-based and type-based scenarios.

    A dictionary token fires with probability ``token_error_prob`` and is
    replaced by a variant drawn proportionally to its count (the noop variant
    reproduces the token).  Tokens not handled that way get the type-based
    change with probability ``type_error_prob``.  ``trace`` receives one label
    per input token: ``"token"``, ``"type"`` or ``"copy"``.
    """
    if stream is None:
        stream = NoiseStream(config.seed)
    preps = config.prepositions(lexicon)
    out: list[str] = []
    for pos, tok in enumerate(sentence):
        variants = dictionary.entries.get(tok)
        if variants and stream.uniform(pos, _TOKEN_FIRE) < config.token_error_prob:
            out.append(_token_choice(variants, stream.uniform(pos, _TOKEN_PICK)))
            if trace is not None:
                trace.append("token")
            continue
        kind = _typed(tok, lexicon)
        if kind is not None and stream.uniform(pos, _TYPE_FIRE) < config.type_error_prob:
            new = _type_change(tok, kind, stream.uniform(pos, _TYPE_PICK), lexicon, preps)
            if new:
                out.append(new)
            if trace is not None:
                trace.append("type")
            continue
        out.append(tok)
        if trace is not None:
            trace.append("copy")
    return tuple(out)


# ---------------------------------------------------------------------------
# random-noise baseline

_R_INS_FIRE, _R_INS_PICK, _R_DEL_FIRE, _R_SUB_FIRE, _R_SUB_PICK, _R_SWAP = 0, 1, 2, 3, 4, 5


def noise_random(
    sentence: Sequence[str],
    vocab: Sequence[str],
    config: NoisingConfig,
    stream: NoiseStream | None = None,
    trace: list[tuple[str, int]] | None = None,
) -> Sentence:
    """Uniform insert/delete/substitute at every position, then adjacent swaps.

    The three per-position operations fire independently with probability
    ``random_op_prob``; a deletion wins over a substitution of the same token.
    Deleting the only token left in a sentence is suppressed.  ``trace``
    receives ``(op, position)`` for every fired operation, with
    ``"delete-suppressed"`` marking a suppressed deletion.
    """
    if not vocab:
        raise ValueError("random noising needs a non-empty vocabulary")
    if stream is None:
        stream = NoiseStream(config.seed)
    p = config.random_op_prob
    n = len(sentence)
    out: list[str] = []
    for pos, tok in enumerate(sentence):
        if stream.uniform(pos, _R_INS_FIRE) < p:
            out.append(vocab[_draw_index(stream.uniform(pos, _R_INS_PICK), len(vocab))])
            if trace is not None:
                trace.append(("insert", pos))
        sub = stream.uniform(pos, _R_SUB_FIRE) < p
        if sub and trace is not None:
            trace.append(("substitute", pos))
        if stream.uniform(pos, _R_DEL_FIRE) < p:
            if out or pos < n - 1:
                if trace is not None:
                    trace.append(("delete", pos))
                continue
            if trace is not None:
                trace.append(("delete-suppressed", pos))
        if sub:
            out.append(vocab[_draw_index(stream.uniform(pos, _R_SUB_PICK), len(vocab))])
        else:
            out.append(tok)
    i = 0
    while i < len(out) - 1:
        if stream.uniform(i, _R_SWAP) < p:
            out[i], out[i + 1] = out[i + 1], out[i]
            if trace is not None:
                trace.append(("swap", i))
            i += 2
        else:
            i += 1
    return tuple(out)


# ---------------------------------------------------------------------------
# batch engine


class _ProfileCache(dict):
    def __init__(self, factory):
        super().__init__()
        self._factory = factory

    def __missing__(self, tok):
        return self._factory(tok)


def _line_keys(seed: int, first_line: int, count: int, rep: int) -> np.ndarray:
    """Vectorised :func:`stream_key` for ``count`` consecutive lines."""
    lines = np.arange(first_line, first_line + count, dtype=np.uint64)
    return _mix_np(_mix_np(_U(_mix(seed & _MASK)) ^ lines) ^ _U(rep & _MASK))


class NoiseEngine:
    """Vectorised realistic noising over many lines at once.

    Produces exactly what :func:`noise_sentence` produces line by line, but
    draws all uniforms of a batch in a few numpy passes.  Per-token lookups
    are cached, so an engine should live for the whole corpus in a worker.
    """

    def __init__(
        self,
        dictionary: EditDictionary,
        lexicon: MorphLexicon,
        config: NoisingConfig,
        vocab: Sequence[str] | None = None,
    ):
        self.dictionary = dictionary
        self.lexicon = lexicon
        self.config = config
        self.preps = config.prepositions(lexicon)
        self.vocab = list(vocab) if vocab is not None else None
        if config.mode == RANDOM and not self.vocab:
            raise ValueError("random mode needs a vocabulary")
        keys = sorted(dictionary.entries)
        self._key_index = {k: i for i, k in enumerate(keys)}
        flat, totals, bases = [], [], []
        running = 0
        for k in keys:
            bases.append(running)
            t = 0
            for tok, c in dictionary.entries[k]:
                flat.append(tok)
                t += c
                running += c
            totals.append(t)
        self._variant_tokens = flat
        self._cum = np.cumsum([c for k in keys for _, c in dictionary.entries[k]]).astype(np.int64)
        self._totals = np.asarray(totals, dtype=np.int64)
        self._bases = np.asarray(bases, dtype=np.int64)
        # profile 0 is "copy verbatim"
        self._pid = _ProfileCache(self._profile)
        self._p_key = [-1]
        self._p_kind = [0]
        self._p_nalt = [0]
        self._p_alts: list[Sequence[str]] = [()]
        self._arrays_for = -1

    _KIND_CODE = {PREP: 1, NOUN: 2, VERB: 3}

    def _profile(self, tok: str) -> int:
        key = self._key_index.get(tok, -1)
        kind = _typed(tok, self.lexicon)
        if key < 0 and kind is None:
            self._pid[tok] = 0
            return 0
        code = self._KIND_CODE.get(kind, 0)
        if kind == PREP:
            alts: Sequence[str] = self.preps
        elif kind == NOUN:
            alts = (self.lexicon.inflect_noun(tok).token,)
        elif kind == VERB:
            alts = self.lexicon.verb_alternatives(tok)
        else:
            alts = ()
        pid = len(self._p_key)
        self._p_key.append(key)
        self._p_kind.append(code)
        self._p_nalt.append(len(alts))
        self._p_alts.append(alts)
        self._pid[tok] = pid
        return pid

    def _arrays(self):
        if self._arrays_for != len(self._p_key):
            self._a_key = np.asarray(self._p_key, dtype=np.int64)
            self._a_kind = np.asarray(self._p_kind, dtype=np.int8)
            self._a_nalt = np.asarray(self._p_nalt, dtype=np.int64)
            self._arrays_for = len(self._p_key)
        return self._a_key, self._a_kind, self._a_nalt

    def noise_batch(self, token_lists: Sequence[Sequence[str]], first_line: int, rep: int) -> list[Sequence[str]]:
        """Noised token lists; unchanged lines are returned as given."""
        if self.config.mode == RANDOM:
            return [
                list(noise_random(toks, self.vocab, self.config, NoiseStream(self.config.seed, first_line + i, rep)))
                for i, toks in enumerate(token_lists)
            ]
        cfg = self.config
        nlines = len(token_lists)
        lengths = np.fromiter(map(len, token_lists), dtype=np.int64, count=nlines)
        flat = [tok for toks in token_lists for tok in toks]
        pids = np.fromiter(map(self._pid.__getitem__, flat), dtype=np.int64, count=len(flat))
        a_key, a_kind, a_nalt = self._arrays()
        active = np.flatnonzero(pids)
        out: list[Sequence[str]] = list(token_lists)
        if active.size == 0:
            return out
        starts = np.cumsum(lengths) - lengths
        a_line = np.searchsorted(starts, active, side="right") - 1
        # empty lines share a start offset with their successor
        a_pos = active - starts[a_line]
        line_keys = _line_keys(cfg.seed, first_line, nlines, rep)
        keys = line_keys[a_line]
        pid = pids[active]
        dict_key = a_key[pid]
        kind = a_kind[pid]

        fire_tok = dict_key >= 0
        if fire_tok.any():
            u0 = _uniform_np(keys, a_pos, _TOKEN_FIRE)
            fire_tok &= u0 < cfg.token_error_prob
        tok_idx = np.flatnonzero(fire_tok)
        lines_l = a_line.tolist()
        pos_l = a_pos.tolist()
        changes: list[tuple[int, int, str]] = []
        if tok_idx.size:
            k = dict_key[tok_idx]
            u1 = _uniform_np(keys[tok_idx], a_pos[tok_idx], _TOKEN_PICK)
            totals = self._totals[k]
            r = np.minimum(np.floor(u1 * totals).astype(np.int64), totals - 1)
            pick = np.searchsorted(self._cum, self._bases[k] + r, side="right")
            variants = self._variant_tokens
            for j, v in zip(tok_idx.tolist(), pick.tolist()):
                changes.append((lines_l[j], pos_l[j], variants[v]))

        typed = np.flatnonzero(~fire_tok & (kind > 0))
        if typed.size:
            u2 = _uniform_np(keys[typed], a_pos[typed], _TYPE_FIRE)
            typed = typed[u2 < cfg.type_error_prob]
        if typed.size:
            u3 = _uniform_np(keys[typed], a_pos[typed], _TYPE_PICK)
            tpid = pid[typed]
            nalt = a_nalt[tpid]
            choice = np.minimum(np.floor(u3 * nalt).astype(np.int64), nalt - 1)
            alts = self._p_alts
            for j, p_id, c, kd in zip(typed.tolist(), tpid.tolist(), choice.tolist(), kind[typed].tolist()):
                line, p = lines_l[j], pos_l[j]
                new = alts[p_id][c]
                if kd == 1 and new:
                    new = restore_case(token_lists[line][p], new)
                changes.append((line, p, new))

        copied: set[int] = set()
        deleted: set[int] = set()
        for line, p, new in changes:
            if line not in copied:
                out[line] = list(out[line])
                copied.add(line)
            out[line][p] = new
            if not new:
                deleted.add(line)
        for line in deleted:
            out[line] = [t for t in out[line] if t]
        return out

    def noise_lines(self, lines: Sequence[str], first_line: int, repetitions: int) -> str:
        """TSV text for a block of raw lines: ``noised<TAB>clean`` per rep."""
        token_lists = [line.split() for line in lines]
        per_rep = [self.noise_batch(token_lists, first_line, rep) for rep in range(repetitions)]
        parts = []
        for i, line in enumerate(lines):
            for rep in range(repetitions):
                parts.append(" ".join(per_rep[rep][i]))
                parts.append("\t")
                parts.append(line)
                parts.append("\n")
        return "".join(parts)


_WORKER: NoiseEngine | None = None
_WORKER_REPS = 1


def _init_worker(engine: NoiseEngine, repetitions: int) -> None:
    global _WORKER, _WORKER_REPS
    _WORKER, _WORKER_REPS = engine, repetitions


def _work(job: tuple[int, list[str]]) -> str:
    first, lines = job
    return _WORKER.noise_lines(lines, first, _WORKER_REPS)


def _chunks(lines: Iterable[str], size: int) -> Iterator[tuple[int, list[str]]]:
    it = iter(lines)
    first = 0
    while True:
        block = list(islice(it, size))
        if not block:
            return
        yield first, block
        first += len(block)


def generate_corpus(
    lines: Iterable[str],
    out: IO[str],
    dictionary: EditDictionary,
    lexicon: MorphLexicon,
    config: NoisingConfig,
    repetitions: int = 1,
    workers: int = 1,
    vocab: Sequence[str] | None = None,
    chunk_size: int = 4096,
) -> int:
    """Write ``noised<TAB>clean`` lines for every input line and repetition.

    Input lines are whitespace-tokenized; the clean side is the line itself
    with its newline stripped.  Returns the number of input lines processed.
    Output is identical for any ``workers`` and ``chunk_size``.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    engine = NoiseEngine(dictionary, lexicon, config, vocab)
    stripped = (line.rstrip("\r\n") for line in lines)
    count = 0
    if workers <= 1:
        for first, block in _chunks(stripped, chunk_size):
            out.write(engine.noise_lines(block, first, repetitions))
            count += len(block)
        return count
    counted = [0]

    def jobs():
        for first, block in _chunks(stripped, chunk_size):
            counted[0] += len(block)
            yield first, block

    ctx = mp.get_context("fork")
    with ctx.Pool(workers, initializer=_init_worker, initargs=(engine, repetitions)) as pool:
        for text in pool.imap(_work, jobs()):
            out.write(text)
    return counted[0]
