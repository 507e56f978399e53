"""Token alignment, edit extraction and a coarse rule-based edit classifier."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Collection, Sequence

from .corpus import Edit

if TYPE_CHECKING:
    from .lexicon import MorphLexicon

MATCH, SUBSTITUTE, DELETE, INSERT, TRANSPOSE = "match", "substitute", "delete", "insert", "transpose"

# Costs in half-units so the DP stays in exact integer arithmetic.
COST_MATCH = 0
COST_SUB = 2
COST_SUB_CASE = 1
COST_INDEL = 2
COST_TRANSPOSE = 3


@dataclass(frozen=True)
class AlignOp:
    kind: str
    src_span: tuple[int, int]
    tgt_span: tuple[int, int]


def _sub_cost(a: str, b: str) -> int:
    if a == b:
        return COST_MATCH
    if a.lower() == b.lower():
        return COST_SUB_CASE
    return COST_SUB


def _cost_table(source: Sequence[str], target: Sequence[str]) -> list[list[int]]:
    n, m = len(source), len(target)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i * COST_INDEL
    for j in range(1, m + 1):
        dist[0][j] = j * COST_INDEL
    for i in range(1, n + 1):
        s = source[i - 1]
        row, prev = dist[i], dist[i - 1]
        for j in range(1, m + 1):
            t = target[j - 1]
            best = prev[j - 1] + _sub_cost(s, t)
            if prev[j] + COST_INDEL < best:
                best = prev[j] + COST_INDEL
            if row[j - 1] + COST_INDEL < best:
                best = row[j - 1] + COST_INDEL
            if (
                i > 1
                and j > 1
                and s != t
                and s == target[j - 2]
                and source[i - 2] == t
                and dist[i - 2][j - 2] + COST_TRANSPOSE < best
            ):
                best = dist[i - 2][j - 2] + COST_TRANSPOSE
            row[j] = best
    return dist


def alignment_cost(source: Sequence[str], target: Sequence[str]) -> float:
    """Minimal alignment cost in token units (substitution = 1)."""
    return _cost_table(source, target)[len(source)][len(target)] / 2


def align(source: Sequence[str], target: Sequence[str]) -> list[AlignOp]:
    """Minimum-cost alignment of two token sequences.

    Costs: match 0, substitution 1 (0.5 when the tokens differ only in case),
    insertion and deletion 1, adjacent transposition 1.5.  Among optimal
    scripts the backtrace prefers match > substitute > delete > insert >
    transpose at every step, which makes the output deterministic.
    """
    dist = _cost_table(source, target)
    i, j = len(source), len(target)
    ops: list[AlignOp] = []
    while i > 0 or j > 0:
        here = dist[i][j]
        if i > 0 and j > 0:
            c = _sub_cost(source[i - 1], target[j - 1])
            if dist[i - 1][j - 1] + c == here:
                kind = MATCH if c == COST_MATCH else SUBSTITUTE
                ops.append(AlignOp(kind, (i - 1, i), (j - 1, j)))
                i, j = i - 1, j - 1
                continue
        if i > 0 and dist[i - 1][j] + COST_INDEL == here:
            ops.append(AlignOp(DELETE, (i - 1, i), (j, j)))
            i -= 1
            continue
        if j > 0 and dist[i][j - 1] + COST_INDEL == here:
            ops.append(AlignOp(INSERT, (i, i), (j - 1, j)))
            j -= 1
            continue
        # only a transposition can remain
        ops.append(AlignOp(TRANSPOSE, (i - 2, i), (j - 2, j)))
        i, j = i - 2, j - 2
    ops.reverse()
    return ops


def script_cost(ops: Sequence[AlignOp], source: Sequence[str], target: Sequence[str]) -> float:
    total = 0
    for op in ops:
        if op.kind in (MATCH, SUBSTITUTE):
            total += _sub_cost(source[op.src_span[0]], target[op.tgt_span[0]])
        elif op.kind in (INSERT, DELETE):
            total += COST_INDEL
        else:
            total += COST_TRANSPOSE
    return total / 2


def extract_edits(source: Sequence[str], target: Sequence[str]) -> list[Edit]:
    """Edits turning ``source`` into ``target``; adjacent non-match ops merge."""
    edits: list[Edit] = []
    run: list[AlignOp] = []

    def flush():
        if run:
            s0, s1 = run[0].src_span[0], run[-1].src_span[1]
            t0, t1 = run[0].tgt_span[0], run[-1].tgt_span[1]
            edits.append(Edit(s0, s1, tuple(target[t0:t1])))
            run.clear()

    for op in align(source, target):
        if op.kind == MATCH:
            flush()
        else:
            run.append(op)
    flush()
    return edits


# ---------------------------------------------------------------------------
# classification

CATEGORIES = ("PUNCT", "PREP", "NOUN:NUM", "VERB:FORM", "SPELL", "ORTH", "OTHER")


def _is_punct_token(tok: str) -> bool:
    return bool(tok) and all(not ch.isalnum() for ch in tok)


def char_distance(a: str, b: str, cap: int | None = None) -> int:
    """Restricted Damerau-Levenshtein distance between two strings.

    With ``cap`` set, returns ``cap + 1`` as soon as the distance provably
    exceeds it.
    """
    if a == b:
        return 0
    la, lb = len(a), len(b)
    if cap is not None and abs(la - lb) > cap:
        return cap + 1
    prev2: list[int] | None = None
    prev = list(range(lb + 1))
    for i in range(1, la + 1):
        cur = [i] + [0] * lb
        ai = a[i - 1]
        row_min = i
        for j in range(1, lb + 1):
            bj = b[j - 1]
            v = prev[j - 1] + (ai != bj)
            if prev[j] + 1 < v:
                v = prev[j] + 1
            if cur[j - 1] + 1 < v:
                v = cur[j - 1] + 1
            if prev2 is not None and j > 1 and ai == b[j - 2] and a[i - 2] == bj and prev2[j - 2] + 1 < v:
                v = prev2[j - 2] + 1
            cur[j] = v
            if v < row_min:
                row_min = v
        if cap is not None and row_min > cap:
            return cap + 1
        prev2, prev = prev, cur
    return prev[lb] if cap is None else min(prev[lb], cap + 1)


def classify_edit(
    source: Sequence[str],
    edit: Edit,
    lexicon: "MorphLexicon",
    vocab: Collection[str] | None = None,
) -> str:
    """Assign one of :data:`CATEGORIES` to ``edit`` by simple rules.

    ``vocab`` (lowercase words) decides whether a source token is
    out-of-vocabulary for the SPELL rule; without it the lexicon's own word
    list is used.
    """
    orig = tuple(source[edit.span_start : edit.span_end])
    corr = edit.replacement
    both = orig + corr
    if both and all(_is_punct_token(t) for t in both):
        return "PUNCT"
    preps = lexicon.prepositions
    o_str, c_str = " ".join(orig).lower(), " ".join(corr).lower()
    if len(orig) <= 1 and len(corr) <= 1 and o_str in preps and c_str in preps:
        return "PREP"
    if len(orig) == 1 and len(corr) == 1:
        o, c = orig[0].lower(), corr[0].lower()
        if o != c:
            if lexicon.noun_pairs.get(o) == c:
                return "NOUN:NUM"
            lemmas = lexicon.verb_lemmas.get(o, ())
            if any(c in lexicon.verb_forms[lemma].values() for lemma in lemmas):
                return "VERB:FORM"
    if orig and corr and o_str == c_str and orig != corr:
        return "ORTH"
    if len(orig) == 1 and len(corr) == 1 and orig[0].isalpha() and corr[0].isalpha():
        known = vocab if vocab is not None else lexicon.known_words
        o = orig[0].lower()
        if o not in known and char_distance(o, corr[0].lower(), cap=2) <= 2:
            return "SPELL"
    return "OTHER"
