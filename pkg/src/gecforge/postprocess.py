"""Post-processing of corrector output.

Three independent steps: drop edits that touch unknown-token markers, drop
the combination of edits whose removal gives the best LM score, and drop
whole error categories that hurt F0.5 on a development set.
"""

from __future__ import annotations

import itertools
import math
import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import AnnotatedPair, Edit, ValidationError, apply_edits
from .evalstats import UNCATEGORIZED, ScoreReport, score
from .lm import NGramLm

log = logging.getLogger(__name__)

UNK = "<unk>"


@dataclass(frozen=True)
class PostprocessConfig:
    max_removed_edits: int = 7
    max_categories_removed: int = 3
    search_rounds: int = 200
    exhaustive_edit_limit: int = 12
    seed: int = 0

    def __post_init__(self):
        if self.max_removed_edits < 0:
            raise ValueError("max_removed_edits must be non-negative")
        if self.exhaustive_edit_limit < self.max_removed_edits:
            raise ValueError("exhaustive_edit_limit must be at least max_removed_edits")
        if self.max_categories_removed < 0 or self.search_rounds < 0:
            raise ValueError("category search bounds must be non-negative")


def strip_unk_edits(source: Sequence[str], edits: Sequence[Edit], unk: str = UNK) -> list[Edit]:
    """Drop edits whose source span covers ``unk`` or whose replacement contains it."""
    return [
        e
        for e in edits
        if unk not in source[e.span_start : e.span_end] and unk not in e.replacement
    ]


def _kept(edits: Sequence[Edit], removed: Iterable[int]) -> list[Edit]:
    gone = set(removed)
    return [e for i, e in enumerate(edits) if i not in gone]


def _sentence_score(source: Sequence[str], edits: Sequence[Edit], lm: NGramLm) -> float:
    return lm.score(apply_edits(source, edits))


def lm_select_edits(
    source: Sequence[str],
    edits: Sequence[Edit],
    lm: NGramLm,
    config: PostprocessConfig = PostprocessConfig(),
) -> list[Edit]:
    """Remove the subset of at most ``max_removed_edits`` edits that maximises the LM score.

    Up to ``exhaustive_edit_limit`` edits every subset is tried, smaller
    removals first and lexicographically within a size, so ties keep the
    earliest.  Beyond that, edits are removed one at a time while doing so
    strictly improves the score.
    """
    edits = list(edits)
    n = len(edits)
    if n == 0 or config.max_removed_edits == 0:
        return edits
    if n <= config.exhaustive_edit_limit:
        best_score, best = None, ()
        for k in range(min(config.max_removed_edits, n) + 1):
            for removed in itertools.combinations(range(n), k):
                s = _sentence_score(source, _kept(edits, removed), lm)
                if best_score is None or s > best_score:
                    best_score, best = s, removed
        return _kept(edits, best)
    return greedy_select_edits(source, edits, lm, config.max_removed_edits)


def greedy_select_edits(source: Sequence[str], edits: Sequence[Edit], lm: NGramLm, max_removed: int) -> list[Edit]:
    removed: list[int] = []
    current = _sentence_score(source, edits, lm)
    while len(removed) < max_removed:
        best_gain, best_i = 0.0, None
        for i in range(len(edits)):
            if i in removed:
                continue
            s = _sentence_score(source, _kept(edits, removed + [i]), lm)
            if s - current > best_gain:
                best_gain, best_i = s - current, i
        if best_i is None:
            break
        removed.append(best_i)
        current += best_gain
    return _kept(edits, removed)


# ---------------------------------------------------------------------------
# category filtering


def _category(e: Edit) -> str:
    return e.category if e.category is not None else UNCATEGORIZED


def drop_categories(hypotheses: Sequence[Sequence[Edit]], dropped: Iterable[str]) -> list[list[Edit]]:
    gone = set(dropped)
    return [[e for e in hyp if _category(e) not in gone] for hyp in hypotheses]


def candidate_subsets(categories: Sequence[str], config: PostprocessConfig) -> list[tuple[str, ...]]:
    """The empty set, every subset of size 1 and 2, then seeded random larger subsets.

    When the total number of admissible subsets fits in the round budget
    they are all enumerated instead.
    """
    cats = sorted(set(categories))
    limit = min(config.max_categories_removed, len(cats))
    everything = sum(math.comb(len(cats), k) for k in range(limit + 1))
    if everything <= config.search_rounds + 1:
        return [c for k in range(limit + 1) for c in itertools.combinations(cats, k)]
    out: list[tuple[str, ...]] = [()]
    for k in range(1, min(2, limit) + 1):
        out.extend(itertools.combinations(cats, k))
    seen = set(out)
    budget = config.search_rounds + 1
    if limit >= 3:
        rng = np.random.default_rng(config.seed)
        attempts = 0
        while len(out) < budget and attempts < 50 * budget:
            attempts += 1
            k = int(rng.integers(3, limit + 1))
            pick = tuple(sorted(rng.choice(len(cats), size=k, replace=False)))
            subset = tuple(cats[i] for i in pick)
            if subset not in seen:
                seen.add(subset)
                out.append(subset)
    return out[:budget] if len(out) > budget else out


def category_filter_search(
    hypotheses: Sequence[Sequence[Edit]],
    gold: Sequence[AnnotatedPair],
    categories: Iterable[str] | None = None,
    config: PostprocessConfig = PostprocessConfig(),
) -> tuple[tuple[str, ...], ScoreReport]:
    """Category subset whose removal gives the best dev F0.5, and its report.

    Ties go to the smaller subset, then to the lexicographically first.  The
    empty subset is always evaluated, so the result never scores below it.
    """
    if not gold:
        raise ValidationError("category search needs a non-empty development set")
    if categories is None:
        categories = {_category(e) for hyp in hypotheses for e in hyp}
    best: tuple[tuple[str, ...], ScoreReport] | None = None
    # canonical order, so a strict comparison leaves ties with the smaller, earlier subset
    for subset in sorted(candidate_subsets(list(categories), config), key=lambda c: (len(c), c)):
        report = score(drop_categories(hypotheses, subset), gold)
        if best is None or report.f_half > best[1].f_half:
            best = (subset, report)
        log.debug("drop %s -> F0.5 %.4f", subset, report.f_half)
    return best
