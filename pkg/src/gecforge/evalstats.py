"""Span-based correction scoring and corpus edit statistics.

Zero-denominator conventions used throughout: precision is 1.0 when the
system proposes no edits, recall is 1.0 when the gold standard has none, and
F0.5 is 0.0 when precision and recall are both zero.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import AnnotatedPair, Edit, ValidationError

UNCATEGORIZED = "-NONE-"


def precision_recall_f(tp: int, fp: int, fn: int, beta: float = 0.5) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 1.0
    r = tp / (tp + fn) if tp + fn else 1.0
    b2 = beta * beta
    denom = b2 * p + r
    f = (1 + b2) * p * r / denom if denom else 0.0
    return p, r, f


@dataclass
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return precision_recall_f(self.tp, self.fp, self.fn)[0]

    @property
    def recall(self) -> float:
        return precision_recall_f(self.tp, self.fp, self.fn)[1]

    @property
    def f_half(self) -> float:
        return precision_recall_f(self.tp, self.fp, self.fn)[2]

    def add(self, other: "Counts") -> None:
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn

    def to_json(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f_half": self.f_half,
        }


@dataclass
class ScoreReport(Counts):
    per_category: dict[str, Counts] = field(default_factory=dict)

    def to_json(self) -> dict:
        out = super().to_json()
        out["per_category"] = {c: v.to_json() for c, v in sorted(self.per_category.items())}
        return out

    def format_table(self) -> str:
        rows = [f"{'category':<12}{'TP':>6}{'FP':>6}{'FN':>6}{'P':>8}{'R':>8}{'F0.5':>8}"]
        items = sorted(self.per_category.items()) + [("ALL", self)]
        for name, c in items:
            rows.append(
                f"{name:<12}{c.tp:>6}{c.fp:>6}{c.fn:>6}{c.precision:>8.4f}{c.recall:>8.4f}{c.f_half:>8.4f}"
            )
        return "\n".join(rows)


def _match(hyp: Sequence[Edit], gold: Sequence[Edit]) -> tuple[list[Edit], list[Edit], list[Edit]]:
    gold_keys = {e.key: e for e in gold}
    hyp_keys = {e.key for e in hyp}
    tps = [gold_keys[e.key] for e in hyp if e.key in gold_keys]
    fps = [e for e in hyp if e.key not in gold_keys]
    fns = [e for e in gold if e.key not in hyp_keys]
    return tps, fps, fns


def _category(e: Edit) -> str:
    return e.category if e.category is not None else UNCATEGORIZED


def best_annotator(hyp: Sequence[Edit], pair: AnnotatedPair) -> int:
    """Annotator whose edits give the highest sentence-level F0.5 (lowest id on ties)."""
    best_id, best_f = None, -1.0
    for annotator, gold in pair.annotations:
        tps, fps, fns = _match(hyp, gold)
        f = precision_recall_f(len(tps), len(fps), len(fns))[2]
        if f > best_f or (f == best_f and annotator < best_id):
            best_id, best_f = annotator, f
    return best_id


def score(hypotheses: Sequence[Sequence[Edit]], gold: Sequence[AnnotatedPair]) -> ScoreReport:
    """Corpus-level counts, choosing the best annotator per sentence.

    Edits match on (span_start, span_end, replacement); categories only
    decide the per-category tallies (gold category for TP/FN, hypothesis
    category for FP).
    """
    if len(hypotheses) != len(gold):
        raise ValidationError(f"{len(hypotheses)} hypothesis sentences but {len(gold)} gold sentences")
    report = ScoreReport()
    cats = report.per_category
    for hyp, pair in zip(hypotheses, gold):
        chosen = pair.edits(best_annotator(hyp, pair))
        tps, fps, fns = _match(hyp, chosen)
        report.add(Counts(len(tps), len(fps), len(fns)))
        for e in tps:
            cats.setdefault(_category(e), Counts()).tp += 1
        for e in fps:
            cats.setdefault(_category(e), Counts()).fp += 1
        for e in fns:
            cats.setdefault(_category(e), Counts()).fn += 1
    return report


def score_m2(hyp_pairs: Sequence[AnnotatedPair], ref_pairs: Sequence[AnnotatedPair]) -> ScoreReport:
    """Score a hypothesis M2 file (first annotator) against a reference M2 file."""
    if len(hyp_pairs) != len(ref_pairs):
        raise ValidationError(f"{len(hyp_pairs)} hypothesis blocks but {len(ref_pairs)} reference blocks")
    for i, (h, r) in enumerate(zip(hyp_pairs, ref_pairs)):
        if h.source != r.source:
            raise ValidationError(f"sentence {i}: hypothesis and reference sources differ")
    return score([h.edits() for h in hyp_pairs], ref_pairs)


# ---------------------------------------------------------------------------
# corpus statistics


def sentence_densities(pairs: Sequence[AnnotatedPair], annotators: str = "first") -> list[float]:
    """Edits per token for each sentence.

    ``annotators="first"`` counts the first annotator only; ``"mean"``
    averages the edit count over all annotators of the sentence.
    """
    if annotators not in ("first", "mean"):
        raise ValueError(f"unknown annotator mode {annotators!r}")
    out = []
    for i, pair in enumerate(pairs):
        if not pair.source:
            raise ValidationError(f"sentence {i} is empty")
        if annotators == "first":
            n = len(pair.edits())
        else:
            n = sum(len(e) for _, e in pair.annotations) / len(pair.annotations)
        out.append(n / len(pair.source))
    return out


def edit_density(pairs: Sequence[AnnotatedPair], annotators: str = "first") -> float:
    if not pairs:
        raise ValidationError("edit density of an empty corpus is undefined")
    return math.fsum(sentence_densities(pairs, annotators)) / len(pairs)


def _observed(a: np.ndarray, b: np.ndarray) -> float:
    return abs(a.mean() - b.mean())


def _tolerance(values: np.ndarray) -> float:
    # permuted means differ from the observed one by rounding only
    return 1e-9 * max(1.0, float(np.abs(values).max()))


def permutation_test(
    group_a: Sequence[float],
    group_b: Sequence[float],
    rounds: int = 10_000,
    seed: int = 0,
    batch: int = 1000,
) -> float:
    """Approximate two-sided permutation test on the difference of means.

    Returns ``(1 + hits) / (rounds + 1)`` where ``hits`` counts random
    relabelings whose statistic reaches the observed one.
    """
    a = np.asarray(group_a, dtype=np.float64)
    b = np.asarray(group_b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("both groups must be non-empty")
    pooled = np.concatenate([a, b])
    n_a, n = a.size, pooled.size
    observed = _observed(a, b)
    tol = _tolerance(pooled)
    rng = np.random.default_rng(seed)
    total = pooled.sum()
    hits = 0
    done = 0
    while done < rounds:
        k = min(batch, rounds - done)
        perm = rng.permuted(np.broadcast_to(pooled, (k, n)), axis=1)
        sum_a = perm[:, :n_a].sum(axis=1)
        stat = np.abs(sum_a / n_a - (total - sum_a) / (n - n_a))
        hits += int(np.count_nonzero(stat >= observed - tol))
        done += k
    return (1 + hits) / (rounds + 1)


def permutation_test_exact(group_a: Sequence[float], group_b: Sequence[float]) -> float:
    """Exact p-value over every split of the pooled values (small groups only)."""
    a = np.asarray(group_a, dtype=np.float64)
    b = np.asarray(group_b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("both groups must be non-empty")
    pooled = np.concatenate([a, b])
    n_a, n = a.size, pooled.size
    if math.comb(n, n_a) > 5_000_000:
        raise ValueError("too many splits for exact enumeration")
    observed = _observed(a, b)
    tol = _tolerance(pooled)
    total = pooled.sum()
    hits = count = 0
    for idx in itertools.combinations(range(n), n_a):
        sum_a = pooled[list(idx)].sum()
        stat = abs(sum_a / n_a - (total - sum_a) / (n - n_a))
        hits += stat >= observed - tol
        count += 1
    return hits / count
