"""Copy-augmented output distribution of a Transformer decoder step.

A single decoding step mixes the generator softmax ``softmax(W_gen h)`` with
a copy distribution obtained by scattering scaled dot-product attention
weights over the source tokens onto the vocabulary.  The gate is
``sigmoid(w_alpha . o)`` where ``o`` is the attention output.  Analytic
gradients of ``-log p[target]`` are provided together with a
finite-difference checker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


def softmax(x: np.ndarray) -> np.ndarray:
    z = np.exp(x - np.max(x))
    return z / z.sum()


def sigmoid(x: float) -> float:
    # tanh form: exactly 0.5 at 0, no overflow
    return 0.5 * (1.0 + math.tanh(0.5 * x))


@dataclass(frozen=True)
class CopyMixInputs:
    H_enc: np.ndarray  # d x T'
    h_dec: np.ndarray  # d
    W_gen: np.ndarray  # V x d
    w_alpha: np.ndarray  # d
    source_token_ids: np.ndarray  # T'

    def __post_init__(self):
        for name in ("H_enc", "h_dec", "W_gen", "w_alpha"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        ids = np.asarray(self.source_token_ids, dtype=np.int64)
        object.__setattr__(self, "source_token_ids", ids)
        if self.H_enc.ndim != 2 or self.H_enc.shape[1] < 1:
            raise ValueError("H_enc must be a d x T' matrix with T' >= 1")
        d, t = self.H_enc.shape
        if self.h_dec.shape != (d,) or self.w_alpha.shape != (d,):
            raise ValueError(f"h_dec and w_alpha must have length d={d}")
        if self.W_gen.ndim != 2 or self.W_gen.shape[1] != d:
            raise ValueError(f"W_gen must be V x {d}")
        if ids.shape != (t,):
            raise ValueError(f"source_token_ids must have length T'={t}")
        if ids.size and (ids.min() < 0 or ids.max() >= self.vocab_size):
            raise ValueError("source token id outside the vocabulary")

    @property
    def d(self) -> int:
        return self.H_enc.shape[0]

    @property
    def src_len(self) -> int:
        return self.H_enc.shape[1]

    @property
    def vocab_size(self) -> int:
        return self.W_gen.shape[0]

    @classmethod
    def random(cls, rng: np.random.Generator, d: int = 4, vocab_size: int = 10, src_len: int = 3, scale: float = 1.0):
        return cls(
            H_enc=rng.normal(0, scale, (d, src_len)),
            h_dec=rng.normal(0, scale, d),
            W_gen=rng.normal(0, scale, (vocab_size, d)),
            w_alpha=rng.normal(0, scale, d),
            source_token_ids=rng.integers(0, vocab_size, src_len),
        )

    def to_json(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("H_enc", "h_dec", "W_gen", "w_alpha", "source_token_ids")}

    @classmethod
    def from_json(cls, data: dict) -> "CopyMixInputs":
        return cls(**{k: np.asarray(v) for k, v in data.items()})


def copy_attention(x: CopyMixInputs) -> tuple[np.ndarray, np.ndarray]:
    """Attention weights over source positions and the attention output."""
    s = softmax(x.h_dec @ x.H_enc / math.sqrt(x.d))
    return s, x.H_enc @ s


def copy_distribution(x: CopyMixInputs, scores: np.ndarray) -> np.ndarray:
    return np.bincount(x.source_token_ids, weights=scores, minlength=x.vocab_size)


@dataclass
class Forward:
    scores: np.ndarray
    output: np.ndarray
    p_gen: np.ndarray
    p_copy: np.ndarray
    alpha: float
    p: np.ndarray


def forward(x: CopyMixInputs, alpha_override: float | None = None) -> Forward:
    s, o = copy_attention(x)
    p_gen = softmax(x.W_gen @ x.h_dec)
    p_copy = copy_distribution(x, s)
    alpha = sigmoid(float(x.w_alpha @ o)) if alpha_override is None else float(alpha_override)
    p = (1.0 - alpha) * p_gen + alpha * p_copy
    return Forward(s, o, p_gen, p_copy, alpha, p)


def output_distribution(x: CopyMixInputs, alpha_override: float | None = None) -> tuple[np.ndarray, float]:
    f = forward(x, alpha_override)
    return f.p, f.alpha


def loss(x: CopyMixInputs, target: int, alpha_override: float | None = None) -> float:
    return -math.log(forward(x, alpha_override).p[target])


def gradients(x: CopyMixInputs, target: int, alpha_override: float | None = None) -> dict[str, np.ndarray]:
    """Analytic gradients of ``-log p[target]``.

    With ``alpha_override`` the gate is a constant, so ``w_alpha`` gets a zero
    gradient and no signal flows back through ``o``.
    """
    f = forward(x, alpha_override)
    a = f.alpha
    dp = -1.0 / f.p[target]
    d_alpha = dp * (f.p_copy[target] - f.p_gen[target])
    # generator softmax
    d_logits = dp * (1.0 - a) * f.p_gen[target] * ((np.arange(x.vocab_size) == target) - f.p_gen)
    # attention: direct copy path plus the gate's dependence on o
    d_gate = 0.0 if alpha_override is not None else d_alpha * a * (1.0 - a)
    d_o = d_gate * x.w_alpha
    d_s = dp * a * (x.source_token_ids == target) + x.H_enc.T @ d_o
    d_att = f.scores * (d_s - f.scores @ d_s)
    scale = 1.0 / math.sqrt(x.d)
    return {
        "h_dec": x.W_gen.T @ d_logits + scale * (x.H_enc @ d_att),
        "W_gen": np.outer(d_logits, x.h_dec),
        "w_alpha": d_gate * f.output,
        "H_enc": np.outer(d_o, f.scores) + scale * np.outer(x.h_dec, d_att),
    }


PARAMS = ("h_dec", "W_gen", "w_alpha", "H_enc")


def numeric_gradients(
    x: CopyMixInputs, target: int, step: float = 1e-5, alpha_override: float | None = None
) -> dict[str, np.ndarray]:
    """Central finite differences of the loss for every parameter entry."""
    out = {}
    for name in PARAMS:
        base = getattr(x, name)
        grad = np.zeros_like(base)
        for idx in np.ndindex(base.shape):
            plus, minus = base.copy(), base.copy()
            plus[idx] += step
            minus[idx] -= step
            lp = loss(replace(x, **{name: plus}), target, alpha_override)
            lm = loss(replace(x, **{name: minus}), target, alpha_override)
            grad[idx] = (lp - lm) / (2 * step)
        out[name] = grad
    return out


def relative_error(a: np.ndarray, b: np.ndarray, metric: str = "elementwise", floor: float = 1e-4) -> float:
    """``elementwise``: max |a-b| / max(|a|, |b|, floor); ``normwise``: ||a-b|| / max(||a||, ||b||, floor)."""
    if metric == "elementwise":
        denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
        return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0
    if metric == "normwise":
        return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), floor))
    raise ValueError(f"unknown metric {metric!r}")


def grad_check(
    x: CopyMixInputs,
    target: int,
    step: float = 1e-5,
    alpha_override: float | None = None,
    metric: str = "elementwise",
    floor: float = 1e-4,
) -> float:
    """Largest relative error between analytic and finite-difference gradients."""
    analytic = gradients(x, target, alpha_override)
    numeric = numeric_gradients(x, target, step, alpha_override)
    return max(relative_error(analytic[k], numeric[k], metric, floor) for k in PARAMS)


def selftest(seed: int = 0, trials: int = 1000, grad_trials: int | None = None) -> dict:
    """Run the invariant suite on random instances and summarise the worst cases."""
    rng = np.random.default_rng(seed)
    worst_sum = worst_grad = 0.0
    alpha_range = [1.0, 0.0]
    n_grad = trials if grad_trials is None else grad_trials
    for i in range(trials):
        d, v, t = int(rng.integers(1, 9)), int(rng.integers(2, 21)), int(rng.integers(1, 6))
        x = CopyMixInputs.random(rng, d, v, t)
        p, alpha = output_distribution(x)
        worst_sum = max(worst_sum, abs(math.fsum(p) - 1.0))
        alpha_range = [min(alpha_range[0], alpha), max(alpha_range[1], alpha)]
        if i < n_grad:
            worst_grad = max(worst_grad, grad_check(x, int(rng.integers(0, v))))
    return {
        "trials": trials,
        "max_sum_error": worst_sum,
        "alpha_min": alpha_range[0],
        "alpha_max": alpha_range[1],
        "max_grad_rel_error": worst_grad,
    }
