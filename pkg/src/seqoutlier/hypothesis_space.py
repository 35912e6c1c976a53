"""Candidate outlier subsets and their generalized-likelihood scores.

A hypothesis names the subset of sequences assumed to be outliers.  The
identical-outlier model enumerates every subset of size 0..K (the empty
subset is the no-outlier null); the distinct-outlier model enumerates the
subsets of size exactly K and has no null.

Each scoring function returns the bracketed KL sum of the corresponding
stopping rule: the generalized log-likelihood of the data under the
hypothesis, rescaled by -1/n and with the sample-entropy part dropped.
Lower score means more likely; the instantaneous estimate is the argmin.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .distributions import Distribution, mixture, relative_entropy

__all__ = [
    "Hypothesis",
    "HypothesisSpace",
    "enumerate_hypotheses",
    "gl_score_typ",
    "gl_score_univ",
    "gl_score_distinct_typ",
    "gl_score_distinct_univ",
    "best_hypothesis",
]


@dataclass(frozen=True)
class Hypothesis:
    """A candidate outlier subset, stored as a sorted tuple of indices."""

    outliers: tuple[int, ...]

    def __post_init__(self) -> None:
        if list(self.outliers) != sorted(set(self.outliers)):
            raise ValueError("outlier indices must be sorted and unique")
        if self.outliers and self.outliers[0] < 0:
            raise ValueError("outlier indices must be nonnegative")

    @property
    def size(self) -> int:
        return len(self.outliers)

    @property
    def is_null(self) -> bool:
        return not self.outliers

    @property
    def sort_key(self) -> tuple:
        # Enumeration order: by subset size, then lexicographic.
        return (len(self.outliers), self.outliers)

    def to_list(self) -> list[int]:
        return list(self.outliers)

    @classmethod
    def from_list(cls, indices: Sequence[int]) -> "Hypothesis":
        return cls(tuple(sorted(int(i) for i in indices)))

    def __str__(self) -> str:
        # JSON serialization: sorted index list, the null hypothesis as [].
        return "[" + ",".join(str(i) for i in self.outliers) + "]"


@dataclass(frozen=True)
class HypothesisSpace:
    """Deterministically ordered list of candidate outlier subsets."""

    M: int
    K: int
    model: str
    hypotheses: tuple[Hypothesis, ...]

    def __len__(self) -> int:
        return len(self.hypotheses)

    @property
    def null(self) -> Hypothesis:
        if self.model != "identical":
            raise ValueError("the distinct-outlier model has no null hypothesis")
        return self.hypotheses[0]

    def non_null(self) -> tuple[Hypothesis, ...]:
        return tuple(h for h in self.hypotheses if not h.is_null)

    def by_size(self, size: int) -> tuple[Hypothesis, ...]:
        return tuple(h for h in self.hypotheses if h.size == size)

    def index(self, hyp: Hypothesis) -> int:
        return self.hypotheses.index(hyp)

    def mask_matrix(self, hypotheses: Sequence[Hypothesis] | None = None) -> np.ndarray:
        """0/1 membership matrix of shape (H, M): row h marks the outliers of h."""
        hyps = self.hypotheses if hypotheses is None else hypotheses
        mask = np.zeros((len(hyps), self.M), dtype=np.float64)
        for r, h in enumerate(hyps):
            mask[r, list(h.outliers)] = 1.0
        return mask


def enumerate_hypotheses(M: int, K: int, model: str = "identical") -> HypothesisSpace:
    """Enumerate candidate outlier subsets for M sequences, at most/exactly K outliers.

    The identical model includes the empty (null) subset and all subsets of
    size up to K; the distinct model contains exactly the size-K subsets.
    Order is by subset size, then lexicographic.
    """
    if model not in ("identical", "distinct"):
        raise ValueError(f"unknown model {model!r}")
    if not isinstance(M, int) or not isinstance(K, int):
        raise ValueError("M and K must be integers")
    if M < 3:
        raise ValueError(f"need at least 3 sequences, got M={M}")
    if K < 1 or 2 * K >= M:
        raise ValueError(f"need 1 <= K < M/2, got K={K} with M={M}")
    sizes = range(0, K + 1) if model == "identical" else (K,)
    hyps = [
        Hypothesis(combo)
        for s in sizes
        for combo in itertools.combinations(range(M), s)
    ]
    return HypothesisSpace(M=M, K=K, model=model, hypotheses=tuple(hyps))


def _check_gammas(hyp: Hypothesis, gammas: Sequence[Distribution]) -> None:
    if hyp.outliers and hyp.outliers[-1] >= len(gammas):
        raise ValueError("hypothesis refers to a sequence index beyond the data")


def gl_score_typ(hyp: Hypothesis, gammas: Sequence[Distribution], pi: Distribution) -> float:
    """Known-typical score: sum_{i in S} D(g_i || mean_S) + sum_{j not in S} D(g_j || pi).

    mean_S is the equal-weight mixture of the empiricals in S, the ML
    estimate of the shared outlier distribution.  The null subset has no
    generalized likelihood in this family and is rejected.
    """
    if hyp.is_null:
        raise ValueError("the null hypothesis has no generalized-likelihood score")
    _check_gammas(hyp, gammas)
    mu_hat = mixture([(1.0, gammas[i]) for i in hyp.outliers])
    score = 0.0
    for i, g in enumerate(gammas):
        score += relative_entropy(g, mu_hat if i in hyp.outliers else pi)
    return score


def gl_score_univ(hyp: Hypothesis, gammas: Sequence[Distribution]) -> float:
    """Fully universal score: both the outlier and typical laws replaced by
    group means of the empiricals (over S and its complement)."""
    if hyp.is_null:
        raise ValueError("the null hypothesis has no generalized-likelihood score")
    if hyp.size >= len(gammas):
        raise ValueError("hypothesis must leave at least one typical sequence")
    _check_gammas(hyp, gammas)
    members = set(hyp.outliers)
    mu_hat = mixture([(1.0, gammas[i]) for i in hyp.outliers])
    pi_hat = mixture([(1.0, g) for j, g in enumerate(gammas) if j not in members])
    score = 0.0
    for i, g in enumerate(gammas):
        score += relative_entropy(g, mu_hat if i in members else pi_hat)
    return score


def gl_score_distinct_typ(
    hyp: Hypothesis,
    gammas: Sequence[Distribution],
    pi: Distribution,
    K: int | None = None,
) -> float:
    """Distinct-outlier, known-typical score: sum_{j not in S} D(g_j || pi).

    Outlier sequences drop out entirely: each one's ML estimate is its own
    empirical, contributing zero.
    """
    if K is not None and hyp.size != K:
        raise ValueError(f"hypothesis must have exactly K={K} outliers, got {hyp.size}")
    if hyp.is_null:
        raise ValueError("distinct-outlier hypotheses are nonempty")
    _check_gammas(hyp, gammas)
    members = set(hyp.outliers)
    return sum(relative_entropy(g, pi) for j, g in enumerate(gammas) if j not in members)


def gl_score_distinct_univ(
    hyp: Hypothesis,
    gammas: Sequence[Distribution],
    K: int | None = None,
) -> float:
    """Distinct-outlier universal score: complement empiricals against their
    own pooled mean, sum_{j not in S} D(g_j || mean of complement)."""
    if K is not None and hyp.size != K:
        raise ValueError(f"hypothesis must have exactly K={K} outliers, got {hyp.size}")
    if hyp.is_null:
        raise ValueError("distinct-outlier hypotheses are nonempty")
    if hyp.size >= len(gammas):
        raise ValueError("hypothesis must leave at least one typical sequence")
    _check_gammas(hyp, gammas)
    members = set(hyp.outliers)
    rest = [g for j, g in enumerate(gammas) if j not in members]
    pooled = mixture([(1.0, g) for g in rest])
    return sum(relative_entropy(g, pooled) for g in rest)


def best_hypothesis(scores: Mapping[Hypothesis, float]) -> tuple[Hypothesis, float]:
    """Argmin of the score map and the runner-up gap.

    Ties break by enumeration order (smallest subset, then lexicographic).
    The gap is min over competitors of (score - best score); a single-entry
    map yields the infinity sentinel.
    """
    if not scores:
        raise ValueError("empty score map")
    items = sorted(scores.items(), key=lambda kv: kv[0].sort_key)
    best_h, best_s = items[0]
    for h, s in items:
        if math.isnan(s):
            raise ValueError(f"NaN score for hypothesis {h}")
        if s < best_s:
            best_h, best_s = h, s
    gap = math.inf
    for h, s in items:
        if h != best_h:
            d = s - best_s
            if math.isnan(d):  # inf - inf: all-infinite score map
                d = 0.0
            gap = min(gap, d)
    return best_h, gap
