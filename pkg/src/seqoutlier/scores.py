"""Count-based stopping statistics, shared by every sequential engine.

The stopping rules compare n * (score difference) against a threshold,
where the scores are the bracketed KL sums over a hypothesis family.
Those products are computed here directly from integer symbol counts:

    n * D(gamma_i || U/(n s)) = sum_y C_i(y) ln C_i(y)
                                - sum_y C_i(y) ln U(y) + n ln s

summed over group members, with U the group count sum.  Working from
counts avoids forming per-step empirical distributions and is exact.

One kernel instance serves both the one-step-at-a-time engines and the
batched Monte-Carlo runner: ``nstat`` accepts counts of shape (M, k) or
(..., M, k) and performs the same arithmetic in the same order for both,
so stopping decisions agree bit for bit across the two paths.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.special import xlogy

from .hypothesis_space import Hypothesis

__all__ = ["ScoreKernel", "best_and_gap"]

_FAMILIES = ("msprt", "identical_typ", "identical_univ", "distinct_typ", "distinct_univ")


def _rows_dot_log(counts: np.ndarray, logq: np.ndarray) -> np.ndarray:
    """sum_y C(y) ln q(y) per sequence, with the 0 * ln 0 = 0 convention.

    Propagates -inf when a zero-probability symbol has positive count.
    """
    prod = counts * logq
    return np.where(counts > 0, prod, 0.0).sum(axis=-1)


def _plogp(x: np.ndarray) -> np.ndarray:
    return xlogy(x, x).sum(axis=-1)


class ScoreKernel:
    """n*score statistics over a fixed, ordered hypothesis list.

    Lower is better for every family; for the known-distributions MSPRT the
    statistic is the negated exact log-likelihood, for the generalized-
    likelihood families it is n times the KL-sum score.
    """

    def __init__(
        self,
        hypotheses: Sequence[Hypothesis],
        M: int,
        alphabet_size: int,
        family: str,
        log_mu: np.ndarray | None = None,
        log_pi: np.ndarray | None = None,
    ) -> None:
        if family not in _FAMILIES:
            raise ValueError(f"unknown statistic family {family!r}")
        if len(hypotheses) < 2:
            raise ValueError("need at least two hypotheses to form a gap")
        if family == "msprt" and (log_mu is None or log_pi is None):
            raise ValueError("msprt requires log_mu and log_pi")
        if family.endswith("_typ") and log_pi is None:
            raise ValueError("known-typical families require log_pi")

        self.hypotheses = tuple(hypotheses)
        self.family = family
        self.M = M
        self.alphabet_size = alphabet_size
        self.log_mu = None if log_mu is None else np.asarray(log_mu, dtype=np.float64)
        self.log_pi = None if log_pi is None else np.asarray(log_pi, dtype=np.float64)

        self._mask = np.zeros((len(hypotheses), M), dtype=np.float64)
        self._members = []
        self._complements = []
        for r, h in enumerate(hypotheses):
            self._mask[r, list(h.outliers)] = 1.0
            self._members.append(np.array(h.outliers, dtype=np.intp))
            self._complements.append(
                np.array([j for j in range(M) if j not in h.outliers], dtype=np.intp)
            )
        self._cmask = 1.0 - self._mask
        sizes = np.array([h.size for h in hypotheses], dtype=np.float64)
        self._sizes = sizes
        self._csizes = M - sizes
        # n-proportional constants: s ln s per member group, likewise for complements
        self._slogs = np.array([s * math.log(s) if s > 0 else 0.0 for s in sizes])
        self._clogc = np.array([c * math.log(c) if c > 0 else 0.0 for c in self._csizes])

    @property
    def growing_threshold(self) -> bool:
        """Whether the stopping threshold grows with n (all GL families do)."""
        return self.family != "msprt"

    def _gather_sum(self, rows: np.ndarray, index_sets: list[np.ndarray]) -> np.ndarray:
        # Sum of per-sequence values over each hypothesis's index set.  A plain
        # gather keeps -inf sentinels out of non-member terms (0 * -inf is nan).
        cols = [rows[..., idx].sum(axis=-1) for idx in index_sets]
        return np.stack(cols, axis=-1)

    def _plogp_sets(
        self, counts: np.ndarray, plogp_rows: np.ndarray, index_sets: list[np.ndarray]
    ) -> np.ndarray:
        """plogp of groupwise count sums, one column per index set.

        Count sums of integer-valued float64 arrays are exact, so gathering
        and adding member rows matches any other summation layout bit for
        bit; singleton groups reuse the per-row values directly.
        """
        out = np.empty(counts.shape[:-2] + (len(index_sets),), dtype=np.float64)
        multi = [h for h, idx in enumerate(index_sets) if idx.size != 1]
        for h, idx in enumerate(index_sets):
            if idx.size == 1:
                out[..., h] = plogp_rows[..., idx[0]]
        if multi:
            stacked = np.stack(
                [counts[..., index_sets[h], :].sum(axis=-2) for h in multi], axis=-2
            )
            vals = _plogp(stacked)
            for pos, h in enumerate(multi):
                out[..., h] = vals[..., pos]
        return out

    def nstat(self, counts: np.ndarray, n) -> np.ndarray:
        """Statistic vector over the hypothesis list.

        Args:
            counts: per-sequence symbol counts, shape (..., M, k).
            n: number of observation vectors, broadcastable to counts.shape[:-2].

        Returns:
            Array of shape (..., H), one value per hypothesis, lower = better.
        """
        counts = np.asarray(counts, dtype=np.float64)
        if self.family == "msprt":
            a_rows = _rows_dot_log(counts, self.log_mu)
            b_rows = _rows_dot_log(counts, self.log_pi)
            return -(
                self._gather_sum(a_rows, self._members)
                + self._gather_sum(b_rows, self._complements)
            )

        n_arr = np.asarray(n, dtype=np.float64)
        nlogn = xlogy(n_arr, n_arr)
        plogp_rows = _plogp(counts)

        if self.family == "identical_typ":
            member_plogp = self._gather_sum(plogp_rows, self._members)
            b_rows = _rows_dot_log(counts, self.log_pi)
            comp_b = self._gather_sum(b_rows, self._complements)
            return (
                member_plogp
                - self._plogp_sets(counts, plogp_rows, self._members)
                + n_arr[..., None] * self._slogs
                - comp_b
                - nlogn[..., None] * self._csizes
            )

        if self.family == "identical_univ":
            total_plogp = plogp_rows.sum(axis=-1)
            return (
                total_plogp[..., None]
                - self._plogp_sets(counts, plogp_rows, self._members)
                - self._plogp_sets(counts, plogp_rows, self._complements)
                + n_arr[..., None] * (self._slogs + self._clogc)
            )

        comp_plogp = self._gather_sum(plogp_rows, self._complements)
        if self.family == "distinct_typ":
            b_rows = _rows_dot_log(counts, self.log_pi)
            comp_b = self._gather_sum(b_rows, self._complements)
            return comp_plogp - comp_b - nlogn[..., None] * self._csizes

        # distinct_univ
        return (
            comp_plogp
            - self._plogp_sets(counts, plogp_rows, self._complements)
            + n_arr[..., None] * self._clogc
        )


def best_and_gap(stats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Argmin index and runner-up gap along the last axis.

    Ties resolve to the first (enumeration-order) index.  When the two
    smallest entries are both infinite the gap is defined as zero.
    """
    best = np.argmin(stats, axis=-1)
    two = np.partition(stats, 1, axis=-1)
    gap = two[..., 1] - two[..., 0]
    if np.ndim(gap) == 0:
        return best, np.float64(0.0) if math.isnan(float(gap)) else gap
    return best, np.where(np.isnan(gap), 0.0, gap)
