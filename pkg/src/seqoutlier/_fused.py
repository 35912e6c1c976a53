"""Fused stepping loop behind the sequential engines and the Monte-Carlo runner.

One jitted function advances trials through a block of observations:
symbol decode from uniforms, count update, statistic over the hypothesis
list, leader/runner-up gap, and threshold comparison per pending
threshold.  Both the one-trial engines and the batched harness call this
same function, so their stopping decisions agree bit for bit; the numpy
``ScoreKernel`` remains the reference the fused statistics are tested
against.

x ln x terms over integer counts come from a shared lookup table built
with ``scipy.special.xlogy``, grown on demand.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from scipy.special import xlogy

from .scores import ScoreKernel

FAMILY_CODES = {
    "msprt": 0,
    "identical_typ": 1,
    "identical_univ": 2,
    "distinct_typ": 3,
    "distinct_univ": 4,
}


class PlogpTable:
    """Lookup table of m ln m for integer m, grown geometrically."""

    def __init__(self) -> None:
        grid = np.arange(4096, dtype=np.float64)
        self.values = xlogy(grid, grid)

    def ensure(self, max_count: int) -> None:
        if max_count >= self.values.size:
            size = max(2 * self.values.size, max_count + 1)
            grid = np.arange(size, dtype=np.float64)
            self.values = xlogy(grid, grid)


def fused_inputs(kernel: ScoreKernel):
    """Flatten a ScoreKernel's hypothesis structure for the jitted loop."""
    mem_ptr = np.zeros(len(kernel.hypotheses) + 1, dtype=np.int64)
    comp_ptr = np.zeros(len(kernel.hypotheses) + 1, dtype=np.int64)
    mem_idx = []
    comp_idx = []
    for h, (m_set, c_set) in enumerate(zip(kernel._members, kernel._complements)):
        mem_idx.extend(int(i) for i in m_set)
        comp_idx.extend(int(j) for j in c_set)
        mem_ptr[h + 1] = len(mem_idx)
        comp_ptr[h + 1] = len(comp_idx)
    k = kernel.alphabet_size
    dummy = np.zeros(k, dtype=np.float64)
    return (
        FAMILY_CODES[kernel.family],
        np.array(mem_idx, dtype=np.int64),
        mem_ptr,
        np.array(comp_idx, dtype=np.int64),
        comp_ptr,
        kernel._slogs.astype(np.float64),
        kernel._clogc.astype(np.float64),
        kernel._csizes.astype(np.float64),
        kernel.log_mu if kernel.log_mu is not None else dummy,
        kernel.log_pi if kernel.log_pi is not None else dummy,
    )


@njit(cache=True)
def step_block(
    syms,  # (A, B, M) symbols, step-major
    counts,  # (A, M, k) in-out
    n0,  # steps already consumed
    family,
    mem_idx,
    mem_ptr,
    comp_idx,
    comp_ptr,
    slogs,
    clogc,
    csizes,
    log_mu,
    log_pi,
    ln_ts,  # (nT,)
    polylog_c,  # (M+1)*k, or 0 for the constant-threshold MSPRT
    limits,  # (nT,) last step at which stopping is allowed
    pend,  # (nT, A) in-out: trial still undecided at this threshold
    n_out,  # (nT, A) in-out stopping times
    dec_out,  # (nT, A) in-out decision indices into the scored list
    table,  # x ln x lookup, covers every count and n in this block
    best_out,  # (A, B) leader index per step
    gap_out,  # (A, B) runner-up gap per step
    thr_out,  # (B,) threshold value per step (first threshold entry)
):
    A, B, M = syms.shape
    k = counts.shape[2]
    H = mem_ptr.size - 1
    n_thr = ln_ts.size

    rowp = np.empty(M, dtype=np.float64)  # x ln x of each row
    arow = np.empty(M, dtype=np.float64)  # row dot log_mu
    brow = np.empty(M, dtype=np.float64)  # row dot log_pi
    tk = np.empty(k, dtype=np.float64)  # column totals
    uk = np.empty(k, dtype=np.float64)  # group scratch

    for b in range(B):
        n = n0 + b + 1
        nf = float(n)
        lg = np.log(nf + 1.0)
        thr_out[b] = ln_ts[0] + polylog_c * lg
        nlogn = table[n]
        for r in range(A):
            live = False
            for j in range(n_thr):
                if pend[j, r]:
                    live = True
                    break
            if not live:
                continue

            for i in range(M):
                counts[r, i, syms[r, b, i]] += 1.0

            # per-row aggregates
            for i in range(M):
                acc_p = 0.0
                acc_a = 0.0
                acc_b = 0.0
                for y in range(k):
                    c = counts[r, i, y]
                    acc_p += table[int(c)]
                    if c > 0.0:
                        acc_a += c * log_mu[y]
                        acc_b += c * log_pi[y]
                rowp[i] = acc_p
                arow[i] = acc_a
                brow[i] = acc_b
            total_p = 0.0
            for i in range(M):
                total_p += rowp[i]
            for y in range(k):
                acc = 0.0
                for i in range(M):
                    acc += counts[r, i, y]
                tk[y] = acc

            # statistic per hypothesis, tracking leader and runner-up
            best = -1
            first = np.inf
            second = np.inf
            for h in range(H):
                if family == 0:  # msprt: negated exact log-likelihood
                    t = 0.0
                    for p in range(mem_ptr[h], mem_ptr[h + 1]):
                        t += arow[mem_idx[p]]
                    for p in range(comp_ptr[h], comp_ptr[h + 1]):
                        t += brow[comp_idx[p]]
                    t = -t
                else:
                    for y in range(k):
                        uk[y] = 0.0
                    for p in range(mem_ptr[h], mem_ptr[h + 1]):
                        i = mem_idx[p]
                        for y in range(k):
                            uk[y] += counts[r, i, y]
                    plogp_u = 0.0
                    for y in range(k):
                        plogp_u += table[int(uk[y])]
                    if family == 1:  # identical, pi known
                        t = nf * slogs[h] - nlogn * csizes[h] - plogp_u
                        for p in range(mem_ptr[h], mem_ptr[h + 1]):
                            t += rowp[mem_idx[p]]
                        for p in range(comp_ptr[h], comp_ptr[h + 1]):
                            t -= brow[comp_idx[p]]
                    elif family == 2:  # identical, universal
                        plogp_v = 0.0
                        for y in range(k):
                            plogp_v += table[int(tk[y] - uk[y])]
                        t = total_p - plogp_u - plogp_v + nf * (slogs[h] + clogc[h])
                    elif family == 3:  # distinct, pi known
                        t = -nlogn * csizes[h]
                        for p in range(comp_ptr[h], comp_ptr[h + 1]):
                            j2 = comp_idx[p]
                            t += rowp[j2] - brow[j2]
                    else:  # distinct, universal
                        plogp_v = 0.0
                        for y in range(k):
                            plogp_v += table[int(tk[y] - uk[y])]
                        t = nf * clogc[h] - plogp_v
                        for p in range(comp_ptr[h], comp_ptr[h + 1]):
                            t += rowp[comp_idx[p]]
                if t < first:
                    second = first
                    first = t
                    best = h
                elif t < second:
                    second = t
            gap = second - first
            if np.isnan(gap):
                gap = 0.0
            best_out[r, b] = best
            gap_out[r, b] = gap

            for j in range(n_thr):
                if pend[j, r] and n <= limits[j]:
                    if gap > ln_ts[j] + polylog_c * lg:
                        n_out[j, r] = n
                        dec_out[j, r] = best
                        pend[j, r] = False
