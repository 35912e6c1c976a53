"""Independent reference implementations used to verify the library.

Everything here is written the slow, obvious way: direct defining sums
over python floats, literal per-observation likelihood products,
exhaustive simplex grids, and literal enumeration over competitor
subsets.  Nothing imports the code paths it checks.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


# ---------------------------------------------------------------------------
# divergences, straight from the definitions
# ---------------------------------------------------------------------------


def kl_direct(p, q) -> float:
    total = 0.0
    for pi, qi in zip(p, q):
        if pi > 0.0:
            if qi == 0.0:
                return math.inf
            total += pi * math.log(pi / qi)
    return total


def bhattacharyya_direct(p, q) -> float:
    coeff = sum(math.sqrt(a * b) for a, b in zip(p, q))
    return -math.log(coeff)


def entropy_direct(p) -> float:
    return -sum(x * math.log(x) for x in p if x > 0.0)


# ---------------------------------------------------------------------------
# literal generalized-likelihood products over a finite sample
# ---------------------------------------------------------------------------


def empirical_rows(sample: np.ndarray, k: int) -> np.ndarray:
    n, M = sample.shape
    out = np.zeros((M, k))
    for i in range(M):
        out[i] = np.bincount(sample[:, i], minlength=k) / n
    return out


def loglik_known_raw(sample: np.ndarray, S, mu, pi) -> float:
    """Literal joint-likelihood product with both distributions known."""
    prod = 1.0
    for row in sample:
        for i, y in enumerate(row):
            prod *= mu[y] if i in S else pi[y]
    return math.log(prod)


def gl_loglik_typ_raw(sample: np.ndarray, S, pi) -> float:
    """Literal product with the outlier law replaced by the group-mean empirical."""
    k = len(pi)
    gammas = empirical_rows(sample, k)
    mu_hat = gammas[sorted(S)].mean(axis=0)
    prod = 1.0
    for row in sample:
        for i, y in enumerate(row):
            prod *= mu_hat[y] if i in S else pi[y]
    return math.log(prod)


def gl_loglik_univ_raw(sample: np.ndarray, S, k: int) -> float:
    """Literal product with both laws replaced by group-mean empiricals."""
    gammas = empirical_rows(sample, k)
    members = sorted(S)
    rest = [i for i in range(sample.shape[1]) if i not in S]
    mu_hat = gammas[members].mean(axis=0)
    pi_hat = gammas[rest].mean(axis=0)
    prod = 1.0
    for row in sample:
        for i, y in enumerate(row):
            prod *= mu_hat[y] if i in S else pi_hat[y]
    return math.log(prod)


# ---------------------------------------------------------------------------
# exhaustive simplex grid for weighted-KL minimization
# ---------------------------------------------------------------------------


def simplex_grid(k: int, step: float) -> np.ndarray:
    ticks = np.arange(0.0, 1.0 + step / 2, step)
    if k == 2:
        return np.stack([ticks, 1.0 - ticks], axis=1)
    if k == 3:
        a, b = np.meshgrid(ticks, ticks, indexing="ij")
        keep = a + b <= 1.0 + 1e-12
        a, b = a[keep], b[keep]
        return np.stack([a, b, 1.0 - a - b], axis=1)
    raise ValueError("grid oracle supports alphabet sizes 2 and 3")


def grid_min_weighted_kl(weighted, step: float = 1e-3) -> float:
    """min over the simplex grid of sum_i c_i D(q_i || p)."""
    k = len(weighted[0][1])
    grid = simplex_grid(k, step)
    with np.errstate(divide="ignore"):
        log_grid = np.log(grid)
    total = np.zeros(len(grid))
    for c, q in weighted:
        if c == 0:
            continue
        q = np.asarray(q, dtype=float)
        const = sum(x * math.log(x) for x in q if x > 0.0)
        cross = np.where(q[None, :] > 0.0, q[None, :] * log_grid, 0.0).sum(axis=1)
        total += c * (const - cross)
    return float(total.min())


# ---------------------------------------------------------------------------
# literal subset enumeration for the identical-model coefficients
# ---------------------------------------------------------------------------


def _kl_np(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0.0
    qm = q[mask]
    if np.any(qm == 0.0):
        return math.inf
    pm = p[mask]
    return float(np.sum(pm * (np.log(pm) - np.log(qm))))


def competitor_subsets(S, M: int, K: int):
    S = frozenset(S)
    for size in range(1, K + 1):
        for combo in itertools.combinations(range(M), size):
            if frozenset(combo) != S:
                yield frozenset(combo)


def alpha_subsets(S, M: int, K: int, mu: np.ndarray, pi: np.ndarray) -> float:
    """Literal min over competitors of the known-typical objective."""
    S = frozenset(S)
    size_s = len(S)
    d_mp = _kl_np(mu, pi)
    best = math.inf
    for Sp in competitor_subsets(S, M, K):
        a = len(S & Sp)
        b = len(Sp - S)
        m1 = (a * mu + b * pi) / (a + b)
        v = 0.0
        if a:
            v += a * _kl_np(mu, m1)
        if size_s - a:
            v += (size_s - a) * d_mp
        if b:
            v += b * _kl_np(pi, m1)
        best = min(best, v)
    return best


def alpha_bar_subsets(S, M: int, K: int, mu: np.ndarray, pi: np.ndarray) -> float:
    """Literal min over competitors of the four-term universal objective."""
    S = frozenset(S)
    size_s = len(S)
    best = math.inf
    for Sp in competitor_subsets(S, M, K):
        a = len(S & Sp)
        b = len(Sp - S)
        c = size_s - a
        d = M - size_s - b
        m1 = (a * mu + b * pi) / (a + b)
        m2 = (c * mu + d * pi) / (M - a - b)
        v = 0.0
        if a:
            v += a * _kl_np(mu, m1)
        if c:
            v += c * _kl_np(mu, m2)
        if b:
            v += b * _kl_np(pi, m1)
        if d:
            v += d * _kl_np(pi, m2)
        best = min(best, v)
    return best


# ---------------------------------------------------------------------------
# brute-force sequential runs (statistics recomputed from scratch each step)
# ---------------------------------------------------------------------------


def msprt_brute(symbols: np.ndarray, hyps, mu, pi, T: float):
    """Literal MSPRT: per-hypothesis log-likelihood sums, constant threshold."""
    ln_t = math.log(T)
    ll = np.zeros(len(hyps))
    for n, row in enumerate(symbols, start=1):
        for hi, S in enumerate(hyps):
            for i, y in enumerate(row):
                ll[hi] += math.log(mu[y] if i in S else pi[y])
        order = sorted(range(len(hyps)), key=lambda h: (-ll[h], h))
        if ll[order[0]] - ll[order[1]] > ln_t:
            return n, hyps[order[0]]
    return None, None
