"""Closed-form error-exponent coefficients of the sequential tests.

Every asymptotic coefficient reported here is an exact expression in
relative entropies.  The simplex minimizations

    min_p  sum_i c_i D(q_i || p)

are solved in closed form: the objective equals a constant minus a scaled
cross-entropy against the c-weighted mixture of the q_i, so that mixture
is the unique minimizer.  The subset minimizations behind the identical-
model coefficients collapse to a small search over integer pairs
(|S & S'|, |S' \\ S|), because the objective depends on the competitor S'
only through those two sizes.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import Distribution, total_variation

__all__ = [
    "msprt_exponent",
    "eta",
    "eta_bar",
    "alpha",
    "alpha_bar",
    "distinct_exponent",
    "ExponentReport",
    "identical_report",
    "distinct_report",
]

DEGENERATE_TV = 1e-12


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0.0
    qm = q[mask]
    if np.any(qm == 0.0):
        return math.inf
    pm = p[mask]
    return float(np.sum(pm * (np.log(pm) - np.log(qm))))


def _degenerate(mu: Distribution, pi: Distribution) -> bool:
    return total_variation(mu, pi) <= DEGENERATE_TV


def _warn_degenerate(what: str) -> None:
    warnings.warn(f"{what}: distributions coincide, exponent degenerates to 0", UserWarning, stacklevel=3)


def weighted_mixture_min(weighted: Sequence[tuple[float, np.ndarray]]) -> tuple[np.ndarray, float]:
    """Minimize sum_i c_i D(q_i || p) over the simplex.

    Returns the minimizer (the c-weighted mixture of the q_i) and the value.
    """
    total = sum(c for c, _ in weighted)
    if total <= 0.0:
        raise ValueError("weights must have a positive total")
    p_star = sum(c * q for c, q in weighted) / total
    value = sum(c * _kl(q, p_star) for c, q in weighted if c > 0.0)
    return p_star, value


def msprt_exponent(case: str, mu: Distribution, pi: Distribution) -> float:
    """Asymptotic slope of the exact-likelihood MSPRT by hypothesis class.

    ``full_K`` (|S| = K) gives D(mu||pi), ``partial`` (1 <= |S| < K) the
    minimum of the two relative entropies, ``null`` D(pi||mu).
    """
    if case not in ("full_K", "partial", "null"):
        raise ValueError(f"unknown case {case!r}")
    if not (mu.full_support and pi.full_support):
        raise ValueError("distributions must have full support")
    if _degenerate(mu, pi):
        raise ValueError("mu equals pi: the test is degenerate and has no positive exponent")
    d_mp = _kl(mu.probs, pi.probs)
    d_pm = _kl(pi.probs, mu.probs)
    if case == "full_K":
        return d_mp
    if case == "null":
        return d_pm
    return min(d_mp, d_pm)


def eta(size_s: int, mu: Distribution, pi: Distribution) -> float:
    """min_p |S| D(mu||p) + D(pi||p); minimizer (|S| mu + pi) / (|S|+1)."""
    if size_s < 1:
        raise ValueError("size_s must be at least 1")
    if _degenerate(mu, pi):
        _warn_degenerate("eta")
        return 0.0
    _, value = weighted_mixture_min([(float(size_s), mu.probs), (1.0, pi.probs)])
    return value


def eta_bar(size_s: int, M: int, K: int, mu: Distribution, pi: Distribution) -> float:
    """min_p D(mu||p) + (M-K-|S|) D(pi||p); minimizer (mu + c pi) / (1+c)."""
    c = M - K - size_s
    if size_s < 1:
        raise ValueError("size_s must be at least 1")
    if c < 0:
        raise ValueError("need M - K - size_s >= 0")
    if _degenerate(mu, pi):
        _warn_degenerate("eta_bar")
        return 0.0
    _, value = weighted_mixture_min([(1.0, mu.probs), (float(c), pi.probs)])
    return value


def _pair_candidates(size_s: int, M: int, K: int):
    """Realizable (a, b) = (|S & S'|, |S' \\ S|) for competitors S' != S."""
    for a in range(0, size_s + 1):
        for b in range(0, M - size_s + 1):
            if 1 <= a + b <= K and (a, b) != (size_s, 0):
                yield a, b


def alpha(size_s: int, M: int, K: int, mu: Distribution, pi: Distribution) -> float:
    """Known-typical identical-model coefficient: min over competitors S' of

        a D(mu||m1) + (|S|-a) D(mu||pi) + b D(pi||m1),

    with a = |S & S'|, b = |S' \\ S|, m1 = (a mu + b pi)/|S'|.
    """
    _check_alpha_args(size_s, M, K)
    mu_p, pi_p = mu.probs, pi.probs
    d_mp = _kl(mu_p, pi_p)
    best = math.inf
    for a, b in _pair_candidates(size_s, M, K):
        m1 = (a * mu_p + b * pi_p) / (a + b)
        v = 0.0
        if a:
            v += a * _kl(mu_p, m1)
        if size_s - a:
            v += (size_s - a) * d_mp
        if b:
            v += b * _kl(pi_p, m1)
        best = min(best, v)
    return best


def alpha_bar(size_s: int, M: int, K: int, mu: Distribution, pi: Distribution) -> float:
    """Universal identical-model coefficient: four-term competitor objective

        a D(mu||m1) + c D(mu||m2) + b D(pi||m1) + d D(pi||m2),

    with c = |S|-a, d = M-|S|-b, m1 = (a mu + b pi)/(a+b), and m2 the
    complement mixture (c mu + d pi)/(M-a-b).  Zero-multiplicity terms
    contribute nothing even where the mixture would be undefined.
    """
    _check_alpha_args(size_s, M, K)
    mu_p, pi_p = mu.probs, pi.probs
    best = math.inf
    for a, b in _pair_candidates(size_s, M, K):
        c = size_s - a
        d = M - size_s - b
        m1 = (a * mu_p + b * pi_p) / (a + b)
        m2 = (c * mu_p + d * pi_p) / (M - a - b)
        v = 0.0
        if a:
            v += a * _kl(mu_p, m1)
        if c:
            v += c * _kl(mu_p, m2)
        if b:
            v += b * _kl(pi_p, m1)
        if d:
            v += d * _kl(pi_p, m2)
        best = min(best, v)
    return best


def _check_alpha_args(size_s: int, M: int, K: int) -> None:
    if M < 3:
        raise ValueError("need at least 3 sequences")
    if K < 1 or 2 * K >= M:
        raise ValueError(f"need 1 <= K < M/2, got K={K} with M={M}")
    if not (1 <= size_s <= K):
        raise ValueError(f"need 1 <= size_s <= K, got {size_s}")


def distinct_exponent(
    mus: Sequence[Distribution],
    pi: Distribution,
    M: int,
    K: int,
    knowledge: str,
) -> float:
    """Distinct-outlier coefficient, minimized over the K outliers.

    Known typical: min_i D(mu_i||pi).  Universal: min_i of the simplex
    minimum of D(mu_i||p) + (M-2K) D(pi||p), whose minimizer is the mixture
    (mu_i + (M-2K) pi) / (M-2K+1).
    """
    if knowledge not in ("pi_known", "universal"):
        raise ValueError(f"unknown knowledge level {knowledge!r}")
    if len(mus) != K:
        raise ValueError(f"need exactly K={K} outlier distributions, got {len(mus)}")
    if K < 1 or 2 * K >= M:
        raise ValueError(f"need 1 <= K < M/2, got K={K} with M={M}")
    values = []
    for i, mu_i in enumerate(mus):
        if _degenerate(mu_i, pi):
            _warn_degenerate(f"distinct_exponent (outlier {i})")
            return 0.0
        if knowledge == "pi_known":
            values.append(_kl(mu_i.probs, pi.probs))
        else:
            _, v = weighted_mixture_min([(1.0, mu_i.probs), (float(M - 2 * K), pi.probs)])
            values.append(v)
    return min(values)


@dataclass(frozen=True)
class ExponentReport:
    """All asymptotic coefficients relevant to one test configuration.

    Identical-model entries are keyed by outlier-subset size; distinct-model
    entries are a single minimum over the outliers plus per-outlier values.
    """

    model: str
    knowledge: str
    M: int
    K: int
    msprt: dict[str, float] | None = None
    alpha: dict[int, float] | None = None
    alpha_bar: dict[int, float] | None = None
    eta: dict[int, float] | None = None
    eta_bar: dict[int, float] | None = None
    distinct_pi_known: float | None = None
    distinct_universal: float | None = None
    per_outlier_pi_known: tuple[float, ...] | None = None
    per_outlier_universal: tuple[float, ...] | None = None

    def to_dict(self) -> dict:
        out: dict = {"model": self.model, "knowledge": self.knowledge, "M": self.M, "K": self.K}
        for name in ("msprt", "alpha", "alpha_bar", "eta", "eta_bar"):
            val = getattr(self, name)
            if val is not None:
                out[name] = {str(k): v for k, v in val.items()}
        for name in (
            "distinct_pi_known",
            "distinct_universal",
            "per_outlier_pi_known",
            "per_outlier_universal",
        ):
            val = getattr(self, name)
            if val is not None:
                out[name] = list(val) if isinstance(val, tuple) else val
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def format_table(self) -> str:
        """Aligned plain-text rendering."""
        rows: list[tuple[str, str]] = []
        if self.msprt is not None:
            for case, v in self.msprt.items():
                rows.append((f"msprt[{case}]", format(v, ".10g")))
        for name in ("alpha", "alpha_bar", "eta", "eta_bar"):
            table = getattr(self, name)
            if table is not None:
                for s, v in sorted(table.items()):
                    rows.append((f"{name}[|S|={s}]", format(v, ".10g")))
        if self.distinct_pi_known is not None:
            rows.append(("distinct_pi_known", format(self.distinct_pi_known, ".10g")))
        if self.distinct_universal is not None:
            rows.append(("distinct_universal", format(self.distinct_universal, ".10g")))
        if self.per_outlier_pi_known is not None:
            for i, v in enumerate(self.per_outlier_pi_known):
                rows.append((f"per_outlier_pi_known[{i}]", format(v, ".10g")))
        if self.per_outlier_universal is not None:
            for i, v in enumerate(self.per_outlier_universal):
                rows.append((f"per_outlier_universal[{i}]", format(v, ".10g")))
        width = max(len(name) for name, _ in rows)
        lines = [f"{name.ljust(width)}  {val}" for name, val in rows]
        return "\n".join(lines) + "\n"


def identical_report(
    mu: Distribution,
    pi: Distribution,
    M: int,
    K: int,
    knowledge: str = "universal",
) -> ExponentReport:
    """Coefficient report for the identical-outlier model at one (mu, pi)."""
    sizes = range(1, K + 1)
    if knowledge == "both_known":
        return ExponentReport(
            model="identical",
            knowledge=knowledge,
            M=M,
            K=K,
            msprt={case: msprt_exponent(case, mu, pi) for case in ("full_K", "partial", "null")},
        )
    etas = {s: eta(s, mu, pi) for s in sizes}
    if knowledge == "pi_known":
        return ExponentReport(
            model="identical",
            knowledge=knowledge,
            M=M,
            K=K,
            alpha={s: alpha(s, M, K, mu, pi) for s in sizes},
            eta=etas,
        )
    if knowledge == "universal":
        return ExponentReport(
            model="identical",
            knowledge=knowledge,
            M=M,
            K=K,
            alpha_bar={s: alpha_bar(s, M, K, mu, pi) for s in sizes},
            eta=etas,
            eta_bar={s: eta_bar(s, M, K, mu, pi) for s in sizes},
        )
    raise ValueError(f"unknown knowledge level {knowledge!r}")


def distinct_report(
    mus: Sequence[Distribution],
    pi: Distribution,
    M: int,
    K: int,
) -> ExponentReport:
    """Coefficient report for the distinct-outlier model (both knowledge levels)."""
    per_pk = tuple(_kl(m.probs, pi.probs) for m in mus)
    per_un = tuple(
        weighted_mixture_min([(1.0, m.probs), (float(M - 2 * K), pi.probs)])[1] for m in mus
    )
    return ExponentReport(
        model="distinct",
        knowledge="both",
        M=M,
        K=K,
        distinct_pi_known=distinct_exponent(mus, pi, M, K, "pi_known"),
        distinct_universal=distinct_exponent(mus, pi, M, K, "universal"),
        per_outlier_pi_known=per_pk,
        per_outlier_universal=per_un,
    )
