"""Finite-alphabet probability primitives.

Distributions over a small symbol set {0, ..., size-1}, empirical types
(per-symbol observation counts), mixtures, and the two divergences the
sequential tests are built from: relative entropy and the Bhattacharyya
distance.  All logarithms are natural.

Relative entropy uses ``math.inf`` as an explicit sentinel whenever the
second argument lacks support where the first has mass.  The sentinel is
propagated through score sums, never clipped: a hypothesis whose typical
distribution cannot explain the data must lose every comparison.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Alphabet",
    "Distribution",
    "TypeVector",
    "relative_entropy",
    "bhattacharyya",
    "entropy",
    "total_variation",
    "mixture",
    "distribution_to_json",
    "distribution_from_json",
    "load_distribution",
    "save_distribution",
    "type_vectors_to_csv",
]

# Tolerance on sum(probs) == 1 at construction.  Inputs further off than
# this are rejected unless the caller explicitly asks for renormalization.
PROB_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Alphabet:
    """Symbol set of a finite-alphabet source; symbols are 0 .. size-1."""

    size: int

    def __post_init__(self) -> None:
        if not isinstance(self.size, int) or self.size < 2:
            raise ValueError(f"alphabet size must be an integer >= 2, got {self.size!r}")


class Distribution:
    """Probability vector over a finite alphabet.

    Immutable after construction (the underlying array is read-only), so
    instances can be shared freely across concurrent trial workers.

    Args:
        probs: nonnegative entries of length ``alphabet.size``.
        alphabet: optional; inferred from ``len(probs)`` when omitted.
        renormalize: rescale ``probs`` to sum to one.  Off by default;
            inputs that do not sum to 1 within ``PROB_SUM_TOL`` are an error.
    """

    __slots__ = ("probs", "alphabet")

    def __init__(
        self,
        probs: Sequence[float] | np.ndarray,
        alphabet: Alphabet | None = None,
        renormalize: bool = False,
    ) -> None:
        arr = np.array(probs, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("probs must be a one-dimensional vector")
        if alphabet is None:
            alphabet = Alphabet(int(arr.size))
        elif alphabet.size != arr.size:
            raise ValueError(f"probs has length {arr.size}, alphabet has size {alphabet.size}")
        if np.any(arr < 0.0):
            raise ValueError("probabilities must be nonnegative")
        s = float(arr.sum())
        if renormalize:
            if s <= 0.0:
                raise ValueError("cannot renormalize a zero vector")
            arr = arr / s
        elif abs(s - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {s!r}, expected 1 within {PROB_SUM_TOL}")
        arr.flags.writeable = False
        self.probs = arr
        self.alphabet = alphabet

    @property
    def size(self) -> int:
        return self.alphabet.size

    @property
    def full_support(self) -> bool:
        return bool(np.all(self.probs > 0.0))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.alphabet == other.alphabet and bool(np.array_equal(self.probs, other.probs))

    def __repr__(self) -> str:
        return f"Distribution({self.probs.tolist()})"


class TypeVector:
    """Per-symbol observation counts of one sequence (its empirical type)."""

    __slots__ = ("counts", "alphabet")

    def __init__(self, counts: Sequence[int] | np.ndarray, alphabet: Alphabet | None = None) -> None:
        arr = np.array(counts, dtype=np.int64)
        if arr.ndim != 1:
            raise ValueError("counts must be a one-dimensional vector")
        if np.any(arr < 0):
            raise ValueError("counts must be nonnegative")
        if alphabet is None:
            alphabet = Alphabet(int(arr.size))
        elif alphabet.size != arr.size:
            raise ValueError(f"counts has length {arr.size}, alphabet has size {alphabet.size}")
        arr.flags.writeable = False
        self.counts = arr
        self.alphabet = alphabet

    @classmethod
    def from_symbols(cls, symbols: Iterable[int], alphabet: Alphabet) -> "TypeVector":
        counts = np.bincount(np.asarray(list(symbols), dtype=np.int64), minlength=alphabet.size)
        if counts.size > alphabet.size:
            raise ValueError("symbol outside alphabet range")
        return cls(counts, alphabet)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def empirical(self) -> Distribution:
        """Empirical distribution of the observed symbols; requires n >= 1."""
        n = self.n
        if n < 1:
            raise ValueError("empirical distribution undefined for an empty type vector")
        return Distribution(self.counts / n, self.alphabet)

    def __add__(self, other: "TypeVector") -> "TypeVector":
        if self.alphabet != other.alphabet:
            raise ValueError("alphabet mismatch")
        return TypeVector(self.counts + other.counts, self.alphabet)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TypeVector):
            return NotImplemented
        return self.alphabet == other.alphabet and bool(np.array_equal(self.counts, other.counts))

    def __repr__(self) -> str:
        return f"TypeVector({self.counts.tolist()})"


def _check_same_alphabet(p: Distribution, q: Distribution) -> None:
    if p.alphabet != q.alphabet:
        raise ValueError(f"alphabet mismatch: {p.alphabet} vs {q.alphabet}")


def relative_entropy(p: Distribution, q: Distribution) -> float:
    """D(p||q) = sum_y p(y) ln(p(y)/q(y)) in nats, with 0 ln(0/q) = 0.

    Returns ``math.inf`` when some symbol has p(y) > 0 but q(y) = 0.
    """
    _check_same_alphabet(p, q)
    mask = p.probs > 0.0
    qm = q.probs[mask]
    if np.any(qm == 0.0):
        return math.inf
    pm = p.probs[mask]
    return float(np.sum(pm * (np.log(pm) - np.log(qm))))


def bhattacharyya(p: Distribution, q: Distribution) -> float:
    """Bhattacharyya distance -ln sum_y sqrt(p(y) q(y))."""
    _check_same_alphabet(p, q)
    coeff = float(np.sum(np.sqrt(p.probs * q.probs)))
    if coeff <= 0.0:
        return math.inf
    return -math.log(coeff)


def entropy(p: Distribution) -> float:
    """Shannon entropy -sum_y p(y) ln p(y) in nats, with 0 ln 0 = 0."""
    mask = p.probs > 0.0
    pm = p.probs[mask]
    return float(-np.sum(pm * np.log(pm)))


def total_variation(p: Distribution, q: Distribution) -> float:
    """Total variation distance, half the L1 distance of the vectors."""
    _check_same_alphabet(p, q)
    return float(0.5 * np.abs(p.probs - q.probs).sum())


def mixture(components: Sequence[tuple[float, Distribution]]) -> Distribution:
    """Weight-normalized convex combination of distributions.

    Weights must be nonnegative with a positive total; all components must
    share one alphabet.
    """
    if not components:
        raise ValueError("mixture needs at least one component")
    alphabet = components[0][1].alphabet
    total = 0.0
    acc = np.zeros(alphabet.size, dtype=np.float64)
    for w, d in components:
        if w < 0.0:
            raise ValueError("mixture weights must be nonnegative")
        if d.alphabet != alphabet:
            raise ValueError("alphabet mismatch in mixture components")
        total += w
        acc += w * d.probs
    if total <= 0.0:
        raise ValueError("mixture weights must have a positive total")
    return Distribution(acc / total, alphabet, renormalize=True)


# ---------------------------------------------------------------------------
# File formats: a distribution is a JSON array of reals, or an object
# {"alphabet_size": k, "probs": [...]}.  Type vectors export to CSV with one
# row per sequence and one column per symbol count.
# ---------------------------------------------------------------------------


def distribution_to_json(d: Distribution) -> str:
    return json.dumps({"alphabet_size": d.alphabet.size, "probs": d.probs.tolist()})


def distribution_from_json(text: str) -> Distribution:
    data = json.loads(text)
    if isinstance(data, list):
        return Distribution(data)
    if isinstance(data, dict):
        probs = data.get("probs")
        if probs is None:
            raise ValueError('distribution object must contain a "probs" array')
        size = data.get("alphabet_size", len(probs))
        return Distribution(probs, Alphabet(int(size)))
    raise ValueError("distribution JSON must be an array or an object")


def load_distribution(path: str) -> Distribution:
    with open(path, "r", encoding="utf-8") as fh:
        return distribution_from_json(fh.read())


def save_distribution(d: Distribution, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(distribution_to_json(d) + "\n")


def type_vectors_to_csv(tvs: Sequence[TypeVector]) -> str:
    """One row per sequence, one column per symbol count."""
    if not tvs:
        return ""
    alphabet = tvs[0].alphabet
    buf = io.StringIO()
    for tv in tvs:
        if tv.alphabet != alphabet:
            raise ValueError("alphabet mismatch among type vectors")
        buf.write(",".join(str(int(c)) for c in tv.counts))
        buf.write("\n")
    return buf.getvalue()
