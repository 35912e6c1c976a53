"""Sequential decision engines.

Three engines share one skeleton: after each observation vector (one new
symbol from each of the M sequences) the engine recomputes the statistic
vector over the candidate hypotheses, takes the leader, and stops when the
leader beats the runner-up by the threshold.

* ``run_msprt``: exact likelihoods, both distributions known, constant
  threshold ln T, null hypothesis included among the candidates.
* ``run_gl_identical``: generalized likelihoods over the nonempty subsets,
  time-growing threshold ln T + (M+1)|Y| ln(n+1), hard truncation horizon
  floor(f(T)); expiry forces the null decision.
* ``run_gl_distinct``: same growing threshold over the size-K subsets, no
  null hypothesis and no truncation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .distributions import Distribution
from .hypothesis_space import Hypothesis, HypothesisSpace, enumerate_hypotheses
from .scores import ScoreKernel

__all__ = [
    "TestConfig",
    "IidSource",
    "FixedSource",
    "TestResult",
    "default_truncation",
    "threshold",
    "run_msprt",
    "run_gl_identical",
    "run_gl_distinct",
]

MODELS = ("identical", "distinct")
KNOWLEDGE_LEVELS = ("both_known", "pi_known", "universal")


def default_truncation(T: float) -> float:
    """Default truncation horizon f(T) = T**5."""
    return T**5


def threshold(n: int, T: float, M: int, alphabet_size: int) -> float:
    """Time-growing stopping threshold ln T + (M+1) |Y| ln(n+1), natural logs."""
    return math.log(T) + (M + 1) * alphabet_size * math.log(n + 1)


@dataclass(frozen=True)
class TestConfig:
    """Configuration of one sequential test.

    ``knowledge`` controls what the test may use: ``both_known`` feeds the
    exact distributions to the MSPRT, ``pi_known`` only the typical one,
    ``universal`` neither.  A universal test is never allowed to see the
    data-generating distributions, so they are rejected here; simulation
    plans carry them separately.

    ``f`` is the truncation-horizon function of the identical model and
    must grow at least as fast as T ln T (checked at the configured T).
    Identical outliers with equal mu and pi are accepted: the engines
    cannot detect degeneracy, only the exponent calculators reject it.
    """

    M: int
    K: int
    model: str
    knowledge: str
    T: float
    alphabet_size: int
    known_mu: Distribution | None = None
    known_pi: Distribution | None = None
    f: Callable[[float], float] | None = None

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.knowledge not in KNOWLEDGE_LEVELS:
            raise ValueError(f"unknown knowledge level {self.knowledge!r}")
        if self.M < 3:
            raise ValueError(f"need at least 3 sequences, got M={self.M}")
        if self.K < 1 or 2 * self.K >= self.M:
            raise ValueError(f"need 1 <= K < M/2, got K={self.K} with M={self.M}")
        if not (self.T > 1.0):
            raise ValueError(f"threshold T must exceed 1, got {self.T}")
        if self.alphabet_size < 2:
            raise ValueError("alphabet size must be at least 2")

        if self.knowledge == "both_known":
            if self.model != "identical":
                raise ValueError("the exact-likelihood MSPRT is defined for the identical model")
            if self.known_mu is None or self.known_pi is None:
                raise ValueError("both_known requires known_mu and known_pi")
        elif self.knowledge == "pi_known":
            if self.known_pi is None:
                raise ValueError("pi_known requires known_pi")
            if self.known_mu is not None:
                raise ValueError("a pi_known test must not be a function of mu")
        else:
            if self.known_mu is not None or self.known_pi is not None:
                raise ValueError("a universal test must not be a function of mu or pi")

        for name, dist in (("known_mu", self.known_mu), ("known_pi", self.known_pi)):
            if dist is not None:
                if dist.alphabet.size != self.alphabet_size:
                    raise ValueError(f"{name} alphabet size mismatch")
                if not dist.full_support:
                    raise ValueError(f"{name} must have full support")

        if self.model == "identical":
            f = self.f if self.f is not None else default_truncation
            if f(self.T) < self.T * math.log(self.T):
                raise ValueError("truncation horizon f(T) must be at least T ln T")
            object.__setattr__(self, "f", f)
        elif self.f is not None:
            raise ValueError("the distinct-outlier tests are untruncated; f does not apply")

    @property
    def horizon(self) -> int | None:
        """floor(f(T)) for the identical model, None for distinct."""
        if self.model != "identical":
            return None
        return int(math.floor(self.f(self.T)))


class IidSource:
    """Replayable i.i.d. observation stream: one symbol per sequence per step.

    Symbols are produced by inverse-CDF lookup on a flat stream of uniform
    draws consumed in step-major order, so the emitted sequence is the same
    whether observations are taken one at a time or in blocks.
    """

    def __init__(
        self,
        dists: Sequence[Distribution],
        seed: int | None = None,
        rng: np.random.Generator | None = None,
    ) -> None:
        if not dists:
            raise ValueError("need at least one per-sequence distribution")
        size = dists[0].alphabet.size
        if any(d.alphabet.size != size for d in dists):
            raise ValueError("all sequences must share one alphabet")
        cum = np.cumsum(np.stack([d.probs for d in dists]), axis=1)
        cum[:, -1] = 1.0  # guard the top edge against rounding
        self._cum = cum
        self.M = len(dists)
        self.alphabet_size = size
        if rng is None:
            rng = np.random.default_rng(seed)
        self._rng = rng

    def take(self, m: int) -> np.ndarray:
        """Next m observation vectors, shape (m, M), dtype int64."""
        u = self._rng.random((m, self.M))
        return (u[:, :, None] >= self._cum[None, :, :]).sum(axis=2)

    def next(self) -> np.ndarray:
        """Next observation vector (one symbol per sequence), shape (M,)."""
        return self.take(1)[0]


class FixedSource:
    """Observation source replaying a fixed (n, M) symbol array."""

    def __init__(self, symbols: np.ndarray) -> None:
        arr = np.asarray(symbols, dtype=np.int64)
        if arr.ndim != 2:
            raise ValueError("symbols must have shape (n, M)")
        self._arr = arr
        self._pos = 0
        self.M = arr.shape[1]

    def take(self, m: int) -> np.ndarray:
        if self._pos + m > self._arr.shape[0]:
            raise RuntimeError("fixed observation source exhausted")
        out = self._arr[self._pos : self._pos + m]
        self._pos += m
        return out

    def next(self) -> np.ndarray:
        return self.take(1)[0]


@dataclass(frozen=True)
class TestResult:
    """Outcome of one sequential run.

    ``trajectory`` holds per-step (n, best hypothesis, gap, threshold)
    records when recording was requested; the gap is the n*score runner-up
    margin, in the same units as the threshold.
    """

    stopping_time: int
    decision: Hypothesis
    truncated: bool
    trajectory: tuple[tuple[int, Hypothesis, float, float], ...] | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.stopping_time,
                "decision": self.decision.to_list(),
                "truncated": self.truncated,
            }
        )

    def trajectory_csv(self) -> str:
        if self.trajectory is None:
            raise ValueError("trajectory was not recorded")
        lines = ["n,best,gap,threshold"]
        for n, best, gap, thr in self.trajectory:
            lines.append(f"{n},{best},{format(gap, '.12g')},{format(thr, '.12g')}")
        return "\n".join(lines) + "\n"


def _kernel_for(config: TestConfig, space: HypothesisSpace) -> tuple[ScoreKernel, tuple[Hypothesis, ...]]:
    """Statistic kernel and the scored hypothesis list for a configuration."""
    log_mu = None if config.known_mu is None else np.log(config.known_mu.probs)
    log_pi = None if config.known_pi is None else np.log(config.known_pi.probs)
    if config.model == "identical":
        if config.knowledge == "both_known":
            scored = space.hypotheses  # null included
            family = "msprt"
        else:
            scored = space.non_null()
            family = "identical_typ" if config.knowledge == "pi_known" else "identical_univ"
    else:
        scored = space.hypotheses
        family = "distinct_typ" if config.knowledge == "pi_known" else "distinct_univ"
    kernel = ScoreKernel(
        scored,
        M=config.M,
        alphabet_size=config.alphabet_size,
        family=family,
        log_mu=log_mu if family == "msprt" else None,
        log_pi=log_pi if family in ("msprt", "identical_typ", "distinct_typ") else None,
    )
    return kernel, scored


def _run_engine(
    config: TestConfig,
    source,
    kernel: ScoreKernel,
    scored: tuple[Hypothesis, ...],
    horizon: int | None,
    truncation_decision: Hypothesis | None,
    record_trajectory: bool,
    max_steps: int | None,
) -> TestResult:
    # One observation vector per iteration through the same fused step the
    # Monte-Carlo runner uses, so single runs and batched runs agree exactly.
    from ._fused import PlogpTable, fused_inputs, step_block

    M, k = config.M, config.alphabet_size
    fam_code, mem_idx, mem_ptr, comp_idx, comp_ptr, slogs, clogc, csizes, log_mu, log_pi = (
        fused_inputs(kernel)
    )
    polylog_c = float((M + 1) * k) if kernel.growing_threshold else 0.0
    ln_ts = np.array([math.log(config.T)], dtype=np.float64)
    limits = np.array([horizon if horizon is not None else 2**62], dtype=np.int64)
    table = PlogpTable()

    counts = np.zeros((1, M, k), dtype=np.float64)
    pend = np.ones((1, 1), dtype=bool)
    n_out = np.zeros((1, 1), dtype=np.int64)
    dec_out = np.zeros((1, 1), dtype=np.int64)
    best_out = np.empty((1, 1), dtype=np.int64)
    gap_out = np.empty((1, 1), dtype=np.float64)
    thr_out = np.empty(1, dtype=np.float64)

    traj: list[tuple[int, Hypothesis, float, float]] = []
    n = 0
    while True:
        if horizon is not None and n >= horizon:
            return TestResult(
                horizon, truncation_decision, True, tuple(traj) if record_trajectory else None
            )
        if max_steps is not None and n >= max_steps:
            raise RuntimeError(f"no decision within max_steps={max_steps}")
        syms = np.asarray(source.next(), dtype=np.int64).reshape(1, 1, M)
        table.ensure((n + 1) * M + 1)
        step_block(
            syms, counts, n, fam_code,
            mem_idx, mem_ptr, comp_idx, comp_ptr,
            slogs, clogc, csizes, log_mu, log_pi,
            ln_ts, polylog_c, limits,
            pend, n_out, dec_out, table.values,
            best_out, gap_out, thr_out,
        )
        n += 1
        if record_trajectory:
            traj.append((n, scored[int(best_out[0, 0])], float(gap_out[0, 0]), float(thr_out[0])))
        if not pend[0, 0]:
            return TestResult(
                int(n_out[0, 0]),
                scored[int(dec_out[0, 0])],
                False,
                tuple(traj) if record_trajectory else None,
            )


def run_msprt(
    config: TestConfig,
    source,
    record_trajectory: bool = False,
    max_steps: int | None = None,
) -> TestResult:
    """Exact-likelihood multihypothesis SPRT for the identical-outlier model.

    Stops at the first n where the leading joint log-likelihood beats every
    competitor by ln T; the candidate set includes the null.  Untruncated.
    """
    if config.knowledge != "both_known":
        raise ValueError("run_msprt requires knowledge='both_known'")
    space = enumerate_hypotheses(config.M, config.K, "identical")
    kernel, scored = _kernel_for(config, space)
    return _run_engine(config, source, kernel, scored, None, None, record_trajectory, max_steps)


def run_gl_identical(
    config: TestConfig,
    source,
    record_trajectory: bool = False,
) -> TestResult:
    """Truncated generalized-likelihood test for the identical-outlier model.

    Scores every nonempty subset of size at most K; stops when the runner-up
    margin of n*score exceeds ln T + (M+1)|Y| ln(n+1).  If no stop occurs by
    floor(f(T)) the decision is the null, with the truncation flag set.
    """
    if config.model != "identical" or config.knowledge not in ("pi_known", "universal"):
        raise ValueError("run_gl_identical requires the identical model with pi_known or universal knowledge")
    space = enumerate_hypotheses(config.M, config.K, "identical")
    kernel, scored = _kernel_for(config, space)
    return _run_engine(
        config, source, kernel, scored, config.horizon, space.null, record_trajectory, None
    )


def run_gl_distinct(
    config: TestConfig,
    source,
    record_trajectory: bool = False,
    max_steps: int | None = None,
) -> TestResult:
    """Generalized-likelihood test for the distinct-outlier model.

    Scores the size-K subsets only; same growing threshold as the identical
    variant.  There is no null hypothesis and no truncation.
    """
    if config.model != "distinct":
        raise ValueError("run_gl_distinct requires the distinct model")
    space = enumerate_hypotheses(config.M, config.K, "distinct")
    kernel, scored = _kernel_for(config, space)
    return _run_engine(config, source, kernel, scored, None, None, record_trajectory, max_steps)
