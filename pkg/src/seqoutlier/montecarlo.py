"""Monte-Carlo estimation of error probabilities and stopping times.

For each candidate hypothesis the harness simulates independent trials
with data drawn i.i.d. under that hypothesis, runs the configured
sequential test, and aggregates error rates (with Wilson intervals),
stopping-time moments, and truncation rates.  A threshold sweep reuses
one observation stream per (hypothesis, trial) across every threshold:
substreams are keyed by (seed, hypothesis index, trial index) only, so
results are reproducible bit for bit regardless of worker count, and the
common random numbers make the monotone-in-T structure visible at modest
trial counts.

The simulator steps trials in vectorized blocks but performs exactly the
same arithmetic as the one-step engines in ``sequential_tests``; the
equivalence is asserted in the test suite, not assumed.

Infeasible truncation horizons: the identical-model test may have a
horizon f(T) far beyond anything simulable (f(T) = T**5 at large T).  A
``step_cap`` lets the harness stop stepping earlier; a capped unresolved
trial is recorded as truncated at the true horizon, which is the almost
sure outcome (the residual stopping probability after n_cap steps is
bounded by sum_{n > n_cap} (n+1)**(-|Y|) / T).  Capped trials are counted
separately so the approximation is visible in the output.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from ._fused import PlogpTable, fused_inputs, step_block
from .distributions import Distribution
from .hypothesis_space import Hypothesis, enumerate_hypotheses
from .sequential_tests import TestConfig, _kernel_for

__all__ = [
    "TrialPlan",
    "HypothesisStats",
    "TrialResult",
    "SweepResult",
    "run_trials",
    "sweep",
]

_NULL_DECISION = -1
_NO_DECISION = -2
_PENDING = -9

_BLOCK_START = 32
_BLOCK_MAX = 512
_SAFETY_CAP = 10_000_000

_WILSON_Z = 1.959963984540054  # 97.5% normal quantile


@dataclass(frozen=True)
class TrialPlan:
    """A batch of simulations: test configuration plus data generation.

    The data-generating distributions are carried here, not in the test
    configuration, so universal tests never see them.  ``mu`` drives every
    outlier in the identical model; ``mus`` (length K, assigned to the
    outlier indices in sorted order) drives the distinct model.
    """

    config: TestConfig
    trials_per_hypothesis: int
    seed: int
    pi: Distribution
    mu: Distribution | None = None
    mus: tuple[Distribution, ...] | None = None
    step_cap: int | None = None

    def __post_init__(self) -> None:
        if self.trials_per_hypothesis < 1:
            raise ValueError("need at least one trial per hypothesis")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.step_cap is not None and self.step_cap < 1:
            raise ValueError("step_cap must be positive")
        if self.pi.alphabet.size != self.config.alphabet_size:
            raise ValueError("pi alphabet size mismatch")
        if self.config.model == "identical":
            if self.mu is None:
                raise ValueError("identical model needs a data-generating mu")
            if self.mu.alphabet.size != self.config.alphabet_size:
                raise ValueError("mu alphabet size mismatch")
        else:
            if self.mus is None or len(self.mus) != self.config.K:
                raise ValueError("distinct model needs exactly K data-generating mus")
            if any(m.alphabet.size != self.config.alphabet_size for m in self.mus):
                raise ValueError("mus alphabet size mismatch")


@dataclass(frozen=True)
class HypothesisStats:
    """Aggregates of all trials simulated under one hypothesis at one T."""

    hypothesis: Hypothesis
    trials: int
    errors: int
    mean_N: float
    sd_N: float
    truncations: int
    capped: int

    @property
    def error_rate(self) -> float:
        return self.errors / self.trials

    @property
    def truncation_rate(self) -> float:
        return self.truncations / self.trials

    @property
    def wilson_ci(self) -> tuple[float, float]:
        """95% Wilson interval for the error rate."""
        n = self.trials
        p = self.error_rate
        z2 = _WILSON_Z**2
        denom = 1.0 + z2 / n
        center = (p + z2 / (2 * n)) / denom
        half = _WILSON_Z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
        return (max(0.0, center - half), min(1.0, center + half))


@dataclass(frozen=True)
class TrialResult:
    """Per-hypothesis statistics at a single threshold."""

    T: float
    per_hypothesis: tuple[HypothesisStats, ...]

    @property
    def p_max(self) -> float:
        return max(s.error_rate for s in self.per_hypothesis)

    def stats_for(self, hyp: Hypothesis) -> HypothesisStats:
        for s in self.per_hypothesis:
            if s.hypothesis == hyp:
                return s
        raise KeyError(f"no statistics for hypothesis {hyp}")


@dataclass(frozen=True)
class SweepResult:
    """Results of a threshold sweep, one TrialResult per T (ascending)."""

    plan: TrialPlan
    thresholds: tuple[float, ...]
    results: tuple[TrialResult, ...]

    def effective_pmax(self, t_index: int) -> tuple[float, bool]:
        """P_max for the slope, with the rule-of-three stand-in when zero.

        Returns (value, flagged): at zero observed errors the slope cannot
        be estimated, so 3/trials is reported as a conservative bound and
        the row is flagged.
        """
        pmax = self.results[t_index].p_max
        if pmax > 0.0:
            return pmax, False
        return 3.0 / self.plan.trials_per_hypothesis, True

    def slope(self, t_index: int, stats: HypothesisStats) -> float:
        pmax, _ = self.effective_pmax(t_index)
        return -math.log(pmax) / stats.mean_N

    def class_sizes(self) -> tuple[int, ...]:
        return tuple(sorted({s.hypothesis.size for s in self.results[0].per_hypothesis}))

    def class_mean_N(self, t_index: int, size: int) -> float:
        vals = [s.mean_N for s in self.results[t_index].per_hypothesis if s.hypothesis.size == size]
        if not vals:
            raise KeyError(f"no hypotheses of size {size}")
        return float(np.mean(vals))

    def class_slope(self, t_index: int, size: int) -> float:
        pmax, _ = self.effective_pmax(t_index)
        return -math.log(pmax) / self.class_mean_N(t_index, size)

    def to_csv(self, header_lines: Sequence[str] = ()) -> str:
        """Deterministic CSV rendering; optional comment lines go first."""
        out = []
        for line in header_lines:
            out.append(f"# {line}")
        out.append("T,hypothesis,error_rate,ci_lo,ci_hi,mean_N,slope,truncation_rate,slope_flag")
        for j, res in enumerate(self.results):
            _, flagged = self.effective_pmax(j)
            flag = "lower_bound" if flagged else ""
            for s in res.per_hypothesis:
                lo, hi = s.wilson_ci
                row = [
                    format(res.T, ".12g"),
                    str(s.hypothesis),
                    format(s.error_rate, ".12g"),
                    format(lo, ".12g"),
                    format(hi, ".12g"),
                    format(s.mean_N, ".12g"),
                    format(self.slope(j, s), ".12g"),
                    format(s.truncation_rate, ".12g"),
                    flag,
                ]
                out.append(",".join(row))
        return "\n".join(out) + "\n"

    def to_dict(self) -> dict:
        results = []
        for j, res in enumerate(self.results):
            pmax_eff, flagged = self.effective_pmax(j)
            per_hyp = []
            for s in res.per_hypothesis:
                lo, hi = s.wilson_ci
                per_hyp.append(
                    {
                        "hypothesis": s.hypothesis.to_list(),
                        "error_rate": s.error_rate,
                        "ci_lo": lo,
                        "ci_hi": hi,
                        "mean_N": s.mean_N,
                        "sd_N": s.sd_N,
                        "slope": self.slope(j, s),
                        "truncation_rate": s.truncation_rate,
                        "capped": s.capped,
                    }
                )
            results.append(
                {
                    "T": res.T,
                    "p_max": res.p_max,
                    "slope_is_lower_bound": flagged,
                    "per_hypothesis": per_hyp,
                }
            )
        return {"thresholds": list(self.thresholds), "results": results}

    def to_json(self, provenance: dict | None = None) -> str:
        payload = self.to_dict()
        if provenance is not None:
            payload = {"provenance": provenance, **payload}
        return json.dumps(payload, indent=2, sort_keys=True)


def _gen_distributions(plan: TrialPlan, true_hyp: Hypothesis) -> list[Distribution]:
    dists = []
    members = true_hyp.outliers
    for i in range(plan.config.M):
        if i in members:
            dists.append(plan.mu if plan.config.model == "identical" else plan.mus[members.index(i)])
        else:
            dists.append(plan.pi)
    return dists


def _simulate_hypothesis(plan: TrialPlan, thresholds: tuple[float, ...], hyp_index: int):
    """Simulate all trials for one true hypothesis across all thresholds.

    Returns (N, dec, truncated, capped, true_code): arrays of shape
    (len(thresholds), trials); ``dec`` holds indices into the scored
    hypothesis list, ``_NULL_DECISION`` for truncation-forced nulls, or
    ``_NO_DECISION`` for capped runs without a verdict.
    """
    config = plan.config
    M, k = config.M, config.alphabet_size
    space = enumerate_hypotheses(M, config.K, config.model)
    true_hyp = space.hypotheses[hyp_index]
    kernel, scored = _kernel_for(config, space)
    growing = kernel.growing_threshold
    R = plan.trials_per_hypothesis
    n_thr = len(thresholds)
    ln_ts = [math.log(t) for t in thresholds]

    horizons: list[int | None] = []
    limits: list[int] = []
    for t in thresholds:
        if config.model == "identical":
            hor = int(math.floor(config.f(t)))
        else:
            hor = None
        horizons.append(hor)
        lim = hor if hor is not None else (plan.step_cap or _SAFETY_CAP)
        if hor is not None and plan.step_cap is not None:
            lim = min(hor, plan.step_cap)
        limits.append(lim)

    cum = np.cumsum(np.stack([d.probs for d in _gen_distributions(plan, true_hyp)]), axis=1)
    cum[:, -1] = 1.0
    rngs = [
        np.random.default_rng(np.random.SeedSequence((plan.seed, hyp_index, t)))
        for t in range(R)
    ]

    fam_code, mem_idx, mem_ptr, comp_idx, comp_ptr, slogs, clogc, csizes, log_mu, log_pi = (
        fused_inputs(kernel)
    )
    polylog_c = float((M + 1) * k) if growing else 0.0
    ln_arr = np.array(ln_ts, dtype=np.float64)
    lim_arr = np.array(limits, dtype=np.int64)
    table = PlogpTable()

    N = np.zeros((n_thr, R), dtype=np.int64)
    dec = np.full((n_thr, R), _PENDING, dtype=np.int64)
    truncated = np.zeros((n_thr, R), dtype=bool)
    capped = np.zeros((n_thr, R), dtype=bool)
    pend = np.ones((n_thr, R), dtype=bool)

    counts = np.zeros((R, M, k), dtype=np.float64)
    n0 = 0
    block = _BLOCK_START
    while pend.any():
        active = np.flatnonzero(pend.any(axis=0))
        max_lim = max(limits[j] for j in range(n_thr) if pend[j].any())
        b_eff = min(block, max_lim - n0)
        u = np.stack([rngs[t].random((b_eff, M)) for t in active])
        syms = (u[:, :, :, None] >= cum[None, None, :, :]).sum(axis=3)
        table.ensure((n0 + b_eff) * M + 1)

        counts_a = counts[active]
        pend_a = pend[:, active].copy()
        n_a = N[:, active].copy()
        dec_a = dec[:, active].copy()
        best_out = np.empty((active.size, b_eff), dtype=np.int64)
        gap_out = np.empty((active.size, b_eff), dtype=np.float64)
        thr_out = np.empty(b_eff, dtype=np.float64)
        step_block(
            syms, counts_a, n0, fam_code,
            mem_idx, mem_ptr, comp_idx, comp_ptr,
            slogs, clogc, csizes, log_mu, log_pi,
            ln_arr, polylog_c, lim_arr,
            pend_a, n_a, dec_a, table.values,
            best_out, gap_out, thr_out,
        )
        counts[active] = counts_a
        pend[:, active] = pend_a
        N[:, active] = n_a
        dec[:, active] = dec_a

        n0 += b_eff
        for j in range(n_thr):
            if limits[j] <= n0:
                rows = np.flatnonzero(pend[j])
                if rows.size:
                    if horizons[j] is not None:
                        N[j, rows] = horizons[j]
                        dec[j, rows] = _NULL_DECISION
                        truncated[j, rows] = True
                        capped[j, rows] = limits[j] < horizons[j]
                    else:
                        N[j, rows] = limits[j]
                        dec[j, rows] = _NO_DECISION
                        capped[j, rows] = True
                    pend[j, rows] = False
        block = min(block * 2, _BLOCK_MAX)

    if true_hyp in scored:
        true_code = scored.index(true_hyp)
    else:
        # GL identical families do not score the null; it is reachable only
        # through truncation, recorded with the null sentinel.
        true_code = _NULL_DECISION
    return N, dec, truncated, capped, true_code


def _worker(args) -> tuple[int, tuple]:
    plan, thresholds, hyp_index = args
    return hyp_index, _simulate_hypothesis(plan, thresholds, hyp_index)


def sweep(plan: TrialPlan, thresholds: Sequence[float], jobs: int = 1) -> SweepResult:
    """Run the plan at every threshold and assemble the sweep table.

    Thresholds must be sorted ascending.  Each (hypothesis, trial) pair
    replays one observation stream across all thresholds.  Output is
    independent of ``jobs``.
    """
    ts = [float(t) for t in thresholds]
    if not ts:
        raise ValueError("need at least one threshold")
    if any(t2 <= t1 for t1, t2 in zip(ts, ts[1:])):
        raise ValueError("thresholds must be sorted strictly ascending")
    if ts[0] <= 1.0:
        raise ValueError("thresholds must exceed 1")
    # validate every threshold against the configured truncation function
    for t in ts:
        replace(plan.config, T=t)

    space = enumerate_hypotheses(plan.config.M, plan.config.K, plan.config.model)
    tasks = [(plan, tuple(ts), h) for h in range(len(space.hypotheses))]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            raw = dict(pool.map(_worker, tasks))
    else:
        raw = dict(map(_worker, tasks))

    results = []
    for j, t in enumerate(ts):
        per_hyp = []
        for h, hyp in enumerate(space.hypotheses):
            N, dec, truncated, capped, true_code = raw[h]
            errors = int(np.count_nonzero(dec[j] != true_code))
            n_vals = N[j].astype(np.float64)
            sd = float(np.std(n_vals, ddof=1)) if n_vals.size > 1 else 0.0
            per_hyp.append(
                HypothesisStats(
                    hypothesis=hyp,
                    trials=plan.trials_per_hypothesis,
                    errors=errors,
                    mean_N=float(np.mean(n_vals)),
                    sd_N=sd,
                    truncations=int(np.count_nonzero(truncated[j])),
                    capped=int(np.count_nonzero(capped[j])),
                )
            )
        results.append(TrialResult(T=t, per_hypothesis=tuple(per_hyp)))
    return SweepResult(plan=plan, thresholds=tuple(ts), results=tuple(results))


def run_trials(plan: TrialPlan, jobs: int = 1) -> TrialResult:
    """Simulate the plan at its configured threshold."""
    return sweep(plan, [plan.config.T], jobs=jobs).results[0]
