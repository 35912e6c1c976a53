"""Sequential outlier detection among finite-alphabet data streams.

Among M independent symbol streams, a small unknown subset follows an
outlier distribution while the rest follow a common typical one.  This
package implements the sequential tests that identify the outlier subset
from as few observations as possible (an exact-likelihood multihypothesis
SPRT when the distributions are known, generalized-likelihood tests when
they are not), the closed-form error-exponent coefficients describing
their asymptotic behavior, and a reproducible Monte-Carlo harness for
measuring error probability versus expected stopping time.
"""

__version__ = "0.1.0"

from .distributions import (
    Alphabet,
    Distribution,
    TypeVector,
    bhattacharyya,
    distribution_from_json,
    distribution_to_json,
    entropy,
    load_distribution,
    mixture,
    relative_entropy,
    save_distribution,
    total_variation,
    type_vectors_to_csv,
)
from .exponents import (
    ExponentReport,
    alpha,
    alpha_bar,
    distinct_exponent,
    distinct_report,
    eta,
    eta_bar,
    identical_report,
    msprt_exponent,
)
from .hypothesis_space import (
    Hypothesis,
    HypothesisSpace,
    best_hypothesis,
    enumerate_hypotheses,
    gl_score_distinct_typ,
    gl_score_distinct_univ,
    gl_score_typ,
    gl_score_univ,
)
from .montecarlo import (
    HypothesisStats,
    SweepResult,
    TrialPlan,
    TrialResult,
    run_trials,
    sweep,
)
from .sequential_tests import (
    FixedSource,
    IidSource,
    TestConfig,
    TestResult,
    default_truncation,
    run_gl_distinct,
    run_gl_identical,
    run_msprt,
    threshold,
)
from .spam import (
    LabeledCorpus,
    Quantizer,
    SpamExperimentResult,
    fit_quantizer,
    load_corpus,
    pool_distributions,
    run_spam_experiment,
    surrogate_corpus,
    write_corpus_csv,
)

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
    "Hypothesis",
    "HypothesisSpace",
    "enumerate_hypotheses",
    "best_hypothesis",
    "gl_score_typ",
    "gl_score_univ",
    "gl_score_distinct_typ",
    "gl_score_distinct_univ",
    "TestConfig",
    "TestResult",
    "IidSource",
    "FixedSource",
    "default_truncation",
    "threshold",
    "run_msprt",
    "run_gl_identical",
    "run_gl_distinct",
    "msprt_exponent",
    "eta",
    "eta_bar",
    "alpha",
    "alpha_bar",
    "distinct_exponent",
    "ExponentReport",
    "identical_report",
    "distinct_report",
    "TrialPlan",
    "HypothesisStats",
    "TrialResult",
    "SweepResult",
    "run_trials",
    "sweep",
    "LabeledCorpus",
    "Quantizer",
    "load_corpus",
    "fit_quantizer",
    "pool_distributions",
    "SpamExperimentResult",
    "run_spam_experiment",
    "surrogate_corpus",
    "write_corpus_csv",
]
