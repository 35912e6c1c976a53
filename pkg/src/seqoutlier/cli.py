"""Command-line front end: exponent reports, simulations, sweeps, spam runs.

Subcommands: ``exponents``, ``simulate``, ``sweep``, ``spam``.  Option
values resolve with precedence file < environment < flags (the config
file is JSON or TOML; ``SEQ_OUTLIER_JOBS`` seeds the worker count).

Every output artifact starts with a provenance header carrying the tool
version, the fully resolved configuration, and the seed, so any artifact
can be regenerated from its own header.  Exit codes: 0 success, 1 usage
or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .distributions import Distribution, load_distribution, total_variation
from .exponents import distinct_report, identical_report
from .hypothesis_space import Hypothesis
from .montecarlo import TrialPlan, sweep as run_sweep
from .sequential_tests import (
    IidSource,
    TestConfig,
    run_gl_distinct,
    run_gl_identical,
    run_msprt,
)
from .spam import (
    CorpusError,
    fit_quantizer,
    load_corpus,
    run_spam_experiment,
    surrogate_corpus,
)

DEGENERATE_TV = 1e-12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage problems; the artifact reserves
    # 2 for data errors, so route usage problems through exit code 1.
    def error(self, message):
        raise UsageError(message)


def _load_config_file(path: str) -> dict:
    if path.endswith(".toml"):
        try:
            import tomllib  # py311+
        except ModuleNotFoundError:
            import tomli as tomllib
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _resolve(flag_value, cfg: dict, key: str, default=None):
    if flag_value is not None:
        return flag_value
    if key in cfg:
        return cfg[key]
    return default


def _resolve_jobs(flag_value, cfg: dict) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get("SEQ_OUTLIER_JOBS")
    if env is not None:
        return int(env)
    return int(cfg.get("jobs", 1))


def _dist_from_value(value) -> Distribution:
    if isinstance(value, str):
        return load_distribution(value)
    if isinstance(value, Distribution):
        return value
    return Distribution(value)


def _dists_from_value(value) -> list[Distribution]:
    if isinstance(value, str):
        return [load_distribution(value)]
    if isinstance(value, (list, tuple)):
        if value and isinstance(value[0], (list, tuple)):
            return [Distribution(v) for v in value]
        if value and isinstance(value[0], str):
            return [load_distribution(v) for v in value]
        return [Distribution(value)]
    raise UsageError(f"cannot interpret distribution specification {value!r}")


def _floats_csv(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(tok) for tok in str(text).split(",") if tok.strip()]


def _ints_csv(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    return [int(tok) for tok in str(text).split(",") if tok.strip()]


def _provenance(config: dict, seed: int | None) -> dict:
    prov = {"tool": "seqoutlier", "version": __version__, "config": config}
    if seed is not None:
        prov["seed"] = seed
    return prov


def _header_lines(config: dict, seed: int | None) -> list[str]:
    lines = [
        f"seqoutlier {__version__}",
        "config: " + json.dumps(config, sort_keys=True, separators=(",", ":")),
    ]
    if seed is not None:
        lines.append(f"seed: {seed}")
    return lines


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _power_truncation(exponent: float):
    # functools.partial of a module-level function stays picklable for --jobs
    import functools

    return functools.partial(_pow, exponent)


def _pow(exponent: float, t: float) -> float:
    return t**exponent


# ---------------------------------------------------------------------------
# exponents
# ---------------------------------------------------------------------------


def _cmd_exponents(args) -> int:
    cfg = _load_config_file(args.config) if args.config else {}
    model = _resolve(args.model, cfg, "model", "identical")
    knowledge = _resolve(args.knowledge, cfg, "knowledge", "universal")
    M = int(_resolve(args.M, cfg, "M"))
    K = int(_resolve(args.K, cfg, "K"))
    pi = _dist_from_value(_resolve(args.pi, cfg, "pi"))
    mus = _dists_from_value(_resolve(args.mu if args.mu else None, cfg, "mu"))

    if not args.allow_degenerate:
        for m in mus:
            if total_variation(m, pi) <= DEGENERATE_TV:
                raise ValueError(
                    "mu equals pi: exponents degenerate to 0 (pass --allow-degenerate to proceed)"
                )

    if model == "identical":
        if len(mus) != 1:
            raise UsageError("the identical model takes exactly one --mu")
        report = identical_report(mus[0], pi, M, K, knowledge)
    else:
        report = distinct_report(mus, pi, M, K)

    resolved = {
        "command": "exponents",
        "model": model,
        "knowledge": knowledge,
        "M": M,
        "K": K,
        "mu": [m.probs.tolist() for m in mus],
        "pi": pi.probs.tolist(),
    }
    if args.format == "json":
        payload = {"provenance": _provenance(resolved, None), **report.to_dict()}
        _write(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.output)
    else:
        header = "".join(f"# {line}\n" for line in _header_lines(resolved, None))
        _write(header + report.format_table(), args.output)
    return 0


# ---------------------------------------------------------------------------
# simulate / sweep
# ---------------------------------------------------------------------------


def _build_config(model, knowledge, M, K, T, alphabet_size, mus, pi, f_exponent) -> TestConfig:
    known_mu = mus[0] if knowledge == "both_known" else None
    known_pi = pi if knowledge in ("both_known", "pi_known") else None
    f = _power_truncation(f_exponent) if model == "identical" else None
    return TestConfig(
        M=M,
        K=K,
        model=model,
        knowledge=knowledge,
        T=T,
        alphabet_size=alphabet_size,
        known_mu=known_mu,
        known_pi=known_pi,
        f=f,
    )


def _cmd_simulate(args) -> int:
    cfg = _load_config_file(args.config) if args.config else {}
    model = _resolve(args.model, cfg, "model", "identical")
    knowledge = _resolve(args.knowledge, cfg, "knowledge", "universal")
    M = int(_resolve(args.M, cfg, "M"))
    K = int(_resolve(args.K, cfg, "K"))
    T = float(_resolve(args.T, cfg, "T"))
    f_exponent = float(_resolve(args.f_exponent, cfg, "f_exponent", 5.0))
    seed = int(_resolve(args.seed, cfg, "seed", 0))
    pi = _dist_from_value(_resolve(args.pi, cfg, "pi"))
    mus = _dists_from_value(_resolve(args.mu if args.mu else None, cfg, "mu"))
    outliers = _ints_csv(_resolve(args.outliers, cfg, "outliers", []))

    true_hyp = Hypothesis.from_list(outliers)
    if model == "distinct" and true_hyp.size != K:
        raise ValueError(f"the distinct model needs exactly K={K} outliers")
    if model == "identical" and len(mus) != 1:
        raise UsageError("the identical model takes exactly one --mu")
    if model == "distinct" and len(mus) != K:
        raise UsageError(f"the distinct model takes exactly K={K} --mu files")

    alphabet_size = pi.alphabet.size
    config = _build_config(model, knowledge, M, K, T, alphabet_size, mus, pi, f_exponent)

    dists = []
    for i in range(M):
        if i in true_hyp.outliers:
            dists.append(mus[0] if model == "identical" else mus[true_hyp.outliers.index(i)])
        else:
            dists.append(pi)
    source = IidSource(dists, rng=np.random.default_rng(np.random.SeedSequence(seed)))

    record = args.trajectory is not None
    if knowledge == "both_known":
        result = run_msprt(config, source, record_trajectory=record, max_steps=10_000_000)
    elif model == "identical":
        result = run_gl_identical(config, source, record_trajectory=record)
    else:
        result = run_gl_distinct(config, source, record_trajectory=record, max_steps=10_000_000)

    resolved = {
        "command": "simulate",
        "model": model,
        "knowledge": knowledge,
        "M": M,
        "K": K,
        "T": T,
        "f_exponent": f_exponent,
        "alphabet_size": alphabet_size,
        "mu": [m.probs.tolist() for m in mus],
        "pi": pi.probs.tolist(),
        "outliers": list(true_hyp.outliers),
        "seed": seed,
    }
    payload = {
        "provenance": _provenance(resolved, seed),
        "n": result.stopping_time,
        "decision": result.decision.to_list(),
        "truncated": result.truncated,
    }
    _write(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.output)
    if record:
        header = "".join(f"# {line}\n" for line in _header_lines(resolved, seed))
        _write(header + result.trajectory_csv(), args.trajectory)
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config_file(args.config) if args.config else {}
    model = _resolve(args.model, cfg, "model", "identical")
    knowledge = _resolve(args.knowledge, cfg, "knowledge", "universal")
    M = int(_resolve(args.M, cfg, "M"))
    K = int(_resolve(args.K, cfg, "K"))
    thresholds = _floats_csv(_resolve(args.T, cfg, "thresholds"))
    trials = int(_resolve(args.trials, cfg, "trials", 1000))
    f_exponent = float(_resolve(args.f_exponent, cfg, "f_exponent", 5.0))
    seed = int(_resolve(args.seed, cfg, "seed", 0))
    step_cap = _resolve(args.step_cap, cfg, "step_cap")
    step_cap = None if step_cap is None else int(step_cap)
    jobs = _resolve_jobs(args.jobs, cfg)
    pi = _dist_from_value(_resolve(args.pi, cfg, "pi"))
    mus = _dists_from_value(_resolve(args.mu if args.mu else None, cfg, "mu"))

    if model == "identical" and len(mus) != 1:
        raise UsageError("the identical model takes exactly one --mu")
    if model == "distinct" and len(mus) != K:
        raise UsageError(f"the distinct model takes exactly K={K} --mu files")

    alphabet_size = pi.alphabet.size
    config = _build_config(
        model, knowledge, M, K, thresholds[0], alphabet_size, mus, pi, f_exponent
    )
    plan = TrialPlan(
        config=config,
        trials_per_hypothesis=trials,
        seed=seed,
        pi=pi,
        mu=mus[0] if model == "identical" else None,
        mus=tuple(mus) if model == "distinct" else None,
        step_cap=step_cap,
    )
    result = run_sweep(plan, thresholds, jobs=jobs)

    resolved = {
        "command": "sweep",
        "model": model,
        "knowledge": knowledge,
        "M": M,
        "K": K,
        "thresholds": thresholds,
        "trials": trials,
        "f_exponent": f_exponent,
        "step_cap": step_cap,
        "alphabet_size": alphabet_size,
        "mu": [m.probs.tolist() for m in mus],
        "pi": pi.probs.tolist(),
        "seed": seed,
    }
    if args.format == "json":
        _write(result.to_json(provenance=_provenance(resolved, seed)) + "\n", args.output)
    else:
        _write(result.to_csv(header_lines=_header_lines(resolved, seed)), args.output)
    return 0


# ---------------------------------------------------------------------------
# spam
# ---------------------------------------------------------------------------


def _cmd_spam(args) -> int:
    cfg = _load_config_file(args.config) if args.config else {}
    data = _resolve(args.data, cfg, "data")
    use_surrogate = args.surrogate or (data is None and cfg.get("surrogate", False))
    if data is None and not use_surrogate:
        raise UsageError("spam needs --data PATH (or --surrogate)")
    thresholds = _floats_csv(_resolve(args.thresholds, cfg, "thresholds", [3.98, 4.0, 4.05, 4.1]))
    trials = int(_resolve(args.trials, cfg, "trials", 1000))
    seed = int(_resolve(args.seed, cfg, "seed", 0))
    levels = int(_resolve(args.levels, cfg, "levels", 5))
    strategy = _resolve(args.strategy, cfg, "strategy", "zero-inflated")
    jobs = _resolve_jobs(args.jobs, cfg)

    if args.feature_index is not None:
        feature: str | int = args.feature_index
    elif args.feature_name is not None:
        feature = args.feature_name
    else:
        feature = _resolve(None, cfg, "feature", "word_freq_hp")

    if use_surrogate:
        corpus = surrogate_corpus(seed=7)
        data_label = "surrogate"
    else:
        corpus = load_corpus(data, feature=feature)
        data_label = data
    quantizer = fit_quantizer(corpus, levels=levels, strategy=strategy)
    result = run_spam_experiment(corpus, quantizer, thresholds, trials, seed, jobs=jobs)

    resolved = {
        "command": "spam",
        "data": data_label,
        "feature": feature if isinstance(feature, str) else int(feature),
        "strategy": strategy,
        "levels": levels,
        "quantizer_edges": list(quantizer.edges),
        "thresholds": thresholds,
        "trials": trials,
        "n_spam": corpus.n_spam,
        "n_nonspam": corpus.n_nonspam,
        "seed": seed,
    }
    if args.format == "json":
        _write(result.to_json(provenance=_provenance(resolved, seed)) + "\n", args.output)
    else:
        _write(result.table_csv(header_lines=_header_lines(resolved, seed)), args.output)
    return 0


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="seqoutlier", description=__doc__)
    parser.add_argument("--version", action="version", version=f"seqoutlier {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_exp = sub.add_parser("exponents", help="closed-form exponent report")
    p_exp.add_argument("--mu", action="append", help="outlier distribution JSON (repeat for distinct)")
    p_exp.add_argument("--pi", help="typical distribution JSON")
    p_exp.add_argument("--M", type=int)
    p_exp.add_argument("--K", type=int)
    p_exp.add_argument("--model", choices=["identical", "distinct"])
    p_exp.add_argument("--knowledge", choices=["both_known", "pi_known", "universal"])
    p_exp.add_argument("--allow-degenerate", action="store_true")
    p_exp.add_argument("--format", choices=["table", "json"], default="table")
    p_exp.add_argument("--config")
    p_exp.add_argument("-o", "--output")
    p_exp.set_defaults(func=_cmd_exponents)

    p_sim = sub.add_parser("simulate", help="run one sequential test on synthetic data")
    p_sim.add_argument("--model", choices=["identical", "distinct"])
    p_sim.add_argument("--knowledge", choices=["both_known", "pi_known", "universal"])
    p_sim.add_argument("--M", type=int)
    p_sim.add_argument("--K", type=int)
    p_sim.add_argument("--T", type=float)
    p_sim.add_argument("--f-exponent", type=float, dest="f_exponent")
    p_sim.add_argument("--mu", action="append")
    p_sim.add_argument("--pi")
    p_sim.add_argument("--outliers", help="true outlier indices, e.g. 0,1 (empty for the null)")
    p_sim.add_argument("--seed", type=int)
    p_sim.add_argument("--trajectory", help="write the per-step trajectory CSV here")
    p_sim.add_argument("--config")
    p_sim.add_argument("-o", "--output")
    p_sim.set_defaults(func=_cmd_simulate)

    p_swp = sub.add_parser("sweep", help="threshold sweep with Monte-Carlo error estimates")
    p_swp.add_argument("--model", choices=["identical", "distinct"])
    p_swp.add_argument("--knowledge", choices=["both_known", "pi_known", "universal"])
    p_swp.add_argument("--M", type=int)
    p_swp.add_argument("--K", type=int)
    p_swp.add_argument("--T", help="comma-separated thresholds, ascending")
    p_swp.add_argument("--trials", type=int)
    p_swp.add_argument("--f-exponent", type=float, dest="f_exponent")
    p_swp.add_argument("--step-cap", type=int, dest="step_cap")
    p_swp.add_argument("--mu", action="append")
    p_swp.add_argument("--pi")
    p_swp.add_argument("--seed", type=int)
    p_swp.add_argument("--jobs", type=int)
    p_swp.add_argument("--format", choices=["csv", "json"], default="csv")
    p_swp.add_argument("--config")
    p_swp.add_argument("-o", "--output")
    p_swp.set_defaults(func=_cmd_sweep)

    p_spam = sub.add_parser("spam", help="spam-corpus experiment (slope table)")
    src = p_spam.add_mutually_exclusive_group()
    src.add_argument("--data", help="corpus CSV path")
    src.add_argument("--surrogate", action="store_true", help="use the built-in synthetic corpus")
    feat = p_spam.add_mutually_exclusive_group()
    feat.add_argument("--feature-name", dest="feature_name")
    feat.add_argument("--feature-index", dest="feature_index", type=int)
    p_spam.add_argument("--thresholds")
    p_spam.add_argument("--trials", type=int)
    p_spam.add_argument("--levels", type=int)
    p_spam.add_argument("--strategy", choices=["zero-inflated", "equal-width"])
    p_spam.add_argument("--seed", type=int)
    p_spam.add_argument("--jobs", type=int)
    p_spam.add_argument("--format", choices=["csv", "json"], default="csv")
    p_spam.add_argument("--config")
    p_spam.add_argument("-o", "--output")
    p_spam.set_defaults(func=_cmd_spam)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except CorpusError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
