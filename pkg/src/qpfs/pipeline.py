"""End-to-end wiring: discretize, build Q and F, select, evaluate.

This is the layer the CLI and the table-reproduction harness share; each
step delegates to the module that owns it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from . import baselines, infotheory, qp
from .errors import ConfigError, DataError
from .evaluation import CvProtocol, EvaluationReport, evaluate
from .ingest import Dataset, DiscretizationPolicy, DiscretizedDataset, discretize

METHODS = ("quadratic", "mrmr", "maxrel", "infogain", "relieff", "cfs")
Q_DIAGONALS = ("entropy", "zero")


@dataclass(frozen=True)
class SelectionConfig:
    """Everything a selection run needs besides the dataset itself.

    ``q_diagonal`` picks the objective reading for the redundancy matrix:
    "zero" (default) excludes self-similarity, which is the reading
    consistent with the published balance estimates near 0.5 on the credit
    benchmarks; "entropy" keeps H(x_i) on the diagonal.
    """

    method: str = "quadratic"
    k: int = 5
    policy: DiscretizationPolicy = DiscretizationPolicy()
    alpha: float | None = None
    q_diagonal: str = "zero"
    relieff_neighbors: int = 10
    relieff_iterations: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.q_diagonal not in Q_DIAGONALS:
            raise ConfigError(f"q_diagonal must be one of {Q_DIAGONALS}")
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.k < 1:
            raise ConfigError("k must be positive")


@dataclass
class SelectionOutput:
    """Selection plus the intermediate quantities worth inspecting."""

    result: baselines.SelectionResult
    weights: qp.FeatureWeights | None
    discretized: DiscretizedDataset
    redundancy: infotheory.RedundancyMatrix | None
    relevance: infotheory.RelevanceVector | None
    alpha: float | None
    problem: qp.QpProblem | None


def information_quantities(discretized: DiscretizedDataset, q_diagonal: str = "zero"):
    """Redundancy matrix (with the requested diagonal) and relevance vector."""
    Q = infotheory.build_redundancy_matrix(discretized)
    if q_diagonal == "zero":
        Q = Q.with_zero_diagonal()
    F = infotheory.build_relevance_vector(discretized)
    return Q, F


def select_features(data: Dataset, config: SelectionConfig) -> SelectionOutput:
    """Run one selector on a dataset and return its full trace."""
    dd = discretize(data, config.policy)
    if config.k > dd.n_features and config.method != "cfs":
        raise ConfigError(f"k={config.k} exceeds the {dd.n_features} available features")

    weights = None
    problem = None
    alpha = None
    Q = None
    F = None

    if config.method in ("quadratic", "mrmr", "maxrel"):
        Q, F = information_quantities(dd, config.q_diagonal)

    if config.method == "quadratic":
        alpha = config.alpha if config.alpha is not None else qp.estimate_alpha(Q, F)
        problem = qp.assemble(Q, F, alpha)
        weights = qp.solve(problem)
        selected = qp.rank(weights, config.k)
        result = baselines.SelectionResult(
            method="quadratic", selected=selected, scores=weights.x.copy(), k=config.k
        )
    elif config.method == "mrmr":
        result = baselines.mrmr_greedy(Q, F, config.k)
    elif config.method == "maxrel":
        result = baselines.max_rel(F, config.k)
    elif config.method == "infogain":
        result = baselines.information_gain(dd, config.k)
    elif config.method == "relieff":
        result = baselines.relieff(dd, config.k,
                                   n_neighbors=config.relieff_neighbors,
                                   n_iterations=config.relieff_iterations,
                                   seed=config.seed)
    else:  # cfs: emergent size, reconciled to k by entry-order truncation
        result = baselines.truncate_selection(baselines.cfs(dd), config.k)

    return SelectionOutput(result=result, weights=weights, discretized=dd,
                           redundancy=Q, relevance=F, alpha=alpha, problem=problem)


def inspect_quantities(data: Dataset, config: SelectionConfig) -> dict:
    """Deterministic dump of Q, F, alpha-hat, lambda_min, and psd_shift."""
    dd = discretize(data, config.policy)
    Q, F = information_quantities(dd, config.q_diagonal)
    alpha = config.alpha if config.alpha is not None else qp.estimate_alpha(Q, F)
    problem = qp.assemble(Q, F, alpha)
    unshifted = problem.Q_eff - problem.psd_shift * np.eye(problem.m)
    lam_min = float(np.linalg.eigvalsh(unshifted)[0]) if problem.m else 0.0
    return {
        "feature_names": dd.feature_names,
        "Q": Q,
        "F": F,
        "alpha": alpha,
        "lambda_min": lam_min,
        "psd_shift": problem.psd_shift,
        "bin_counts": dd.bin_counts,
    }


# ---------------------------------------------------------------------------
# Table reproduction
# ---------------------------------------------------------------------------

def reference_results() -> dict:
    """Published reference error rates shipped with the package."""
    with resources.files("qpfs.data").joinpath("reference_errors.json").open() as fh:
        return json.load(fh)


def run_method_suite(data: Dataset, k: int, base_config: SelectionConfig,
                     protocol: CvProtocol, ridge: float = 1e-6,
                     convention: str = "bad-positive",
                     strict: bool = False,
                     methods: tuple = METHODS) -> dict[str, EvaluationReport]:
    """Evaluate every selector at the same k under one protocol."""
    reports: dict[str, EvaluationReport] = {}
    for method in methods:
        config = replace(base_config, method=method, k=k)
        output = select_features(data, config)
        strict_selector = None
        if strict:
            def strict_selector(train, _cfg=config):
                return select_features(train, _cfg).result.selected
        reports[method] = evaluate(
            data, output.result.selected, protocol, ridge=ridge,
            convention=convention, method=method, strict_selector=strict_selector,
        )
    return reports


def reproduce_tables(datasets: dict[str, tuple[Dataset, int]],
                     base_config: SelectionConfig | None = None,
                     protocol: CvProtocol | None = None,
                     ridge: float = 1e-6, convention: str = "bad-positive",
                     strict: bool = False) -> dict[str, dict[str, EvaluationReport]]:
    """Run every method on every dataset at its table's selection size.

    ``datasets`` maps a dataset key (e.g. "german") to (Dataset, k).
    Returns {dataset: {method: report}}; formatting and deltas live in
    the evaluation module.
    """
    base_config = base_config or SelectionConfig()
    protocol = protocol or CvProtocol()
    if not datasets:
        raise DataError("no datasets to reproduce")
    all_reports: dict[str, dict[str, EvaluationReport]] = {}
    for name, (data, k) in datasets.items():
        all_reports[name] = run_method_suite(
            data, k, base_config, protocol, ridge=ridge,
            convention=convention, strict=strict,
        )
    return all_reports
