"""Comparison selectors: greedy mRMR, MaxRel, Information Gain, ReliefF, CFS.

All selectors are deterministic given their full parameter set (including
the seed where one applies) and break score ties by ascending feature
index.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .infotheory import contingency, entropy, mutual_information
from .ingest import DiscretizedDataset
from .qp import _as_matrix, _as_vector


@dataclass
class SelectionResult:
    """An ordered feature subset plus the score trace that produced it.

    ``scores`` is method-specific: the full per-feature score vector for
    ranking selectors (MaxRel, Information Gain, ReliefF), the per-step
    criterion values for greedy mRMR, and the winning merit for CFS.
    """

    method: str
    selected: list[int]
    scores: np.ndarray
    k: int
    truncated: bool = False

    def __post_init__(self):
        if len(set(self.selected)) != len(self.selected):
            raise DataError("selection contains duplicate features")

    def to_text(self, names: list[str]) -> str:
        lines = ["feature\tscore\trank"]
        per_feature = self.scores.shape[0] == len(names)
        for pos, i in enumerate(self.selected, start=1):
            if per_feature:
                score = self.scores[i]
            elif self.scores.shape[0] == len(self.selected):
                score = self.scores[pos - 1]
            else:
                score = self.scores[-1]
            lines.append(f"{names[i]}\t{format(float(score), '.12g')}\t{pos}")
        return "\n".join(lines) + "\n"


def _top_k_by_score(scores: np.ndarray, k: int) -> list[int]:
    idx = np.arange(scores.shape[0])
    order = idx[np.lexsort((idx, -scores))]
    return [int(i) for i in order[:k]]


def _check_k(k: int, m: int) -> None:
    if not 1 <= k <= m:
        raise ValueError(f"k must be in [1, {m}], got {k}")


def mrmr_greedy(Q, F, k: int) -> SelectionResult:
    """Greedy minimal-redundancy / maximal-relevance selection.

    The first pick is the most relevant feature; each later step adds the
    candidate j maximizing F[j] - mean(Q[j, s] for already-selected s),
    the additive (difference) form of the criterion.
    """
    Qv = _as_matrix(Q)
    Fv = _as_vector(F)
    m = Fv.shape[0]
    _check_k(k, m)

    selected = [int(np.argmax(Fv))]
    trace = [float(Fv[selected[0]])]
    remaining = [j for j in range(m) if j != selected[0]]
    while len(selected) < k:
        crit = np.array([Fv[j] - Qv[j, selected].mean() for j in remaining])
        best = int(np.argmax(crit))          # first max: lowest index wins ties
        trace.append(float(crit[best]))
        selected.append(remaining.pop(best))
    return SelectionResult(method="mrmr", selected=selected,
                           scores=np.array(trace), k=k)


def max_rel(F, k: int) -> SelectionResult:
    """Top-k by relevance alone."""
    Fv = _as_vector(F)
    _check_k(k, Fv.shape[0])
    return SelectionResult(method="maxrel", selected=_top_k_by_score(Fv, k),
                           scores=Fv.copy(), k=k)


def information_gain(data: DiscretizedDataset, k: int) -> SelectionResult:
    """Top-k by I(y; x_i), computed from the data directly.

    Same estimator as the relevance vector, reached through a second call
    path; the two score vectors must agree exactly.
    """
    _check_k(k, data.n_features)
    if data.target.min() == data.target.max():
        raise DataError("single-label target")
    scores = np.array([
        mutual_information(contingency(data.feature_codes[:, j], data.target))
        for j in range(data.n_features)
    ])
    return SelectionResult(method="infogain", selected=_top_k_by_score(scores, k),
                           scores=scores, k=k)


def relieff(data: DiscretizedDataset, k: int, n_neighbors: int = 10,
            n_iterations: int | None = None, seed: int = 0) -> SelectionResult:
    """ReliefF weights with Hamming distance on the discretized codes.

    Near hits pull a feature's weight down when they disagree with the
    reference sample; near misses (weighted by their class prior) push it
    up.  ``n_iterations=None`` visits every sample once in row order, which
    is the default; smaller values sample without replacement under the
    seed.
    """
    codes = data.feature_codes
    y = data.target
    n, m = codes.shape
    _check_k(k, m)

    class_sizes = np.bincount(y, minlength=2)
    if class_sizes.min() < n_neighbors:
        raise DataError(
            f"smallest class has {class_sizes.min()} members; need >= {n_neighbors}"
        )
    priors = class_sizes / n

    if n_iterations is None or n_iterations >= n:
        visit = np.arange(n)
    else:
        if n_iterations < 1:
            raise ValueError("n_iterations must be positive")
        rng = np.random.default_rng(seed)
        visit = np.sort(rng.choice(n, size=n_iterations, replace=False))

    weights = np.zeros(m)
    classes = np.unique(y)
    for i in visit:
        diffs = codes != codes[i]                    # (n, m) 0/1 mismatches
        dist = diffs.sum(axis=1)
        dist_i = dist.copy()
        dist_i[i] = n * m + 1                        # exclude self
        order = np.lexsort((np.arange(n), dist_i))   # distance, then index
        hit_update = np.zeros(m)
        miss_update = np.zeros(m)
        for cls in classes:
            members = order[y[order] == cls]
            if cls == y[i]:
                near = members[members != i][:n_neighbors]
                if near.size:
                    hit_update = diffs[near].mean(axis=0)
            else:
                near = members[:n_neighbors]
                if near.size:
                    factor = priors[cls] / (1.0 - priors[y[i]])
                    miss_update += factor * diffs[near].mean(axis=0)
        weights += (miss_update - hit_update) / visit.size

    return SelectionResult(method="relieff", selected=_top_k_by_score(weights, k),
                           scores=weights, k=k)


# ---------------------------------------------------------------------------
# CFS
# ---------------------------------------------------------------------------

def symmetric_uncertainty(codes_a, codes_b) -> float:
    """2*I(a;b) / (H(a)+H(b)), with 0/0 defined as 0."""
    ha = entropy(codes_a)
    hb = entropy(codes_b)
    if ha + hb == 0.0:
        return 0.0
    return 2.0 * mutual_information(contingency(codes_a, codes_b)) / (ha + hb)


def cfs_merit(subset, su_target: np.ndarray, su_pairs: np.ndarray) -> float:
    """k * mean(feature-class SU) / sqrt(k + k(k-1) * mean(feature-feature SU))."""
    k = len(subset)
    if k == 0:
        return float("-inf")
    idx = np.asarray(subset)
    r_cf = su_target[idx].mean()
    if k == 1:
        r_ff = 0.0
    else:
        sub = su_pairs[np.ix_(idx, idx)]
        r_ff = (sub.sum() - np.trace(sub)) / (k * (k - 1))
    return float(k * r_cf / np.sqrt(k + k * (k - 1) * r_ff))


def cfs(data: DiscretizedDataset, stall_limit: int = 5) -> SelectionResult:
    """Correlation-based feature selection by best-first forward search.

    Maximizes the merit of symmetric-uncertainty correlations; the search
    stops after ``stall_limit`` consecutive non-improving expansions.  The
    subset size is emergent, and ``selected`` keeps the order in which
    features entered the winning subset.
    """
    codes = data.feature_codes
    y = data.target
    m = data.n_features
    if m < 1:
        raise DataError("need at least one feature")

    su_target = np.array([symmetric_uncertainty(codes[:, j], y) for j in range(m)])
    su_pairs = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            su = symmetric_uncertainty(codes[:, i], codes[:, j])
            su_pairs[i, j] = su
            su_pairs[j, i] = su

    # Best-first over subsets; heap keys are (-merit, insertion counter).
    # The search frontier starts at the empty set's children (all singletons).
    counter = 0
    heap: list[tuple[float, int, tuple[int, ...]]] = []
    visited = {frozenset()}
    for j in range(m):
        counter += 1
        visited.add(frozenset((j,)))
        heapq.heappush(heap, (-cfs_merit((j,), su_target, su_pairs), counter, (j,)))
    best_merit = float("-inf")
    best_subset: tuple[int, ...] = ()
    stalled = 0

    while heap:
        neg_merit, _, subset = heapq.heappop(heap)
        merit = -neg_merit
        if merit > best_merit + 1e-12:
            best_merit = merit
            best_subset = subset
            stalled = 0
        else:
            stalled += 1
            if stalled >= stall_limit:
                break
        for j in range(m):
            if j in subset:
                continue
            child = subset + (j,)
            key = frozenset(child)
            if key in visited:
                continue
            visited.add(key)
            counter += 1
            heapq.heappush(heap, (-cfs_merit(child, su_target, su_pairs), counter, child))

    if not best_subset:                      # all merits <= 0: keep the best singleton
        best_subset = (int(np.argmax(su_target)),)
        best_merit = cfs_merit(best_subset, su_target, su_pairs)
    selected = [int(j) for j in best_subset]
    return SelectionResult(method="cfs", selected=selected,
                           scores=np.array([best_merit]), k=len(selected))


def truncate_selection(result: SelectionResult, k: int) -> SelectionResult:
    """Cut an emergent-size selection down to k, recording that it happened.

    Features are dropped from the end, i.e. in reverse order of entry into
    the winning subset.  Selections already at or under k pass through.
    """
    if result.k <= k:
        return result
    return SelectionResult(
        method=result.method,
        selected=result.selected[:k],
        scores=result.scores,
        k=k,
        truncated=True,
    )
