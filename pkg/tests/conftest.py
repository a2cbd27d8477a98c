"""Shared fixtures and naive reference implementations.

The ``naive_*`` helpers re-derive every pipeline stage with plain Python
loops, straight from the definitions, so the vectorized library code can be
cross-checked against an independently written oracle on random instances.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from confset import LabeledDataset, PredictionSets, TestBatch

# the container class is named like a test class; keep pytest from collecting it
TestBatch.__test__ = False


# ---------------------------------------------------------------------------
# naive reference implementations (loop-based, definition-first)


def naive_conformal_pvalue(train_scores, test_score) -> float:
    n_at_least = sum(1 for s in train_scores if s >= test_score)
    return (1 + n_at_least) / (len(train_scores) + 1)


def naive_bh(pvalues) -> list[float]:
    m = len(pvalues)
    indexed = sorted(range(m), key=lambda i: pvalues[i])
    out = [0.0] * m
    for pos, i in enumerate(indexed, start=1):
        candidates = []
        for pos2, j in enumerate(indexed, start=1):
            if pos2 >= pos:
                candidates.append(min(1.0, m * pvalues[j] / pos2))
        out[i] = min(candidates)
    return out


def naive_threshold(n_k: int, alpha: float) -> float:
    target = (n_k + 1) * alpha
    k = 0
    while k + 1 <= target or math.isclose(k + 1, target, rel_tol=1e-9):
        k += 1
    return k / (n_k + 1)


def naive_predict(data: LabeledDataset, test: TestBatch, alpha, oracle=None):
    """Loop-based re-derivation of the full pipeline; returns list of sets."""
    m = test.m
    member = np.zeros((m, data.n_classes), dtype=bool)
    for k in range(1, data.n_classes + 1):
        rows = data.class_rows(k)
        if oracle is None:
            mean = rows.mean(axis=0)
            var = rows.var(axis=0, ddof=1)
        else:
            mean, var = oracle.class_params(k)
        def score(x):
            return sum((x[j] - mean[j]) ** 2 / var[j] for j in range(len(mean)))
        train_scores = [score(r) for r in rows]
        raw = [naive_conformal_pvalue(train_scores, score(x)) for x in test.features]
        adjusted = raw if m == 1 else naive_bh(raw)
        cut = naive_threshold(rows.shape[0], alpha)
        for i in range(m):
            member[i, k - 1] = adjusted[i] > cut
    return [set(np.flatnonzero(row) + 1) for row in member]


def naive_metrics(sets: list[set], truth, n_classes: int) -> dict:
    """Loop-based metric counting straight from the definitions."""
    truth = list(int(t) for t in truth)
    m = len(sets)
    outlier_label = n_classes + 1
    out = {}
    v_total, denom_total, r_total = 0, 0, 0
    cw = []
    for k in range(1, n_classes + 1):
        rejected = [i for i in range(m) if k not in sets[i]]
        false_rej = [i for i in rejected if truth[i] == k]
        cw.append(len(false_rej) / max(1, len(rejected)))
        v_total += len(false_rej)
        denom_total += max(1, len(rejected))
        r_total += len(rejected)
    out["cw_fdr"] = cw
    out["scw_fdr"] = v_total / denom_total
    out["rejection_fdp"] = v_total / max(1, r_total)
    empty = [i for i in range(m) if not sets[i]]
    out["fdr"] = (
        sum(1 for i in empty if truth[i] != outlier_label) / max(1, len(empty))
    )
    outliers = [i for i in range(m) if truth[i] == outlier_label]
    inliers = [i for i in range(m) if truth[i] != outlier_label]
    out["power"] = sum(1 for i in outliers if not sets[i]) / max(1, len(outliers))
    out["coverage"] = (
        sum(1 for i in inliers if truth[i] in sets[i]) / max(1, len(inliers))
    )
    out["flr"] = sum(1 for i in outliers if sets[i]) / m
    out["accuracy"] = (
        sum(1 for i in inliers if sets[i] == {truth[i]}) / max(1, len(inliers))
    )
    nonempty = [i for i in range(m) if sets[i]]
    out["ambiguity"] = (
        sum(len(sets[i]) for i in nonempty) / len(nonempty) if nonempty else 0.0
    )
    return out


def random_instance(rng, n_classes=None, p=None, n_k=None, m=None):
    """A small random but valid (train, test) pair with separated classes."""
    n_classes = n_classes or int(rng.integers(1, 5))
    p = p or int(rng.integers(1, 6))
    n_k = n_k or int(rng.integers(4, 26))
    m = m or int(rng.integers(1, 30))
    centers = rng.normal(scale=4.0, size=(n_classes, p))
    features = np.vstack(
        [centers[k] + rng.normal(size=(n_k, p)) for k in range(n_classes)]
    )
    labels = np.repeat(np.arange(1, n_classes + 1), n_k)
    data = LabeledDataset(features=features, labels=labels, n_classes=n_classes)
    pick = rng.integers(0, n_classes, size=m)
    test_rows = centers[pick] + rng.normal(size=(m, p)) * rng.uniform(0.5, 3.0)
    truth = rng.integers(1, n_classes + 2, size=m)
    return data, TestBatch(features=test_rows, truth=truth)


def sets_equal(sets_obj: PredictionSets, expected: list[set]) -> bool:
    return [set(s) for s in sets_obj.sets] == [set(s) for s in expected]


# ---------------------------------------------------------------------------
# fixtures


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def two_class_data():
    """Two well-separated classes in the plane, 50 rows each."""
    gen = np.random.default_rng(7)
    a = gen.normal(loc=0.0, size=(50, 2))
    b = gen.normal(loc=10.0, size=(50, 2))
    features = np.vstack([a, b])
    labels = np.repeat([1, 2], 50)
    return LabeledDataset(features=features, labels=labels, n_classes=2)
