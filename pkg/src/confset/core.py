"""Core data containers and structural validation.

Everything downstream (scoring, conformal p-values, metrics) operates on the
types defined here. Containers are frozen dataclasses holding read-only numpy
arrays: once constructed they are safe to share across worker processes.

Label conventions
-----------------
Training labels are integers 1..K. Test truth labels, when present, live in
1..K+1 where K+1 marks a true outlier (a point from none of the K training
classes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DataError",
    "DegenerateVarianceError",
    "LabeledDataset",
    "TestBatch",
    "ClassSummary",
    "OracleParams",
    "PValueMatrix",
    "PredictionSets",
    "DeviationBound",
    "ValidationReport",
    "validate_dataset",
]


class DataError(ValueError):
    """Structural problem with input data (bad labels, non-finite features, shape)."""


class DegenerateVarianceError(ValueError):
    """A class has a zero-variance feature column, so scores are undefined."""

    def __init__(self, class_id: int, column: int):
        self.class_id = class_id
        self.column = column
        super().__init__(
            f"class {class_id} has zero variance in feature column {column}; "
            f"drop the column or enable a variance floor"
        )


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


def _check_features(features: np.ndarray, name: str = "features") -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise DataError(f"{name} must be 2-D (n, p), got shape {features.shape}")
    if features.shape[0] < 1 or features.shape[1] < 1:
        raise DataError(f"{name} must be non-empty, got shape {features.shape}")
    if not np.all(np.isfinite(features)):
        i, j = np.argwhere(~np.isfinite(features))[0]
        raise DataError(f"non-finite value in {name} at row {i}, column {j}")
    return features


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Training data: feature matrix plus integer class labels 1..K.

    Parameters
    ----------
    features : ndarray of shape (n, p)
        Finite float features.
    labels : ndarray of shape (n,)
        Integer labels in 1..n_classes. Every class must appear at least
        3 times (class summaries need a usable sample variance).
    n_classes : int, optional
        K. Defaults to ``labels.max()``.
    """

    features: np.ndarray
    labels: np.ndarray
    n_classes: int = 0

    def __post_init__(self):
        features = _check_features(self.features)
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
            raise DataError(
                f"labels must be 1-D with one entry per row, got shape {labels.shape} "
                f"for {features.shape[0]} rows"
            )
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            as_int = labels.astype(np.int64)
            if not np.array_equal(as_int, labels):
                raise DataError("labels must be integers")
            labels = as_int
        labels = labels.astype(np.int64)
        k = int(self.n_classes) if self.n_classes else int(labels.max())
        if k < 1:
            raise DataError(f"n_classes must be >= 1, got {k}")
        if labels.min() < 1 or labels.max() > k:
            bad = labels[(labels < 1) | (labels > k)][0]
            raise DataError(f"label {bad} outside 1..{k}")
        counts = np.bincount(labels, minlength=k + 1)[1:]
        if counts.min() < 3:
            short = int(np.argmin(counts)) + 1
            raise DataError(
                f"class {short} has {counts[short - 1]} rows; every class needs >= 3"
            )
        object.__setattr__(self, "features", _readonly(features))
        object.__setattr__(self, "labels", _readonly(labels))
        object.__setattr__(self, "n_classes", k)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def class_counts(self) -> np.ndarray:
        """Rows per class, shape (n_classes,)."""
        return np.bincount(self.labels, minlength=self.n_classes + 1)[1:]

    def class_rows(self, class_id: int) -> np.ndarray:
        """Feature rows belonging to one class."""
        if not 1 <= class_id <= self.n_classes:
            raise DataError(f"class_id {class_id} outside 1..{self.n_classes}")
        return self.features[self.labels == class_id]


@dataclass(frozen=True, eq=False)
class TestBatch:
    """Unlabeled points to classify, with optional ground truth for evaluation.

    ``truth`` entries are in 1..K+1; K+1 marks a true outlier. The upper
    bound is checked where K is known (metrics, prediction).
    """

    features: np.ndarray
    truth: np.ndarray | None = None

    def __post_init__(self):
        features = _check_features(self.features)
        truth = self.truth
        if truth is not None:
            truth = np.asarray(truth).astype(np.int64)
            if truth.ndim != 1 or truth.shape[0] != features.shape[0]:
                raise DataError(
                    f"truth must be 1-D with one entry per row, got shape {truth.shape}"
                )
            if truth.size and truth.min() < 1:
                raise DataError(f"truth label {truth.min()} below 1")
            truth = _readonly(truth)
        object.__setattr__(self, "features", _readonly(features))
        object.__setattr__(self, "truth", truth)

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True, eq=False)
class ClassSummary:
    """Per-class fitted moments: sample mean and unbiased diagonal variance."""

    class_id: int
    mean: np.ndarray
    variance: np.ndarray
    count: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        variance = np.asarray(self.variance, dtype=np.float64)
        if mean.ndim != 1 or variance.shape != mean.shape:
            raise DataError(
                f"mean and variance must be matching 1-D vectors, got {mean.shape} "
                f"and {variance.shape}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(variance))):
            raise DataError("non-finite class summary")
        if np.any(variance <= 0):
            raise DataError("class variance entries must be positive")
        if self.count < 3:
            raise DataError(f"count must be >= 3, got {self.count}")
        object.__setattr__(self, "mean", _readonly(mean))
        object.__setattr__(self, "variance", _readonly(variance))
        object.__setattr__(self, "count", int(self.count))


@dataclass(frozen=True, eq=False)
class OracleParams:
    """True per-class means and diagonal variances, rows indexed by class 1..K."""

    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64)
        variances = np.asarray(self.variances, dtype=np.float64)
        if means.ndim != 2 or variances.shape != means.shape:
            raise DataError(
                f"means and variances must be matching (K, p) arrays, got "
                f"{means.shape} and {variances.shape}"
            )
        if not (np.all(np.isfinite(means)) and np.all(np.isfinite(variances))):
            raise DataError("non-finite oracle parameters")
        if np.any(variances <= 0):
            raise DataError("oracle variances must be positive")
        object.__setattr__(self, "means", _readonly(means))
        object.__setattr__(self, "variances", _readonly(variances))

    @property
    def n_classes(self) -> int:
        return self.means.shape[0]

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    def class_params(self, class_id: int) -> tuple[np.ndarray, np.ndarray]:
        if not 1 <= class_id <= self.n_classes:
            raise DataError(f"class_id {class_id} outside 1..{self.n_classes}")
        return self.means[class_id - 1], self.variances[class_id - 1]


@dataclass(frozen=True, eq=False)
class PValueMatrix:
    """Conformal p-values for m test points against K classes.

    ``raw[i, k-1]`` is the rank p-value of test point i under class k; each
    entry lies on the grid {1/(n_k+1), ..., 1}. ``adjusted`` holds the
    column-wise BH adjustment (equal to ``raw`` when m == 1), and
    ``thresholds[k-1]`` the per-class acceptance cutoff: class k enters a
    prediction set iff adjusted > threshold.
    """

    raw: np.ndarray
    adjusted: np.ndarray
    thresholds: np.ndarray
    alpha: float

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=np.float64)
        adjusted = np.asarray(self.adjusted, dtype=np.float64)
        thresholds = np.asarray(self.thresholds, dtype=np.float64)
        if raw.ndim != 2 or adjusted.shape != raw.shape:
            raise DataError(
                f"raw and adjusted must be matching (m, K) arrays, got {raw.shape} "
                f"and {adjusted.shape}"
            )
        if thresholds.shape != (raw.shape[1],):
            raise DataError(
                f"thresholds must have one entry per class, got {thresholds.shape}"
            )
        for name, a in (("raw", raw), ("adjusted", adjusted)):
            if a.size and (np.any(a <= 0) or np.any(a > 1)):
                raise DataError(f"{name} p-values must lie in (0, 1]")
        if not 0 < self.alpha < 1:
            raise DataError(f"alpha must be in (0, 1), got {self.alpha}")
        object.__setattr__(self, "raw", _readonly(raw))
        object.__setattr__(self, "adjusted", _readonly(adjusted))
        object.__setattr__(self, "thresholds", _readonly(thresholds))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def m(self) -> int:
        return self.raw.shape[0]

    @property
    def n_classes(self) -> int:
        return self.raw.shape[1]


@dataclass(frozen=True, eq=False)
class PredictionSets:
    """Accepted class labels per test point, stored as an (m, K) boolean mask.

    An all-False row is an empty prediction set: the point is declared an
    outlier. Rows with more than one True are ambiguous.
    """

    member: np.ndarray

    def __post_init__(self):
        member = np.asarray(self.member)
        if member.ndim != 2:
            raise DataError(f"member must be 2-D (m, K), got shape {member.shape}")
        if member.dtype != np.bool_:
            if not np.array_equal(member, member.astype(bool)):
                raise DataError("member must be boolean")
            member = member.astype(bool)
        object.__setattr__(self, "member", _readonly(member))

    @classmethod
    def from_sets(cls, sets, n_classes: int) -> "PredictionSets":
        """Build from an iterable of label collections (labels in 1..n_classes)."""
        sets = list(sets)
        member = np.zeros((len(sets), n_classes), dtype=bool)
        for i, labels in enumerate(sets):
            for k in labels:
                if not 1 <= k <= n_classes:
                    raise DataError(f"set label {k} outside 1..{n_classes}")
                member[i, k - 1] = True
        return cls(member)

    @property
    def m(self) -> int:
        return self.member.shape[0]

    @property
    def n_classes(self) -> int:
        return self.member.shape[1]

    @property
    def sizes(self) -> np.ndarray:
        return self.member.sum(axis=1)

    @property
    def sets(self) -> list[frozenset[int]]:
        """Per-point accepted labels as frozensets."""
        return [frozenset(np.flatnonzero(row) + 1) for row in self.member]


@dataclass(frozen=True)
class DeviationBound:
    """High-probability bound on |empirical - oracle| conformal p-values.

    For a class with n training points the deviation exceeds ``bound(n)``
    with probability at most ``2 * n**-a``. Requires a >= 2; the bound decays
    like sqrt(log n / n) and is vacuous (> 1) for small n.
    """

    a: float = 2.0

    def __post_init__(self):
        if not self.a >= 2:
            raise DataError(f"a must be >= 2, got {self.a}")

    @property
    def scale(self) -> float:
        """Multiplier sqrt(a) + 2a/3 in front of the rate."""
        return math.sqrt(self.a) + 2.0 * self.a / 3.0

    def bound(self, n: int) -> float:
        if n < 3:
            raise DataError(f"n must be >= 3, got {n}")
        return 4.0 * self.scale * math.sqrt(math.log(n) / n)

    def failure_probability(self, n: int) -> float:
        return 2.0 * float(n) ** (-self.a)


@dataclass(frozen=True)
class ValidationReport:
    """Diagnostics from :func:`validate_dataset`; structural errors raise instead."""

    class_counts: np.ndarray
    min_class_variance: np.ndarray
    max_abs_feature: float
    zero_variance: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return len(self.zero_variance) == 0


def validate_dataset(data: LabeledDataset) -> ValidationReport:
    """Compute per-class diagnostics and flag zero-variance feature columns.

    Structural problems (labels outside 1..K, non-finite features, classes
    with fewer than 3 rows) are fatal and raise ``DataError`` at
    ``LabeledDataset`` construction, before this function can run. What
    remains here is the soft check scoring cares about: a flagged
    (class, column) pair means the fitted variance is exactly zero and
    ``fit_class_summary`` will refuse it unless given a variance floor.
    """
    k = data.n_classes
    min_var = np.empty(k)
    flags = []
    for class_id in range(1, k + 1):
        rows = data.class_rows(class_id)
        var = rows.var(axis=0, ddof=1)
        min_var[class_id - 1] = var.min()
        for col in np.flatnonzero(var == 0.0):
            flags.append((class_id, int(col)))
    return ValidationReport(
        class_counts=_readonly(data.class_counts),
        min_class_variance=_readonly(min_var),
        max_abs_feature=float(np.abs(data.features).max()),
        zero_variance=tuple(flags),
    )
