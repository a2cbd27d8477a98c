"""File formats: CSV datasets, experiment configs, result tables, JSON snapshots.

Numeric round-trips are exact: floats are written as their shortest
repr (which reparses to the identical float64), so save/load of any
container reproduces it bit for bit.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
import yaml

from .core import (
    ClassSummary,
    DataError,
    DeviationBound,
    LabeledDataset,
    OracleParams,
    PredictionSets,
    PValueMatrix,
    TestBatch,
)
from .datagen import DEFAULT_ATOM_SEED, ComponentSpec, ScenarioConfig
from .metrics import MetricsReport

__all__ = [
    "load_csv",
    "read_batch_csv",
    "write_dataset_csv",
    "write_batch_csv",
    "split_train_test",
    "ExperimentConfig",
    "load_config",
    "save_config",
    "write_results",
    "read_results",
    "render_results",
    "write_pvalues_csv",
    "write_thresholds_csv",
    "write_sets_csv",
    "read_sets_csv",
    "save_json",
    "load_json",
    "to_jsonable",
    "from_jsonable",
]


def _fmt(x: float) -> str:
    return repr(float(x))


def _open_read(path, **kwargs):
    try:
        return open(path, **kwargs)
    except OSError as e:
        raise DataError(f"cannot read {path}: {e.strerror or e}") from None


def _open_write(path, **kwargs):
    try:
        return open(path, "w", **kwargs)
    except OSError as e:
        raise DataError(f"cannot write {path}: {e.strerror or e}") from None


def _read_table(path, delimiter: str) -> tuple[list[str], list[list[str]]]:
    with _open_read(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            dup = next(h for h in header if header.count(h) > 1)
            raise DataError(f"{path}: duplicate column name {dup!r}")
        rows = []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: line {i} has {len(row)} cells, header has {len(header)}"
                )
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return header, rows


def _parse_features(path, rows, header, feature_cols) -> np.ndarray:
    out = np.empty((len(rows), len(feature_cols)))
    for i, row in enumerate(rows):
        for j, c in enumerate(feature_cols):
            cell = row[c].strip()
            try:
                out[i, j] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric cell {cell!r} at line {i + 2}, "
                    f"column {header[c]!r}"
                ) from None
    return out


def load_csv(
    path,
    label_column: str,
    outlier_label: str | None = None,
    delimiter: str = ",",
):
    """Read a labeled CSV into training containers.

    The label column is named in the header; every other column is a float
    feature, kept in file order. Distinct labels map to 1..K by first
    appearance. With ``outlier_label`` given, rows carrying that label are
    excluded from the map and split off into a test batch with truth K+1
    (they can never be trained on).

    Returns
    -------
    (LabeledDataset, dict)
        Without ``outlier_label``: the dataset and the label -> id map.
    (LabeledDataset, TestBatch | None, dict)
        With ``outlier_label``: inlier dataset, batch of outlier rows
        (None when no row carries the label), and the map.
    """
    header, rows = _read_table(path, delimiter)
    if label_column not in header:
        raise DataError(f"{path}: label column {label_column!r} not in header {header}")
    label_idx = header.index(label_column)
    feature_cols = [c for c in range(len(header)) if c != label_idx]
    if not feature_cols:
        raise DataError(f"{path}: no feature columns besides the label")

    label_map: dict[str, int] = {}
    labels = []
    outlier_rows = []
    inlier_rows = []
    for row in rows:
        raw = row[label_idx].strip()
        if outlier_label is not None and raw == outlier_label:
            outlier_rows.append(row)
            continue
        if raw not in label_map:
            label_map[raw] = len(label_map) + 1
        labels.append(label_map[raw])
        inlier_rows.append(row)
    if not inlier_rows:
        raise DataError(f"{path}: every row carries the outlier label")

    features = _parse_features(path, inlier_rows, header, feature_cols)
    data = LabeledDataset(
        features=features,
        labels=np.asarray(labels),
        n_classes=len(label_map),
    )
    if outlier_label is None:
        return data, label_map
    batch = None
    if outlier_rows:
        out_features = _parse_features(path, outlier_rows, header, feature_cols)
        truth = np.full(len(outlier_rows), data.n_classes + 1)
        batch = TestBatch(features=out_features, truth=truth)
    return data, batch, label_map


def read_batch_csv(
    path,
    truth_column: str | None = None,
    label_map: dict[str, int] | None = None,
    outlier_label: str | None = None,
    delimiter: str = ",",
) -> TestBatch:
    """Read a test CSV. Without ``truth_column`` the batch is unlabeled.

    Truth cells are mapped through ``label_map`` when given (labels missing
    from the map, or equal to ``outlier_label``, become K+1); otherwise they
    must already be integers, as written by :func:`write_batch_csv`.
    """
    header, rows = _read_table(path, delimiter)
    truth = None
    if truth_column is None:
        feature_cols = list(range(len(header)))
    else:
        if truth_column not in header:
            raise DataError(
                f"{path}: truth column {truth_column!r} not in header {header}"
            )
        t_idx = header.index(truth_column)
        feature_cols = [c for c in range(len(header)) if c != t_idx]
        cells = [row[t_idx].strip() for row in rows]
        if label_map is not None:
            k = max(label_map.values())
            truth = [
                k + 1
                if (cell == outlier_label or cell not in label_map)
                else label_map[cell]
                for cell in cells
            ]
        else:
            try:
                truth = [int(cell) for cell in cells]
            except ValueError as e:
                raise DataError(
                    f"{path}: truth labels are not integers and no label_map "
                    f"was given ({e})"
                ) from None
    if not feature_cols:
        raise DataError(f"{path}: no feature columns besides the truth")
    features = _parse_features(path, rows, header, feature_cols)
    return TestBatch(features=features, truth=truth)


def write_dataset_csv(path, data: LabeledDataset) -> None:
    """Columns x1..xp,label; floats written exactly."""
    with _open_write(path, newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(data.n_features)] + ["label"])
        for row, lab in zip(data.features, data.labels):
            writer.writerow([_fmt(v) for v in row] + [int(lab)])


def write_batch_csv(path, batch: TestBatch) -> None:
    """Columns x1..xp[,truth]; floats written exactly."""
    with _open_write(path, newline="") as fh:
        writer = csv.writer(fh)
        head = [f"x{j + 1}" for j in range(batch.n_features)]
        if batch.truth is not None:
            head.append("truth")
        writer.writerow(head)
        for i, row in enumerate(batch.features):
            cells = [_fmt(v) for v in row]
            if batch.truth is not None:
                cells.append(int(batch.truth[i]))
            writer.writerow(cells)


def split_train_test(
    data: LabeledDataset,
    fraction: float = 0.7,
    seed: int = 0,
) -> tuple[LabeledDataset, TestBatch]:
    """Stratified split: round(fraction * n_k) rows of each class train.

    The test batch keeps class labels as truth (it contains no outliers;
    merge outlier rows separately). Errors out if any class would train on
    fewer than 3 rows or the test side would be empty.
    """
    if not 0.0 < fraction < 1.0:
        raise DataError(f"fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    train_idx = []
    test_idx = []
    for class_id in range(1, data.n_classes + 1):
        idx = np.flatnonzero(data.labels == class_id)
        n_train = int(math.floor(fraction * idx.size + 0.5))
        if n_train < 3:
            raise DataError(
                f"class {class_id} would train on {n_train} rows; needs >= 3"
            )
        perm = rng.permutation(idx)
        train_idx.append(perm[:n_train])
        test_idx.append(perm[n_train:])
    train_idx = np.concatenate(train_idx)
    test_idx = np.concatenate(test_idx)
    if test_idx.size == 0:
        raise DataError("split leaves no test rows; lower the fraction")
    train = LabeledDataset(
        features=data.features[train_idx],
        labels=data.labels[train_idx],
        n_classes=data.n_classes,
    )
    test = TestBatch(
        features=data.features[test_idx], truth=data.labels[test_idx]
    )
    return train, test


# ---------------------------------------------------------------------------
# experiment configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment description; the grid is the cross product p x n_k x rho.

    For ``scenario: csv`` the grid is ignored and replicates are repeated
    stratified train/test re-splits of the file.
    """

    scenario: str
    p: tuple[int, ...] = (500,)
    n_k: tuple[int, ...] = (500,)
    rho: tuple[float, ...] = (0.0,)
    m: int = 1000
    alpha: float = 0.05
    inlier_ratio: float = 3.0
    replicates: int = 10
    test_sets: int = 10
    mode: str = "empirical"
    master_seed: int = 0
    atom_seed: int = DEFAULT_ATOM_SEED
    out_dir: str = "results"
    csv_path: str | None = None
    label_column: str | None = None
    outlier_label: str | None = None
    train_fraction: float = 0.7

    def __post_init__(self):
        if self.scenario not in ("one_class", "multi_class", "csv"):
            raise DataError(f"unknown scenario {self.scenario!r}")
        if self.mode not in ("empirical", "oracle", "both"):
            raise DataError(f"unknown mode {self.mode!r}")
        for name in ("p", "n_k", "rho"):
            value = getattr(self, name)
            if np.isscalar(value):
                value = (value,)
            value = tuple(value)
            if not value:
                raise DataError(f"{name} grid must not be empty")
            object.__setattr__(self, name, value)
        if self.replicates < 1 or self.test_sets < 1:
            raise DataError("replicates and test_sets must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise DataError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.scenario == "csv":
            if not self.csv_path or not self.label_column:
                raise DataError("csv scenario needs csv_path and label_column")
            if self.mode != "empirical":
                raise DataError("csv data has no oracle parameters; use mode: empirical")
            if not 0.0 < self.train_fraction < 1.0:
                raise DataError(
                    f"train_fraction must be in (0, 1), got {self.train_fraction}"
                )

    def cells(self) -> list[tuple[int, int, float]]:
        return [(p, n, r) for p in self.p for n in self.n_k for r in self.rho]


_CONFIG_LIST_KEYS = {"p", "n_k", "rho"}


def save_config(config: ExperimentConfig, path) -> None:
    doc = {}
    for f in fields(config):
        value = getattr(config, f.name)
        if value is None:
            continue
        doc[f.name] = list(value) if f.name in _CONFIG_LIST_KEYS else value
    with _open_write(path) as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)


def load_config(path) -> ExperimentConfig:
    with _open_read(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise DataError(f"{path}: config must be a flat key: value mapping")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(doc) - known
    if unknown:
        raise DataError(f"{path}: unknown config keys {sorted(unknown)}")
    if "scenario" not in doc:
        raise DataError(f"{path}: config needs a scenario")
    return ExperimentConfig(**doc)


# ---------------------------------------------------------------------------
# result tables


def _aggregate(reports: list[MetricsReport]) -> list[tuple[str, float, float]]:
    if not reports:
        raise DataError("no reports to aggregate")
    names = [name for name, _ in reports[0].rows()]
    table = np.asarray([[v for _, v in r.rows()] for r in reports], dtype=np.float64)
    if table.shape[1] != len(names):
        raise DataError("reports have inconsistent class counts")
    means = table.mean(axis=0)
    stds = table.std(axis=0, ddof=1) if len(reports) > 1 else np.zeros(len(names))
    return list(zip(names, means, stds))


def render_results(
    reports: list[MetricsReport], time_s: float | None = None
) -> str:
    """mean(std) text table, three decimals."""
    rows = _aggregate(reports)
    width = max(len(n) for n, _, _ in rows) + 2
    lines = [f"{'metric':<{width}}mean(std)  [{len(reports)} runs]"]
    for name, mean, std in rows:
        lines.append(f"{name:<{width}}{mean:.3f}({std:.3f})")
    if time_s is not None:
        lines.append(f"{'time_s':<{width}}{time_s:.3f}")
    return "\n".join(lines) + "\n"


def write_results(
    reports: list[MetricsReport],
    path,
    time_s: float | None = None,
) -> str:
    """Write metric,mean,std CSV plus a rendered text table next to it.

    The CSV keeps full float precision; the sibling ``.txt`` holds the
    three-decimal mean(std) rendering, which is also returned.
    """
    path = Path(path)
    rows = _aggregate(reports)
    with _open_write(path, newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "mean", "std"])
        for name, mean, std in rows:
            writer.writerow([name, _fmt(mean), _fmt(std)])
        if time_s is not None:
            writer.writerow(["time_s", _fmt(time_s), _fmt(0.0)])
    text = render_results(reports, time_s)
    path.with_suffix(".txt").write_text(text)
    return text


def read_results(path) -> dict[str, tuple[float, float]]:
    """Parse a results CSV back into {metric: (mean, std)}."""
    out = {}
    with _open_read(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["metric", "mean", "std"]:
            raise DataError(f"{path}: not a results table")
        for row in reader:
            out[row[0]] = (float(row[1]), float(row[2]))
    return out


# ---------------------------------------------------------------------------
# prediction outputs


def write_pvalues_csv(path, pvals: PValueMatrix) -> None:
    k = pvals.n_classes
    with _open_write(path, newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["index"]
            + [f"raw_{c + 1}" for c in range(k)]
            + [f"adjusted_{c + 1}" for c in range(k)]
        )
        for i in range(pvals.m):
            writer.writerow(
                [i]
                + [_fmt(v) for v in pvals.raw[i]]
                + [_fmt(v) for v in pvals.adjusted[i]]
            )


def write_thresholds_csv(path, pvals: PValueMatrix) -> None:
    with _open_write(path, newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "threshold", "alpha"])
        for c, t in enumerate(pvals.thresholds, start=1):
            writer.writerow([c, _fmt(t), _fmt(pvals.alpha)])


def write_sets_csv(path, sets: PredictionSets) -> None:
    """Columns index,size,labels with labels ';'-joined, empty for outliers."""
    with _open_write(path, newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "size", "labels"])
        for i, labels in enumerate(sets.sets):
            writer.writerow([i, len(labels), ";".join(str(k) for k in sorted(labels))])


def read_sets_csv(path, n_classes: int) -> PredictionSets:
    collected = []
    with _open_read(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["index", "size", "labels"]:
            raise DataError(f"{path}: not a prediction-sets table")
        for row in reader:
            cell = row[2].strip()
            collected.append([int(t) for t in cell.split(";")] if cell else [])
    return PredictionSets.from_sets(collected, n_classes)


# ---------------------------------------------------------------------------
# JSON snapshots of containers


def _spec_pair(s: ComponentSpec) -> list[float]:
    return [float(s.shift), float(s.scale)]


_TO = {
    LabeledDataset: lambda o: {
        "features": o.features.tolist(),
        "labels": o.labels.tolist(),
        "n_classes": o.n_classes,
    },
    TestBatch: lambda o: {
        "features": o.features.tolist(),
        "truth": None if o.truth is None else o.truth.tolist(),
    },
    ClassSummary: lambda o: {
        "class_id": o.class_id,
        "mean": o.mean.tolist(),
        "variance": o.variance.tolist(),
        "count": o.count,
    },
    OracleParams: lambda o: {
        "means": o.means.tolist(),
        "variances": o.variances.tolist(),
    },
    PValueMatrix: lambda o: {
        "raw": o.raw.tolist(),
        "adjusted": o.adjusted.tolist(),
        "thresholds": o.thresholds.tolist(),
        "alpha": o.alpha,
    },
    PredictionSets: lambda o: {"member": o.member.tolist()},
    DeviationBound: lambda o: {"a": o.a},
    ScenarioConfig: lambda o: {
        "scenario": o.scenario,
        "p": o.p,
        "n_k": o.n_k,
        "m": o.m,
        "rho": o.rho,
        "alpha": o.alpha,
        "inlier_ratio": o.inlier_ratio,
        "class_specs": [_spec_pair(s) for s in o.class_specs],
        "outlier_spec": _spec_pair(o.outlier_spec),
        "atom_seed": o.atom_seed,
        "run_seed": o.run_seed,
    },
    MetricsReport: lambda o: {
        "cw_fdr": list(o.cw_fdr),
        "scw_fdr": o.scw_fdr,
        "fdr": o.fdr,
        "power": o.power,
        "coverage": o.coverage,
        "flr": o.flr,
        "accuracy": o.accuracy,
        "ambiguity": o.ambiguity,
    },
}

_FROM = {
    "LabeledDataset": lambda d: LabeledDataset(
        features=np.asarray(d["features"], dtype=np.float64),
        labels=np.asarray(d["labels"], dtype=np.int64),
        n_classes=d["n_classes"],
    ),
    "TestBatch": lambda d: TestBatch(
        features=np.asarray(d["features"], dtype=np.float64),
        truth=None if d["truth"] is None else np.asarray(d["truth"], dtype=np.int64),
    ),
    "ClassSummary": lambda d: ClassSummary(
        class_id=d["class_id"],
        mean=np.asarray(d["mean"], dtype=np.float64),
        variance=np.asarray(d["variance"], dtype=np.float64),
        count=d["count"],
    ),
    "OracleParams": lambda d: OracleParams(
        means=np.asarray(d["means"], dtype=np.float64),
        variances=np.asarray(d["variances"], dtype=np.float64),
    ),
    "PValueMatrix": lambda d: PValueMatrix(
        raw=np.asarray(d["raw"], dtype=np.float64),
        adjusted=np.asarray(d["adjusted"], dtype=np.float64),
        thresholds=np.asarray(d["thresholds"], dtype=np.float64),
        alpha=d["alpha"],
    ),
    "PredictionSets": lambda d: PredictionSets(
        member=np.asarray(d["member"], dtype=bool)
    ),
    "DeviationBound": lambda d: DeviationBound(a=d["a"]),
    "ScenarioConfig": lambda d: ScenarioConfig(
        scenario=d["scenario"],
        p=d["p"],
        n_k=d["n_k"],
        m=d["m"],
        rho=d["rho"],
        alpha=d["alpha"],
        inlier_ratio=d["inlier_ratio"],
        class_specs=tuple(ComponentSpec(*s) for s in d["class_specs"]),
        outlier_spec=ComponentSpec(*d["outlier_spec"]),
        atom_seed=d["atom_seed"],
        run_seed=d["run_seed"],
    ),
    "MetricsReport": lambda d: MetricsReport(
        cw_fdr=tuple(d["cw_fdr"]),
        scw_fdr=d["scw_fdr"],
        fdr=d["fdr"],
        power=d["power"],
        coverage=d["coverage"],
        flr=d["flr"],
        accuracy=d["accuracy"],
        ambiguity=d["ambiguity"],
    ),
}


def to_jsonable(obj) -> dict:
    """Tagged plain-data view of any container, safe for ``json.dump``."""
    encode = _TO.get(type(obj))
    if encode is None:
        raise DataError(f"cannot serialize {type(obj).__name__}")
    return {"kind": type(obj).__name__, **encode(obj)}


def from_jsonable(doc: dict):
    """Inverse of :func:`to_jsonable`; reproduces the container bit-exactly."""
    if not isinstance(doc, dict) or "kind" not in doc:
        raise DataError("not a tagged container document")
    decode = _FROM.get(doc["kind"])
    if decode is None:
        raise DataError(f"unknown container kind {doc['kind']!r}")
    return decode(doc)


def save_json(obj, path) -> None:
    with _open_write(path) as fh:
        json.dump(to_jsonable(obj), fh)


def load_json(path):
    with _open_read(path) as fh:
        return from_jsonable(json.load(fh))
