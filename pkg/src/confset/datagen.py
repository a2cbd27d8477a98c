"""Synthetic benchmark generator: Gaussian location-scale mixture plus discrete noise.

Each observation is

    X = sqrt(scale) * (Z + shift) + W

where Z is a standard Gaussian vector with AR(1) feature correlation
corr(Z_j, Z_l) = rho**|j-l|, and each coordinate of W is drawn uniformly from
a fixed pool of p scalar atoms scattered over [-3, 3]. The atom pool is the
"frozen" part of the design: it is created once from ``atom_seed`` and shared
by every class, replicate, and test set, so the discrete noise distribution
is identical across an entire experiment. Per-run randomness (Z, atom picks)
comes from ``run_seed``.

Inlier classes share scale=1 and differ by shift; outliers have shift 0 and a
larger scale, so they match the inlier means but are overdispersed.

Equicorrelated noise deliberately does not appear here: a shared Gaussian
factor at rho=0.8 dominates every distance-to-mean score and no mean/variance
method separates anything; AR(1) keeps the total cross-correlation bounded
in p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .core import DataError, LabeledDataset, OracleParams, TestBatch

__all__ = [
    "ComponentSpec",
    "ScenarioConfig",
    "one_class_config",
    "multi_class_config",
    "make_atoms",
    "sample_points",
    "apportion_test_counts",
    "generate_training",
    "generate_test_batch",
    "generate",
    "oracle_params",
    "with_run_seed",
    "DEFAULT_ATOM_SEED",
]

# Atom pool seed shared by all built-in experiments.
DEFAULT_ATOM_SEED = 99

ONE_CLASS_OUTLIER_SCALE = 2.5
MULTI_CLASS_SHIFTS = (0.0, 1.3, -1.3, 2.5)
MULTI_CLASS_OUTLIER_SCALE = 3.5


class ComponentSpec(NamedTuple):
    """One mixture component: X = sqrt(scale) * (Z + shift) + W."""

    shift: float
    scale: float = 1.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of one synthetic experiment cell.

    ``class_specs`` lists the K inlier components in class order;
    ``outlier_spec`` is the contaminating component (truth label K+1).
    ``inlier_ratio`` is inliers-per-outlier in the test batch (3.0 = 3:1).
    """

    scenario: str
    p: int
    n_k: int
    m: int = 1000
    rho: float = 0.0
    alpha: float = 0.05
    inlier_ratio: float = 3.0
    class_specs: tuple[ComponentSpec, ...] = (ComponentSpec(0.0, 1.0),)
    outlier_spec: ComponentSpec = ComponentSpec(0.0, ONE_CLASS_OUTLIER_SCALE)
    atom_seed: int = DEFAULT_ATOM_SEED
    run_seed: int = 0

    def __post_init__(self):
        if self.scenario not in ("one_class", "multi_class"):
            raise DataError(f"unknown scenario {self.scenario!r}")
        if self.p < 1:
            raise DataError(f"p must be >= 1, got {self.p}")
        if self.n_k < 3:
            raise DataError(f"n_k must be >= 3, got {self.n_k}")
        if self.m < 1:
            raise DataError(f"m must be >= 1, got {self.m}")
        if not 0.0 <= self.rho < 1.0:
            raise DataError(f"rho must be in [0, 1), got {self.rho}")
        if not 0.0 < self.alpha < 1.0:
            raise DataError(f"alpha must be in (0, 1), got {self.alpha}")
        if not self.inlier_ratio > 0:
            raise DataError(f"inlier_ratio must be positive, got {self.inlier_ratio}")
        specs = tuple(ComponentSpec(*s) for s in self.class_specs)
        if not specs:
            raise DataError("class_specs must not be empty")
        if self.scenario == "one_class" and len(specs) != 1:
            raise DataError("one_class scenario takes exactly one class spec")
        for s in specs + (ComponentSpec(*self.outlier_spec),):
            if not s.scale >= 1.0:
                raise DataError(f"component scale must be >= 1, got {s.scale}")
        object.__setattr__(self, "class_specs", specs)
        object.__setattr__(self, "outlier_spec", ComponentSpec(*self.outlier_spec))

    @property
    def n_classes(self) -> int:
        return len(self.class_specs)


def one_class_config(
    p: int = 500,
    n_k: int = 500,
    rho: float = 0.0,
    **overrides,
) -> ScenarioConfig:
    """Single inlier class at the origin; outliers overdispersed by 2.5."""
    return ScenarioConfig(
        scenario="one_class",
        p=p,
        n_k=n_k,
        rho=rho,
        class_specs=(ComponentSpec(0.0, 1.0),),
        outlier_spec=ComponentSpec(0.0, ONE_CLASS_OUTLIER_SCALE),
        **overrides,
    )


def multi_class_config(
    p: int = 500,
    n_k: int = 500,
    rho: float = 0.0,
    **overrides,
) -> ScenarioConfig:
    """Four shifted inlier classes; outliers at the origin, overdispersed by 3.5."""
    return ScenarioConfig(
        scenario="multi_class",
        p=p,
        n_k=n_k,
        rho=rho,
        class_specs=tuple(ComponentSpec(s, 1.0) for s in MULTI_CLASS_SHIFTS),
        outlier_spec=ComponentSpec(0.0, MULTI_CLASS_OUTLIER_SCALE),
        **overrides,
    )


def make_atoms(atom_seed: int, p: int) -> np.ndarray:
    """The fixed pool of p scalar atoms, uniform over [-3, 3]."""
    if p < 1:
        raise DataError(f"p must be >= 1, got {p}")
    return np.random.default_rng(atom_seed).uniform(-3.0, 3.0, size=p)


def _ar1(rng: np.random.Generator, n: int, p: int, rho: float) -> np.ndarray:
    g = rng.standard_normal(size=(n, p))
    if rho == 0.0 or p == 1:
        return g
    z = np.empty_like(g)
    z[:, 0] = g[:, 0]
    innov = math.sqrt(1.0 - rho * rho)
    for j in range(1, p):
        z[:, j] = rho * z[:, j - 1] + innov * g[:, j]
    return z


def sample_points(
    spec: ComponentSpec,
    rho: float,
    atoms: np.ndarray,
    rng: np.random.Generator,
    n: int,
) -> np.ndarray:
    """Draw n observations of one mixture component. Shape (n, p).

    Consumes the generator in a fixed order (Gaussian block, then atom
    indices), so a seeded generator reproduces draws bit for bit.
    """
    spec = ComponentSpec(*spec)
    p = atoms.shape[0]
    z = _ar1(rng, n, p, rho)
    w = atoms[rng.integers(0, p, size=(n, p))]
    return math.sqrt(spec.scale) * (z + spec.shift) + w


def apportion_test_counts(m: int, inlier_ratio: float, n_classes: int) -> tuple[list[int], int]:
    """Split m test slots into per-class inlier counts plus an outlier count.

    The inlier total is round(m * ratio / (ratio + 1)) (half up), spread over
    classes by largest remainder; equal quotas tie, and ties go to the lower
    class index. The outliers take the rest.
    """
    if m < 1:
        raise DataError(f"m must be >= 1, got {m}")
    n_inliers = int(math.floor(m * inlier_ratio / (inlier_ratio + 1.0) + 0.5))
    base, extra = divmod(n_inliers, n_classes)
    counts = [base + (1 if k < extra else 0) for k in range(n_classes)]
    return counts, m - n_inliers


def generate_training(
    config: ScenarioConfig,
    rng: np.random.Generator,
    atoms: np.ndarray | None = None,
) -> LabeledDataset:
    """n_k rows per inlier class, classes in order."""
    if atoms is None:
        atoms = make_atoms(config.atom_seed, config.p)
    blocks = [
        sample_points(spec, config.rho, atoms, rng, config.n_k)
        for spec in config.class_specs
    ]
    labels = np.repeat(np.arange(1, config.n_classes + 1), config.n_k)
    return LabeledDataset(
        features=np.vstack(blocks), labels=labels, n_classes=config.n_classes
    )


def generate_test_batch(
    config: ScenarioConfig,
    rng: np.random.Generator,
    atoms: np.ndarray | None = None,
) -> TestBatch:
    """One labeled test batch of m rows: balanced inliers then outliers."""
    if atoms is None:
        atoms = make_atoms(config.atom_seed, config.p)
    counts, n_out = apportion_test_counts(config.m, config.inlier_ratio, config.n_classes)
    blocks = [
        sample_points(spec, config.rho, atoms, rng, c)
        for spec, c in zip(config.class_specs, counts)
        if c > 0
    ]
    truth = [
        np.full(c, k + 1, dtype=np.int64) for k, c in enumerate(counts) if c > 0
    ]
    if n_out > 0:
        blocks.append(sample_points(config.outlier_spec, config.rho, atoms, rng, n_out))
        truth.append(np.full(n_out, config.n_classes + 1, dtype=np.int64))
    return TestBatch(features=np.vstack(blocks), truth=np.concatenate(truth))


def generate(config: ScenarioConfig) -> tuple[LabeledDataset, TestBatch]:
    """Training set plus one test batch from ``run_seed``. Deterministic."""
    atoms = make_atoms(config.atom_seed, config.p)
    rng = np.random.default_rng(config.run_seed)
    train = generate_training(config, rng, atoms)
    test = generate_test_batch(config, rng, atoms)
    return train, test


def oracle_params(config: ScenarioConfig) -> OracleParams:
    """True per-class means and diagonal variances implied by the generator.

    Coordinate j of class k has mean sqrt(scale)*shift + mean(atoms) and
    variance scale + var(atoms): the Gaussian part contributes scale, the
    atom pick contributes the population variance of the pool.
    """
    atoms = make_atoms(config.atom_seed, config.p)
    w_mean = atoms.mean()
    w_var = atoms.var()
    k, p = config.n_classes, config.p
    means = np.empty((k, p))
    variances = np.empty((k, p))
    for i, spec in enumerate(config.class_specs):
        means[i] = math.sqrt(spec.scale) * spec.shift + w_mean
        variances[i] = spec.scale + w_var
    return OracleParams(means=means, variances=variances)


def with_run_seed(config: ScenarioConfig, run_seed: int) -> ScenarioConfig:
    """Same cell, different replicate stream."""
    return replace(config, run_seed=int(run_seed))
