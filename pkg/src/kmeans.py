"""Lloyd's k-means with seeded multi-restart initialization."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.config import DEFAULT_K, DEFAULT_MAX_ITER, DEFAULT_RESTARTS, DEFAULT_TOL
from src.dataset import Dataset
from src.errors import InvalidArgumentError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PointMatrix:
    points: np.ndarray
    feature_names: Tuple[str, ...]

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        if points.ndim != 2 or points.shape[0] < 1 or points.shape[1] < 1:
            raise InvalidArgumentError(f"points must be an n x d matrix with n, d >= 1, got {points.shape}")
        if not np.all(np.isfinite(points)):
            raise InvalidArgumentError("points contain missing or non-finite entries")
        if len(self.feature_names) != points.shape[1]:
            raise InvalidArgumentError(
                f"{len(self.feature_names)} feature names for {points.shape[1]} columns"
            )
        points.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @classmethod
    def from_dataset(cls, ds: Dataset, features: Sequence[str]) -> "PointMatrix":
        for name in features:
            if ds.schema.feature(name).kind != "numeric":
                raise InvalidArgumentError(f"cannot cluster on categorical feature {name!r}")
        points = np.array([[float(row[name]) for name in features] for row in ds.rows], dtype=float)
        return cls(points.reshape(len(ds), len(features)), tuple(features))


@dataclass(frozen=True)
class KMeansResult:
    centroids: np.ndarray
    assignment: np.ndarray
    inertia: float
    iterations: int
    restarts_used: int
    seed: int
    # per-iteration inertia of the winning restart, and of every restart
    inertia_history: Tuple[float, ...] = ()
    restart_histories: Tuple[Tuple[float, ...], ...] = ()

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    def sizes(self) -> List[int]:
        return np.bincount(self.assignment, minlength=self.k).tolist()


def _squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def assign(centroids: np.ndarray, point: Sequence[float]) -> int:
    """Index of the nearest centroid; ties go to the lowest index."""
    centroids = np.atleast_2d(np.asarray(centroids, dtype=float))
    point = np.atleast_1d(np.asarray(point, dtype=float))
    if centroids.shape[1] != point.shape[0]:
        raise InvalidArgumentError(
            f"point has {point.shape[0]} dimensions, centroids have {centroids.shape[1]}"
        )
    return int(np.argmin(_squared_distances(point[None, :], centroids)[0]))


def inertia(data: PointMatrix, centroids: np.ndarray, assignment: Sequence[int]) -> float:
    """Within-cluster sum of squared Euclidean distances."""
    centroids = np.atleast_2d(np.asarray(centroids, dtype=float))
    assignment = np.asarray(assignment, dtype=int)
    if assignment.shape[0] != data.n:
        raise InvalidArgumentError(f"assignment has {assignment.shape[0]} entries for {data.n} points")
    if assignment.size and (assignment.min() < 0 or assignment.max() >= centroids.shape[0]):
        raise InvalidArgumentError("assignment refers to a centroid that does not exist")
    diff = data.points - centroids[assignment]
    return float(np.sum(diff * diff))


def _assign_all(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return np.argmin(_squared_distances(points, centroids), axis=1)


def _repair_empty(points: np.ndarray, centroids: np.ndarray, assignment: np.ndarray) -> None:
    """Give each empty cluster the point farthest from its own centroid, as a singleton. In place."""
    k = centroids.shape[0]
    for cluster in range(k):
        sizes = np.bincount(assignment, minlength=k)
        if sizes[cluster] > 0:
            continue
        own = np.sum((points - centroids[assignment]) ** 2, axis=1)
        movable = sizes[assignment] > 1
        own[~movable] = -1.0
        donor = int(np.argmax(own))
        assignment[donor] = cluster
        centroids[cluster] = points[donor]


def _means(points: np.ndarray, assignment: np.ndarray, k: int) -> np.ndarray:
    sums = np.zeros((k, points.shape[1]))
    np.add.at(sums, assignment, points)
    counts = np.bincount(assignment, minlength=k)
    return sums / counts[:, None]


def _run_once(
    points: np.ndarray, k: int, rng: np.random.Generator, max_iter: int, tol: float
) -> Tuple[np.ndarray, np.ndarray, float, int, Tuple[float, ...]]:
    centroids = points[rng.choice(points.shape[0], size=k, replace=False)].copy()
    history: List[float] = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        assignment = _assign_all(points, centroids)
        _repair_empty(points, centroids, assignment)
        updated = _means(points, assignment, k)
        diff = points - updated[assignment]
        history.append(float(np.sum(diff * diff)))
        shift = float(np.max(np.linalg.norm(updated - centroids, axis=1)))
        centroids = updated
        if shift <= tol:
            break

    # final assignment is always nearest-centroid for the returned centroids
    assignment = _assign_all(points, centroids)
    _repair_empty(points, centroids, assignment)
    diff = points - centroids[assignment]
    return centroids, assignment, float(np.sum(diff * diff)), iterations, tuple(history)


def fit(
    data: PointMatrix,
    k: int = DEFAULT_K,
    seed: int = 0,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    restarts: int = DEFAULT_RESTARTS,
) -> KMeansResult:
    """Best-of-``restarts`` Lloyd clustering; restart r draws from a generator seeded by (seed, r)."""
    if k <= 0:
        raise InvalidArgumentError(f"k must be positive, got {k}")
    if k > data.n:
        raise InvalidArgumentError(f"k={k} exceeds the number of points n={data.n}")
    if max_iter < 1:
        raise InvalidArgumentError(f"max_iter must be >= 1, got {max_iter}")
    if tol < 0:
        raise InvalidArgumentError(f"tol must be >= 0, got {tol}")
    if restarts < 1:
        raise InvalidArgumentError(f"restarts must be >= 1, got {restarts}")
    if seed < 0:
        raise InvalidArgumentError(f"seed must be non-negative, got {seed}")

    best: Optional[Tuple[np.ndarray, np.ndarray, float, int, Tuple[float, ...]]] = None
    histories = []
    for restart in range(restarts):
        rng = np.random.default_rng([seed, restart])
        run = _run_once(data.points, k, rng, max_iter, tol)
        histories.append(run[4])
        # strict < keeps the lowest restart index on ties
        if best is None or run[2] < best[2]:
            best = run
        logger.debug(f"restart {restart}: inertia={run[2]:.6f} after {run[3]} iterations")

    centroids, assignment, best_inertia, iterations, history = best
    centroids.setflags(write=False)
    assignment.setflags(write=False)
    logger.info(f"k-means k={k}: inertia={best_inertia:.6f}, {iterations} iterations, {restarts} restarts")
    return KMeansResult(
        centroids=centroids,
        assignment=assignment,
        inertia=best_inertia,
        iterations=iterations,
        restarts_used=restarts,
        seed=seed,
        inertia_history=history,
        restart_histories=tuple(histories),
    )


# --------------------------- Dataset-level clustering -------------------------
@dataclass(frozen=True)
class Standardizer:
    """Per-column mean and scale used to standardize points before clustering."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, points: np.ndarray) -> "Standardizer":
        mean = points.mean(axis=0)
        scale = points.std(axis=0)
        # constant columns are only centred
        scale = np.where(scale > 0, scale, 1.0)
        return cls(mean, scale)

    def transform(self, points: np.ndarray) -> np.ndarray:
        return (points - self.mean) / self.scale

    def inverse(self, points: np.ndarray) -> np.ndarray:
        return points * self.scale + self.mean


@dataclass(frozen=True)
class ClusterSummary:
    features: Tuple[str, ...]
    labels: Tuple[str, ...]
    sizes: Tuple[int, ...]
    centroids: Tuple[Tuple[float, ...], ...]  # original units
    inertia: float  # in standardized units
    iterations: int
    restarts: int
    seed: int
    standardization_mean: Tuple[float, ...]
    standardization_scale: Tuple[float, ...]

    def as_dict(self) -> dict:
        return {
            "features": list(self.features),
            "clusters": [
                {"label": label, "size": size, "centroid": dict(zip(self.features, centroid))}
                for label, size, centroid in zip(self.labels, self.sizes, self.centroids)
            ],
            "inertia": self.inertia,
            "iterations": self.iterations,
            "restarts": self.restarts,
            "seed": self.seed,
            "standardization": {
                "mean": dict(zip(self.features, self.standardization_mean)),
                "scale": dict(zip(self.features, self.standardization_scale)),
            },
        }


def cluster_labels(k: int) -> Tuple[str, ...]:
    return tuple(f"C{i + 1}" for i in range(k))


def cluster_dataset(
    ds: Dataset,
    features: Sequence[str],
    k: int = DEFAULT_K,
    seed: int = 0,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    restarts: int = DEFAULT_RESTARTS,
    label: Optional[str] = None,
) -> Tuple[Dataset, ClusterSummary]:
    """Standardize the chosen features, cluster, and append labels C1..Ck to every row."""
    if not features:
        raise InvalidArgumentError("clustering needs at least one feature")
    label = label or ds.schema.label
    data = PointMatrix.from_dataset(ds, features)
    scaler = Standardizer.fit(data.points)
    result = fit(PointMatrix(scaler.transform(data.points), data.feature_names), k, seed, max_iter, tol, restarts)

    names = cluster_labels(k)
    rows = [row.with_values(**{label: names[c]}) for row, c in zip(ds.rows, result.assignment)]
    centroids = scaler.inverse(result.centroids)
    summary = ClusterSummary(
        features=tuple(features),
        labels=names,
        sizes=tuple(result.sizes()),
        centroids=tuple(tuple(float(v) for v in c) for c in centroids),
        inertia=result.inertia,
        iterations=result.iterations,
        restarts=result.restarts_used,
        seed=seed,
        standardization_mean=tuple(float(v) for v in scaler.mean),
        standardization_scale=tuple(float(v) for v in scaler.scale),
    )
    return Dataset(ds.schema.with_label(label), tuple(rows)), summary
