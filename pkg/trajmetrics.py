"""
Trajectory metrics over a TrajectoryBundle: path length, per-step velocity,
K-means clustering of flattened trajectories and per-coordinate Wasserstein-1
fidelity between the data cloud and the generated cloud.

Lower Wasserstein is better; the combined score is the plain mean of the two
coordinate distances.
"""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Union

import numpy as np
from scipy.stats import wasserstein_distance

from config import rng_for
from diffusion import TrajectoryBundle
from errors import DatasetError, MetricsError

logger = logging.getLogger(__name__)

HISTOGRAM_BINS = 30


@dataclass
class DisplacementResult:
    per_sample: np.ndarray  # (S,) total path length D_i
    bin_edges: np.ndarray
    counts: np.ndarray


@dataclass
class VelocityCurve:
    values: np.ndarray  # (T,) V(t) for transitions t = 0..T-1

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class ClusterAssignment:
    labels: np.ndarray      # (S,)
    centroids: np.ndarray   # (K, 2 * (T + 1))
    k: int
    inertia: float
    n_iter: int = 0
    inertia_history: List[float] = field(default_factory=list)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)


@dataclass(frozen=True)
class FidelityScore:
    w1_x: float
    w1_y: float

    @property
    def combined(self) -> float:
        return (self.w1_x + self.w1_y) / 2.0


def _step_lengths(bundle: TrajectoryBundle) -> np.ndarray:
    """(S, T) Euclidean length of every transition"""
    if bundle.n_steps < 2:
        raise MetricsError(f"need at least 2 recorded steps, got {bundle.n_steps}")
    return np.linalg.norm(np.diff(bundle.positions, axis=1), axis=2)


def displacement(bundle: TrajectoryBundle, bins: int = HISTOGRAM_BINS) -> DisplacementResult:
    """Total path length of each trajectory over all recorded transitions"""
    per_sample = _step_lengths(bundle).sum(axis=1)
    counts, edges = np.histogram(per_sample, bins=bins)
    return DisplacementResult(per_sample=per_sample, bin_edges=edges, counts=counts)


def velocity(bundle: TrajectoryBundle) -> VelocityCurve:
    """Mean over samples of the step k -> k+1 displacement"""
    return VelocityCurve(values=_step_lengths(bundle).mean(axis=0))


def phase_ratio(curve: VelocityCurve, early: float = 0.6, late: float = 0.2) -> float:
    """Mean velocity over the first `early` share of transitions / mean over the last `late` share"""
    n = len(curve)
    n_early = max(1, int(round(early * n)))
    n_late = max(1, int(round(late * n)))
    late_mean = float(np.mean(curve.values[-n_late:]))
    if late_mean == 0.0:
        return float('inf')
    return float(np.mean(curve.values[:n_early])) / late_mean


def flatten_trajectories(bundle: TrajectoryBundle) -> np.ndarray:
    """(S, T+1, 2) -> (S, 2(T+1)) step-major: x0, y0, x1, y1, ..."""
    return bundle.positions.reshape(bundle.n_samples, -1)


def _sq_distances(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def _kmeans_plusplus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[rng.integers(0, n)]
    for i in range(1, k):
        dist_sq = _sq_distances(X, centroids[:i]).min(axis=1)
        total = dist_sq.sum()
        if total > 0.0:
            idx = rng.choice(n, p=dist_sq / total)
        else:
            idx = rng.integers(0, n)
        centroids[i] = X[idx]
    return centroids


def _lloyd(X: np.ndarray, centroids: np.ndarray, max_iter: int, tol: float):
    history = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        dist_sq = _sq_distances(X, centroids)
        labels = np.argmin(dist_sq, axis=1)  # first minimum: ties go to the lowest index
        history.append(float(dist_sq[np.arange(len(X)), labels].sum()))

        new_centroids = centroids.copy()
        for j in range(len(centroids)):
            members = labels == j
            if np.any(members):
                new_centroids[j] = X[members].mean(axis=0)
        shift = float(np.max(np.linalg.norm(new_centroids - centroids, axis=1)))
        centroids = new_centroids
        if shift < tol:
            break

    dist_sq = _sq_distances(X, centroids)
    labels = np.argmin(dist_sq, axis=1)
    inertia = float(dist_sq[np.arange(len(X)), labels].sum())
    history.append(inertia)
    return labels, centroids, inertia, n_iter, history


def cluster_trajectories(bundle: TrajectoryBundle, k: int = 5, seed: int = 0, n_init: int = 10,
                         max_iter: int = 100, tol: float = 1e-6) -> ClusterAssignment:
    """
    K-means on flattened trajectories: k-means++ seeding, Lloyd iterations until
    the largest centroid movement drops below tol. The best of n_init seeded
    restarts (lowest inertia, earliest on ties) is kept.
    """
    X = flatten_trajectories(bundle)
    if len(X) < k:
        raise MetricsError(f"need at least K={k} trajectories, got {len(X)}")
    if k < 1 or n_init < 1:
        raise MetricsError(f"K and n_init must be positive, got K={k}, n_init={n_init}")

    rng = rng_for(seed, 'kmeans')
    best: Optional[ClusterAssignment] = None
    for run in range(n_init):
        labels, centroids, inertia, n_iter, history = _lloyd(X, _kmeans_plusplus(X, k, rng), max_iter, tol)
        logger.debug(f"k-means run {run}: inertia {inertia:.6g} after {n_iter} iterations")
        if best is None or inertia < best.inertia:
            best = ClusterAssignment(labels=labels, centroids=centroids, k=k, inertia=inertia,
                                     n_iter=n_iter, inertia_history=history)
    return best


def cluster_sweep(bundle: TrajectoryBundle, ks: Iterable[int] = (2, 3, 4, 5, 6),
                  seed: int = 0, n_init: int = 10) -> Dict[int, float]:
    """Inertia per K, for judging where extra clusters stop paying off"""
    return {k: cluster_trajectories(bundle, k=k, seed=seed, n_init=n_init).inertia
            for k in ks if k <= bundle.n_samples}


def wasserstein_fidelity(original, generated) -> FidelityScore:
    """Per-coordinate empirical W1 between two clouds of arbitrary sizes"""
    a = np.asarray(getattr(original, 'points', original), dtype=float).reshape(-1, 2)
    b = np.asarray(getattr(generated, 'points', generated), dtype=float).reshape(-1, 2)
    if len(a) == 0 or len(b) == 0:
        raise MetricsError("both clouds must be non-empty")
    return FidelityScore(
        w1_x=float(wasserstein_distance(a[:, 0], b[:, 0])),
        w1_y=float(wasserstein_distance(a[:, 1], b[:, 1])),
    )


def format_value(value: float) -> str:
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return 'missing'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def write_metrics_report(path: Union[str, Path], metrics: Mapping[str, float]):
    """Flat 'metric.name = value' lines in insertion order"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        for key, value in metrics.items():
            f.write(f"{key} = {format_value(value)}\n")
    logger.info(f"Wrote {len(metrics)} metrics to {path}")


def read_metrics_report(path: Union[str, Path]) -> Dict[str, float]:
    path = Path(path)
    if not path.exists():
        raise DatasetError("metrics report not found", path=str(path))
    metrics = {}
    with open(path, 'r', encoding='utf-8') as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            if ' = ' not in line:
                raise DatasetError("expected 'key = value'", path=str(path), line=lineno)
            key, raw = line.rstrip('\n').split(' = ', 1)
            metrics[key] = float('nan') if raw == 'missing' else float(raw)
    return metrics


def write_series_csv(path: Union[str, Path], header: List[str], rows: Iterable):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for index, value in rows:
            writer.writerow([index, format_value(value)])


def read_series_csv(path: Union[str, Path]) -> np.ndarray:
    """Second column of a two-column index,value CSV"""
    path = Path(path)
    if not path.exists():
        raise DatasetError("file not found", path=str(path))
    values = []
    with open(path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.reader(f)
        next(reader, None)
        for row in reader:
            if not row:
                continue
            try:
                values.append(float('nan') if row[1] == 'missing' else float(row[1]))
            except (ValueError, IndexError):
                raise DatasetError(f"malformed row {row!r}", path=str(path), line=reader.line_num)
    return np.array(values)


def write_displacement(path: Union[str, Path], result: DisplacementResult):
    write_series_csv(path, ['sample', 'displacement'], enumerate(result.per_sample))


def write_velocity(path: Union[str, Path], curve: VelocityCurve):
    write_series_csv(path, ['step', 'velocity'], enumerate(curve.values))


def write_clusters(path: Union[str, Path], assignment: ClusterAssignment):
    write_series_csv(path, ['sample', 'label'], enumerate(int(label) for label in assignment.labels))
