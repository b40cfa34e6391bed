"""
Point-cloud datasets: CSV loading, zero-mean/unit-variance normalization,
replication and seeded train/test splitting.
"""

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from errors import DatasetError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RawPointCloud:
    """Points in original data units, file order"""
    points: np.ndarray  # (N, 2)
    name: str

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class NormStats:
    mean_x: float
    mean_y: float
    std_x: float
    std_y: float

    def denormalize(self, points: np.ndarray) -> np.ndarray:
        """Map normalized points back to original data units"""
        points = np.asarray(points, dtype=float)
        return points * np.array([self.std_x, self.std_y]) + np.array([self.mean_x, self.mean_y])


@dataclass(frozen=True)
class PointCloud:
    """Points in normalized units together with the stats that produced them"""
    points: np.ndarray  # (N, 2)
    stats: NormStats

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class DataSplit:
    train: PointCloud
    test: PointCloud
    split_fraction: float
    seed: int
    train_indices: Optional[np.ndarray] = None
    test_indices: Optional[np.ndarray] = None


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def load_csv(path: Union[str, Path]) -> RawPointCloud:
    """Load a two-column x,y CSV; a non-numeric first row is treated as a header"""
    path = Path(path)
    if not path.exists():
        raise DatasetError("file not found", path=str(path))

    points = []
    with open(path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.reader(f)
        first_data_row = True
        for row in reader:
            lineno = reader.line_num
            tokens = [token.strip() for token in row]
            if not any(tokens):
                continue
            if first_data_row:
                first_data_row = False
                if not all(_is_number(token) for token in tokens):
                    logger.debug(f"Skipping header row in {path}: {tokens}")
                    continue
            if len(tokens) != 2:
                raise DatasetError(f"expected 2 columns, found {len(tokens)}", path=str(path), line=lineno)
            try:
                x, y = float(tokens[0]), float(tokens[1])
            except ValueError:
                raise DatasetError(f"cannot parse {row!r} as two numbers", path=str(path), line=lineno)
            if not (math.isfinite(x) and math.isfinite(y)):
                raise DatasetError("non-finite coordinate", path=str(path), line=lineno)
            points.append((x, y))

    if not points:
        raise DatasetError("file contains no data rows", path=str(path))

    logger.info(f"Loaded {len(points)} points from {path}")
    return RawPointCloud(points=np.array(points, dtype=float), name=path.stem)


def write_csv(path: Union[str, Path], points: np.ndarray, header: Sequence[str] = ('x', 'y')):
    """Write points with 17 significant digits so load_csv round-trips them exactly"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        if header:
            writer.writerow(header)
        for x, y in np.asarray(points, dtype=float):
            writer.writerow([f"{x:.17g}", f"{y:.17g}"])


def normalize(cloud: Union[RawPointCloud, PointCloud]) -> Tuple[PointCloud, NormStats]:
    """Zero mean, unit population standard deviation per coordinate"""
    points = np.asarray(cloud.points, dtype=float)
    mean = points.mean(axis=0)
    std = points.std(axis=0)  # population std, ddof=0
    if np.any(std <= 0.0):
        axis = 'x' if std[0] <= 0.0 else 'y'
        raise DatasetError(f"degenerate cloud: zero variance in {axis}")

    stats = NormStats(mean_x=float(mean[0]), mean_y=float(mean[1]),
                      std_x=float(std[0]), std_y=float(std[1]))
    normalized = (points - mean) / std
    return PointCloud(points=normalized, stats=stats), stats


def replicate_and_split(cloud: PointCloud, copies: int = 6, train_fraction: float = 0.9,
                        seed: int = 0, rng: Optional[np.random.Generator] = None) -> DataSplit:
    """
    Concatenate the cloud `copies` times, shuffle indices with a seeded PRNG and
    split at floor(train_fraction * size). Both subsets keep shuffle order.
    """
    if copies < 1:
        raise DatasetError(f"copies must be >= 1, got {copies}")
    if not 0.0 < train_fraction < 1.0:
        raise DatasetError(f"train_fraction must lie in (0, 1), got {train_fraction}")

    replicated = np.concatenate([cloud.points] * copies, axis=0)
    size = len(replicated)
    rng = rng if rng is not None else np.random.default_rng(seed)
    order = rng.permutation(size)
    n_train = int(math.floor(train_fraction * size))

    train_idx, test_idx = order[:n_train], order[n_train:]
    logger.info(f"Replicated {len(cloud)} points x{copies} -> {size}; "
                f"train {len(train_idx)}, test {len(test_idx)}")
    return DataSplit(
        train=PointCloud(points=replicated[train_idx], stats=cloud.stats),
        test=PointCloud(points=replicated[test_idx], stats=cloud.stats),
        split_fraction=train_fraction,
        seed=seed,
        train_indices=train_idx,
        test_indices=test_idx,
    )


def load_dataset(path: Union[str, Path]) -> Tuple[RawPointCloud, PointCloud]:
    """load_csv followed by normalize"""
    raw = load_csv(path)
    normalized, _ = normalize(raw)
    return raw, normalized

