"""
Drift fields on a 2D grid.

forward:  data-driven posterior mean of q(x_{t-1} | x_t, x_0), averaged over the
          data points with the Gaussian likelihood weights of x_0 given x_t
backward: the learned reverse mean from the trained denoiser

Both store the drift vector mu - x_t and its norm at each node. Nodes are
row-major: node (row j, column i) sits at (xs[i], ys[j]).
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.special import softmax

from diffusion import NoiseSchedule, TrajectoryBundle, reverse_mean
from errors import DatasetError, DriftFieldError
from model import DenoiserModel, predict_noise

logger = logging.getLogger(__name__)

DEGENERATE_NORM = 1e-12


@dataclass(frozen=True)
class Grid2D:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int = 20
    ny: int = 20

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise DriftFieldError(f"grid needs at least 2x2 nodes, got {self.nx}x{self.ny}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise DriftFieldError(f"grid bounds out of order: {self}")

    @classmethod
    def around(cls, points: np.ndarray, pad: float = 0.5, nx: int = 20, ny: int = 20) -> 'Grid2D':
        """Bounding box of points expanded by pad on each side"""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        lo, hi = points.min(axis=0), points.max(axis=0)
        return cls(x_min=float(lo[0] - pad), x_max=float(hi[0] + pad),
                   y_min=float(lo[1] - pad), y_max=float(hi[1] + pad), nx=nx, ny=ny)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)

    @property
    def nodes(self) -> np.ndarray:
        """(ny * nx, 2) node coordinates, row-major"""
        gx, gy = np.meshgrid(self.xs, self.ys)
        return np.column_stack([gx.ravel(), gy.ravel()])


@dataclass
class DriftField:
    grid: Grid2D
    t: int
    vectors: np.ndarray     # (ny, nx, 2)
    magnitudes: np.ndarray  # (ny, nx)
    kind: str               # 'forward' | 'backward'

    @classmethod
    def from_node_vectors(cls, grid: Grid2D, t: int, vectors: np.ndarray, kind: str) -> 'DriftField':
        vectors = np.asarray(vectors, dtype=float).reshape(grid.ny, grid.nx, 2)
        return cls(grid=grid, t=t, vectors=vectors, magnitudes=np.linalg.norm(vectors, axis=2), kind=kind)


@dataclass
class AlignmentCurve:
    timesteps: np.ndarray  # (T,) t = 1..T
    cs: np.ndarray         # NaN where every sample was excluded
    included: np.ndarray
    excluded: np.ndarray

    def peak(self):
        """(t, value) of the highest defined CS(t)"""
        if np.all(np.isnan(self.cs)):
            return None, float('nan')
        index = int(np.nanargmax(self.cs))
        return int(self.timesteps[index]), float(self.cs[index])


def _check_timestep(t: int, schedule: NoiseSchedule):
    if not 1 <= t <= schedule.T:
        raise DriftFieldError(f"timestep {t} outside 1..{schedule.T}")


def posterior_weights(nodes: np.ndarray, data: np.ndarray, t: int, schedule: NoiseSchedule) -> np.ndarray:
    """(N, M) normalized weights of each data point given each node"""
    _check_timestep(t, schedule)
    a_bar = schedule.alpha_bar[t]
    diff = nodes[:, None, :] - np.sqrt(a_bar) * data[None, :, :]
    sq_dist = (diff ** 2).sum(axis=2)
    if a_bar == 1.0:
        # zero-variance limit: all weight on the nearest data point, lowest index on ties
        weights = np.zeros_like(sq_dist)
        weights[np.arange(len(nodes)), np.argmin(sq_dist, axis=1)] = 1.0
        return weights
    logits = -sq_dist / (2.0 * (1.0 - a_bar))
    return softmax(logits, axis=1)


def forward_drift(grid: Grid2D, t: int, data, schedule: NoiseSchedule) -> DriftField:
    data = np.asarray(getattr(data, 'points', data), dtype=float).reshape(-1, 2)
    if len(data) == 0:
        raise DriftFieldError("forward drift needs at least one data point")
    _check_timestep(t, schedule)

    nodes = grid.nodes
    a = schedule.step_alpha(t)
    a_bar, a_bar_prev = schedule.alpha_bar[t], schedule.alpha_bar[t - 1]
    if a_bar == 1.0:
        # no noise up to t: the posterior mean is x0 itself
        coef_xt, coef_x0 = 0.0, 1.0
    else:
        coef_xt = np.sqrt(a) * (1.0 - a_bar_prev) / (1.0 - a_bar)
        coef_x0 = np.sqrt(a_bar_prev) * (1.0 - a) / (1.0 - a_bar)

    # posterior mean is affine in x0, so the weighted mean only needs E_w[x0]
    expected_x0 = posterior_weights(nodes, data, t, schedule) @ data
    mu = coef_xt * nodes + coef_x0 * expected_x0
    return DriftField.from_node_vectors(grid, t, mu - nodes, 'forward')


def backward_drift(grid: Grid2D, t: int, model: DenoiserModel, schedule: NoiseSchedule) -> DriftField:
    _check_timestep(t, schedule)
    nodes = grid.nodes
    eps = predict_noise(model, nodes, t, schedule.T)
    mu = reverse_mean(nodes, eps, t, schedule)
    return DriftField.from_node_vectors(grid, t, mu - nodes, 'backward')


def backward_fields(grid: Grid2D, model: DenoiserModel, schedule: NoiseSchedule) -> Dict[int, DriftField]:
    """Backward drift at every timestep 1..T"""
    return {t: backward_drift(grid, t, model, schedule) for t in range(1, schedule.T + 1)}


def interpolate_field(field: DriftField, p: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of drift vectors; points outside the grid are clamped to it"""
    grid = field.grid
    p = np.asarray(p, dtype=float)
    points = p.reshape(-1, 2)
    clamped = np.column_stack([
        np.clip(points[:, 1], grid.y_min, grid.y_max),
        np.clip(points[:, 0], grid.x_min, grid.x_max),
    ])
    interpolator = RegularGridInterpolator((grid.ys, grid.xs), field.vectors, method='linear')
    values = interpolator(clamped)
    return values.reshape(p.shape)


def drift_alignment(bundle: TrajectoryBundle, fields: Mapping[int, DriftField]) -> AlignmentCurve:
    """
    Mean cosine similarity between the interpolated drift at each sample's state
    x_t and the direction from that state to the sample's own final state.
    Zero-length vectors are excluded and counted, never scored as 0.
    """
    T = bundle.T
    missing = [t for t in range(1, T + 1) if t not in fields]
    if missing:
        raise DriftFieldError(f"no drift field for timesteps {missing}")

    final = bundle.final
    timesteps = np.arange(1, T + 1)
    cs = np.full(T, np.nan)
    included = np.zeros(T, dtype=int)
    excluded = np.zeros(T, dtype=int)

    for index, t in enumerate(timesteps):
        state = bundle.state_at(int(t))
        a = interpolate_field(fields[int(t)], state)
        b = final - state
        norm_a = np.linalg.norm(a, axis=1)
        norm_b = np.linalg.norm(b, axis=1)
        keep = (norm_a >= DEGENERATE_NORM) & (norm_b >= DEGENERATE_NORM)
        included[index] = int(keep.sum())
        excluded[index] = len(keep) - included[index]
        if included[index] == 0:
            logger.warning(f"Alignment at t={t}: every sample excluded")
            continue
        cosine = (a[keep] * b[keep]).sum(axis=1) / (norm_a[keep] * norm_b[keep])
        cs[index] = float(np.clip(cosine, -1.0, 1.0).mean())

    return AlignmentCurve(timesteps=timesteps, cs=cs, included=included, excluded=excluded)


def write_fields(path: Union[str, Path], fields: List[DriftField]):
    """CSV t,node_x,node_y,vec_x,vec_y,magnitude"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['t', 'node_x', 'node_y', 'vec_x', 'vec_y', 'magnitude'])
        for field in fields:
            nodes = field.grid.nodes
            vectors = field.vectors.reshape(-1, 2)
            magnitudes = field.magnitudes.ravel()
            for (x, y), (vx, vy), m in zip(nodes, vectors, magnitudes):
                writer.writerow([field.t] + [f"{v:.17g}" for v in (x, y, vx, vy, m)])


def read_fields(path: Union[str, Path], kind: str) -> Dict[int, DriftField]:
    path = Path(path)
    if not path.exists():
        raise DatasetError("field dump not found", path=str(path))
    by_t: Dict[int, list] = {}
    with open(path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.reader(f)
        next(reader, None)
        for row in reader:
            if not row:
                continue
            try:
                by_t.setdefault(int(row[0]), []).append([float(v) for v in row[1:6]])
            except (ValueError, IndexError):
                raise DatasetError(f"malformed row {row!r}", path=str(path), line=reader.line_num)

    fields = {}
    for t, rows in by_t.items():
        table = np.array(rows)
        xs, ys = np.unique(table[:, 0]), np.unique(table[:, 1])
        if len(xs) * len(ys) != len(table):
            raise DatasetError(f"field at t={t} is not a full grid", path=str(path))
        grid = Grid2D(x_min=float(xs[0]), x_max=float(xs[-1]), y_min=float(ys[0]), y_max=float(ys[-1]),
                      nx=len(xs), ny=len(ys))
        fields[t] = DriftField(grid=grid, t=t, vectors=table[:, 2:4].reshape(len(ys), len(xs), 2),
                               magnitudes=table[:, 4].reshape(len(ys), len(xs)), kind=kind)
    return fields


def write_alignment(path: Union[str, Path], curve: AlignmentCurve):
    """CSV t,cs,included,excluded; cs is empty where undefined"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['t', 'cs', 'included', 'excluded'])
        for t, cs, inc, exc in zip(curve.timesteps, curve.cs, curve.included, curve.excluded):
            writer.writerow([int(t), '' if np.isnan(cs) else f"{cs:.17g}", int(inc), int(exc)])


def read_alignment(path: Union[str, Path]) -> AlignmentCurve:
    path = Path(path)
    if not path.exists():
        raise DatasetError("alignment file not found", path=str(path))
    rows = []
    with open(path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.reader(f)
        next(reader, None)
        for row in reader:
            if not row:
                continue
            try:
                rows.append((int(row[0]), float(row[1]) if row[1] else np.nan, int(row[2]), int(row[3])))
            except (ValueError, IndexError):
                raise DatasetError(f"malformed row {row!r}", path=str(path), line=reader.line_num)
    if not rows:
        raise DatasetError("alignment file has no rows", path=str(path))
    t, cs, inc, exc = zip(*rows)
    return AlignmentCurve(timesteps=np.array(t), cs=np.array(cs, dtype=float),
                          included=np.array(inc), excluded=np.array(exc))
