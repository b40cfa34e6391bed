"""
DDPM machinery: linear alpha schedule, forward noising, training loop and
reverse-process sampling with trajectory recording.

Index conventions:
- schedule.alpha[s] for s = 0..T-1 is the per-step coefficient; the
  transition from state t-1 to state t uses alpha[t-1]
- schedule.alpha_bar[t] for t = 0..T, alpha_bar[0] = 1
- TrajectoryBundle.positions[:, k] is the reverse-process state after k
  denoising steps, so k = 0 is pure noise (x_T) and k = T is the output (x_0)
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Tuple, Union

import numpy as np

from config import rng_for
from dataset import DataSplit
from errors import DatasetError, ScheduleError, TrainingError
from model import AdamState, DenoiserModel, adam_step, loss_and_gradients, predict_noise

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NoiseSchedule:
    T: int
    alpha: np.ndarray      # (T,)
    beta: np.ndarray       # (T,)
    alpha_bar: np.ndarray  # (T+1,)
    sigma: np.ndarray      # (T,)
    alpha_min: float
    alpha_max: float

    def step_alpha(self, t: int) -> float:
        """alpha used by the transition into state t (1 <= t <= T)"""
        return float(self.alpha[t - 1])

    def step_sigma(self, t: int) -> float:
        return float(self.sigma[t - 1])


@dataclass
class TrainConfig:
    epochs: int = 2000
    batch_size: int = 32
    learning_rate: float = 4e-4
    clip_norm: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size <= 0 or self.learning_rate <= 0 or self.clip_norm <= 0:
            raise TrainingError(f"invalid training config: {self}")


@dataclass
class TrajectoryBundle:
    positions: np.ndarray  # (S, T+1, 2)
    T: int
    alpha_min: float
    config_tag: str = ''

    @property
    def n_samples(self) -> int:
        return self.positions.shape[0]

    @property
    def n_steps(self) -> int:
        return self.positions.shape[1]

    @property
    def final(self) -> np.ndarray:
        return self.positions[:, -1, :]

    def state_at(self, t: int) -> np.ndarray:
        """States x_t (the input to denoising step t); t = T is the initial noise"""
        return self.positions[:, self.T - t, :]


@dataclass
class LossCurve:
    epoch_loss: np.ndarray     # (epochs,)
    timestep_mse: np.ndarray   # (T,), entry t-1 is the held-out MSE at timestep t


def build_schedule(T: int = 50, alpha_min: float = 0.95, alpha_max: float = 0.9999) -> NoiseSchedule:
    """alpha decreases linearly from alpha_max to alpha_min over t = 0..T-1"""
    if T < 1:
        raise ScheduleError(f"T must be >= 1, got {T}")
    if not 0.0 < alpha_min <= alpha_max <= 1.0:
        raise ScheduleError(f"need 0 < alpha_min <= alpha_max <= 1, got alpha_min={alpha_min}, alpha_max={alpha_max}")

    if T == 1:
        alpha = np.array([alpha_max], dtype=float)
    else:
        steps = np.arange(T, dtype=float)
        alpha = alpha_max + (alpha_min - alpha_max) * steps / (T - 1)
    beta = 1.0 - alpha
    alpha_bar = np.concatenate([[1.0], np.cumprod(alpha)])
    sigma = np.sqrt(beta)

    logger.debug(f"Schedule T={T}, alpha {alpha_max}->{alpha_min}, alpha_bar_T={alpha_bar[-1]:.6f}")
    return NoiseSchedule(T=T, alpha=alpha, beta=beta, alpha_bar=alpha_bar, sigma=sigma,
                         alpha_min=alpha_min, alpha_max=alpha_max)


def forward_noise(x0: np.ndarray, t: int, schedule: NoiseSchedule,
                  rng: Optional[np.random.Generator] = None,
                  eps: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Closed-form q(x_t | x_0): x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps"""
    if not 0 <= t <= schedule.T:
        raise ScheduleError(f"timestep {t} outside 0..{schedule.T}")
    x0 = np.asarray(x0, dtype=float)
    if eps is None:
        if rng is None:
            raise ValueError("forward_noise needs an rng when eps is not given")
        eps = rng.standard_normal(x0.shape)
    eps = np.asarray(eps, dtype=float)
    a_bar = schedule.alpha_bar[t]
    x_t = np.sqrt(a_bar) * x0 + np.sqrt(1.0 - a_bar) * eps
    return x_t, eps


def forward_noise_iterative(x0: np.ndarray, t: int, schedule: NoiseSchedule,
                            rng: np.random.Generator) -> np.ndarray:
    """t sequential single steps x_s = sqrt(alpha) x_{s-1} + sqrt(beta) eps_s"""
    if not 0 <= t <= schedule.T:
        raise ScheduleError(f"timestep {t} outside 0..{schedule.T}")
    x = np.asarray(x0, dtype=float).copy()
    for s in range(1, t + 1):
        x = np.sqrt(schedule.step_alpha(s)) * x + np.sqrt(1.0 - schedule.step_alpha(s)) * rng.standard_normal(x.shape)
    return x


def reverse_mean(x_t: np.ndarray, eps_pred: np.ndarray, t: int, schedule: NoiseSchedule) -> np.ndarray:
    """Deterministic part of one reverse step: (1/sqrt(a))(x_t - (1-a)/sqrt(1-abar_t) eps)"""
    a = schedule.step_alpha(t)
    one_minus_bar = 1.0 - schedule.alpha_bar[t]
    # beta == 0 makes the noise coefficient vanish; avoid 0/0 when alpha_bar_t == 1
    coef = 0.0 if (1.0 - a) == 0.0 else (1.0 - a) / np.sqrt(one_minus_bar)
    return (x_t - coef * eps_pred) / np.sqrt(a)


def _evaluate_timestep_mse(model: DenoiserModel, points: np.ndarray, schedule: NoiseSchedule,
                           rng: np.random.Generator) -> np.ndarray:
    mse = np.empty(schedule.T)
    for t in range(1, schedule.T + 1):
        x_t, eps = forward_noise(points, t, schedule, rng)
        pred = predict_noise(model, x_t, t, schedule.T)
        mse[t - 1] = float(np.mean((pred - eps) ** 2))
    return mse


def train(model: DenoiserModel, split: DataSplit, schedule: NoiseSchedule, config: TrainConfig,
          progress: Optional[Callable[[int, float], None]] = None) -> Tuple[DenoiserModel, LossCurve]:
    """
    Minibatch training on the noise-prediction MSE. One timestep t ~ U{1..T} is
    drawn per minibatch; the final partial batch of each epoch is kept. The
    input model is not modified; a trained copy is returned.
    """
    train_points = split.train.points
    n = len(train_points)
    if n == 0:
        raise TrainingError("training set is empty")
    if n < config.batch_size:
        logger.warning(f"Training set ({n}) is smaller than batch size ({config.batch_size})")

    model = model.copy()
    state = AdamState.for_model(model, learning_rate=config.learning_rate, clip_norm=config.clip_norm)
    rng = rng_for(config.seed, 'train')
    epoch_loss = np.empty(config.epochs)

    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            x0 = train_points[order[start:start + config.batch_size]]
            t = int(rng.integers(1, schedule.T + 1))
            x_t, eps = forward_noise(x0, t, schedule, rng)
            loss, grads = loss_and_gradients(model, x_t, t, eps, schedule.T)
            adam_step(model, grads, state)
            total += loss * len(x0)
        epoch_loss[epoch] = total / n
        logger.debug(f"epoch {epoch + 1}/{config.epochs} loss {epoch_loss[epoch]:.6f}")
        if progress is not None:
            progress(epoch + 1, float(epoch_loss[epoch]))

    if config.epochs:
        logger.info(f"Trained {config.epochs} epochs ({state.step} steps): "
                    f"loss {epoch_loss[0]:.4f} -> {epoch_loss[-1]:.4f}")

    test_points = split.test.points
    if len(test_points) == 0:
        logger.warning("Test set is empty; skipping per-timestep evaluation")
        timestep_mse = np.empty(0)
    else:
        timestep_mse = _evaluate_timestep_mse(model, test_points, schedule, rng_for(config.seed, 'eval'))

    return model, LossCurve(epoch_loss=epoch_loss, timestep_mse=timestep_mse)


def sample(model: DenoiserModel, schedule: NoiseSchedule, n_samples: int,
           rng: np.random.Generator, record: bool = True) -> TrajectoryBundle:
    """
    Reverse process from x_T ~ N(0, I). Draw order on rng: the (n, 2) initial
    noise, then one (n, 2) block per step for t = T..2; the final step adds no
    noise. With record=False only the initial and final states are kept.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    T = schedule.T
    x = rng.standard_normal((n_samples, 2))
    states = [x]

    for t in range(T, 0, -1):
        eps_pred = predict_noise(model, x, t, T)
        x = reverse_mean(x, eps_pred, t, schedule)
        if t > 1:
            x = x + schedule.step_sigma(t) * rng.standard_normal((n_samples, 2))
        if record or t == 1:
            states.append(x)

    positions = np.stack(states, axis=1)
    if not np.all(np.isfinite(positions)):
        logger.warning("Non-finite values in sampled trajectories")
    return TrajectoryBundle(positions=positions, T=T, alpha_min=schedule.alpha_min,
                            config_tag=model.embed.tag)


def write_trajectories(path: Union[str, Path], bundle: TrajectoryBundle):
    """CSV sample,step,x,y; step 0 is the initial noise, step T the output"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['sample', 'step', 'x', 'y'])
        for i, trajectory in enumerate(bundle.positions):
            for step, (x, y) in enumerate(trajectory):
                writer.writerow([i, step, f"{x:.17g}", f"{y:.17g}"])
    logger.info(f"Wrote {bundle.n_samples} trajectories x {bundle.n_steps} steps to {path}")


def read_trajectories(path: Union[str, Path], alpha_min: float = float('nan'),
                      config_tag: str = '') -> TrajectoryBundle:
    path = Path(path)
    if not path.exists():
        raise DatasetError("trajectory file not found", path=str(path))

    rows = []
    with open(path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ['sample', 'step', 'x', 'y']:
            raise DatasetError("expected header 'sample,step,x,y'", path=str(path), line=1)
        for row in reader:
            if not row:
                continue
            try:
                rows.append((int(row[0]), int(row[1]), float(row[2]), float(row[3])))
            except (ValueError, IndexError):
                raise DatasetError(f"malformed row {row!r}", path=str(path), line=reader.line_num)
            if rows[-1][0] < 0 or rows[-1][1] < 0:
                raise DatasetError(f"negative sample or step index in row {row!r}", path=str(path),
                                   line=reader.line_num)

    if not rows:
        raise DatasetError("trajectory file has no rows", path=str(path))
    n_samples = max(r[0] for r in rows) + 1
    n_steps = max(r[1] for r in rows) + 1
    if len(rows) != n_samples * n_steps:
        raise DatasetError(f"expected {n_samples} x {n_steps} rows, found {len(rows)}", path=str(path))

    positions = np.full((n_samples, n_steps, 2), np.nan)
    for i, step, x, y in rows:
        positions[i, step] = (x, y)
    if np.isnan(positions).any():
        raise DatasetError("missing (sample, step) rows", path=str(path))
    return TrajectoryBundle(positions=positions, T=n_steps - 1, alpha_min=alpha_min, config_tag=config_tag)


def write_loss_curve(directory: Union[str, Path], curve: LossCurve):
    """loss_epoch.csv (epoch,loss) and mse_per_timestep.csv (t,mse)"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / 'loss_epoch.csv', 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['epoch', 'loss'])
        for epoch, loss in enumerate(curve.epoch_loss, start=1):
            writer.writerow([epoch, f"{loss:.17g}"])
    with open(directory / 'mse_per_timestep.csv', 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['t', 'mse'])
        for t, mse in enumerate(curve.timestep_mse, start=1):
            writer.writerow([t, f"{mse:.17g}"])


def read_timestep_mse(path: Union[str, Path]) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise DatasetError("per-timestep MSE file not found", path=str(path))
    values = []
    with open(path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.reader(f)
        next(reader, None)
        for row in reader:
            if row:
                try:
                    values.append(float(row[1]))
                except (ValueError, IndexError):
                    raise DatasetError(f"malformed row {row!r}", path=str(path), line=reader.line_num)
    return np.array(values)

