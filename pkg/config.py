"""
Configuration for the InJecteD pipeline.

Three layers:
- InjectedConfig: process-wide settings from the environment / .env file
- RunConfig: one pipeline run (dataset, model configuration, hyperparameters)
- rng_for: seed stream splitting so each stage reproduces on its own
"""

import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from dotenv import dotenv_values, load_dotenv

from errors import ConfigError

# Load environment variables
load_dotenv()

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class InjectedConfig:
    def __init__(self):
        self.OUTPUT_DIR = os.getenv('INJECTED_OUTPUT_DIR', 'runs')
        self.DATA_DIR = os.getenv('INJECTED_DATA_DIR', 'data')
        self.LOG_LEVEL = os.getenv('INJECTED_LOG_LEVEL', 'INFO').upper()
        self.LOG_FILE = os.getenv('INJECTED_LOG_FILE', 'injected.log')
        self.SEED = int(os.getenv('INJECTED_SEED', 42))
        self.DEBUG_MODE = os.getenv('INJECTED_DEBUG', 'false').lower() == 'true'


config = InjectedConfig()


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None):
    """Configure root logging with a file handler and a stderr stream handler"""
    level_name = level or ('DEBUG' if config.DEBUG_MODE else config.LOG_LEVEL)
    log_level = getattr(logging, level_name.upper(), None)
    if not isinstance(log_level, int):
        raise ConfigError(f"Unknown log level: {level_name}")

    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    log_file = config.LOG_FILE if log_file is None else log_file
    if log_file:
        handlers.insert(0, logging.FileHandler(log_file))

    logging.basicConfig(level=log_level, format=LOG_FORMAT, handlers=handlers, force=True)


# Model configurations: name -> (input_mode, time_mode, alpha_min)
CONFIGURATIONS: Dict[str, Tuple[str, str, float]] = {
    'identity-zero-0.95': ('identity', 'zero', 0.95),
    'fourier-linear-0.95': ('fourier', 'linear', 0.95),
    'fourier-fourier-0.95': ('fourier', 'fourier', 0.95),
    'fourier-fourier-0.98': ('fourier', 'fourier', 0.98),
}

# Fixed stage codes for seed stream splitting; never renumber
STAGES: Dict[str, int] = {
    'bases': 1,
    'init': 2,
    'split': 3,
    'train': 4,
    'eval': 5,
    'sample': 6,
    'kmeans': 7,
}


def rng_for(seed: int, stage: str) -> np.random.Generator:
    """Independent generator for one pipeline stage derived from the root seed"""
    if stage not in STAGES:
        raise ConfigError(f"Unknown RNG stage '{stage}'")
    return np.random.default_rng([int(seed), STAGES[stage]])


def default_field_timesteps(T: int) -> List[int]:
    """{1, ceil(T/4), ceil(T/2), ceil(3T/4), T}, deduplicated and sorted"""
    steps = {1, math.ceil(T / 4), math.ceil(T / 2), math.ceil(3 * T / 4), T}
    return sorted(s for s in steps if 1 <= s <= T)


def default_snapshot_steps(T: int) -> List[int]:
    """Five formation snapshots; for T=50 these are 10, 20, 30, 40, 50"""
    steps = {int(round(k * T / 5)) for k in range(1, 6)}
    return sorted(s for s in steps if 1 <= s <= T)


@dataclass
class RunConfig:
    dataset: Path
    config_name: str = 'fourier-fourier-0.95'
    T: int = 50
    epochs: int = 2000
    batch_size: int = 32
    learning_rate: float = 4e-4
    clip_norm: float = 1.0
    n_samples: int = 1000
    k: int = 5
    grid_nx: int = 20
    grid_ny: int = 20
    grid_pad: float = 0.5
    seed: int = 42
    out_dir: Path = Path('runs')
    copies: int = 6
    train_fraction: float = 0.9
    alpha_max: float = 0.9999
    field_timesteps: List[int] = field(default_factory=list)
    snapshot_steps: List[int] = field(default_factory=list)

    def __post_init__(self):
        self.dataset = Path(self.dataset)
        self.out_dir = Path(self.out_dir)
        if not self.field_timesteps:
            self.field_timesteps = default_field_timesteps(self.T)
        if not self.snapshot_steps:
            self.snapshot_steps = default_snapshot_steps(self.T)
        self.validate()

    def validate(self):
        if self.config_name not in CONFIGURATIONS:
            valid = ", ".join(CONFIGURATIONS)
            raise ConfigError(f"Unknown config '{self.config_name}'. Valid configs: {valid}")
        positive = {
            'T': self.T, 'batch_size': self.batch_size, 'learning_rate': self.learning_rate,
            'clip_norm': self.clip_norm, 'n_samples': self.n_samples, 'k': self.k,
            'copies': self.copies,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ConfigError(f"{name} must be positive, got {value}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be non-negative, got {self.epochs}")
        if self.grid_nx < 2 or self.grid_ny < 2:
            raise ConfigError(f"grid must be at least 2x2, got {self.grid_nx}x{self.grid_ny}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        for t in self.field_timesteps:
            if not 1 <= t <= self.T:
                raise ConfigError(f"field timestep {t} outside 1..{self.T}")
        for t in self.snapshot_steps:
            if not 0 <= t <= self.T:
                raise ConfigError(f"snapshot step {t} outside 0..{self.T}")

    @property
    def input_mode(self) -> str:
        return CONFIGURATIONS[self.config_name][0]

    @property
    def time_mode(self) -> str:
        return CONFIGURATIONS[self.config_name][1]

    @property
    def alpha_min(self) -> float:
        return CONFIGURATIONS[self.config_name][2]

    @property
    def dataset_name(self) -> str:
        return self.dataset.stem

    @property
    def run_dir(self) -> Path:
        """<out>/<dataset>/<config>/"""
        return self.out_dir / self.dataset_name / self.config_name


def _convert(name: str, raw: str, target: type):
    try:
        if target is bool:
            return raw.strip().lower() in ('1', 'true', 'yes')
        if target is Path:
            return Path(raw.strip())
        if target is list:
            return [int(item) for item in raw.replace(';', ',').split(',') if item.strip()]
        return target(raw.strip())
    except ValueError:
        raise ConfigError(f"Setting '{name}' has invalid value '{raw}'")


def load_settings(path: Path) -> Dict[str, object]:
    """Read a flat key=value settings file into typed RunConfig field values"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Settings file not found: {path}")

    types = {
        'dataset': Path, 'config_name': str, 'T': int, 'epochs': int, 'batch_size': int,
        'learning_rate': float, 'clip_norm': float, 'n_samples': int, 'k': int,
        'grid_nx': int, 'grid_ny': int, 'grid_pad': float, 'seed': int, 'out_dir': Path,
        'copies': int, 'train_fraction': float, 'alpha_max': float,
        'field_timesteps': list, 'snapshot_steps': list,
    }
    settings: Dict[str, object] = {}
    for key, raw in dotenv_values(path).items():
        if key not in types:
            raise ConfigError(f"{path}: unknown setting '{key}'")
        if raw is None:
            raise ConfigError(f"{path}: setting '{key}' has no value")
        settings[key] = _convert(key, raw, types[key])
    return settings


def parse_grid(text: str) -> Tuple[int, int]:
    """'20x20' or '20' -> (nx, ny)"""
    parts = text.lower().split('x')
    try:
        if len(parts) == 1:
            n = int(parts[0])
            return n, n
        if len(parts) == 2:
            return int(parts[0]), int(parts[1])
    except ValueError:
        pass
    raise ConfigError(f"Invalid grid '{text}', expected NXxNY such as 20x20")
