"""Shared fixtures: synthetic point clouds, tiny schedules and models, data-dir lookup"""

import os
from pathlib import Path

import numpy as np
import pytest

from dataset import write_csv
from diffusion import TrajectoryBundle, build_schedule
from model import EmbeddingConfig, create_model

DATA_DIR = Path(os.getenv('INJECTED_DATA_DIR', Path(__file__).parent / 'data'))


def circle_points(n: int = 60, radius: float = 20.0, center=(50.0, 50.0)) -> np.ndarray:
    angles = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    return np.column_stack([center[0] + radius * np.cos(angles), center[1] + radius * np.sin(angles)])


def bullseye_points(n: int = 80) -> np.ndarray:
    return np.concatenate([circle_points(n // 2, 10.0), circle_points(n - n // 2, 25.0)])


def require_dataset(name: str) -> Path:
    """Path of a Datasaurus CSV under the data dir, skipping the test when it is absent"""
    path = DATA_DIR / f"{name}.csv"
    if not path.exists():
        pytest.skip(f"{path} not available")
    return path


@pytest.fixture
def circle_csv(tmp_path) -> Path:
    path = tmp_path / 'circle.csv'
    write_csv(path, circle_points())
    return path


@pytest.fixture
def bullseye_csv(tmp_path) -> Path:
    path = tmp_path / 'bullseye.csv'
    write_csv(path, bullseye_points())
    return path


@pytest.fixture
def schedule():
    return build_schedule(T=10, alpha_min=0.95)


@pytest.fixture
def tiny_model():
    return create_model(EmbeddingConfig('fourier', 'fourier'), T=10, alpha_min=0.95, seed=3)


@pytest.fixture
def line_bundle() -> TrajectoryBundle:
    """Three samples moving along straight lines, T=4"""
    steps = np.arange(5, dtype=float)[:, None]
    positions = np.stack([
        np.hstack([steps, np.zeros_like(steps)]),            # +x, unit steps
        np.hstack([np.zeros_like(steps), 2.0 * steps]),      # +y, steps of 2
        np.hstack([-steps, -steps]),                         # diagonal
    ])
    return TrajectoryBundle(positions=positions, T=4, alpha_min=0.95)
