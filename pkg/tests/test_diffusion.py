from fractions import Fraction

import numpy as np
import pytest

from dataset import DataSplit, PointCloud, load_dataset, replicate_and_split
from diffusion import (TrainConfig, TrajectoryBundle, build_schedule, forward_noise, forward_noise_iterative,
                       read_timestep_mse, read_trajectories, reverse_mean, sample, train, write_loss_curve,
                       write_trajectories)
from errors import DatasetError, ScheduleError, TrainingError
from model import EmbeddingConfig, create_model, predict_noise


def test_schedule_endpoints_and_products():
    schedule = build_schedule(T=50, alpha_min=0.95)
    assert len(schedule.alpha) == 50
    assert schedule.alpha[0] == pytest.approx(0.9999)
    assert schedule.alpha[-1] == pytest.approx(0.95)
    assert np.all(np.diff(schedule.alpha) < 0)
    assert schedule.alpha_bar[0] == 1.0
    np.testing.assert_allclose(schedule.alpha_bar[1:], np.cumprod(schedule.alpha))
    np.testing.assert_allclose(schedule.beta, 1.0 - schedule.alpha)
    np.testing.assert_allclose(schedule.sigma ** 2, schedule.beta)
    assert 0.0 < schedule.alpha_bar[-1] < 1.0


def test_single_step_schedule():
    schedule = build_schedule(T=1, alpha_min=0.95)
    np.testing.assert_allclose(schedule.alpha, [0.9999])


@pytest.mark.parametrize('T, alpha_min', [(0, 0.95), (10, 0.0), (10, 1.5)])
def test_schedule_rejects_bad_parameters(T, alpha_min):
    with pytest.raises(ScheduleError):
        build_schedule(T=T, alpha_min=alpha_min)


def test_forward_noise_closed_form(schedule):
    x0 = np.array([[1.0, -2.0], [0.5, 0.25]])
    eps = np.array([[0.1, 0.2], [-0.3, 0.4]])
    x_t, returned = forward_noise(x0, 4, schedule, eps=eps)
    a_bar = schedule.alpha_bar[4]
    np.testing.assert_allclose(x_t, np.sqrt(a_bar) * x0 + np.sqrt(1 - a_bar) * eps)
    np.testing.assert_array_equal(returned, eps)
    np.testing.assert_array_equal(forward_noise(x0, 0, schedule, eps=eps)[0], x0)
    with pytest.raises(ScheduleError):
        forward_noise(x0, 11, schedule, eps=eps)


def test_forward_noise_moments(schedule):
    rng = np.random.default_rng(0)
    x0 = np.ones((200_000, 2))
    x_t, _ = forward_noise(x0, schedule.T, schedule, rng)
    a_bar = schedule.alpha_bar[-1]
    np.testing.assert_allclose(x_t.mean(axis=0), np.sqrt(a_bar), atol=0.01)
    np.testing.assert_allclose(x_t.var(axis=0), 1 - a_bar, rtol=0.03)


def test_iterative_noising_matches_closed_form_distribution(schedule):
    rng = np.random.default_rng(1)
    x0 = np.ones((200_000, 2))
    x_t = forward_noise_iterative(x0, 6, schedule, rng)
    a_bar = schedule.alpha_bar[6]
    np.testing.assert_allclose(x_t.mean(axis=0), np.sqrt(a_bar), atol=0.01)
    np.testing.assert_allclose(x_t.var(axis=0), 1 - a_bar, rtol=0.05)


def test_reverse_mean_recovers_x0_at_first_step(schedule):
    rng = np.random.default_rng(2)
    x0 = rng.normal(size=(5, 2))
    x1, eps = forward_noise(x0, 1, schedule, rng)
    np.testing.assert_allclose(reverse_mean(x1, eps, 1, schedule), x0, atol=1e-12)


def test_sample_follows_documented_draw_order(tiny_model, schedule):
    bundle = sample(tiny_model, schedule, 8, np.random.default_rng(5))
    assert bundle.positions.shape == (8, schedule.T + 1, 2)

    rng = np.random.default_rng(5)
    x = rng.standard_normal((8, 2))
    np.testing.assert_array_equal(bundle.positions[:, 0], x)
    for t in range(schedule.T, 0, -1):
        x = reverse_mean(x, predict_noise(tiny_model, x, t, schedule.T), t, schedule)
        if t > 1:
            x = x + schedule.step_sigma(t) * rng.standard_normal((8, 2))
    np.testing.assert_allclose(bundle.final, x)


def test_sample_state_indexing_and_record_flag(tiny_model, schedule):
    full = sample(tiny_model, schedule, 4, np.random.default_rng(9))
    ends = sample(tiny_model, schedule, 4, np.random.default_rng(9), record=False)
    assert ends.positions.shape == (4, 2, 2)
    np.testing.assert_array_equal(ends.final, full.final)
    np.testing.assert_array_equal(full.state_at(schedule.T), full.positions[:, 0])
    np.testing.assert_array_equal(full.state_at(0), full.final)
    assert full.config_tag == 'fourier-fourier'


def test_sample_is_deterministic(tiny_model, schedule):
    a = sample(tiny_model, schedule, 6, np.random.default_rng(3))
    b = sample(tiny_model, schedule, 6, np.random.default_rng(3))
    np.testing.assert_array_equal(a.positions, b.positions)


def test_train_returns_trained_copy(circle_csv, tiny_model, schedule):
    _, cloud = load_dataset(circle_csv)
    split = replicate_and_split(cloud, seed=0)
    before = [p.copy() for p in tiny_model.parameters()]
    calls = []

    trained, curve = train(tiny_model, split, schedule, TrainConfig(epochs=3, batch_size=32, seed=0),
                           progress=lambda epoch, loss: calls.append(epoch))

    for old, p in zip(before, tiny_model.parameters()):
        np.testing.assert_array_equal(old, p)
    assert any(not np.array_equal(a, b) for a, b in zip(before, trained.parameters()))
    assert calls == [1, 2, 3]
    assert curve.epoch_loss.shape == (3,)
    assert curve.timestep_mse.shape == (schedule.T,)
    assert np.all(np.isfinite(curve.epoch_loss))


def test_train_is_deterministic(circle_csv, tiny_model, schedule):
    _, cloud = load_dataset(circle_csv)
    split = replicate_and_split(cloud, seed=0)
    config = TrainConfig(epochs=2, seed=4)
    a, curve_a = train(tiny_model, split, schedule, config)
    b, curve_b = train(tiny_model, split, schedule, config)
    np.testing.assert_array_equal(curve_a.epoch_loss, curve_b.epoch_loss)
    for p, q in zip(a.parameters(), b.parameters()):
        np.testing.assert_array_equal(p, q)


def test_train_rejects_empty_training_set(tiny_model, schedule):
    empty = PointCloud(points=np.empty((0, 2)), stats=None)
    split = DataSplit(train=empty, test=empty, split_fraction=0.9, seed=0)
    with pytest.raises(TrainingError):
        train(tiny_model, split, schedule, TrainConfig(epochs=1))


def test_train_config_validation():
    with pytest.raises(TrainingError):
        TrainConfig(batch_size=0)


def test_trajectory_file_round_trip(tmp_path, tiny_model, schedule):
    bundle = sample(tiny_model, schedule, 3, np.random.default_rng(0))
    path = tmp_path / 'trajectories.csv'
    write_trajectories(path, bundle)
    lines = path.read_text().splitlines()
    assert lines[0] == 'sample,step,x,y'
    assert len(lines) == 1 + 3 * (schedule.T + 1)
    loaded = read_trajectories(path)
    assert loaded.T == schedule.T
    np.testing.assert_array_equal(loaded.positions, bundle.positions)


def test_read_trajectories_rejects_ragged_file(tmp_path):
    path = tmp_path / 'trajectories.csv'
    path.write_text("sample,step,x,y\n0,0,1,1\n0,1,1,1\n1,0,2,2\n")
    with pytest.raises(DatasetError, match="rows"):
        read_trajectories(path)


def test_read_trajectories_rejects_negative_index(tmp_path):
    path = tmp_path / 'trajectories.csv'
    path.write_text("sample,step,x,y\n0,0,1,1\n0,1,1,1\n1,0,2,2\n-1,1,2,2\n")
    with pytest.raises(DatasetError, match="negative") as info:
        read_trajectories(path)
    assert info.value.line == 5


def test_loss_curve_files(tmp_path, circle_csv, tiny_model, schedule):
    _, cloud = load_dataset(circle_csv)
    _, curve = train(tiny_model, replicate_and_split(cloud, seed=0), schedule, TrainConfig(epochs=1))
    write_loss_curve(tmp_path, curve)
    assert (tmp_path / 'loss_epoch.csv').read_text().startswith('epoch,loss\n1,')
    np.testing.assert_array_equal(read_timestep_mse(tmp_path / 'mse_per_timestep.csv'), curve.timestep_mse)


def test_bundle_properties():
    bundle = TrajectoryBundle(positions=np.zeros((2, 4, 2)), T=3, alpha_min=0.95)
    assert (bundle.n_samples, bundle.n_steps) == (2, 4)


def test_alpha_bar_matches_exact_rational_product():
    schedule = build_schedule(T=50, alpha_min=0.95)
    exact = Fraction(1)
    for a in schedule.alpha:
        exact *= Fraction(float(a))
    assert abs(schedule.alpha_bar[-1] - float(exact)) < 1e-12
    assert schedule.alpha_bar[-1] == pytest.approx(0.28, abs=0.005)
    assert np.all(np.diff(schedule.alpha_bar) < 0)


def test_larger_alpha_min_keeps_more_signal():
    low, high = build_schedule(50, 0.95), build_schedule(50, 0.98)
    assert np.all(high.alpha_bar >= low.alpha_bar)


@pytest.mark.parametrize('t', [10, 25, 50])
def test_iterative_and_closed_form_noising_agree(t):
    schedule = build_schedule(T=50, alpha_min=0.95)
    x0 = np.ones((100_000, 2))
    iterative = forward_noise_iterative(x0, t, schedule, np.random.default_rng(t))
    closed, _ = forward_noise(x0, t, schedule, np.random.default_rng(100 + t))
    a_bar = schedule.alpha_bar[t]
    for x_t in (iterative, closed):
        np.testing.assert_allclose(x_t.mean(axis=0), np.sqrt(a_bar), rtol=0.02)
        np.testing.assert_allclose(x_t.var(axis=0), 1 - a_bar, rtol=0.02)


def test_zero_network_sampling_replays_by_hand():
    model = create_model(EmbeddingConfig('fourier', 'linear'), T=8, seed=0)
    for W, b in zip(model.weights, model.biases):
        W[:] = 0.0
        b[:] = 0.0
    schedule = build_schedule(T=8, alpha_min=0.9)
    bundle = sample(model, schedule, 5, np.random.default_rng(21))

    rng = np.random.default_rng(21)
    x = rng.standard_normal((5, 2))
    for k, t in enumerate(range(8, 0, -1), start=1):
        x = x / np.sqrt(schedule.step_alpha(t))
        if t > 1:
            x = x + schedule.step_sigma(t) * rng.standard_normal((5, 2))
        np.testing.assert_allclose(bundle.positions[:, k], x, atol=1e-12)
