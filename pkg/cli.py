#!/usr/bin/env python3
"""
InJecteD command line

Commands:
- train:   dataset -> trained model file + loss curves
- sample:  model file -> trajectory CSV
- analyze: trajectories + dataset + model -> metrics report, field and alignment dumps
- plot:    analysis outputs -> SVG figures
- all:     train, sample, analyze, plot in sequence
- compare: metrics of every configuration of one dataset side by side

Exit codes: 0 success, 1 usage error, 2 pipeline error.
"""

import argparse
import logging
import math
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn
from rich.table import Table

from config import CONFIGURATIONS, RunConfig, config, load_settings, parse_grid, rng_for, setup_logging
from dataset import load_dataset, replicate_and_split
from diffusion import (TrainConfig, build_schedule, read_timestep_mse, read_trajectories, sample, train,
                       write_loss_curve, write_trajectories)
from driftfield import (Grid2D, backward_fields, drift_alignment, forward_drift, read_alignment, read_fields,
                        write_alignment, write_fields)
from errors import ConfigError, InjectedError, MetricsError, PipelineError, PlotError
from model import EmbeddingConfig, create_model, load_model, save_model
from plots import FigureMetrics, figure_bundle
from trajmetrics import (cluster_sweep, cluster_trajectories, displacement, phase_ratio, read_metrics_report,
                         read_series_csv, velocity, wasserstein_fidelity, write_clusters, write_displacement,
                         write_metrics_report, write_velocity)

logger = logging.getLogger(__name__)

console = Console()
err_console = Console(stderr=True)

EXIT_OK, EXIT_USAGE, EXIT_PIPELINE = 0, 1, 2

MODEL_FILE = 'model.txt'
TRAJECTORY_FILE = 'trajectories.csv'
ANALYSIS_FILES = {
    'trajectories': TRAJECTORY_FILE,
    'displacement': 'displacement.csv',
    'velocity': 'velocity.csv',
    'clusters': 'clusters.csv',
    'alignment': 'alignment.csv',
    'forward fields': 'fields_forward.csv',
    'backward fields': 'fields_backward.csv',
    'per-timestep MSE': 'mse_per_timestep.csv',
}


class UsageArgumentParser(argparse.ArgumentParser):
    """argparse that raises ConfigError instead of exiting with status 2"""

    def error(self, message):
        raise ConfigError(message)


@contextmanager
def stage(name: str):
    """Run a pipeline stage; failures surface as PipelineError naming the stage"""
    logger.info(f"[{name}] started")
    try:
        yield
    except (ConfigError, PipelineError):
        raise
    except (InjectedError, OSError, ValueError) as e:
        logger.error(f"[{name}] failed: {e}")
        raise PipelineError(name, e) from e
    logger.info(f"[{name}] done")


def cmd_train(cfg: RunConfig, show_progress: bool = True) -> Dict[str, Path]:
    """Dataset -> trained model file, loss_epoch.csv, mse_per_timestep.csv"""
    with stage('dataset'):
        _, cloud = load_dataset(cfg.dataset)
        split = replicate_and_split(cloud, cfg.copies, cfg.train_fraction, cfg.seed,
                                    rng=rng_for(cfg.seed, 'split'))

    with stage('train'):
        model = create_model(EmbeddingConfig(cfg.input_mode, cfg.time_mode), T=cfg.T,
                             alpha_min=cfg.alpha_min, seed=cfg.seed, alpha_max=cfg.alpha_max)
        schedule = build_schedule(cfg.T, cfg.alpha_min, cfg.alpha_max)
        train_config = TrainConfig(epochs=cfg.epochs, batch_size=cfg.batch_size,
                                   learning_rate=cfg.learning_rate, clip_norm=cfg.clip_norm, seed=cfg.seed)
        if show_progress and cfg.epochs:
            with Progress(SpinnerColumn(), TextColumn("[bold blue]{task.description}"), BarColumn(),
                          TextColumn("{task.completed}/{task.total}"), TextColumn("loss {task.fields[loss]}"),
                          TimeElapsedColumn(), console=err_console, transient=True) as progress:
                task = progress.add_task(f"Training {cfg.config_name}", total=cfg.epochs, loss='-')

                def on_epoch(epoch: int, loss: float):
                    progress.update(task, completed=epoch, loss=f"{loss:.4f}")

                trained, curve = train(model, split, schedule, train_config, progress=on_epoch)
        else:
            trained, curve = train(model, split, schedule, train_config)

    with stage('persist'):
        run_dir = cfg.run_dir
        save_model(trained, run_dir / MODEL_FILE)
        write_loss_curve(run_dir, curve)

    return {
        'model': run_dir / MODEL_FILE,
        'loss': run_dir / 'loss_epoch.csv',
        'mse': run_dir / 'mse_per_timestep.csv',
    }


def cmd_sample(model_path: Path, n_samples: int, seed: int, out_path: Optional[Path] = None) -> Path:
    """Model file -> trajectory CSV with n_samples x (T+1) rows"""
    model_path = Path(model_path)
    out_path = Path(out_path) if out_path is not None else model_path.parent / TRAJECTORY_FILE

    with stage('load model'):
        model = load_model(model_path)
    with stage('sample'):
        schedule = build_schedule(model.T, model.alpha_min, model.alpha_max)
        bundle = sample(model, schedule, n_samples, rng_for(seed, 'sample'), record=True)
    with stage('persist'):
        write_trajectories(out_path, bundle)
    return out_path


def _mean_magnitude(field) -> float:
    return float(np.mean(field.magnitudes))


def cmd_analyze(cfg: RunConfig, trajectory_path: Optional[Path] = None,
                model_path: Optional[Path] = None) -> Dict[str, Path]:
    """Trajectories + dataset + model -> metrics.txt and per-metric CSV dumps"""
    run_dir = cfg.run_dir
    trajectory_path = Path(trajectory_path) if trajectory_path else run_dir / TRAJECTORY_FILE
    model_path = Path(model_path) if model_path else run_dir / MODEL_FILE

    with stage('load inputs'):
        model = load_model(model_path)
        bundle = read_trajectories(trajectory_path, alpha_min=model.alpha_min, config_tag=model.embed.tag)
        _, cloud = load_dataset(cfg.dataset)
        if bundle.T != model.T:
            raise MetricsError(f"T mismatch: trajectory file {trajectory_path} has T={bundle.T}, "
                               f"model file {model_path} has T={model.T}")
        schedule = build_schedule(model.T, model.alpha_min, model.alpha_max)

    with stage('trajectory metrics'):
        disp = displacement(bundle)
        vel = velocity(bundle)
        clusters = cluster_trajectories(bundle, k=cfg.k, seed=cfg.seed)
        sweep = cluster_sweep(bundle, seed=cfg.seed)
        fidelity = wasserstein_fidelity(cloud, bundle.final)

    with stage('drift fields'):
        grid = Grid2D.around(cloud.points, pad=cfg.grid_pad, nx=cfg.grid_nx, ny=cfg.grid_ny)
        field_steps = [t for t in cfg.field_timesteps if t <= schedule.T]
        forward = [forward_drift(grid, t, cloud, schedule) for t in field_steps]
        backward = backward_fields(grid, model, schedule)
        alignment = drift_alignment(bundle, backward)

    metrics: Dict[str, float] = {
        'samples': bundle.n_samples,
        'T': bundle.T,
        'schedule.alpha_bar_T': float(schedule.alpha_bar[-1]),
        'wasserstein.w1_x': fidelity.w1_x,
        'wasserstein.w1_y': fidelity.w1_y,
        'wasserstein.combined': fidelity.combined,
        'displacement.mean': float(np.mean(disp.per_sample)),
        'displacement.median': float(np.median(disp.per_sample)),
        'displacement.min': float(np.min(disp.per_sample)),
        'displacement.max': float(np.max(disp.per_sample)),
    }
    generated = cloud.stats.denormalize(bundle.final)
    for axis, column in (('x', 0), ('y', 1)):
        metrics[f'generated.{axis}_min'] = float(generated[:, column].min())
        metrics[f'generated.{axis}_max'] = float(generated[:, column].max())
    for step, value in enumerate(vel.values):
        metrics[f'velocity.{step}'] = float(value)
    metrics['velocity.phase_ratio'] = phase_ratio(vel)
    metrics['cluster.k'] = clusters.k
    metrics['cluster.inertia'] = clusters.inertia
    for label, size in enumerate(clusters.sizes()):
        metrics[f'cluster.size.{label}'] = int(size)
    for k, inertia in sweep.items():
        metrics[f'cluster.sweep.k{k}'] = inertia
    for t, cs in zip(alignment.timesteps, alignment.cs):
        metrics[f'alignment.{int(t)}'] = float(cs)
    peak_t, peak = alignment.peak()
    metrics['alignment.peak_t'] = float('nan') if peak_t is None else peak_t
    metrics['alignment.peak'] = peak
    for field in forward:
        metrics[f'drift.forward.t{field.t}.mean_magnitude'] = _mean_magnitude(field)
    for t in field_steps:
        metrics[f'drift.backward.t{t}.mean_magnitude'] = _mean_magnitude(backward[t])

    with stage('persist'):
        paths = {
            'metrics': run_dir / 'metrics.txt',
            'displacement': run_dir / ANALYSIS_FILES['displacement'],
            'velocity': run_dir / ANALYSIS_FILES['velocity'],
            'clusters': run_dir / ANALYSIS_FILES['clusters'],
            'alignment': run_dir / ANALYSIS_FILES['alignment'],
            'forward fields': run_dir / ANALYSIS_FILES['forward fields'],
            'backward fields': run_dir / ANALYSIS_FILES['backward fields'],
        }
        write_metrics_report(paths['metrics'], metrics)
        write_displacement(paths['displacement'], disp)
        write_velocity(paths['velocity'], vel)
        write_clusters(paths['clusters'], clusters)
        write_alignment(paths['alignment'], alignment)
        write_fields(paths['forward fields'], forward)
        write_fields(paths['backward fields'], [backward[t] for t in field_steps])

    logger.info(f"Wasserstein combined {fidelity.combined:.4f}, alignment peak {peak:.3f} at t={peak_t}")
    return paths


def _sibling_displacements(run_dir: Path) -> Dict[str, np.ndarray]:
    comparison = {}
    for name in CONFIGURATIONS:
        path = run_dir.parent / name / ANALYSIS_FILES['displacement']
        if path.exists():
            comparison[name] = read_series_csv(path)
    return comparison


def cmd_plot(cfg: RunConfig) -> List[Path]:
    """Analysis outputs -> SVG figures under <out>/<dataset>/<config>/"""
    run_dir = cfg.run_dir
    missing = [f"{label} ({run_dir / name})" for label, name in ANALYSIS_FILES.items()
               if not (run_dir / name).exists()]
    if missing:
        raise PipelineError('plot', PlotError(f"missing analysis inputs: {', '.join(missing)}"))

    with stage('load analysis'):
        bundle = read_trajectories(run_dir / TRAJECTORY_FILE)
        metrics = FigureMetrics(
            displacement=read_series_csv(run_dir / ANALYSIS_FILES['displacement']),
            velocity=read_series_csv(run_dir / ANALYSIS_FILES['velocity']),
            labels=read_series_csv(run_dir / ANALYSIS_FILES['clusters']).astype(int),
            alignment=read_alignment(run_dir / ANALYSIS_FILES['alignment']),
        )
        fields = {
            'forward': read_fields(run_dir / ANALYSIS_FILES['forward fields'], 'forward'),
            'backward': read_fields(run_dir / ANALYSIS_FILES['backward fields'], 'backward'),
        }
        losses = read_timestep_mse(run_dir / ANALYSIS_FILES['per-timestep MSE'])
        _, cloud = load_dataset(cfg.dataset)

    with stage('plot'):
        snapshot_steps = [s for s in cfg.snapshot_steps if s <= bundle.T]
        return figure_bundle(cfg.out_dir, cfg.dataset_name, cfg.config_name, metrics, fields, bundle, losses,
                             original=cloud.points, comparison=_sibling_displacements(run_dir),
                             snapshot_steps=snapshot_steps)


def cmd_all(cfg: RunConfig, show_progress: bool = True) -> List[Path]:
    outputs = cmd_train(cfg, show_progress=show_progress)
    cmd_sample(outputs['model'], cfg.n_samples, cfg.seed)
    analysis = cmd_analyze(cfg)
    figures = cmd_plot(cfg)
    return sorted(set(outputs.values()) | set(analysis.values()) | set(figures)
                  | {cfg.run_dir / TRAJECTORY_FILE})


def cmd_compare(out_dir: Path, dataset_name: str) -> Table:
    """Rich table of headline metrics for every analyzed configuration of a dataset"""
    table = Table(title=f"{dataset_name}: configuration comparison", show_header=True)
    table.add_column("Config", style="cyan")
    table.add_column("W1 combined", justify="right")
    table.add_column("Mean displacement", justify="right")
    table.add_column("Velocity phase ratio", justify="right")
    table.add_column("Peak CS(t)", justify="right")

    found = 0
    for name in CONFIGURATIONS:
        path = Path(out_dir) / dataset_name / name / 'metrics.txt'
        if not path.exists():
            continue
        found += 1
        report = read_metrics_report(path)

        def cell(key: str) -> str:
            value = report.get(key, float('nan'))
            return '-' if math.isnan(value) else f"{value:.4f}"

        peak = cell('alignment.peak')
        if not math.isnan(report.get('alignment.peak_t', float('nan'))):
            peak += f" (t={int(report['alignment.peak_t'])})"
        table.add_row(name, cell('wasserstein.combined'), cell('displacement.mean'),
                      cell('velocity.phase_ratio'), peak)
    if not found:
        raise PipelineError('compare', PlotError(f"no metrics.txt found under {Path(out_dir) / dataset_name}"))
    return table


def print_inventory(paths: List[Path], title: str = "Files written"):
    table = Table(title=title, show_header=True)
    table.add_column("File", style="cyan")
    table.add_column("Bytes", justify="right")
    for path in sorted(paths):
        table.add_row(str(path), str(path.stat().st_size) if path.exists() else '-')
    console.print(table)


def build_parser() -> argparse.ArgumentParser:
    parser = UsageArgumentParser(prog='injected', description="Train a 2D DDPM and analyze its denoising trajectories")
    parser.add_argument('--log-level', default=None, help="DEBUG, INFO, WARNING, ...")
    parser.add_argument('--log-file', default=None, help="Log file path; empty string disables file logging")
    commands = parser.add_subparsers(dest='command', required=True)

    def run_options(sub: argparse.ArgumentParser):
        sub.add_argument('--dataset', type=Path, help="Point-cloud CSV")
        sub.add_argument('--config', dest='config_name',
                         help=f"Model configuration: {', '.join(CONFIGURATIONS)}")
        sub.add_argument('--settings', type=Path, help="key=value run settings file")
        sub.add_argument('--seed', type=int)
        sub.add_argument('--epochs', type=int)
        sub.add_argument('--samples', dest='n_samples', type=int)
        sub.add_argument('--out', dest='out_dir', type=Path)
        sub.add_argument('--grid', help="Drift grid resolution NXxNY, e.g. 20x20")
        sub.add_argument('--k', type=int, help="Number of trajectory clusters")
        return sub

    run_options(commands.add_parser('train', help="Train a denoiser"))
    sample_parser = run_options(commands.add_parser('sample', help="Sample trajectories from a model file"))
    sample_parser.add_argument('--model', type=Path, help="Model file (default <out>/<dataset>/<config>/model.txt)")
    run_options(commands.add_parser('analyze', help="Compute trajectory and drift metrics"))
    run_options(commands.add_parser('plot', help="Render SVG figures from analysis outputs"))
    run_options(commands.add_parser('all', help="train, sample, analyze and plot"))
    run_options(commands.add_parser('compare', help="Compare configurations of one dataset"))
    return parser


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    """Settings file values, overridden by any flags given on the command line"""
    values = load_settings(args.settings) if args.settings else {}
    for key in ('dataset', 'config_name', 'seed', 'epochs', 'n_samples', 'out_dir', 'k'):
        value = getattr(args, key, None)
        if value is not None:
            values[key] = value
    if args.grid:
        values['grid_nx'], values['grid_ny'] = parse_grid(args.grid)
    if 'dataset' not in values:
        raise ConfigError("--dataset is required (or 'dataset=' in the settings file)")
    values.setdefault('out_dir', Path(config.OUTPUT_DIR))
    values.setdefault('seed', config.SEED)
    return RunConfig(**values)


def dispatch(args: argparse.Namespace) -> int:
    if args.command == 'sample' and args.model is not None:
        n_samples = args.n_samples if args.n_samples is not None else 1000
        seed = args.seed if args.seed is not None else config.SEED
        path = cmd_sample(args.model, n_samples, seed)
        print_inventory([path])
        return EXIT_OK

    cfg = run_config_from_args(args)
    if args.command == 'train':
        print_inventory(list(cmd_train(cfg).values()))
    elif args.command == 'sample':
        print_inventory([cmd_sample(cfg.run_dir / MODEL_FILE, cfg.n_samples, cfg.seed)])
    elif args.command == 'analyze':
        print_inventory(list(cmd_analyze(cfg).values()))
    elif args.command == 'plot':
        print_inventory(cmd_plot(cfg), title="Figures")
    elif args.command == 'all':
        print_inventory(cmd_all(cfg))
    elif args.command == 'compare':
        console.print(cmd_compare(cfg.out_dir, cfg.dataset_name))
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        setup_logging(args.log_level, args.log_file)
        return dispatch(args)
    except ConfigError as e:
        err_console.print(f"[red]Usage error: {e}[/red]")
        err_console.print(f"[dim]Valid configs: {', '.join(CONFIGURATIONS)}[/dim]")
        return EXIT_USAGE
    except (InjectedError, OSError) as e:
        logger.error(f"Pipeline error: {e}")
        err_console.print(f"[red]Error: {e}[/red]")
        return EXIT_PIPELINE
    except KeyboardInterrupt:
        err_console.print("\n[yellow]Interrupted by user[/yellow]")
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
