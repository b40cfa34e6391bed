"""
Standalone SVG figures: scatter, histogram, line, quiver and heatmap.

Layout constants below fix margins, fonts and tick policy. Data space maps to
pixel space through a Frame (y flipped so +y points up on screen). Output is
byte-for-byte deterministic for identical specs.
"""

import logging
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from diffusion import TrajectoryBundle
from driftfield import AlignmentCurve, DriftField
from errors import PlotError

logger = logging.getLogger(__name__)

PLOT_KINDS = ('scatter', 'histogram', 'line', 'quiver', 'heatmap')

WIDTH, HEIGHT = 640, 480
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 30, 40, 55
FONT = 'Helvetica, Arial, sans-serif'
TITLE_SIZE, LABEL_SIZE, TICK_SIZE = 15, 12, 10
N_TICKS = 5
POINT_RADIUS = 2.5
EXTENT_PAD = 0.05

PALETTE = ['#1f77b4', '#ff7f0e', '#2ca02c', '#d62728', '#9467bd',
           '#8c564b', '#e377c2', '#7f7f7f', '#bcbd22', '#17becf']
HEATMAP_LIGHT = (247, 251, 255)
HEATMAP_DARK = (8, 48, 107)

TRAJECTORIES_PER_CLUSTER = 40


@dataclass
class LineSeries:
    xs: np.ndarray
    ys: np.ndarray
    name: str = ''
    color: int = 0


@dataclass
class PlotSpec:
    kind: str
    title: str = ''
    xlabel: str = ''
    ylabel: str = ''
    width: int = WIDTH
    height: int = HEIGHT
    points: Optional[np.ndarray] = None        # scatter (N, 2)
    labels: Optional[np.ndarray] = None        # scatter categories (N,)
    label_names: Optional[List[str]] = None
    series: List[LineSeries] = field(default_factory=list)  # line
    counts: Optional[np.ndarray] = None        # histogram
    bin_edges: Optional[np.ndarray] = None
    grid: Optional[np.ndarray] = None          # heatmap (ny, nx) node values
    extent: Optional[Tuple[float, float, float, float]] = None  # heatmap x_min, x_max, y_min, y_max
    origins: Optional[np.ndarray] = None       # quiver (N, 2)
    vectors: Optional[np.ndarray] = None       # quiver (N, 2)
    arrow_length: Optional[float] = None       # data-space length of the longest arrow
    colormap: str = 'blues'


@dataclass(frozen=True)
class Frame:
    """Affine map between a data rectangle and the pixel plot area"""
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    left: float
    top: float
    width: float
    height: float

    def project(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        px = self.left + (xy[..., 0] - self.x_min) / (self.x_max - self.x_min) * self.width
        py = self.top + self.height - (xy[..., 1] - self.y_min) / (self.y_max - self.y_min) * self.height
        return np.stack([px, py], axis=-1)

    def unproject(self, pxy: np.ndarray) -> np.ndarray:
        pxy = np.asarray(pxy, dtype=float)
        x = self.x_min + (pxy[..., 0] - self.left) / self.width * (self.x_max - self.x_min)
        y = self.y_min + (self.top + self.height - pxy[..., 1]) / self.height * (self.y_max - self.y_min)
        return np.stack([x, y], axis=-1)


def _fmt(value: float) -> str:
    return f"{float(value):.10g}"


def nice_step(span: float, n_ticks: int = N_TICKS) -> float:
    """Tick step of 1, 2 or 5 times a power of ten"""
    if span <= 0 or not math.isfinite(span):
        return 1.0
    raw = span / max(1, n_ticks)
    magnitude = 10.0 ** math.floor(math.log10(raw))
    for factor in (1.0, 2.0, 5.0, 10.0):
        if raw <= factor * magnitude:
            return factor * magnitude
    return 10.0 * magnitude


def nice_ticks(lo: float, hi: float, n_ticks: int = N_TICKS) -> List[float]:
    step = nice_step(hi - lo, n_ticks)
    first = math.ceil(lo / step - 1e-9)
    last = math.floor(hi / step + 1e-9)
    return [round(k * step, 12) for k in range(first, last + 1)]


def _tick_label(value: float, step: float) -> str:
    decimals = max(0, -int(math.floor(math.log10(step)))) if step > 0 else 0
    text = f"{value:.{decimals}f}"
    return '0' if text.strip('-0.') == '' else text


def _padded(lo: float, hi: float) -> Tuple[float, float]:
    if hi <= lo:
        return lo - 0.5, hi + 0.5
    pad = (hi - lo) * EXTENT_PAD
    return lo - pad, hi + pad


def _check_finite(name: str, array: Optional[np.ndarray], allow_nan: bool = False) -> np.ndarray:
    if array is None:
        raise PlotError(f"plot payload '{name}' is missing")
    array = np.asarray(array, dtype=float)
    if array.size == 0:
        raise PlotError(f"plot payload '{name}' is empty")
    bad = np.isinf(array) if allow_nan else ~np.isfinite(array)
    if np.any(bad):
        raise PlotError(f"plot payload '{name}' contains non-finite values")
    return array


def _frame_for(spec: PlotSpec, x_range: Tuple[float, float], y_range: Tuple[float, float],
               pad: bool = True) -> Frame:
    (x_lo, x_hi), (y_lo, y_hi) = x_range, y_range
    if pad:
        x_lo, x_hi = _padded(x_lo, x_hi)
        y_lo, y_hi = _padded(y_lo, y_hi)
    return Frame(x_min=x_lo, x_max=x_hi, y_min=y_lo, y_max=y_hi,
                 left=MARGIN_LEFT, top=MARGIN_TOP,
                 width=spec.width - MARGIN_LEFT - MARGIN_RIGHT,
                 height=spec.height - MARGIN_TOP - MARGIN_BOTTOM)


def data_frame(spec: PlotSpec) -> Frame:
    """The frame render() uses for this spec (exposed for inverting emitted coordinates)"""
    if spec.kind == 'scatter':
        pts = _check_finite('points', spec.points).reshape(-1, 2)
        return _frame_for(spec, (pts[:, 0].min(), pts[:, 0].max()), (pts[:, 1].min(), pts[:, 1].max()))
    if spec.kind == 'line':
        if not spec.series:
            raise PlotError("plot payload 'series' is empty")
        xs = np.concatenate([_check_finite('series.xs', s.xs) for s in spec.series])
        ys = np.concatenate([_check_finite('series.ys', s.ys, allow_nan=True) for s in spec.series])
        if np.all(np.isnan(ys)):
            # nothing defined: empty axes over a unit y range
            return _frame_for(spec, (xs.min(), xs.max()), (0.0, 1.0))
        return _frame_for(spec, (xs.min(), xs.max()), (np.nanmin(ys), np.nanmax(ys)))
    if spec.kind == 'histogram':
        counts = _check_finite('counts', spec.counts)
        edges = _check_finite('bin_edges', spec.bin_edges)
        if len(edges) != len(counts) + 1:
            raise PlotError("histogram needs len(bin_edges) == len(counts) + 1")
        frame = _frame_for(spec, (edges[0], edges[-1]), (0.0, max(float(counts.max()), 1.0)))
        return Frame(frame.x_min, frame.x_max, 0.0, frame.y_max, frame.left, frame.top, frame.width, frame.height)
    if spec.kind == 'heatmap':
        values = _check_finite('grid', spec.grid)
        if values.ndim != 2 or spec.extent is None:
            raise PlotError("heatmap needs a 2D grid and an extent")
        x_min, x_max, y_min, y_max = spec.extent
        ny, nx = values.shape
        hx = (x_max - x_min) / max(nx - 1, 1) / 2.0
        hy = (y_max - y_min) / max(ny - 1, 1) / 2.0
        return _frame_for(spec, (x_min - hx, x_max + hx), (y_min - hy, y_max + hy), pad=False)
    if spec.kind == 'quiver':
        origins = _check_finite('origins', spec.origins).reshape(-1, 2)
        tips = origins + _quiver_vectors(spec)
        both = np.vstack([origins, tips])
        return _frame_for(spec, (both[:, 0].min(), both[:, 0].max()), (both[:, 1].min(), both[:, 1].max()))
    raise PlotError(f"unknown plot kind '{spec.kind}', expected one of {PLOT_KINDS}")


def _quiver_vectors(spec: PlotSpec) -> np.ndarray:
    """Vectors rescaled so the longest arrow has arrow_length data units"""
    origins = _check_finite('origins', spec.origins).reshape(-1, 2)
    vectors = _check_finite('vectors', spec.vectors).reshape(-1, 2)
    if len(vectors) != len(origins):
        raise PlotError("quiver needs one vector per origin")
    longest = float(np.linalg.norm(vectors, axis=1).max())
    if longest == 0.0:
        return vectors
    target = spec.arrow_length
    if target is None:
        span = np.ptp(origins, axis=0).max()
        target = 0.1 * span if span > 0 else longest
    return vectors * (target / longest)


def _sub(parent: ET.Element, tag: str, **attrs) -> ET.Element:
    element = ET.SubElement(parent, tag)
    for key, value in attrs.items():
        element.set(key.rstrip('_').replace('_', '-'), value if isinstance(value, str) else _fmt(value))
    return element


def _text(parent: ET.Element, x: float, y: float, content: str, size: int, anchor: str = 'middle',
          rotate: bool = False) -> ET.Element:
    attrs = dict(x=x, y=y, font_size=str(size), font_family=FONT, text_anchor=anchor)
    if rotate:
        attrs['transform'] = f"rotate(-90 {_fmt(x)} {_fmt(y)})"
    element = _sub(parent, 'text', **attrs)
    element.text = content
    return element


def _axes(svg: ET.Element, frame: Frame, spec: PlotSpec, show_y_ticks: bool = True):
    axes = _sub(svg, 'g', class_='axes')
    _sub(axes, 'rect', x=frame.left, y=frame.top, width=frame.width, height=frame.height,
         fill='none', stroke='#333333', stroke_width='1')

    x_step = nice_step(frame.x_max - frame.x_min)
    for value in nice_ticks(frame.x_min, frame.x_max):
        px = frame.project(np.array([value, frame.y_min]))[0]
        bottom = frame.top + frame.height
        _sub(axes, 'line', x1=px, y1=bottom, x2=px, y2=bottom + 5, stroke='#333333')
        _text(axes, px, bottom + 18, _tick_label(value, x_step), TICK_SIZE)

    if show_y_ticks:
        y_step = nice_step(frame.y_max - frame.y_min)
        for value in nice_ticks(frame.y_min, frame.y_max):
            py = frame.project(np.array([frame.x_min, value]))[1]
            _sub(axes, 'line', x1=frame.left - 5, y1=py, x2=frame.left, y2=py, stroke='#333333')
            _text(axes, frame.left - 8, py + 3.5, _tick_label(value, y_step), TICK_SIZE, anchor='end')

    if spec.title:
        _text(svg, spec.width / 2.0, MARGIN_TOP / 2.0 + 5, spec.title, TITLE_SIZE)
    if spec.xlabel:
        _text(svg, frame.left + frame.width / 2.0, spec.height - 12, spec.xlabel, LABEL_SIZE)
    if spec.ylabel:
        _text(svg, 18, frame.top + frame.height / 2.0, spec.ylabel, LABEL_SIZE, rotate=True)


def _legend(svg: ET.Element, frame: Frame, entries: Sequence[Tuple[str, str]]):
    legend = _sub(svg, 'g', class_='legend')
    for row, (name, color) in enumerate(entries):
        y = frame.top + 8 + row * 16
        _sub(legend, 'rect', x=frame.left + frame.width - 110, y=y, width='10', height='10', fill=color)
        _text(legend, frame.left + frame.width - 95, y + 9, name, TICK_SIZE, anchor='start')


def _ramp(fraction: float) -> str:
    rgb = [round(lo + (hi - lo) * fraction) for lo, hi in zip(HEATMAP_LIGHT, HEATMAP_DARK)]
    return '#{:02x}{:02x}{:02x}'.format(*rgb)


def _draw_scatter(svg, frame: Frame, spec: PlotSpec):
    points = np.asarray(spec.points, dtype=float).reshape(-1, 2)
    labels = None if spec.labels is None else np.asarray(spec.labels, dtype=int)
    if labels is not None and len(labels) != len(points):
        raise PlotError("scatter needs one label per point")
    marks = _sub(svg, 'g', class_='marks')
    for index, (px, py) in enumerate(frame.project(points)):
        color = PALETTE[labels[index] % len(PALETTE)] if labels is not None else PALETTE[0]
        _sub(marks, 'circle', cx=px, cy=py, r=POINT_RADIUS, fill=color, fill_opacity='0.7')
    if labels is not None:
        names = spec.label_names or [f"cluster {k}" for k in range(int(labels.max()) + 1)]
        present = sorted(set(int(k) for k in labels))
        _legend(svg, frame, [(names[k], PALETTE[k % len(PALETTE)]) for k in present if k < len(names)])


def _draw_histogram(svg, frame: Frame, spec: PlotSpec):
    counts = np.asarray(spec.counts, dtype=float)
    edges = np.asarray(spec.bin_edges, dtype=float)
    marks = _sub(svg, 'g', class_='marks')
    for count, lo, hi in zip(counts, edges[:-1], edges[1:]):
        (x0, y0), (x1, y1) = frame.project(np.array([[lo, count], [hi, 0.0]]))
        _sub(marks, 'rect', x=x0, y=y0, width=max(x1 - x0, 0.0), height=max(y1 - y0, 0.0),
             fill=PALETTE[0], stroke='#ffffff', stroke_width='0.5')


def _draw_line(svg, frame: Frame, spec: PlotSpec):
    marks = _sub(svg, 'g', class_='marks')
    legend = []
    for series in spec.series:
        xs = np.asarray(series.xs, dtype=float)
        ys = np.asarray(series.ys, dtype=float)
        if len(xs) != len(ys):
            raise PlotError(f"series '{series.name}' has mismatched x/y lengths")
        color = PALETTE[series.color % len(PALETTE)]
        defined = ~np.isnan(ys)
        # NaN breaks the line into separate polylines
        breaks = np.flatnonzero(np.diff(defined.astype(int)) != 0) + 1
        for chunk in np.split(np.arange(len(xs)), breaks):
            if len(chunk) == 0 or not defined[chunk[0]]:
                continue
            pixels = frame.project(np.column_stack([xs[chunk], ys[chunk]]))
            points = " ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in pixels)
            _sub(marks, 'polyline', points=points, fill='none', stroke=color, stroke_width='1.5')
        if series.name:
            legend.append((series.name, color))
    if legend:
        _legend(svg, frame, legend)


def _draw_quiver(svg, frame: Frame, spec: PlotSpec):
    origins = np.asarray(spec.origins, dtype=float).reshape(-1, 2)
    vectors = _quiver_vectors(spec)
    marks = _sub(svg, 'g', class_='marks')
    starts = frame.project(origins)
    ends = frame.project(origins + vectors)
    for (x0, y0), (x1, y1) in zip(starts, ends):
        length = math.hypot(x1 - x0, y1 - y0)
        arrow = _sub(marks, 'g', class_='arrow')
        _sub(arrow, 'line', x1=x0, y1=y0, x2=x1, y2=y1, stroke='#333333', stroke_width='1')
        if length == 0.0:
            continue
        ux, uy = (x1 - x0) / length, (y1 - y0) / length
        head = min(6.0, 0.4 * length)
        bx, by = x1 - ux * head, y1 - uy * head
        corners = [(x1, y1), (bx - uy * head / 2, by + ux * head / 2), (bx + uy * head / 2, by - ux * head / 2)]
        _sub(arrow, 'polygon', points=" ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in corners), fill='#333333')


def _draw_heatmap(svg, frame: Frame, spec: PlotSpec):
    values = np.asarray(spec.grid, dtype=float)
    ny, nx = values.shape
    x_min, x_max, y_min, y_max = spec.extent
    xs, ys = np.linspace(x_min, x_max, nx), np.linspace(y_min, y_max, ny)
    hx = (x_max - x_min) / max(nx - 1, 1) / 2.0
    hy = (y_max - y_min) / max(ny - 1, 1) / 2.0
    lo, hi = float(values.min()), float(values.max())
    span = hi - lo
    marks = _sub(svg, 'g', class_='marks')
    for j in range(ny):
        for i in range(nx):
            fraction = (values[j, i] - lo) / span if span > 0 else 0.0
            (x0, y0), (x1, y1) = frame.project(np.array([[xs[i] - hx, ys[j] + hy], [xs[i] + hx, ys[j] - hy]]))
            _sub(marks, 'rect', x=x0, y=y0, width=x1 - x0, height=y1 - y0, fill=_ramp(fraction))


DRAWERS = {
    'scatter': _draw_scatter,
    'histogram': _draw_histogram,
    'line': _draw_line,
    'quiver': _draw_quiver,
    'heatmap': _draw_heatmap,
}


def render(spec: PlotSpec) -> str:
    """Standalone SVG 1.1 document for one PlotSpec"""
    if spec.kind not in DRAWERS:
        raise PlotError(f"unknown plot kind '{spec.kind}', expected one of {PLOT_KINDS}")
    if spec.width <= 0 or spec.height <= 0:
        raise PlotError(f"width and height must be positive, got {spec.width}x{spec.height}")

    frame = data_frame(spec)
    svg = ET.Element('svg', {
        'xmlns': 'http://www.w3.org/2000/svg',
        'version': '1.1',
        'width': str(spec.width),
        'height': str(spec.height),
        'viewBox': f"0 0 {spec.width} {spec.height}",
    })
    _sub(svg, 'rect', x='0', y='0', width=str(spec.width), height=str(spec.height), fill='#ffffff')
    DRAWERS[spec.kind](svg, frame, spec)
    _axes(svg, frame, spec)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(svg, encoding='unicode') + '\n'


@dataclass
class FigureMetrics:
    displacement: np.ndarray   # (S,)
    velocity: np.ndarray       # (T,)
    labels: np.ndarray         # (S,) cluster labels
    alignment: AlignmentCurve


def _field_specs(kind: str, fields: Mapping[int, DriftField]) -> Dict[str, PlotSpec]:
    specs = {}
    for t in sorted(fields):
        field_t = fields[t]
        grid = field_t.grid
        extent = (grid.x_min, grid.x_max, grid.y_min, grid.y_max)
        specs[f"heatmap_{kind}_t{t}"] = PlotSpec(
            kind='heatmap', title=f"{kind.capitalize()} drift magnitude, t = {t}", xlabel='x', ylabel='y',
            grid=field_t.magnitudes, extent=extent)
        spacing = min((grid.x_max - grid.x_min) / (grid.nx - 1), (grid.y_max - grid.y_min) / (grid.ny - 1))
        specs[f"quiver_{kind}_t{t}"] = PlotSpec(
            kind='quiver', title=f"{kind.capitalize()} drift, t = {t}", xlabel='x', ylabel='y',
            origins=grid.nodes, vectors=field_t.vectors.reshape(-1, 2), arrow_length=0.9 * spacing)
    return specs


def _trajectory_series(bundle: TrajectoryBundle, labels: np.ndarray) -> List[LineSeries]:
    series = []
    for label in sorted(set(int(k) for k in labels)):
        members = np.flatnonzero(labels == label)[:TRAJECTORIES_PER_CLUSTER]
        for i in members:
            series.append(LineSeries(xs=bundle.positions[i, :, 0], ys=bundle.positions[i, :, 1], color=label))
    return series


def figure_specs(dataset_name: str, config_name: str, metrics: Optional[FigureMetrics],
                 fields: Optional[Mapping[str, Mapping[int, DriftField]]],
                 bundle: Optional[TrajectoryBundle], losses: Optional[np.ndarray],
                 original: Optional[np.ndarray] = None,
                 comparison: Optional[Mapping[str, np.ndarray]] = None,
                 snapshot_steps: Optional[Sequence[int]] = None) -> Dict[str, PlotSpec]:
    """Every figure for one dataset/configuration, keyed by file stem"""
    missing = []
    if metrics is None:
        missing.append('metrics')
    if not fields or not any(fields.values()):
        missing.append('fields')
    if bundle is None or bundle.n_samples == 0:
        missing.append('trajectory bundle')
    if losses is None or len(losses) == 0:
        missing.append('per-timestep losses')
    if missing:
        raise PlotError(f"missing figure inputs: {', '.join(missing)}")

    where = f"{dataset_name} / {config_name}"
    specs: Dict[str, PlotSpec] = {}
    for kind in ('forward', 'backward'):
        specs.update(_field_specs(kind, fields.get(kind, {})))

    alignment = metrics.alignment
    specs['alignment'] = PlotSpec(
        kind='line', title=f"Drift alignment CS(t), {where}", xlabel='timestep t', ylabel='mean cosine similarity',
        series=[LineSeries(xs=alignment.timesteps, ys=alignment.cs)])

    counts, edges = np.histogram(metrics.displacement, bins=30)
    specs['displacement_hist'] = PlotSpec(
        kind='histogram', title=f"Trajectory displacement, {where}", xlabel='total path length',
        ylabel='samples', counts=counts, bin_edges=edges)

    specs['clusters_final'] = PlotSpec(
        kind='scatter', title=f"Trajectory clusters on final samples, {where}", xlabel='x', ylabel='y',
        points=bundle.final, labels=metrics.labels)

    specs['trajectories'] = PlotSpec(
        kind='line', title=f"Trajectories by cluster, {where}", xlabel='x', ylabel='y',
        series=_trajectory_series(bundle, np.asarray(metrics.labels, dtype=int)))

    specs['velocity'] = PlotSpec(
        kind='line', title=f"Reverse-process velocity, {where}", xlabel='reverse step', ylabel='mean displacement',
        series=[LineSeries(xs=np.arange(len(metrics.velocity)), ys=metrics.velocity)])

    specs['noise_mse'] = PlotSpec(
        kind='line', title=f"Noise prediction error, {where}", xlabel='timestep t', ylabel='MSE',
        series=[LineSeries(xs=np.arange(1, len(losses) + 1), ys=np.asarray(losses))])

    for step in snapshot_steps or []:
        if 0 <= step < bundle.n_steps:
            specs[f"snapshot_t{step}"] = PlotSpec(
                kind='scatter', title=f"Formation from noise, tau = {step}", xlabel='x', ylabel='y',
                points=bundle.positions[:, step, :])

    if original is not None and len(original):
        both = np.vstack([original, bundle.final])
        labels = np.concatenate([np.zeros(len(original), dtype=int), np.ones(bundle.n_samples, dtype=int)])
        specs['generated_vs_original'] = PlotSpec(
            kind='scatter', title=f"Original vs generated, {where}", xlabel='x', ylabel='y',
            points=both, labels=labels, label_names=['original', 'generated'])

    if comparison and len(comparison) > 1:
        everything = np.concatenate(list(comparison.values()))
        edges = np.histogram_bin_edges(everything, bins=30)
        centers = (edges[:-1] + edges[1:]) / 2.0
        series = []
        for color, name in enumerate(sorted(comparison)):
            counts, _ = np.histogram(comparison[name], bins=edges, density=True)
            series.append(LineSeries(xs=centers, ys=counts, name=name, color=color))
        specs['displacement_compare'] = PlotSpec(
            kind='line', title=f"Displacement by configuration, {dataset_name}", xlabel='total path length',
            ylabel='density', series=series)

    return specs


def figure_bundle(out_root: Union[str, Path], dataset_name: str, config_name: str,
                  metrics: Optional[FigureMetrics], fields: Optional[Mapping[str, Mapping[int, DriftField]]],
                  bundle: Optional[TrajectoryBundle], losses: Optional[np.ndarray],
                  original: Optional[np.ndarray] = None,
                  comparison: Optional[Mapping[str, np.ndarray]] = None,
                  snapshot_steps: Optional[Sequence[int]] = None) -> List[Path]:
    """Render every figure to <out_root>/<dataset>/<config>/<figure>.svg"""
    specs = figure_specs(dataset_name, config_name, metrics, fields, bundle, losses,
                         original=original, comparison=comparison, snapshot_steps=snapshot_steps)
    directory = Path(out_root) / dataset_name / config_name
    directory.mkdir(parents=True, exist_ok=True)

    written = []
    for name in sorted(specs):
        path = directory / f"{name}.svg"
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(render(specs[name]))
        written.append(path)
    logger.info(f"Rendered {len(written)} figures into {directory}")
    return written
