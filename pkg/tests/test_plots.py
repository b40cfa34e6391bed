import xml.etree.ElementTree as ET

import numpy as np
import pytest

from diffusion import sample
from driftfield import AlignmentCurve, Grid2D, backward_fields, forward_drift
from errors import PlotError
from plots import FigureMetrics, LineSeries, PlotSpec, data_frame, figure_bundle, figure_specs, nice_ticks, render

SVG = '{http://www.w3.org/2000/svg}'


def _marks(document: str, tag: str):
    root = ET.fromstring(document.split('\n', 1)[1])
    marks = [g for g in root.iter(f'{SVG}g') if g.get('class') == 'marks']
    assert len(marks) == 1
    return list(marks[0].iter(f'{SVG}{tag}'))


def test_svg_document_header():
    document = render(PlotSpec(kind='scatter', points=np.array([[0.0, 0.0], [1.0, 1.0]]), title='t'))
    assert document.startswith('<?xml version="1.0" encoding="UTF-8"?>\n')
    root = ET.fromstring(document.split('\n', 1)[1])
    assert root.tag == f'{SVG}svg'
    assert (root.get('width'), root.get('height'), root.get('viewBox')) == ('640', '480', '0 0 640 480')


def test_scatter_coordinates_invert_to_data():
    points = np.array([[0.0, 0.0], [2.0, 1.0], [-1.0, 3.0]])
    spec = PlotSpec(kind='scatter', points=points, labels=np.array([0, 1, 1]))
    circles = _marks(render(spec), 'circle')
    assert len(circles) == 3
    pixels = np.array([[float(c.get('cx')), float(c.get('cy'))] for c in circles])
    np.testing.assert_allclose(data_frame(spec).unproject(pixels), points, atol=1e-6)
    assert circles[1].get('fill') == circles[2].get('fill') != circles[0].get('fill')


def test_quiver_arrow_points_along_vector():
    spec = PlotSpec(kind='quiver', origins=np.array([[0.0, 0.0]]), vectors=np.array([[1.0, 0.0]]))
    arrows = _marks(render(spec), 'line')
    assert len(arrows) == 1
    x1, y1, x2, y2 = (float(arrows[0].get(k)) for k in ('x1', 'y1', 'x2', 'y2'))
    assert x2 > x1
    assert y2 == pytest.approx(y1)
    np.testing.assert_allclose(data_frame(spec).unproject(np.array([[x2, y2]])), [[1.0, 0.0]], atol=1e-6)


def test_quiver_up_vector_points_up_on_screen():
    spec = PlotSpec(kind='quiver', origins=np.array([[0.0, 0.0], [1.0, 0.0]]),
                    vectors=np.array([[0.0, 1.0], [0.0, 0.5]]), arrow_length=0.5)
    lines = _marks(render(spec), 'line')
    assert all(float(line.get('y2')) < float(line.get('y1')) for line in lines)


def test_heatmap_has_one_cell_per_node_and_darkens_with_value():
    values = np.array([[0.0, 1.0, 2.0], [3.0, 4.0, 5.0]])
    cells = _marks(render(PlotSpec(kind='heatmap', grid=values, extent=(0.0, 2.0, 0.0, 1.0))), 'rect')
    assert len(cells) == 6
    assert cells[0].get('fill') == '#f7fbff'
    assert cells[-1].get('fill') == '#08306b'


def test_histogram_bars():
    spec = PlotSpec(kind='histogram', counts=np.array([1, 3, 2]), bin_edges=np.array([0.0, 1.0, 2.0, 3.0]))
    bars = _marks(render(spec), 'rect')
    heights = [float(bar.get('height')) for bar in bars]
    assert len(bars) == 3
    assert heights[1] == pytest.approx(3 * heights[0])


def test_line_breaks_at_missing_values():
    spec = PlotSpec(kind='line', series=[LineSeries(xs=np.arange(5.0), ys=np.array([1.0, 2.0, np.nan, 3.0, 4.0]))])
    assert len(_marks(render(spec), 'polyline')) == 2


def test_line_without_defined_values_renders_empty_axes():
    spec = PlotSpec(kind='line', series=[LineSeries(xs=np.arange(1.0, 4.0), ys=np.full(3, np.nan), name='cs')])
    assert _marks(render(spec), 'polyline') == []
    frame = data_frame(spec)
    assert np.isfinite([frame.y_min, frame.y_max]).all()


def test_render_is_deterministic():
    spec = PlotSpec(kind='scatter', points=np.random.default_rng(0).normal(size=(50, 2)))
    assert render(spec) == render(spec)


@pytest.mark.parametrize('spec', [
    PlotSpec(kind='scatter', points=np.array([[0.0, np.inf]])),
    PlotSpec(kind='scatter', points=np.empty((0, 2))),
    PlotSpec(kind='pie'),
    PlotSpec(kind='histogram', counts=np.array([1, 2]), bin_edges=np.array([0.0, 1.0])),
])
def test_invalid_specs_raise(spec):
    with pytest.raises(PlotError):
        render(spec)


def test_nice_ticks():
    assert nice_ticks(0.0, 10.0) == [0.0, 2.0, 4.0, 6.0, 8.0, 10.0]
    assert nice_ticks(-0.3, 0.3) == [-0.2, 0.0, 0.2]


@pytest.fixture
def figure_inputs(tiny_model, schedule):
    bundle = sample(tiny_model, schedule, 30, np.random.default_rng(0))
    grid = Grid2D(-2, 2, -2, 2, nx=5, ny=5)
    data = np.random.default_rng(1).normal(size=(20, 2))
    fields = {
        'forward': {t: forward_drift(grid, t, data, schedule) for t in (1, 10)},
        'backward': {t: f for t, f in backward_fields(grid, tiny_model, schedule).items() if t in (1, 10)},
    }
    metrics = FigureMetrics(
        displacement=np.random.default_rng(2).uniform(1, 3, size=30),
        velocity=np.linspace(1.0, 0.1, schedule.T),
        labels=np.arange(30) % 3,
        alignment=AlignmentCurve(timesteps=np.arange(1, 11), cs=np.linspace(0.1, 0.9, 10),
                                 included=np.full(10, 30), excluded=np.zeros(10, dtype=int)),
    )
    return dict(metrics=metrics, fields=fields, bundle=bundle, losses=np.linspace(1.0, 0.5, schedule.T),
                original=data)


def test_figure_specs_cover_every_figure(figure_inputs):
    specs = figure_specs('circle', 'fourier-fourier-0.95', snapshot_steps=[2, 4], **figure_inputs)
    expected = {'alignment', 'displacement_hist', 'clusters_final', 'trajectories', 'velocity', 'noise_mse',
                'snapshot_t2', 'snapshot_t4', 'generated_vs_original'}
    for kind in ('forward', 'backward'):
        for t in (1, 10):
            expected |= {f'heatmap_{kind}_t{t}', f'quiver_{kind}_t{t}'}
    assert set(specs) == expected
    assert 'circle / fourier-fourier-0.95' in specs['alignment'].title


def test_figure_specs_name_missing_inputs(figure_inputs):
    figure_inputs.update(metrics=None, losses=np.empty(0))
    with pytest.raises(PlotError, match="metrics, per-timestep losses"):
        figure_specs('circle', 'fourier-fourier-0.95', **figure_inputs)


def test_figure_bundle_writes_parseable_svgs(tmp_path, figure_inputs):
    comparison = {'identity-zero-0.95': np.full(10, 2.0), 'fourier-fourier-0.95': np.linspace(1, 3, 10)}
    paths = figure_bundle(tmp_path, 'circle', 'fourier-fourier-0.95', comparison=comparison, **figure_inputs)
    assert paths == sorted(paths)
    assert tmp_path / 'circle' / 'fourier-fourier-0.95' / 'displacement_compare.svg' in paths
    for path in paths:
        ET.fromstring(path.read_text().split('\n', 1)[1])
