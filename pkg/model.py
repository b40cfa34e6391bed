"""
Noise-prediction network eps_theta.

A five-layer ReLU MLP (in_dim -> 64 -> 64 -> 64 -> 64 -> 2) over the
concatenation of an input embedding of x_t and a time embedding of t, with
hand-written backpropagation and Adam with global-norm gradient clipping.

Embedding layouts are fixed: input Fourier features are [32 sines; 32 cosines]
of B x, time Fourier features are [16 sines; 16 cosines] of B_t s with
s = t/T - 0.5. B and B_t are raw standard-normal draws, frozen at creation.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from config import rng_for
from errors import ModelFormatError

logger = logging.getLogger(__name__)

INPUT_MODES = ('identity', 'fourier')
TIME_MODES = ('zero', 'linear', 'fourier')

N_INPUT_FEATURES = 32   # rows of B
N_TIME_FEATURES = 16    # rows of B_t
HIDDEN_WIDTH = 64
N_HIDDEN = 4
OUTPUT_DIM = 2

FORMAT_HEADER = 'INJECTED-MODEL v2'
LEGACY_HEADER = 'INJECTED-MODEL v1'  # no alpha_max line, implies 0.9999


@dataclass(frozen=True)
class EmbeddingConfig:
    input_mode: str = 'fourier'
    time_mode: str = 'fourier'

    def __post_init__(self):
        if self.input_mode not in INPUT_MODES:
            raise ValueError(f"input_mode must be one of {INPUT_MODES}, got '{self.input_mode}'")
        if self.time_mode not in TIME_MODES:
            raise ValueError(f"time_mode must be one of {TIME_MODES}, got '{self.time_mode}'")

    @property
    def input_dim(self) -> int:
        return 2 if self.input_mode == 'identity' else 2 * N_INPUT_FEATURES

    @property
    def time_dim(self) -> int:
        return {'zero': 0, 'linear': 1, 'fourier': 2 * N_TIME_FEATURES}[self.time_mode]

    @property
    def tag(self) -> str:
        return f"{self.input_mode}-{self.time_mode}"


@dataclass
class FourierBases:
    B: np.ndarray    # (32, 2)
    B_t: np.ndarray  # (16, 1)
    seed: int

    @classmethod
    def from_seed(cls, seed: int) -> 'FourierBases':
        rng = rng_for(seed, 'bases')
        B = rng.standard_normal((N_INPUT_FEATURES, 2))
        B_t = rng.standard_normal((N_TIME_FEATURES, 1))
        return cls(B=B, B_t=B_t, seed=seed)


@dataclass
class DenoiserModel:
    weights: List[np.ndarray]   # weights[l] has shape (fan_in, fan_out)
    biases: List[np.ndarray]    # biases[l] has shape (fan_out,)
    embed: EmbeddingConfig
    bases: FourierBases
    T: int = 50
    alpha_min: float = 0.95
    seed: int = 0
    alpha_max: float = 0.9999

    @property
    def in_dim(self) -> int:
        return self.embed.input_dim + self.embed.time_dim

    @property
    def layer_sizes(self) -> List[int]:
        return [self.in_dim] + [HIDDEN_WIDTH] * N_HIDDEN + [OUTPUT_DIM]

    def parameters(self) -> List[np.ndarray]:
        """Trainable arrays in fixed order W0, b0, W1, b1, ..."""
        params = []
        for W, b in zip(self.weights, self.biases):
            params.extend([W, b])
        return params

    def copy(self) -> 'DenoiserModel':
        return DenoiserModel(
            weights=[W.copy() for W in self.weights],
            biases=[b.copy() for b in self.biases],
            embed=self.embed,
            bases=FourierBases(B=self.bases.B.copy(), B_t=self.bases.B_t.copy(), seed=self.bases.seed),
            T=self.T,
            alpha_min=self.alpha_min,
            seed=self.seed,
            alpha_max=self.alpha_max,
        )


@dataclass
class AdamState:
    m: List[np.ndarray]
    v: List[np.ndarray]
    step: int = 0
    learning_rate: float = 4e-4
    clip_norm: float = 1.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_model(cls, model: DenoiserModel, learning_rate: float = 4e-4,
                  clip_norm: float = 1.0) -> 'AdamState':
        params = model.parameters()
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params],
                   learning_rate=learning_rate, clip_norm=clip_norm)


def create_model(embed: EmbeddingConfig, T: int = 50, alpha_min: float = 0.95,
                 seed: int = 0, alpha_max: float = 0.9999) -> DenoiserModel:
    """Fresh model: seeded Fourier bases, uniform(+-1/sqrt(fan_in)) weights and biases"""
    bases = FourierBases.from_seed(seed)
    rng = rng_for(seed, 'init')
    sizes = [embed.input_dim + embed.time_dim] + [HIDDEN_WIDTH] * N_HIDDEN + [OUTPUT_DIM]

    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=(fan_out,)))

    logger.debug(f"Created {embed.tag} model, layers {sizes}, seed {seed}")
    return DenoiserModel(weights=weights, biases=biases, embed=embed, bases=bases,
                         T=T, alpha_min=alpha_min, seed=seed, alpha_max=alpha_max)


def embed_input(x: np.ndarray, mode: str, bases: FourierBases) -> np.ndarray:
    """(..., 2) -> (..., 2) for identity or (..., 64) for fourier"""
    x = np.asarray(x, dtype=float)
    if mode == 'identity':
        return x.copy()
    if mode == 'fourier':
        proj = x @ bases.B.T
        return np.concatenate([np.sin(proj), np.cos(proj)], axis=-1)
    raise ValueError(f"Unknown input mode '{mode}'")


def embed_time(t, T: int, mode: str, bases: FourierBases) -> np.ndarray:
    """Scalar t -> vector; array t of shape (B,) -> (B, time_dim)"""
    s = np.asarray(t, dtype=float) / T - 0.5
    if mode == 'zero':
        return np.zeros(s.shape + (0,))
    if mode == 'linear':
        return s[..., None]
    if mode == 'fourier':
        proj = s[..., None] @ bases.B_t.T
        return np.concatenate([np.sin(proj), np.cos(proj)], axis=-1)
    raise ValueError(f"Unknown time mode '{mode}'")


def _features(model: DenoiserModel, x_batch: np.ndarray, t_batch, T: int) -> np.ndarray:
    x_batch = np.asarray(x_batch, dtype=float).reshape(-1, 2)
    t_batch = np.broadcast_to(np.asarray(t_batch), (len(x_batch),))
    return np.concatenate([
        embed_input(x_batch, model.embed.input_mode, model.bases),
        embed_time(t_batch, T, model.embed.time_mode, model.bases),
    ], axis=1)


def _forward(model: DenoiserModel, h: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray], List[np.ndarray]]:
    """Returns output plus per-layer inputs and hidden pre-activations for backprop"""
    inputs, pre_acts = [], []
    last = len(model.weights) - 1
    for layer, (W, b) in enumerate(zip(model.weights, model.biases)):
        inputs.append(h)
        z = h @ W + b
        if layer == last:
            return z, inputs, pre_acts
        pre_acts.append(z)
        h = np.maximum(z, 0.0)
    raise ModelFormatError("model has no layers")


def predict_noise(model: DenoiserModel, x_batch: np.ndarray, t_batch, T: Optional[int] = None) -> np.ndarray:
    """(B, 2) points and (B,) or scalar timesteps -> (B, 2) predicted noise"""
    T = model.T if T is None else T
    out, _, _ = _forward(model, _features(model, x_batch, t_batch, T))
    return out


def loss_and_gradients(model: DenoiserModel, x_batch: np.ndarray, t_batch, eps_target: np.ndarray,
                       T: Optional[int] = None) -> Tuple[float, List[np.ndarray]]:
    """MSE over all B x 2 entries and its exact gradients, ordered like model.parameters()"""
    T = model.T if T is None else T
    eps_target = np.asarray(eps_target, dtype=float).reshape(-1, 2)
    out, inputs, pre_acts = _forward(model, _features(model, x_batch, t_batch, T))

    diff = out - eps_target
    loss = float(np.mean(diff ** 2))

    grad_w: List[np.ndarray] = [None] * len(model.weights)
    grad_b: List[np.ndarray] = [None] * len(model.biases)
    delta = 2.0 * diff / diff.size
    for layer in range(len(model.weights) - 1, -1, -1):
        grad_w[layer] = inputs[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ model.weights[layer].T) * (pre_acts[layer - 1] > 0.0)

    grads = []
    for gW, gb in zip(grad_w, grad_b):
        grads.extend([gW, gb])
    return loss, grads


def global_norm(arrays: List[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(a * a)) for a in arrays)))


def clip_gradients(grads: List[np.ndarray], clip_norm: float) -> List[np.ndarray]:
    """Rescale jointly so the global L2 norm is at most clip_norm"""
    norm = global_norm(grads)
    if norm <= clip_norm or norm == 0.0:
        return grads
    scale = clip_norm / norm
    return [g * scale for g in grads]


def adam_step(model: DenoiserModel, grads: List[np.ndarray], state: AdamState) -> Tuple[DenoiserModel, AdamState]:
    """Clip, then one bias-corrected Adam update applied to the model in place"""
    params = model.parameters()
    if len(grads) != len(params):
        raise ValueError(f"expected {len(params)} gradient arrays, got {len(grads)}")

    grads = clip_gradients(grads, state.clip_norm)
    state.step += 1
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step

    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        p -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)

    return model, state


def _tensor_names(model: DenoiserModel) -> List[Tuple[str, np.ndarray]]:
    tensors = [('B', model.bases.B), ('B_t', model.bases.B_t)]
    for layer, (W, b) in enumerate(zip(model.weights, model.biases)):
        tensors.append((f'W{layer}', W))
        tensors.append((f'b{layer}', b.reshape(1, -1)))
    return tensors


def save_model(model: DenoiserModel, path: Union[str, Path]):
    """Versioned text format; '%.17g' decimals round-trip every float64 exactly"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        FORMAT_HEADER,
        f"input_mode={model.embed.input_mode}",
        f"time_mode={model.embed.time_mode}",
        f"alpha_min={model.alpha_min!r}",
        f"alpha_max={model.alpha_max!r}",
        f"T={model.T}",
        f"seed={model.seed}",
    ]
    for name, tensor in _tensor_names(model):
        rows, cols = tensor.shape
        lines.append(f"tensor {name} {rows} {cols}")
        for row in tensor:
            lines.append(" ".join(f"{value:.17g}" for value in row))

    with open(path, 'w', encoding='utf-8') as f:
        f.write("\n".join(lines) + "\n")
    logger.info(f"Saved {model.embed.tag} model to {path}")


def load_model(path: Union[str, Path]) -> DenoiserModel:
    path = Path(path)
    if not path.exists():
        raise ModelFormatError("model file not found", path=str(path))
    with open(path, 'r', encoding='utf-8') as f:
        lines = f.read().splitlines()

    version = lines[0].strip() if lines else ''
    if version not in (FORMAT_HEADER, LEGACY_HEADER):
        raise ModelFormatError(f"missing '{FORMAT_HEADER}' header", path=str(path), line=1)

    header = {'alpha_max': '0.9999'}
    expected_keys = ('input_mode', 'time_mode', 'alpha_min', 'alpha_max', 'T', 'seed')
    if version == LEGACY_HEADER:
        expected_keys = tuple(key for key in expected_keys if key != 'alpha_max')
    for offset, key in enumerate(expected_keys, start=2):
        if offset > len(lines) or '=' not in lines[offset - 1]:
            raise ModelFormatError(f"expected '{key}=...'", path=str(path), line=offset)
        name, value = lines[offset - 1].split('=', 1)
        if name.strip() != key:
            raise ModelFormatError(f"expected '{key}=...', found '{name}'", path=str(path), line=offset)
        header[key] = value.strip()

    try:
        embed = EmbeddingConfig(header['input_mode'], header['time_mode'])
        alpha_min = float(header['alpha_min'])
        alpha_max = float(header['alpha_max'])
        T = int(header['T'])
        seed = int(header['seed'])
    except ValueError as e:
        raise ModelFormatError(f"invalid header value: {e}", path=str(path))

    tensors = {}
    index = len(expected_keys) + 1
    while index < len(lines):
        lineno = index + 1
        parts = lines[index].split()
        index += 1
        if not parts:
            continue
        if len(parts) != 4 or parts[0] != 'tensor':
            raise ModelFormatError(f"expected 'tensor <name> <rows> <cols>'", path=str(path), line=lineno)
        name = parts[1]
        try:
            rows, cols = int(parts[2]), int(parts[3])
        except ValueError:
            raise ModelFormatError("invalid tensor shape", path=str(path), line=lineno, tensor=name)
        if index + rows > len(lines):
            raise ModelFormatError(f"truncated: expected {rows} rows", path=str(path), line=lineno, tensor=name)
        data = np.empty((rows, cols))
        for r in range(rows):
            values = lines[index].split()
            if len(values) != cols:
                raise ModelFormatError(f"expected {cols} values, found {len(values)}",
                                       path=str(path), line=index + 1, tensor=name)
            try:
                data[r] = [float(v) for v in values]
            except ValueError:
                raise ModelFormatError("non-numeric value", path=str(path), line=index + 1, tensor=name)
            index += 1
        tensors[name] = data

    sizes = [embed.input_dim + embed.time_dim] + [HIDDEN_WIDTH] * N_HIDDEN + [OUTPUT_DIM]
    expected = {'B': (N_INPUT_FEATURES, 2), 'B_t': (N_TIME_FEATURES, 1)}
    for layer, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        expected[f'W{layer}'] = (fan_in, fan_out)
        expected[f'b{layer}'] = (1, fan_out)
    for name, shape in expected.items():
        if name not in tensors:
            raise ModelFormatError("missing tensor", path=str(path), tensor=name)
        if tensors[name].shape != shape:
            raise ModelFormatError(f"shape {tensors[name].shape} != expected {shape}", path=str(path), tensor=name)

    n_layers = len(sizes) - 1
    return DenoiserModel(
        weights=[tensors[f'W{layer}'] for layer in range(n_layers)],
        biases=[tensors[f'b{layer}'].reshape(-1) for layer in range(n_layers)],
        embed=embed,
        bases=FourierBases(B=tensors['B'], B_t=tensors['B_t'], seed=seed),
        T=T,
        alpha_min=alpha_min,
        seed=seed,
        alpha_max=alpha_max,
    )
