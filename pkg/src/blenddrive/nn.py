"""Dense-network core: forward, exact reverse-mode gradients, Adam.

Everything is 64-bit numpy and purely functional: updates return new
parameter values. Inputs may be single vectors (d,) or batches (n, d);
parameter gradients are summed over the batch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("relu", "tanh", "identity")


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class DenseLayer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray     # (out,)
    activation: str


@dataclass(frozen=True)
class NetworkParams:
    layers: tuple[DenseLayer, ...]

    @property
    def input_dim(self) -> int:
        return self.layers[0].weights.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weights.shape[0]


@dataclass(frozen=True)
class Gradients:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    input_grad: np.ndarray


@dataclass(frozen=True)
class Tape:
    inputs: tuple[np.ndarray, ...]   # layer inputs, 2-D
    preacts: tuple[np.ndarray, ...]  # pre-activation values, 2-D
    squeeze: bool                    # original input was 1-D


def init_mlp(sizes: list[int], hidden_activation: str = "relu",
             output_activation: str = "tanh",
             rng: np.random.Generator | None = None) -> NetworkParams:
    """Hidden layers uniform(+-1/sqrt(fan_in)); output layer uniform(+-3e-3)."""
    if rng is None:
        rng = np.random.default_rng(0)
    layers = []
    for i in range(len(sizes) - 1):
        fan_in, fan_out = sizes[i], sizes[i + 1]
        last = i == len(sizes) - 2
        bound = 3e-3 if last else 1.0 / math.sqrt(fan_in)
        layers.append(DenseLayer(
            weights=rng.uniform(-bound, bound, (fan_out, fan_in)),
            bias=rng.uniform(-bound, bound, fan_out),
            activation=output_activation if last else hidden_activation,
        ))
    return NetworkParams(tuple(layers))


def _check_activation(name: str) -> None:
    if name not in ACTIVATIONS:
        raise ShapeError(f"unknown activation {name!r}")


def _apply(act: str, z: np.ndarray) -> np.ndarray:
    if act == "relu":
        return np.maximum(z, 0.0)
    if act == "tanh":
        return np.tanh(z)
    return z


def _deriv(act: str, z: np.ndarray) -> np.ndarray:
    if act == "relu":
        return (z > 0.0).astype(z.dtype)
    if act == "tanh":
        return 1.0 - np.tanh(z) ** 2
    return np.ones_like(z)


def mlp_forward(params: NetworkParams, x: np.ndarray) -> tuple[np.ndarray, Tape]:
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    a = x.reshape(1, -1) if squeeze else x
    if a.shape[1] != params.input_dim:
        raise ShapeError(f"input width {a.shape[1]} != network input "
                         f"{params.input_dim}")
    inputs, preacts = [], []
    for layer in params.layers:
        _check_activation(layer.activation)
        inputs.append(a)
        z = a @ layer.weights.T + layer.bias
        preacts.append(z)
        a = _apply(layer.activation, z)
    out = a[0] if squeeze else a
    return out, Tape(tuple(inputs), tuple(preacts), squeeze)


def mlp_backward(params: NetworkParams, tape: Tape,
                 upstream: np.ndarray) -> Gradients:
    """Gradients of sum(upstream * output) w.r.t. parameters and input."""
    upstream = np.asarray(upstream, dtype=np.float64)
    delta = upstream.reshape(1, -1) if tape.squeeze else upstream
    if delta.shape != tape.preacts[-1].shape:
        raise ShapeError(f"upstream shape {upstream.shape} does not match "
                         f"output shape {tape.preacts[-1].shape}")
    n = len(params.layers)
    w_grads: list[np.ndarray] = [None] * n
    b_grads: list[np.ndarray] = [None] * n
    for i in range(n - 1, -1, -1):
        layer = params.layers[i]
        delta = delta * _deriv(layer.activation, tape.preacts[i])
        w_grads[i] = delta.T @ tape.inputs[i]
        b_grads[i] = delta.sum(axis=0)
        delta = delta @ layer.weights
    input_grad = delta[0] if tape.squeeze else delta
    return Gradients(tuple(w_grads), tuple(b_grads), input_grad)


# --------------------------------------------------------------------------
# Adam
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AdamState:
    step: int
    m_w: tuple[np.ndarray, ...]
    v_w: tuple[np.ndarray, ...]
    m_b: tuple[np.ndarray, ...]
    v_b: tuple[np.ndarray, ...]


def adam_init(params: NetworkParams) -> AdamState:
    zw = tuple(np.zeros_like(l.weights) for l in params.layers)
    zb = tuple(np.zeros_like(l.bias) for l in params.layers)
    return AdamState(0, zw, tuple(np.copy(a) for a in zw),
                     zb, tuple(np.copy(a) for a in zb))


def adam_step(params: NetworkParams, grads: Gradients, lr: float,
              state: AdamState, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> tuple[NetworkParams, AdamState]:
    """One Adam step in the negative-gradient direction."""
    for g in (*grads.weights, *grads.biases):
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient in adam_step")
    t = state.step + 1
    corr1 = 1.0 - beta1 ** t
    corr2 = 1.0 - beta2 ** t
    new_layers, m_w, v_w, m_b, v_b = [], [], [], [], []
    for i, layer in enumerate(params.layers):
        mw = beta1 * state.m_w[i] + (1.0 - beta1) * grads.weights[i]
        vw = beta2 * state.v_w[i] + (1.0 - beta2) * grads.weights[i] ** 2
        mb = beta1 * state.m_b[i] + (1.0 - beta1) * grads.biases[i]
        vb = beta2 * state.v_b[i] + (1.0 - beta2) * grads.biases[i] ** 2
        w = layer.weights - lr * (mw / corr1) / (np.sqrt(vw / corr2) + eps)
        b = layer.bias - lr * (mb / corr1) / (np.sqrt(vb / corr2) + eps)
        new_layers.append(DenseLayer(w, b, layer.activation))
        m_w.append(mw); v_w.append(vw); m_b.append(mb); v_b.append(vb)
    return (NetworkParams(tuple(new_layers)),
            AdamState(t, tuple(m_w), tuple(v_w), tuple(m_b), tuple(v_b)))


def scale_gradients(grads: Gradients, factor: float) -> Gradients:
    return Gradients(tuple(factor * g for g in grads.weights),
                     tuple(factor * g for g in grads.biases),
                     factor * grads.input_grad)


# --------------------------------------------------------------------------
# Finite-difference verification
# --------------------------------------------------------------------------

def finite_diff_check(params: NetworkParams, x: np.ndarray, h: float,
                      upstream: np.ndarray) -> float:
    """Worst relative error of mlp_backward vs central differences.

    relu networks are checked away from kinks only; passing an input that
    lands a pre-activation exactly on 0 is the caller's responsibility.
    """
    if h <= 0.0:
        raise ValueError("h must be positive")
    out, tape = mlp_forward(params, x)
    analytic = mlp_backward(params, tape, upstream)

    def objective(p: NetworkParams) -> float:
        y, _ = mlp_forward(p, x)
        return float(np.sum(np.asarray(upstream) * y))

    worst = 0.0
    for i, layer in enumerate(params.layers):
        for attr, grad in (("weights", analytic.weights[i]),
                           ("bias", analytic.biases[i])):
            arr = getattr(layer, attr)
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                perturbed = arr.copy()
                perturbed[idx] += h
                plus = objective(_with(params, i, attr, perturbed))
                perturbed[idx] -= 2.0 * h
                minus = objective(_with(params, i, attr, perturbed))
                numeric = (plus - minus) / (2.0 * h)
                a = float(grad[idx])
                err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-6)
                worst = max(worst, err)
    return worst


def _with(params: NetworkParams, i: int, attr: str,
          value: np.ndarray) -> NetworkParams:
    layers = list(params.layers)
    old = layers[i]
    if attr == "weights":
        layers[i] = DenseLayer(value, old.bias, old.activation)
    else:
        layers[i] = DenseLayer(old.weights, value, old.activation)
    return NetworkParams(tuple(layers))


# --------------------------------------------------------------------------
# Portable text weight format
# --------------------------------------------------------------------------

FORMAT_MAGIC = "mlpv1"


def save_params(params: NetworkParams, path: str) -> None:
    """`mlpv1 <n>` header, then per layer `<out> <in> <activation>` followed
    by out*in weights and out biases at 17 significant digits."""
    with open(path, "w") as fh:
        fh.write(f"{FORMAT_MAGIC} {len(params.layers)}\n")
        for layer in params.layers:
            out, inp = layer.weights.shape
            fh.write(f"{out} {inp} {layer.activation}\n")
            fh.write(" ".join("%.17g" % v for v in layer.weights.ravel()) + "\n")
            fh.write(" ".join("%.17g" % v for v in layer.bias) + "\n")


def load_params(path: str) -> NetworkParams:
    with open(path) as fh:
        tokens = fh.read().split()
    pos = 0

    def take(n):
        nonlocal pos
        chunk = tokens[pos:pos + n]
        if len(chunk) < n:
            raise ValueError(f"truncated weight file {path!r}")
        pos += n
        return chunk

    magic, count = take(2)
    if magic != FORMAT_MAGIC:
        raise ValueError(f"bad magic {magic!r} in {path!r}")
    layers = []
    for _ in range(int(count)):
        out_s, in_s, act = take(3)
        out, inp = int(out_s), int(in_s)
        _check_activation(act)
        w = np.array([float(v) for v in take(out * inp)]).reshape(out, inp)
        b = np.array([float(v) for v in take(out)])
        layers.append(DenseLayer(w, b, act))
    return NetworkParams(tuple(layers))
