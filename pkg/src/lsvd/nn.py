"""Fully-connected networks with manual backpropagation.

Everything is float64 numpy.  Layers apply ``activation(w @ x + b)``; the
forward pass caches inputs and pre-activations so ``backward`` can produce
exact analytic gradients.  Batched inputs use one row per sample, and batch
gradients are accumulated by ordinary (deterministic) matrix products.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import json

import numpy as np

from .linalg import ShapeError

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class Activation:
    """Pointwise nonlinearity tag with parameters.

    kinds: linear, leaky_relu(gamma), sigmoid, softplus,
    bounded_sigmoid(c_min, c_max).  The leaky-ReLU derivative at 0 is taken
    as gamma.
    """

    kind: str
    gamma: float = 0.0
    c_min: float = 0.0
    c_max: float = 0.0

    def __post_init__(self):
        if self.kind not in ("linear", "leaky_relu", "sigmoid", "softplus", "bounded_sigmoid"):
            raise ValueError(f"unknown activation {self.kind!r}")
        if self.kind == "leaky_relu" and not 0.0 < self.gamma < 1.0:
            raise ValueError(f"leaky_relu gamma must be in (0, 1), got {self.gamma}")
        if self.kind == "bounded_sigmoid" and not self.c_min < self.c_max:
            raise ValueError("bounded_sigmoid needs c_min < c_max")

    def apply(self, z: np.ndarray) -> np.ndarray:
        if self.kind == "linear":
            return z
        if self.kind == "leaky_relu":
            return np.where(z > 0.0, z, self.gamma * z)
        if self.kind == "sigmoid":
            return _sigmoid(z)
        if self.kind == "softplus":
            return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))
        return (self.c_max - self.c_min) * _sigmoid(z) + self.c_min

    def derivative(self, z: np.ndarray) -> np.ndarray:
        if self.kind == "linear":
            return np.ones_like(z)
        if self.kind == "leaky_relu":
            return np.where(z > 0.0, 1.0, self.gamma)
        if self.kind == "sigmoid":
            sig = _sigmoid(z)
            return sig * (1.0 - sig)
        if self.kind == "softplus":
            return _sigmoid(z)
        sig = _sigmoid(z)
        return (self.c_max - self.c_min) * sig * (1.0 - sig)

    def lipschitz(self) -> float:
        """Global Lipschitz constant of the pointwise map."""
        if self.kind in ("linear", "softplus"):
            return 1.0
        if self.kind == "leaky_relu":
            return max(1.0, self.gamma)
        if self.kind == "sigmoid":
            return 0.25
        return 0.25 * (self.c_max - self.c_min)

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "leaky_relu":
            out["gamma"] = self.gamma
        if self.kind == "bounded_sigmoid":
            out["c_min"] = self.c_min
            out["c_max"] = self.c_max
        return out

    @staticmethod
    def from_json(obj: dict) -> "Activation":
        return Activation(
            obj["kind"],
            gamma=obj.get("gamma", 0.0),
            c_min=obj.get("c_min", 0.0),
            c_max=obj.get("c_max", 0.0),
        )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


LINEAR = Activation("linear")
SIGMOID = Activation("sigmoid")
SOFTPLUS = Activation("softplus")


def leaky_relu(gamma: float = 0.1) -> Activation:
    return Activation("leaky_relu", gamma=gamma)


def bounded_sigmoid(c_min: float = 1e-2, c_max: float = 10.0) -> Activation:
    return Activation("bounded_sigmoid", c_min=c_min, c_max=c_max)


@dataclass
class MlpLayer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray | None
    activation: Activation

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        if self.weight.ndim != 2:
            raise ShapeError(f"layer weight must be 2-D, got {self.weight.shape}")
        if self.bias is not None:
            self.bias = np.asarray(self.bias, dtype=np.float64)
            if self.bias.shape != (self.weight.shape[0],):
                raise ShapeError("bias length must match the layer output dimension")
        if not np.all(np.isfinite(self.weight)) or (
            self.bias is not None and not np.all(np.isfinite(self.bias))
        ):
            raise ValueError("layer parameters must be finite")


@dataclass
class MlpNetwork:
    layers: list[MlpLayer] = field(default_factory=list)

    def __post_init__(self):
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.weight.shape[0] != nxt.weight.shape[1]:
                raise ShapeError(
                    f"layer dims do not compose: {prev.weight.shape} then {nxt.weight.shape}"
                )

    @property
    def in_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.layers[-1].weight.shape[0]

    def parameters(self) -> list[np.ndarray]:
        params = []
        for layer in self.layers:
            params.append(layer.weight)
            if layer.bias is not None:
                params.append(layer.bias)
        return params


@dataclass
class ForwardCache:
    net: MlpNetwork
    inputs: list[np.ndarray]          # input to each layer
    preactivations: list[np.ndarray]  # w @ x + b per layer


def forward(net: MlpNetwork, x) -> tuple[np.ndarray, ForwardCache]:
    """Evaluate the network; x is (dim,) or (batch, dim) row-wise."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.in_dim:
        raise ShapeError(f"input has dim {x.shape[-1]}, network expects {net.in_dim}")
    inputs, pres = [], []
    out = x
    for layer in net.layers:
        inputs.append(out)
        z = out @ layer.weight.T
        if layer.bias is not None:
            z = z + layer.bias
        pres.append(z)
        out = layer.activation.apply(z)
    return out, ForwardCache(net, inputs, pres)


def backward(net: MlpNetwork, cache: ForwardCache, output_gradient):
    """Exact gradients of the cached forward pass.

    Returns (grads, input_gradient) where grads lists (d_weight, d_bias) per
    layer (d_bias None for bias-free layers) and input_gradient has the shape
    of the cached input.
    """
    if cache.net is not net or len(cache.inputs) != len(net.layers):
        raise ValueError("stale forward cache: it was built for a different network")
    g = np.asarray(output_gradient, dtype=np.float64)
    if g.shape != cache.preactivations[-1].shape:
        raise ShapeError(
            f"output gradient shape {g.shape} does not match forward output "
            f"{cache.preactivations[-1].shape}"
        )
    grads = [None] * len(net.layers)
    for idx in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[idx]
        gz = g * layer.activation.derivative(cache.preactivations[idx])
        x_in = cache.inputs[idx]
        if gz.ndim == 1:
            dw = np.outer(gz, x_in)
            db = gz.copy() if layer.bias is not None else None
        else:
            dw = gz.T @ x_in
            db = gz.sum(axis=0) if layer.bias is not None else None
        grads[idx] = (dw, db)
        g = gz @ layer.weight
    return grads, g


def mse_loss(target):
    """Mean-squared-error closure: returns (value, gradient wrt prediction).

    The mean runs over every element (batch and feature axes alike).
    """
    target = np.asarray(target, dtype=np.float64)

    def loss(pred):
        diff = pred - target
        return float(np.mean(diff**2)), (2.0 / diff.size) * diff

    return loss


def gradient_check(net: MlpNetwork, loss, x, h: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=np.float64)
    out, cache = forward(net, x)
    _, grad_out = loss(out)
    grads, _ = backward(net, cache, grad_out)
    worst = 0.0
    for layer, (dw, db) in zip(net.layers, grads):
        for param, analytic in ((layer.weight, dw), (layer.bias, db)):
            if param is None:
                continue
            flat = param.reshape(-1)
            aflat = analytic.reshape(-1)
            for i in range(flat.size):
                keep = flat[i]
                flat[i] = keep + h
                up, _ = loss(forward(net, x)[0])
                flat[i] = keep - h
                dn, _ = loss(forward(net, x)[0])
                flat[i] = keep
                numeric = (up - dn) / (2.0 * h)
                denom = max(abs(aflat[i]), abs(numeric), 1e-8)
                worst = max(worst, abs(aflat[i] - numeric) / denom)
    return worst


@dataclass
class AdamState:
    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @staticmethod
    def for_params(params) -> "AdamState":
        return AdamState(
            [np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params]
        )


def adam_step(params, grads, state: AdamState, lr: float, clip_norm: float | None = None):
    """One bias-corrected Adam update, applied in place.

    The concatenated gradient is rescaled to norm <= clip_norm first (no-op
    when clip_norm is None).  Returns (params, state) for convenience.
    """
    if lr <= 0:
        raise ValueError("lr must be positive")
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ShapeError("params, grads and Adam state lengths differ")
    total = 0.0
    for i, g in enumerate(grads):
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite gradient in parameter block {i}")
        total += float(np.sum(np.asarray(g) ** 2))
    gnorm = np.sqrt(total)
    scale = 1.0
    if clip_norm is not None and gnorm > clip_norm:
        scale = clip_norm / gnorm
    state.step += 1
    bc1 = 1.0 - state.beta1**state.step
    bc2 = 1.0 - state.beta2**state.step
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        g = np.asarray(g) * scale
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state


@dataclass(frozen=True)
class LrSchedule:
    """Geometric interpolation lr(t) = start * (final/start)^(t/total)."""

    start_lr: float
    final_lr: float
    total_steps: int

    def __post_init__(self):
        if self.start_lr <= 0 or self.final_lr <= 0:
            raise ValueError("learning rates must be positive")
        if self.total_steps < 1:
            raise ValueError("total_steps must be >= 1")

    def lr(self, step: int) -> float:
        frac = min(step, self.total_steps) / self.total_steps
        return self.start_lr * (self.final_lr / self.start_lr) ** frac


def init_network(dims, activations, with_bias: bool, seed: int) -> MlpNetwork:
    """Weights ~ N(0, 0.01^2), biases zero; reproducible for a fixed seed."""
    dims = list(dims)
    if len(dims) < 2:
        raise ValueError("need at least one layer (two dims)")
    if isinstance(activations, Activation):
        activations = [activations] * (len(dims) - 1)
    if len(activations) != len(dims) - 1:
        raise ValueError("one activation per layer required")
    rng = np.random.default_rng(seed)
    layers = []
    for i, act in enumerate(activations):
        w = rng.normal(0.0, 0.01, size=(dims[i + 1], dims[i]))
        b = np.zeros(dims[i + 1]) if with_bias else None
        layers.append(MlpLayer(w, b, act))
    return MlpNetwork(layers)


def geometric_dims(in_dim: int, out_dim: int, n_layers: int) -> list[int]:
    """Layer widths interpolated geometrically between in_dim and out_dim."""
    if n_layers < 1:
        raise ValueError("n_layers must be >= 1")
    ratio = (out_dim / in_dim) ** (1.0 / n_layers)
    dims = [in_dim]
    for i in range(1, n_layers):
        dims.append(max(1, round(in_dim * ratio**i)))
    dims.append(out_dim)
    return dims


def save_network(path, net: MlpNetwork, meta: dict | None = None) -> None:
    """Checkpoint: one JSON header line, then the raw little-endian float64 blob."""
    header = {
        "dims": [net.in_dim] + [layer.weight.shape[0] for layer in net.layers],
        "activations": [layer.activation.to_json() for layer in net.layers],
        "with_bias": [layer.bias is not None for layer in net.layers],
        "meta": meta or {},
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("ascii") + b"\n")
        for layer in net.layers:
            fh.write(np.ascontiguousarray(layer.weight, dtype="<f8").tobytes())
            if layer.bias is not None:
                fh.write(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())


def load_network(path) -> tuple[MlpNetwork, dict]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("ascii"))
        blob = fh.read()
    dims = header["dims"]
    offset = 0
    layers = []
    for i, (act, has_bias) in enumerate(zip(header["activations"], header["with_bias"])):
        out_dim, in_dim = dims[i + 1], dims[i]
        count = out_dim * in_dim
        w = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape(out_dim, in_dim)
        offset += count * 8
        b = None
        if has_bias:
            b = np.frombuffer(blob, dtype="<f8", count=out_dim, offset=offset)
            offset += out_dim * 8
        layers.append(MlpLayer(w.copy(), None if b is None else b.copy(), Activation.from_json(act)))
    if offset != len(blob):
        raise ValueError(f"checkpoint blob has {len(blob)} bytes, expected {offset}")
    return MlpNetwork(layers), header["meta"]
