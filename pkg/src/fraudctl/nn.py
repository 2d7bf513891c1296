"""Fully-connected encoder with hand-written forward/backward passes and Adam.

The architecture family is fixed: a chain of affine layers with ReLU on
hidden layers and identity on the output. Backpropagation is derived by hand
for this family, in float64 throughout; correctness is pinned by finite
difference checks in the test suite. An optional projection stack of the
same family sits on top of the encoder during contrastive training.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DataError, NumericError

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths of the encoder plus an optional projection stack.

    layer_dims runs input through embedding, e.g. (10, 64, 64, 32).
    projection_dims, when present, must start at the embedding width.
    """

    layer_dims: tuple[int, ...]
    projection_dims: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "layer_dims", tuple(int(d) for d in self.layer_dims))
        if self.projection_dims is not None:
            object.__setattr__(
                self, "projection_dims", tuple(int(d) for d in self.projection_dims)
            )
        if len(self.layer_dims) < 2:
            raise ConfigError("layer_dims needs at least input and output widths")
        if any(d < 1 for d in self.layer_dims):
            raise ConfigError(f"layer widths must be >= 1, got {self.layer_dims}")
        if self.projection_dims is not None:
            if len(self.projection_dims) < 2:
                raise ConfigError("projection_dims needs at least two widths")
            if any(d < 1 for d in self.projection_dims):
                raise ConfigError(
                    f"projection widths must be >= 1, got {self.projection_dims}"
                )
            if self.projection_dims[0] != self.layer_dims[-1]:
                raise ConfigError(
                    f"projection input width {self.projection_dims[0]} must equal "
                    f"embedding width {self.layer_dims[-1]}"
                )

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def embedding_dim(self) -> int:
        return self.layer_dims[-1]


@dataclass
class MlpParams:
    """Weights and biases of one affine chain; weights[l] is (fan_in, fan_out)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0], *(w.shape[1] for w in self.weights))

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def arrays(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    @classmethod
    def from_arrays(cls, arrays: Sequence[np.ndarray], n_layers: int) -> "MlpParams":
        return cls(list(arrays[:n_layers]), list(arrays[n_layers:]))


@dataclass
class MlpGrads:
    """Parameter gradients, shaped exactly like the MlpParams they belong to."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def arrays(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]


def init_params(dims: Sequence[int], seed: int | np.random.Generator) -> MlpParams:
    """Glorot-uniform weights, W ~ U(-a, a) with a = sqrt(6/(fan_in+fan_out)); zero biases."""
    dims = tuple(int(d) for d in dims)
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ConfigError(f"invalid layer dims {dims}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        a = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-a, a, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases)


@dataclass
class ForwardCache:
    """Activations retained by forward() for the matching backward() call."""

    inputs: list[np.ndarray]  # input to each layer
    pre: list[np.ndarray]     # pre-activation of each layer


def forward(params: MlpParams, batch: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Row-wise affine/ReLU chain; identity on the last layer.

    Returns the output matrix and the cache needed by backward().
    """
    x = np.asarray(batch, dtype=float)
    if x.ndim != 2:
        raise DataError(f"expected a 2-D batch, got shape {x.shape}")
    if x.shape[1] != params.weights[0].shape[0]:
        raise DataError(
            f"batch has {x.shape[1]} columns, network expects "
            f"{params.weights[0].shape[0]}"
        )
    inputs, pre = [], []
    h = x
    last = len(params.weights) - 1
    for l, (W, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(h)
        z = h @ W + b
        pre.append(z)
        h = np.maximum(z, 0.0) if l < last else z
    return h, ForwardCache(inputs=inputs, pre=pre)


def backward(
    params: MlpParams, cache: ForwardCache, upstream_grad: np.ndarray
) -> tuple[MlpGrads, np.ndarray]:
    """Reverse-mode gradients for every layer plus the gradient w.r.t. the input.

    upstream_grad is dLoss/dOutput for the forward() call that produced cache.
    """
    g = np.asarray(upstream_grad, dtype=float)
    if g.shape != cache.pre[-1].shape:
        raise DataError(
            f"upstream grad shape {g.shape} does not match output "
            f"shape {cache.pre[-1].shape}"
        )
    n_layers = len(params.weights)
    d_weights: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    d_biases: list[np.ndarray] = [None] * n_layers   # type: ignore[list-item]
    for l in range(n_layers - 1, -1, -1):
        if l < n_layers - 1:
            g = g * (cache.pre[l] > 0)  # ReLU gate on hidden layers
        d_weights[l] = cache.inputs[l].T @ g
        d_biases[l] = g.sum(axis=0)
        g = g @ params.weights[l].T
    return MlpGrads(d_weights, d_biases), g


@dataclass
class AdamState:
    """Moment estimates and hyperparameters; moments mirror the parameter list."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    first_moment: list[np.ndarray] = field(default_factory=list)
    second_moment: list[np.ndarray] = field(default_factory=list)


def adam_init(param_arrays: Sequence[np.ndarray], lr: float = 1e-3,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    return AdamState(
        lr=lr, beta1=beta1, beta2=beta2, eps=eps, step_count=0,
        first_moment=[np.zeros_like(p) for p in param_arrays],
        second_moment=[np.zeros_like(p) for p in param_arrays],
    )


def adam_step(
    param_arrays: Sequence[np.ndarray],
    grad_arrays: Sequence[np.ndarray],
    state: AdamState,
) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam update; returns new parameters and state.

    Inputs are not mutated. Raises NumericError on non-finite gradients or
    if the update produces non-finite parameters.
    """
    if len(param_arrays) != len(grad_arrays):
        raise ConfigError("parameter and gradient lists differ in length")
    for g in grad_arrays:
        if not np.all(np.isfinite(g)):
            raise NumericError("non-finite gradient passed to adam_step")
    t = state.step_count + 1
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(param_arrays, grad_arrays, state.first_moment,
                          state.second_moment):
        if p.shape != g.shape:
            raise ConfigError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m = state.beta1 * m + (1 - state.beta1) * g
        v = state.beta2 * v + (1 - state.beta2) * g * g
        m_hat = m / (1 - state.beta1 ** t)
        v_hat = v / (1 - state.beta2 ** t)
        p = p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        if not np.all(np.isfinite(p)):
            raise NumericError("non-finite parameter after Adam update")
        new_params.append(p)
        new_m.append(m)
        new_v.append(v)
    new_state = AdamState(
        lr=state.lr, beta1=state.beta1, beta2=state.beta2, eps=state.eps,
        step_count=t, first_moment=new_m, second_moment=new_v,
    )
    return new_params, new_state


def finite_difference_grads(
    loss_fn: Callable[[], float],
    param_arrays: Sequence[np.ndarray],
    h: float = 1e-5,
) -> list[np.ndarray]:
    """Central finite differences of loss_fn over arrays it reads in place."""
    grads = []
    for p in param_arrays:
        g = np.zeros_like(p)
        flat_p, flat_g = p.ravel(), g.ravel()
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + h
            up = loss_fn()
            flat_p[i] = orig - h
            down = loss_fn()
            flat_p[i] = orig
            flat_g[i] = (up - down) / (2.0 * h)
        grads.append(g)
    return grads


def max_relative_error(
    analytic: Sequence[np.ndarray], numeric: Sequence[np.ndarray]
) -> float:
    """max |a - n| / max(|a| + |n|, 1e-6) over all gradient entries."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.abs(a) + np.abs(n), 1e-6)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


@dataclass
class EncoderModel:
    """Trained encoder f plus the optional projection stack g used during training.

    Anomaly scoring always consumes f's output (the embedding); the
    projection stack only shapes the training loss.
    """

    spec: MlpSpec
    encoder: MlpParams
    projection: MlpParams | None = None
    loss_variant: str = "simclr"

    @property
    def use_projection_head(self) -> bool:
        return self.projection is not None


def init_encoder_model(spec: MlpSpec, seed: int, loss_variant: str = "simclr") -> EncoderModel:
    rng = np.random.default_rng(seed)
    encoder = init_params(spec.layer_dims, rng)
    projection = init_params(spec.projection_dims, rng) if spec.projection_dims else None
    return EncoderModel(spec=spec, encoder=encoder, projection=projection,
                        loss_variant=loss_variant)


def embed(model: EncoderModel, batch: np.ndarray) -> np.ndarray:
    """Map a batch through the encoder only; (N, embedding_dim) output."""
    out, _ = forward(model.encoder, batch)
    return out


def save_model(model: EncoderModel, path: str | Path) -> None:
    obj = {
        "format_version": MODEL_FORMAT_VERSION,
        "spec": {
            "layer_dims": list(model.spec.layer_dims),
            "projection_dims": (
                list(model.spec.projection_dims) if model.spec.projection_dims else None
            ),
        },
        "weights": [w.tolist() for w in model.encoder.weights],
        "biases": [b.tolist() for b in model.encoder.biases],
        "use_projection_head": model.use_projection_head,
        "projection": (
            {
                "weights": [w.tolist() for w in model.projection.weights],
                "biases": [b.tolist() for b in model.projection.biases],
            }
            if model.projection is not None
            else None
        ),
        "loss_variant": model.loss_variant,
    }
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> EncoderModel:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such model file: {path}")
    obj = json.loads(path.read_text(encoding="utf-8"))
    if obj.get("format_version") != MODEL_FORMAT_VERSION:
        raise DataError(
            f"{path}: unsupported model format_version {obj.get('format_version')!r}"
        )
    spec = MlpSpec(
        layer_dims=tuple(obj["spec"]["layer_dims"]),
        projection_dims=(
            tuple(obj["spec"]["projection_dims"])
            if obj["spec"]["projection_dims"]
            else None
        ),
    )
    encoder = MlpParams(
        [np.asarray(w, dtype=float) for w in obj["weights"]],
        [np.asarray(b, dtype=float) for b in obj["biases"]],
    )
    projection = None
    if obj.get("use_projection_head") and obj.get("projection"):
        projection = MlpParams(
            [np.asarray(w, dtype=float) for w in obj["projection"]["weights"]],
            [np.asarray(b, dtype=float) for b in obj["projection"]["biases"]],
        )
    return EncoderModel(
        spec=spec, encoder=encoder, projection=projection,
        loss_variant=obj.get("loss_variant", "simclr"),
    )
