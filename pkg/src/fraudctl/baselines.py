"""Classical unsupervised anomaly scorers: K-means, Isolation Forest, Autoencoder.

All three emit scores under the shared convention (higher = more anomalous)
so the evaluation module can consume them interchangeably with the
contrastive detector's scores.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError, NumericError
from .nn import MlpParams, adam_init, adam_step, backward, forward, init_params

EULER_GAMMA = 0.5772156649015329


# ---------------------------------------------------------------------------
# K-means
# ---------------------------------------------------------------------------

@dataclass
class KMeansModel:
    k: int
    centroids: np.ndarray
    seed: int


def kmeans_fit(
    data: np.ndarray, k: int, seed: int, max_iter: int = 100
) -> KMeansModel:
    """Lloyd iterations from a k-means++ start; deterministic per seed.

    Stops when every centroid moves less than 1e-6 or after max_iter rounds.
    A cluster that loses all its points is reseeded to the point farthest
    from its assigned centroid.
    """
    X = np.asarray(data, dtype=float)
    if X.ndim != 2:
        raise DataError(f"expected 2-D data, got shape {X.shape}")
    n = X.shape[0]
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if n < k:
        raise DataError(f"need at least k={k} rows, got {n}")
    rng = np.random.default_rng(seed)

    centroids = _kmeans_pp_init(X, k, rng)
    for _ in range(max_iter):
        d2 = _sq_distances(X, centroids)
        assign = np.argmin(d2, axis=1)
        new_centroids = centroids.copy()
        # Dead clusters are reseeded to successive worst-fit points.
        farthest_order = iter(np.argsort(-d2[np.arange(n), assign]))
        for c in range(k):
            members = assign == c
            if members.any():
                new_centroids[c] = X[members].mean(axis=0)
            else:
                new_centroids[c] = X[int(next(farthest_order))]
        movement = np.linalg.norm(new_centroids - centroids, axis=1).max()
        centroids = new_centroids
        if movement < 1e-6:
            break
    return KMeansModel(k=k, centroids=centroids, seed=seed)


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[rng.integers(n)]
    closest = np.sum((X - centroids[0]) ** 2, axis=1)
    for c in range(1, k):
        total = closest.sum()
        if total == 0.0:
            centroids[c] = X[rng.integers(n)]  # all points already covered
            continue
        probs = closest / total
        centroids[c] = X[rng.choice(n, p=probs)]
        closest = np.minimum(closest, np.sum((X - centroids[c]) ** 2, axis=1))
    return centroids


def _sq_distances(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - centroids[None, :, :]
    return np.sum(diff * diff, axis=2)


def kmeans_score(model: KMeansModel, query: np.ndarray) -> np.ndarray:
    """Euclidean distance to the nearest centroid; higher = more anomalous."""
    Q = np.asarray(query, dtype=float)
    if Q.ndim != 2 or Q.shape[1] != model.centroids.shape[1]:
        raise DataError(
            f"query shape {Q.shape} does not match centroid dim "
            f"{model.centroids.shape[1]}"
        )
    return np.sqrt(np.min(_sq_distances(Q, model.centroids), axis=1))


def kmeans_objective(model: KMeansModel, data: np.ndarray) -> float:
    """Within-cluster sum of squared distances for the given assignment."""
    return float(np.min(_sq_distances(np.asarray(data, float), model.centroids), axis=1).sum())


# ---------------------------------------------------------------------------
# Isolation forest
# ---------------------------------------------------------------------------

@dataclass
class IsolationForestModel:
    n_trees: int
    subsample_size: int
    trees: list[dict]
    seed: int


def average_path_length(n: int) -> float:
    """Expected unsuccessful-search path length in a BST of n points."""
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    return 2.0 * (math.log(n - 1) + EULER_GAMMA) - 2.0 * (n - 1) / n


def iforest_fit(
    data: np.ndarray, n_trees: int = 100, subsample_size: int = 256, seed: int = 0
) -> IsolationForestModel:
    """Grow an ensemble of random isolation trees on subsamples of the data.

    Each tree draws subsample_size rows without replacement and splits on a
    uniformly chosen non-constant feature at a uniform value inside the
    node's range, until single points or the height limit ceil(log2(psi)).
    """
    X = np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError(f"need a 2-D matrix with >= 2 rows, got shape {X.shape}")
    if n_trees < 1:
        raise ConfigError(f"n_trees must be >= 1, got {n_trees}")
    if subsample_size < 2:
        raise ConfigError(f"subsample_size must be >= 2, got {subsample_size}")
    n = X.shape[0]
    psi = subsample_size
    if psi > n:
        warnings.warn(
            f"subsample_size {psi} exceeds data size {n}; clamping to {n}",
            stacklevel=2,
        )
        psi = n
    height_limit = math.ceil(math.log2(psi))
    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(n_trees):
        rows = rng.choice(n, size=psi, replace=False)
        trees.append(_grow_tree(X[rows], 0, height_limit, rng))
    return IsolationForestModel(
        n_trees=n_trees, subsample_size=psi, trees=trees, seed=seed
    )


def _grow_tree(
    X: np.ndarray, depth: int, limit: int, rng: np.random.Generator
) -> dict:
    n = X.shape[0]
    if n <= 1 or depth >= limit:
        return {"size": int(n)}
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    usable = np.flatnonzero(hi > lo)
    if usable.size == 0:
        return {"size": int(n)}  # all remaining rows identical
    feature = int(rng.choice(usable))
    value = float(rng.uniform(lo[feature], hi[feature]))
    mask = X[:, feature] < value
    if not mask.any() or mask.all():
        return {"size": int(n)}  # degenerate draw at the range edge
    return {
        "feature": feature,
        "value": value,
        "left": _grow_tree(X[mask], depth + 1, limit, rng),
        "right": _grow_tree(X[~mask], depth + 1, limit, rng),
    }


def _path_length(tree: dict, x: np.ndarray) -> float:
    depth = 0
    node = tree
    while "feature" in node:
        node = node["left"] if x[node["feature"]] < node["value"] else node["right"]
        depth += 1
    # Height-limited leaves get credit for the subtree they would have grown.
    return depth + average_path_length(node["size"])


def iforest_score(model: IsolationForestModel, query: np.ndarray) -> np.ndarray:
    """Anomaly score 2^(-E[h(x)] / c(psi)) in (0, 1); higher = more anomalous."""
    Q = np.asarray(query, dtype=float)
    if Q.ndim != 2:
        raise DataError(f"expected 2-D query, got shape {Q.shape}")
    norm = average_path_length(model.subsample_size)
    scores = np.empty(Q.shape[0])
    for i, x in enumerate(Q):
        mean_path = np.mean([_path_length(t, x) for t in model.trees])
        scores[i] = 2.0 ** (-mean_path / norm)
    return scores


# ---------------------------------------------------------------------------
# Autoencoder
# ---------------------------------------------------------------------------

@dataclass
class AutoencoderModel:
    """Mirrored encoder/decoder pair trained on reconstruction error."""

    encoder: MlpParams
    decoder: MlpParams

    @property
    def input_dim(self) -> int:
        return self.encoder.dims[0]


def reconstruct(model: AutoencoderModel, batch: np.ndarray) -> np.ndarray:
    code, _ = forward(model.encoder, batch)
    out, _ = forward(model.decoder, code)
    return out


def autoencoder_fit(
    data: np.ndarray,
    layer_dims: Sequence[int],
    epochs: int = 40,
    seed: int = 0,
    batch_size: int = 128,
    learning_rate: float = 1e-3,
) -> AutoencoderModel:
    """Train a mirrored autoencoder on mean squared reconstruction error.

    layer_dims describes the encoder (input width through bottleneck); the
    decoder reverses it. The bottleneck must be narrower than the input so
    the model cannot learn the identity map.
    """
    X = np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError(f"need a 2-D matrix with >= 2 rows, got shape {X.shape}")
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) < 2:
        raise ConfigError("autoencoder layer_dims needs at least input and bottleneck")
    if dims[0] != X.shape[1]:
        raise DataError(f"layer_dims[0]={dims[0]} != data width {X.shape[1]}")
    if dims[-1] >= dims[0]:
        raise ConfigError(
            f"bottleneck {dims[-1]} must be narrower than the input {dims[0]}"
        )
    if epochs < 0:
        raise ConfigError(f"epochs must be >= 0, got {epochs}")

    rng = np.random.default_rng(seed)
    encoder = init_params(dims, rng)
    decoder = init_params(dims[::-1], rng)
    if epochs == 0:
        return AutoencoderModel(encoder=encoder, decoder=decoder)

    arrays = [*encoder.arrays(), *decoder.arrays()]
    n_enc = len(encoder.weights)
    n_dec = len(decoder.weights)
    state = adam_init(arrays, lr=learning_rate)
    n = X.shape[0]
    for epoch in range(epochs):
        order = np.random.default_rng(
            np.random.SeedSequence(seed, spawn_key=(1, epoch))
        ).permutation(n)
        for b_idx, start in enumerate(range(0, n, batch_size)):
            rows = order[start : start + batch_size]
            batch = X[rows]
            enc = MlpParams.from_arrays(arrays[: 2 * n_enc], n_enc)
            dec = MlpParams.from_arrays(arrays[2 * n_enc :], n_dec)
            code, enc_cache = forward(enc, batch)
            recon, dec_cache = forward(dec, code)
            resid = recon - batch
            loss = float(np.mean(resid * resid))
            if not np.isfinite(loss):
                raise NumericError(
                    f"non-finite reconstruction loss at epoch {epoch}, batch {b_idx}"
                )
            upstream = 2.0 * resid / resid.size
            dec_grads, d_code = backward(dec, dec_cache, upstream)
            enc_grads, _ = backward(enc, enc_cache, d_code)
            arrays, state = adam_step(
                arrays, [*enc_grads.arrays(), *dec_grads.arrays()], state
            )
    return AutoencoderModel(
        encoder=MlpParams.from_arrays(arrays[: 2 * n_enc], n_enc),
        decoder=MlpParams.from_arrays(arrays[2 * n_enc :], n_dec),
    )


def autoencoder_score(model: AutoencoderModel, query: np.ndarray) -> np.ndarray:
    """Per-row mean squared reconstruction error; higher = more anomalous."""
    Q = np.asarray(query, dtype=float)
    if Q.ndim != 2 or Q.shape[1] != model.input_dim:
        raise DataError(
            f"query shape {Q.shape} does not match autoencoder input "
            f"{model.input_dim}"
        )
    resid = reconstruct(model, Q) - Q
    return np.mean(resid * resid, axis=1)


# ---------------------------------------------------------------------------
# Persistence: one JSON schema per model, discriminated by "model_type"
# ---------------------------------------------------------------------------

def save_baseline(model, path: str | Path) -> None:
    if isinstance(model, KMeansModel):
        obj = {
            "model_type": "kmeans",
            "format_version": 1,
            "k": model.k,
            "seed": model.seed,
            "centroids": model.centroids.tolist(),
        }
    elif isinstance(model, IsolationForestModel):
        obj = {
            "model_type": "iforest",
            "format_version": 1,
            "n_trees": model.n_trees,
            "subsample_size": model.subsample_size,
            "seed": model.seed,
            "trees": model.trees,
        }
    elif isinstance(model, AutoencoderModel):
        obj = {
            "model_type": "autoencoder",
            "format_version": 1,
            "encoder": {
                "weights": [w.tolist() for w in model.encoder.weights],
                "biases": [b.tolist() for b in model.encoder.biases],
            },
            "decoder": {
                "weights": [w.tolist() for w in model.decoder.weights],
                "biases": [b.tolist() for b in model.decoder.biases],
            },
        }
    else:
        raise ConfigError(f"unknown baseline model type {type(model).__name__}")
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def load_baseline(path: str | Path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such model file: {path}")
    obj = json.loads(path.read_text(encoding="utf-8"))
    kind = obj.get("model_type")
    if kind == "kmeans":
        return KMeansModel(
            k=int(obj["k"]), centroids=np.asarray(obj["centroids"], float),
            seed=int(obj["seed"]),
        )
    if kind == "iforest":
        return IsolationForestModel(
            n_trees=int(obj["n_trees"]), subsample_size=int(obj["subsample_size"]),
            trees=obj["trees"], seed=int(obj["seed"]),
        )
    if kind == "autoencoder":
        def params(part):
            return MlpParams(
                [np.asarray(w, float) for w in part["weights"]],
                [np.asarray(b, float) for b in part["biases"]],
            )

        return AutoencoderModel(
            encoder=params(obj["encoder"]), decoder=params(obj["decoder"])
        )
    raise DataError(f"{path}: unknown model_type {kind!r}")
