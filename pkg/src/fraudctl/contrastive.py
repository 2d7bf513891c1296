"""Cosine-similarity contrastive losses and the encoder training loop.

Two loss variants are available:

* "simclr": the standard normalized temperature-scaled cross entropy. Every
  one of the 2N views serves as an anchor whose positive is its counterpart
  view and whose negatives are the remaining 2N-2 views.
* "paper": a positive-pairs-only form in which the softmax denominator ranges
  over the batch's positive-pair similarities exp(sim(a_k, b_k)/tau) rather
  than over cross-sample pairs.

Both return analytic gradients with respect to both embedding matrices and
are finite-difference checked in the test suite.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .augment import AugmentConfig, make_views
from .errors import ConfigError, DataError, NumericError
from .nn import (
    EncoderModel,
    MlpGrads,
    MlpParams,
    MlpSpec,
    adam_init,
    adam_step,
    backward,
    forward,
    init_encoder_model,
)

LOSS_VARIANTS = ("simclr", "paper")


@dataclass(frozen=True)
class ContrastiveConfig:
    temperature: float = 0.3
    batch_size: int = 128
    epochs: int = 150
    loss_variant: str = "simclr"
    learning_rate: float = 3e-3
    seed: int = 0

    def validate(self) -> None:
        if self.temperature <= 0:
            raise ConfigError(f"temperature must be > 0, got {self.temperature}")
        if self.batch_size < 2:
            raise ConfigError(
                f"batch_size must be >= 2 (need at least one negative), "
                f"got {self.batch_size}"
            )
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.loss_variant not in LOSS_VARIANTS:
            raise ConfigError(
                f"unknown loss_variant {self.loss_variant!r}; "
                f"valid: {', '.join(LOSS_VARIANTS)}"
            )
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")


@dataclass
class TrainLog:
    """Per-epoch loss and wall-clock seconds; one entry per completed epoch."""

    losses: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)

    @property
    def final_loss(self) -> float | None:
        return self.losses[-1] if self.losses else None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("epoch,loss,seconds\n")
            for e, (loss, sec) in enumerate(zip(self.losses, self.seconds)):
                fh.write(f"{e},{loss!r},{sec!r}\n")


def cosine_sim(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise DataError(f"vector shapes differ: {u.shape} vs {v.shape}")
    if np.all(u == 0.0) or np.all(v == 0.0):
        raise NumericError("undefined cosine similarity: zero-norm vector")
    # Pre-scaling by the largest component keeps the squared norms away from
    # under/overflow without changing the angle.
    un = u / np.abs(u).max()
    vn = v / np.abs(v).max()
    denom = np.sqrt(float(un @ un) * float(vn @ vn))
    return float(np.clip(un @ vn / denom, -1.0, 1.0))


def _normalize_rows(H: np.ndarray, name: str) -> tuple[np.ndarray, np.ndarray]:
    H = np.asarray(H, dtype=float)
    if H.ndim != 2:
        raise DataError(f"{name} must be 2-D, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise NumericError(f"{name} contains non-finite entries")
    norms = np.linalg.norm(H, axis=1)
    if np.any(norms == 0.0):
        row = int(np.argmax(norms == 0.0))
        raise NumericError(f"zero-norm embedding row {row} in {name}")
    return H / norms[:, None], norms


def _through_normalization(
    H_hat: np.ndarray, norms: np.ndarray, grad_hat: np.ndarray
) -> np.ndarray:
    # d/dh of f(h/|h|): remove the radial component, then divide by the norm.
    radial = np.sum(grad_hat * H_hat, axis=1, keepdims=True)
    return (grad_hat - radial * H_hat) / norms[:, None]


def _check_pair(h_a: np.ndarray, h_b: np.ndarray) -> None:
    if h_a.shape != h_b.shape:
        raise DataError(f"embedding shapes differ: {h_a.shape} vs {h_b.shape}")
    if h_a.shape[0] < 2:
        raise DataError(f"need at least 2 rows, got {h_a.shape[0]}")


def loss_paper(
    h_a: np.ndarray, h_b: np.ndarray, temperature: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Positive-pairs-only contrastive loss, averaged over the batch.

    For s_i = cos(a_i, b_i) / tau, the per-sample loss is
    -log(exp(s_i) / sum_k exp(s_k)); the denominator runs over the batch's
    positive-pair similarities only.
    """
    if temperature <= 0:
        raise ConfigError(f"temperature must be > 0, got {temperature}")
    A_hat, a_norms = _normalize_rows(np.asarray(h_a, float), "h_a")
    B_hat, b_norms = _normalize_rows(np.asarray(h_b, float), "h_b")
    _check_pair(A_hat, B_hat)
    n = A_hat.shape[0]

    cos = np.clip(np.sum(A_hat * B_hat, axis=1), -1.0, 1.0)
    s = cos / temperature
    m = s.max()
    lse = m + np.log(np.sum(np.exp(s - m)))
    loss = float(lse - s.mean())

    p = np.exp(s - lse)  # softmax over positive-pair similarities
    d_cos = (p - 1.0 / n) / temperature
    grad_a = _through_normalization(A_hat, a_norms, d_cos[:, None] * B_hat)
    grad_b = _through_normalization(B_hat, b_norms, d_cos[:, None] * A_hat)
    return loss, grad_a, grad_b


def loss_simclr(
    h_a: np.ndarray, h_b: np.ndarray, temperature: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Normalized temperature-scaled cross entropy over 2N anchors.

    Each view is an anchor; its positive is the paired view of the same
    sample and its negatives are the other 2N-2 views. The loss is the mean
    of -log softmax(similarities / tau) over all anchors.
    """
    if temperature <= 0:
        raise ConfigError(f"temperature must be > 0, got {temperature}")
    h_a = np.asarray(h_a, float)
    h_b = np.asarray(h_b, float)
    _check_pair(h_a, h_b)
    n = h_a.shape[0]
    m = 2 * n

    Z = np.vstack([h_a, h_b])
    Z_hat, norms = _normalize_rows(Z, "embeddings")
    S = np.clip(Z_hat @ Z_hat.T, -1.0, 1.0)
    pos = np.concatenate([np.arange(n, m), np.arange(0, n)])

    logits = S / temperature
    np.fill_diagonal(logits, -np.inf)  # anchors never compare to themselves
    row_max = logits.max(axis=1, keepdims=True)
    lse = row_max[:, 0] + np.log(np.sum(np.exp(logits - row_max), axis=1))
    loss = float(np.mean(lse - logits[np.arange(m), pos]))

    P = np.exp(logits - lse[:, None])  # rowwise softmax, zero on the diagonal
    G = P.copy()
    G[np.arange(m), pos] -= 1.0
    G /= m * temperature
    grad_hat = (G + G.T) @ Z_hat
    grad = _through_normalization(Z_hat, norms, grad_hat)
    return loss, grad[:n], grad[n:]


_LOSS_FNS = {"simclr": loss_simclr, "paper": loss_paper}


def _add_grads(a: MlpGrads, b: MlpGrads) -> MlpGrads:
    return MlpGrads(
        [ga + gb for ga, gb in zip(a.weights, b.weights)],
        [ga + gb for ga, gb in zip(a.biases, b.biases)],
    )


def batch_gradients(
    model: EncoderModel,
    view_a: np.ndarray,
    view_b: np.ndarray,
    temperature: float,
    loss_variant: str,
) -> tuple[float, list[np.ndarray]]:
    """Loss and flat parameter gradients for one batch of paired views.

    The gradient list matches model.encoder.arrays() followed by
    model.projection.arrays() when a projection stack is present.
    """
    loss_fn = _LOSS_FNS[loss_variant]
    emb_a, cache_a = forward(model.encoder, view_a)
    emb_b, cache_b = forward(model.encoder, view_b)
    if model.projection is not None:
        z_a, pc_a = forward(model.projection, emb_a)
        z_b, pc_b = forward(model.projection, emb_b)
        loss, gz_a, gz_b = loss_fn(z_a, z_b, temperature)
        pg_a, d_emb_a = backward(model.projection, pc_a, gz_a)
        pg_b, d_emb_b = backward(model.projection, pc_b, gz_b)
        proj_grads = _add_grads(pg_a, pg_b)
    else:
        loss, d_emb_a, d_emb_b = loss_fn(emb_a, emb_b, temperature)
        proj_grads = None
    eg_a, _ = backward(model.encoder, cache_a, d_emb_a)
    eg_b, _ = backward(model.encoder, cache_b, d_emb_b)
    enc_grads = _add_grads(eg_a, eg_b)
    grads = enc_grads.arrays()
    if proj_grads is not None:
        grads += proj_grads.arrays()
    return loss, grads


def _model_arrays(model: EncoderModel) -> list[np.ndarray]:
    arrays = model.encoder.arrays()
    if model.projection is not None:
        arrays += model.projection.arrays()
    return arrays


def _rebuild_model(model: EncoderModel, arrays: list[np.ndarray]) -> EncoderModel:
    n_enc = len(model.encoder.weights)
    encoder = MlpParams.from_arrays(arrays[: 2 * n_enc], n_enc)
    projection = None
    if model.projection is not None:
        n_proj = len(model.projection.weights)
        projection = MlpParams.from_arrays(arrays[2 * n_enc :], n_proj)
    return EncoderModel(
        spec=model.spec, encoder=encoder, projection=projection,
        loss_variant=model.loss_variant,
    )


def train(
    data: np.ndarray,
    spec: MlpSpec,
    aug: AugmentConfig,
    cfg: ContrastiveConfig,
) -> tuple[EncoderModel, TrainLog]:
    """Train the encoder on standardized, unlabeled data.

    Per epoch: shuffle rows, cut mini-batches (a trailing batch smaller than
    2 rows is dropped), build two augmented views per batch, and take one
    Adam step on the selected contrastive loss. Fully deterministic for a
    fixed (cfg.seed, aug.seed) pair.
    """
    cfg.validate()
    aug.validate()
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise DataError(f"training data must be 2-D with >= 2 rows, got {data.shape}")
    if data.shape[1] != spec.input_dim:
        raise DataError(
            f"data has {data.shape[1]} columns, encoder expects {spec.input_dim}"
        )
    if not np.all(np.isfinite(data)):
        raise DataError("training data contains non-finite entries")

    model = init_encoder_model(spec, cfg.seed, loss_variant=cfg.loss_variant)
    log = TrainLog()
    if cfg.epochs == 0:
        return model, log

    arrays = _model_arrays(model)
    state = adam_init(arrays, lr=cfg.learning_rate)
    n = data.shape[0]
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        shuffle_rng = np.random.default_rng(
            np.random.SeedSequence(cfg.seed, spawn_key=(1, epoch))
        )
        order = shuffle_rng.permutation(n)
        loss_sum = 0.0
        row_count = 0
        for b_idx, start in enumerate(range(0, n, cfg.batch_size)):
            rows = order[start : start + cfg.batch_size]
            if len(rows) < 2:
                continue  # a single row has no in-batch negative
            views = make_views(
                data[rows], aug, np.random.SeedSequence(aug.seed, spawn_key=(epoch, b_idx))
            )
            working = _rebuild_model(model, arrays)
            loss, grads = batch_gradients(
                working, views.view_a, views.view_b, cfg.temperature, cfg.loss_variant
            )
            if not np.isfinite(loss):
                raise NumericError(
                    f"non-finite loss at epoch {epoch}, batch {b_idx}: {loss}"
                )
            arrays, state = adam_step(arrays, grads, state)
            loss_sum += loss * len(rows)
            row_count += len(rows)
        log.losses.append(loss_sum / row_count)
        log.seconds.append(time.perf_counter() - t0)
    return _rebuild_model(model, arrays), log
