"""Stochastic view construction for contrastive training.

Each mini-batch yields two independently perturbed copies (views) of itself;
row i of both views comes from the same source row, forming the positive
pair. Three perturbations are applied in a fixed order: additive Gaussian
noise, multiplicative scale jitter on designated amount-like features, and
random feature masking to zero. Inputs are assumed standardized, so the
noise scale is unit-free and masking to zero equals masking to the mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError


@dataclass(frozen=True)
class AugmentConfig:
    """Knobs for the three view perturbations.

    noise_std: std of additive Gaussian noise, in standardized units.
    scale_jitter: half-width s of the multiplicative range [1-s, 1+s]
        applied entrywise to the amount_features columns.
    mask_prob: per-entry probability of zeroing a feature.
    amount_features: column indices eligible for scale jitter.
    seed: default RNG seed when make_views is not given one.
    """

    noise_std: float = 0.3
    scale_jitter: float = 0.2
    mask_prob: float = 0.1
    amount_features: tuple[int, ...] = ()
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "amount_features", tuple(self.amount_features))

    def validate(self) -> None:
        if self.noise_std < 0:
            raise ConfigError(f"noise_std must be >= 0, got {self.noise_std}")
        if not 0 <= self.scale_jitter < 1:
            raise ConfigError(f"scale_jitter must be in [0, 1), got {self.scale_jitter}")
        if not 0 <= self.mask_prob < 1:
            raise ConfigError(f"mask_prob must be in [0, 1), got {self.mask_prob}")
        if any(i < 0 for i in self.amount_features):
            raise ConfigError("amount_features indices must be >= 0")
        if not (self.noise_active or self.jitter_active or self.mask_active):
            raise ConfigError(
                "degenerate augmentation: noise, jitter, and masking are all "
                "disabled, so the two views would be identical"
            )

    @property
    def noise_active(self) -> bool:
        return self.noise_std > 0

    @property
    def jitter_active(self) -> bool:
        return self.scale_jitter > 0 and len(self.amount_features) > 0

    @property
    def mask_active(self) -> bool:
        return self.mask_prob > 0


@dataclass(frozen=True)
class ViewPair:
    """Two equally shaped stochastic views of one batch, aligned row-for-row."""

    view_a: np.ndarray
    view_b: np.ndarray

    def __post_init__(self):
        if self.view_a.shape != self.view_b.shape:
            raise DataError(
                f"view shapes differ: {self.view_a.shape} vs {self.view_b.shape}"
            )


def make_views(
    batch: np.ndarray,
    cfg: AugmentConfig,
    seed: int | np.random.SeedSequence | None = None,
) -> ViewPair:
    """Produce two independent stochastic views of a batch.

    The two views draw from disjoint RNG substreams spawned from the seed
    (cfg.seed when none is given), so the call is bit-reproducible and the
    noise fields of the views are uncorrelated.
    """
    cfg.validate()
    batch = np.asarray(batch, dtype=float)
    if batch.ndim != 2 or batch.shape[0] == 0:
        raise DataError(f"batch must be a nonempty 2-D matrix, got shape {batch.shape}")
    if cfg.amount_features and max(cfg.amount_features) >= batch.shape[1]:
        raise ConfigError(
            f"amount_features index {max(cfg.amount_features)} out of range "
            f"for {batch.shape[1]} columns"
        )
    if seed is None:
        seed = cfg.seed
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    child_a, child_b = ss.spawn(2)
    view_a = _augment(batch, cfg, np.random.default_rng(child_a))
    view_b = _augment(batch, cfg, np.random.default_rng(child_b))
    return ViewPair(view_a=view_a, view_b=view_b)


def _augment(batch: np.ndarray, cfg: AugmentConfig, rng: np.random.Generator) -> np.ndarray:
    # Fixed order: noise, then scale jitter, then mask.
    x = batch.copy()
    if cfg.noise_active:
        x += rng.normal(0.0, cfg.noise_std, size=x.shape)
    if cfg.jitter_active:
        idx = list(cfg.amount_features)
        lo, hi = 1.0 - cfg.scale_jitter, 1.0 + cfg.scale_jitter
        x[:, idx] *= rng.uniform(lo, hi, size=(x.shape[0], len(idx)))
    if cfg.mask_active:
        x[rng.random(size=x.shape) < cfg.mask_prob] = 0.0
    return x


def augmentation_identity_check(batch: np.ndarray, cfg: AugmentConfig) -> bool:
    """True when a noise-only view with tiny noise_std stays pinned to the batch.

    With jitter and masking disabled and noise_std = eps, the deviation of a
    view from its source is Gaussian(0, eps); the check accepts deviations up
    to the 3 * eps * sqrt(2 * ln(N*D)) extreme-value envelope.
    """
    if cfg.jitter_active or cfg.mask_active:
        raise ConfigError("identity check requires jitter and masking disabled")
    cfg.validate()
    pair = make_views(batch, cfg)
    batch = np.asarray(batch, dtype=float)
    bound = 3.0 * cfg.noise_std * math.sqrt(2.0 * math.log(batch.size))
    return float(np.max(np.abs(pair.view_a - batch))) <= bound
