"""Similarity-statistics anomaly scoring over embeddings.

Each query embedding is compared against a reference embedding set by cosine
similarity. The mean similarity mu and its spread sigma summarize how much
the query looks like the bulk; the anomaly score is -mu, so higher means
more anomalous, the convention shared by every scorer in this package.

Two decision rules are provided: "low_mean" flags samples whose mean
similarity falls below the threshold, and "paper_literal" flags samples with
mu - sigma above the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, NumericError

RULES = ("low_mean", "paper_literal")


@dataclass(frozen=True)
class ScoreStats:
    """Similarity statistics of one query row against the reference set."""

    mean_sim: float
    std_sim: float

    @property
    def score(self) -> float:
        return -self.mean_sim


@dataclass(frozen=True)
class Decision:
    is_fraud: bool
    score: float
    threshold_used: float
    rule: str


def _normalize(H: np.ndarray, name: str) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    if H.ndim != 2:
        raise DataError(f"{name} must be 2-D, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise NumericError(f"{name} contains non-finite entries")
    norms = np.linalg.norm(H, axis=1)
    if np.any(norms == 0.0):
        row = int(np.argmax(norms == 0.0))
        raise NumericError(f"zero-norm embedding row {row} in {name}")
    return H / norms[:, None]


def score_all(
    query: np.ndarray,
    reference: np.ndarray,
    query_is_reference: bool = False,
) -> list[ScoreStats]:
    """Mean and spread of cosine similarities from each query row to the reference.

    When the query rows are the reference rows (same set, same order), pass
    query_is_reference=True so each row's similarity to itself is excluded.
    Both statistics divide by the number of similarities summed, which for a
    self-excluded reference of size N is N - 1.
    """
    Q = _normalize(query, "query")
    R = _normalize(reference, "reference")
    if Q.shape[1] != R.shape[1]:
        raise DataError(
            f"embedding dims differ: query {Q.shape[1]} vs reference {R.shape[1]}"
        )
    if R.shape[0] < 2:
        raise DataError(f"reference needs at least 2 rows, got {R.shape[0]}")
    if query_is_reference and Q.shape != R.shape:
        raise DataError(
            "query_is_reference requires identically shaped query and reference"
        )

    sims = np.clip(Q @ R.T, -1.0, 1.0)
    include = np.ones_like(sims, dtype=bool)
    if query_is_reference:
        np.fill_diagonal(include, False)
    counts = include.sum(axis=1)
    mu = np.where(include, sims, 0.0).sum(axis=1) / counts
    dev = np.where(include, sims - mu[:, None], 0.0)
    var = (dev * dev).sum(axis=1) / counts
    sigma = np.sqrt(var)
    return [ScoreStats(float(m), float(s)) for m, s in zip(mu, sigma)]


def decide(stats: ScoreStats, threshold: float, rule: str = "low_mean") -> Decision:
    """Apply a threshold rule to one sample's similarity statistics."""
    if rule == "low_mean":
        is_fraud = stats.mean_sim < threshold
    elif rule == "paper_literal":
        is_fraud = stats.mean_sim - stats.std_sim > threshold
    else:
        raise ConfigError(f"unknown rule {rule!r}; valid rules: {', '.join(RULES)}")
    return Decision(
        is_fraud=bool(is_fraud), score=stats.score, threshold_used=float(threshold),
        rule=rule,
    )


def choose_threshold(
    scores: list[ScoreStats], contamination: float, rule: str = "low_mean"
) -> float:
    """Threshold flagging ceil(contamination * N) samples under the given rule.

    Ties at the boundary are broken by flagging all tied samples, so the
    flagged count can exceed the target only through exact ties.
    """
    if not 0.0 < contamination < 1.0:
        raise ConfigError(f"contamination must be in (0, 1), got {contamination}")
    if not scores:
        raise DataError("cannot choose a threshold from an empty score list")
    if rule not in RULES:
        raise ConfigError(f"unknown rule {rule!r}; valid rules: {', '.join(RULES)}")
    n = len(scores)
    k = min(n, int(np.ceil(contamination * n)))

    if rule == "low_mean":
        values = np.sort([s.mean_sim for s in scores])  # flag the k smallest
        boundary = values[k - 1]
        above = values[values > boundary]
        return float((boundary + above[0]) / 2.0) if above.size else float(boundary + 1.0)
    # paper_literal: flag the k largest mu - sigma.
    values = np.sort([s.mean_sim - s.std_sim for s in scores])[::-1]
    boundary = values[k - 1]
    below = values[values < boundary]
    return float((boundary + below[0]) / 2.0) if below.size else float(boundary - 1.0)


def subsample_reference(
    reference: np.ndarray, max_size: int, seed: int
) -> np.ndarray:
    """Seed-deterministic subsample capping the reference set size."""
    reference = np.asarray(reference, dtype=float)
    if max_size < 2:
        raise ConfigError(f"max reference size must be >= 2, got {max_size}")
    if len(reference) <= max_size:
        return reference
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(reference), size=max_size, replace=False))
    return reference[idx]
