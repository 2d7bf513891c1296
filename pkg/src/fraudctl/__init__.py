"""Unsupervised transaction fraud detection via contrastive representations.

The pipeline standardizes tabular transaction features, trains a small
encoder with a cosine-similarity contrastive loss over two augmented views
of each sample, and scores anomalies by each sample's mean similarity to a
reference set. Classical baselines (K-means, Isolation Forest, Autoencoder)
and a full metric suite ship alongside for comparison, all driven by a
deterministic, seed-derived CLI.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, FraudctlError, NumericError

__all__ = [
    "ConfigError",
    "DataError",
    "FraudctlError",
    "NumericError",
    "__version__",
]
